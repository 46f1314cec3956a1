//! Built-in example games addressable by name from game files and the CLI.
//!
//! Each preset is a small quadratic game with a fixed point at the origin:
//!
//! - `example1(b)` — a 2x2-action zero-sum game whose origin is a stable
//!   non-Nash attractor once the coupling `b` is strong enough (|b| > sqrt 2);
//! - `example2(p)` — a 2x2-action potential game whose origin is a Nash
//!   equilibrium that destabilizes for strong coupling (|p| > 2 sqrt 3);
//! - `example4()` — a general-sum game whose origin is certified unstable by
//!   the rotated block-form test;
//! - `example5(eps)` — a zero-sum game interpolating between a purely
//!   potential field (eps = 0) and a purely rotational one (eps = 1), used
//!   for the timescale-separation experiments.

use nalgebra::{dmatrix, DVector};

use crate::error::{Error, Result};

use super::QuadraticGame;

/// Identifier for a built-in game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetId {
    Example1,
    Example2,
    Example4,
    Example5,
}

impl PresetId {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(PresetId::Example1),
            "example2" => Ok(PresetId::Example2),
            "example4" => Ok(PresetId::Example4),
            "example5" => Ok(PresetId::Example5),
            other => Err(Error::InvalidInput(format!(
                "unknown preset '{other}' (expected example1, example2, example4 or example5)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::Example1 => "example1",
            PresetId::Example2 => "example2",
            PresetId::Example4 => "example4",
            PresetId::Example5 => "example5",
        }
    }
}

/// Named parameters accepted by the presets; unused ones are ignored by
/// presets that do not take them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetParams {
    pub b: f64,
    pub p: f64,
    pub eps: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self { b: 2.0, p: 1.0, eps: 0.9 }
    }
}

/// Instantiate a preset game.
pub fn build_preset(id: PresetId, params: &PresetParams) -> Result<QuadraticGame> {
    match id {
        PresetId::Example1 => example1(params.b),
        PresetId::Example2 => example2(params.p),
        PresetId::Example4 => example4(),
        PresetId::Example5 => example5(params.eps),
    }
}

/// Zero-sum game `(f, -f)` with
/// `f(x, y) = -x1^2 + 3 x2^2 - (2 y1^2 + 6 y2^2) + b (2 y1 x1 + y2 x2)`.
pub fn example1(b: f64) -> Result<QuadraticGame> {
    if !b.is_finite() {
        return Err(Error::NonFinite("preset parameter b"));
    }
    let q = dmatrix![
        -2.0,     0.0, 2.0 * b,   0.0;
         0.0,     6.0,     0.0,     b;
         2.0 * b, 0.0,    -4.0,   0.0;
         0.0,       b,     0.0, -12.0;
    ];
    QuadraticGame::zero_sum(2, 2, q, DVector::zeros(4))
}

/// Potential game with
/// `f1(x, y) = x1^2 + 2 x2^2 + p (x1 y1 + x2 y2)` and
/// `f2(x, y) = 3 y1^2 + 4 y2^2 + p (x1 y1 + x2 y2)`.
pub fn example2(p: f64) -> Result<QuadraticGame> {
    if !p.is_finite() {
        return Err(Error::NonFinite("preset parameter p"));
    }
    let q1 = dmatrix![
        2.0, 0.0,   p, 0.0;
        0.0, 4.0, 0.0,   p;
          p, 0.0, 0.0, 0.0;
        0.0,   p, 0.0, 0.0;
    ];
    let q2 = dmatrix![
        0.0, 0.0,   p, 0.0;
        0.0, 0.0, 0.0,   p;
          p, 0.0, 6.0, 0.0;
        0.0,   p, 0.0, 8.0;
    ];
    QuadraticGame::new(2, 2, q1, q2, DVector::zeros(4), DVector::zeros(4))
}

/// General-sum game with
/// `f1(x, y) = -x1^2 + 3 x2^2 - x1 x2 + 8 x1 y1 - 2 x2 y2` and
/// `f2(x, y) = y1^2 + 4 y2^2 - y1 y2 + 2 x1 y2 + 2 x2 y1`.
pub fn example4() -> Result<QuadraticGame> {
    let q1 = dmatrix![
        -2.0, -1.0, 8.0,  0.0;
        -1.0,  6.0, 0.0, -2.0;
         8.0,  0.0, 0.0,  0.0;
         0.0, -2.0, 0.0,  0.0;
    ];
    let q2 = dmatrix![
        0.0, 0.0, 0.0,  2.0;
        0.0, 0.0, 2.0,  0.0;
        0.0, 2.0, 2.0, -1.0;
        2.0, 0.0, -1.0, 8.0;
    ];
    QuadraticGame::new(2, 2, q1, q2, DVector::zeros(4), DVector::zeros(4))
}

/// Zero-sum game `(f, -f)` with
/// `f(x, y) = (1 - eps)(x1^2 + 3/2 x2^2 - 2 y1^2 - 5/2 y2^2) + eps x^T B y`
/// where `B = [[1, 1], [1, -1]]`. The game Jacobian splits as
/// `J = (1 - eps) S + eps A` with `S` symmetric and `A` skew-symmetric.
pub fn example5(eps: f64) -> Result<QuadraticGame> {
    if !eps.is_finite() {
        return Err(Error::NonFinite("preset parameter eps"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps must lie in [0, 1], got {eps}")));
    }
    let s = 1.0 - eps;
    let q = dmatrix![
        2.0 * s,     0.0,      eps,      eps;
        0.0,     3.0 * s,      eps,     -eps;
        eps,         eps, -4.0 * s,      0.0;
        eps,        -eps,      0.0, -5.0 * s;
    ];
    QuadraticGame::zero_sum(2, 2, q, DVector::zeros(4))
}
