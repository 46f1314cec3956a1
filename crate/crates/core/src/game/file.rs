//! JSON game-definition files.
//!
//! A file either names a preset (with optional parameters) or spells out a
//! quadratic game:
//!
//! ```json
//! { "preset": "example1", "b": 2.0 }
//! ```
//!
//! ```json
//! {
//!   "d1": 1, "d2": 1, "type": "quadratic",
//!   "Q1": [[2.0, 1.0], [1.0, 0.0]],
//!   "Q2": [[0.0, 1.0], [1.0, 2.0]],
//!   "b1": [0.0, 0.0], "b2": [0.0, 0.0]
//! }
//! ```
//!
//! `Q1`/`Q2` are row-major and must be symmetric `(d1+d2)`-square matrices;
//! `b1`/`b2` default to zero.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};

use super::presets::{build_preset, PresetId, PresetParams};
use super::{GradientField, QuadraticGame};

/// Deserialized game-definition file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    #[serde(rename = "type")]
    pub kind: Option<String>,
    #[serde(rename = "Q1")]
    pub q1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q2")]
    pub q2: Option<Vec<Vec<f64>>>,
    pub b1: Option<Vec<f64>>,
    pub b2: Option<Vec<f64>>,
    pub preset: Option<String>,
    pub b: Option<f64>,
    pub p: Option<f64>,
    pub eps: Option<f64>,
}

impl GameFile {
    /// Expand the file into a quadratic game, resolving presets.
    pub fn into_game(self) -> Result<QuadraticGame> {
        if let Some(name) = &self.preset {
            let id = PresetId::parse(name)?;
            let defaults = PresetParams::default();
            let params = PresetParams {
                b: self.b.unwrap_or(defaults.b),
                p: self.p.unwrap_or(defaults.p),
                eps: self.eps.unwrap_or(defaults.eps),
            };
            let game = build_preset(id, &params)?;
            if let Some(d1) = self.d1 {
                if d1 != game.d1() {
                    return Err(Error::InvalidInput(format!(
                        "preset {name} has d1 = {}, file says {d1}",
                        game.d1()
                    )));
                }
            }
            if let Some(d2) = self.d2 {
                if d2 != game.d2() {
                    return Err(Error::InvalidInput(format!(
                        "preset {name} has d2 = {}, file says {d2}",
                        game.d2()
                    )));
                }
            }
            return Ok(game);
        }

        if let Some(kind) = &self.kind {
            if kind != "quadratic" {
                return Err(Error::InvalidInput(format!(
                    "unsupported game type '{kind}' (only \"quadratic\" is recognized)"
                )));
            }
        }
        let d1 = self.d1.ok_or_else(|| Error::InvalidInput("missing field d1".into()))?;
        let d2 = self.d2.ok_or_else(|| Error::InvalidInput("missing field d2".into()))?;
        let n = d1 + d2;
        let q1 = matrix_from_rows(self.q1.ok_or_else(|| Error::InvalidInput("missing field Q1".into()))?, n, "Q1")?;
        let q2 = matrix_from_rows(self.q2.ok_or_else(|| Error::InvalidInput("missing field Q2".into()))?, n, "Q2")?;
        let b1 = vector_or_zeros(self.b1, n, "b1")?;
        let b2 = vector_or_zeros(self.b2, n, "b2")?;
        QuadraticGame::new(d1, d2, q1, q2, b1, b2)
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>, n: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("{name} must be a {n}x{n} nested array")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector_or_zeros(v: Option<Vec<f64>>, n: usize, name: &str) -> Result<DVector<f64>> {
    match v {
        None => Ok(DVector::zeros(n)),
        Some(vals) if vals.len() == n => Ok(DVector::from_vec(vals)),
        Some(vals) => Err(Error::InvalidInput(format!(
            "{name} must have length {n}, got {}",
            vals.len()
        ))),
    }
}

/// Parse a game definition from a JSON string.
pub fn parse_game_str(text: &str) -> Result<QuadraticGame> {
    let file: GameFile = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("malformed game file: {e}")))?;
    file.into_game()
}

/// Load a game definition from disk.
pub fn load_game(path: &Path) -> Result<QuadraticGame> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_game_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::presets;

    #[test]
    fn preset_roundtrip_with_params() {
        let game = parse_game_str(r#"{"preset": "example1", "b": 3.0}"#).unwrap();
        assert_eq!(game, presets::example1(3.0).unwrap());
        let game = parse_game_str(r#"{"preset": "example5", "eps": 0.25}"#).unwrap();
        assert_eq!(game, presets::example5(0.25).unwrap());
    }

    #[test]
    fn preset_defaults_apply() {
        let game = parse_game_str(r#"{"preset": "example2"}"#).unwrap();
        assert_eq!(game, presets::example2(1.0).unwrap());
    }

    #[test]
    fn explicit_quadratic_game_parses() {
        let text = r#"{
            "d1": 1, "d2": 1, "type": "quadratic",
            "Q1": [[2.0, 1.0], [1.0, 0.0]],
            "Q2": [[0.0, 1.0], [1.0, 2.0]],
            "b1": [0.5, 0.0]
        }"#;
        let game = parse_game_str(text).unwrap();
        assert_eq!(game.d1(), 1);
        assert_eq!(game.q1()[(0, 0)], 2.0);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(parse_game_str("not json").is_err());
        assert!(parse_game_str(r#"{"preset": "example9"}"#).is_err());
        assert!(parse_game_str(r#"{"d1": 1, "d2": 1, "type": "cubic", "Q1": [], "Q2": []}"#).is_err());
        assert!(parse_game_str(r#"{"d1": 1, "d2": 1, "Q1": [[1.0]], "Q2": [[1.0]]}"#).is_err());
        // unknown fields are typos, not extensions
        assert!(parse_game_str(r#"{"preset": "example1", "beta": 1.0}"#).is_err());
        // asymmetric Q
        assert!(parse_game_str(
            r#"{"d1": 1, "d2": 1, "Q1": [[1.0, 0.5], [0.0, 1.0]], "Q2": [[1.0, 0.0], [0.0, 1.0]]}"#
        )
        .is_err());
    }

    #[test]
    fn preset_dimension_override_must_match() {
        assert!(parse_game_str(r#"{"preset": "example1", "d1": 3}"#).is_err());
        assert!(parse_game_str(r#"{"preset": "example1", "d1": 2, "d2": 2}"#).is_ok());
    }
}
