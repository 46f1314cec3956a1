//! Two-player continuous games: joint actions, quadratic game carriers,
//! cost oracles, the game Jacobian, and fixed-point location.
//!
//! Sign convention: the Jacobian stored in [`GameJacobian`] is `J = -Dg`
//! where `g(x) = (D1 f1(x), D2 f2(x))`, so "stable" uniformly means
//! "J is Hurwitz" throughout the crate.

mod file;
mod oracle;
pub mod presets;

pub use file::{load_game, parse_game_str, GameFile};
pub use oracle::{CostOracle, HessianBlocks};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Entrywise symmetry tolerance enforced on quadratic cost matrices.
pub const Q_SYMMETRY_TOL: f64 = 1e-12;

/// Entrywise symmetry tolerance enforced on Jacobian diagonal blocks.
pub const JACOBIAN_BLOCK_SYMMETRY_TOL: f64 = 1e-10;

/// Default central-difference step for oracle-backed Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A joint action profile `x = (x1, x2)` with `dim x_i = d_i >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
}

impl JointAction {
    pub fn new(x1: DVector<f64>, x2: DVector<f64>) -> Result<Self> {
        if x1.is_empty() || x2.is_empty() {
            return Err(Error::InvalidInput("both players need at least one action coordinate".into()));
        }
        if !(x1.iter().all(|v| v.is_finite()) && x2.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("joint action"));
        }
        Ok(Self { x1, x2 })
    }

    pub fn zeros(d1: usize, d2: usize) -> Result<Self> {
        Self::new(DVector::zeros(d1), DVector::zeros(d2))
    }

    /// Build from a stacked `(d1 + d2)`-vector.
    pub fn from_stacked(d1: usize, stacked: &DVector<f64>) -> Result<Self> {
        if stacked.len() <= d1 {
            return Err(Error::DimensionMismatch {
                context: "JointAction::from_stacked",
                expected: format!("length > {d1}"),
                found: format!("length {}", stacked.len()),
            });
        }
        Self::new(
            stacked.rows(0, d1).into_owned(),
            stacked.rows(d1, stacked.len() - d1).into_owned(),
        )
    }

    /// Concatenate the two action blocks.
    pub fn stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.d1() + self.d2());
        out.rows_mut(0, self.d1()).copy_from(&self.x1);
        out.rows_mut(self.d1(), self.d2()).copy_from(&self.x2);
        out
    }

    pub fn d1(&self) -> usize {
        self.x1.len()
    }

    pub fn d2(&self) -> usize {
        self.x2.len()
    }

    pub fn norm(&self) -> f64 {
        self.stacked().norm()
    }
}

/// Learning rates for gradient play: player 1 uses `gamma1`, player 2 uses
/// `gamma2 = tau * gamma1`. `tau` is the learning-rate ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearningConfig {
    pub gamma1: f64,
    pub tau: f64,
}

impl LearningConfig {
    pub fn new(gamma1: f64, tau: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma1.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma1 must be positive, got {gamma1}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { gamma1, tau })
    }

    pub fn gamma2(&self) -> f64 {
        self.tau * self.gamma1
    }
}

/// The rate-ratio matrix `Lambda = blockdiag(I_{d1}, tau I_{d2})`.
pub fn lambda_matrix(d1: usize, d2: usize, tau: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(d1 + d2, d1 + d2);
    for i in d1..d1 + d2 {
        m[(i, i)] = tau;
    }
    m
}

/// The game Jacobian `J = -Dg` partitioned into blocks.
///
/// `j11` and `j22` are the negated individual Hessians and therefore
/// symmetric; `j12` and `j21` carry the coupling between players.
#[derive(Debug, Clone, PartialEq)]
pub struct GameJacobian {
    j11: DMatrix<f64>,
    j12: DMatrix<f64>,
    j21: DMatrix<f64>,
    j22: DMatrix<f64>,
}

impl GameJacobian {
    pub fn new(
        j11: DMatrix<f64>,
        j12: DMatrix<f64>,
        j21: DMatrix<f64>,
        j22: DMatrix<f64>,
    ) -> Result<Self> {
        let (d1, d2) = (j11.nrows(), j22.nrows());
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidInput("Jacobian blocks must be non-empty".into()));
        }
        if !j11.is_square() || !j22.is_square() || j12.shape() != (d1, d2) || j21.shape() != (d2, d1) {
            return Err(Error::DimensionMismatch {
                context: "GameJacobian::new",
                expected: format!("blocks ({d1}x{d1}, {d1}x{d2}, {d2}x{d1}, {d2}x{d2})"),
                found: format!(
                    "({}x{}, {}x{}, {}x{}, {}x{})",
                    j11.nrows(), j11.ncols(), j12.nrows(), j12.ncols(),
                    j21.nrows(), j21.ncols(), j22.nrows(), j22.ncols()
                ),
            });
        }
        for (name, block) in [("J11", &j11), ("J22", &j22)] {
            let asym = (block - block.transpose()).amax();
            if asym > JACOBIAN_BLOCK_SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "diagonal block {name} must be symmetric (asymmetry {asym:.3e})"
                )));
            }
        }
        let all = [&j11, &j12, &j21, &j22];
        if !all.iter().all(|m| m.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("GameJacobian entries"));
        }
        Ok(Self { j11, j12, j21, j22 })
    }

    /// Split a full `(d1+d2)`-square matrix into Jacobian blocks.
    pub fn from_full(full: &DMatrix<f64>, d1: usize) -> Result<Self> {
        let n = full.nrows();
        if !full.is_square() || d1 == 0 || d1 >= n {
            return Err(Error::DimensionMismatch {
                context: "GameJacobian::from_full",
                expected: "square matrix with 0 < d1 < n".to_string(),
                found: format!("{}x{} with d1 = {d1}", full.nrows(), full.ncols()),
            });
        }
        let d2 = n - d1;
        Self::new(
            full.view((0, 0), (d1, d1)).into_owned(),
            full.view((0, d1), (d1, d2)).into_owned(),
            full.view((d1, 0), (d2, d1)).into_owned(),
            full.view((d1, d1), (d2, d2)).into_owned(),
        )
    }

    pub fn d1(&self) -> usize {
        self.j11.nrows()
    }

    pub fn d2(&self) -> usize {
        self.j22.nrows()
    }

    pub fn dim(&self) -> usize {
        self.d1() + self.d2()
    }

    pub fn j11(&self) -> &DMatrix<f64> {
        &self.j11
    }

    pub fn j12(&self) -> &DMatrix<f64> {
        &self.j12
    }

    pub fn j21(&self) -> &DMatrix<f64> {
        &self.j21
    }

    pub fn j22(&self) -> &DMatrix<f64> {
        &self.j22
    }

    /// Assemble the full `(d1+d2)`-square matrix.
    pub fn full(&self) -> DMatrix<f64> {
        let (d1, d2) = (self.d1(), self.d2());
        let mut m = DMatrix::zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(&self.j11);
        m.view_mut((0, d1), (d1, d2)).copy_from(&self.j12);
        m.view_mut((d1, 0), (d2, d1)).copy_from(&self.j21);
        m.view_mut((d1, d1), (d2, d2)).copy_from(&self.j22);
        m
    }

    /// `Lambda J` with `Lambda = blockdiag(I_{d1}, tau I_{d2})`: the second
    /// player's rows scaled by the rate ratio.
    pub fn rate_scaled(&self, tau: f64) -> DMatrix<f64> {
        let (d1, d2) = (self.d1(), self.d2());
        let mut m = self.full();
        for i in d1..d1 + d2 {
            for j in 0..d1 + d2 {
                m[(i, j)] *= tau;
            }
        }
        m
    }

    /// Max-abs entry over all blocks; scale reference for relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.full().amax()
    }
}

/// Anything that exposes the stacked individual-gradient field `g` and its
/// Jacobian. Implemented by [`QuadraticGame`] (exact) and [`CostOracle`]
/// (finite differences when no analytic derivatives are supplied).
pub trait GradientField {
    fn d1(&self) -> usize;
    fn d2(&self) -> usize;

    /// `g(x) = (D1 f1(x), D2 f2(x))`.
    fn gradient(&self, x: &JointAction) -> Result<DVector<f64>>;

    /// The game Jacobian `J = -Dg` at `x`.
    fn game_jacobian(&self, x: &JointAction) -> Result<GameJacobian>;

    fn check_dims(&self, x: &JointAction) -> Result<()> {
        if x.d1() != self.d1() || x.d2() != self.d2() {
            return Err(Error::DimensionMismatch {
                context: "gradient field evaluation",
                expected: format!("({}, {})", self.d1(), self.d2()),
                found: format!("({}, {})", x.d1(), x.d2()),
            });
        }
        Ok(())
    }
}

/// A two-player game with quadratic costs
/// `f_i(x) = 1/2 x^T Q_i x + b_i^T x`, the closed-form carrier for every
/// analysis in this crate. Its gradient field is affine and its Jacobian is
/// constant in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    d1: usize,
    d2: usize,
    q1: DMatrix<f64>,
    q2: DMatrix<f64>,
    b1: DVector<f64>,
    b2: DVector<f64>,
}

impl QuadraticGame {
    pub fn new(
        d1: usize,
        d2: usize,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        b1: DVector<f64>,
        b2: DVector<f64>,
    ) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidInput("d1 and d2 must be at least 1".into()));
        }
        let n = d1 + d2;
        for (name, q) in [("Q1", &q1), ("Q2", &q2)] {
            if q.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    context: "QuadraticGame::new",
                    expected: format!("{name} of shape {n}x{n}"),
                    found: format!("{}x{}", q.nrows(), q.ncols()),
                });
            }
            let asym = (q - q.transpose()).amax();
            if asym > Q_SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "{name} must be symmetric (asymmetry {asym:.3e})"
                )));
            }
            if !q.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("quadratic cost matrix"));
            }
        }
        for (name, b) in [("b1", &b1), ("b2", &b2)] {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "QuadraticGame::new",
                    expected: format!("{name} of length {n}"),
                    found: format!("length {}", b.len()),
                });
            }
            if !b.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("quadratic cost offset"));
            }
        }
        Ok(Self { d1, d2, q1, q2, b1, b2 })
    }

    /// Zero-sum construction `(f, -f)` from a single quadratic cost.
    pub fn zero_sum(d1: usize, d2: usize, q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let neg_q = -&q;
        let neg_b = -&b;
        Self::new(d1, d2, q, neg_q, b, neg_b)
    }

    /// Potential construction: both players share the quadratic potential
    /// `phi`, so `J12 = J21^T` exactly.
    pub fn from_potential(d1: usize, d2: usize, q: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Self::new(d1, d2, q.clone(), q, b.clone(), b)
    }

    /// Build a quadratic game realizing a prescribed game Jacobian: the
    /// blocks of `j` become the negated cost Hessians. Useful for
    /// constructing games with exact zero-sum or potential structure.
    pub fn from_jacobian(j: &GameJacobian, b1: DVector<f64>, b2: DVector<f64>) -> Result<Self> {
        let (d1, d2) = (j.d1(), j.d2());
        let n = d1 + d2;
        if b1.len() != n || b2.len() != n {
            return Err(Error::DimensionMismatch {
                context: "QuadraticGame::from_jacobian",
                expected: format!("offsets of length {n}"),
                found: format!("({}, {})", b1.len(), b2.len()),
            });
        }
        // Only the rows of Q_i owned by player i enter the gradient field;
        // the remaining blocks are chosen to keep Q_i symmetric.
        let mut q1 = DMatrix::zeros(n, n);
        q1.view_mut((0, 0), (d1, d1)).copy_from(&(-j.j11()));
        q1.view_mut((0, d1), (d1, d2)).copy_from(&(-j.j12()));
        q1.view_mut((d1, 0), (d2, d1)).copy_from(&(-j.j12().transpose()));
        let mut q2 = DMatrix::zeros(n, n);
        q2.view_mut((d1, 0), (d2, d1)).copy_from(&(-j.j21()));
        q2.view_mut((0, d1), (d1, d2)).copy_from(&(-j.j21().transpose()));
        q2.view_mut((d1, d1), (d2, d2)).copy_from(&(-j.j22()));
        Self::new(d1, d2, q1, q2, b1, b2)
    }

    pub fn q1(&self) -> &DMatrix<f64> {
        &self.q1
    }

    pub fn q2(&self) -> &DMatrix<f64> {
        &self.q2
    }

    /// Cost of player `i` (1-based) at `x`.
    pub fn cost(&self, player: usize, x: &JointAction) -> Result<f64> {
        self.check_dims(x)?;
        let q = match player {
            1 => &self.q1,
            2 => &self.q2,
            _ => return Err(Error::InvalidInput(format!("player index must be 1 or 2, got {player}"))),
        };
        let b = if player == 1 { &self.b1 } else { &self.b2 };
        let s = x.stacked();
        Ok(0.5 * (s.transpose() * q * &s)[(0, 0)] + b.dot(&s))
    }

    /// The constant game Jacobian of the quadratic game.
    pub fn jacobian(&self) -> GameJacobian {
        let (d1, d2) = (self.d1, self.d2);
        let j11 = -self.q1.view((0, 0), (d1, d1)).into_owned();
        let j12 = -self.q1.view((0, d1), (d1, d2)).into_owned();
        let j21 = -self.q2.view((d1, 0), (d2, d1)).into_owned();
        let j22 = -self.q2.view((d1, d1), (d2, d2)).into_owned();
        GameJacobian::new(j11, j12, j21, j22).expect("validated at construction")
    }
}

impl GradientField for QuadraticGame {
    fn d1(&self) -> usize {
        self.d1
    }

    fn d2(&self) -> usize {
        self.d2
    }

    fn gradient(&self, x: &JointAction) -> Result<DVector<f64>> {
        self.check_dims(x)?;
        let s = x.stacked();
        let g1 = self.q1.rows(0, self.d1) * &s + self.b1.rows(0, self.d1);
        let g2 = self.q2.rows(self.d1, self.d2) * &s + self.b2.rows(self.d1, self.d2);
        let mut g = DVector::zeros(self.d1 + self.d2);
        g.rows_mut(0, self.d1).copy_from(&g1);
        g.rows_mut(self.d1, self.d2).copy_from(&g2);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("gradient field"));
        }
        Ok(g)
    }

    fn game_jacobian(&self, x: &JointAction) -> Result<GameJacobian> {
        self.check_dims(x)?;
        Ok(self.jacobian())
    }
}

/// Evaluate the stacked gradient field `g(x) = (D1 f1, D2 f2)`.
pub fn eval_gradient_field(field: &dyn GradientField, x: &JointAction) -> Result<DVector<f64>> {
    field.check_dims(x)?;
    field.gradient(x)
}

/// Assemble the game Jacobian of a quadratic game at `x` (constant in `x`;
/// the point only undergoes a dimension check).
pub fn assemble_jacobian(game: &QuadraticGame, x: &JointAction) -> Result<GameJacobian> {
    game.check_dims(x)?;
    Ok(game.jacobian())
}

/// Central-difference approximation of the game Jacobian of an oracle at
/// `x`, with diagonal blocks symmetrized by averaging with their transpose.
pub fn finite_difference_jacobian(
    oracle: &CostOracle,
    x: &JointAction,
    h: f64,
) -> Result<GameJacobian> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {h}")));
    }
    if !oracle.has_gradients() {
        return Err(Error::InvalidInput(
            "finite_difference_jacobian requires an oracle with gradient callables".into(),
        ));
    }
    oracle.check_dims(x)?;
    let n = x.d1() + x.d2();
    let base = x.stacked();
    let mut dg = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut fwd = base.clone();
        let mut bwd = base.clone();
        fwd[col] += h;
        bwd[col] -= h;
        let gf = oracle.gradient(&JointAction::from_stacked(x.d1(), &fwd)?)?;
        let gb = oracle.gradient(&JointAction::from_stacked(x.d1(), &bwd)?)?;
        dg.set_column(col, &((gf - gb) / (2.0 * h)));
    }
    if !dg.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("finite-difference Jacobian"));
    }
    let j = -dg;
    let (d1, d2) = (x.d1(), x.d2());
    let j11 = j.view((0, 0), (d1, d1)).into_owned();
    let j22 = j.view((d1, d1), (d2, d2)).into_owned();
    GameJacobian::new(
        (&j11 + j11.transpose()) * 0.5,
        j.view((0, d1), (d1, d2)).into_owned(),
        j.view((d1, 0), (d2, d1)).into_owned(),
        (&j22 + j22.transpose()) * 0.5,
    )
}

/// Locate a fixed point of the gradient field (`g(x) = 0`) by damped Newton
/// iteration started at `x0`. Convergence is declared when
/// `||g(x)||_inf <= tol`.
pub fn find_fixed_point(
    field: &dyn GradientField,
    x0: &JointAction,
    tol: f64,
    max_iters: usize,
) -> Result<JointAction> {
    const MAX_HALVINGS: u32 = 30;
    field.check_dims(x0)?;
    let mut x = x0.clone();
    let mut g = field.gradient(&x)?;
    let mut residual = g.amax();
    for _ in 0..max_iters {
        if residual <= tol {
            return Ok(x);
        }
        // J = -Dg, so the Newton system Dg * delta = -g reads J * delta = g.
        let j = field.game_jacobian(&x)?.full();
        let delta = j
            .lu()
            .solve(&g)
            .ok_or(Error::SingularSystem("Newton step for fixed point"))?;
        let g_norm = g.norm();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = JointAction::from_stacked(x.d1(), &(x.stacked() + &delta * alpha))?;
            if let Ok(gt) = field.gradient(&trial) {
                if gt.norm() < g_norm {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, gt)) => {
                x = trial;
                g = gt;
                residual = g.amax();
            }
            None => return Err(Error::NewtonFailed { residual, iters: max_iters }),
        }
    }
    if residual <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonFailed { residual, iters: max_iters })
    }
}
