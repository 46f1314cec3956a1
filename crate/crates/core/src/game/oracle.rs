//! Callable-backed game costs for non-quadratic games.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{GameJacobian, GradientField, JointAction, QuadraticGame, DEFAULT_FD_STEP};

pub type CostFn = Box<dyn Fn(&JointAction) -> f64 + Send + Sync>;
pub type GradFn = Box<dyn Fn(&JointAction) -> DVector<f64> + Send + Sync>;
pub type HessFn = Box<dyn Fn(&JointAction) -> DMatrix<f64> + Send + Sync>;

/// Analytic Hessian blocks of the costs: `D1^2 f1`, `D12 f1`, `D21 f2`,
/// `D2^2 f2` (the blocks entering the game Jacobian).
pub struct HessianBlocks {
    pub d11_f1: HessFn,
    pub d12_f1: HessFn,
    pub d21_f2: HessFn,
    pub d22_f2: HessFn,
}

/// A game defined by cost callables, with optional analytic individual
/// gradients `D1 f1`, `D2 f2` and optional analytic Hessian blocks.
/// Missing derivatives are replaced by central finite differences.
pub struct CostOracle {
    d1: usize,
    d2: usize,
    cost1: CostFn,
    cost2: CostFn,
    grad1: Option<GradFn>,
    grad2: Option<GradFn>,
    hessians: Option<HessianBlocks>,
    fd_step: f64,
}

impl CostOracle {
    pub fn new(d1: usize, d2: usize, cost1: CostFn, cost2: CostFn) -> Self {
        Self {
            d1,
            d2,
            cost1,
            cost2,
            grad1: None,
            grad2: None,
            hessians: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_gradients(mut self, grad1: GradFn, grad2: GradFn) -> Self {
        self.grad1 = Some(grad1);
        self.grad2 = Some(grad2);
        self
    }

    pub fn with_hessians(mut self, hessians: HessianBlocks) -> Self {
        self.hessians = Some(hessians);
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// Wrap a quadratic game with analytic costs, gradients, and (constant)
    /// Hessian blocks.
    pub fn from_quadratic(game: &QuadraticGame) -> Self {
        let (d1, d2) = (game.d1(), game.d2());
        let g_cost1 = game.clone();
        let g_cost2 = game.clone();
        let g_grad1 = game.clone();
        let g_grad2 = game.clone();
        let j = game.jacobian();
        let (h11, h12) = (-j.j11(), -j.j12());
        let (h21, h22) = (-j.j21(), -j.j22());
        Self::new(
            d1,
            d2,
            Box::new(move |x| g_cost1.cost(1, x).expect("dimensions checked by caller")),
            Box::new(move |x| g_cost2.cost(2, x).expect("dimensions checked by caller")),
        )
        .with_gradients(
            Box::new(move |x| {
                g_grad1.gradient(x).expect("dimensions checked by caller").rows(0, d1).into_owned()
            }),
            Box::new(move |x| {
                g_grad2.gradient(x).expect("dimensions checked by caller").rows(d1, d2).into_owned()
            }),
        )
        .with_hessians(HessianBlocks {
            d11_f1: Box::new(move |_| h11.clone()),
            d12_f1: Box::new(move |_| h12.clone()),
            d21_f2: Box::new(move |_| h21.clone()),
            d22_f2: Box::new(move |_| h22.clone()),
        })
    }

    pub fn has_gradients(&self) -> bool {
        self.grad1.is_some() && self.grad2.is_some()
    }

    pub fn cost(&self, player: usize, x: &JointAction) -> Result<f64> {
        self.check_dims(x)?;
        let v = match player {
            1 => (self.cost1)(x),
            2 => (self.cost2)(x),
            _ => return Err(Error::InvalidInput(format!("player index must be 1 or 2, got {player}"))),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("oracle cost"))
        }
    }

    /// `D_i f_i` by central differences of the cost along player i's own
    /// coordinates.
    fn fd_own_gradient(&self, player: usize, x: &JointAction) -> Result<DVector<f64>> {
        let h = self.fd_step;
        let dim = if player == 1 { self.d1 } else { self.d2 };
        let offset = if player == 1 { 0 } else { self.d1 };
        let base = x.stacked();
        let mut g = DVector::zeros(dim);
        for k in 0..dim {
            let mut fwd = base.clone();
            let mut bwd = base.clone();
            fwd[offset + k] += h;
            bwd[offset + k] -= h;
            let cf = self.cost(player, &JointAction::from_stacked(self.d1, &fwd)?)?;
            let cb = self.cost(player, &JointAction::from_stacked(self.d1, &bwd)?)?;
            g[k] = (cf - cb) / (2.0 * h);
        }
        Ok(g)
    }

    /// Check analytic derivatives against central finite differences on
    /// random probe points: gradients against cost differences, Hessian
    /// blocks against gradient differences.
    pub fn validate_derivatives(&self, probes: usize, seed: u64, rtol: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let x1 = DVector::from_fn(self.d1, |_, _| rng.random_range(-1.0..1.0));
            let x2 = DVector::from_fn(self.d2, |_, _| rng.random_range(-1.0..1.0));
            let x = JointAction::new(x1, x2)?;
            if self.has_gradients() {
                for player in [1, 2] {
                    let analytic = self.analytic_gradient(player, &x)?;
                    let numeric = self.fd_own_gradient(player, &x)?;
                    let scale = analytic.amax().max(numeric.amax()).max(1.0);
                    if (&analytic - &numeric).amax() > rtol * scale {
                        return Err(Error::InvalidInput(format!(
                            "analytic gradient of player {player} disagrees with finite \
                             differences by {:.3e} (relative tolerance {rtol:.1e})",
                            (&analytic - &numeric).amax() / scale
                        )));
                    }
                }
            }
            if let Some(h) = &self.hessians {
                if self.has_gradients() {
                    let fd = super::finite_difference_jacobian(self, &x, self.fd_step)?;
                    let pairs = [
                        ("D1^2 f1", (h.d11_f1)(&x), -fd.j11()),
                        ("D12 f1", (h.d12_f1)(&x), -fd.j12()),
                        ("D21 f2", (h.d21_f2)(&x), -fd.j21()),
                        ("D2^2 f2", (h.d22_f2)(&x), -fd.j22()),
                    ];
                    for (name, analytic, numeric) in pairs {
                        let scale = analytic.amax().max(numeric.amax()).max(1.0);
                        if (&analytic - &numeric).amax() > rtol * scale {
                            return Err(Error::InvalidInput(format!(
                                "analytic Hessian block {name} disagrees with finite \
                                 differences by {:.3e} (relative tolerance {rtol:.1e})",
                                (&analytic - &numeric).amax() / scale
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn analytic_gradient(&self, player: usize, x: &JointAction) -> Result<DVector<f64>> {
        let g = match player {
            1 => self.grad1.as_ref().map(|f| f(x)),
            2 => self.grad2.as_ref().map(|f| f(x)),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidInput("oracle has no gradient callable".into()))?;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("oracle gradient"));
        }
        Ok(g)
    }
}

impl std::fmt::Debug for CostOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CostOracle")
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .field("has_gradients", &self.has_gradients())
            .field("has_hessians", &self.hessians.is_some())
            .finish()
    }
}

impl GradientField for CostOracle {
    fn d1(&self) -> usize {
        self.d1
    }

    fn d2(&self) -> usize {
        self.d2
    }

    fn gradient(&self, x: &JointAction) -> Result<DVector<f64>> {
        self.check_dims(x)?;
        let g1 = if self.grad1.is_some() {
            self.analytic_gradient(1, x)?
        } else {
            self.fd_own_gradient(1, x)?
        };
        let g2 = if self.grad2.is_some() {
            self.analytic_gradient(2, x)?
        } else {
            self.fd_own_gradient(2, x)?
        };
        let mut g = DVector::zeros(self.d1 + self.d2);
        g.rows_mut(0, self.d1).copy_from(&g1);
        g.rows_mut(self.d1, self.d2).copy_from(&g2);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("oracle gradient field"));
        }
        Ok(g)
    }

    fn game_jacobian(&self, x: &JointAction) -> Result<GameJacobian> {
        if let Some(h) = &self.hessians {
            self.check_dims(x)?;
            return GameJacobian::new(
                -(h.d11_f1)(x),
                -(h.d12_f1)(x),
                -(h.d21_f2)(x),
                -(h.d22_f2)(x),
            );
        }
        if self.has_gradients() {
            super::finite_difference_jacobian(self, x, self.fd_step)
        } else {
            Err(Error::InvalidInput(
                "Jacobian of a cost-only oracle requires gradient or Hessian callables".into(),
            ))
        }
    }
}
