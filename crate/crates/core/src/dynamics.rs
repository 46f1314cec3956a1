//! Gradient-play dynamics: the discrete update
//! `x_i(t+1) = x_i(t) - gamma_i D_i f_i(x(t))`, the continuous flow
//! `xdot = -Lambda g(x)`, and rate-ratio sweeps of the linearized maps.
//!
//! For the discrete system the spectral radius of `I + gamma1 Lambda J`
//! at a fixed point governs the local convergence rate; [`tau_sweep`] and
//! [`optimal_tau`] trace it over ratios and locate its minimizer.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GradientField, JointAction, LearningConfig};
use crate::game::GameJacobian;
use crate::spectral::{eigenvalues, Spectrum};

/// Cap on stored trajectory samples; longer runs are strided.
const MAX_STORED_STATES: usize = 10_000;

/// Golden-section refinement iterations in [`optimal_tau`].
const GOLDEN_ITERS: usize = 40;

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    Diverged,
    MaxSteps,
}

/// A recorded trajectory. For discrete runs `times` holds step indices; for
/// continuous runs, integration times. `config.gamma1` stores the step size
/// used (the integrator step for continuous runs).
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    pub config: LearningConfig,
    pub terminated: Termination,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory records at least the initial state")
    }

    pub fn final_norm(&self) -> f64 {
        *self.norms.last().expect("trajectory records at least the initial state")
    }

    /// Number of dynamics steps taken (recorded or not). For discrete
    /// records only; continuous records carry times, not step indices.
    pub fn steps_taken(&self) -> usize {
        self.times.last().map(|t| t.round() as usize).unwrap_or(0)
    }
}

/// Default escape radius for divergence detection.
pub fn default_divergence_bound(x0_norm: f64) -> f64 {
    1e6 * (1.0 + x0_norm)
}

fn record_stride(total_steps: usize) -> usize {
    total_steps.div_ceil(MAX_STORED_STATES).max(1)
}

fn scaled_gradient(
    field: &dyn GradientField,
    x: &DVector<f64>,
    d1: usize,
    tau: f64,
) -> Result<DVector<f64>> {
    let action = JointAction::from_stacked(d1, x)?;
    let mut g = field.gradient(&action)?;
    for i in d1..g.len() {
        g[i] *= tau;
    }
    Ok(g)
}

/// Simulate discrete gradient play from `x0` until the state norm drops to
/// `conv_tol`, escapes past `div_bound`, or `max_steps` elapse. States are
/// recorded every step for short runs and strided for long ones; the final
/// state is always recorded.
pub fn simulate_discrete(
    field: &dyn GradientField,
    config: &LearningConfig,
    x0: &JointAction,
    max_steps: usize,
    conv_tol: f64,
    div_bound: f64,
) -> Result<TrajectoryRecord> {
    field.check_dims(x0)?;
    let d1 = field.d1();
    let stride = record_stride(max_steps);
    let mut x = x0.stacked();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut norms = Vec::new();
    let mut record = |step: usize, x: &DVector<f64>| {
        times.push(step as f64);
        states.push(x.clone());
        norms.push(x.norm());
    };
    record(0, &x);
    let mut terminated = Termination::MaxSteps;
    for step in 1..=max_steps {
        let g = scaled_gradient(field, &x, d1, config.tau)?;
        x -= g * config.gamma1;
        let norm = x.norm();
        let finite = norm.is_finite();
        let done = !finite || norm <= conv_tol || norm >= div_bound;
        if step % stride == 0 || done || step == max_steps {
            record(step, &x);
        }
        if done {
            terminated = if finite && norm <= conv_tol {
                Termination::Converged
            } else {
                Termination::Diverged
            };
            break;
        }
    }
    Ok(TrajectoryRecord { times, states, norms, config: *config, terminated })
}

/// Integrate `xdot = -Lambda g(x)` with classical fixed-step RK4 from `t = 0`
/// to `t_end` (`round(t_end / dt)` steps of exactly `dt`).
pub fn simulate_continuous(
    field: &dyn GradientField,
    tau: f64,
    x0: &JointAction,
    t_end: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("t_end must be nonnegative, got {t_end}")));
    }
    field.check_dims(x0)?;
    let d1 = field.d1();
    let n_steps = (t_end / dt).round() as usize;
    let stride = record_stride(n_steps);
    let div_bound = default_divergence_bound(x0.norm());

    let mut x = x0.stacked();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut norms = Vec::new();
    let mut record = |t: f64, x: &DVector<f64>| {
        times.push(t);
        states.push(x.clone());
        norms.push(x.norm());
    };
    record(0.0, &x);
    let mut terminated = Termination::MaxSteps;
    let deriv = |x: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(-scaled_gradient(field, x, d1, tau)?)
    };
    for step in 1..=n_steps {
        let k1 = deriv(&x)?;
        let k2 = deriv(&(&x + &k1 * (dt / 2.0)))?;
        let k3 = deriv(&(&x + &k2 * (dt / 2.0)))?;
        let k4 = deriv(&(&x + &k3 * dt))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = step as f64 * dt;
        let norm = x.norm();
        let blown_up = !norm.is_finite() || norm >= div_bound;
        if step % stride == 0 || blown_up || step == n_steps {
            record(t, &x);
        }
        if blown_up {
            terminated = Termination::Diverged;
            break;
        }
    }
    Ok(TrajectoryRecord {
        times,
        states,
        norms,
        config: LearningConfig { gamma1: dt, tau },
        terminated,
    })
}

/// Per-ratio spectral data of the linearized maps.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub taus: Vec<f64>,
    /// `rho(I + gamma1 Lambda J)` per ratio.
    pub rho_discrete: Vec<f64>,
    /// `spec(Lambda J)` per ratio.
    pub spectra_continuous: Vec<Spectrum>,
    pub best_tau: f64,
    pub best_rho: f64,
}

fn discrete_rho(j: &GameJacobian, gamma1: f64, tau: f64) -> Result<f64> {
    let n = j.dim();
    let step_map = nalgebra::DMatrix::identity(n, n) + j.rate_scaled(tau) * gamma1;
    Ok(eigenvalues(&step_map)?.spectral_radius())
}

/// Evaluate the discrete-map spectral radius and the continuous-time
/// spectrum at each ratio in `taus` (strictly increasing, all positive).
pub fn tau_sweep(j: &GameJacobian, gamma1: f64, taus: &[f64]) -> Result<SweepResult> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("tau sweep needs at least one ratio".into()));
    }
    if taus.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("tau values must be positive".into()));
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("tau values must be strictly increasing".into()));
    }
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma1 must be positive, got {gamma1}")));
    }
    let mut rho_discrete = Vec::with_capacity(taus.len());
    let mut spectra_continuous = Vec::with_capacity(taus.len());
    for &tau in taus {
        rho_discrete.push(discrete_rho(j, gamma1, tau)?);
        spectra_continuous.push(eigenvalues(&j.rate_scaled(tau))?);
    }
    let best_idx = rho_discrete
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite spectral radii"))
        .map(|(i, _)| i)
        .expect("nonempty sweep");
    Ok(SweepResult {
        taus: taus.to_vec(),
        best_tau: taus[best_idx],
        best_rho: rho_discrete[best_idx],
        rho_discrete,
        spectra_continuous,
    })
}

/// Minimize `rho(I + gamma1 Lambda J)` over `tau in [tau_lo, tau_hi]`:
/// a log-spaced scan of `grid_n` points followed by golden-section
/// refinement on the winning bracket.
pub fn optimal_tau(
    j: &GameJacobian,
    gamma1: f64,
    tau_lo: f64,
    tau_hi: f64,
    grid_n: usize,
) -> Result<(f64, f64)> {
    if !(tau_lo > 0.0 && tau_hi > tau_lo) {
        return Err(Error::InvalidInput(format!(
            "need 0 < tau_lo < tau_hi, got [{tau_lo}, {tau_hi}]"
        )));
    }
    if grid_n < 2 {
        return Err(Error::InvalidInput("grid_n must be at least 2".into()));
    }
    let grid = crate::classify::log_spaced(tau_lo, tau_hi, grid_n);
    let mut best_idx = 0;
    let mut best_rho = f64::INFINITY;
    let mut rhos = Vec::with_capacity(grid.len());
    for (i, &tau) in grid.iter().enumerate() {
        let rho = discrete_rho(j, gamma1, tau)?;
        if rho < best_rho {
            best_rho = rho;
            best_idx = i;
        }
        rhos.push(rho);
    }
    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = discrete_rho(j, gamma1, a)?;
    let mut fb = discrete_rho(j, gamma1, b)?;
    for _ in 0..GOLDEN_ITERS {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = discrete_rho(j, gamma1, a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = discrete_rho(j, gamma1, b)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fmid = discrete_rho(j, gamma1, mid)?;
    let mut best = (grid[best_idx], best_rho);
    for cand in [(a, fa), (b, fb), (mid, fmid)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{presets, QuadraticGame};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector, DMatrix};

    fn ones22() -> JointAction {
        JointAction::new(dvector![1.0, 1.0], dvector![1.0, 1.0]).unwrap()
    }

    #[test]
    fn discrete_iteration_matches_matrix_powers() {
        // for quadratic games the update is exactly x <- (I + gamma Lambda J) x
        let game = presets::example5(0.9).unwrap();
        let j = game.jacobian();
        let config = LearningConfig::new(1e-3, 4.0).unwrap();
        let record =
            simulate_discrete(&game, &config, &ones22(), 100, 0.0, default_divergence_bound(2.0))
                .unwrap();
        let m = DMatrix::identity(4, 4) + j.rate_scaled(config.tau) * config.gamma1;
        let mut x = ones22().stacked();
        for _ in 0..100 {
            x = &m * x;
        }
        assert!((record.final_state() - x).amax() <= 1e-10);
        assert_eq!(record.terminated, Termination::MaxSteps);
        assert_eq!(record.len(), 101);
    }

    #[test]
    fn discrete_diverges_on_unstable_nash() {
        let game = presets::example2(4.0).unwrap();
        let config = LearningConfig::new(1e-2, 1.0).unwrap();
        let x0 = JointAction::new(dvector![1e-3, 1e-3], dvector![-1e-3, 1e-3]).unwrap();
        let record = simulate_discrete(
            &game,
            &config,
            &x0,
            2_000_000,
            1e-12,
            default_divergence_bound(x0.norm()),
        )
        .unwrap();
        assert_eq!(record.terminated, Termination::Diverged);
    }

    #[test]
    fn discrete_striding_bounds_memory() {
        let game = presets::example5(0.9).unwrap();
        let config = LearningConfig::new(1e-3, 1.0).unwrap();
        let record = simulate_discrete(
            &game,
            &config,
            &ones22(),
            50_000,
            0.0,
            default_divergence_bound(2.0),
        )
        .unwrap();
        assert!(record.len() <= MAX_STORED_STATES + 2);
        assert_eq!(record.steps_taken(), 50_000);
    }

    #[test]
    fn continuous_scalar_exponential() {
        // identity-quadratic game: xdot = -x, x(1) = e^-1
        let q = DMatrix::identity(2, 2);
        let game = QuadraticGame::new(1, 1, q.clone(), q, nalgebra::DVector::zeros(2), nalgebra::DVector::zeros(2))
            .unwrap();
        let x0 = JointAction::new(dvector![1.0], dvector![1.0]).unwrap();
        let record = simulate_continuous(&game, 1.0, &x0, 1.0, 1e-3).unwrap();
        assert_relative_eq!(record.final_state()[0], (-1.0f64).exp(), epsilon = 1e-6);
        assert_relative_eq!(record.final_state()[1], (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn continuous_example1_decay_depends_on_coupling() {
        let stable = presets::example1(2.0).unwrap();
        let record = simulate_continuous(&stable, 1.0, &ones22(), 50.0, 1e-2).unwrap();
        assert!(record.final_norm() <= 1e-6, "norm {}", record.final_norm());

        let unstable = presets::example1(1.0).unwrap();
        let record = simulate_continuous(&unstable, 1.0, &ones22(), 50.0, 1e-2).unwrap();
        assert!(record.final_norm() > 1e-3, "norm {}", record.final_norm());
    }

    #[test]
    fn tau_sweep_scalar_contraction() {
        let j = GameJacobian::new(dmatrix![-1.0], dmatrix![0.0], dmatrix![0.0], dmatrix![-1.0]).unwrap();
        let sweep = tau_sweep(&j, 0.1, &[1.0]).unwrap();
        assert_relative_eq!(sweep.rho_discrete[0], 0.9, epsilon = 1e-12);
        assert_eq!(sweep.best_tau, 1.0);
        assert_eq!(sweep.spectra_continuous[0].len(), 2);
    }

    #[test]
    fn tau_sweep_validates_input() {
        let j = presets::example5(0.9).unwrap().jacobian();
        assert!(tau_sweep(&j, 1e-3, &[]).is_err());
        assert!(tau_sweep(&j, 1e-3, &[1.0, 1.0]).is_err());
        assert!(tau_sweep(&j, 1e-3, &[2.0, 1.0]).is_err());
        assert!(tau_sweep(&j, 1e-3, &[-1.0, 1.0]).is_err());
        assert!(tau_sweep(&j, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn sweep_alignment_contract() {
        let j = presets::example5(0.9).unwrap().jacobian();
        let taus = crate::classify::log_spaced(1.0, 100.0, 40);
        let sweep = tau_sweep(&j, 1e-3, &taus).unwrap();
        assert_eq!(sweep.taus, taus);
        assert_eq!(sweep.rho_discrete.len(), taus.len());
        assert_eq!(sweep.spectra_continuous.len(), taus.len());
        assert_relative_eq!(
            sweep.best_rho,
            sweep.rho_discrete.iter().copied().fold(f64::INFINITY, f64::min),
            epsilon = 0.0
        );
    }

    #[test]
    fn optimal_tau_mostly_rotational_system() {
        let j = presets::example5(0.9).unwrap().jacobian();
        let (best_tau, best_rho) = optimal_tau(&j, 1e-3, 1.0, 100.0, 200).unwrap();
        assert!((best_tau - 28.0).abs() <= 2.0, "best tau {best_tau}");
        assert!(best_rho < 1.0);
    }

    #[test]
    fn rate_separation_shrinks_spectral_radius() {
        let j = presets::example5(0.9).unwrap().jacobian();
        let sweep = tau_sweep(&j, 1e-3, &[1.0, 28.0]).unwrap();
        assert!(sweep.rho_discrete[1] < sweep.rho_discrete[0]);
        assert!(sweep.rho_discrete[0] < 1.0);
    }

    /// At tau = 1 the mostly rotational system cycles around the origin
    /// (repeated sign changes of the first coordinate) and decays slowly;
    /// with rate separation it converges orders of magnitude sooner.
    #[test]
    fn rotational_system_cycles_without_rate_separation() {
        let game = presets::example5(0.9).unwrap();
        let x0 = ones22();
        let slow = simulate_discrete(
            &game,
            &LearningConfig::new(1e-3, 1.0).unwrap(),
            &x0,
            20_000,
            1e-6,
            default_divergence_bound(x0.norm()),
        )
        .unwrap();
        assert_eq!(slow.terminated, Termination::MaxSteps);
        assert!(slow.final_norm() > 1e-3);
        let sign_changes = slow
            .states
            .windows(2)
            .filter(|w| w[0][0] * w[1][0] < 0.0)
            .count();
        assert!(sign_changes >= 4, "expected cycling, saw {sign_changes} sign changes");

        let fast = simulate_discrete(
            &game,
            &LearningConfig::new(1e-3, 28.0).unwrap(),
            &x0,
            20_000,
            1e-6,
            default_divergence_bound(x0.norm()),
        )
        .unwrap();
        assert_eq!(fast.terminated, Termination::Converged);
    }

    /// Convergence of the discrete iteration is exactly the spectral-radius
    /// condition on the linearized step map.
    #[test]
    fn convergence_iff_contractive_step_map() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut converged = 0usize;
        let mut escaped = 0usize;
        for _ in 0..60 {
            let d1 = rng.random_range(1..=2usize);
            let d2 = rng.random_range(1..=2usize);
            let n = d1 + d2;
            let sym = {
                let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                (&g + g.transpose()) * 0.5 - DMatrix::identity(n, n) * rng.random_range(-0.5..1.5)
            };
            let j = GameJacobian::from_full(&sym, d1).unwrap();
            let game = QuadraticGame::from_jacobian(&j, nalgebra::DVector::zeros(n), nalgebra::DVector::zeros(n))
                .unwrap();
            let config = LearningConfig::new(0.2, rng.random_range(0.3..3.0)).unwrap();
            let step_map = DMatrix::identity(n, n) + j.rate_scaled(config.tau) * config.gamma1;
            let rho = crate::spectral::spectral_radius(&step_map).unwrap();
            if (rho - 1.0).abs() < 5e-3 {
                continue; // too close to marginal to resolve in finite steps
            }
            let x0 = JointAction::from_stacked(
                d1,
                &DVector::from_fn(n, |_, _| rng.random_range(0.5..1.0)),
            )
            .unwrap();
            let record = simulate_discrete(
                &game,
                &config,
                &x0,
                200_000,
                1e-9,
                default_divergence_bound(x0.norm()),
            )
            .unwrap();
            if rho < 1.0 - 1e-9 {
                assert_eq!(record.terminated, Termination::Converged, "rho = {rho}");
                converged += 1;
            } else {
                assert_ne!(record.terminated, Termination::Converged, "rho = {rho}");
                escaped += 1;
            }
        }
        assert!(converged >= 10 && escaped >= 10, "coverage {converged}/{escaped}");
    }

    #[test]
    fn optimal_tau_mostly_potential_system_gains_little() {
        let j = presets::example5(0.1).unwrap().jacobian();
        let (_, best_rho) = optimal_tau(&j, 1e-3, 1.0, 100.0, 200).unwrap();
        let rho_at_one = tau_sweep(&j, 1e-3, &[1.0]).unwrap().rho_discrete[0];
        let improvement = (rho_at_one - best_rho) / (1.0 - rho_at_one);
        assert!(improvement.abs() < 0.05, "improvement {improvement}");
    }

    #[test]
    fn optimal_tau_balances_decoupled_contractions() {
        // diag(-a, -b): rho = max(|1 - gamma a|, |1 - gamma tau b|) is
        // minimized where the two factors meet, tau = a / b.
        let (a, b) = (3.0, 0.5);
        let j = GameJacobian::new(dmatrix![-a], dmatrix![0.0], dmatrix![0.0], dmatrix![-b]).unwrap();
        let gamma1 = 1e-3;
        let (best_tau, _) = optimal_tau(&j, gamma1, 0.1, 100.0, 400).unwrap();
        assert!((best_tau - a / b).abs() <= 0.05 * (a / b), "best tau {best_tau}");
    }

    #[test]
    fn optimal_tau_validates_bracket() {
        let j = presets::example5(0.9).unwrap().jacobian();
        assert!(optimal_tau(&j, 1e-3, 5.0, 5.0, 10).is_err());
        assert!(optimal_tau(&j, 1e-3, -1.0, 5.0, 10).is_err());
    }

    #[test]
    fn rk4_error_shrinks_sixteen_fold() {
        // single spot check; the acceptance suite covers the 20-system sweep
        let game = presets::example1(2.0).unwrap();
        let j = game.jacobian();
        let a = j.rate_scaled(1.0);
        let x0 = ones22();
        let t_end = 2.0;
        let exact = crate::dynamics::tests::expm(&(a * t_end)) * x0.stacked();
        let coarse = simulate_continuous(&game, 1.0, &x0, t_end, 0.1).unwrap();
        let fine = simulate_continuous(&game, 1.0, &x0, t_end, 0.05).unwrap();
        let e1 = (coarse.final_state() - &exact).norm();
        let e2 = (fine.final_state() - &exact).norm();
        let ratio = e1 / e2;
        assert!((13.0..=19.0).contains(&ratio), "ratio {ratio}");
    }

    /// Test-only matrix exponential by scaling and squaring of the Taylor
    /// series; independent of the RK4 path it checks.
    pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let norm = a.amax();
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let scaled = a / 2f64.powi(s);
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = DMatrix::<f64>::identity(n, n);
        for k in 1..30 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        let mut result = sum;
        for _ in 0..s {
            result = &result * &result;
        }
        result
    }
}
