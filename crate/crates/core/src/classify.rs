//! Equilibrium classification: Nash and Hurwitz tests, spectral bound
//! regions for zero-sum and potential structure, robustness certificates
//! under learning-rate-ratio changes, the block instability test, and the
//! aggregate report.
//!
//! All tests work on the game Jacobian `J = -Dg` at a fixed point. The
//! diagonal-block eigenvalue extremes
//! `lam_i^- = min spec(J_ii)`, `lam_i^+ = max spec(J_ii)` drive every bound:
//! for zero-sum coupling the spectrum is confined to a real interval plus a
//! complex box, for potential coupling it is real and pinned near the block
//! extremes, and a positive eigenvalue of the symmetric part that the skew
//! coupling cannot reach certifies instability.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decomp::{rotated_block_form, split_potential_rotational};
use crate::error::{Error, Result};
use crate::game::{eval_gradient_field, GameJacobian, GradientField, JointAction};
use crate::qnr::unit_pair_for_draw;
use crate::spectral::{
    eigenvalues, is_hurwitz, stability_class, symmetric_eig, StabilityClass,
    DEFAULT_HURWITZ_TOL,
};

/// Relative tolerance for structure detection: a coupling part with operator
/// norm at most `1e-9 * (1 + max |J_ij|)` counts as absent.
pub const STRUCTURE_RTOL: f64 = 1e-9;

/// Block-extreme gaps below this are treated as coincident when evaluating
/// the potential-game deltas (continuous limit: delta = ||P||).
const COINCIDENT_GAP_TOL: f64 = 1e-12;

/// Structure tolerance for a given Jacobian.
pub fn structure_tol(j: &GameJacobian) -> f64 {
    STRUCTURE_RTOL * (1.0 + j.max_abs())
}

/// Eigenvalue extremes of the diagonal blocks and their combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lam1_minus: f64,
    pub lam1_plus: f64,
    pub lam2_minus: f64,
    pub lam2_plus: f64,
    pub lam_minus: f64,
    pub lam_plus: f64,
    pub lam_under: f64,
    pub lam_over: f64,
}

/// Block-spectrum extremes of a game Jacobian.
pub fn lambda_summary(j: &GameJacobian) -> Result<LambdaSummary> {
    let e1 = symmetric_eig(j.j11())?;
    let e2 = symmetric_eig(j.j22())?;
    let (lam1_plus, lam1_minus) = (e1.values[0], e1.values[e1.values.len() - 1]);
    let (lam2_plus, lam2_minus) = (e2.values[0], e2.values[e2.values.len() - 1]);
    Ok(LambdaSummary {
        lam1_minus,
        lam1_plus,
        lam2_minus,
        lam2_plus,
        lam_minus: lam1_minus.min(lam2_minus),
        lam_plus: lam1_plus.max(lam2_plus),
        lam_under: 0.5 * (lam1_minus + lam2_minus),
        lam_over: 0.5 * (lam1_plus + lam2_plus),
    })
}

/// Strict / degenerate / failed second-order Nash conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NashStatus {
    Nash,
    Degenerate,
    NotNash,
}

/// Second-order differential Nash test: both negated individual Hessians
/// `J_ii` negative definite. Block eigenvalues within `tol` of zero make
/// the point degenerate rather than Nash.
pub fn nash_status(j: &GameJacobian, tol: f64) -> Result<NashStatus> {
    let lam = lambda_summary(j)?;
    let max_block = lam.lam1_plus.max(lam.lam2_plus);
    if max_block < -tol {
        Ok(NashStatus::Nash)
    } else if max_block > tol {
        Ok(NashStatus::NotNash)
    } else {
        Ok(NashStatus::Degenerate)
    }
}

/// True iff the point passes the strict differential Nash test.
pub fn check_differential_nash(j: &GameJacobian, tol: f64) -> Result<bool> {
    Ok(nash_status(j, tol)? == NashStatus::Nash)
}

/// Extra confinement available when the block spectra separate on the real
/// line (gap `delta`): either the whole spectrum is real, or the imaginary
/// parts obey a refined bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationInfo {
    pub delta: f64,
    pub all_real: bool,
    pub refined_imag_bound: Option<f64>,
}

/// Spectrum enclosure for zero-sum-structured Jacobians: real eigenvalues in
/// `real_interval`, non-real ones inside the box
/// `Re in complex_re_interval, |Im| <= imag_bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSumBounds {
    pub real_interval: [f64; 2],
    pub complex_re_interval: [f64; 2],
    pub imag_bound: f64,
    pub z_norm: f64,
    pub separation: Option<SeparationInfo>,
    pub lambda: LambdaSummary,
}

/// Spectrum enclosure for a zero-sum-structured Jacobian.
pub fn zero_sum_bounds(j: &GameJacobian) -> Result<ZeroSumBounds> {
    let split = split_potential_rotational(j);
    let p_norm = split.p_norm();
    if p_norm > structure_tol(j) {
        return Err(Error::StructureMismatch { expected: "zero-sum", norm: p_norm });
    }
    let lam = lambda_summary(j)?;
    let z_norm = split.z_norm();
    let separation = if lam.lam2_plus < lam.lam1_minus {
        Some(lam.lam1_minus - lam.lam2_plus)
    } else if lam.lam1_plus < lam.lam2_minus {
        Some(lam.lam2_minus - lam.lam1_plus)
    } else {
        None
    }
    .map(|delta| {
        if z_norm <= delta / 2.0 {
            SeparationInfo { delta, all_real: true, refined_imag_bound: None }
        } else {
            SeparationInfo {
                delta,
                all_real: false,
                refined_imag_bound: Some((z_norm * z_norm - delta * delta / 4.0).sqrt()),
            }
        }
    });
    Ok(ZeroSumBounds {
        real_interval: [lam.lam_minus, lam.lam_plus],
        complex_re_interval: [lam.lam_under, lam.lam_over],
        imag_bound: z_norm,
        z_norm,
        separation,
        lambda: lam,
    })
}

/// Spectrum enclosure for potential-structured Jacobians: the spectrum is
/// real, with `min spec` in `min_interval` and `max spec` in `max_interval`,
/// widened from the block extremes by the coupling-dependent deltas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialBounds {
    pub outer_interval: [f64; 2],
    pub min_interval: [f64; 2],
    pub max_interval: [f64; 2],
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub p_norm: f64,
    pub spectrum_real: bool,
    /// Open interval guaranteed free of eigenvalues when the block spectra
    /// separate.
    pub gap: Option<[f64; 2]>,
    pub lambda: LambdaSummary,
}

fn potential_delta(p_norm: f64, gap: f64) -> f64 {
    if p_norm == 0.0 {
        0.0
    } else if gap <= COINCIDENT_GAP_TOL {
        // arctan diverges; tan(pi/4) = 1 in the limit
        p_norm
    } else {
        p_norm * (0.5 * (2.0 * p_norm / gap).atan()).tan()
    }
}

/// Spectrum enclosure for a potential-structured Jacobian.
pub fn potential_bounds(j: &GameJacobian) -> Result<PotentialBounds> {
    let split = split_potential_rotational(j);
    let z_norm = split.z_norm();
    if z_norm > structure_tol(j) {
        return Err(Error::StructureMismatch { expected: "potential", norm: z_norm });
    }
    let lam = lambda_summary(j)?;
    let p_norm = split.p_norm();
    let delta_minus = potential_delta(p_norm, (lam.lam1_minus - lam.lam2_minus).abs());
    let delta_plus = potential_delta(p_norm, (lam.lam1_plus - lam.lam2_plus).abs());
    let gap = if lam.lam2_plus < lam.lam1_minus {
        Some([lam.lam2_plus, lam.lam1_minus])
    } else if lam.lam1_plus < lam.lam2_minus {
        Some([lam.lam1_plus, lam.lam2_minus])
    } else {
        None
    };
    Ok(PotentialBounds {
        outer_interval: [lam.lam_minus - delta_minus, lam.lam_plus + delta_plus],
        min_interval: [lam.lam_minus - delta_minus, lam.lam_minus],
        max_interval: [lam.lam_plus, lam.lam_plus + delta_plus],
        delta_minus,
        delta_plus,
        p_norm,
        spectrum_real: true,
        gap,
        lambda: lam,
    })
}

/// A named yes/no conclusion with numeric witness data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub applicable: bool,
    pub holds: bool,
    pub witness: BTreeMap<String, f64>,
    pub note: Option<String>,
}

impl Certificate {
    fn inapplicable(name: &str, note: impl Into<String>) -> Self {
        Certificate {
            name: name.into(),
            applicable: false,
            holds: false,
            witness: BTreeMap::new(),
            note: Some(note.into()),
        }
    }
}

/// Learning-rate-ratio robustness for zero-sum structure: a differential
/// Nash equilibrium stays stable for every ratio `tau > 0`.
///
/// The witness spot-checks the trace/determinant signs of rate-scaled
/// compressions `[[a, z], [-tau conj(z), tau d]]` on sampled unit pairs:
/// `a + tau d < 0` and `tau (a d + |z|^2) > 0`.
pub fn zero_sum_robustness(j: &GameJacobian, tol: f64) -> Result<Certificate> {
    let split = split_potential_rotational(j);
    let p_norm = split.p_norm();
    if p_norm > structure_tol(j) {
        return Err(Error::StructureMismatch { expected: "zero-sum", norm: p_norm });
    }
    let nash = check_differential_nash(j, tol)?;
    let lam = lambda_summary(j)?;
    let mut witness = BTreeMap::new();
    let mut max_trace = f64::NEG_INFINITY;
    let mut min_det = f64::INFINITY;
    for draw in 0..16u64 {
        let (v, w) = unit_pair_for_draw(j.d1(), j.d2(), 0x5eed, draw);
        let c = crate::decomp::compress_to_2x2(j, &v, &w)?;
        for tau in [1e-3, 1.0, 1e3] {
            max_trace = max_trace.max(c.a + tau * c.d);
            min_det = min_det.min(tau * (c.a * c.d + c.z.norm_sqr()));
        }
    }
    witness.insert("max_sampled_trace".into(), max_trace);
    witness.insert("min_sampled_det".into(), min_det);
    witness.insert("lam1_plus".into(), lam.lam1_plus);
    witness.insert("lam2_plus".into(), lam.lam2_plus);
    Ok(Certificate {
        name: "zero_sum_robustness".into(),
        applicable: true,
        holds: nash,
        witness,
        note: (!nash).then(|| {
            "not a differential Nash equilibrium; stability under each ratio must be tested per tau"
                .into()
        }),
    })
}

/// Learning-rate-ratio robustness for potential structure: a differential
/// Nash equilibrium stays stable for every ratio `tau > 0` when the product
/// of the blocks' least-negative eigenvalues dominates the coupling Gram
/// matrix: `lam1_plus * lam2_plus > max spec(P^T P)`.
///
/// That product is `min |spec(-J11)| * min |spec(-J22)|`, the worst case of
/// `a d` over all compressions, so the determinant condition
/// `tau (a d - |p|^2) > 0` holds for every unit pair and every `tau`.
pub fn potential_robustness(j: &GameJacobian, tol: f64) -> Result<Certificate> {
    let split = split_potential_rotational(j);
    let z_norm = split.z_norm();
    if z_norm > structure_tol(j) {
        return Err(Error::StructureMismatch { expected: "potential", norm: z_norm });
    }
    let lam = lambda_summary(j)?;
    let nash = check_differential_nash(j, tol)?;
    if !nash {
        return Ok(Certificate::inapplicable(
            "potential_robustness",
            "not a differential Nash equilibrium",
        ));
    }
    let gram_max = {
        let n = split.p_norm();
        n * n
    };
    let block_product = lam.lam1_plus * lam.lam2_plus;
    let holds = block_product > gram_max + tol;
    let mut witness = BTreeMap::new();
    witness.insert("block_product".into(), block_product);
    witness.insert("gram_max".into(), gram_max);
    witness.insert("margin".into(), block_product - gram_max);
    Ok(Certificate {
        name: "potential_robustness".into(),
        applicable: true,
        holds,
        witness,
        note: None,
    })
}

/// Sufficient instability test from the rotated-sorted block form: the
/// spectrum leaves the open left half-plane whenever
/// `||Z2|| < (|max spec M-| + |min spec M+|) / 2 < |min spec M+|`
/// (both inequalities strict). Inapplicable when the symmetric part has no
/// positive eigenvalue; immediate when it is positive definite.
pub fn instability_certificate(j: &GameJacobian) -> Result<Certificate> {
    let form = rotated_block_form(&j.full())?;
    let mut witness = BTreeMap::new();
    witness.insert("k".into(), form.k as f64);
    if form.k == 0 {
        return Ok(Certificate {
            witness,
            ..Certificate::inapplicable(
                "instability",
                "symmetric part has no positive eigenvalue",
            )
        });
    }
    if form.k == form.dim() {
        witness.insert("min_sym_eigenvalue".into(), form.lambda_minus_mplus().unwrap_or(0.0));
        return Ok(Certificate {
            name: "instability".into(),
            applicable: true,
            holds: true,
            witness,
            note: Some(
                "symmetric part positive definite: every eigenvalue has positive real part".into(),
            ),
        });
    }
    let z2_norm = form.z2_norm();
    let lam_minus_mplus = form.lambda_minus_mplus().expect("k >= 1");
    let lam_plus_mminus = form.lambda_plus_mminus().expect("k < dim");
    let half_gap = 0.5 * (lam_plus_mminus.abs() + lam_minus_mplus.abs());
    let holds = z2_norm < half_gap && half_gap < lam_minus_mplus.abs();
    witness.insert("z2_norm".into(), z2_norm);
    witness.insert("half_gap".into(), half_gap);
    witness.insert("lam_minus_mplus".into(), lam_minus_mplus);
    witness.insert("lam_plus_mminus".into(), lam_plus_mminus);
    Ok(Certificate { name: "instability".into(), applicable: true, holds, witness, note: None })
}

/// Stability test for potential-structured Jacobians through the Schur
/// complement: with `J22` invertible, the fixed point is stable iff
/// `J11 - P J22^-1 P^T` is negative definite.
pub fn schur_stability(j: &GameJacobian, tol: f64) -> Result<bool> {
    let split = split_potential_rotational(j);
    let z_norm = split.z_norm();
    if z_norm > structure_tol(j) {
        return Err(Error::StructureMismatch { expected: "potential", norm: z_norm });
    }
    let svd = j.j22().clone().svd(false, false);
    let s_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let s_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if s_min <= 1e-12 * s_max.max(1.0) {
        return Err(Error::SingularSystem("J22 in the Schur complement test"));
    }
    let x = j
        .j22()
        .clone()
        .lu()
        .solve(&j.j12().transpose())
        .ok_or(Error::SingularSystem("J22 in the Schur complement test"))?;
    let schur = j.j11() - j.j12() * x;
    let schur = (&schur + schur.transpose()) * 0.5;
    let eig = symmetric_eig(&schur)?;
    Ok(eig.values[0] < -tol)
}

/// Coarse structural class of a game Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStructure {
    ZeroSum,
    Potential,
    GeneralSum,
}

/// Detect the structure class from the coupling split norms.
pub fn detect_structure(j: &GameJacobian) -> GameStructure {
    let split = split_potential_rotational(j);
    let tol = structure_tol(j);
    let p_small = split.p_norm() <= tol;
    let z_small = split.z_norm() <= tol;
    if z_small {
        // decoupled games (both small) admit a potential
        GameStructure::Potential
    } else if p_small {
        GameStructure::ZeroSum
    } else {
        GameStructure::GeneralSum
    }
}

/// Options for [`classify_equilibrium`].
#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    /// Max allowed `||g(x)||_inf` for `x` to count as a fixed point.
    pub fixed_point_tol: f64,
    /// Strictness of Hurwitz tests.
    pub hurwitz_tol: f64,
    /// Strictness of definiteness tests and certificate margins.
    pub certificate_tol: f64,
    /// Rate ratios at which `Lambda J` is tested for stability.
    pub tau_grid: Vec<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            fixed_point_tol: 1e-8,
            hurwitz_tol: DEFAULT_HURWITZ_TOL,
            certificate_tol: 1e-9,
            tau_grid: default_tau_grid(),
        }
    }
}

/// 25 log-spaced ratios covering `[1e-4, 1e4]`.
pub fn default_tau_grid() -> Vec<f64> {
    log_spaced(1e-4, 1e4, 25)
}

/// `n` log-spaced points from `lo` to `hi`, endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Stability verdict at one rate ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauStability {
    pub tau: f64,
    pub stable: bool,
}

/// Aggregate classification of a fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub is_differential_nash: bool,
    pub nash_status: NashStatus,
    pub is_stable: bool,
    pub stability_class: StabilityClass,
    pub is_stable_under_tau: Vec<TauStability>,
    pub lambda: LambdaSummary,
    pub structure: GameStructure,
    pub zero_sum_box: Option<ZeroSumBounds>,
    pub potential_intervals: Option<PotentialBounds>,
    pub certificates: Vec<Certificate>,
    pub fixed_point: Vec<f64>,
    pub residual: f64,
}

/// Classify the fixed point `x` of `field`: Nash and stability flags, the
/// per-ratio stability grid, structure-specific bound regions, and all
/// applicable certificates.
pub fn classify_equilibrium(
    field: &dyn GradientField,
    x: &JointAction,
    config: &ClassifyConfig,
) -> Result<EquilibriumReport> {
    let g = eval_gradient_field(field, x)?;
    let residual = g.amax();
    if residual > config.fixed_point_tol {
        return Err(Error::NotFixedPoint { residual });
    }
    let j = field.game_jacobian(x)?;
    let lambda = lambda_summary(&j)?;
    let status = nash_status(&j, config.certificate_tol)?;
    let spectrum = eigenvalues(&j.full())?;
    let structure = detect_structure(&j);

    let split = split_potential_rotational(&j);
    let tol = structure_tol(&j);
    let zero_sum_box = (split.p_norm() <= tol).then(|| zero_sum_bounds(&j)).transpose()?;
    let potential_intervals =
        (split.z_norm() <= tol).then(|| potential_bounds(&j)).transpose()?;

    let mut certificates = Vec::new();
    if split.p_norm() <= tol {
        certificates.push(zero_sum_robustness(&j, config.certificate_tol)?);
    }
    if split.z_norm() <= tol {
        certificates.push(potential_robustness(&j, config.certificate_tol)?);
        match schur_stability(&j, config.certificate_tol) {
            Ok(stable) => {
                let mut witness = BTreeMap::new();
                witness.insert("stable".into(), if stable { 1.0 } else { 0.0 });
                certificates.push(Certificate {
                    name: "schur_negative_definite".into(),
                    applicable: true,
                    holds: stable,
                    witness,
                    note: None,
                });
            }
            Err(Error::SingularSystem(_)) => {
                certificates.push(Certificate::inapplicable(
                    "schur_negative_definite",
                    "J22 is singular",
                ));
            }
            Err(e) => return Err(e),
        }
    }
    certificates.push(instability_certificate(&j)?);

    let mut is_stable_under_tau = Vec::with_capacity(config.tau_grid.len());
    for &tau in &config.tau_grid {
        let scaled = j.rate_scaled(tau);
        let spec = eigenvalues(&scaled)?;
        is_stable_under_tau.push(TauStability { tau, stable: is_hurwitz(&spec, config.hurwitz_tol) });
    }

    Ok(EquilibriumReport {
        is_differential_nash: status == NashStatus::Nash,
        nash_status: status,
        is_stable: is_hurwitz(&spectrum, config.hurwitz_tol),
        stability_class: stability_class(&spectrum, config.hurwitz_tol),
        is_stable_under_tau,
        lambda,
        structure,
        zero_sum_box,
        potential_intervals,
        certificates,
        fixed_point: x.stacked().iter().copied().collect(),
        residual,
    })
}

/// Convenience: is `Lambda J` Hurwitz at ratio `tau`?
pub fn rate_scaled_is_hurwitz(j: &GameJacobian, tau: f64, tol: f64) -> Result<bool> {
    Ok(is_hurwitz(&eigenvalues(&j.rate_scaled(tau))?, tol))
}
