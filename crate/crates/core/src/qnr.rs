//! Sampling estimators for the numerical range W(J) and the quadratic
//! numerical range W2(J).
//!
//! Both sets contain the spectrum; W2 is the tighter (generally non-convex)
//! enclosure, swept out by the eigenvalues of the 2x2 compressions of `J`
//! onto complex unit pairs. The estimators here sample those sets: they
//! under-approximate, so a large eigenvalue-to-cloud distance flags
//! under-sampling, never refutes containment.
//!
//! Sampling is deterministic: draw `i` of seed `s` uses its own ChaCha
//! stream, so estimates are refinable (the first `n` draws of a seed never
//! change) and independent of evaluation order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::decomp::compress_to_2x2;
use crate::error::{Error, Result};
use crate::game::GameJacobian;
use crate::spectral::eigenvalues;

/// Default number of (v, w) draws.
pub const DEFAULT_SAMPLES: usize = 5000;

/// Stream offset separating numerical-range draws from quadratic-range draws.
const NR_STREAM_BASE: u64 = 1 << 63;

fn draw_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_complex_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// The unit pair used for quadratic-range draw `index` of `seed`.
/// Re-deriving a draw is how tests audit individual sampled points.
pub fn unit_pair_for_draw(
    d1: usize,
    d2: usize,
    seed: u64,
    index: u64,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let mut rng = draw_rng(seed, index);
    let v = random_complex_unit(&mut rng, d1);
    let w = random_complex_unit(&mut rng, d2);
    (v, w)
}

/// The unit vector used for numerical-range draw `index` of `seed`.
pub fn unit_vector_for_draw(dim: usize, seed: u64, index: u64) -> DVector<Complex64> {
    let mut rng = draw_rng(seed, NR_STREAM_BASE | index);
    random_complex_unit(&mut rng, dim)
}

/// Axis-aligned hull of a sampled point cloud. The imaginary extent is
/// reported as a magnitude (the hull is symmetric about the real axis for
/// spectra of real matrices).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QnrBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_abs_min: f64,
    pub im_abs_max: f64,
}

impl QnrBox {
    fn hull(points: &[Complex64]) -> Self {
        let mut re_min = f64::INFINITY;
        let mut re_max = f64::NEG_INFINITY;
        let mut im_abs_max = 0.0f64;
        for z in points {
            re_min = re_min.min(z.re);
            re_max = re_max.max(z.re);
            im_abs_max = im_abs_max.max(z.im.abs());
        }
        QnrBox { re_min, re_max, im_abs_min: 0.0, im_abs_max }
    }
}

/// A sampled estimate of W2(J) (and W(J)).
#[derive(Debug, Clone)]
pub struct QnrEstimate {
    /// Both roots of each compressed 2x2, 2*samples points.
    pub points: Vec<Complex64>,
    /// Rayleigh points `<J x, x>` of W(J), `samples` points.
    pub nr_points: Vec<Complex64>,
    pub samples: usize,
    pub seed: u64,
    pub bounding_box: QnrBox,
}

/// Sample the quadratic numerical range of `j` with `n >= 1` unit pairs.
pub fn sample_qnr(j: &GameJacobian, n: usize, seed: u64) -> Result<QnrEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (v, w) = unit_pair_for_draw(j.d1(), j.d2(), seed, i as u64);
        let compressed = compress_to_2x2(j, &v, &w)?;
        let (l1, l2) = compressed.eigenvalues();
        points.push(l1);
        points.push(l2);
    }
    let nr_points = sample_numerical_range(&j.full(), n, seed)?;
    let bounding_box = QnrBox::hull(&points);
    Ok(QnrEstimate { points, nr_points, samples: n, seed, bounding_box })
}

/// Sample the numerical range `{ <M x, x> : ||x|| = 1 }` of a square matrix.
pub fn sample_numerical_range(m: &DMatrix<f64>, n: usize, seed: u64) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "sample_numerical_range",
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let dim = m.nrows();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = unit_vector_for_draw(dim, seed, i as u64);
        let mx = DVector::from_fn(dim, |r, _| {
            (0..dim).map(|c| x[c] * m[(r, c)]).sum::<Complex64>()
        });
        let val: Complex64 = x.iter().zip(mx.iter()).map(|(xi, yi)| xi.conj() * yi).sum();
        out.push(val);
    }
    Ok(out)
}

/// Distance diagnostics from each eigenvalue of `j` to the sampled W2 cloud.
#[derive(Debug, Clone, Serialize)]
pub struct ContainmentEntry {
    pub re: f64,
    pub im: f64,
    pub distance: f64,
    pub under_sampled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainmentReport {
    pub entries: Vec<ContainmentEntry>,
    pub tol: f64,
    pub max_distance: f64,
}

impl ContainmentReport {
    pub fn all_within_tol(&self) -> bool {
        self.entries.iter().all(|e| !e.under_sampled)
    }
}

/// For each eigenvalue of `j`, the distance to the nearest sampled W2
/// point. Eigenvalues farther than `tol` are flagged as under-sampled.
pub fn containment_check(
    j: &GameJacobian,
    estimate: &QnrEstimate,
    tol: f64,
) -> Result<ContainmentReport> {
    if estimate.points.is_empty() {
        return Err(Error::InvalidInput("estimate contains no sampled points".into()));
    }
    let spectrum = eigenvalues(&j.full())?;
    let mut entries = Vec::with_capacity(spectrum.len());
    let mut max_distance = 0.0f64;
    for lam in &spectrum.eigenvalues {
        let distance = estimate
            .points
            .iter()
            .map(|p| (p - lam).norm())
            .fold(f64::INFINITY, f64::min);
        max_distance = max_distance.max(distance);
        entries.push(ContainmentEntry {
            re: lam.re,
            im: lam.im,
            distance,
            under_sampled: distance > tol,
        });
    }
    Ok(ContainmentReport { entries, tol, max_distance })
}
