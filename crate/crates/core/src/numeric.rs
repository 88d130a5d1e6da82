//! Shared numerical utilities: quadrature nodes, weighted least squares,
//! deterministic per-module RNG streams.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpectraError};

pub use statrs::function::gamma::gamma;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| t * half).collect(),
    )
}

/// Outcome of a weighted least-squares solve.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub coefficients: Vec<f64>,
    /// 1-sigma uncertainties from the residual covariance.
    pub uncertainties: Vec<f64>,
    /// rms of the weighted residual.
    pub residual: f64,
    /// Condition number of the weighted design matrix.
    pub condition: f64,
}

/// Solve `min ||W^(1/2) (X c - y)||` by SVD and propagate the residual
/// covariance into per-coefficient uncertainties.
pub fn weighted_least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>, weights: &[f64]) -> Result<LsSolution> {
    let (n, p) = design.shape();
    assert_eq!(n, rhs.len());
    assert_eq!(n, weights.len());
    if n < p {
        return Err(SpectraError::Invalid(format!(
            "least squares needs at least {p} samples, got {n}"
        )));
    }
    let mut xw = design.clone();
    let mut yw = rhs.clone();
    for i in 0..n {
        let s = weights[i].sqrt();
        for j in 0..p {
            xw[(i, j)] *= s;
        }
        yw[i] *= s;
    }
    let svd = xw.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let coef = svd
        .solve(&yw, smax * 1e-14)
        .map_err(|e| SpectraError::Invalid(format!("svd solve failed: {e}")))?;
    let fitted = &xw * &coef;
    let resid = (&yw - &fitted).norm() / (n as f64).sqrt();
    // Covariance (X^T W X)^{-1} scaled by residual variance.
    let xtx = xw.transpose() * &xw;
    let dof = (n.saturating_sub(p)).max(1) as f64;
    let sigma2 = (&yw - &fitted).norm_squared() / dof;
    let unc = match xtx.try_inverse() {
        Some(inv) => (0..p).map(|j| (sigma2 * inv[(j, j)].max(0.0)).sqrt()).collect(),
        None => vec![f64::NAN; p],
    };
    Ok(LsSolution {
        coefficients: coef.iter().copied().collect(),
        uncertainties: unc,
        residual: resid,
        condition,
    })
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-label RNG stream derived from one global seed, so adding
/// a consumer does not perturb the draws of the others.
pub fn labeled_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mixed = splitmix(seed ^ splitmix(fnv1a(label.as_bytes())));
    ChaCha8Rng::seed_from_u64(mixed)
}
