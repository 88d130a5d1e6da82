//! Matrix-valued trigonometric polynomials `f(x) = Σ_n c_n e^{i n·x}` on the
//! side-2π torus, and band-limited sections. All operator applications reduce
//! to exact convolution arithmetic on these coefficient maps.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Result, SpectraError};
use crate::{C64, CMatrix, CVector, TORUS_PERIOD};

pub type Freq = Vec<i32>;

/// Matrix-valued trigonometric polynomial with finite Fourier support.
#[derive(Debug, Clone)]
pub struct TrigMatrixField {
    d: usize,
    r: usize,
    coeffs: BTreeMap<Freq, CMatrix>,
}

const DROP_TOL: f64 = 1e-300;

impl TrigMatrixField {
    pub fn zero(d: usize, r: usize) -> Self {
        Self { d, r, coeffs: BTreeMap::new() }
    }

    /// Constant field `x ↦ m`.
    pub fn constant(d: usize, m: CMatrix) -> Self {
        let r = m.nrows();
        let mut f = Self::zero(d, r);
        f.add_term(vec![0; d], m);
        f
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Freq, &CMatrix)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, n: &[i32]) -> CMatrix {
        self.coeffs.get(n).cloned().unwrap_or_else(|| CMatrix::zeros(self.r, self.r))
    }

    /// Mean value over the torus (the zero-frequency coefficient).
    pub fn mean(&self) -> CMatrix {
        self.coefficient(&vec![0; self.d])
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_frequency(&self) -> i32 {
        self.coeffs.keys().flat_map(|n| n.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    /// True iff the support is contained in the zero frequency.
    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|n| n.iter().all(|&v| v == 0))
    }

    pub fn add_term(&mut self, n: Freq, c: CMatrix) {
        assert_eq!(n.len(), self.d);
        assert_eq!(c.nrows(), self.r);
        assert_eq!(c.ncols(), self.r);
        let entry = self.coeffs.entry(n).or_insert_with(|| CMatrix::zeros(self.r, self.r));
        *entry += c;
        if entry.norm() < DROP_TOL {
            // keep map clean for is_constant / support checks
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.r, self.r);
        for (n, c) in &self.coeffs {
            let phase: f64 = n.iter().zip(x).map(|(&ni, &xi)| ni as f64 * xi).sum();
            let e = C64::new(0.0, phase).exp();
            out += c.map(|z| z * e);
        }
        out
    }

    /// Analytic partial derivative `∂_axis f`.
    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.d, self.r);
        for (n, c) in &self.coeffs {
            let factor = C64::new(0.0, n[axis] as f64);
            if factor.norm() == 0.0 {
                continue;
            }
            out.add_term(n.clone(), c.map(|z| z * factor));
        }
        out
    }

    /// Pointwise product (Fourier convolution).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d);
        assert_eq!(self.r, other.r);
        let mut out = Self::zero(self.d, self.r);
        for (n, a) in &self.coeffs {
            for (m, b) in &other.coeffs {
                let sum: Freq = n.iter().zip(m).map(|(&x, &y)| x + y).collect();
                out.add_term(sum, a * b);
            }
        }
        out.prune();
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.coeffs {
            out.add_term(n.clone(), c.clone());
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.map(|z| z * s);
        }
        out
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul(&self, m: &CMatrix) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = m * &*c;
        }
        out
    }

    /// Right multiplication by a constant matrix.
    pub fn right_mul(&self, m: &CMatrix) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = &*c * m;
        }
        out
    }

    /// Pointwise adjoint `f(x) ↦ f(x)†`, i.e. `c_n ↦ c_{-n}†`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.d, self.r);
        for (n, c) in &self.coeffs {
            let neg: Freq = n.iter().map(|&v| -v).collect();
            out.add_term(neg, c.adjoint());
        }
        out
    }

    /// Deviation from Hermitian-valuedness, `max_n ‖c_{-n}† - c_n‖`.
    pub fn hermitian_residual(&self) -> f64 {
        let adj = self.adjoint();
        let mut worst: f64 = 0.0;
        let mut keys: Vec<Freq> = self.coeffs.keys().cloned().collect();
        keys.extend(adj.coeffs.keys().cloned());
        keys.sort();
        keys.dedup();
        for n in keys {
            worst = worst.max((self.coefficient(&n) - adj.coefficient(&n)).norm());
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn norm_sup_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() > DROP_TOL);
    }

    /// Field depending on a single coordinate, with coefficients extracted
    /// from samples of `f` by discrete Fourier transform. Coefficients below
    /// `1e-15 · scale` are dropped; trigonometric accuracy of the uniform
    /// grid makes this exact to machine precision for analytic `f`.
    pub fn from_axis_function(
        d: usize,
        r: usize,
        axis: usize,
        f: impl Fn(f64) -> CMatrix,
        max_freq: usize,
    ) -> Self {
        let nsamp = (4 * (max_freq + 8)).next_power_of_two().max(256);
        let mut samples = Vec::with_capacity(nsamp);
        for i in 0..nsamp {
            let x = TORUS_PERIOD * i as f64 / nsamp as f64;
            samples.push(f(x));
        }
        let scale: f64 = samples.iter().map(|m| m.norm()).fold(0.0, f64::max);
        let mut out = Self::zero(d, r);
        for n in -(max_freq as i32)..=(max_freq as i32) {
            let mut c = CMatrix::zeros(r, r);
            for (i, s) in samples.iter().enumerate() {
                let x = TORUS_PERIOD * i as f64 / nsamp as f64;
                let e = C64::new(0.0, -(n as f64) * x).exp() / C64::new(nsamp as f64, 0.0);
                c += s.map(|z| z * e);
            }
            if c.norm() > 1e-15 * scale.max(1.0) {
                let mut freq = vec![0; d];
                freq[axis] = n;
                out.add_term(freq, c);
            }
        }
        out
    }
}

/// Band-limited section `s(x) = Σ_k s_k e^{i k·x}` with values in `C^r`.
#[derive(Debug, Clone)]
pub struct TrigSection {
    d: usize,
    r: usize,
    coeffs: BTreeMap<Freq, CVector>,
}

impl TrigSection {
    pub fn zero(d: usize, r: usize) -> Self {
        Self { d, r, coeffs: BTreeMap::new() }
    }

    /// Single plane wave `e^{i k·x} v`.
    pub fn plane_wave(k: Freq, v: CVector) -> Self {
        let d = k.len();
        let r = v.len();
        let mut s = Self::zero(d, r);
        s.add_term(k, v);
        s
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Freq, &CVector)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, k: &[i32]) -> CVector {
        self.coeffs.get(k).cloned().unwrap_or_else(|| CVector::zeros(self.r))
    }

    pub fn add_term(&mut self, k: Freq, v: CVector) {
        assert_eq!(k.len(), self.d);
        assert_eq!(v.len(), self.r);
        let entry = self.coeffs.entry(k).or_insert_with(|| CVector::zeros(self.r));
        *entry += v;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = v.map(|z| z * s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = Self::zero(self.d, self.r);
        for (k, v) in &self.coeffs {
            let factor = C64::new(0.0, k[axis] as f64);
            if factor.norm() == 0.0 {
                continue;
            }
            out.add_term(k.clone(), v.map(|z| z * factor));
        }
        out
    }

    /// Left action of a constant matrix.
    pub fn matrix_apply(&self, m: &CMatrix) -> Self {
        let mut out = Self::zero(self.d, self.r);
        for (k, v) in &self.coeffs {
            out.add_term(k.clone(), m * v);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> CVector {
        let mut out = CVector::zeros(self.r);
        for (k, v) in &self.coeffs {
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
            out += v.map(|z| z * C64::new(0.0, phase).exp());
        }
        out
    }

    /// `L²` inner product `⟨u, v⟩ = ∫ v† u dx = (2π)^d Σ_k v_k† u_k`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.d, other.d);
        let vol = TORUS_PERIOD.powi(self.d as i32);
        let mut acc = C64::new(0.0, 0.0);
        for (k, u) in &self.coeffs {
            let v = other.coefficient(k);
            acc += v.dotc(u) * C64::new(vol, 0.0);
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Random section with uniform coefficients on frequencies `|k|_∞ ≤ max_freq`.
    pub fn random(rng: &mut impl Rng, d: usize, r: usize, max_freq: i32) -> Self {
        let mut s = Self::zero(d, r);
        let mut k = vec![-max_freq; d];
        loop {
            let v = DVector::from_fn(r, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            s.add_term(k.clone(), v);
            // odometer
            let mut axis = 0;
            loop {
                if axis == d {
                    return s;
                }
                k[axis] += 1;
                if k[axis] <= max_freq {
                    break;
                }
                k[axis] = -max_freq;
                axis += 1;
            }
        }
    }
}

/// Apply a matrix field to a section (exact Fourier convolution).
pub fn field_apply(f: &TrigMatrixField, s: &TrigSection) -> Result<TrigSection> {
    if f.rank() != s.rank() || f.dim() != s.dim() {
        return Err(SpectraError::ShapeMismatch {
            expected: format!("field {}d rank {}", s.dim(), s.rank()),
            got: format!("field {}d rank {}", f.dim(), f.rank()),
        });
    }
    let mut out = TrigSection::zero(s.dim(), s.rank());
    for (n, c) in f.coefficients() {
        for (k, v) in s.coefficients() {
            let sum: Freq = n.iter().zip(k).map(|(&a, &b)| a + b).collect();
            out.add_term(sum, c * v);
        }
    }
    Ok(out)
}
