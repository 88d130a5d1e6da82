//! Spectral resolutions of Dirac operators on the torus: exact per-mode
//! diagonalization for constant coefficients (the plane wave `e^{ik·x} v`
//! reduces `D` to the Hermitian matrix `d(k) = i γ^j k_j + C`), and dense
//! Fourier–Galerkin truncation otherwise.

use rayon::prelude::*;

use crate::error::{Result, SpectraError};
use crate::fields::{Freq, TrigMatrixField, TrigSection};
use crate::operators::DiracOperatorSpec;
use crate::{C64, CMatrix, CVector, TORUS_PERIOD};

/// Where the eigendata came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralSource {
    ExactModes,
    Galerkin { k_basis: i32 },
}

/// One eigenpair record. For exact modes `k` is the lattice frequency; for
/// Galerkin data it is the dominant basis frequency (a diagnostic tag).
#[derive(Debug, Clone)]
pub struct EigRecord {
    pub mu: f64,
    pub k: Freq,
}

/// Eigenvalue/eigenvector data of a self-adjoint Dirac operator.
#[derive(Debug, Clone)]
pub struct SpectralData {
    d: usize,
    r: usize,
    records: Vec<EigRecord>,
    /// Flattened eigenvectors, `records.len() * vec_dim` entries.
    vectors: Vec<C64>,
    vec_dim: usize,
    /// Galerkin basis frequencies (empty for exact modes).
    basis: Vec<Freq>,
    cutoff: f64,
    trust_cutoff: f64,
    source: SpectralSource,
}

/// Default limit on the dense eigenproblem size.
pub const DEFAULT_EIGENSIZE_LIMIT: usize = 4200;

/// Hermiticity tolerance for per-mode matrices and assembled Galerkin
/// matrices.
const HERMITIAN_TOL: f64 = 1e-8;

/// Degeneracy grouping tolerance `1e-9 · (1 + |μ|)`: lattice degeneracies are
/// exact, numerical splits are roundoff-sized.
pub fn grouping_tol(mu: f64) -> f64 {
    1e-9 * (1.0 + mu.abs())
}

/// All eigenpairs of the per-mode matrices `d(k)` over every lattice `k`
/// needed to cover `|μ| ≤ cutoff` (conservative bound `|k| ≤ cutoff + ‖C‖`).
pub fn exact_modes(spec: &DiracOperatorSpec, cutoff: f64) -> Result<SpectralData> {
    if !spec.is_constant_coefficient() {
        return Err(SpectraError::NonConstantOperator);
    }
    let d = spec.dimension();
    let r = spec.rank();
    let c = spec.constant_matrix()?;
    let herm_res = (&c - c.adjoint()).norm();
    if herm_res > HERMITIAN_TOL * c.norm().max(1.0) {
        return Err(SpectraError::NotHermitian { residual: herm_res, tol: HERMITIAN_TOL });
    }
    let c_opnorm = hermitian_opnorm(&c);
    let radius = cutoff + c_opnorm;
    let lattice = lattice_ball(d, radius);

    let mut entries: Vec<(EigRecord, CVector)> = lattice
        .par_iter()
        .flat_map_iter(|k| {
            let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
            let m = spec.mode_matrix(&kf).expect("constant spec");
            let eig = nalgebra::SymmetricEigen::new(m);
            let mut out = Vec::with_capacity(r);
            for j in 0..r {
                let mu = eig.eigenvalues[j];
                if mu.abs() <= cutoff {
                    let v = eig.eigenvectors.column(j).into_owned();
                    out.push((EigRecord { mu, k: k.clone() }, v));
                }
            }
            out
        })
        .collect();
    entries.sort_by(|a, b| {
        a.0.mu
            .partial_cmp(&b.0.mu)
            .unwrap()
            .then_with(|| a.0.k.cmp(&b.0.k))
    });

    let mut records = Vec::with_capacity(entries.len());
    let mut vectors = Vec::with_capacity(entries.len() * r);
    for (rec, v) in entries {
        records.push(rec);
        vectors.extend(v.iter().copied());
    }
    Ok(SpectralData {
        d,
        r,
        records,
        vectors,
        vec_dim: r,
        basis: Vec::new(),
        cutoff,
        trust_cutoff: cutoff,
        source: SpectralSource::ExactModes,
    })
}

/// Dense Hermitian eigendecomposition of `D` restricted to
/// `span{e^{ik·x} e_α : |k|_∞ ≤ k_basis}`. The trust cutoff is `k_basis/2`:
/// coefficient convolution couples modes within the operator bandwidth and
/// corrupts the spectral edge.
pub fn galerkin(spec: &DiracOperatorSpec, k_basis: i32, size_limit: usize) -> Result<SpectralData> {
    let d = spec.dimension();
    let r = spec.rank();
    let basis = lattice_box(d, k_basis);
    let n = basis.len() * r;
    if n > size_limit {
        return Err(SpectraError::EigensizeLimit { size: n, limit: size_limit });
    }
    let adj = spec.adjoint_residual(4, 0)?;
    if adj > HERMITIAN_TOL {
        return Err(SpectraError::NotSelfAdjoint(adj));
    }

    let h = assemble_galerkin(spec, &basis);
    let herm_res = (&h - h.adjoint()).norm();
    if herm_res > HERMITIAN_TOL * h.norm().max(1.0) {
        return Err(SpectraError::NotHermitian { residual: herm_res, tol: HERMITIAN_TOL });
    }
    let h = (&h + h.adjoint()).map(|z| z * C64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut records = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        let col = eig.eigenvectors.column(j);
        // dominant basis frequency as tag
        let mut best = 0usize;
        let mut best_w = -1.0f64;
        for (b, _) in basis.iter().enumerate() {
            let w: f64 = (0..r).map(|al| col[b * r + al].norm_sqr()).sum();
            if w > best_w {
                best_w = w;
                best = b;
            }
        }
        records.push(EigRecord { mu: eig.eigenvalues[j], k: basis[best].clone() });
        vectors.extend(col.iter().copied());
    }
    Ok(SpectralData {
        d,
        r,
        records,
        vectors,
        vec_dim: n,
        basis,
        cutoff: f64::INFINITY,
        trust_cutoff: k_basis as f64 / 2.0,
        source: SpectralSource::Galerkin { k_basis },
    })
}

/// Galerkin matrix of `D` over the given plane-wave basis. Block
/// `H_{k,k'} = i Σ_l k'_l c(a_l)_{k-k'} + c(Σ_l a_l b_l + ψ)_{k-k'}`.
pub fn assemble_galerkin(spec: &DiracOperatorSpec, basis: &[Freq]) -> CMatrix {
    let d = spec.dimension();
    let r = spec.rank();
    let n = basis.len() * r;
    let leading: Vec<TrigMatrixField> = (0..d).map(|l| spec.gamma_coefficient(l)).collect();
    let zeroth = spec.zeroth_order_field();
    let mut h = CMatrix::zeros(n, n);
    for (col, kp) in basis.iter().enumerate() {
        for (row, k) in basis.iter().enumerate() {
            let diff: Freq = k.iter().zip(kp).map(|(&a, &b)| a - b).collect();
            let mut block = zeroth.coefficient(&diff);
            for l in 0..d {
                let cl = leading[l].coefficient(&diff);
                if cl.norm() > 0.0 {
                    block += cl.map(|z| z * C64::new(0.0, kp[l] as f64));
                }
            }
            if block.norm() == 0.0 {
                continue;
            }
            for a in 0..r {
                for b in 0..r {
                    h[(row * r + a, col * r + b)] = block[(a, b)];
                }
            }
        }
    }
    h
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EigRecord] {
        &self.records
    }

    pub fn source(&self) -> &SpectralSource {
        &self.source
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn trust_cutoff(&self) -> f64 {
        self.trust_cutoff
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.mu)
    }

    fn vector(&self, j: usize) -> &[C64] {
        &self.vectors[j * self.vec_dim..(j + 1) * self.vec_dim]
    }

    /// Is record `j` beyond the trust cutoff (Galerkin edge)?
    pub fn is_flagged(&self, j: usize) -> bool {
        self.records[j].mu.abs() > self.trust_cutoff
    }

    /// Matrix elements `⟨F φ_j, φ_j⟩` (real parts; real for Hermitian `F`).
    /// For exact modes only the zero-frequency coefficient of `F` survives
    /// the `x`-integral; for Galerkin data the full quadratic form in the
    /// truncated basis is taken.
    pub fn matrix_elements(&self, f: &TrigMatrixField) -> Result<Vec<f64>> {
        if f.rank() != self.r || f.dim() != self.d {
            return Err(SpectraError::ShapeMismatch {
                expected: format!("{}d rank {}", self.d, self.r),
                got: format!("{}d rank {}", f.dim(), f.rank()),
            });
        }
        match self.source {
            SpectralSource::ExactModes => {
                let f0 = f.mean();
                Ok((0..self.len())
                    .map(|j| quad_form(&f0, self.vector(j)).re)
                    .collect())
            }
            SpectralSource::Galerkin { .. } => {
                let blocks: Vec<(usize, usize, CMatrix)> = {
                    let mut v = Vec::new();
                    for (row, k) in self.basis.iter().enumerate() {
                        for (col, kp) in self.basis.iter().enumerate() {
                            let diff: Freq = k.iter().zip(kp).map(|(&a, &b)| a - b).collect();
                            let c = f.coefficient(&diff);
                            if c.norm() > 0.0 {
                                v.push((row, col, c));
                            }
                        }
                    }
                    v
                };
                let weights: Vec<f64> = (0..self.len())
                    .into_par_iter()
                    .map(|j| {
                        let x = self.vector(j);
                        let mut acc = C64::new(0.0, 0.0);
                        for (row, col, c) in &blocks {
                            for a in 0..self.r {
                                for b in 0..self.r {
                                    acc += x[row * self.r + a].conj() * c[(a, b)] * x[col * self.r + b];
                                }
                            }
                        }
                        acc.re
                    })
                    .collect();
                Ok(weights)
            }
        }
    }

    /// Weights summed within degeneracy groups; only these sums are
    /// basis-independent inside degenerate eigenspaces.
    pub fn grouped_weights(&self, weights: &[f64]) -> Vec<WeightGroup> {
        assert_eq!(weights.len(), self.len());
        let mut out: Vec<WeightGroup> = Vec::new();
        for (j, rec) in self.records.iter().enumerate() {
            match out.last_mut() {
                Some(g) if (rec.mu - g.mu).abs() < grouping_tol(g.mu) => {
                    g.total += weights[j];
                    g.count += 1;
                }
                _ => out.push(WeightGroup { mu: rec.mu, total: weights[j], count: 1 }),
            }
        }
        out
    }

    /// Local spectral densities `Φ_j(x) = φ_j(x) φ_j(x)†` with normalized
    /// sections `φ_j = e^{ik·x} v / (2π)^{d/2}`.
    pub fn local_density(&self, x: &[f64]) -> Vec<CMatrix> {
        (0..self.len())
            .map(|j| {
                let phi = self.section_value(j, x);
                CMatrix::from_fn(self.r, self.r, |a, b| phi[a] * phi[b].conj())
            })
            .collect()
    }

    /// Value of the normalized eigensection `φ_j` at `x`.
    pub fn section_value(&self, j: usize, x: &[f64]) -> CVector {
        let norm = TORUS_PERIOD.powf(self.d as f64 / 2.0);
        match &self.source {
            SpectralSource::ExactModes => {
                let rec = &self.records[j];
                let phase: f64 = rec.k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                let e = C64::new(0.0, phase).exp() / C64::new(norm, 0.0);
                CVector::from_iterator(self.r, self.vector(j).iter().map(|&c| c * e))
            }
            SpectralSource::Galerkin { .. } => {
                let xcoef = self.vector(j);
                let mut v = CVector::zeros(self.r);
                for (b, k) in self.basis.iter().enumerate() {
                    let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                    let e = C64::new(0.0, phase).exp() / C64::new(norm, 0.0);
                    for a in 0..self.r {
                        v[a] += xcoef[b * self.r + a] * e;
                    }
                }
                v
            }
        }
    }

    /// `Σ_j w_j g(μ_j)` for a user function of the eigenvalue. Summation is
    /// chunk-ordered so results are bit-identical across thread counts.
    pub fn smoothed_trace(&self, weights: &[f64], g: impl Fn(f64) -> f64 + Sync) -> f64 {
        assert_eq!(weights.len(), self.len());
        let chunks: Vec<f64> = self
            .records
            .par_chunks(4096)
            .zip(weights.par_chunks(4096))
            .map(|(rs, ws)| rs.iter().zip(ws).map(|(rec, &w)| w * g(rec.mu)).sum::<f64>())
            .collect();
        chunks.iter().sum()
    }

    /// Heat trace `Σ_j w_j e^{-t μ_j²}` (the trace of `F e^{-t D²}`).
    pub fn heat_trace(&self, weights: &[f64], t: f64) -> f64 {
        self.smoothed_trace(weights, |mu| (-t * mu * mu).exp())
    }

    /// Signed heat trace `Σ_j w_j μ_j e^{-t μ_j²}` (the trace of `F D e^{-t D²}`).
    pub fn signed_heat_trace(&self, weights: &[f64], t: f64) -> f64 {
        self.smoothed_trace(weights, |mu| mu * (-t * mu * mu).exp())
    }

    /// Resolvent trace `Σ_j w_j (1 + t μ_j²)^{-N/2}`.
    pub fn resolvent_trace(&self, weights: &[f64], t: f64, n_power: f64) -> f64 {
        self.smoothed_trace(weights, |mu| (1.0 + t * mu * mu).powf(-n_power / 2.0))
    }

    /// Empirical spectral density at the cutoff edge (records per unit `μ`,
    /// counting both signs, in `[Λ-1, Λ]`); used for truncation-tail
    /// estimates.
    pub fn edge_density(&self) -> f64 {
        let hi = self.trust_cutoff.min(self.cutoff);
        let lo = hi - 1.0;
        self.records.iter().filter(|r| r.mu.abs() > lo && r.mu.abs() <= hi).count() as f64
    }

    /// Estimated truncation tail `Σ_{|μ|>Λ} e^{-tμ²}` from the edge density
    /// with Weyl growth `(μ/Λ)^{d-1}`.
    pub fn heat_tail_estimate(&self, t: f64) -> f64 {
        let lam = self.trust_cutoff.min(self.cutoff);
        let rho = self.edge_density();
        let width = (15.0 / (2.0 * t * lam)).clamp(1.0, 40.0 * lam);
        let (nodes, w) = crate::numeric::gauss_legendre_on(48, lam, lam + width);
        let int: f64 = nodes
            .iter()
            .zip(&w)
            .map(|(&mu, &wi)| wi * (mu / lam).powi(self.d as i32 - 1) * (-t * mu * mu).exp())
            .sum();
        rho * int
    }

    /// Estimated truncation tail for the resolvent weight `(1 + tμ²)^{-N/2}`
    /// (requires `N > d` for convergence).
    pub fn resolvent_tail_estimate(&self, t: f64, n_power: f64) -> f64 {
        let lam = self.trust_cutoff.min(self.cutoff);
        let rho = self.edge_density();
        // substitute μ = Λ/s, s ∈ (0, 1]
        let (nodes, w) = crate::numeric::gauss_legendre_on(64, 1e-9, 1.0);
        let int: f64 = nodes
            .iter()
            .zip(&w)
            .map(|(&s, &wi)| {
                let mu = lam / s;
                wi * lam / (s * s) * (mu / lam).powi(self.d as i32 - 1)
                    * (1.0 + t * mu * mu).powf(-n_power / 2.0)
            })
            .sum();
        rho * int
    }

    /// Parseval completeness residual
    /// `|Σ_j |⟨s, φ_j⟩|² - ‖s‖²| / ‖s‖²` for a band-limited test section.
    pub fn parseval_residual(&self, s: &TrigSection) -> f64 {
        let vol = TORUS_PERIOD.powi(self.d as i32);
        let mut acc = 0.0;
        match &self.source {
            SpectralSource::ExactModes => {
                for j in 0..self.len() {
                    let rec = &self.records[j];
                    let sk = s.coefficient(&rec.k);
                    let v = self.vector(j);
                    let mut ip = C64::new(0.0, 0.0);
                    for a in 0..self.r {
                        ip += v[a].conj() * sk[a];
                    }
                    acc += ip.norm_sqr() * vol;
                }
            }
            SpectralSource::Galerkin { .. } => {
                for j in 0..self.len() {
                    let x = self.vector(j);
                    let mut ip = C64::new(0.0, 0.0);
                    for (b, k) in self.basis.iter().enumerate() {
                        let sk = s.coefficient(k);
                        for a in 0..self.r {
                            ip += x[b * self.r + a].conj() * sk[a];
                        }
                    }
                    acc += ip.norm_sqr() * vol;
                }
            }
        }
        let n2 = s.norm().powi(2);
        (acc - n2).abs() / n2
    }

    /// CSV rows `(mu, k1..kd, weight)`.
    pub fn to_csv(&self, weights: &[f64]) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# spectral data: {} records, cutoff {:.6}, trust {:.6}\n",
            self.len(),
            self.cutoff,
            self.trust_cutoff
        ));
        let ks: Vec<String> = (1..=self.d).map(|i| format!("k{i}")).collect();
        out.push_str(&format!("mu,{},weight\n", ks.join(",")));
        for (j, rec) in self.records.iter().enumerate() {
            let kcols: Vec<String> = rec.k.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{:.16e},{},{:.16e}\n",
                rec.mu,
                kcols.join(","),
                weights.get(j).copied().unwrap_or(f64::NAN)
            ));
        }
        out
    }

    /// The data of `-D`: eigenvalues flip sign, eigenvectors are unchanged.
    pub fn negated(&self) -> Self {
        let n = self.records.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            (-self.records[a].mu)
                .partial_cmp(&(-self.records[b].mu))
                .unwrap()
                .then_with(|| self.records[a].k.cmp(&self.records[b].k))
        });
        let mut records = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(self.vectors.len());
        for &j in &order {
            let mut rec = self.records[j].clone();
            rec.mu = -rec.mu;
            records.push(rec);
            vectors.extend_from_slice(self.vector(j));
        }
        Self { records, vectors, ..self.clone() }
    }
}

/// Group-summed weight over a degeneracy class.
#[derive(Debug, Clone, Copy)]
pub struct WeightGroup {
    pub mu: f64,
    pub total: f64,
    pub count: usize,
}

fn quad_form(m: &CMatrix, v: &[C64]) -> C64 {
    let r = m.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..r {
        for b in 0..r {
            acc += v[a].conj() * m[(a, b)] * v[b];
        }
    }
    acc
}

/// Operator norm of a Hermitian matrix (max |eigenvalue|).
pub fn hermitian_opnorm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.norm() == 0.0 {
        return 0.0;
    }
    let h = (m + m.adjoint()).map(|z| z * C64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Lattice points with `|k|₂ ≤ radius`, lexicographic order.
pub fn lattice_ball(d: usize, radius: f64) -> Vec<Freq> {
    let rmax = radius.floor() as i32;
    let r2 = radius * radius;
    lattice_box(d, rmax)
        .into_iter()
        .filter(|k| {
            let n2: f64 = k.iter().map(|&v| (v as f64) * (v as f64)).sum();
            n2 <= r2
        })
        .collect()
}

/// Lattice box `|k|_∞ ≤ kmax`, lexicographic order.
pub fn lattice_box(d: usize, kmax: i32) -> Vec<Freq> {
    let mut out = Vec::new();
    let mut k = vec![-kmax; d];
    'outer: loop {
        out.push(k.clone());
        // lexicographic odometer, last axis fastest
        let mut axis = d;
        loop {
            if axis == 0 {
                break 'outer;
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] <= kmax {
                break;
            }
            k[axis] = -kmax;
            if axis == 0 {
                break 'outer;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordModule;
    use crate::numeric::labeled_rng;
    use crate::operators::DiracOperatorSpec;

    fn free_spec(d: usize) -> DiracOperatorSpec {
        DiracOperatorSpec::free(CliffordModule::build(d).unwrap())
    }

    #[test]
    fn lattice_enumeration_counts() {
        assert_eq!(lattice_ball(2, 1.0).len(), 5);
        assert_eq!(lattice_ball(3, 1.5).len(), 19);
        assert_eq!(lattice_box(3, 1).len(), 27);
        let l = lattice_box(2, 1);
        assert_eq!(l[0], vec![-1, -1]);
        assert_eq!(l[8], vec![1, 1]);
    }

    #[test]
    fn free_dirac_exact_modes() {
        let spec = free_spec(3);
        let s = exact_modes(&spec, 3.0).unwrap();
        let zeros = s.records().iter().filter(|r| r.mu.abs() < 1e-12).count();
        assert_eq!(zeros, 2, "k = 0 contributes μ = 0 twice");
        for rec in s.records() {
            let norm: f64 = rec.k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            assert!((rec.mu.abs() - norm).abs() < 1e-12, "eigenvalue ±|k|");
        }
        // chiral symmetry: multiset symmetric under negation
        let mus: Vec<f64> = s.eigenvalues().collect();
        let mut neg: Vec<f64> = mus.iter().map(|&m| -m).collect();
        neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in mus.iter().zip(neg.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_shift_moves_eigenvalues() {
        let m = CliffordModule::build(3).unwrap();
        let c = 0.3;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let s = exact_modes(&spec, 3.0).unwrap();
        for rec in s.records() {
            let norm: f64 = rec.k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            let d1 = (rec.mu - (norm + c)).abs();
            let d2 = (rec.mu - (-norm + c)).abs();
            assert!(d1.min(d2) < 1e-12, "eigenvalue ±|k| + c");
        }
    }

    #[test]
    fn eigenvalue_count_matches_lattice_count() {
        // #{0 ≤ μ < μ0} for the free operator: one +|k| eigenvalue per
        // k ≠ 0 with |k| < μ0, plus the two zero modes.
        let spec = free_spec(3);
        let mu0 = 4.2;
        let s = exact_modes(&spec, 6.0).unwrap();
        let count = s.records().iter().filter(|r| r.mu >= 0.0 && r.mu < mu0).count();
        let brute = lattice_ball(3, mu0 - 1e-9).len() - 1 + 2;
        assert_eq!(count, brute);
    }

    #[test]
    fn exact_modes_rejects_non_hermitian() {
        let m = CliffordModule::build(3).unwrap();
        // ψ = c γ¹ is anti-Hermitian: d(k) fails the Hermiticity gate
        let psi = m.gamma(0).map(|z| z * C64::new(0.3, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        assert!(matches!(exact_modes(&spec, 2.0), Err(SpectraError::NotHermitian { .. })));
    }

    #[test]
    fn matrix_element_weights() {
        let spec = free_spec(3);
        let s = exact_modes(&spec, 2.5).unwrap();
        let id = TrigMatrixField::constant(3, CMatrix::identity(2, 2));
        let w = s.matrix_elements(&id).unwrap();
        for &wi in &w {
            assert!((wi - 1.0).abs() < 1e-12, "F = Id gives weight 1");
        }
        // F = diag(1, 0): the two eigenvector weights per lattice mode sum
        // to Tr F = 1 (rank-one projections over the 2-dim mode space).
        let f = TrigMatrixField::constant(
            3,
            CMatrix::from_row_slice(2, 2, &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ]),
        );
        let wf = s.matrix_elements(&f).unwrap();
        for &wi in &wf {
            assert!(wi.abs() < 1.0 + 1e-12, "weights are quadratic-form values");
        }
        use std::collections::BTreeMap;
        let mut per_mode: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for (j, rec) in s.records().iter().enumerate() {
            *per_mode.entry(rec.k.clone()).or_insert(0.0) += wf[j];
        }
        for (k, total) in per_mode {
            assert!((total - 1.0).abs() < 1e-10, "mode {k:?}");
        }
        // grouped weights are reported per degeneracy class
        let groups = s.grouped_weights(&wf);
        let total_from_groups: f64 = groups.iter().map(|g| g.total).sum();
        let total: f64 = wf.iter().sum();
        assert!((total_from_groups - total).abs() < 1e-10);
    }

    #[test]
    fn local_density_plane_waves() {
        let spec = free_spec(3);
        let s = exact_modes(&spec, 2.0).unwrap();
        let x = [0.3, 0.8, 1.4];
        let dens = s.local_density(&x);
        let vol = TORUS_PERIOD.powi(3);
        for m in &dens {
            let tr = m.trace().re;
            assert!((tr - 1.0 / vol).abs() < 1e-14, "Tr Φ_j = (2π)^(-d)");
        }
        // sum over one degenerate group is x-independent: compare two points
        let y = [2.2, 5.5, 0.1];
        let dens_y = s.local_density(&y);
        let idx: Vec<usize> = s
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| (r.mu - 1.0).abs() < 1e-9)
            .map(|(j, _)| j)
            .collect();
        assert!(!idx.is_empty());
        let sum_x: CMatrix = idx.iter().map(|&j| dens[j].clone()).sum();
        let sum_y: CMatrix = idx.iter().map(|&j| dens_y[j].clone()).sum();
        assert!((sum_x - sum_y).norm() < 1e-12);
    }

    #[test]
    fn parseval_completeness() {
        let spec = free_spec(2);
        let s = exact_modes(&spec, 4.0).unwrap();
        let mut rng = labeled_rng(1, "spectral/parseval");
        let test = TrigSection::random(&mut rng, 2, 2, 2);
        assert!(s.parseval_residual(&test) < 1e-10);
    }

    #[test]
    fn signed_trace_symmetry() {
        let spec = free_spec(3);
        let s = exact_modes(&spec, 5.0).unwrap();
        let w = vec![1.0; s.len()];
        assert!(s.signed_heat_trace(&w, 0.7).abs() < 1e-12);
        let total = s.smoothed_trace(&w, |_| 1.0);
        assert!((total - s.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn galerkin_matrix_is_the_operator_on_interior_sections() {
        // dense-matrix oracle: H x equals the Fourier coefficients of D s
        // whenever the section plus operator bandwidth stays inside the box
        let m = CliffordModule::build(2).unwrap();
        let mut rng = labeled_rng(3, "spectral/galerkin-oracle");
        let spec = crate::operators::random_self_adjoint(&m, &mut rng, 1).unwrap();
        let kb = 4;
        let basis = lattice_box(2, kb);
        let h = assemble_galerkin(&spec, &basis);
        let s = TrigSection::random(&mut rng, 2, 2, kb - 1);
        let ds = spec.apply(&s).unwrap();
        // coefficient vector of s in the basis
        let mut x = CVector::zeros(basis.len() * 2);
        for (b, k) in basis.iter().enumerate() {
            let v = s.coefficient(k);
            for a in 0..2 {
                x[b * 2 + a] = v[a];
            }
        }
        let hx = &h * &x;
        for (b, k) in basis.iter().enumerate() {
            let expect = ds.coefficient(k);
            for a in 0..2 {
                assert!(
                    (hx[b * 2 + a] - expect[a]).norm() < 1e-12,
                    "galerkin matrix disagrees with apply at {k:?}"
                );
            }
        }
    }

    #[test]
    fn csv_export_format() {
        let spec = free_spec(2);
        let s = exact_modes(&spec, 1.5).unwrap();
        let w = vec![1.0; s.len()];
        let csv = s.to_csv(&w);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(lines.next().unwrap(), "mu,k1,k2,weight");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 4);
        assert!(first.contains('e'), "floats use scientific notation: {first}");
    }

    #[test]
    fn galerkin_matches_exact_below_trust() {
        let m = CliffordModule::build(2).unwrap();
        let c = 0.2;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 2], psi).unwrap();
        let sg = galerkin(&spec, 6, DEFAULT_EIGENSIZE_LIMIT).unwrap();
        let se = exact_modes(&spec, 4.0).unwrap();
        let trust = sg.trust_cutoff();
        let ge: Vec<f64> = sg.eigenvalues().filter(|mu| mu.abs() <= trust).collect();
        let ee: Vec<f64> = se.eigenvalues().filter(|mu| mu.abs() <= trust).collect();
        assert_eq!(ge.len(), ee.len());
        for (a, b) in ge.iter().zip(&ee) {
            assert!((a - b).abs() < 1e-10, "galerkin vs exact: {a} vs {b}");
        }
        // edge eigenvalues are flagged
        let flagged = (0..sg.len()).filter(|&j| sg.is_flagged(j)).count();
        assert!(flagged > 0);
    }

    #[test]
    fn galerkin_local_density_matches_exact() {
        let m = CliffordModule::build(2).unwrap();
        let spec = DiracOperatorSpec::constant(
            m,
            vec![CMatrix::zeros(2, 2); 2],
            CMatrix::identity(2, 2).map(|z| z * C64::new(0.15, 0.0)),
        )
        .unwrap();
        let sg = galerkin(&spec, 4, DEFAULT_EIGENSIZE_LIMIT).unwrap();
        let x = [1.1, 2.7];
        let dens = sg.local_density(&x);
        let vol = TORUS_PERIOD.powi(2);
        // plane-wave eigensections keep Tr Φ = (2π)^{-d} even via the dense path
        for (j, m) in dens.iter().enumerate() {
            if sg.is_flagged(j) {
                continue;
            }
            assert!((m.trace().re - 1.0 / vol).abs() < 1e-9);
        }
    }

    #[test]
    fn galerkin_perturbation_continuity() {
        // b₁ = i ε sin(x¹) Id: eigenvalues converge to the unperturbed ones
        // at rate O(ε).
        let m = CliffordModule::build(2).unwrap();
        let mk = |eps: f64| {
            // i ε sin(x¹) = (ε/2)(e^{ix¹} - e^{-ix¹})
            let mut b1 = TrigMatrixField::zero(2, 2);
            b1.add_term(vec![1, 0], CMatrix::identity(2, 2).map(|z| z * C64::new(eps / 2.0, 0.0)));
            b1.add_term(vec![-1, 0], CMatrix::identity(2, 2).map(|z| z * C64::new(-eps / 2.0, 0.0)));
            DiracOperatorSpec::new(
                m.clone(),
                vec![b1, TrigMatrixField::zero(2, 2)],
                TrigMatrixField::zero(2, 2),
            )
            .unwrap()
        };
        let base = galerkin(&mk(0.0), 5, DEFAULT_EIGENSIZE_LIMIT).unwrap();
        let mut prev_dev = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let pert = galerkin(&mk(eps), 5, DEFAULT_EIGENSIZE_LIMIT).unwrap();
            let trust = base.trust_cutoff();
            let b: Vec<f64> = base.eigenvalues().filter(|mu| mu.abs() <= trust).collect();
            let p: Vec<f64> = pert.eigenvalues().filter(|mu| mu.abs() <= trust).collect();
            let dev = b.iter().zip(&p).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
            assert!(dev < 1.5 * eps, "eps = {eps}: dev {dev}");
            assert!(dev < prev_dev + 1e-12);
            prev_dev = dev;
        }
    }

    #[test]
    fn negated_spectrum() {
        let m = CliffordModule::build(3).unwrap();
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(0.3, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let s = exact_modes(&spec, 3.0).unwrap();
        let sneg = s.negated();
        // negation matches exact_modes of the negated operator
        let sneg2 = exact_modes(&spec.negated(), 3.0).unwrap();
        let c: Vec<f64> = sneg2.eigenvalues().collect();
        let d: Vec<f64> = sneg.eigenvalues().collect();
        assert_eq!(c.len(), d.len());
        for (x, y) in c.iter().zip(&d) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
