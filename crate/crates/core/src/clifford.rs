//! Complex Clifford modules: gamma matrices, the hat map, grade
//! decomposition and the commutant machinery behind generalized Dirac
//! operators.
//!
//! Conventions: the generators are anti-Hermitian and satisfy
//! `γ^j γ^k + γ^k γ^j = -2 δ^{jk}`, so the principal symbol `i γ^j ξ_j` of a
//! Dirac type operator is Hermitian. The hat map is
//! `ψ̂ = Σ_k γ^k ψ γ^k`; grade-k endomorphisms are its eigenvectors with
//! eigenvalue `(-1)^k (2k - d)`.


use crate::error::{Result, SpectraError};
use crate::{C64, CMatrix};

/// Default relative tolerance for the exact-linear-algebra checks here.
pub const ALGEBRA_TOL: f64 = 1e-10;

/// An irreducible complex Clifford module of dimension `d` with rank
/// `r = 2^{⌊d/2⌋}`.
#[derive(Debug, Clone)]
pub struct CliffordModule {
    d: usize,
    r: usize,
    gammas: Vec<CMatrix>,
}

fn pauli() -> [CMatrix; 3] {
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

impl CliffordModule {
    /// Build the irreducible module for dimension `d` (1 ≤ d ≤ 8).
    ///
    /// The construction is the usual tensor-product recursion over the Pauli
    /// matrices and is bit-deterministic. For d = 3 it reproduces
    /// `R_j = -i σ_j`, the generators of the massless Dirac operator family.
    pub fn build(d: usize) -> Result<Self> {
        if !(1..=8).contains(&d) {
            return Err(SpectraError::UnsupportedDimension(d, "1..=8"));
        }
        let gammas = Self::build_generators(d);
        let r = gammas[0].nrows();
        Ok(Self { d, r, gammas })
    }

    fn build_generators(d: usize) -> Vec<CMatrix> {
        let mi = C64::new(0.0, -1.0);
        if d == 1 {
            return vec![CMatrix::from_element(1, 1, mi)];
        }
        if d == 2 || d == 3 {
            let s = pauli();
            let mut g = vec![s[0].map(|z| z * mi), s[1].map(|z| z * mi)];
            if d == 3 {
                // γ³ = γ¹γ² = -i σ₃; fixes R₁R₂R₃ = -1.
                let prod = &g[0] * &g[1];
                g.push(prod);
            }
            return g;
        }
        if d.is_multiple_of(2) {
            // γ^j_(d) = γ^j_(d-2) ⊗ σ₃ for j < d-1, plus Id ⊗ (-iσ₁), Id ⊗ (-iσ₂).
            let lower = Self::build_generators(d - 2);
            let s = pauli();
            let rl = lower[0].nrows();
            let id = CMatrix::identity(rl, rl);
            let mut g: Vec<CMatrix> = lower.iter().map(|gj| kron(gj, &s[2])).collect();
            g.push(kron(&id, &s[0].map(|z| z * mi)));
            g.push(kron(&id, &s[1].map(|z| z * mi)));
            g
        } else {
            // Odd d = 2m+1: append the (suitably scaled) volume element of d-1.
            let mut g = Self::build_generators(d - 1);
            let m = (d - 1) / 2;
            let mut vol = g[0].clone();
            for gj in g.iter().skip(1) {
                vol = &vol * gj;
            }
            let scale = if m.is_multiple_of(2) { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
            g.push(vol.map(|z| z * scale));
            g
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// Generator `γ^j` (0-based index).
    pub fn gamma(&self, j: usize) -> &CMatrix {
        &self.gammas[j]
    }

    pub fn gammas(&self) -> &[CMatrix] {
        &self.gammas
    }

    /// Clifford action `γ(X) = Σ_k X_k γ^k` of a real vector.
    pub fn gamma_of(&self, x: &[f64]) -> CMatrix {
        assert_eq!(x.len(), self.d);
        let mut out = CMatrix::zeros(self.r, self.r);
        for (k, &xk) in x.iter().enumerate() {
            out += self.gammas[k].map(|z| z * C64::new(xk, 0.0));
        }
        out
    }

    /// Product `γ^{i_1} ⋯ γ^{i_k}` for an increasing index set.
    pub fn gamma_product(&self, idx: &[usize]) -> CMatrix {
        let mut out = CMatrix::identity(self.r, self.r);
        for &i in idx {
            out *= &self.gammas[i];
        }
        out
    }

    /// Highest grade carried by the basis: `d` for even d, `(d-1)/2` for odd
    /// (the volume element is scalar there, identifying `End_{d-k}` with
    /// `End_k`).
    pub fn max_grade(&self) -> usize {
        if self.d.is_multiple_of(2) {
            self.d
        } else {
            (self.d - 1) / 2
        }
    }

    /// The hat map `ψ̂ = Σ_k γ^k ψ γ^k`.
    pub fn hat(&self, psi: &CMatrix) -> Result<CMatrix> {
        self.check_shape(psi)?;
        let mut out = CMatrix::zeros(self.r, self.r);
        for g in &self.gammas {
            out += g * psi * g;
        }
        Ok(out)
    }

    /// `sign · (γ(X)ψ + ψγ(X))/2`. Sign `-1` is the correction map that
    /// absorbs a grade-one potential into a compatible connection; sign `+1`
    /// the Bochner–Weitzenböck `L` map.
    pub fn l_map(&self, psi: &CMatrix, x: &[f64], sign: f64) -> Result<CMatrix> {
        self.check_shape(psi)?;
        let gx = self.gamma_of(x);
        Ok((&gx * psi + psi * gx).map(|z| z * C64::new(0.5 * sign, 0.0)))
    }

    /// Max over `i, j` of `‖[L(e_i), γ^j]‖` with `L(X) = -(γ(X)ψ + ψγ(X))/2`.
    /// Vanishes exactly when `ψ̂ = (d-2)ψ`.
    pub fn commutant_report(&self, psi: &CMatrix) -> Result<f64> {
        self.check_shape(psi)?;
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            let mut e = vec![0.0; self.d];
            e[i] = 1.0;
            let l = self.l_map(psi, &e, -1.0)?;
            for g in &self.gammas {
                let comm = &l * g - g * &l;
                worst = worst.max(comm.norm());
            }
        }
        Ok(worst)
    }

    /// Does `ψ` satisfy `ψ̂ = (d-2)ψ` to relative tolerance `tol`? Such
    /// potentials can be absorbed into a compatible connection, i.e. the
    /// operator is a generalized Dirac operator.
    pub fn is_generalized_potential(&self, psi: &CMatrix, tol: f64) -> Result<bool> {
        let hat = self.hat(psi)?;
        let target = psi.map(|z| z * C64::new((self.d as f64) - 2.0, 0.0));
        let dev = (&hat - &target).norm();
        Ok(dev <= tol * psi.norm().max(1.0))
    }

    /// Decompose `ψ` over the grade basis and verify each component against
    /// its hat eigenvalue `(-1)^k (2k-d)`.
    pub fn grade_project(&self, psi: &CMatrix) -> Result<GradeDecomposition> {
        self.check_shape(psi)?;
        let rr = self.r as f64;
        let mut components = Vec::with_capacity(self.max_grade() + 1);
        let mut recon = CMatrix::zeros(self.r, self.r);
        for k in 0..=self.max_grade() {
            let mut comp = CMatrix::zeros(self.r, self.r);
            for idx in combinations(self.d, k) {
                let basis = self.gamma_product(&idx);
                // basis is unitary, so Tr(basis† basis) = r.
                let coeff = (basis.adjoint() * psi).trace() / C64::new(rr, 0.0);
                comp += basis.map(|z| z * coeff);
            }
            recon += &comp;
            components.push(comp);
        }
        let residual = (psi - &recon).norm();
        let tol = 1e-12 * psi.norm().max(1.0);
        if residual > tol {
            return Err(SpectraError::GradeResidual { residual, tol });
        }
        // Eigenvalue verification for each component.
        for (k, comp) in components.iter().enumerate() {
            if comp.norm() < 1e-14 {
                continue;
            }
            let ev = hat_eigenvalue(self.d, k);
            let hat = self.hat(comp)?;
            let dev = (&hat - comp.map(|z| z * C64::new(ev, 0.0))).norm();
            if dev > 1e-10 * comp.norm() {
                return Err(SpectraError::GradeResidual {
                    residual: dev,
                    tol: 1e-10 * comp.norm(),
                });
            }
        }
        Ok(GradeDecomposition { components, residual_norm: residual })
    }

    /// Frobenius deviation of the Clifford relations
    /// `γ^j γ^k + γ^k γ^j + 2δ^{jk} = 0`; zero for a valid module.
    pub fn relation_residual(&self) -> f64 {
        let id2 = CMatrix::identity(self.r, self.r).map(|z| z * C64::new(2.0, 0.0));
        let mut worst: f64 = 0.0;
        for j in 0..self.d {
            for k in 0..self.d {
                let mut anti = &self.gammas[j] * &self.gammas[k] + &self.gammas[k] * &self.gammas[j];
                if j == k {
                    anti += &id2;
                }
                worst = worst.max(anti.norm());
            }
        }
        worst
    }

    /// Negated module (generators `-γ^j`); used for the `μ → -∞` branch.
    pub fn negated(&self) -> Self {
        Self {
            d: self.d,
            r: self.r,
            gammas: self.gammas.iter().map(|g| g.map(|z| -z)).collect(),
        }
    }

    fn check_shape(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.r || m.ncols() != self.r {
            return Err(SpectraError::ShapeMismatch {
                expected: format!("{}x{}", self.r, self.r),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(())
    }
}

/// Hat-map eigenvalue `(-1)^k (2k - d)` on grade-k endomorphisms.
pub fn hat_eigenvalue(d: usize, k: usize) -> f64 {
    let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    s * (2.0 * k as f64 - d as f64)
}

/// Grade components of an endomorphism, indexed by grade.
#[derive(Debug, Clone)]
pub struct GradeDecomposition {
    pub components: Vec<CMatrix>,
    pub residual_norm: f64,
}

impl GradeDecomposition {
    pub fn component(&self, k: usize) -> &CMatrix {
        &self.components[k]
    }

    pub fn sum(&self) -> CMatrix {
        let r = self.components[0].nrows();
        let mut out = CMatrix::zeros(r, r);
        for c in &self.components {
            out += c;
        }
        out
    }
}

/// Increasing k-subsets of {0, .., n-1}.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        if k == 0 {
            break;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Random matrix with independent standard complex Gaussian entries.
pub fn random_matrix(rng: &mut impl rand::Rng, r: usize) -> CMatrix {
    use rand::distributions::Distribution;
    let normal = rand_distr_standard();
    CMatrix::from_fn(r, r, |_, _| C64::new(normal.sample(rng), normal.sample(rng)))
}

/// Random Hermitian matrix.
pub fn random_hermitian(rng: &mut impl rand::Rng, r: usize) -> CMatrix {
    let m = random_matrix(rng, r);
    (&m + m.adjoint()).map(|z| z * C64::new(0.5, 0.0))
}

fn rand_distr_standard() -> impl rand::distributions::Distribution<f64> {
    // Box-Muller free: use rand's StandardNormal via Ziggurat is in rand_distr;
    // a plain uniform-sum proxy is not acceptable, so implement Box-Muller.
    struct BoxMuller;
    impl rand::distributions::Distribution<f64> for BoxMuller {
        fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }
    BoxMuller
}
