//! Dirac-type operators on the flat torus:
//! `D = Σ_l a_l(x) (∂_l + b_l(x)) + ψ(x)` acting on sections of the trivial
//! rank-r bundle. For the usual case the leading coefficients are the
//! constant gamma matrices, `a_l = γ^l`; frame-twisted operators built from
//! an orthonormal frame keep variable `a_l(x)` with `a_l a_m + a_m a_l =
//! -2δ_{lm}` pointwise.
//!
//! Construction canonicalizes the splitting of the first-order part: the
//! stored connection coefficients `b_l` always commute with the Clifford
//! action (they are a compatible connection), and the stored `ψ` is the
//! potential relative to it. Everything that depends on the choice of
//! splitting — the hat-map density `H₁`, the Bochner–Weitzenböck potential,
//! subprincipal symbols — is therefore well defined on the stored fields.

use nalgebra::DMatrix;
use rand::Rng;

use crate::clifford::CliffordModule;
use crate::error::{Result, SpectraError};
use crate::fields::{field_apply, TrigMatrixField, TrigSection};
use crate::numeric::labeled_rng;
use crate::{C64, CMatrix};

/// Dirac-type operator specification.
#[derive(Debug, Clone)]
pub struct DiracOperatorSpec {
    module: CliffordModule,
    /// Variable leading coefficients `a_l(x)`; `None` means constant `γ^l`.
    leading: Option<Vec<TrigMatrixField>>,
    /// Compatible-connection coefficients `b_l` (scalar-valued for constant
    /// gamma structure).
    connection: Vec<TrigMatrixField>,
    /// Potential relative to the stored connection.
    potential: TrigMatrixField,
}

impl DiracOperatorSpec {
    /// Free Dirac operator `γ^j ∂_j`.
    pub fn free(module: CliffordModule) -> Self {
        let d = module.dimension();
        let r = module.rank();
        Self {
            module,
            leading: None,
            connection: vec![TrigMatrixField::zero(d, r); d],
            potential: TrigMatrixField::zero(d, r),
        }
    }

    /// General constant-gamma operator `γ^j(∂_j + b_j) + ψ`.
    ///
    /// The input splitting is canonicalized: the part of each `b_j` outside
    /// the commutant of the Clifford algebra (for an irreducible module, its
    /// trace-free part) is folded into the potential as `γ^j ρ_j`, which
    /// leaves the operator unchanged but makes the stored connection
    /// compatible and the stored `ψ` the honest potential.
    pub fn new(module: CliffordModule, b: Vec<TrigMatrixField>, psi: TrigMatrixField) -> Result<Self> {
        let d = module.dimension();
        let r = module.rank();
        if b.len() != d {
            return Err(SpectraError::ShapeMismatch {
                expected: format!("{d} connection fields"),
                got: format!("{}", b.len()),
            });
        }
        for f in b.iter().chain(std::iter::once(&psi)) {
            if f.rank() != r || f.dim() != d {
                return Err(SpectraError::ShapeMismatch {
                    expected: format!("{d}-dim rank-{r} fields"),
                    got: format!("{}-dim rank-{}", f.dim(), f.rank()),
                });
            }
        }
        let mut psi_canon = psi;
        let mut b_canon = Vec::with_capacity(d);
        for (j, bj) in b.into_iter().enumerate() {
            let (scalar, rest) = split_commutant(&bj);
            if !rest.is_zero() {
                psi_canon = psi_canon.add(&rest.left_mul(module.gamma(j)));
            }
            b_canon.push(scalar);
        }
        Ok(Self { module, leading: None, connection: b_canon, potential: psi_canon })
    }

    /// Constant-coefficient convenience constructor.
    pub fn constant(module: CliffordModule, b: Vec<CMatrix>, psi: CMatrix) -> Result<Self> {
        let d = module.dimension();
        let bf = b.into_iter().map(|m| TrigMatrixField::constant(d, m)).collect();
        Self::new(module, bf, TrigMatrixField::constant(d, psi))
    }

    /// Frame-twisted operator with explicit leading coefficients. The caller
    /// (the frames module) guarantees that `connection` is compatible with
    /// the twisted Clifford action and that `potential` is the potential
    /// relative to it.
    pub(crate) fn twisted(
        module: CliffordModule,
        leading: Vec<TrigMatrixField>,
        connection: Vec<TrigMatrixField>,
        potential: TrigMatrixField,
    ) -> Self {
        Self { module, leading: Some(leading), connection, potential }
    }

    pub fn module(&self) -> &CliffordModule {
        &self.module
    }

    pub fn dimension(&self) -> usize {
        self.module.dimension()
    }

    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn connection(&self) -> &[TrigMatrixField] {
        &self.connection
    }

    pub fn potential(&self) -> &TrigMatrixField {
        &self.potential
    }

    pub fn is_twisted(&self) -> bool {
        self.leading.is_some()
    }

    /// True iff all coefficient fields have Fourier support `{0}`.
    pub fn is_constant_coefficient(&self) -> bool {
        self.leading.is_none()
            && self.connection.iter().all(|f| f.is_constant())
            && self.potential.is_constant()
    }

    /// Leading coefficient `a_l` as a field (constant `γ^l` when untwisted).
    pub fn gamma_coefficient(&self, l: usize) -> TrigMatrixField {
        match &self.leading {
            Some(a) => a[l].clone(),
            None => TrigMatrixField::constant(self.dimension(), self.module.gamma(l).clone()),
        }
    }

    /// Zeroth-order coefficient `c = Σ_l a_l b_l + ψ` of the operator.
    pub fn zeroth_order_field(&self) -> TrigMatrixField {
        let d = self.dimension();
        let mut c = self.potential.clone();
        for l in 0..d {
            let albl = self.gamma_coefficient(l).mul(&self.connection[l]);
            c = c.add(&albl);
        }
        c
    }

    /// For constant-coefficient specs, the matrix `C` with
    /// `D e^{ik·x} v = (i γ^j k_j + C) e^{ik·x} v`.
    pub fn constant_matrix(&self) -> Result<CMatrix> {
        if !self.is_constant_coefficient() {
            return Err(SpectraError::NonConstantOperator);
        }
        Ok(self.zeroth_order_field().mean())
    }

    /// Per-mode symbol matrix `d(k) = i γ^j k_j + C` (constant specs).
    pub fn mode_matrix(&self, k: &[f64]) -> Result<CMatrix> {
        let c = self.constant_matrix()?;
        let g = self.module.gamma_of(k);
        Ok(g.map(|z| z * C64::new(0.0, 1.0)) + c)
    }

    /// Apply `D` to a band-limited section, exactly in Fourier space.
    pub fn apply(&self, s: &TrigSection) -> Result<TrigSection> {
        if s.rank() != self.rank() || s.dim() != self.dimension() {
            return Err(SpectraError::ShapeMismatch {
                expected: format!("section {}d rank {}", self.dimension(), self.rank()),
                got: format!("{}d rank {}", s.dim(), s.rank()),
            });
        }
        let d = self.dimension();
        let mut out = field_apply(&self.potential, s)?;
        for l in 0..d {
            let mut t = s.derivative(l);
            if !self.connection[l].is_zero() {
                t = t.add(&field_apply(&self.connection[l], s)?);
            }
            let contrib = match &self.leading {
                Some(a) => field_apply(&a[l], &t)?,
                None => t.matrix_apply(self.module.gamma(l)),
            };
            out = out.add(&contrib);
        }
        Ok(out)
    }

    pub fn apply_twice(&self, s: &TrigSection) -> Result<TrigSection> {
        self.apply(&self.apply(s)?)
    }

    /// Empirical self-adjointness certificate:
    /// `max |⟨Du, v⟩ - ⟨u, Dv⟩| / (‖u‖ ‖v‖)` over random band-limited pairs.
    pub fn adjoint_residual(&self, trials: usize, seed: u64) -> Result<f64> {
        assert!(trials >= 1);
        let mut rng = labeled_rng(seed, "operators/adjoint");
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let u = TrigSection::random(&mut rng, self.dimension(), self.rank(), 2);
            let v = TrigSection::random(&mut rng, self.dimension(), self.rank(), 2);
            let du = self.apply(&u)?;
            let dv = self.apply(&v)?;
            let lhs = du.inner(&v);
            let rhs = u.inner(&dv);
            worst = worst.max((lhs - rhs).norm() / (u.norm() * v.norm()));
        }
        Ok(worst)
    }

    /// Sign-flipped operator `-D` (for the `μ → -∞` branch).
    pub fn negated(&self) -> Self {
        let minus = C64::new(-1.0, 0.0);
        Self {
            module: self.module.negated(),
            leading: self
                .leading
                .as_ref()
                .map(|a| a.iter().map(|f| f.scale(minus)).collect()),
            connection: self.connection.clone(),
            potential: self.potential.scale(minus),
        }
    }

    /// Add a potential term (canonicalizing it against the stored splitting
    /// is unnecessary: potentials add directly).
    pub fn with_extra_potential(&self, extra: &TrigMatrixField) -> Self {
        let mut out = self.clone();
        out.potential = out.potential.add(extra);
        out
    }

    /// Pointwise `H₁` density `(4π)^{-d/2} (ψ̂ - (d-2)ψ)/2`. Vanishes iff the
    /// operator is a generalized Dirac operator.
    pub fn h1_density(&self, x: &[f64]) -> CMatrix {
        self.h1_field().eval(x)
    }

    /// `H₁` as a trigonometric field.
    pub fn h1_field(&self) -> TrigMatrixField {
        let d = self.dimension() as f64;
        let scale = (4.0 * std::f64::consts::PI).powf(-(d / 2.0)) * 0.5;
        let mut out = TrigMatrixField::zero(self.dimension(), self.rank());
        for (n, c) in self.potential.coefficients() {
            let hat = self.module.hat(c).expect("shape enforced at construction");
            let term = (hat - c.map(|z| z * C64::new(d - 2.0, 0.0))).map(|z| z * C64::new(scale, 0.0));
            out.add_term(n.clone(), term);
        }
        out
    }

    /// Subprincipal symbol of `D` in the fixed bundle trivialization:
    /// `Sub(D)(x) = σ^{(1)}(x) - (1/2) Σ_l ∂_l a_l(x)`; ξ-independent.
    ///
    /// For a canonical constant-gamma spec this reduces to the compatible
    /// connection formula `(γ^j b_j + b_j γ^j)/2 + ψ`.
    pub fn sub_symbol_dirac(&self, x: &[f64]) -> CMatrix {
        let mut out = self.zeroth_order_field().eval(x);
        if let Some(a) = &self.leading {
            for (l, al) in a.iter().enumerate() {
                out -= al.derivative(l).eval(x).map(|z| z * C64::new(0.5, 0.0));
            }
        }
        out
    }

    /// Subprincipal symbol of `D²`:
    /// `Sub(D²)(x, ξ) = i [a^l ∂_l a^m + a^m c + c a^m](x) ξ_m` with
    /// `c = Σ a_l b_l + ψ`. With constant gammas and a compatible connection
    /// this is the familiar `i(γ^k ψ + ψ γ^k - 2 b_k) ξ_k`.
    pub fn sub_symbol_laplacian(&self, x: &[f64], xi: &[f64]) -> CMatrix {
        let d = self.dimension();
        let r = self.rank();
        let c = self.zeroth_order_field().eval(x);
        let mut out = CMatrix::zeros(r, r);
        for m in 0..d {
            let am = self.gamma_coefficient(m).eval(x);
            let mut term = &am * &c + &c * &am;
            if let Some(a) = &self.leading {
                for l in 0..d {
                    let al = a[l].eval(x);
                    let dam = a[m].derivative(l).eval(x);
                    term += al * dam;
                }
            }
            out += term.map(|z| z * C64::new(0.0, xi[m]));
        }
        out
    }

    /// Bochner–Weitzenböck decomposition `D² = Δ^{∇_ψ} + V_ψ` with
    /// `∇_ψ = ∇̃ - L`, `L_j = (a_j ψ + ψ a_j)/2` and
    /// `V = ½ a^i a^j R_ij + ½ [a^i, ∇̄_i ψ] + L^i L_i + ψ²`.
    pub fn bw_decompose(&self) -> BWData {
        let d = self.dimension();
        let r = self.rank();
        let half = C64::new(0.5, 0.0);
        let l_fields: Vec<TrigMatrixField> = (0..d)
            .map(|j| {
                let aj = self.gamma_coefficient(j);
                aj.mul(&self.potential).add(&self.potential.mul(&aj)).scale(half)
            })
            .collect();
        let nabla: Vec<TrigMatrixField> =
            (0..d).map(|j| self.connection[j].sub(&l_fields[j])).collect();

        let mut v = TrigMatrixField::zero(d, r);
        // ½ a^i a^j R_ij, R_ij = ∂_i b_j - ∂_j b_i + [b_i, b_j]
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let rij = self.connection[j]
                    .derivative(i)
                    .sub(&self.connection[i].derivative(j))
                    .add(&self.connection[i].commutator(&self.connection[j]));
                if rij.is_zero() {
                    continue;
                }
                let aij = self.gamma_coefficient(i).mul(&self.gamma_coefficient(j));
                v = v.add(&aij.mul(&rij).scale(half));
            }
        }
        // ½ [a^i, ∇̄_i ψ]
        for i in 0..d {
            let cov = self.potential.derivative(i).add(&self.connection[i].commutator(&self.potential));
            if cov.is_zero() {
                continue;
            }
            let ai = self.gamma_coefficient(i);
            v = v.add(&ai.commutator(&cov).scale(half));
        }
        // L^i L_i + ψ²
        for lf in &l_fields {
            v = v.add(&lf.mul(lf));
        }
        v = v.add(&self.potential.mul(&self.potential));
        BWData { nabla, v }
    }

    /// Max relative discrepancy `‖D²s - (Δ^{∇_ψ}s + V s)‖ / ‖s‖` over random
    /// trigonometric sections.
    pub fn bw_residual(&self, trials: usize, seed: u64) -> Result<f64> {
        assert!(trials >= 1);
        let bw = self.bw_decompose();
        let mut rng = labeled_rng(seed, "operators/bw");
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let s = TrigSection::random(&mut rng, self.dimension(), self.rank(), 2);
            let lhs = self.apply_twice(&s)?;
            let rhs = bw.apply(&s)?;
            worst = worst.max(lhs.sub(&rhs).norm() / s.norm());
        }
        Ok(worst)
    }
}

/// Split a field into its Clifford-commutant part (scalar multiples of the
/// identity, coefficient-wise `tr/r`) and the remainder.
fn split_commutant(f: &TrigMatrixField) -> (TrigMatrixField, TrigMatrixField) {
    let d = f.dim();
    let r = f.rank();
    let mut scalar = TrigMatrixField::zero(d, r);
    let mut rest = TrigMatrixField::zero(d, r);
    let id = CMatrix::identity(r, r);
    for (n, c) in f.coefficients() {
        let s = c.trace() / C64::new(r as f64, 0.0);
        let sc = id.map(|z| z * s);
        let rem = c - &sc;
        if sc.norm() > 0.0 {
            scalar.add_term(n.clone(), sc);
        }
        if rem.norm() > 1e-300 {
            rest.add_term(n.clone(), rem);
        }
    }
    (scalar, rest)
}

/// Bochner–Weitzenböck data: the connection coefficients of `∇_ψ` and the
/// endomorphism `V` with `D² = Δ^{∇_ψ} + V`.
#[derive(Debug, Clone)]
pub struct BWData {
    pub nabla: Vec<TrigMatrixField>,
    pub v: TrigMatrixField,
}

impl BWData {
    /// Apply `Δ^{∇_ψ} + V` to a section; `Δ^∇ = -Σ_j (∂_j + w_j)²` on the
    /// flat torus.
    pub fn apply(&self, s: &TrigSection) -> Result<TrigSection> {
        let mut out = field_apply(&self.v, s)?;
        for (j, w) in self.nabla.iter().enumerate() {
            let once = covariant(w, s, j)?;
            let twice = covariant(w, &once, j)?;
            out = out.add(&twice.scale(C64::new(-1.0, 0.0)));
        }
        Ok(out)
    }
}

fn covariant(w: &TrigMatrixField, s: &TrigSection, j: usize) -> Result<TrigSection> {
    let mut t = s.derivative(j);
    if !w.is_zero() {
        t = t.add(&field_apply(w, s)?);
    }
    Ok(t)
}

/// Random Hermitian-valued trigonometric field with `|n|_∞ ≤ max_freq`.
pub fn random_hermitian_field(rng: &mut impl Rng, d: usize, r: usize, max_freq: i32) -> TrigMatrixField {
    random_field_with_symmetry(rng, d, r, max_freq, false)
}

/// Random anti-Hermitian-valued trigonometric field.
pub fn random_antihermitian_field(rng: &mut impl Rng, d: usize, r: usize, max_freq: i32) -> TrigMatrixField {
    random_field_with_symmetry(rng, d, r, max_freq, true)
}

fn random_field_with_symmetry(
    rng: &mut impl Rng,
    d: usize,
    r: usize,
    max_freq: i32,
    anti: bool,
) -> TrigMatrixField {
    let mut f = TrigMatrixField::zero(d, r);
    let sign = if anti { -1.0 } else { 1.0 };
    let mut k = vec![-max_freq; d];
    loop {
        // visit each {n, -n} pair once, via lexicographic positivity
        let first_nonzero = k.iter().find(|&&v| v != 0);
        let take = match first_nonzero {
            None => true,         // n = 0
            Some(&v) => v > 0,    // positive representative
        };
        if take {
            let c = DMatrix::from_fn(r, r, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            if k.iter().all(|&v| v == 0) {
                // n = 0 coefficient must itself be (anti-)Hermitian
                let h = (&c + c.adjoint().map(|z| z * C64::new(sign, 0.0))).map(|z| z * C64::new(0.5, 0.0));
                f.add_term(k.clone(), h);
            } else {
                let neg: Vec<i32> = k.iter().map(|&v| -v).collect();
                f.add_term(k.clone(), c.clone());
                f.add_term(neg, c.adjoint().map(|z| z * C64::new(sign, 0.0)));
            }
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return f;
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

/// Random self-adjoint Dirac operator: anti-Hermitian `b_j`, potential
/// `ψ = ψ_H - ½ [γ^j, b_j]` with `ψ_H` Hermitian-valued. The commutator term
/// is exactly what integration by parts requires for formal self-adjointness.
pub fn random_self_adjoint(
    module: &CliffordModule,
    rng: &mut impl Rng,
    max_freq: i32,
) -> Result<DiracOperatorSpec> {
    let d = module.dimension();
    let r = module.rank();
    let b: Vec<TrigMatrixField> = (0..d).map(|_| random_antihermitian_field(rng, d, r, max_freq)).collect();
    let mut psi = random_hermitian_field(rng, d, r, max_freq);
    for (j, bj) in b.iter().enumerate() {
        let gamma_j = TrigMatrixField::constant(d, module.gamma(j).clone());
        psi = psi.sub(&gamma_j.commutator(bj).scale(C64::new(0.5, 0.0)));
    }
    DiracOperatorSpec::new(module.clone(), b, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TrigSection;
    use nalgebra::DVector;

    fn free_d3() -> DiracOperatorSpec {
        DiracOperatorSpec::free(CliffordModule::build(3).unwrap())
    }

    #[test]
    fn apply_plane_wave_free() {
        let spec = free_d3();
        let v = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let k = vec![2, -1, 3];
        let s = TrigSection::plane_wave(k.clone(), v.clone());
        let out = spec.apply(&s).unwrap();
        let kf = [2.0, -1.0, 3.0];
        let expect = spec.module().gamma_of(&kf).map(|z| z * C64::new(0.0, 1.0)) * &v;
        assert!((out.coefficient(&k) - expect).norm() < 1e-14);
    }

    #[test]
    fn apply_with_scalar_potential() {
        let m = CliffordModule::build(3).unwrap();
        let c = 0.4;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let v = DVector::from_vec(vec![C64::new(0.3, 0.1), C64::new(-1.0, 0.0)]);
        let k = vec![1, 0, -2];
        let s = TrigSection::plane_wave(k.clone(), v.clone());
        let out = spec.apply(&s).unwrap();
        let kf = [1.0, 0.0, -2.0];
        let expect = spec.module().gamma_of(&kf).map(|z| z * C64::new(0.0, 1.0)) * &v + v.map(|z| z * C64::new(c, 0.0));
        assert!((out.coefficient(&k) - expect).norm() < 1e-14);
    }

    #[test]
    fn adjoint_residual_flags_non_self_adjoint() {
        let spec = free_d3();
        assert!(spec.adjoint_residual(4, 0).unwrap() < 1e-12);

        let m = CliffordModule::build(3).unwrap();
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(0.0, 1.0)); // i·Id
        let bad = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        assert!(bad.adjoint_residual(4, 0).unwrap() > 0.1);
    }

    #[test]
    fn integration_by_parts_potential_is_self_adjoint() {
        let m = CliffordModule::build(3).unwrap();
        let mut rng = labeled_rng(42, "operators/random-sa");
        for _ in 0..3 {
            let spec = random_self_adjoint(&m, &mut rng, 1).unwrap();
            assert!(spec.adjoint_residual(4, 1).unwrap() < 1e-10);
        }
    }

    #[test]
    fn bw_scalar_potential_closed_form() {
        // b = 0, ψ = c Id ⇒ V = (1-d) c² Id
        let m = CliffordModule::build(3).unwrap();
        let c = 0.7;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let bw = spec.bw_decompose();
        let expect = CMatrix::identity(2, 2).map(|z| z * C64::new((1.0 - 3.0) * c * c, 0.0));
        assert!((bw.v.mean() - expect).norm() < 1e-13);
        assert!(spec.bw_residual(3, 0).unwrap() < 1e-12);
    }

    #[test]
    fn bw_zero_potential_trivial() {
        let spec = free_d3();
        let bw = spec.bw_decompose();
        assert!(bw.v.is_zero());
        for w in &bw.nabla {
            assert!(w.is_zero());
        }
        assert!(spec.bw_residual(2, 0).unwrap() < 1e-13);
    }

    #[test]
    fn bw_residual_random_operators() {
        for d in [2usize, 3] {
            let m = CliffordModule::build(d).unwrap();
            let mut rng = labeled_rng(9 + d as u64, "operators/bw-random");
            for _ in 0..3 {
                let spec = random_self_adjoint(&m, &mut rng, 2).unwrap();
                let res = spec.bw_residual(3, 5).unwrap();
                assert!(res < 1e-9, "d = {d}: residual {res:.3e}");
            }
        }
    }

    #[test]
    fn h1_density_examples() {
        let m = CliffordModule::build(3).unwrap();
        let x = [0.3, 1.0, 2.0];
        // ψ = 0 → 0
        let spec0 = free_d3();
        assert!(spec0.h1_density(&x).norm() < 1e-15);
        // ψ = c Id → -2c (4π)^{-3/2} Id
        let c = 0.25;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m.clone(), vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let expect = CMatrix::identity(2, 2)
            .map(|z| z * C64::new(-2.0 * c * (4.0 * std::f64::consts::PI).powf(-1.5), 0.0));
        assert!((spec.h1_density(&x) - expect).norm() < 1e-14);
        // grade-1 potential → 0
        let psi1 = m.gamma(0).map(|z| z * C64::new(c, 0.0));
        let spec1 = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi1).unwrap();
        assert!(spec1.h1_density(&x).norm() < 1e-14);
    }

    #[test]
    fn canonicalization_preserves_the_operator_and_fixes_h1() {
        // Matrix-valued b gets folded: the operator is unchanged, and the
        // stored potential picks up γ^j ρ_j.
        let m = CliffordModule::build(3).unwrap();
        let mut rng = labeled_rng(17, "operators/canon");
        let b: Vec<TrigMatrixField> = (0..3).map(|_| random_antihermitian_field(&mut rng, 3, 2, 1)).collect();
        let psi = random_hermitian_field(&mut rng, 3, 2, 1);
        let raw_apply = {
            // build the operator naively, without canonicalization
            let m = m.clone();
            let b = b.clone();
            let psi = psi.clone();
            move |s: &TrigSection| {
                let mut out = field_apply(&psi, s).unwrap();
                for (j, bj) in b.iter().enumerate() {
                    let t = s.derivative(j).add(&field_apply(bj, s).unwrap());
                    out = out.add(&t.matrix_apply(m.gamma(j)));
                }
                out
            }
        };
        let spec = DiracOperatorSpec::new(m, b.clone(), psi.clone()).unwrap();
        let s = TrigSection::random(&mut rng, 3, 2, 2);
        let got = spec.apply(&s).unwrap();
        let expect = raw_apply(&s);
        assert!(got.sub(&expect).norm() < 1e-12 * expect.norm().max(1.0));
        // stored connection is scalar-valued (commutes with the gammas)
        for bj in spec.connection() {
            for (_, c) in bj.coefficients() {
                let s = c.trace() / C64::new(2.0, 0.0);
                assert!((c - CMatrix::identity(2, 2).map(|z| z * s)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sub_symbol_dirac_formulas() {
        let m = CliffordModule::build(3).unwrap();
        let x = [0.2, 0.9, 4.1];
        // b = 0 → ψ(x)
        let mut rng = labeled_rng(23, "operators/sub");
        let psi = random_hermitian_field(&mut rng, 3, 2, 1);
        let spec = DiracOperatorSpec::new(m.clone(), vec![TrigMatrixField::zero(3, 2); 3], psi.clone()).unwrap();
        assert!((spec.sub_symbol_dirac(&x) - psi.eval(&x)).norm() < 1e-13);
        // abelian gauge field: b_j = i a_j(x) Id → Sub = i a_j γ^j + ψ
        let mut b = Vec::new();
        let mut expect = psi.eval(&x);
        for j in 0..3 {
            let mut f = TrigMatrixField::zero(3, 2);
            let amp = 0.3 * (j as f64 + 1.0);
            let mut n = vec![0; 3];
            n[j] = 1;
            // a_j(x) = amp·cos(x_j) ⇒ i a_j: coefficients i·amp/2 at ±e_j
            f.add_term(n.clone(), CMatrix::identity(2, 2).map(|z| z * C64::new(0.0, amp / 2.0)));
            let neg: Vec<i32> = n.iter().map(|&v| -v).collect();
            f.add_term(neg, CMatrix::identity(2, 2).map(|z| z * C64::new(0.0, amp / 2.0)));
            expect += m.gamma(j).map(|z| z * C64::new(0.0, amp * x[j].cos()));
            b.push(f);
        }
        let spec2 = DiracOperatorSpec::new(m, b, psi).unwrap();
        assert!((spec2.sub_symbol_dirac(&x) - expect).norm() < 1e-12);
    }

    #[test]
    fn sub_symbol_laplacian_scalar_potential() {
        let m = CliffordModule::build(3).unwrap();
        let c = 0.45;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m.clone(), vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let x = [1.0, 2.0, 3.0];
        let xi = [0.3, -1.1, 0.7];
        let got = spec.sub_symbol_laplacian(&x, &xi);
        // i (γ^k ψ + ψ γ^k) ξ_k = 2 i c γ^k ξ_k
        let expect = m.gamma_of(&xi).map(|z| z * C64::new(0.0, 2.0 * c));
        assert!((got - expect).norm() < 1e-13);
        let free = free_d3();
        assert!(free.sub_symbol_laplacian(&x, &xi).norm() < 1e-15);
    }
}
