//! Wodzicki (noncommutative) residues:
//! `res(A) = (1/(2π)^d) ∫_M ∫_{|ξ|=1} Tr σ_{-d}(A)(x, ξ) dS(ξ) dx`,
//! its subprincipal reformulations, and the residue route to the counting
//! coefficients `A_k(F, D) = res(F (D+|D|)/2 |D|^{k-d-1})` evaluated through
//! a per-mode matrix-function oracle plus scaling-fit homogeneous expansion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpectraError};
use crate::operators::DiracOperatorSpec;
use crate::spectral::hermitian_opnorm;
use crate::symbols::ClassicalSymbol;
use crate::{C64, CMatrix, TORUS_PERIOD};

const PI: f64 = std::f64::consts::PI;

/// Quadrature nodes on the unit sphere `S^{d-1}` whose weights sum to
/// `Vol(S^{d-1})`; product Gauss rules, exact on polynomials up to the order.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    d: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes_weights(&self) -> impl Iterator<Item = (&Vec<f64>, f64)> {
        self.nodes.iter().zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature of a scalar function on the sphere.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes_weights().map(|(n, w)| w * f(n)).sum()
    }
}

/// Build a sphere rule for `d ∈ {2, 3, 4}` exact on polynomials of degree
/// ≤ `order`.
pub fn sphere_quadrature(d: usize, order: usize) -> Result<SphereQuadrature> {
    let order = order.max(3);
    match d {
        2 => {
            // trapezoid on the circle: exact for trig degree ≤ n-1
            let n = order + 1;
            let w = 2.0 * PI / n as f64;
            let mut nodes = Vec::with_capacity(n);
            for j in 0..n {
                let phi = 2.0 * PI * j as f64 / n as f64;
                nodes.push(vec![phi.cos(), phi.sin()]);
            }
            Ok(SphereQuadrature { d, nodes, weights: vec![w; n] })
        }
        3 => {
            // Gauss-Legendre in cos θ × trapezoid in φ
            let ngl = order / 2 + 1;
            let nphi = order + 1;
            let (u, wu) = crate::numeric::gauss_legendre(ngl);
            let wphi = 2.0 * PI / nphi as f64;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (ui, wi) in u.iter().zip(&wu) {
                let s = (1.0 - ui * ui).sqrt();
                for j in 0..nphi {
                    let phi = 2.0 * PI * j as f64 / nphi as f64;
                    nodes.push(vec![s * phi.cos(), s * phi.sin(), *ui]);
                    weights.push(wi * wphi);
                }
            }
            Ok(SphereQuadrature { d, nodes, weights })
        }
        4 => {
            // Gauss-Chebyshev (2nd kind) in the polar angle × S² product rule
            let ncheb = order / 2 + 1;
            let inner = sphere_quadrature(3, order)?;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for k in 1..=ncheb {
                let t = k as f64 * PI / (ncheb as f64 + 1.0);
                let u = t.cos();
                let wu = PI / (ncheb as f64 + 1.0) * t.sin() * t.sin();
                let s = (1.0 - u * u).sqrt();
                for (omega, w2) in inner.nodes_weights() {
                    nodes.push(vec![u, s * omega[0], s * omega[1], s * omega[2]]);
                    weights.push(wu * w2);
                }
            }
            Ok(SphereQuadrature { d, nodes, weights })
        }
        _ => Err(SpectraError::UnsupportedDimension(d, "2..=4 (sphere rules)")),
    }
}

/// Homogeneous components of a matrix function of `ξ`, extracted per sphere
/// node by least squares over a radial scaling ladder:
/// `f(λω) ≈ Σ_j λ^{m-j} s_j(ω)`.
#[derive(Debug, Clone)]
pub struct HomogeneousExpansion {
    pub top_degree: f64,
    pub nodes: Vec<Vec<f64>>,
    pub node_weights: Vec<f64>,
    /// `components[node][j]` has degree `top_degree - j`.
    pub components: Vec<Vec<CMatrix>>,
    pub residual: f64,
}

impl HomogeneousExpansion {
    pub fn depth(&self) -> usize {
        self.components.first().map(|c| c.len()).unwrap_or(0)
    }

    /// Reconstruct `f(λω)` from the fitted components at one node.
    pub fn reconstruct(&self, node_idx: usize, lambda: f64) -> CMatrix {
        let comps = &self.components[node_idx];
        let r = comps[0].nrows();
        let mut out = CMatrix::zeros(r, r);
        for (j, c) in comps.iter().enumerate() {
            out += c.map(|z| z * C64::new(lambda.powf(self.top_degree - j as f64), 0.0));
        }
        out
    }

    /// Sphere integral of `Tr s_j`.
    pub fn sphere_trace_integral(&self, j: usize) -> f64 {
        self.components
            .iter()
            .zip(&self.node_weights)
            .map(|(comps, &w)| w * comps[j].trace().re)
            .sum()
    }
}

/// Extract homogeneous components of `f` valid for `|ξ| ≥ validity_radius`.
pub fn homogeneous_expand(
    f: &dyn Fn(&[f64]) -> CMatrix,
    top_degree: f64,
    depth: usize,
    quad: &SphereQuadrature,
    ladder: &[f64],
    validity_radius: f64,
) -> Result<HomogeneousExpansion> {
    assert!(depth >= 1);
    let lambda_min = ladder.iter().copied().fold(f64::INFINITY, f64::min);
    if lambda_min <= validity_radius {
        return Err(SpectraError::LadderInsideRadius { lambda_min, radius: validity_radius });
    }
    if ladder.len() < depth {
        return Err(SpectraError::Invalid(format!(
            "ladder of {} values cannot fit {} components",
            ladder.len(),
            depth
        )));
    }
    // shared design matrix in u = 1/λ after factoring out λ^top:
    // f(λω)/λ^top = Σ_j u^j s_j(ω)
    let n = ladder.len();
    let design = DMatrix::from_fn(n, depth, |i, j| ladder[i].powf(-(j as f64)));
    let svd = design.clone().svd(true, true);

    let mut components = Vec::with_capacity(quad.len());
    let mut worst_res: f64 = 0.0;
    for (node, _) in quad.nodes_weights() {
        let samples: Vec<CMatrix> = ladder
            .iter()
            .map(|&l| {
                let xi: Vec<f64> = node.iter().map(|&v| v * l).collect();
                f(&xi).map(|z| z / C64::new(l.powf(top_degree), 0.0))
            })
            .collect();
        let r = samples[0].nrows();
        let mut comps = vec![CMatrix::zeros(r, r); depth];
        let mut res_node: f64 = 0.0;
        let scale = samples.iter().map(|s| s.norm()).fold(0.0f64, f64::max).max(1e-30);
        for a in 0..r {
            for b in 0..r {
                for part in 0..2 {
                    let rhs = DVector::from_fn(n, |i, _| {
                        if part == 0 { samples[i][(a, b)].re } else { samples[i][(a, b)].im }
                    });
                    let sol = svd
                        .solve(&rhs, svd.singular_values.max() * 1e-13)
                        .map_err(|e| SpectraError::Invalid(format!("svd solve failed: {e}")))?;
                    let fitted = &design * &sol;
                    res_node = res_node.max((&rhs - fitted).norm());
                    for j in 0..depth {
                        if part == 0 {
                            comps[j][(a, b)] += C64::new(sol[j], 0.0);
                        } else {
                            comps[j][(a, b)] += C64::new(0.0, sol[j]);
                        }
                    }
                }
            }
        }
        worst_res = worst_res.max(res_node / scale);
        components.push(comps);
    }
    Ok(HomogeneousExpansion {
        top_degree,
        nodes: quad.nodes.clone(),
        node_weights: quad.weights.clone(),
        components,
        residual: worst_res,
    })
}

/// Total residue from an evaluator of the degree `-d` symbol component:
/// `(1/(2π)^d) ∫_M ∫_{|ξ|=1} Tr σ_{-d}(x, ξ)`. The claimed homogeneity is
/// verified at sample points before integrating.
pub fn res_total(
    sigma_minus_d: &dyn Fn(&[f64], &[f64]) -> CMatrix,
    d: usize,
    squad: &SphereQuadrature,
    torus_n: usize,
) -> Result<f64> {
    // homogeneity check at a few (x, ξ)
    let x0 = vec![0.9; d];
    for (node, _) in squad.nodes_weights().take(3) {
        let base = sigma_minus_d(&x0, node);
        for lambda in [2.0f64, 3.0] {
            let scaled: Vec<f64> = node.iter().map(|&v| v * lambda).collect();
            let got = sigma_minus_d(&x0, &scaled);
            let expect = base.map(|z| z * C64::new(lambda.powf(-(d as f64)), 0.0));
            let dev = (got - expect).norm() / base.norm().max(1e-30);
            if dev > 1e-9 {
                return Err(SpectraError::HomogeneityFailed(dev));
            }
        }
    }
    let torus = crate::asymptotics::torus_grid(d, torus_n);
    let mut acc = 0.0;
    for (x, wx) in &torus {
        for (node, wxi) in squad.nodes_weights() {
            acc += wx * wxi * sigma_minus_d(x, node).trace().re;
        }
    }
    Ok(acc / TORUS_PERIOD.powi(d as i32))
}

/// Residue of an order `1-d` classical symbol through its subprincipal
/// symbol: `res(A) = (1/(2π)^d) ∫_{T₁*M} Tr Sub(A)`.
pub fn res_via_sub(
    a: &ClassicalSymbol,
    squad: &SphereQuadrature,
    torus_n: usize,
    fd_step: f64,
) -> Result<f64> {
    let d = a.dim();
    let want = 1.0 - d as f64;
    if (a.order() - want).abs() > 1e-9 {
        return Err(SpectraError::OrderMismatch(a.order(), 0.0, want));
    }
    let torus = crate::asymptotics::torus_grid(d, torus_n);
    let mut acc = 0.0;
    for (x, wx) in &torus {
        for (node, wxi) in squad.nodes_weights() {
            acc += wx * wxi * a.sub_generic(x, node, fd_step)?.trace().re;
        }
    }
    Ok(acc / TORUS_PERIOD.powi(d as i32))
}

/// Residue of a product of symbols whose orders sum to `1-d`:
/// `res(AB) = (1/(2π)^d) ∫ Tr(Sub(A) σ_B^{(0)} + σ_A^{(0)} Sub(B))`.
pub fn res_pair(
    a: &ClassicalSymbol,
    b: &ClassicalSymbol,
    squad: &SphereQuadrature,
    torus_n: usize,
    fd_step: f64,
) -> Result<f64> {
    let d = a.dim();
    let want = 1.0 - d as f64;
    if (a.order() + b.order() - want).abs() > 1e-9 {
        return Err(SpectraError::OrderMismatch(a.order(), b.order(), want));
    }
    let torus = crate::asymptotics::torus_grid(d, torus_n);
    let mut acc = 0.0;
    for (x, wx) in &torus {
        for (node, wxi) in squad.nodes_weights() {
            let term = a.sub_generic(x, node, fd_step)? * b.component(0, x, node)
                + a.component(0, x, node) * b.sub_generic(x, node, fd_step)?;
            acc += wx * wxi * term.trace().re;
        }
    }
    Ok(acc / TORUS_PERIOD.powi(d as i32))
}

/// Outcome of the residue route with its internal quality measures.
#[derive(Debug, Clone, Copy)]
pub struct AkResidueReport {
    pub value: f64,
    /// Relative least-squares residual of the homogeneous expansion.
    pub expansion_residual: f64,
    /// Reconstruction deviation at a scaling point outside the fit ladder.
    pub rescale_deviation: f64,
}

/// Counting coefficients via the residue route, for constant-coefficient
/// specs and constant `F`:
/// `A_k(F, D) = res(F (D+|D|)/2 |D|^{k-d-1})`.
pub fn ak_via_residue(spec: &DiracOperatorSpec, f: &CMatrix, k: usize, order: usize) -> Result<f64> {
    ak_via_residue_report(spec, f, k, order).map(|r| r.value)
}

/// As [`ak_via_residue`], returning the expansion diagnostics.
///
/// The per-mode function `g(ξ) = F Σ_{λ_i(ξ)>0} λ_i^{k-d} P_i(ξ)` (spectral
/// projectors of the Hermitian `d(ξ)`) is expanded to depth `k+2`, its
/// degree `-d` component extracted and sphere-integrated; the `x`-integral
/// is the volume factor.
pub fn ak_via_residue_report(
    spec: &DiracOperatorSpec,
    f: &CMatrix,
    k: usize,
    order: usize,
) -> Result<AkResidueReport> {
    if k > 1 {
        return Err(SpectraError::ResidueDepth(k));
    }
    let d = spec.dimension();
    let c = spec.constant_matrix()?;
    let herm = (&c - c.adjoint()).norm();
    if herm > 1e-10 * c.norm().max(1.0) {
        return Err(SpectraError::NotHermitian { residual: herm, tol: 1e-10 });
    }
    let radius = hermitian_opnorm(&c);
    let scale = radius.max(1.0);
    // seven geometric rungs and depth k+4: the matrix-power series behind
    // |d(ξ)|^{k-d-1} decays only like (‖C‖/λ)^j, and the depth-(k+2) minimum
    // leaves percent-level aliasing in the extracted component
    let ladder: Vec<f64> = [4.0, 6.0, 8.0, 12.0, 16.0, 20.0, 24.0].iter().map(|&v| v * scale).collect();
    let squad = sphere_quadrature(d, order)?;
    let exponent = k as f64 - d as f64;
    let spec2 = spec.clone();
    let fmat = f.clone();
    let g = move |xi: &[f64]| -> CMatrix {
        let m = spec2.mode_matrix(xi).expect("constant spec");
        let eig = nalgebra::SymmetricEigen::new(m);
        let r = eig.eigenvalues.len();
        let mut out = CMatrix::zeros(r, r);
        for i in 0..r {
            let lam = eig.eigenvalues[i];
            if lam <= 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(i);
            let proj = CMatrix::from_fn(r, r, |a, b| v[a] * v[b].conj());
            out += proj.map(|z| z * C64::new(lam.powf(exponent), 0.0));
        }
        &fmat * out
    };
    let expansion = homogeneous_expand(&g, exponent, k + 4, &squad, &ladder, radius)?;
    if expansion.residual > 1e-4 {
        return Err(SpectraError::ExpansionResidual(expansion.residual, 1e-4));
    }
    // re-scaling check at a λ outside the fit ladder
    let test_lambda = 32.0 * scale;
    let mut worst: f64 = 0.0;
    for (i, (node, _)) in squad.nodes_weights().enumerate().take(4) {
        let xi: Vec<f64> = node.iter().map(|&v| v * test_lambda).collect();
        let truth = g(&xi);
        let recon = expansion.reconstruct(i, test_lambda);
        worst = worst.max((truth - recon).norm() / test_lambda.powf(exponent));
    }
    if worst > 1e-3 {
        return Err(SpectraError::ExpansionResidual(worst, 1e-3));
    }
    // degree -d sits k steps below the top degree k-d
    Ok(AkResidueReport {
        value: expansion.sphere_trace_integral(k),
        expansion_residual: expansion.residual,
        rescale_deviation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordModule;
    use crate::operators::DiracOperatorSpec;
    use std::sync::Arc;

    #[test]
    fn sphere_rules_are_exact() {
        for d in [2usize, 3, 4] {
            let q = sphere_quadrature(d, 12).unwrap();
            let vol = match d {
                2 => 2.0 * PI,
                3 => 4.0 * PI,
                _ => 2.0 * PI * PI,
            };
            assert!((q.total_weight() - vol).abs() < 1e-12, "Vol(S^{}) for d={d}", d - 1);
            // ∫ ξ₁² = Vol/d
            let m2 = q.integrate(|n| n[0] * n[0]);
            assert!((m2 - vol / d as f64).abs() < 1e-12, "d={d}: ∫ξ₁² = {m2}");
            // odd monomials vanish
            let modd = q.integrate(|n| n[0] * n[0] * n[0]);
            assert!(modd.abs() < 1e-13);
            let mixed = q.integrate(|n| n[0] * n[1]);
            assert!(mixed.abs() < 1e-13);
            // positive weights
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
        assert!(sphere_quadrature(5, 8).is_err());
    }

    #[test]
    fn homogeneous_expand_exact_cases() {
        let q = sphere_quadrature(3, 10).unwrap();
        let ladder = [4.0, 6.0, 8.0, 12.0, 16.0];
        // f = |ξ| Id: s₀ = Id, higher components vanish
        let f = |xi: &[f64]| {
            let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            CMatrix::identity(2, 2).map(|z| z * C64::new(n, 0.0))
        };
        let e = homogeneous_expand(&f, 1.0, 3, &q, &ladder, 0.5).unwrap();
        assert!(e.residual < 1e-12);
        for comps in &e.components {
            assert!((comps[0].clone() - CMatrix::identity(2, 2)).norm() < 1e-11);
            assert!(comps[1].norm() < 1e-9);
            assert!(comps[2].norm() < 1e-8);
        }
        // ladder inside validity radius is rejected
        assert!(matches!(
            homogeneous_expand(&f, 1.0, 2, &q, &ladder, 5.0),
            Err(SpectraError::LadderInsideRadius { .. })
        ));
    }

    #[test]
    fn homogeneous_expand_shifted_dirac_symbol() {
        // |d(ξ)| for d(ξ) = iγ·ξ + c Id: exactly |ξ| Id + c iγ·ξ/|ξ|
        let m = CliffordModule::build(3).unwrap();
        let c = 0.4;
        let q = sphere_quadrature(3, 10).unwrap();
        let ladder = [4.0, 6.0, 8.0, 12.0, 16.0];
        let mc = m.clone();
        let f = move |xi: &[f64]| {
            let h = mc.gamma_of(xi).map(|z| z * C64::new(0.0, 1.0))
                + CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
            let eig = nalgebra::SymmetricEigen::new(h);
            let mut out = CMatrix::zeros(2, 2);
            for i in 0..2 {
                let v = eig.eigenvectors.column(i);
                let proj = CMatrix::from_fn(2, 2, |a, b| v[a] * v[b].conj());
                out += proj.map(|z| z * C64::new(eig.eigenvalues[i].abs(), 0.0));
            }
            out
        };
        let e = homogeneous_expand(&f, 1.0, 2, &q, &ladder, c).unwrap();
        assert!(e.residual < 1e-10, "two-term expansion is exact, residual {}", e.residual);
        for (node, comps) in e.nodes.iter().zip(&e.components) {
            assert!((comps[0].clone() - CMatrix::identity(2, 2)).norm() < 1e-9);
            let expect = m.gamma_of(node).map(|z| z * C64::new(0.0, c));
            assert!((comps[1].clone() - expect).norm() < 1e-8);
        }
    }

    #[test]
    fn res_total_exact_symbol() {
        // σ_{-3} = |ξ|^{-3} Id₂ on T³ → 8π
        let sigma = |_x: &[f64], xi: &[f64]| {
            let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            CMatrix::identity(2, 2).map(|z| z * C64::new(n.powi(-3), 0.0))
        };
        let q = sphere_quadrature(3, 16).unwrap();
        let r = res_total(&sigma, 3, &q, 4).unwrap();
        assert!((r - 8.0 * PI).abs() < 1e-10, "res = {r} vs 8π");
        // x-dependent scalar factor scales by its mean
        let sigma_x = |x: &[f64], xi: &[f64]| {
            let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let fx = 1.0 + 0.5 * x[0].cos();
            CMatrix::identity(2, 2).map(|z| z * C64::new(fx * n.powi(-3), 0.0))
        };
        let rx = res_total(&sigma_x, 3, &q, 8).unwrap();
        assert!((rx - 8.0 * PI).abs() < 1e-10);
        // regular-parity (odd in ξ for d = 3) symbol has zero residue
        let sigma_odd = |_x: &[f64], xi: &[f64]| {
            let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            CMatrix::identity(2, 2).map(|z| z * C64::new(xi[0] * n.powi(-4), 0.0))
        };
        let ro = res_total(&sigma_odd, 3, &q, 8).unwrap();
        assert!(ro.abs() < 1e-12, "regular parity class: res = {ro}");
        // homogeneity violations are caught
        let bad = |_x: &[f64], xi: &[f64]| CMatrix::identity(2, 2).map(|z| z * C64::new(xi[0], 0.0));
        assert!(matches!(
            res_total(&bad, 3, &q, 4),
            Err(SpectraError::HomogeneityFailed(_))
        ));
    }

    #[test]
    fn res_via_sub_agrees_with_res_total() {
        // depth-2 symbol of order -2 on T³ with x-dependence in both parts
        let d = 3;
        let mk = || {
            ClassicalSymbol::new(
                d,
                2,
                -2.0,
                vec![
                    Arc::new(|x: &[f64], xi: &[f64]| {
                        let n2: f64 = xi.iter().map(|v| v * v).sum();
                        let fx = 1.0 + 0.3 * x[1].sin();
                        CMatrix::from_row_slice(2, 2, &[
                            C64::new(fx / n2, 0.0),
                            C64::new(0.2 / n2, 0.0),
                            C64::new(0.2 / n2, 0.0),
                            C64::new(-0.5 / n2, 0.0),
                        ])
                    }) as Arc<dyn Fn(&[f64], &[f64]) -> CMatrix + Send + Sync>,
                    Arc::new(|x: &[f64], xi: &[f64]| {
                        let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let gx = 0.7 - 0.2 * x[0].cos();
                        CMatrix::identity(2, 2).map(|z| z * C64::new(gx * n.powi(-3), 0.0))
                    }),
                ],
            )
        };
        let a = mk();
        let q = sphere_quadrature(3, 20).unwrap();
        let via_sub = res_via_sub(&a, &q, 8, 1e-4).unwrap();
        // direct: σ_{-3} of A is component 1
        let a2 = mk();
        let sigma = move |x: &[f64], xi: &[f64]| a2.component(1, x, xi);
        let direct = res_total(&sigma, 3, &q, 8).unwrap();
        assert!(
            (via_sub - direct).abs() < 1e-8,
            "res via Sub {via_sub} vs direct {direct}"
        );
        // order gate
        let wrong = ClassicalSymbol::depth2(3, 2, 0.0, |_x, _xi| CMatrix::identity(2, 2), |_x, _xi| {
            CMatrix::zeros(2, 2)
        });
        assert!(matches!(
            res_via_sub(&wrong, &q, 4, 1e-4),
            Err(SpectraError::OrderMismatch(..))
        ));
    }

    #[test]
    fn res_pair_symmetry_and_composition() {
        let m = CliffordModule::build(3).unwrap();
        let mut rng = crate::numeric::labeled_rng(13, "residue/pair");
        let spec = crate::operators::random_self_adjoint(&m, &mut rng, 1).unwrap();
        let dsym = crate::symbols::dirac_symbol(&spec);
        // B of order -3 built from the inverse square norm
        let b = ClassicalSymbol::new(
            3,
            2,
            -3.0,
            vec![
                Arc::new(|x: &[f64], xi: &[f64]| {
                    let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let fx = 1.0 + 0.25 * x[2].sin();
                    CMatrix::identity(2, 2).map(|z| z * C64::new(fx * n.powi(-3), 0.0))
                }) as Arc<dyn Fn(&[f64], &[f64]) -> CMatrix + Send + Sync>,
                Arc::new(|_x: &[f64], xi: &[f64]| {
                    let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    CMatrix::identity(2, 2).map(|z| z * C64::new(0.1 * n.powi(-4), 0.0))
                }),
            ],
        );
        let q = sphere_quadrature(3, 20).unwrap();
        let ab = res_pair(&dsym, &b, &q, 6, 1e-4).unwrap();
        let ba = res_pair(&b, &dsym, &q, 6, 1e-4).unwrap();
        assert!((ab - ba).abs() < 1e-9, "res(AB) = res(BA): {ab} vs {ba}");
        // against the composed depth-2 symbol through res_via_sub
        let comp = ClassicalSymbol::compose_depth2(&dsym, &b, 1e-4).unwrap();
        let direct = res_via_sub(&comp, &q, 6, 1e-4).unwrap();
        assert!((ab - direct).abs() < 1e-7, "pair {ab} vs composed {direct}");
        // identity-like order-0 B reduces res_pair to res_via_sub(A)
        let a_1d = ClassicalSymbol::new(
            3,
            2,
            -2.0,
            vec![
                Arc::new(|_x: &[f64], xi: &[f64]| {
                    let n2: f64 = xi.iter().map(|v| v * v).sum();
                    CMatrix::identity(2, 2).map(|z| z * C64::new(1.0 / n2, 0.0))
                }) as Arc<dyn Fn(&[f64], &[f64]) -> CMatrix + Send + Sync>,
                Arc::new(|_x: &[f64], xi: &[f64]| {
                    let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    CMatrix::identity(2, 2).map(|z| z * C64::new(0.3 * n.powi(-3), 0.0))
                }),
            ],
        );
        let triv = ClassicalSymbol::depth2(
            3,
            2,
            0.0,
            |_x, _xi| CMatrix::identity(2, 2),
            |_x, _xi| CMatrix::zeros(2, 2),
        );
        let via_pair = res_pair(&a_1d, &triv, &q, 4, 1e-4).unwrap();
        let via_sub = res_via_sub(&a_1d, &q, 4, 1e-4).unwrap();
        assert!((via_pair - via_sub).abs() < 1e-9);
    }

    #[test]
    fn ak_via_residue_weyl_term() {
        // k = 0, ψ = 0: A₀ = 4π; the degree -3 part of g is |ξ|^{-3} Id / 2
        let spec = DiracOperatorSpec::free(CliffordModule::build(3).unwrap());
        let id = CMatrix::identity(2, 2);
        let a0 = ak_via_residue(&spec, &id, 0, 20).unwrap();
        assert!((a0 - 4.0 * PI).abs() < 1e-8 * 4.0 * PI, "A₀ = {a0} vs 4π");
        // positivity for positive definite F
        let fpos = CMatrix::from_row_slice(2, 2, &[
            C64::new(2.0, 0.0),
            C64::new(0.3, 0.1),
            C64::new(0.3, -0.1),
            C64::new(1.0, 0.0),
        ]);
        let apos = ak_via_residue(&spec, &fpos, 0, 20).unwrap();
        assert!(apos > 0.0);
        assert!(matches!(
            ak_via_residue(&spec, &id, 2, 20),
            Err(SpectraError::ResidueDepth(2))
        ));
    }

    #[test]
    fn ak_via_residue_second_coefficient() {
        let m = CliffordModule::build(3).unwrap();
        let c = 0.3;
        let psi = CMatrix::identity(2, 2).map(|z| z * C64::new(c, 0.0));
        let spec = DiracOperatorSpec::constant(m.clone(), vec![CMatrix::zeros(2, 2); 3], psi).unwrap();
        let id = CMatrix::identity(2, 2);
        let a1 = ak_via_residue(&spec, &id, 1, 20).unwrap();
        assert!(
            (a1 + 8.0 * PI * c).abs() < 0.02 * 8.0 * PI * c,
            "A₁ = {a1} vs -8πc = {}",
            -8.0 * PI * c
        );
        // Hermitian grade-1 potential: vanishing second coefficient
        let psi1 = m.gamma(0).map(|z| z * C64::new(0.0, c));
        let spec1 = DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi1).unwrap();
        let a1g = ak_via_residue(&spec1, &id, 1, 20).unwrap();
        assert!(a1g.abs() < 1e-3 * 8.0 * PI * c, "grade-1: A₁ = {a1g}");
    }
}
