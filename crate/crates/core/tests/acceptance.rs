//! Acceptance suite: every quantitative exit criterion at desk scale
//! (d = 3, side-2π torus, rank 2, Λ = 40), one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the table.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex;

use spectra_core::asymptotics::{
    a1_theoretical_dirac, default_heat_exponents, eta_residue, fit_counting, heat_fit,
    heat_ladder, l0_trace_theoretical, l1_trace_theoretical, local_counting_fit, make_mollifier,
    mollified_counting, resolvent_fit, resolvent_gamma_factor, zeta_residue, HeatMode,
    MollifierSpec,
};
use spectra_core::clifford::{hat_eigenvalue, CliffordModule};
use spectra_core::fields::TrigMatrixField;
use spectra_core::frames::{massless_dirac, rotation_frame, sub_massless_theoretical, AngleSpec};
use spectra_core::numeric::labeled_rng;
use spectra_core::operators::{random_self_adjoint, DiracOperatorSpec};
use spectra_core::residue::ak_via_residue;
use spectra_core::spectral::{exact_modes, SpectralData};
use spectra_core::symbols::{dirac_symbol, sub_product_residual};
use spectra_core::{C64, CMatrix};

const PI: f64 = std::f64::consts::PI;
const LAMBDA: f64 = 40.0;
const C_SHIFT: f64 = 0.3;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn rel_err(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

fn identity_field() -> TrigMatrixField {
    TrigMatrixField::constant(3, CMatrix::identity(2, 2))
}

fn free_spec() -> DiracOperatorSpec {
    DiracOperatorSpec::free(CliffordModule::build(3).unwrap())
}

fn shifted_spec() -> DiracOperatorSpec {
    let m = CliffordModule::build(3).unwrap();
    let psi = DMatrix::from_diagonal_element(2, 2, Complex::new(C_SHIFT, 0.0));
    DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap()
}

/// Hermitian grade-one potential `c·iγ¹` (γ¹ itself is anti-Hermitian, so
/// the self-adjoint representative of the grade is `iγ¹`).
fn grade_one_spec() -> DiracOperatorSpec {
    let m = CliffordModule::build(3).unwrap();
    let psi = m.gamma(0).map(|z| z * C64::new(0.0, C_SHIFT));
    DiracOperatorSpec::constant(m, vec![CMatrix::zeros(2, 2); 3], psi).unwrap()
}

fn free_data() -> &'static SpectralData {
    static DATA: OnceLock<SpectralData> = OnceLock::new();
    DATA.get_or_init(|| exact_modes(&free_spec(), LAMBDA).unwrap())
}

fn shifted_data() -> &'static SpectralData {
    static DATA: OnceLock<SpectralData> = OnceLock::new();
    DATA.get_or_init(|| exact_modes(&shifted_spec(), LAMBDA).unwrap())
}

fn grade_one_data() -> &'static SpectralData {
    static DATA: OnceLock<SpectralData> = OnceLock::new();
    DATA.get_or_init(|| exact_modes(&grade_one_spec(), LAMBDA).unwrap())
}

fn counting_fit_for(data: &SpectralData) -> spectra_core::asymptotics::AsymptoticFit {
    let id = identity_field();
    let w = data.matrix_elements(&id).unwrap();
    let chi = make_mollifier(&MollifierSpec::gaussian(1.0)).unwrap();
    let (lo, hi) = (LAMBDA / 3.0, 2.0 * LAMBDA / 3.0);
    let grid: Vec<f64> = (0..80).map(|i| lo + (hi - lo) * i as f64 / 79.0).collect();
    let series = mollified_counting(data, &w, &chi, &grid).unwrap();
    fit_counting(&series, (lo, hi), 3, 3).unwrap()
}

#[test]
fn criterion_01_clifford_algebra() {
    let mut worst_rel = 0.0f64;
    let mut worst_hat = 0.0f64;
    for d in 1..=6 {
        let m = CliffordModule::build(d).unwrap();
        worst_rel = worst_rel.max(m.relation_residual());
        // hat eigenvalues on every grade basis element
        for k in 0..=m.max_grade() {
            let expect = hat_eigenvalue(d, k);
            // probe each grade through its first basis product
            let idx: Vec<usize> = (0..k).collect();
            let basis = m.gamma_product(&idx);
            let hat = m.hat(&basis).unwrap();
            let dev = (hat - basis.map(|z| z * C64::new(expect, 0.0))).norm();
            worst_hat = worst_hat.max(dev);
        }
    }
    report(
        "1 (Clifford algebra, d = 1..6)",
        worst_rel == 0.0 && worst_hat < 1e-12,
        &format!("relation residual {worst_rel:.1e} (exact), hat-eigenvalue residual {worst_hat:.1e}"),
    );
}

#[test]
fn criterion_02_bochner_weitzenboeck() {
    let mut worst = 0.0f64;
    for d in [2usize, 3] {
        let m = CliffordModule::build(d).unwrap();
        let mut rng = labeled_rng(2024, &format!("acceptance/bw/d{d}"));
        for trial in 0..10 {
            let spec = random_self_adjoint(&m, &mut rng, 2).unwrap();
            let res = spec.bw_residual(3, trial as u64).unwrap();
            worst = worst.max(res);
        }
    }
    report(
        "2 (Bochner–Weitzenböck, 20 random operators)",
        worst < 1e-9,
        &format!("max relative residual {worst:.3e} (tolerance 1e-9)"),
    );
}

#[test]
fn criterion_03_weyl_a0_and_plain_heat() {
    let fit = counting_fit_for(shifted_data());
    let a0 = fit.coefficients[0];
    let e0 = rel_err(a0, 4.0 * PI);

    let id = identity_field();
    let ladder = heat_ladder(shifted_data(), 8);
    let plain = heat_fit(
        shifted_data(),
        &id,
        HeatMode::Plain,
        &ladder,
        &default_heat_exponents(3, HeatMode::Plain, 3),
    )
    .unwrap();
    let lead = plain.coefficient(-1.5).unwrap().0;
    let eh = rel_err(lead, 2.0 * PI.powf(1.5));
    report(
        "3 (Weyl/A₀ and plain heat)",
        e0 < 0.01 && eh < 0.001,
        &format!(
            "A₀ = {a0:.6} vs 4π (rel {e0:.2e}, tol 1%); heat leading {lead:.6} vs 2π^(3/2) = {:.6} (rel {eh:.2e}, tol 0.1%)",
            2.0 * PI.powf(1.5)
        ),
    );
}

#[test]
fn criterion_04_second_coefficient() {
    let fit = counting_fit_for(shifted_data());
    let a1 = fit.coefficients[1];
    let target = -8.0 * PI * C_SHIFT;
    let e1 = rel_err(a1, target);

    let fit_g = counting_fit_for(grade_one_data());
    let a1_g = fit_g.coefficients[1].abs();
    let bound = 0.02 * 8.0 * PI * C_SHIFT;
    report(
        "4 (second coefficient)",
        e1 < 0.02 && a1_g < bound,
        &format!(
            "A₁(ψ = 0.3·Id) = {a1:.6} vs -8π·0.3 = {target:.6} (rel {e1:.2e}, tol 2%); |A₁(grade-1 ψ = 0.3·iγ¹)| = {a1_g:.3e} < {bound:.3e}"
        ),
    );
}

#[test]
fn criterion_05_signed_heat_h1() {
    let id = identity_field();
    let ladder = heat_ladder(shifted_data(), 8);
    let signed = heat_fit(
        shifted_data(),
        &id,
        HeatMode::Signed,
        &ladder,
        &default_heat_exponents(3, HeatMode::Signed, 3),
    )
    .unwrap();
    let lead = signed.coefficient(-1.5).unwrap().0;
    // (2π)³ · Tr(-2c (4π)^{-3/2} Id₂)
    let target = (2.0 * PI).powi(3) * (-2.0 * C_SHIFT) * (4.0 * PI).powf(-1.5) * 2.0;
    let e = rel_err(lead, target);
    report(
        "5 (signed heat / H₁)",
        e < 0.001,
        &format!("t^(3/2)·tr(D e^(-tD²)) → {lead:.8} vs {target:.8} (rel {e:.2e}, tol 0.1%)"),
    );
}

#[test]
fn criterion_06_zeta_eta_residues() {
    let id = identity_field();
    let res3 = zeta_residue(shifted_data(), &id, 3.0, 3).unwrap();
    let e3 = rel_err(res3, 8.0 * PI);
    let res2 = zeta_residue(shifted_data(), &id, 2.0, 3).unwrap();
    let e2 = res2.abs() / (8.0 * PI);
    let eta2 = eta_residue(shifted_data(), &id, 2.0, 4).unwrap();
    let eta_target = -16.0 * PI * C_SHIFT;
    let ee = rel_err(eta2, eta_target);
    report(
        "6 (zeta/eta residues)",
        e3 < 0.005 && e2 < 0.005 && ee < 0.02,
        &format!(
            "Res₃ζ = {res3:.6} vs 8π (rel {e3:.2e}, tol 0.5%); Res₂ζ = {res2:.3e} (|·|/8π = {e2:.2e}, tol 0.5%); Res₂η = {eta2:.6} vs -16π·0.3 = {eta_target:.6} (rel {ee:.2e}, tol 2%)"
        ),
    );
}

#[test]
fn criterion_07_resolvent() {
    let id = identity_field();
    // resolvent duals decay like e^{-2π/√t}: keep t ≤ 0.15 so closed
    // geodesics stay below 1e-7 of the trace
    let ts: Vec<f64> = (0..8).map(|k| 0.03 * 5f64.powf(k as f64 / 7.0)).collect();
    let fit5 = resolvent_fit(free_data(), &id, 5.0, &ts, 4).unwrap();
    let b05 = fit5.coefficient(-1.5).unwrap().0;
    let e5 = rel_err(b05, 8.0 * PI / 3.0);

    let fit7 = resolvent_fit(free_data(), &id, 7.0, &ts, 4).unwrap();
    let b07 = fit7.coefficient(-1.5).unwrap().0;
    let ratio = b05 / b07;
    let ratio_theory = resolvent_gamma_factor(3, 0.0, 0, 5.0) / resolvent_gamma_factor(3, 0.0, 0, 7.0);
    let er = rel_err(ratio, ratio_theory);
    report(
        "7 (resolvent)",
        e5 < 0.005 && er < 0.01,
        &format!(
            "B₀⁽⁵⁾ = {b05:.6} vs 8π/3 = {:.6} (rel {e5:.2e}, tol 0.5%); B₀⁽⁵⁾/B₀⁽⁷⁾ = {ratio:.6} vs Γ-formula {ratio_theory:.6} (rel {er:.2e}, tol 1%)",
            8.0 * PI / 3.0
        ),
    );
}

#[test]
fn criterion_08_residue_route() {
    let id = CMatrix::identity(2, 2);
    let a0 = ak_via_residue(&free_spec(), &id, 0, 24).unwrap();
    let e0 = rel_err(a0, 4.0 * PI);
    let a1 = ak_via_residue(&shifted_spec(), &id, 1, 24).unwrap();
    let target = -8.0 * PI * C_SHIFT;
    let e1 = rel_err(a1, target);
    report(
        "8 (residue route)",
        e0 < 0.005 && e1 < 0.02,
        &format!(
            "A₀ = {a0:.8} vs 4π (rel {e0:.2e}, tol 0.5%); A₁ = {a1:.6} vs {target:.6} (rel {e1:.2e}, tol 2%)"
        ),
    );
}

#[test]
fn criterion_09_subprincipal_symbols() {
    // generic finite-difference route vs analytic formula at 50 random
    // points. The probe operator is a twisted massless operator plus a
    // random potential: its leading coefficients depend on x, so the
    // finite-difference mixed term ∂²σ⁰/∂x∂ξ is genuinely nonzero and the
    // two routes are independent computations. A random constant-gamma
    // operator is added as a second probe of the σ^{(1)} path.
    let m = CliffordModule::build(3).unwrap();
    let mut rng = labeled_rng(7, "acceptance/sub");
    // in-plane angle dependence (the rotation coordinate lies in the
    // rotation plane) keeps ∂_l a_l and the Poisson brackets nonzero
    let frame9 = rotation_frame(3, (0, 2), AngleSpec::new(0, 0.4, vec![0.7], vec![0.3])).unwrap();
    let twisted = massless_dirac(&frame9, &m)
        .unwrap()
        .with_extra_potential(&spectra_core::operators::random_hermitian_field(&mut rng, 3, 2, 1));
    let constant = random_self_adjoint(&m, &mut rng, 2).unwrap();
    let mut worst_fd = 0.0f64;
    use rand::Rng;
    for spec in [&twisted, &constant] {
        let sym = dirac_symbol(spec);
        for _ in 0..25 {
            let x = [
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            ];
            let xi = [
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
            ];
            let analytic = spec.sub_symbol_dirac(&x);
            let generic = sym.sub_generic(&x, &xi, 1e-4).unwrap();
            worst_fd = worst_fd.max((analytic - generic).norm());
        }
    }

    // massless twisted frame: Sub(D) = -θ'(x¹)/2 · Id pointwise
    let frame = rotation_frame(3, (1, 2), AngleSpec::sine(0, 1.0)).unwrap();
    let massless = massless_dirac(&frame, &m).unwrap();
    let mut worst_massless = 0.0f64;
    for i in 0..20 {
        let x1 = 2.0 * PI * i as f64 / 20.0;
        let x = [x1, 1.0, 2.5];
        let sub = massless.sub_symbol_dirac(&x);
        let theo = sub_massless_theoretical(&frame, &x).unwrap();
        let expect = CMatrix::identity(2, 2).map(|z| z * C64::new(theo, 0.0));
        worst_massless = worst_massless.max((sub.clone() - expect).norm());
        // closed form -cos(x¹)/2 for θ = sin
        worst_massless = worst_massless.max((theo + x1.cos() / 2.0).abs());
    }

    // product rule residual between two differently twisted symbols, so
    // both x-derivatives entering the bracket are nonzero
    let frame9b = rotation_frame(3, (1, 2), AngleSpec::new(1, 0.0, vec![0.5], vec![0.6])).unwrap();
    let tsym_a = dirac_symbol(&twisted);
    let tsym_b = dirac_symbol(&massless_dirac(&frame9b, &m).unwrap());
    let prod_res =
        sub_product_residual(&tsym_a, &tsym_b, &[0.4, 1.3, 2.2], &[0.9, -0.5, 1.2], 1e-4).unwrap();

    report(
        "9 (subprincipal symbols)",
        worst_fd < 1e-6 && worst_massless < 1e-6 && prod_res < 1e-7,
        &format!(
            "Sub(D) analytic vs finite-difference: {worst_fd:.2e} (tol 1e-6); massless Sub = -θ'/2·Id: {worst_massless:.2e} (tol 1e-6); product-rule residual {prod_res:.2e} (tol 1e-7)"
        ),
    );
}

#[test]
fn criterion_10_local_counting() {
    let chi = make_mollifier(&MollifierSpec::gaussian(1.0)).unwrap();
    let (lo, hi) = (LAMBDA / 3.0, 2.0 * LAMBDA / 3.0);
    let grid: Vec<f64> = (0..80).map(|i| lo + (hi - lo) * i as f64 / 79.0).collect();
    let x = [0.7, 1.9, 4.0];
    let fit = local_counting_fit(shifted_data(), &x, &chi, &grid, (lo, hi), 3).unwrap();
    let l0 = fit.coefficients[0];
    let l1 = fit.coefficients[1];
    let l0_target = l0_trace_theoretical(3, 2);
    let l1_target = l1_trace_theoretical(&shifted_spec(), &x);
    let e0 = rel_err(l0, l0_target);
    let e1 = rel_err(l1, l1_target);
    report(
        "10 (local counting)",
        e0 < 0.02 && e1 < 0.03,
        &format!(
            "Tr L₀ = {l0:.8} vs 1/(2π²) = {l0_target:.8} (rel {e0:.2e}, tol 2%); Tr L₁ = {l1:.6} vs -c/π² = {l1_target:.6} (rel {e1:.2e}, tol 3%)"
        ),
    );
}

#[test]
fn closed_forms_behind_criteria() {
    // The closed forms quoted in criteria 4 and 10 derive from the same
    // hat-map expression; pin them against the evaluated fields once.
    let spec = shifted_spec();
    let id = identity_field();
    let a1 = a1_theoretical_dirac(&spec, &id).unwrap();
    assert!((a1 + 8.0 * PI * C_SHIFT).abs() < 1e-12);
    let l1 = l1_trace_theoretical(&spec, &[0.0; 3]);
    assert!((l1 + C_SHIFT / (PI * PI)).abs() < 1e-14);
}
