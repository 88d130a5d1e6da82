//! Classical (polyhomogeneous) symbols as graded evaluators, the generic
//! subprincipal symbol
//! `Sub(A) = σ^{(1)} + (i/2) ∂²σ^{(0)}/∂x^k∂ξ_k`
//! (the `log √G` term vanishes on the flat torus), symbolic composition to
//! depth two, and the product rule
//! `Sub(AB) = Sub(A)σ_B^{(0)} + σ_A^{(0)}Sub(B) + (1/2i){σ_A^{(0)}, σ_B^{(0)}}`.

use std::sync::Arc;

use crate::error::{Result, SpectraError};
use crate::operators::DiracOperatorSpec;
use crate::{C64, CMatrix};

type Evaluator = Arc<dyn Fn(&[f64], &[f64]) -> CMatrix + Send + Sync>;

/// Default step for central finite differences on symbol evaluators. Mixed
/// second differences divide by 4h², so 1e-4 balances truncation against
/// roundoff at the 1e-8 level.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// A classical symbol of order `m`, given by homogeneous components
/// `σ^{(j)}(x, ξ)` of degree `m - j`.
#[derive(Clone)]
pub struct ClassicalSymbol {
    d: usize,
    r: usize,
    order: f64,
    components: Vec<Evaluator>,
}

impl std::fmt::Debug for ClassicalSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalSymbol")
            .field("d", &self.d)
            .field("r", &self.r)
            .field("order", &self.order)
            .field("depth", &self.components.len())
            .finish()
    }
}

impl ClassicalSymbol {
    pub fn new(d: usize, r: usize, order: f64, components: Vec<Evaluator>) -> Self {
        assert!(!components.is_empty());
        Self { d, r, order, components }
    }

    /// Symbol with two explicit closures for `σ^{(0)}` and `σ^{(1)}`.
    pub fn depth2<F0, F1>(d: usize, r: usize, order: f64, s0: F0, s1: F1) -> Self
    where
        F0: Fn(&[f64], &[f64]) -> CMatrix + Send + Sync + 'static,
        F1: Fn(&[f64], &[f64]) -> CMatrix + Send + Sync + 'static,
    {
        Self::new(d, r, order, vec![Arc::new(s0), Arc::new(s1)])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn depth(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize, x: &[f64], xi: &[f64]) -> CMatrix {
        (self.components[j])(x, xi)
    }

    /// Relative homogeneity deviation of component `j` under `ξ ↦ λξ`,
    /// checked at `λ ∈ {2, 3}`. Components are only defined for `ξ ≠ 0`.
    pub fn homogeneity_residual(&self, j: usize, x: &[f64], xi: &[f64]) -> f64 {
        let base = self.component(j, x, xi);
        let scale = base.norm().max(1e-30);
        let mut worst: f64 = 0.0;
        for lambda in [2.0f64, 3.0] {
            let scaled_xi: Vec<f64> = xi.iter().map(|&v| lambda * v).collect();
            let got = self.component(j, x, &scaled_xi);
            let expect = base.map(|z| z * C64::new(lambda.powf(self.order - j as f64), 0.0));
            worst = worst.max((got - expect).norm() / (scale * lambda.powf(self.order - j as f64)).max(1e-30));
        }
        worst
    }

    /// Generic subprincipal symbol with central finite differences of step `h`.
    pub fn sub_generic(&self, x: &[f64], xi: &[f64], h: f64) -> Result<CMatrix> {
        if self.depth() < 2 {
            return Err(SpectraError::SymbolDepth { needed: 2, depth: self.depth() });
        }
        let mut out = self.component(1, x, xi);
        let mixed = self.mixed_x_xi_trace_term(x, xi, h);
        out += mixed.map(|z| z * C64::new(0.0, 0.5));
        Ok(out)
    }

    /// `Σ_k ∂²σ^{(0)}/∂x^k∂ξ_k` by 4-point central differences.
    fn mixed_x_xi_trace_term(&self, x: &[f64], xi: &[f64], h: f64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.r, self.r);
        for k in 0..self.d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let mut xip = xi.to_vec();
            let mut xim = xi.to_vec();
            xip[k] += h;
            xim[k] -= h;
            let f_pp = self.component(0, &xp, &xip);
            let f_pm = self.component(0, &xp, &xim);
            let f_mp = self.component(0, &xm, &xip);
            let f_mm = self.component(0, &xm, &xim);
            acc += (f_pp - f_pm - f_mp + f_mm).map(|z| z / C64::new(4.0 * h * h, 0.0));
        }
        acc
    }

    /// Poisson bracket `{σ_A^{(0)}, σ_B^{(0)}} = ∂_ξ A·∂_x B - ∂_x A·∂_ξ B`
    /// by central differences.
    pub fn poisson_bracket(a: &Self, b: &Self, x: &[f64], xi: &[f64], h: f64) -> CMatrix {
        let r = a.r;
        let mut acc = CMatrix::zeros(r, r);
        for k in 0..a.d {
            let da_dxi = partial(a, 0, x, xi, k, false, h);
            let db_dx = partial(b, 0, x, xi, k, true, h);
            let da_dx = partial(a, 0, x, xi, k, true, h);
            let db_dxi = partial(b, 0, x, xi, k, false, h);
            acc += da_dxi * db_dx - da_dx * db_dxi;
        }
        acc
    }

    /// Depth-2 symbolic composition:
    /// `σ_{AB}^{(0)} = σ_A^{(0)} σ_B^{(0)}`,
    /// `σ_{AB}^{(1)} = σ_A^{(0)} σ_B^{(1)} + σ_A^{(1)} σ_B^{(0)}
    ///                + (1/i) ∂_ξ σ_A^{(0)} · ∂_x σ_B^{(0)}`.
    pub fn compose_depth2(a: &Self, b: &Self, h: f64) -> Result<Self> {
        if a.depth() < 2 || b.depth() < 2 {
            return Err(SpectraError::SymbolDepth {
                needed: 2,
                depth: a.depth().min(b.depth()),
            });
        }
        if a.d != b.d || a.r != b.r {
            return Err(SpectraError::ShapeMismatch {
                expected: format!("{}d rank {}", a.d, a.r),
                got: format!("{}d rank {}", b.d, b.r),
            });
        }
        let (a0, a1) = (a.components[0].clone(), a.components[1].clone());
        let (b0, b1) = (b.components[0].clone(), b.components[1].clone());
        let (ac, bc) = (a.clone(), b.clone());
        let d = a.d;
        let s0: Evaluator = {
            let (a0, b0) = (a0.clone(), b0.clone());
            Arc::new(move |x: &[f64], xi: &[f64]| a0(x, xi) * b0(x, xi))
        };
        let s1: Evaluator = Arc::new(move |x: &[f64], xi: &[f64]| {
            let mut out = a0(x, xi) * b1(x, xi) + a1(x, xi) * b0(x, xi);
            let minus_i = C64::new(0.0, -1.0);
            for k in 0..d {
                let da_dxi = partial(&ac, 0, x, xi, k, false, h);
                let db_dx = partial(&bc, 0, x, xi, k, true, h);
                out += (da_dxi * db_dx).map(|z| z * minus_i);
            }
            out
        });
        Ok(Self::new(a.d, a.r, a.order + b.order, vec![s0, s1]))
    }
}

fn partial(s: &ClassicalSymbol, j: usize, x: &[f64], xi: &[f64], k: usize, in_x: bool, h: f64) -> CMatrix {
    let (mut px, mut mx) = (x.to_vec(), x.to_vec());
    let (mut pxi, mut mxi) = (xi.to_vec(), xi.to_vec());
    if in_x {
        px[k] += h;
        mx[k] -= h;
    } else {
        pxi[k] += h;
        mxi[k] -= h;
    }
    (s.component(j, &px, &pxi) - s.component(j, &mx, &mxi)).map(|z| z / C64::new(2.0 * h, 0.0))
}

/// Residual of the subprincipal product rule at one phase-space point:
/// `‖Sub(AB) - [Sub(A)σ_B^{(0)} + σ_A^{(0)}Sub(B) + (1/2i){σ_A^{(0)},σ_B^{(0)}}]‖`.
pub fn sub_product_residual(
    a: &ClassicalSymbol,
    b: &ClassicalSymbol,
    x: &[f64],
    xi: &[f64],
    h: f64,
) -> Result<f64> {
    let ab = ClassicalSymbol::compose_depth2(a, b, h)?;
    let lhs = ab.sub_generic(x, xi, h)?;
    let rhs = a.sub_generic(x, xi, h)? * b.component(0, x, xi)
        + a.component(0, x, xi) * b.sub_generic(x, xi, h)?
        + ClassicalSymbol::poisson_bracket(a, b, x, xi, h).map(|z| z * C64::new(0.0, -0.5));
    Ok((lhs - rhs).norm())
}

/// Depth-2 symbol of a Dirac operator: `σ^{(0)} = i a_l(x) ξ_l`,
/// `σ^{(1)} = Σ a_l b_l + ψ`.
pub fn dirac_symbol(spec: &DiracOperatorSpec) -> ClassicalSymbol {
    let d = spec.dimension();
    let r = spec.rank();
    let leading: Vec<_> = (0..d).map(|l| spec.gamma_coefficient(l)).collect();
    let zeroth = spec.zeroth_order_field();
    ClassicalSymbol::depth2(
        d,
        r,
        1.0,
        move |x, xi| {
            let mut out = CMatrix::zeros(r, r);
            for (l, al) in leading.iter().enumerate() {
                out += al.eval(x).map(|z| z * C64::new(0.0, xi[l]));
            }
            out
        },
        move |x, _xi| zeroth.eval(x),
    )
}

/// Depth-2 symbol of `D²`: `σ^{(0)} = |ξ|² Id`, `σ^{(1)} = Sub(D²)` (the
/// principal symbol is x-independent on the flat torus, so the two agree).
pub fn laplacian_symbol(spec: &DiracOperatorSpec) -> ClassicalSymbol {
    let d = spec.dimension();
    let r = spec.rank();
    let spec1 = spec.clone();
    ClassicalSymbol::depth2(
        d,
        r,
        2.0,
        move |_x, xi| {
            let q: f64 = xi.iter().map(|&v| v * v).sum();
            CMatrix::identity(r, r).map(|z| z * C64::new(q, 0.0))
        },
        move |x, xi| spec1.sub_symbol_laplacian(x, xi),
    )
}
