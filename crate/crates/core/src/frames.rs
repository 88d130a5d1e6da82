//! Orthonormal frame fields on the flat torus and the massless / generalized
//! Dirac operators they induce.
//!
//! Frames are products of plane rotations whose angles are trigonometric
//! polynomials of a single coordinate, so derivatives are analytic and
//! periodicity is guaranteed. With frame vectors `X_k = O_{kl} ∂_l` the
//! induced operator is
//! `D = γ(dx^l) ∂_l + R_i R_j γ(∇_{X_i} X_j) / 4`, the generalized Dirac
//! operator of the parallelizable construction; its potential relative to
//! the compatible connection is zero by construction.

use nalgebra::DMatrix;

use crate::clifford::CliffordModule;
use crate::error::{Result, SpectraError};
use crate::fields::TrigMatrixField;
use crate::operators::DiracOperatorSpec;
use crate::{C64, CMatrix};

/// Periodic angle `θ(u) = c₀ + Σ_m (a_m cos(mu) + b_m sin(mu))` of one torus
/// coordinate. A nonzero `linear` term is accepted in the data model only to
/// be rejected at validation (a non-periodic angle breaks the frame).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpec {
    pub coordinate: usize,
    pub constant: f64,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
    pub linear: f64,
}

impl AngleSpec {
    pub fn new(coordinate: usize, constant: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Self {
        Self { coordinate, constant, cos_coeffs, sin_coeffs, linear: 0.0 }
    }

    /// `θ = amplitude · sin(u)`.
    pub fn sine(coordinate: usize, amplitude: f64) -> Self {
        Self::new(coordinate, 0.0, vec![], vec![amplitude])
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut v = self.constant + self.linear * u;
        for (m, &a) in self.cos_coeffs.iter().enumerate() {
            v += a * ((m + 1) as f64 * u).cos();
        }
        for (m, &b) in self.sin_coeffs.iter().enumerate() {
            v += b * ((m + 1) as f64 * u).sin();
        }
        v
    }

    pub fn deriv(&self, u: f64) -> f64 {
        let mut v = self.linear;
        for (m, &a) in self.cos_coeffs.iter().enumerate() {
            let f = (m + 1) as f64;
            v -= a * f * (f * u).sin();
        }
        for (m, &b) in self.sin_coeffs.iter().enumerate() {
            let f = (m + 1) as f64;
            v += b * f * (f * u).cos();
        }
        v
    }

    /// Max harmonic of the angle itself.
    pub fn max_harmonic(&self) -> usize {
        self.cos_coeffs.len().max(self.sin_coeffs.len())
    }

    /// Total oscillation amplitude (bounds the Bessel-type decay of
    /// `cos θ`, `sin θ` Fourier coefficients).
    pub fn amplitude(&self) -> f64 {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).map(|v| v.abs()).sum()
    }
}

/// One plane rotation block (0-based axis indices).
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRotation {
    pub axis_a: usize,
    pub axis_b: usize,
    pub angle: AngleSpec,
}

/// Orthonormal frame `X_k(x) = O_{kl}(x) ∂_l`, a product of plane rotations.
#[derive(Debug, Clone)]
pub struct FrameField {
    d: usize,
    rotations: Vec<PlaneRotation>,
}

/// Frame consisting of a single plane rotation.
pub fn rotation_frame(d: usize, plane: (usize, usize), angle: AngleSpec) -> Result<FrameField> {
    FrameField::identity(d)?.compose(plane, angle)
}

impl FrameField {
    pub fn identity(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(SpectraError::UnsupportedDimension(d, "2..=8 (frames)"));
        }
        Ok(Self { d, rotations: Vec::new() })
    }

    /// Append a rotation by `angle` in the (a, b) coordinate plane.
    pub fn compose(mut self, plane: (usize, usize), angle: AngleSpec) -> Result<Self> {
        let (a, b) = plane;
        if a == b || a >= self.d || b >= self.d || angle.coordinate >= self.d {
            return Err(SpectraError::InvalidPlane(a, b, self.d));
        }
        if angle.linear != 0.0 {
            return Err(SpectraError::NonPeriodicAngle(angle.linear));
        }
        self.rotations.push(PlaneRotation { axis_a: a, axis_b: b, angle });
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn rotations(&self) -> &[PlaneRotation] {
        &self.rotations
    }

    fn rotation_matrix(&self, rot: &PlaneRotation, x: &[f64]) -> DMatrix<f64> {
        let theta = rot.angle.eval(x[rot.angle.coordinate]);
        let mut m = DMatrix::identity(self.d, self.d);
        m[(rot.axis_a, rot.axis_a)] = theta.cos();
        m[(rot.axis_a, rot.axis_b)] = theta.sin();
        m[(rot.axis_b, rot.axis_a)] = -theta.sin();
        m[(rot.axis_b, rot.axis_b)] = theta.cos();
        m
    }

    fn rotation_matrix_deriv(&self, rot: &PlaneRotation, x: &[f64], axis: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.d, self.d);
        if axis != rot.angle.coordinate {
            return m;
        }
        let u = x[rot.angle.coordinate];
        let theta = rot.angle.eval(u);
        let dtheta = rot.angle.deriv(u);
        m[(rot.axis_a, rot.axis_a)] = -theta.sin() * dtheta;
        m[(rot.axis_a, rot.axis_b)] = theta.cos() * dtheta;
        m[(rot.axis_b, rot.axis_a)] = -theta.cos() * dtheta;
        m[(rot.axis_b, rot.axis_b)] = -theta.sin() * dtheta;
        m
    }

    /// Frame matrix `O(x)`; row `k` holds the coordinate components of `X_k`.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut o = DMatrix::identity(self.d, self.d);
        for rot in &self.rotations {
            o *= self.rotation_matrix(rot, x);
        }
        o
    }

    /// Analytic partial derivative `∂_axis O(x)` (product rule over blocks).
    pub fn derivative(&self, x: &[f64], axis: usize) -> DMatrix<f64> {
        let n = self.rotations.len();
        let mut total = DMatrix::zeros(self.d, self.d);
        for i in 0..n {
            let mut term = DMatrix::identity(self.d, self.d);
            for (j, rot) in self.rotations.iter().enumerate() {
                let factor = if j == i {
                    self.rotation_matrix_deriv(rot, x, axis)
                } else {
                    self.rotation_matrix(rot, x)
                };
                term *= factor;
            }
            total += term;
        }
        total
    }

    /// `‖O(x)ᵀ O(x) - Id‖` (Frobenius).
    pub fn orthogonality_residual(&self, x: &[f64]) -> f64 {
        let o = self.evaluate(x);
        (o.transpose() * &o - DMatrix::identity(self.d, self.d)).norm()
    }

    /// Christoffel symbols `Γ^k_{ij}` of the frame, `∇_{X_i} X_j = Γ^k_{ij} X_k`
    /// with the flat connection: `Γ^k_{ij} = Σ_{l,m} O_{il} (∂_l O_{jm}) O_{km}`.
    pub fn christoffel(&self, x: &[f64]) -> ChristoffelData {
        let d = self.d;
        let o = self.evaluate(x);
        let derivs: Vec<DMatrix<f64>> = (0..d).map(|l| self.derivative(x, l)).collect();
        let mut gamma = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut acc = 0.0;
                    for l in 0..d {
                        for m in 0..d {
                            acc += o[(i, l)] * derivs[l][(j, m)] * o[(k, m)];
                        }
                    }
                    gamma[(k * d + i) * d + j] = acc;
                }
            }
        }
        ChristoffelData { d, gamma }
    }

    /// Leading coefficient fields `a_m(x) = γ(dx^m) = Σ_k R_k O_{km}(x)` and
    /// the compatible-connection coefficients
    /// `b_l = γ(∇_{∂_l} X_k) R_k ... = (1/4) Σ_{k,n,m} (∂_l O_{km}) O_{nm} R_k R_n`
    /// of the induced generalized Dirac operator.
    #[allow(clippy::needless_range_loop)]
    fn operator_fields(&self, module: &CliffordModule) -> (Vec<TrigMatrixField>, Vec<TrigMatrixField>) {
        let d = self.d;
        let r = module.rank();
        // scalar (1×1) entry fields of O and its derivatives
        let entries = self.entry_fields();
        let deriv_entries: Vec<Vec<Vec<TrigMatrixField>>> = (0..d)
            .map(|l| {
                entries
                    .iter()
                    .map(|row| row.iter().map(|e| e.derivative(l)).collect())
                    .collect()
            })
            .collect();

        let lift = |scalar: &TrigMatrixField, m: &CMatrix, acc: &mut TrigMatrixField| {
            for (n, c) in scalar.coefficients() {
                acc.add_term(n.clone(), m.map(|z| z * c[(0, 0)]));
            }
        };

        let mut leading = Vec::with_capacity(d);
        for mcol in 0..d {
            let mut am = TrigMatrixField::zero(d, r);
            for k in 0..d {
                lift(&entries[k][mcol], module.gamma(k), &mut am);
            }
            leading.push(am);
        }

        let quarter = C64::new(0.25, 0.0);
        let mut connection = Vec::with_capacity(d);
        for l in 0..d {
            let mut bl = TrigMatrixField::zero(d, r);
            for k in 0..d {
                for n in 0..d {
                    // s(x) = Σ_m ∂_l O_{km} · O_{nm}
                    let mut s = TrigMatrixField::zero(d, 1);
                    for m in 0..d {
                        s = s.add(&deriv_entries[l][k][m].mul(&entries[n][m]));
                    }
                    if s.is_zero() {
                        continue;
                    }
                    let rkrn = (module.gamma(k) * module.gamma(n)).map(|z| z * quarter);
                    lift(&s, &rkrn, &mut bl);
                }
            }
            connection.push(bl);
        }
        (leading, connection)
    }

    /// Entries of `O(x)` as 1×1 trigonometric fields, via single-axis
    /// sampling of each rotation block and field-matrix products.
    fn entry_fields(&self) -> Vec<Vec<TrigMatrixField>> {
        let d = self.d;
        let one = CMatrix::identity(1, 1);
        let mut acc: Vec<Vec<TrigMatrixField>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            TrigMatrixField::constant(d, one.clone())
                        } else {
                            TrigMatrixField::zero(d, 1)
                        }
                    })
                    .collect()
            })
            .collect();
        for rot in &self.rotations {
            let axis = rot.angle.coordinate;
            let mf = suggested_max_freq(&rot.angle);
            let ang = rot.angle.clone();
            let cos_f = TrigMatrixField::from_axis_function(d, 1, axis, |u| {
                CMatrix::from_element(1, 1, C64::new(ang.eval(u).cos(), 0.0))
            }, mf);
            let ang2 = rot.angle.clone();
            let sin_f = TrigMatrixField::from_axis_function(d, 1, axis, |u| {
                CMatrix::from_element(1, 1, C64::new(ang2.eval(u).sin(), 0.0))
            }, mf);
            // block matrix of the rotation as fields
            let block: Vec<Vec<TrigMatrixField>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            if i == rot.axis_a && j == rot.axis_a {
                                cos_f.clone()
                            } else if i == rot.axis_a && j == rot.axis_b {
                                sin_f.clone()
                            } else if i == rot.axis_b && j == rot.axis_a {
                                sin_f.scale(C64::new(-1.0, 0.0))
                            } else if i == rot.axis_b && j == rot.axis_b {
                                cos_f.clone()
                            } else if i == j {
                                TrigMatrixField::constant(d, one.clone())
                            } else {
                                TrigMatrixField::zero(d, 1)
                            }
                        })
                        .collect()
                })
                .collect();
            // acc = acc * block
            let mut next: Vec<Vec<TrigMatrixField>> = (0..d)
                .map(|_| (0..d).map(|_| TrigMatrixField::zero(d, 1)).collect())
                .collect();
            #[allow(clippy::needless_range_loop)]
            for i in 0..d {
                for j in 0..d {
                    let mut s = TrigMatrixField::zero(d, 1);
                    for k in 0..d {
                        s = s.add(&acc[i][k].mul(&block[k][j]));
                    }
                    next[i][j] = s;
                }
            }
            acc = next;
        }
        acc
    }
}

fn suggested_max_freq(angle: &AngleSpec) -> usize {
    let harm = angle.max_harmonic().max(1);
    let amp = angle.amplitude();
    (harm * (12 + 5 * amp.ceil() as usize)).min(96)
}

/// Christoffel symbols at a point; `gamma(k, i, j)` is `Γ^k_{ij}`.
#[derive(Debug, Clone)]
pub struct ChristoffelData {
    d: usize,
    gamma: Vec<f64>,
}

impl ChristoffelData {
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.d + i) * self.d + j]
    }

    /// Max violation of `Γ^k_{ij} = -Γ^j_{ik}` (orthonormality of the frame).
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.d {
            for i in 0..self.d {
                for j in 0..self.d {
                    worst = worst.max((self.gamma(k, i, j) + self.gamma(j, i, k)).abs());
                }
            }
        }
        worst
    }
}

/// The generalized ("massless" for d = 3, rank 2) Dirac operator of the
/// frame: `D = γ(dx^l) ∂_l + R_i R_j γ(∇_{X_i} X_j)/4` with
/// `γ(X) = g(X, X_k) R_k`. Stored as leading fields plus the compatible
/// connection; the stored potential is zero, so `H₁(D, D²) = 0` by
/// construction.
pub fn massless_dirac(frame: &FrameField, module: &CliffordModule) -> Result<DiracOperatorSpec> {
    if frame.dimension() != module.dimension() {
        return Err(SpectraError::ShapeMismatch {
            expected: format!("frame dimension {}", module.dimension()),
            got: format!("{}", frame.dimension()),
        });
    }
    let d = frame.dimension();
    let r = module.rank();
    if frame.rotations.is_empty() {
        // constant frame: plain γ∂
        return Ok(DiracOperatorSpec::free(module.clone()));
    }
    let (leading, connection) = frame.operator_fields(module);
    Ok(DiracOperatorSpec::twisted(
        module.clone(),
        leading,
        connection,
        TrigMatrixField::zero(d, r),
    ))
}

/// Closed-form subprincipal symbol of the d = 3 massless Dirac operator:
/// `Sub(D) = -(Γ^3_{12} + Γ^1_{23} + Γ^2_{31})/2`, a scalar multiple of the
/// identity in the fixed trivialization.
pub fn sub_massless_theoretical(frame: &FrameField, x: &[f64]) -> Result<f64> {
    if frame.dimension() != 3 {
        return Err(SpectraError::UnsupportedDimension(frame.dimension(), "3 (massless Sub)"));
    }
    let c = frame.christoffel(x);
    Ok(-(c.gamma(2, 0, 1) + c.gamma(0, 1, 2) + c.gamma(1, 2, 0)) / 2.0)
}
