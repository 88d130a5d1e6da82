//! TOML experiment configuration: operator block, endomorphism terms,
//! spectral resolution, and per-experiment parameters with defaults.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use spectra_core::clifford::CliffordModule;
use spectra_core::fields::TrigMatrixField;
use spectra_core::frames::{rotation_frame, AngleSpec, FrameField};
use spectra_core::operators::DiracOperatorSpec;
use spectra_core::CMatrix;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dimension: usize,
    pub seed: u64,
    pub operator: OperatorConfig,
    /// Fourier terms of the endomorphism F; empty means the identity.
    pub endomorphism: Vec<MatrixTerm>,
    pub spectral: SpectralConfig,
    pub experiment: ExperimentConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dimension: 3,
            seed: 1,
            operator: OperatorConfig::default(),
            endomorphism: Vec::new(),
            spectral: SpectralConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// "free" | "fields" | "frame"
    pub kind: String,
    /// Connection coefficient terms b_axis (1-based axis).
    pub b: Vec<ConnectionTerm>,
    /// Potential terms ψ.
    pub psi: Vec<MatrixTerm>,
    /// Frame block for kind = "frame".
    pub frame: Option<FrameConfig>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { kind: "free".into(), b: Vec::new(), psi: Vec::new(), frame: None }
    }
}

/// One Fourier coefficient `c_n` of a matrix field: `re + i·im` at `freq`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct MatrixTerm {
    pub freq: Vec<i32>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ConnectionTerm {
    /// 1-based coordinate axis of the coefficient b_axis.
    pub axis: usize,
    pub freq: Vec<i32>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

/// Single-plane rotation frame `{plane, Fourier coefficients of θ}`
/// (1-based axes).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub plane: [usize; 2],
    pub coordinate: usize,
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { plane: [2, 3], coordinate: 1, constant: 0.0, cos: vec![], sin: vec![1.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    /// "exact" | "galerkin"
    pub method: String,
    pub lambda: f64,
    pub k_basis: i32,
    pub size_limit: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            method: "exact".into(),
            lambda: 24.0,
            k_basis: 4,
            size_limit: spectra_core::spectral::DEFAULT_EIGENSIZE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Fit window [lo, hi]; default [Λ/3, 2Λ/3].
    pub window: Option<[f64; 2]>,
    pub terms: usize,
    /// "gaussian" | "fourier-bump"
    pub mollifier: String,
    pub width: f64,
    pub grid_points: usize,
    pub t_samples: usize,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    /// zeta/eta evaluation points s₀; default {d, d-1}.
    pub s0: Vec<f64>,
    pub k_sub: usize,
    pub n_power: f64,
    /// residue-route coefficients to compute.
    pub k: Vec<usize>,
    pub quad_order: usize,
    /// evaluation points for sub-symbol / local experiments.
    pub points: Vec<Vec<f64>>,
    /// bw-check trials and random-field bandwidth.
    pub trials: usize,
    pub max_freq: i32,
    /// Also write the raw spectrum as (mu, k1..kd, weight) rows.
    pub export_spectrum: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "report".into(),
            window: None,
            terms: 3,
            mollifier: "gaussian".into(),
            width: 1.0,
            grid_points: 80,
            t_samples: 8,
            t_min: None,
            t_max: None,
            s0: Vec::new(),
            k_sub: 3,
            n_power: 5.0,
            k: vec![0, 1],
            quad_order: 24,
            points: Vec::new(),
            trials: 20,
            max_freq: 2,
            export_spectrum: false,
        }
    }
}

fn term_matrix(r: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix, String> {
    let get = |m: &[Vec<f64>], i: usize, j: usize| -> f64 {
        m.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0)
    };
    if re.len() > r || im.len() > r {
        return Err(format!("matrix term has more than {r} rows"));
    }
    Ok(DMatrix::from_fn(r, r, |i, j| Complex::new(get(re, i, j), get(im, i, j))))
}

fn build_field(d: usize, r: usize, terms: &[MatrixTerm]) -> Result<TrigMatrixField, String> {
    let mut f = TrigMatrixField::zero(d, r);
    for t in terms {
        if t.freq.len() != d {
            return Err(format!("frequency {:?} does not match dimension {d}", t.freq));
        }
        f.add_term(t.freq.clone(), term_matrix(r, &t.re, &t.im)?);
    }
    Ok(f)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn module(&self) -> Result<CliffordModule, String> {
        CliffordModule::build(self.dimension).map_err(|e| e.to_string())
    }

    pub fn frame(&self) -> Result<FrameField, String> {
        let fc = self.operator.frame.clone().unwrap_or_default();
        let [a, b] = fc.plane;
        if a == 0 || b == 0 || fc.coordinate == 0 {
            return Err("frame axes are 1-based".into());
        }
        let angle = AngleSpec::new(fc.coordinate - 1, fc.constant, fc.cos.clone(), fc.sin.clone());
        rotation_frame(self.dimension, (a - 1, b - 1), angle).map_err(|e| e.to_string())
    }

    /// Assemble the Dirac operator described by the operator block.
    pub fn operator(&self) -> Result<DiracOperatorSpec, String> {
        let module = self.module()?;
        let d = self.dimension;
        let r = module.rank();
        match self.operator.kind.as_str() {
            "free" => Ok(DiracOperatorSpec::free(module)),
            "fields" => {
                let mut b = vec![TrigMatrixField::zero(d, r); d];
                for t in &self.operator.b {
                    if t.axis == 0 || t.axis > d {
                        return Err(format!("connection axis {} out of range 1..={d}", t.axis));
                    }
                    if t.freq.len() != d {
                        return Err(format!("frequency {:?} does not match dimension {d}", t.freq));
                    }
                    b[t.axis - 1].add_term(t.freq.clone(), term_matrix(r, &t.re, &t.im)?);
                }
                let psi = build_field(d, r, &self.operator.psi)?;
                DiracOperatorSpec::new(module, b, psi).map_err(|e| e.to_string())
            }
            "frame" => {
                let frame = self.frame()?;
                let base = spectra_core::frames::massless_dirac(&frame, &module)
                    .map_err(|e| e.to_string())?;
                let psi = build_field(d, r, &self.operator.psi)?;
                Ok(if psi.is_zero() { base } else { base.with_extra_potential(&psi) })
            }
            other => Err(format!("unknown operator kind '{other}' (free | fields | frame)")),
        }
    }

    pub fn endomorphism_field(&self) -> Result<TrigMatrixField, String> {
        let module = self.module()?;
        if self.endomorphism.is_empty() {
            return Ok(TrigMatrixField::constant(
                self.dimension,
                CMatrix::identity(module.rank(), module.rank()),
            ));
        }
        build_field(self.dimension, module.rank(), &self.endomorphism)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.experiment.window {
            Some([lo, hi]) => (lo, hi),
            None => {
                let lam = self.safe_cutoff();
                (lam / 3.0, 2.0 * lam / 3.0)
            }
        }
    }

    pub fn safe_cutoff(&self) -> f64 {
        if self.spectral.method == "galerkin" {
            self.spectral.k_basis as f64 / 2.0
        } else {
            self.spectral.lambda
        }
    }
}
