//! Run configuration: TOML, versioned with `schema_version`, unknown keys rejected.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use krotov::models::{
    make_fourier_grid, make_lambda, make_spin_spin, make_tls, ControlSettings, CostChoice, FourierGrid, LambdaParams, ShapeChoice,
    TlsTarget,
};
use krotov::operator::pauli;
use krotov::textio::read_columns;
use krotov::{FinalTimeFunctional, OptimizationOptions, PowerFunctional, Problem, RealPart, SigmaParams, SquareModulus};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Seed of the sampled curvature bound of the power functional.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub guess: GuessConfig,
    #[serde(default)]
    pub sigma: SigmaConfig,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    StateToState,
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    X,
    Y,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Tls {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default = "drive_x")]
        drive: Drive,
        #[serde(default = "state_to_state")]
        target: Target,
    },
    Lambda {
        #[serde(default = "lambda_energies")]
        energies: [f64; 3],
        #[serde(default = "one")]
        upper_coupling: f64,
    },
    SpinSpin {
        /// Symmetric 4×4 tensor `a_ij`.
        tensor: Option<[[f64; 4]; 4]>,
        /// Text file with the tensor as four rows of four numbers.
        tensor_file: Option<PathBuf>,
        theta: f64,
    },
    FourierGrid {
        /// Columns `R V_1 … V_S`.
        potential_file: Option<PathBuf>,
        harmonic: Option<HarmonicConfig>,
        mass: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default = "level_pair")]
        levels: [usize; 2],
        #[serde(default = "state_to_state")]
        target: Target,
    },
}

/// Built-in displaced harmonic surfaces on a uniform grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub n_r: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub displacements: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    SquareModulus,
    RealPart,
    Power,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub kind: FunctionalKind,
    #[serde(default = "one")]
    pub lambda0: f64,
    pub p: Option<u32>,
    /// Replaces the sampled curvature bound of the power functional.
    pub curvature: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Sin2,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostOperatorKind {
    #[default]
    None,
    Allow,
    Forbid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(default = "one")]
    pub lambda_a: f64,
    #[serde(default)]
    pub lambda_b: f64,
    #[serde(default)]
    pub shape: Shape,
    /// Operator `D` of the state-dependent cost (lambda model only).
    #[serde(default)]
    pub operator: CostOperatorKind,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { lambda_a: 1.0, lambda_b: 0.0, shape: Shape::Sin2, operator: CostOperatorKind::None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_final: f64,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { t_final: 10.0, n_steps: 500, hbar: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuessConfig {
    pub eps0: f64,
    #[serde(default = "one")]
    pub omega: f64,
}

impl Default for GuessConfig {
    fn default() -> Self {
        Self { eps0: 0.1, omega: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    #[default]
    Off,
    Fixed,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    #[serde(default)]
    pub mode: SigmaKind,
    #[serde(default)]
    pub a_bar: f64,
    #[serde(default)]
    pub b_bar: f64,
    #[serde(default)]
    pub c_bar: f64,
    #[serde(default)]
    pub eps_a: f64,
    #[serde(default)]
    pub eps_b: f64,
    #[serde(default)]
    pub eps_c: f64,
    pub guard: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    pub max_iter: usize,
    #[serde(default)]
    pub j_tol: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self { max_iter: 100, j_tol: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("krotov-out") }
    }
}

fn one() -> f64 {
    1.0
}

fn drive_x() -> Drive {
    Drive::X
}

fn state_to_state() -> Target {
    Target::StateToState
}

fn lambda_energies() -> [f64; 3] {
    LambdaParams::default().energies
}

fn level_pair() -> [usize; 2] {
    [0, 1]
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let config = parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

fn positive(key: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        bail!("`{key}` must be positive and finite, got {value}");
    }
    Ok(())
}

fn finite(key: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        bail!("`{key}` must be finite, got {value}");
    }
    Ok(())
}

impl RunConfig {
    /// Schema checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("`schema_version` is {}, this build reads version {SCHEMA_VERSION}", self.schema_version);
        }
        positive("functional.lambda0", self.functional.lambda0)?;
        match (self.functional.kind, self.functional.p) {
            (FunctionalKind::Power, None) => bail!("`functional.p` is required for the power functional"),
            (FunctionalKind::Power, Some(0)) => bail!("`functional.p` must be at least 1"),
            (FunctionalKind::Power, Some(_)) => {}
            (_, Some(_)) => bail!("`functional.p` only applies to the power functional"),
            (_, None) => {}
        }
        if let Some(c) = self.functional.curvature {
            if self.functional.kind != FunctionalKind::Power {
                bail!("`functional.curvature` only applies to the power functional");
            }
            if !(c.is_finite() && c >= 0.0) {
                bail!("`functional.curvature` must be non-negative, got {c}");
            }
        }
        positive("cost.lambda_a", self.cost.lambda_a)?;
        finite("cost.lambda_b", self.cost.lambda_b)?;
        let is_lambda = matches!(self.model, ModelConfig::Lambda { .. });
        if !is_lambda && (self.cost.operator != CostOperatorKind::None || self.cost.lambda_b != 0.0) {
            bail!("`cost.operator` and `cost.lambda_b` are only supported by the lambda model");
        }
        if self.cost.operator == CostOperatorKind::None && self.cost.lambda_b != 0.0 {
            bail!("`cost.lambda_b` is set but `cost.operator` is none");
        }
        positive("grid.t_final", self.grid.t_final)?;
        positive("grid.hbar", self.grid.hbar)?;
        if self.grid.n_steps == 0 {
            bail!("`grid.n_steps` must be at least 1");
        }
        finite("guess.eps0", self.guess.eps0)?;
        finite("guess.omega", self.guess.omega)?;
        for (key, v) in [
            ("sigma.a_bar", self.sigma.a_bar),
            ("sigma.b_bar", self.sigma.b_bar),
            ("sigma.c_bar", self.sigma.c_bar),
            ("sigma.eps_a", self.sigma.eps_a),
            ("sigma.eps_b", self.sigma.eps_b),
            ("sigma.eps_c", self.sigma.eps_c),
        ] {
            finite(key, v)?;
        }
        if self.sigma.mode != SigmaKind::Fixed && (self.sigma.a_bar, self.sigma.b_bar, self.sigma.c_bar) != (0.0, 0.0, 0.0) {
            bail!("`sigma.a_bar`, `sigma.b_bar`, `sigma.c_bar` only apply to mode = \"fixed\"");
        }
        if !(self.stop.j_tol.is_finite() && self.stop.j_tol >= 0.0) {
            bail!("`stop.j_tol` must be non-negative");
        }
        match &self.model {
            ModelConfig::Tls { omega, .. } => finite("model.omega", *omega)?,
            ModelConfig::Lambda { energies, upper_coupling } => {
                for e in energies {
                    finite("model.energies", *e)?;
                }
                finite("model.upper_coupling", *upper_coupling)?;
            }
            ModelConfig::SpinSpin { tensor, tensor_file, theta } => {
                finite("model.theta", *theta)?;
                if tensor.is_some() == tensor_file.is_some() {
                    bail!("exactly one of `model.tensor` and `model.tensor_file` is required");
                }
            }
            ModelConfig::FourierGrid { potential_file, harmonic, mass, levels, .. } => {
                positive("model.mass", *mass)?;
                if potential_file.is_some() == harmonic.is_some() {
                    bail!("exactly one of `model.potential_file` and `model.harmonic` is required");
                }
                if levels[0] == levels[1] {
                    bail!("`model.levels` must name two different levels");
                }
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> ControlSettings {
        ControlSettings {
            t_final: self.grid.t_final,
            n_steps: self.grid.n_steps,
            eps0: self.guess.eps0,
            guess_omega: self.guess.omega,
            lambda_a: self.cost.lambda_a,
            shape: match self.cost.shape {
                Shape::Sin2 => ShapeChoice::Sin2,
                Shape::Flat => ShapeChoice::Flat,
            },
            hbar: self.grid.hbar,
        }
    }

    pub fn functional(&self) -> Result<Arc<dyn FinalTimeFunctional>> {
        let f = &self.functional;
        Ok(match f.kind {
            FunctionalKind::SquareModulus => Arc::new(SquareModulus::new(f.lambda0)?),
            FunctionalKind::RealPart => Arc::new(RealPart::new(f.lambda0)?),
            FunctionalKind::Power => {
                let mut power = PowerFunctional::new(f.lambda0, f.p.unwrap_or(1))?.with_seed(self.seed);
                if let Some(c) = f.curvature {
                    power = power.with_curvature_override(c);
                }
                Arc::new(power)
            }
        })
    }

    pub fn options(&self) -> OptimizationOptions {
        let s = &self.sigma;
        let sigma = match s.mode {
            SigmaKind::Off => SigmaParams::off(),
            SigmaKind::Fixed => SigmaParams::fixed(s.a_bar, s.b_bar, s.c_bar),
            SigmaKind::Analytic => SigmaParams::analytic(s.eps_a, s.eps_b, s.eps_c),
            SigmaKind::Numeric => SigmaParams::numeric(s.eps_a, s.eps_b, s.eps_c),
        };
        let defaults = OptimizationOptions::default();
        OptimizationOptions {
            max_iter: self.stop.max_iter,
            j_tol: self.stop.j_tol,
            sigma,
            monotonic_guard: s.guard.unwrap_or(defaults.monotonic_guard),
            ..defaults
        }
    }

    /// Assembles the control problem; relative paths resolve against `base_dir`.
    pub fn problem(&self, base_dir: &Path) -> Result<Problem> {
        let settings = self.settings();
        let functional = self.functional()?;
        let target = |t: Target| match t {
            Target::StateToState => TlsTarget::StateToState,
            Target::Hadamard => TlsTarget::Hadamard,
        };
        let problem = match &self.model {
            ModelConfig::Tls { omega, drive, target: t } => {
                let op = match drive {
                    Drive::X => pauli(1),
                    Drive::Y => pauli(2),
                };
                make_tls(*omega, op, target(*t), functional, &settings)?
            }
            ModelConfig::Lambda { energies, upper_coupling } => {
                let cost = match self.cost.operator {
                    CostOperatorKind::None => CostChoice::None,
                    CostOperatorKind::Allow => CostChoice::Allow,
                    CostOperatorKind::Forbid => CostChoice::Forbid,
                };
                let params = LambdaParams { energies: *energies, upper_coupling: *upper_coupling, lambda_b: self.cost.lambda_b, cost };
                make_lambda(&params, functional, &settings)?.problem
            }
            ModelConfig::SpinSpin { tensor, tensor_file, theta } => {
                let a = match (tensor, tensor_file) {
                    (Some(a), _) => *a,
                    (None, Some(path)) => read_tensor(&base_dir.join(path))?,
                    (None, None) => unreachable!("checked by validate"),
                };
                make_spin_spin(&a, *theta, functional, &settings)?
            }
            ModelConfig::FourierGrid { potential_file, harmonic, mass, mu, levels, target: t } => {
                let model = match (potential_file, harmonic) {
                    (Some(path), _) => {
                        let path = base_dir.join(path);
                        let file = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
                        let rows = read_columns(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
                        FourierGrid::from_columns(&rows, *mass, *mu, self.grid.hbar)?
                    }
                    (None, Some(h)) => harmonic_model(h, *mass, *mu, self.grid.hbar)?,
                    (None, None) => unreachable!("checked by validate"),
                };
                model.problem(target(*t), (levels[0], levels[1]), functional, &settings)?
            }
        };
        problem.validate()?;
        Ok(problem)
    }
}

fn read_tensor(path: &Path) -> Result<[[f64; 4]; 4]> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let rows = read_columns(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        bail!("{}: expected four rows of four numbers", path.display());
    }
    let mut a = [[0.0; 4]; 4];
    for (i, row) in rows.iter().enumerate() {
        a[i].copy_from_slice(row);
    }
    Ok(a)
}

fn harmonic_model(h: &HarmonicConfig, mass: f64, mu: f64, hbar: f64) -> Result<FourierGrid> {
    let s = h.frequencies.len();
    if h.n_r < 2 || !(h.r_min.is_finite() && h.r_max.is_finite() && h.r_max > h.r_min) {
        bail!("`model.harmonic` needs n_r ≥ 2 and r_max > r_min");
    }
    for (key, list) in [("offsets", &h.offsets), ("displacements", &h.displacements)] {
        if !list.is_empty() && list.len() != s {
            bail!("`model.harmonic.{key}` must have one entry per frequency");
        }
    }
    let dr = (h.r_max - h.r_min) / h.n_r as f64;
    let r: Vec<f64> = (0..h.n_r).map(|i| h.r_min + dr * i as f64).collect();
    let potentials = (0..s)
        .map(|k| {
            let w = h.frequencies[k];
            let x0 = h.displacements.get(k).copied().unwrap_or(0.0);
            let v0 = h.offsets.get(k).copied().unwrap_or(0.0);
            r.iter().map(|x| 0.5 * mass * w * w * (x - x0).powi(2) + v0).collect()
        })
        .collect();
    Ok(make_fourier_grid(&r, potentials, mass, mu, hbar)?)
}

/// Parameters accepted by `scan`.
pub const SCANNABLE: &[&str] = &[
    "seed",
    "functional.lambda0",
    "functional.curvature",
    "cost.lambda_a",
    "cost.lambda_b",
    "grid.t_final",
    "guess.eps0",
    "guess.omega",
    "sigma.a_bar",
    "sigma.b_bar",
    "sigma.c_bar",
    "sigma.eps_a",
    "sigma.eps_b",
    "sigma.eps_c",
    "stop.max_iter",
];

impl RunConfig {
    /// Copy with one scannable parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        let as_count = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
                Ok(v as u64)
            } else {
                bail!("`{name}` takes non-negative integers, got {v}")
            }
        };
        match name {
            "seed" => c.seed = as_count(value)?,
            "functional.lambda0" => c.functional.lambda0 = value,
            "functional.curvature" => c.functional.curvature = Some(value),
            "cost.lambda_a" => c.cost.lambda_a = value,
            "cost.lambda_b" => c.cost.lambda_b = value,
            "grid.t_final" => c.grid.t_final = value,
            "guess.eps0" => c.guess.eps0 = value,
            "guess.omega" => c.guess.omega = value,
            "sigma.a_bar" => c.sigma.a_bar = value,
            "sigma.b_bar" => c.sigma.b_bar = value,
            "sigma.c_bar" => c.sigma.c_bar = value,
            "sigma.eps_a" => c.sigma.eps_a = value,
            "sigma.eps_b" => c.sigma.eps_b = value,
            "sigma.eps_c" => c.sigma.eps_c = value,
            "stop.max_iter" => c.stop.max_iter = as_count(value)? as usize,
            other => bail!("`{other}` cannot be scanned; scannable parameters: {}", SCANNABLE.join(", ")),
        }
        c.validate().with_context(|| format!("{name} = {value}"))?;
        Ok(c)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let model = match &self.model {
            ModelConfig::Tls { omega, drive, target } => format!("tls (omega = {omega}, drive = {drive:?}, target = {target:?})"),
            ModelConfig::Lambda { energies, upper_coupling } => {
                format!("lambda (energies = {energies:?}, upper_coupling = {upper_coupling})")
            }
            ModelConfig::SpinSpin { theta, tensor_file, .. } => match tensor_file {
                Some(p) => format!("spin_spin (theta = {theta}, tensor from {})", p.display()),
                None => format!("spin_spin (theta = {theta}, inline tensor)"),
            },
            ModelConfig::FourierGrid { potential_file, mass, mu, levels, target, .. } => {
                let source = potential_file.as_ref().map_or("harmonic surfaces".to_string(), |p| p.display().to_string());
                format!("fourier_grid ({source}, mass = {mass}, mu = {mu}, levels = {levels:?}, target = {target:?})")
            }
        };
        writeln!(f, "model       {model}")?;
        let p = self.functional.p.map_or(String::new(), |p| format!(", p = {p}"));
        writeln!(f, "functional  {:?} (lambda0 = {}{p})", self.functional.kind, self.functional.lambda0)?;
        writeln!(
            f,
            "cost        lambda_a = {}, lambda_b = {}, shape = {:?}, operator = {:?}",
            self.cost.lambda_a, self.cost.lambda_b, self.cost.shape, self.cost.operator
        )?;
        writeln!(f, "grid        T = {}, n_steps = {}, hbar = {}", self.grid.t_final, self.grid.n_steps, self.grid.hbar)?;
        writeln!(f, "guess       eps0 = {}, omega = {}", self.guess.eps0, self.guess.omega)?;
        let s = &self.sigma;
        let sigma = match s.mode {
            SigmaKind::Off => "off".to_string(),
            SigmaKind::Fixed => format!("fixed (A = {}, B = {}, C = {})", s.a_bar, s.b_bar, s.c_bar),
            SigmaKind::Analytic | SigmaKind::Numeric => {
                format!("{:?} (eps_A = {}, eps_B = {}, eps_C = {})", s.mode, s.eps_a, s.eps_b, s.eps_c).to_lowercase()
            }
        };
        writeln!(f, "sigma       {sigma}")?;
        writeln!(f, "stop        max_iter = {}, j_tol = {}", self.stop.max_iter, self.stop.j_tol)?;
        write!(f, "seed        {}", self.seed)
    }
}
