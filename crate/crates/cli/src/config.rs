//! Scenario documents: JSON schema, validation and conversion to engine types.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use qpathnet::classical::NetworkSpec;
use qpathnet::meter::{GridOptions, MeterSpec, PointerProfile};
use qpathnet::paths::{MeasurementChain, PathFunctional, Step};
use qpathnet::quantum::{Observable, Propagator, StateVector, C64};
use qpathnet::scenarios::ScenarioPreset;
use qpathnet::Error;

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Complex> for C64 {
    fn from(z: Complex) -> Self {
        match z {
            Complex::Real(re) => C64::new(re, 0.0),
            Complex::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Complex::Pair([z.re, z.im])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dim: usize,
    /// Zero Hamiltonian when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<Complex>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableConfig {
    Matrix {
        matrix: Vec<Vec<Complex>>,
    },
    /// Eigenvectors (one per entry, in path order) and their eigenvalues.
    Eigenbasis {
        basis: Vec<Vec<Complex>>,
        eigenvalues: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub time: f64,
    pub observable: ObservableConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    EigenvalueAtStep(usize),
    /// `[[step, weight], ...]`
    LinearCombination(Vec<(usize, f64)>),
    IndicatorOfPath(usize),
    Constant(f64),
    Table(Vec<f64>),
}

impl From<&FunctionalConfig> for PathFunctional {
    fn from(f: &FunctionalConfig) -> Self {
        match f {
            FunctionalConfig::EigenvalueAtStep(k) => PathFunctional::EigenvalueAtStep(*k),
            FunctionalConfig::LinearCombination(t) => PathFunctional::LinearCombination(t.clone()),
            FunctionalConfig::IndicatorOfPath(j) => PathFunctional::IndicatorOfPath(*j),
            FunctionalConfig::Constant(v) => PathFunctional::Constant(*v),
            FunctionalConfig::Table(t) => PathFunctional::Table(t.clone()),
        }
    }
}

impl From<&PathFunctional> for FunctionalConfig {
    fn from(f: &PathFunctional) -> Self {
        match f {
            PathFunctional::EigenvalueAtStep(k) => FunctionalConfig::EigenvalueAtStep(*k),
            PathFunctional::LinearCombination(t) => FunctionalConfig::LinearCombination(t.clone()),
            PathFunctional::IndicatorOfPath(j) => FunctionalConfig::IndicatorOfPath(*j),
            PathFunctional::Constant(v) => FunctionalConfig::Constant(*v),
            PathFunctional::Table(t) => FunctionalConfig::Table(t.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterConfig {
    pub functional: String,
    pub profile: PointerProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Sweep,
    Sample,
    Classical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Exact => "exact",
            Mode::Sweep => "sweep",
            Mode::Sample => "sample",
            Mode::Classical => "classical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Gaussian widths for `sweep`, increasing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub widths: Vec<f64>,
    /// Meter swept in `sweep` mode.
    #[serde(default)]
    pub meter: usize,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    #[serde(flatten)]
    pub network: NetworkSpec,
    /// Path functionals as `[[k, weight], ...]` over the values of the valued
    /// connectors a ball passes, `k` counting them in travel order.
    #[serde(default)]
    pub functionals: BTreeMap<String, Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub system: SystemConfig,
    pub pre_state: Vec<Complex>,
    pub post_state: Vec<Complex>,
    /// Replaces the automatically completed set of failure states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_complement: Option<Vec<Vec<Complex>>>,
    pub final_time: f64,
    pub steps: Vec<StepConfig>,
    #[serde(default)]
    pub functionals: BTreeMap<String, FunctionalConfig>,
    #[serde(default)]
    pub meters: Vec<MeterConfig>,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalConfig>,
}

fn default_name() -> String {
    "scenario".into()
}

/// Validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{} at {}", self.message, self.field)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Engine objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub chain: MeasurementChain,
    pub functional_names: Vec<String>,
    pub functionals: Vec<PathFunctional>,
    pub meters: Vec<MeterSpec>,
    /// Functional name of each meter.
    pub meter_functionals: Vec<String>,
    pub run: RunConfig,
    pub classical: Option<ClassicalConfig>,
}

fn complex_vec(v: &[Complex]) -> Vec<C64> {
    v.iter().map(|&z| z.into()).collect()
}

fn matrix(rows: &[Vec<Complex>], dim: usize, field: &str) -> Result<DMatrix<C64>, ConfigError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(ConfigError::new(field, format!("matrix must be {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j].into()))
}

fn state(v: &[Complex], dim: usize, field: &str) -> Result<StateVector, ConfigError> {
    if v.len() != dim {
        return Err(ConfigError::new(field, format!("state has {} components, system dimension is {dim}", v.len())));
    }
    let s = StateVector::new(complex_vec(v)).map_err(|e| ConfigError::new(field, e.to_string()))?;
    s.ensure_normalized(field).map_err(|_| {
        ConfigError::new(field, format!("state not normalized (norm squared {})", s.norm_sqr()))
    })?;
    Ok(s)
}

fn observable(obs: &ObservableConfig, dim: usize, field: &str) -> Result<Observable, ConfigError> {
    let err = |e: Error| match e {
        Error::NotHermitian(_) => ConfigError::new(field, "observable not Hermitian"),
        Error::NotOrthonormal(_) => ConfigError::new(field, "eigenbasis not orthonormal"),
        other => ConfigError::new(field, other.to_string()),
    };
    match obs {
        ObservableConfig::Matrix { matrix: rows } => Observable::new(matrix(rows, dim, field)?).map_err(err),
        ObservableConfig::Eigenbasis { basis, eigenvalues } => {
            if basis.len() != dim {
                return Err(ConfigError::new(field, format!("eigenbasis needs {dim} vectors")));
            }
            let vectors = basis
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    if v.len() != dim {
                        return Err(ConfigError::new(format!("{field}.basis[{k}]"), format!("vector must have {dim} components")));
                    }
                    StateVector::new(complex_vec(v)).map_err(|e| ConfigError::new(format!("{field}.basis[{k}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Observable::from_eigenbasis(&vectors, eigenvalues).map_err(err)
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("", format!("malformed config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Validates every section and builds the engine objects.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let dim = self.system.dim;
        if dim < 2 {
            return Err(ConfigError::new("system.dim", "dimension must be at least 2"));
        }
        let propagator = match &self.system.hamiltonian {
            None => Propagator::zero(dim),
            Some(rows) => Propagator::new(matrix(rows, dim, "system.hamiltonian")?),
        }
        .map_err(|e| match e {
            Error::NotHermitian(_) => ConfigError::new("system.hamiltonian", "hamiltonian not Hermitian"),
            other => ConfigError::new("system.hamiltonian", other.to_string()),
        })?;
        let pre = state(&self.pre_state, dim, "pre_state")?;
        let post = state(&self.post_state, dim, "post_state")?;
        let mut steps = Vec::with_capacity(self.steps.len());
        for (k, s) in self.steps.iter().enumerate() {
            let field = format!("steps[{k}]");
            if !s.time.is_finite() {
                return Err(ConfigError::new(format!("{field}.time"), "time must be finite"));
            }
            steps.push(Step::new(s.time, observable(&s.observable, dim, &field)?));
        }
        let mut chain = MeasurementChain::new(pre, steps, propagator, self.final_time, post).map_err(|e| match e {
            Error::InvalidTimeOrdering(m) => ConfigError::new("steps", format!("times must increase inside (0, final_time): {m}")),
            other => ConfigError::new("steps", other.to_string()),
        })?;
        if let Some(rest) = &self.post_complement {
            let states = rest
                .iter()
                .enumerate()
                .map(|(k, v)| state(v, dim, &format!("post_complement[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            chain = chain
                .with_post_complement(states)
                .map_err(|e| ConfigError::new("post_complement", e.to_string()))?;
        }

        let mut functional_names = Vec::new();
        let mut functionals = Vec::new();
        for (name, rule) in &self.functionals {
            let f = PathFunctional::from(rule);
            f.values(&chain)
                .map_err(|e| ConfigError::new(format!("functionals.{name}"), e.to_string()))?;
            functional_names.push(name.clone());
            functionals.push(f);
        }
        let mut meters = Vec::new();
        let mut meter_functionals = Vec::new();
        for (k, m) in self.meters.iter().enumerate() {
            let idx = functional_names.iter().position(|n| n == &m.functional).ok_or_else(|| {
                ConfigError::new(format!("meters[{k}].functional"), format!("unknown functional `{}`", m.functional))
            })?;
            let profile = PointerProfile::new(m.profile.shape().clone(), m.profile.width())
                .map_err(|e| ConfigError::new(format!("meters[{k}].profile"), e.to_string()))?;
            meters.push(MeterSpec::new(functionals[idx].clone(), profile));
            meter_functionals.push(m.functional.clone());
        }

        let run = &self.run;
        if matches!(run.mode, Mode::Exact | Mode::Sweep | Mode::Sample) && meters.is_empty() {
            return Err(ConfigError::new("meters", format!("{} mode needs at least one meter", run.mode)));
        }
        if run.mode == Mode::Sweep {
            if run.meter >= meters.len() {
                return Err(ConfigError::new("run.meter", format!("no meter {}", run.meter)));
            }
            if run.widths.is_empty() {
                return Err(ConfigError::new("run.widths", "sweep mode needs widths"));
            }
            if run.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) || run.widths.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::new("run.widths", "widths must be positive and increasing"));
            }
        }
        if let Some(step) = run.grid.step {
            if !(step.is_finite() && step > 0.0) {
                return Err(ConfigError::new("run.grid.step", "step must be positive"));
            }
        }
        if let Some(p) = run.grid.padding {
            if !(p.is_finite() && p >= 0.0) {
                return Err(ConfigError::new("run.grid.padding", "padding must be non-negative"));
            }
        }
        if run.trials == Some(0) {
            return Err(ConfigError::new("run.trials", "at least one trial is required"));
        }
        if let Some(c) = &self.classical {
            qpathnet::classical::ClassicalNetwork::new(c.network.clone())
                .map_err(|e| ConfigError::new("classical", e.to_string()))?;
        }

        Ok(Scenario {
            name: self.name.clone(),
            chain,
            functional_names,
            functionals,
            meters,
            meter_functionals,
            run: self.run.clone(),
            classical: self.classical.clone(),
        })
    }

    /// Config reproducing a preset exactly. Observables are written as their
    /// eigenbasis so that re-parsing does not repeat the eigendecomposition.
    pub fn from_preset(preset: &ScenarioPreset) -> Self {
        let chain = &preset.chain;
        let dim = chain.dim();
        let prop = chain.propagator();
        let hamiltonian = (!prop.is_zero()).then(|| {
            (0..dim)
                .map(|i| (0..dim).map(|j| prop.hamiltonian()[(i, j)].into()).collect())
                .collect()
        });
        let cvec = |s: &StateVector| s.amplitudes().iter().map(|&z| z.into()).collect::<Vec<Complex>>();
        let steps = chain
            .steps()
            .iter()
            .map(|s| StepConfig {
                time: s.time,
                observable: ObservableConfig::Eigenbasis {
                    basis: (0..dim).map(|i| cvec(&s.observable.eigenvector(i))).collect(),
                    eigenvalues: s.observable.eigenvalues().to_vec(),
                },
            })
            .collect();
        let mut functionals = BTreeMap::new();
        let mut meters = Vec::new();
        for (k, m) in preset.meters.iter().enumerate() {
            let name = format!("F{}", k + 1);
            functionals.insert(name.clone(), FunctionalConfig::from(&m.functional));
            meters.push(MeterConfig {
                functional: name,
                profile: m.profile.clone(),
            });
        }
        let mode = if preset.sweep_widths.is_empty() { Mode::Exact } else { Mode::Sweep };
        ScenarioConfig {
            name: preset.name.clone(),
            system: SystemConfig { dim, hamiltonian },
            pre_state: cvec(chain.pre_state()),
            post_state: cvec(chain.post_state()),
            post_complement: Some(chain.post_complement().iter().map(cvec).collect()),
            final_time: chain.final_time(),
            steps,
            functionals,
            meters,
            run: RunConfig {
                mode,
                widths: preset.sweep_widths.clone(),
                meter: 0,
                grid: GridOptions::default(),
                trials: None,
                seed: None,
            },
            classical: None,
        }
    }
}
