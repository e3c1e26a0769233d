//! Experiment configuration: a single JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use hyperloc::cocycle::EnergyInterval;
use hyperloc::lyapunov::{PotentialModel, ShiftModel};
use hyperloc::measure::ShiftMeasure;
use hyperloc::sampling::{parse_word, LocallyConstantFn, TorusMap, TorusObservable, TorusSystem};
use hyperloc::symbolic::SftSpec;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lyapunov,
    Ldt,
    Ustate,
    Spectrum,
    Green,
    Localize,
    DoubleResonance,
    Holonomy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Lyapunov => "lyapunov",
            ExperimentKind::Ldt => "ldt",
            ExperimentKind::Ustate => "ustate",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Green => "green",
            ExperimentKind::Localize => "localize",
            ExperimentKind::DoubleResonance => "double-resonance",
            ExperimentKind::Holonomy => "holonomy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableSpec {
    Cos,
    CosSum,
    Tent,
}

impl From<ObservableSpec> for TorusObservable {
    fn from(o: ObservableSpec) -> Self {
        match o {
            ObservableSpec::Cos => TorusObservable::Cos,
            ObservableSpec::CosSum => TorusObservable::CosSum,
            ObservableSpec::Tent => TorusObservable::Tent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Bernoulli { probs: Vec<f64> },
    Markov { transition: Vec<Vec<f64>> },
    Doubling { observable: ObservableSpec, amplitude: f64 },
    Cat { observable: ObservableSpec, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: f64 },
    PerSymbol { values: Vec<f64> },
    /// `entries` pairs a comma-separated word with its value.
    Table { radius: usize, entries: Vec<(String, f64)> },
    /// A table file with lines `word value`.
    TableFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_floor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UStateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Everything an experiment run needs. Optional fields fall back to
/// per-experiment defaults listed in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Scales for the deviation experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    /// Length and replica count of the reference Lyapunov estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Energy window `[lo, hi]` for localization and double resonances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<CapsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ustate: Option<UStateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn is_shift(&self) -> bool {
        matches!(self.system, SystemSpec::Bernoulli { .. } | SystemSpec::Markov { .. })
    }

    pub fn measure(&self) -> Result<ShiftMeasure, RunError> {
        let m = match &self.system {
            SystemSpec::Bernoulli { probs } => ShiftMeasure::bernoulli(probs.clone()),
            SystemSpec::Markov { transition } => ShiftMeasure::markov(transition.clone()),
            _ => return Err(RunError::Config("system: this experiment needs a bernoulli or markov system".into())),
        };
        m.map_err(|e| RunError::Config(format!("system: {e}")))
    }

    pub fn torus(&self) -> Option<TorusSystem> {
        match self.system {
            SystemSpec::Doubling { observable, amplitude } => {
                Some(TorusSystem { map: TorusMap::Doubling, observable: observable.into(), amplitude })
            }
            SystemSpec::Cat { observable, amplitude } => {
                Some(TorusSystem { map: TorusMap::Cat, observable: observable.into(), amplitude })
            }
            _ => None,
        }
    }

    pub fn function(&self, spec: &SftSpec) -> Result<LocallyConstantFn, RunError> {
        let f = self.function.as_ref().ok_or_else(|| RunError::Config("function: missing for a shift system".into()))?;
        let wrap = |e: hyperloc::Error| RunError::Config(format!("function: {e}"));
        match f {
            FunctionSpec::Constant { value } => LocallyConstantFn::constant(spec, *value).map_err(wrap),
            FunctionSpec::PerSymbol { values } => LocallyConstantFn::per_symbol(spec, values).map_err(wrap),
            FunctionSpec::Table { radius, entries } => {
                let parsed = entries
                    .iter()
                    .map(|(w, v)| parse_word(w).map(|w| (w, *v)).map_err(|e| RunError::Config(format!("function: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                LocallyConstantFn::new(spec, *radius, parsed).map_err(wrap)
            }
            FunctionSpec::TableFile { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| RunError::Config(format!("function: cannot read {}: {e}", path.display())))?;
                LocallyConstantFn::parse_table(spec, &text).map_err(wrap)
            }
        }
    }

    pub fn shift_model(&self) -> Result<ShiftModel<LocallyConstantFn>, RunError> {
        let m = self.measure()?;
        let f = self.function(m.spec())?;
        Ok(ShiftModel::new(m, f))
    }

    /// A potential model for either kind of system.
    pub fn model(&self) -> Result<Box<dyn PotentialModel>, RunError> {
        match self.torus() {
            Some(t) => Ok(Box::new(t)),
            None => Ok(Box::new(self.shift_model()?)),
        }
    }

    pub fn sup_norm(&self) -> Result<f64, RunError> {
        Ok(self.model()?.sup_norm())
    }

    /// The energy grid, or `fallback` points over `[−3 − ‖f‖∞, 3 + ‖f‖∞]`.
    pub fn energy_grid(&self, fallback: usize) -> Result<Vec<f64>, RunError> {
        match &self.energies {
            None => Ok(EnergyInterval::default_for(self.sup_norm()?).grid(fallback)),
            Some(EnergySpec { values: Some(v), lo: None, hi: None, count: None }) => {
                if v.is_empty() || v.iter().any(|e| !e.is_finite()) {
                    return Err(RunError::Config("energies.values: must be a non-empty list of finite numbers".into()));
                }
                Ok(v.clone())
            }
            Some(EnergySpec { values: None, lo: Some(lo), hi: Some(hi), count }) => {
                let interval = EnergyInterval::new(*lo, *hi).map_err(|e| RunError::Config(format!("energies: {e}")))?;
                let count = count.unwrap_or(fallback);
                if count < 2 {
                    return Err(RunError::Config("energies.count: at least 2 points required".into()));
                }
                Ok(interval.grid(count))
            }
            Some(_) => Err(RunError::Config("energies: give either values or lo, hi (and optional count)".into())),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("hyperloc-out"))
    }
}
