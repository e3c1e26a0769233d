//! Static checks on a configuration. Nothing here runs an experiment.

use std::fmt;

use hyperloc::sampling::SiteFunction;
use hyperloc::symbolic::SftSpec;

use crate::config::{ExperimentConfig, ExperimentKind, FunctionSpec, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub level: Level,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.level {
            Level::Warning => "warning",
            Level::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

fn err(field: &'static str, message: impl Into<String>) -> Diagnostic {
    Diagnostic { level: Level::Error, field, message: message.into() }
}

fn warn(field: &'static str, message: impl Into<String>) -> Diagnostic {
    Diagnostic { level: Level::Warning, field, message: message.into() }
}

/// All problems found in `cfg` when run as `kind`.
pub fn validate(cfg: &ExperimentConfig, kind: Option<ExperimentKind>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let kind = kind.or(cfg.experiment);
    if let (Some(k), Some(c)) = (kind, cfg.experiment) {
        if k != c {
            out.push(err("experiment", format!("config names {} but {} was requested", c.name(), k.name())));
        }
    }

    match &cfg.system {
        SystemSpec::Bernoulli { probs } => {
            if probs.len() < 2 {
                out.push(err("system.probs", "at least two symbols are required"));
            }
        }
        SystemSpec::Markov { transition } => {
            let support: Vec<Vec<u8>> =
                transition.iter().map(|row| row.iter().map(|&p| u8::from(p > 0.0)).collect()).collect();
            if let Ok(spec) = SftSpec::new(support) {
                if spec.fixed_points().is_empty() {
                    out.push(warn("system.transition", "no fixed point: the subshift has no symbol j with j→j allowed"));
                }
                if !spec.is_mixing() {
                    out.push(warn("system.transition", "not mixing: the transition matrix is not primitive"));
                }
            }
        }
        SystemSpec::Doubling { amplitude, .. } | SystemSpec::Cat { amplitude, .. } => {
            if !amplitude.is_finite() {
                out.push(err("system.amplitude", "must be finite"));
            }
            if cfg.function.is_some() {
                out.push(err("function", "torus systems take their observable from the system block"));
            }
            if matches!(kind, Some(ExperimentKind::Ustate | ExperimentKind::DoubleResonance | ExperimentKind::Holonomy)) {
                out.push(err("system", "this experiment needs a bernoulli or markov system"));
            }
        }
    }

    if cfg.is_shift() {
        match cfg.measure() {
            Err(e) => out.push(err("system", e.to_string())),
            Ok(m) => match cfg.function(m.spec()) {
                Err(e) => out.push(err("function", e.to_string())),
                Ok(f) => {
                    if f.is_constant() {
                        out.push(warn(
                            "function",
                            "f is constant; the large deviation and localization results assume a nonconstant f",
                        ));
                    }
                    if f.radius() > 6 && matches!(kind, Some(ExperimentKind::Ustate)) {
                        out.push(warn("function", "radius above 6 makes the u-state class table very large"));
                    }
                }
            },
        }
        if let Some(FunctionSpec::Table { entries, .. }) = &cfg.function {
            if entries.is_empty() {
                out.push(err("function.entries", "empty table"));
            }
        }
    }

    if let Err(e) = cfg.energy_grid(2) {
        out.push(err("energies", e.to_string()));
    }
    let positive = |v: Option<usize>, field: &'static str, out: &mut Vec<Diagnostic>| {
        if v == Some(0) {
            out.push(err(field, "must be positive"));
        }
    };
    positive(cfg.n, "n", &mut out);
    positive(cfg.samples, "samples", &mut out);
    positive(cfg.bins, "bins", &mut out);
    positive(cfg.reference_n, "reference_n", &mut out);
    if matches!(cfg.replicas, Some(0 | 1)) {
        out.push(err("replicas", "at least 2 replicas are needed for a standard error"));
    }
    if matches!(cfg.reference_replicas, Some(0 | 1)) {
        out.push(err("reference_replicas", "at least 2 replicas are needed"));
    }
    for (v, field) in [(cfg.epsilon, "epsilon"), (cfg.eta, "eta"), (cfg.c0, "c0")] {
        if let Some(x) = v {
            if !(x >= 0.0 && x.is_finite()) {
                out.push(err(field, "must be a finite nonnegative number"));
            }
        }
    }
    if let Some(a) = cfg.alpha {
        if !(a > 0.0 && a.is_finite()) {
            out.push(err("alpha", "must be positive"));
        }
    }
    if let Some([lo, hi]) = cfg.interval {
        if !(lo < hi) {
            out.push(err("interval", "needs lo < hi"));
        }
    }
    if let Some(ns) = &cfg.n_values {
        if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
            out.push(err("n_values", "needs at least two strictly increasing positive scales"));
        }
    }
    if let Some(ks) = &cfg.k_values {
        if ks.is_empty() || ks.iter().any(|&k| k == 0 || k > 4) {
            out.push(err("k_values", "scales must lie in 1..=4 at desk scale"));
        }
    }
    if let Some(u) = &cfg.ustate {
        if u.depth == Some(0) || u.grid.is_some_and(|g| g < 2) {
            out.push(err("ustate", "depth must be positive and grid at least 2"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn period_two_chain_warns_twice() {
        let c = cfg(r#"{"seed":1,"system":{"kind":"markov","transition":[[0,1],[1,0]]},"function":{"kind":"per-symbol","values":[-1,1]}}"#);
        let d = validate(&c, Some(ExperimentKind::Lyapunov));
        assert_eq!(d.len(), 2, "{d:?}");
        assert!(d.iter().all(|x| x.level == Level::Warning));
        assert!(d[0].message.contains("no fixed point") && d[1].message.contains("not mixing"));
    }

    #[test]
    fn constant_function_warns() {
        let c = cfg(r#"{"seed":1,"system":{"kind":"bernoulli","probs":[0.5,0.5]},"function":{"kind":"constant","value":0}}"#);
        let d = validate(&c, Some(ExperimentKind::Lyapunov));
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("nonconstant"));
    }

    #[test]
    fn clean_bernoulli_config() {
        let c = cfg(r#"{"seed":1,"system":{"kind":"bernoulli","probs":[0.5,0.5]},"function":{"kind":"per-symbol","values":[-1,1]}}"#);
        assert!(validate(&c, Some(ExperimentKind::Lyapunov)).is_empty());
    }

    #[test]
    fn missing_seed_is_named() {
        let e = ExperimentConfig::from_json(r#"{"system":{"kind":"bernoulli","probs":[0.5,0.5]}}"#).unwrap_err();
        assert!(e.to_string().contains("seed"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_json(r#"{"seed":1,"sytem":{}}"#).unwrap_err();
        assert!(e.to_string().contains("sytem"));
    }

    #[test]
    fn torus_with_shift_only_experiment() {
        let c = cfg(r#"{"seed":1,"system":{"kind":"cat","observable":"cos-sum","amplitude":1.0}}"#);
        assert!(validate(&c, Some(ExperimentKind::Lyapunov)).is_empty());
        assert!(validate(&c, Some(ExperimentKind::Ustate)).iter().any(|d| d.level == Level::Error));
    }
}
