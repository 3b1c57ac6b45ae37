//! Experiment configuration documents (TOML).
//!
//! A document holds any number of `[[experiment]]` tables. Every table is
//! validated up front so a bad field is reported by its path before any
//! computation starts.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use threewave::Method;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Evolve,
    Classical,
    LinearCompare,
    Spectrum,
    Cascade,
    Recurrence,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!(
                "unknown format '{other}' (expected csv, json or svg)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem for every output file of this experiment.
    pub name: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s3: Option<i64>,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<RecurrenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// At most one of the three forms may be given. With none, quantum runs
/// start from the basis state `psi_0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// `[re, im]` pairs, one per basis state; normalized on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    /// Classical wave actions `[I1, I2, I3]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub tau_max: f64,
    pub points: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            tau_max: 0.2,
            points: 201,
        }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.points)
            .map(|k| self.tau_max * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Per-state probability columns; always on for cascades.
    #[serde(default)]
    pub probabilities: bool,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            formats: default_formats(),
            probabilities: false,
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceConfig {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_threshold() -> f64 {
    0.99
}

fn default_horizon() -> f64 {
    1.0
}

impl Default for RecurrenceConfig {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            horizon: default_horizon(),
        }
    }
}

/// Cartesian expansion over subspaces and spread states. An empty `s3` list
/// pairs each `s2` with `s3 = s2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub s2: Vec<i64>,
    #[serde(default)]
    pub s3: Vec<i64>,
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    /// Rows with a larger dimension skip the propagation and spectrum columns.
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_m() -> Vec<usize> {
    vec![0]
}

fn default_epsilon() -> Vec<f64> {
    vec![0.0]
}

fn default_max_dim() -> usize {
    1201
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            s2: Vec::new(),
            s3: Vec::new(),
            m: default_m(),
            epsilon: default_epsilon(),
            max_dim: default_max_dim(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| {
            CliError::usage(
                "config",
                e.message().trim().to_string() + &span_hint(text, e.span()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn single(experiment: ExperimentConfig) -> Self {
        Self {
            experiment: vec![experiment],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(CliError::usage("experiment", "no experiments defined"));
        }
        let mut names = HashSet::new();
        for (i, e) in self.experiment.iter().enumerate() {
            let path = format!("experiment[{i}]");
            e.validate_at(&path)?;
            if !names.insert(e.name.as_str()) {
                return Err(CliError::usage(
                    format!("{path}.name"),
                    format!("duplicate experiment name '{}'", e.name),
                ));
            }
        }
        Ok(())
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

impl ExperimentConfig {
    /// A config of the given kind with every optional section defaulted.
    pub fn new(name: &str, kind: Kind, s2: i64, s3: i64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            s2: Some(s2),
            s3: Some(s3),
            initial: InitialCondition::default(),
            time: TimeGrid::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            recurrence: None,
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("experiment")
    }

    /// The subspace labels; meaningful only for quantum single runs.
    pub fn labels(&self) -> (i64, i64) {
        (self.s2.unwrap_or(0), self.s3.unwrap_or(0))
    }

    fn validate_at(&self, p: &str) -> Result<()> {
        let err = |field: &str, msg: String| Err(CliError::usage(format!("{p}.{field}"), msg));

        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            || self.name.starts_with('.')
        {
            return err(
                "name",
                format!("'{}' is not a plain file stem ([A-Za-z0-9_.-])", self.name),
            );
        }

        match (self.kind == Kind::Sweep, self.sweep.is_some()) {
            (true, false) => return err("sweep", "sweep experiments need a [sweep] table".into()),
            (false, true) => {
                return err(
                    "sweep",
                    "only sweep experiments take a [sweep] table".into(),
                )
            }
            _ => {}
        }
        match self.kind {
            Kind::Sweep => {}
            Kind::Classical => {
                if self.s2.is_some() || self.s3.is_some() {
                    let field = if self.s2.is_some() { "s2" } else { "s3" };
                    return err(
                        field,
                        "classical runs take their invariants from initial.actions".into(),
                    );
                }
            }
            _ => {
                let Some(s2) = self.s2 else {
                    return err("s2", "required".into());
                };
                let Some(s3) = self.s3 else {
                    return err("s3", "required".into());
                };
                if s2 < 0 {
                    return err("s2", format!("must be nonnegative, got {s2}"));
                }
                if s3 < s2 {
                    return err("s3", format!("must be >= s2 = {s2}, got {s3}"));
                }
                if self.kind == Kind::Spectrum && s2 < 2 {
                    return err("s2", "spectrum diagnostics need s2 >= 2".into());
                }
            }
        }

        if self.recurrence.is_some() && self.kind != Kind::Recurrence {
            return err(
                "recurrence",
                "only recurrence experiments take a [recurrence] table".into(),
            );
        }

        let ic = &self.initial;
        let forms = [
            ic.m.is_some(),
            ic.amplitudes.is_some(),
            ic.actions.is_some(),
        ];
        if forms.iter().filter(|&&f| f).count() > 1 {
            return err(
                "initial",
                "give only one of m (with optional epsilon), amplitudes, or actions".into(),
            );
        }
        if ic.epsilon.is_some() && ic.m.is_none() {
            return err("initial.epsilon", "epsilon requires m".into());
        }
        if let Some(eps) = ic.epsilon {
            if !(0.0..1.0).contains(&eps) {
                return err("initial.epsilon", format!("must lie in [0, 1), got {eps}"));
            }
        }
        match self.kind {
            Kind::Classical => match ic.actions {
                None => return err("initial.actions", "classical runs need actions".into()),
                Some(a) => {
                    if a.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return err(
                            "initial.actions",
                            format!("actions must be finite and nonnegative, got {a:?}"),
                        );
                    }
                }
            },
            Kind::Sweep => {
                if forms.iter().any(|&f| f) {
                    return err(
                        "initial",
                        "sweeps take their initial states from the [sweep] table".into(),
                    );
                }
            }
            _ => {
                if ic.actions.is_some() {
                    return err(
                        "initial.actions",
                        "actions apply to classical runs only".into(),
                    );
                }
                let (s2, _) = self.labels();
                if let Some(m) = ic.m {
                    if m as i64 > s2 {
                        return err("initial.m", format!("must be <= s2 = {s2}, got {m}"));
                    }
                }
                if let Some(a) = &ic.amplitudes {
                    let d = s2 as usize + 1;
                    if a.len() != d {
                        return err(
                            "initial.amplitudes",
                            format!("expected {d} entries (s2 + 1), got {}", a.len()),
                        );
                    }
                    if a.iter().flatten().any(|x| !x.is_finite()) {
                        return err("initial.amplitudes", "non-finite entry".into());
                    }
                    if a.iter().all(|[re, im]| *re == 0.0 && *im == 0.0) {
                        return err("initial.amplitudes", "zero vector".into());
                    }
                }
            }
        }

        if !(self.time.tau_max.is_finite() && self.time.tau_max > 0.0) {
            return err(
                "time.tau_max",
                format!("must be positive, got {}", self.time.tau_max),
            );
        }
        if self.time.points < 2 {
            return err(
                "time.points",
                format!("need at least 2, got {}", self.time.points),
            );
        }
        if let Some(dt) = self.solver.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return err("solver.dt", format!("must be positive, got {dt}"));
            }
        }
        if let Some(tol) = self.solver.norm_check {
            if !(tol.is_finite() && tol > 0.0) {
                return err("solver.norm_check", format!("must be positive, got {tol}"));
            }
        }
        if self.output.formats.is_empty() {
            return err("output.formats", "at least one format is required".into());
        }
        if let Some(r) = &self.recurrence {
            if !(r.threshold > 0.0 && r.threshold < 1.0) {
                return err(
                    "recurrence.threshold",
                    format!("must lie in (0, 1), got {}", r.threshold),
                );
            }
            if !(r.horizon.is_finite() && r.horizon > 0.0) {
                return err(
                    "recurrence.horizon",
                    format!("must be positive, got {}", r.horizon),
                );
            }
        }
        if let Some(s) = &self.sweep {
            for (k, &s2) in s.s2.iter().enumerate() {
                if s2 < 0 {
                    return err(
                        &format!("sweep.s2[{k}]"),
                        format!("must be nonnegative, got {s2}"),
                    );
                }
            }
            for (k, &eps) in s.epsilon.iter().enumerate() {
                if !(0.0..1.0).contains(&eps) {
                    return err(
                        &format!("sweep.epsilon[{k}]"),
                        format!("must lie in [0, 1), got {eps}"),
                    );
                }
            }
        }
        Ok(())
    }
}
