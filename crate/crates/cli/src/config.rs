//! Flat `key = value` experiment configuration.
//!
//! Keys carry a section prefix (`target.`, `sampler.`, `run.`). Lines starting
//! with `#` and blank lines are ignored; later assignments override earlier
//! ones. [`ExperimentConfig::to_text`] writes every field so that the output
//! parses back to an equal value.

use std::fmt;
use std::path::PathBuf;

use forward_ec::kernels::{OrthogonalVariant, ParallelKernel, Polarity};
use forward_ec::model::{load_uci_csv, CsvOptions, LabelColumn};
use forward_ec::{
    DirectionLaw, InitialState, KernelSpec, Observable, OrthogonalKernel, Preset, RefreshStrategy, RunLimits,
    Sampler, TargetModel,
};

/// A configuration problem, tied to the key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// Standard Gaussian.
    Gaussian { dim: usize },
    /// Gaussian with variances spread over two decades.
    Anisotropic { dim: usize },
    Mixture { dim: usize, seed: u64 },
    Logistic {
        path: PathBuf,
        standardize: bool,
        intercept: bool,
        label_column: LabelColumn,
    },
}

impl TargetSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Anisotropic { .. } => "anisotropic",
            Self::Mixture { .. } => "mixture",
            Self::Logistic { .. } => "logistic",
        }
    }

    /// The same family at another dimension; logistic targets have a fixed one.
    pub fn with_dim(&self, d: usize) -> Option<Self> {
        match self {
            Self::Gaussian { .. } => Some(Self::Gaussian { dim: d }),
            Self::Anisotropic { .. } => Some(Self::Anisotropic { dim: d }),
            Self::Mixture { seed, .. } => Some(Self::Mixture { dim: d, seed: *seed }),
            Self::Logistic { .. } => None,
        }
    }

    pub fn build(&self) -> Result<TargetModel, ConfigError> {
        let t = match self {
            Self::Gaussian { dim } => TargetModel::standard_gaussian(*dim),
            Self::Anisotropic { dim } => TargetModel::anisotropic_gaussian(*dim),
            Self::Mixture { dim, seed } => TargetModel::gaussian_mixture(*dim, *seed),
            Self::Logistic {
                path,
                standardize,
                intercept,
                label_column,
            } => {
                let opts = CsvOptions {
                    label_column: *label_column,
                    standardize: *standardize,
                    add_intercept: *intercept,
                };
                return load_uci_csv(path, opts)
                    .map(TargetModel::logistic)
                    .map_err(|e| ConfigError::new("target.path", e));
            }
        };
        t.map_err(|e| ConfigError::new("target.dim", e))
    }

    /// Default sample spacing: about 55 events per sample at the Gaussian
    /// benchmark sizes, 100 for the mixture and 0.1 for logistic posteriors.
    fn default_delta(&self) -> f64 {
        match self {
            Self::Gaussian { .. } | Self::Anisotropic { .. } => 500.0,
            Self::Mixture { .. } => 100.0,
            Self::Logistic { .. } => 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerChoice {
    Preset(Preset),
    Custom { kernel: KernelSpec, refresh: RefreshStrategy },
}

impl SamplerChoice {
    pub fn name(&self) -> String {
        match self {
            Self::Preset(p) => p.name().to_string(),
            Self::Custom { .. } => "custom".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    Origin,
    At(Vec<f64>),
}

/// Synthetic scaling mode: `τ(d) = A d^z` is injected instead of running.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticScaling {
    pub amplitude: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub sampler: SamplerChoice,
    /// Refresh period `T` for presets; defaults to `δ`.
    pub period: Option<f64>,
    pub basis_seed: u64,
    /// Defaults to a per-target value.
    pub delta: Option<f64>,
    pub time: Option<f64>,
    pub events: Option<u64>,
    pub replicas: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub start: StartPoint,
    pub observables: Vec<Observable>,
    /// Schemes for `bench`, `scaling` and `mixture`; empty means the sampler
    /// configured above.
    pub schemes: Vec<Preset>,
    pub dims: Vec<usize>,
    pub synthetic: Option<SyntheticScaling>,
    pub bins: usize,
    /// Histogram range; the data range when unset.
    pub hist_range: Option<(f64, f64)>,
}

pub const DEFAULT_EVENTS: u64 = 100_000;

pub const KEYS: &[&str] = &[
    "target.kind",
    "target.dim",
    "target.seed",
    "target.path",
    "target.standardize",
    "target.intercept",
    "target.label_column",
    "sampler.preset",
    "sampler.period",
    "sampler.basis_seed",
    "sampler.parallel",
    "sampler.orthogonal",
    "sampler.polarity",
    "sampler.law",
    "sampler.refresh",
    "run.delta",
    "run.time",
    "run.events",
    "run.replicas",
    "run.seed",
    "run.workers",
    "run.out",
    "run.start",
    "run.observables",
    "run.schemes",
    "run.dims",
    "run.synthetic_amplitude",
    "run.synthetic_z",
    "run.bins",
    "run.hist_lo",
    "run.hist_hi",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            target: TargetSpec::Gaussian { dim: 2 },
            sampler: SamplerChoice::Preset(Preset::ForwardRef),
            period: None,
            basis_seed: 0,
            delta: None,
            time: None,
            events: None,
            replicas: 1,
            seed: 0,
            workers: 1,
            out: PathBuf::from("out"),
            start: StartPoint::Origin,
            observables: vec![Observable::Potential, Observable::Coords],
            schemes: Vec::new(),
            dims: vec![25, 100, 400],
            synthetic: None,
            bins: 50,
            hist_range: None,
        }
    }
}

/// Raw key/value pairs, kept in order so later entries win.
#[derive(Debug, Clone, Default)]
struct Entries(Vec<(String, String)>);

impl Entries {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError::new(key, format!("{v:?}: {e}"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| ConfigError::new(key, format!("{s:?}: {e}"))))
                    .collect()
            })
            .transpose()
    }
}

/// Splits `key=value`, trimming both sides.
pub fn split_assignment(line: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| ConfigError::new(line.trim(), "expected key = value"))?;
    let k = k.trim();
    if !KEYS.contains(&k) {
        return Err(ConfigError::new(k, format!("unknown key; valid keys: {}", KEYS.join(", "))));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn parse_lines(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        entries.0.push(split_assignment(line)?);
    }
    Ok(entries)
}

fn preset(key: &str, v: &str) -> Result<Preset, ConfigError> {
    v.parse::<Preset>().map_err(|e| ConfigError::new(key, e))
}

impl ExperimentConfig {
    /// Parses a configuration file's text followed by `--set` overrides.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries = parse_lines(text)?;
        for o in overrides {
            entries.0.push(split_assignment(o)?);
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let d = Self::default();
        let dim = e.parse::<usize>("target.dim")?;
        let target = match e.get("target.kind").unwrap_or("gaussian") {
            "gaussian" => TargetSpec::Gaussian { dim: dim.unwrap_or(2) },
            "anisotropic" => TargetSpec::Anisotropic { dim: dim.unwrap_or(2) },
            "mixture" => TargetSpec::Mixture {
                dim: dim.unwrap_or(8),
                seed: e.parse("target.seed")?.unwrap_or(1),
            },
            "logistic" => TargetSpec::Logistic {
                path: e
                    .get("target.path")
                    .map(PathBuf::from)
                    .ok_or_else(|| ConfigError::new("target.path", "required for logistic targets"))?,
                standardize: e.parse("target.standardize")?.unwrap_or(true),
                intercept: e.parse("target.intercept")?.unwrap_or(true),
                label_column: match e.get("target.label_column") {
                    None | Some("last") => LabelColumn::Last,
                    Some(v) => LabelColumn::Index(
                        v.parse()
                            .map_err(|_| ConfigError::new("target.label_column", format!("{v:?}: expected last or an index")))?,
                    ),
                },
            },
            other => {
                return Err(ConfigError::new(
                    "target.kind",
                    format!("unknown target {other:?}; expected gaussian, anisotropic, mixture or logistic"),
                ))
            }
        };

        let sampler = match e.get("sampler.preset").unwrap_or("forward-ref") {
            "custom" => {
                let parallel: ParallelKernel = e.parse("sampler.parallel")?.unwrap_or(ParallelKernel::Direct);
                let variant: OrthogonalVariant = e.parse("sampler.orthogonal")?.unwrap_or(OrthogonalVariant::Switch);
                let polarity: Polarity = e.parse("sampler.polarity")?.unwrap_or(Polarity::Positive);
                let law: DirectionLaw = e.parse("sampler.law")?.unwrap_or(DirectionLaw::UniformSphere);
                SamplerChoice::Custom {
                    kernel: KernelSpec::new(parallel, OrthogonalKernel { variant, polarity }, law),
                    refresh: e.parse("sampler.refresh")?.unwrap_or(RefreshStrategy::None),
                }
            }
            name => {
                for k in ["sampler.parallel", "sampler.orthogonal", "sampler.polarity", "sampler.law", "sampler.refresh"] {
                    if e.get(k).is_some() {
                        return Err(ConfigError::new(k, "only used with sampler.preset = custom"));
                    }
                }
                SamplerChoice::Preset(preset("sampler.preset", name)?)
            }
        };

        let start = match e.get("run.start") {
            None | Some("origin") => StartPoint::Origin,
            Some(_) => StartPoint::At(e.list("run.start")?.unwrap_or_default()),
        };
        let synthetic = match (e.parse::<f64>("run.synthetic_amplitude")?, e.parse::<f64>("run.synthetic_z")?) {
            (None, None) => None,
            (a, Some(z)) => Some(SyntheticScaling {
                amplitude: a.unwrap_or(1.0),
                exponent: z,
            }),
            (Some(_), None) => {
                return Err(ConfigError::new("run.synthetic_z", "required when run.synthetic_amplitude is set"))
            }
        };
        let hist_range = match (e.parse::<f64>("run.hist_lo")?, e.parse::<f64>("run.hist_hi")?) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => return Err(ConfigError::new("run.hist_lo", "set both run.hist_lo and run.hist_hi or neither")),
        };
        let schemes = match e.get("run.schemes") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| preset("run.schemes", s))
                .collect::<Result<_, _>>()?,
        };

        let cfg = Self {
            target,
            sampler,
            period: e.parse("sampler.period")?,
            basis_seed: e.parse("sampler.basis_seed")?.unwrap_or(d.basis_seed),
            delta: e.parse("run.delta")?,
            time: e.parse("run.time")?,
            events: e.parse("run.events")?,
            replicas: e.parse("run.replicas")?.unwrap_or(d.replicas),
            seed: e.parse("run.seed")?.unwrap_or(d.seed),
            workers: e.parse("run.workers")?.unwrap_or(d.workers),
            out: e.get("run.out").map(PathBuf::from).unwrap_or(d.out),
            start,
            observables: e.list("run.observables")?.unwrap_or(d.observables),
            schemes,
            dims: e.list("run.dims")?.unwrap_or(d.dims),
            synthetic,
            bins: e.parse("run.bins")?.unwrap_or(d.bins),
            hist_range,
        };
        Ok(cfg)
    }

    /// Every field as `key = value` lines, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        put("target.kind", self.target.kind().into());
        match &self.target {
            TargetSpec::Gaussian { dim } | TargetSpec::Anisotropic { dim } => put("target.dim", dim.to_string()),
            TargetSpec::Mixture { dim, seed } => {
                put("target.dim", dim.to_string());
                put("target.seed", seed.to_string());
            }
            TargetSpec::Logistic {
                path,
                standardize,
                intercept,
                label_column,
            } => {
                put("target.path", path.display().to_string());
                put("target.standardize", standardize.to_string());
                put("target.intercept", intercept.to_string());
                put(
                    "target.label_column",
                    match label_column {
                        LabelColumn::Last => "last".into(),
                        LabelColumn::Index(i) => i.to_string(),
                    },
                );
            }
        }
        put("sampler.preset", self.sampler.name());
        if let Some(t) = self.period {
            put("sampler.period", t.to_string());
        }
        put("sampler.basis_seed", self.basis_seed.to_string());
        if let SamplerChoice::Custom { kernel, refresh } = &self.sampler {
            put("sampler.parallel", kernel.parallel.to_string());
            put("sampler.orthogonal", kernel.orthogonal.variant.to_string());
            put("sampler.polarity", kernel.orthogonal.polarity.to_string());
            put("sampler.law", kernel.law.to_string());
            put("sampler.refresh", refresh.to_string());
        }
        if let Some(v) = self.delta {
            put("run.delta", v.to_string());
        }
        if let Some(v) = self.time {
            put("run.time", v.to_string());
        }
        if let Some(v) = self.events {
            put("run.events", v.to_string());
        }
        put("run.replicas", self.replicas.to_string());
        put("run.seed", self.seed.to_string());
        put("run.workers", self.workers.to_string());
        put("run.out", self.out.display().to_string());
        put(
            "run.start",
            match &self.start {
                StartPoint::Origin => "origin".into(),
                StartPoint::At(x) => join(x),
            },
        );
        put("run.observables", join(&self.observables));
        put("run.schemes", join(&self.schemes));
        put("run.dims", join(&self.dims));
        if let Some(s) = self.synthetic {
            put("run.synthetic_amplitude", s.amplitude.to_string());
            put("run.synthetic_z", s.exponent.to_string());
        }
        put("run.bins", self.bins.to_string());
        if let Some((lo, hi)) = self.hist_range {
            put("run.hist_lo", lo.to_string());
            put("run.hist_hi", hi.to_string());
        }
        lines.sort_by_key(|(k, _)| KEYS.iter().position(|x| x == k));
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.target.default_delta())
    }

    pub fn period(&self) -> f64 {
        self.period.unwrap_or_else(|| self.delta())
    }

    pub fn limits(&self) -> RunLimits {
        match (self.time, self.events) {
            (Some(t), e) => RunLimits {
                horizon: t,
                max_events: e,
            },
            (None, e) => RunLimits::events(e.unwrap_or(DEFAULT_EVENTS)),
        }
    }

    pub fn init(&self) -> InitialState {
        match &self.start {
            StartPoint::Origin => InitialState::default(),
            StartPoint::At(x) => InitialState::at(x.clone()),
        }
    }

    pub fn sampler(&self) -> Sampler {
        match &self.sampler {
            SamplerChoice::Preset(p) => p.sampler(self.period(), self.basis_seed),
            SamplerChoice::Custom { kernel, refresh } => Sampler::Forward {
                kernel: kernel.clone(),
                refresh: *refresh,
            },
        }
    }

    /// The schemes to compare: `run.schemes`, or the configured sampler.
    pub fn scheme_list(&self) -> Vec<(String, Sampler)> {
        if self.schemes.is_empty() {
            vec![(self.sampler.name(), self.sampler())]
        } else {
            self.schemes
                .iter()
                .map(|p| (p.name().to_string(), p.sampler(self.period(), self.basis_seed)))
                .collect()
        }
    }

    /// Checks everything that does not need the target to be built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::new(key, format!("must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("run.delta", self.delta)?;
        positive("sampler.period", self.period)?;
        positive("run.time", self.time)?;
        if self.events == Some(0) {
            return Err(ConfigError::new("run.events", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(ConfigError::new("run.replicas", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(ConfigError::new("run.workers", "must be at least 1"));
        }
        if self.bins == 0 {
            return Err(ConfigError::new("run.bins", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.hist_range {
            if !(hi > lo) {
                return Err(ConfigError::new("run.hist_hi", format!("must exceed run.hist_lo, got [{lo}, {hi})")));
            }
        }
        match self.target {
            TargetSpec::Gaussian { dim } | TargetSpec::Anisotropic { dim } | TargetSpec::Mixture { dim, .. }
                if dim == 0 =>
            {
                return Err(ConfigError::new("target.dim", "must be at least 1"))
            }
            _ => {}
        }
        if self.observables.is_empty() {
            return Err(ConfigError::new("run.observables", "at least one observable is needed"));
        }
        if let Some(s) = self.synthetic {
            if !(s.amplitude > 0.0 && s.amplitude.is_finite() && s.exponent.is_finite()) {
                return Err(ConfigError::new("run.synthetic_amplitude", "needs a positive amplitude and finite exponent"));
            }
        }
        Ok(())
    }

    /// Checks the samplers and start point against a built target.
    pub fn validate_for(&self, target: &TargetModel) -> Result<(), ConfigError> {
        let dim = target.dim();
        for (name, s) in self.scheme_list() {
            s.validate(dim)
                .map_err(|e| ConfigError::new("sampler.preset", format!("{name}: {e}")))?;
        }
        if let StartPoint::At(x) = &self.start {
            if x.len() != dim {
                return Err(ConfigError::new(
                    "run.start",
                    format!("has {} coordinates, the target has dimension {dim}", x.len()),
                ));
            }
        }
        for o in &self.observables {
            if !o.applies_to(target) {
                return Err(ConfigError::new("run.observables", format!("{o} does not apply to a {} target", self.target.kind())));
            }
        }
        Ok(())
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
