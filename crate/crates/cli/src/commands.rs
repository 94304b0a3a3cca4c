//! The four experiment commands. Each returns the paths it wrote.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use forward_ec::diagnostics::{fit_scaling, occupancy};
use forward_ec::experiments::{analyze, histogram, rng_for, run_replicas, AnalysisOptions, Replica, ReplicaPlan};
use forward_ec::output::{
    real, write_acf, write_histogram, write_metadata, write_occupancy, write_replica_estimates, write_samples,
    write_scaling, write_segments, write_summary, SummaryRow,
};
use forward_ec::{discretize, run_sampler, Sampler, ScalingPoint, TargetModel, Trajectory};

use crate::config::{ConfigError, ExperimentConfig, TargetSpec};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "configuration error: {e}"),
            Self::Runtime(e) => write!(f, "runtime error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<forward_ec::Error> for CliError {
    fn from(e: forward_ec::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

type Meta = Vec<(&'static str, String)>;

/// Validates the configuration and builds its target.
fn prepare(cfg: &ExperimentConfig) -> CliResult<TargetModel> {
    cfg.validate()?;
    let target = cfg.target.build()?;
    cfg.validate_for(&target)?;
    Ok(target)
}

fn base_meta(cfg: &ExperimentConfig, scheme: &str) -> Meta {
    vec![
        ("target", cfg.target.kind().to_string()),
        ("dim", target_dim(&cfg.target)),
        ("scheme", scheme.to_string()),
        ("seed", cfg.seed.to_string()),
        ("delta", real(cfg.delta())),
        ("period", real(cfg.period())),
    ]
}

fn target_dim(t: &TargetSpec) -> String {
    match t {
        TargetSpec::Gaussian { dim } | TargetSpec::Anisotropic { dim } | TargetSpec::Mixture { dim, .. } => {
            dim.to_string()
        }
        TargetSpec::Logistic { .. } => "data".to_string(),
    }
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
        let path = self.dir.join(name);
        let err = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(err)?);
        body(&mut w).and_then(|_| w.flush()).map_err(err)?;
        self.written.push(path);
        Ok(())
    }
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn plan(cfg: &ExperimentConfig, sampler: Sampler) -> ReplicaPlan {
    ReplicaPlan {
        sampler,
        init: cfg.init(),
        limits: cfg.limits(),
        delta: cfg.delta(),
        replicas: cfg.replicas,
        base_seed: cfg.seed,
    }
}

fn replicas(cfg: &ExperimentConfig, target: &TargetModel, sampler: Sampler) -> CliResult<Vec<Replica>> {
    let p = plan(cfg, sampler);
    Ok(pool(cfg.workers)?.install(|| run_replicas(target, &p))?)
}

fn mean_events_per_sample(runs: &[Replica]) -> f64 {
    let events: u64 = runs.iter().map(|r| r.summary.events).sum();
    let samples: usize = runs.iter().map(|r| r.samples.n()).sum();
    events as f64 / samples.max(1) as f64
}

/// One trajectory with seed `run.seed`: `segments.csv` and `samples.csv`.
pub fn cmd_sample(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let target = prepare(cfg)?;
    let sampler = cfg.sampler();
    let mut rng = rng_for(cfg.seed);
    let mut traj = Trajectory::new();
    let summary = run_sampler(&target, &sampler, &cfg.init(), cfg.limits(), &mut rng, &mut traj)?;
    let samples = discretize(&traj, cfg.delta())?;

    let mut meta = base_meta(cfg, &cfg.sampler.name());
    meta.push(("events", summary.events.to_string()));
    meta.push(("refreshes", summary.refreshes.to_string()));
    meta.push(("total_time", real(summary.total_time)));
    meta.push(("n_delta", real(samples.events_per_sample)));
    let mut out = Output::new(&cfg.out)?;
    out.write("segments.csv", |w| write_segments(w, &traj, &meta))?;
    out.write("samples.csv", |w| write_samples(w, &samples, &meta))?;
    Ok(out.written)
}

/// Replicated runs per scheme with `τ`, ESS and autocorrelation curves per
/// observable: `summary.csv`, `replicas.csv` (per-replica estimates) and
/// `acf_<scheme>_<observable>.csv`.
pub fn cmd_bench(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let target = prepare(cfg)?;
    let mut out = Output::new(&cfg.out)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (scheme, sampler) in cfg.scheme_list() {
        let runs = replicas(cfg, &target, sampler)?;
        for &obs in &cfg.observables {
            let report = analyze(&target, &runs, obs, &AnalysisOptions::default())?;
            let mut meta = base_meta(cfg, &scheme);
            meta.push(("observable", obs.name().to_string()));
            meta.push(("replicas", cfg.replicas.to_string()));
            meta.push(("n_delta", real(report.events_per_sample)));
            meta.push(("window", report.window.to_string()));
            meta.push(("exact_moments", report.exact_moments.to_string()));
            out.write(&format!("acf_{scheme}_{}.csv", obs.name()), |w| write_acf(w, &report.curve, &meta))?;
            rows.push(SummaryRow::from_report(&scheme, &report));
            reports.push((scheme.clone(), report));
        }
    }
    let mut meta = base_meta(cfg, "");
    meta.retain(|(k, _)| *k != "scheme");
    meta.push(("replicas", cfg.replicas.to_string()));
    out.write("summary.csv", |w| write_summary(w, &rows, &meta))?;
    out.write("replicas.csv", |w| write_replica_estimates(w, &reports, &meta))?;
    Ok(out.written)
}

struct ScalingRow {
    scheme: String,
    observable: String,
    dim: usize,
    tau: f64,
    tau_err: f64,
    n_delta: f64,
}

/// `τ` per scheme, observable and dimension, with a power-law fit per scheme
/// and observable: `scaling_points.csv`, `scaling_summary.csv` and
/// `scaling_<scheme>_<observable>.csv`.
///
/// With `run.synthetic_z` set no sampler runs; `τ = A d^z` is injected
/// exactly so the fitting path can be checked against a known answer.
pub fn cmd_scaling(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.dims.len() < 3 {
        return Err(ConfigError::new("run.dims", format!("need at least 3 dimensions, got {}", cfg.dims.len())).into());
    }
    if cfg.target.with_dim(1).is_none() {
        return Err(ConfigError::new("target.kind", "scaling needs a target with a free dimension").into());
    }
    if let Some(d) = cfg.dims.iter().find(|d| **d == 0) {
        return Err(ConfigError::new("run.dims", format!("dimensions must be positive, got {d}")).into());
    }

    let mut points = Vec::new();
    for (scheme, sampler) in cfg.scheme_list() {
        for &dim in &cfg.dims {
            if let Some(s) = cfg.synthetic {
                for obs in &cfg.observables {
                    points.push(ScalingRow {
                        scheme: scheme.clone(),
                        observable: obs.name().to_string(),
                        dim,
                        tau: s.amplitude * (dim as f64).powf(s.exponent),
                        tau_err: 0.0,
                        n_delta: f64::NAN,
                    });
                }
                continue;
            }
            let mut at_dim = cfg.clone();
            at_dim.target = cfg.target.with_dim(dim).expect("checked above");
            let target = prepare(&at_dim)?;
            let runs = replicas(&at_dim, &target, sampler.clone())?;
            for &obs in &cfg.observables {
                let report = analyze(&target, &runs, obs, &AnalysisOptions::default())?;
                points.push(ScalingRow {
                    scheme: scheme.clone(),
                    observable: obs.name().to_string(),
                    dim,
                    tau: report.pooled.tau_events,
                    tau_err: report.tau_events_err(),
                    n_delta: mean_events_per_sample(&runs),
                });
            }
        }
    }

    let mut out = Output::new(&cfg.out)?;
    let mut meta = base_meta(cfg, "");
    meta.retain(|(k, _)| *k != "scheme" && *k != "dim");
    meta.push(("replicas", cfg.replicas.to_string()));
    meta.push(("synthetic", cfg.synthetic.is_some().to_string()));
    out.write("scaling_points.csv", |w| {
        write_metadata(w, &meta)?;
        writeln!(w, "scheme,observable,d,tau_events,tau_err,n_delta")?;
        for p in &points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.scheme,
                p.observable,
                p.dim,
                real(p.tau),
                real(p.tau_err),
                real(p.n_delta)
            )?;
        }
        Ok(())
    })?;

    let mut fits = Vec::new();
    for (scheme, _) in cfg.scheme_list() {
        for obs in &cfg.observables {
            let pts: Vec<ScalingPoint> = points
                .iter()
                .filter(|p| p.scheme == scheme && p.observable == obs.name())
                .map(|p| ScalingPoint {
                    dim: p.dim as f64,
                    tau: p.tau,
                    tau_err: p.tau_err,
                })
                .collect();
            let fit = fit_scaling(&pts)?;
            let mut m = meta.clone();
            m.push(("scheme", scheme.clone()));
            m.push(("observable", obs.name().to_string()));
            out.write(&format!("scaling_{scheme}_{}.csv", obs.name()), |w| write_scaling(w, &fit, &m))?;
            fits.push((scheme.clone(), obs.name(), fit));
        }
    }
    out.write("scaling_summary.csv", |w| {
        write_metadata(w, &meta)?;
        writeln!(w, "scheme,observable,A,A_err,z,z_err")?;
        for (scheme, obs, f) in &fits {
            writeln!(
                w,
                "{scheme},{obs},{},{},{},{}",
                real(f.amplitude),
                real(f.amplitude_err),
                real(f.exponent),
                real(f.exponent_err)
            )?;
        }
        Ok(())
    })?;
    Ok(out.written)
}

/// Mode occupancy per replica and a histogram of the first coordinate over
/// all replicas: `occupancy_<scheme>.csv` and `histogram_<scheme>.csv`.
pub fn cmd_mixture(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    if !matches!(cfg.target, TargetSpec::Mixture { .. }) {
        return Err(ConfigError::new("target.kind", format!("mixture needs a mixture target, got {}", cfg.target.kind())).into());
    }
    let target = prepare(cfg)?;
    let TargetModel::Mixture(mix) = &target else {
        unreachable!("checked above")
    };
    let means = mix.means().to_vec();
    let mut out = Output::new(&cfg.out)?;
    for (scheme, sampler) in cfg.scheme_list() {
        let runs = replicas(cfg, &target, sampler)?;
        let occ = runs
            .iter()
            .map(|r| occupancy(r.samples.rows(), &means))
            .collect::<Result<Vec<_>, _>>()?;
        let first: Vec<f64> = runs.iter().flat_map(|r| r.samples.coordinate(0)).collect();
        let (lo, hi) = cfg.hist_range.unwrap_or_else(|| data_range(&first));
        let counts = histogram(first.iter().copied(), lo, hi, cfg.bins)?;

        let mut meta = base_meta(cfg, &scheme);
        meta.push(("replicas", cfg.replicas.to_string()));
        meta.push(("n_delta", real(mean_events_per_sample(&runs))));
        meta.push(("samples", first.len().to_string()));
        out.write(&format!("occupancy_{scheme}.csv"), |w| write_occupancy(w, &occ, &meta))?;
        out.write(&format!("histogram_{scheme}.csv"), |w| write_histogram(w, lo, hi, &counts, &meta))?;
    }
    Ok(out.written)
}

/// A half-open range that contains every value.
fn data_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    (lo, hi + pad.max(1e-9 * (hi - lo)))
}
