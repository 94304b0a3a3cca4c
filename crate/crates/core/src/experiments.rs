//! Replicated runs and the per-observable summaries built on them.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{
    acf, auto_window, average_curves, ess, integrated_time_with, AcfCurve, Moments, DEFAULT_CUTOFF, DEFAULT_WINDOW,
};
use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::model::TargetModel;
use crate::samplers::{run_sampler, Discretizer, InitialState, RunLimits, RunSummary, SampleSeries, Sampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// The potential `U`.
    Potential,
    /// `‖x‖²`.
    SqNorm,
    /// Every coordinate of `x`, summarized by averaging standardized curves.
    Coords,
    /// Negative log-likelihood of a logistic posterior.
    Nll,
}

impl Observable {
    pub const ALL: [Observable; 4] = [Self::Potential, Self::SqNorm, Self::Coords, Self::Nll];

    pub fn name(self) -> &'static str {
        match self {
            Self::Potential => "U",
            Self::SqNorm => "sqnorm",
            Self::Coords => "x",
            Self::Nll => "nll",
        }
    }

    pub fn applies_to(self, target: &TargetModel) -> bool {
        self != Self::Nll || matches!(target, TargetModel::Logistic(_))
    }

    /// Scalar series for this observable, one per coordinate for `Coords`.
    pub fn series(self, target: &TargetModel, samples: &SampleSeries) -> Result<Vec<Vec<f64>>> {
        Ok(match self {
            Self::Potential => vec![samples.map(|x| target.potential(x))],
            Self::SqNorm => vec![samples.map(norm_sq)],
            Self::Coords => (0..samples.dim).map(|i| samples.coordinate(i)).collect(),
            Self::Nll => match target {
                TargetModel::Logistic(l) => vec![samples.map(|x| l.nll(x))],
                _ => return Err(Error::Unsupported("nll is only defined for logistic targets".into())),
            },
        })
    }

    /// Exact reference moments when they are available in closed form.
    pub fn exact_moments(self, target: &TargetModel) -> Option<Vec<Moments>> {
        let TargetModel::Gaussian(g) = target else {
            return None;
        };
        let known = |(mean, variance): (f64, f64)| Moments::Known { mean, variance };
        match self {
            Self::Potential => Some(vec![known(g.potential_moments())]),
            Self::SqNorm => Some(vec![known(g.sqnorm_moments())]),
            Self::Coords => Some(g.variances().iter().map(|&v| known((0.0, v))).collect()),
            Self::Nll => None,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "U" | "u" | "potential" => Ok(Self::Potential),
            "sqnorm" => Ok(Self::SqNorm),
            "x" | "coords" => Ok(Self::Coords),
            "nll" => Ok(Self::Nll),
            other => Err(Error::InvalidArgument(format!(
                "unknown observable '{other}', expected one of U, sqnorm, x, nll"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaPlan {
    pub sampler: Sampler,
    pub init: InitialState,
    pub limits: RunLimits,
    /// Spacing of the discretized samples.
    pub delta: f64,
    pub replicas: usize,
    /// Replica `i` is seeded with `base_seed + i`.
    pub base_seed: u64,
}

impl ReplicaPlan {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidArgument("replicas must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        self.limits.validate()?;
        self.sampler.validate(dim)
    }

    pub fn seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub index: usize,
    pub seed: u64,
    pub summary: RunSummary,
    pub samples: SampleSeries,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs every replica (in parallel on the current rayon pool) and keeps the
/// discretized samples.
pub fn run_replicas(target: &TargetModel, plan: &ReplicaPlan) -> Result<Vec<Replica>> {
    plan.validate(target.dim())?;
    (0..plan.replicas)
        .into_par_iter()
        .map(|index| run_replica(target, plan, index))
        .collect()
}

pub fn run_replica(target: &TargetModel, plan: &ReplicaPlan, index: usize) -> Result<Replica> {
    let seed = plan.seed(index);
    let mut rng = rng_for(seed);
    let mut disc = Discretizer::new(plan.delta)?;
    let summary = run_sampler(target, &plan.sampler, &plan.init, plan.limits, &mut rng, &mut disc)?;
    let samples = disc.finish(summary.events, summary.total_time);
    Ok(Replica {
        index,
        seed,
        summary,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Largest lag computed; defaults to a quarter of the shortest series.
    pub max_lag: Option<usize>,
    /// Window constant used to cap the summation range.
    pub window: f64,
    pub cutoff: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            max_lag: None,
            window: DEFAULT_WINDOW,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub tau_samples: f64,
    pub tau_events: f64,
    pub ess: f64,
    pub ess_per_event: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub observable: Observable,
    /// Whether the reference moments were exact or pooled from the replicas.
    pub exact_moments: bool,
    /// Replica-averaged curve, up to the summation window.
    pub curve: AcfCurve,
    pub window: usize,
    pub events_per_sample: f64,
    /// From the averaged curve.
    pub pooled: Estimate,
    pub per_replica: Vec<Estimate>,
}

impl ObservableReport {
    /// Standard error of the per-replica `τ` (in events) around its mean.
    pub fn tau_events_err(&self) -> f64 {
        let m = self.per_replica.len() as f64;
        if m < 2.0 {
            return 0.0;
        }
        let mean = self.per_replica.iter().map(|e| e.tau_events).sum::<f64>() / m;
        let var = self.per_replica.iter().map(|e| (e.tau_events - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    }
}

/// Reference moments: exact where known, otherwise pooled over all replicas.
pub fn reference_moments(target: &TargetModel, replicas: &[Replica], obs: Observable) -> Result<(Vec<Moments>, bool)> {
    if let Some(m) = obs.exact_moments(target) {
        return Ok((m, true));
    }
    let mut sums: Vec<(f64, f64, f64)> = Vec::new();
    for r in replicas {
        let series = obs.series(target, &r.samples)?;
        if sums.is_empty() {
            sums = vec![(0.0, 0.0, 0.0); series.len()];
        }
        for (s, acc) in series.iter().zip(sums.iter_mut()) {
            for &v in s {
                acc.0 += 1.0;
                acc.1 += v;
            }
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s.1 / s.0).collect();
    for r in replicas {
        let series = obs.series(target, &r.samples)?;
        for ((s, acc), m) in series.iter().zip(sums.iter_mut()).zip(&means) {
            acc.2 += s.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        }
    }
    let moments = sums
        .iter()
        .zip(&means)
        .map(|(s, &mean)| Moments::Known {
            mean,
            variance: s.2 / s.0,
        })
        .collect();
    Ok((moments, false))
}

/// Autocorrelation, `τ` and ESS of one observable across replicas.
///
/// Series are centered at the reference mean before correlating. The
/// per-replica curves are averaged, the summation range is capped at the
/// self-consistent window of the averaged curve, and within that range the
/// `τ` cutoff rule applies.
pub fn analyze(
    target: &TargetModel,
    replicas: &[Replica],
    obs: Observable,
    opts: &AnalysisOptions,
) -> Result<ObservableReport> {
    if replicas.is_empty() {
        return Err(Error::InvalidArgument("no replicas to analyze".into()));
    }
    let n_min = replicas.iter().map(|r| r.samples.n()).min().unwrap_or(0);
    if n_min < 4 {
        return Err(Error::InvalidArgument(format!(
            "each replica needs at least 4 samples, the shortest has {n_min}"
        )));
    }
    let max_lag = opts.max_lag.unwrap_or(n_min / 4).min(n_min - 1).max(1);
    let (moments, exact) = reference_moments(target, replicas, obs)?;

    let curves = replicas
        .iter()
        .map(|r| {
            let series = obs.series(target, &r.samples)?;
            let per_coord = series
                .iter()
                .zip(&moments)
                .map(|(s, m)| centered_acf(&s[..n_min], max_lag, *m))
                .collect::<Result<Vec<_>>>()?;
            average_curves(&per_coord)
        })
        .collect::<Result<Vec<_>>>()?;
    let averaged = average_curves(&curves)?;
    let window = auto_window(&averaged, opts.window);

    let events_total: u64 = replicas.iter().map(|r| r.summary.events).sum();
    let samples_total: usize = replicas.iter().map(|r| r.samples.n()).sum();
    let n_delta = events_total as f64 / samples_total as f64;

    let estimate = |curve: &AcfCurve, n: usize, events: u64, nd: f64| {
        let t = integrated_time_with(&curve.truncated(window), n, opts.cutoff);
        let e = ess(n, t.tau, events);
        Estimate {
            tau_samples: t.tau,
            tau_events: t.in_events(nd),
            ess: e.ess,
            ess_per_event: e.per_event,
            truncated: t.truncated,
        }
    };
    let per_replica = replicas
        .iter()
        .zip(&curves)
        .map(|(r, c)| estimate(c, r.samples.n(), r.summary.events, r.samples.events_per_sample))
        .collect();
    let mean_events = (events_total as f64 / replicas.len() as f64).round() as u64;
    let pooled = estimate(&averaged, n_min, mean_events, n_delta);
    Ok(ObservableReport {
        observable: obs,
        exact_moments: exact,
        curve: averaged.truncated(window).per_event(n_delta),
        window,
        events_per_sample: n_delta,
        pooled,
        per_replica,
    })
}

/// Correlation of `h - m_h` with reference mean zero. Subtracting `m_h²` from
/// raw products instead turns a sample-mean error `b` into an offset of about
/// `-2 m_h b / σ_h²` on every lag, which swamps the curve when `m_h² ≫ σ_h²`.
fn centered_acf(series: &[f64], max_lag: usize, moments: Moments) -> Result<AcfCurve> {
    match moments {
        Moments::Known { mean, variance } => {
            let centered: Vec<f64> = series.iter().map(|h| h - mean).collect();
            let mut c = acf(&centered, max_lag, Moments::Known { mean: 0.0, variance })?;
            c.mean = mean;
            Ok(c)
        }
        Moments::Empirical => acf(series, max_lag, Moments::Empirical),
    }
}

/// Equal-width histogram over `[lo, hi)`; values outside are dropped.
pub fn histogram(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Result<Vec<u64>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "histogram needs bins > 0 and hi > lo, got {bins} bins on [{lo}, {hi})"
        )));
    }
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for v in values {
        if v >= lo && v < hi {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    Ok(counts)
}
