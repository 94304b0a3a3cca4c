//! Autocorrelation, integrated times, ESS, scaling fits and mixture occupancy.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::samplers::SampleSeries;

/// Threshold below which correlations are treated as vanished.
pub const DEFAULT_CUTOFF: f64 = 1e-3;

/// Window constant for [`auto_window`].
pub const DEFAULT_WINDOW: f64 = 6.0;

/// Reference moments `m_h`, `σ_h²` used in the correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moments {
    Empirical,
    Known { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcfMethod {
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfCurve {
    /// `C(k)` for `k = 0..=K`.
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Length of the underlying series.
    pub n: usize,
    /// Events per sample if lags are to be reported in events.
    pub events_per_sample: Option<f64>,
}

impl AcfCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn per_event(mut self, events_per_sample: f64) -> Self {
        self.events_per_sample = Some(events_per_sample);
        self
    }

    /// Lag `k` expressed in events (equal to `k` when no normalization is set).
    pub fn lag_events(&self, k: usize) -> f64 {
        k as f64 * self.events_per_sample.unwrap_or(1.0)
    }

    pub fn truncated(&self, max_lag: usize) -> Self {
        let mut c = self.clone();
        c.values.truncate(max_lag.min(self.max_lag()) + 1);
        c
    }
}

pub fn acf(series: &[f64], max_lag: usize, moments: Moments) -> Result<AcfCurve> {
    acf_with(series, max_lag, moments, AcfMethod::Auto)
}

/// `C(k) = (n-k)^{-1} Σ_{i<n-k} (h_i h_{i+k} - m²) / σ²`.
///
/// Evaluated through `a = h - m` as `Σ a_i a_{i+k} + m (Σ_{i<n-k} a_i + Σ_{i≥k} a_i)`,
/// which is the same sum with far less cancellation.
pub fn acf_with(series: &[f64], max_lag: usize, moments: Moments, method: AcfMethod) -> Result<AcfCurve> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "series of length {n} is too short for lag {max_lag}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("autocorrelation input"));
    }
    let (mean, variance) = match moments {
        Moments::Empirical => {
            let m = series.iter().sum::<f64>() / n as f64;
            let v = series.iter().map(|h| (h - m) * (h - m)).sum::<f64>() / n as f64;
            (m, v)
        }
        Moments::Known { mean, variance } => (mean, variance),
    };
    if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "reference variance must be positive, got {variance} (constant series?)"
        )));
    }
    let a: Vec<f64> = series.iter().map(|h| h - mean).collect();
    let use_fft = match method {
        AcfMethod::Direct => false,
        AcfMethod::Fft => true,
        AcfMethod::Auto => max_lag > 32 && n > 256,
    };
    let products = if use_fft {
        lagged_products_fft(&a, max_lag)
    } else {
        lagged_products_direct(&a, max_lag)
    };
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &a {
        acc += v;
        prefix.push(acc);
    }
    let total = acc;
    let values = products
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let left = prefix[n - k];
            let right = total - prefix[k];
            (p + mean * (left + right)) / ((n - k) as f64 * variance)
        })
        .collect();
    Ok(AcfCurve {
        values,
        mean,
        variance,
        n,
        events_per_sample: None,
    })
}

fn lagged_products_direct(a: &[f64], max_lag: usize) -> Vec<f64> {
    let n = a.len();
    (0..=max_lag)
        .map(|k| (0..n - k).map(|i| a[i] * a[i + k]).sum())
        .collect()
}

fn lagged_products_fft(a: &[f64], max_lag: usize) -> Vec<f64> {
    let n = a.len();
    let len = (n + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    forward.process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inverse.process(&mut buf);
    buf[..=max_lag].iter().map(|z| z.re / len as f64).collect()
}

/// Pointwise average of curves sharing a lag range (replicas, or standardized
/// coordinates of a vector observable).
pub fn average_curves(curves: &[AcfCurve]) -> Result<AcfCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves to average".into()))?;
    let k = curves.iter().map(AcfCurve::max_lag).min().unwrap_or(0);
    let m = curves.len() as f64;
    let values = (0..=k)
        .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / m)
        .collect();
    Ok(AcfCurve {
        values,
        mean: curves.iter().map(|c| c.mean).sum::<f64>() / m,
        variance: curves.iter().map(|c| c.variance).sum::<f64>() / m,
        n: curves.iter().map(|c| c.n).min().unwrap_or(first.n),
        events_per_sample: first.events_per_sample,
    })
}

/// ACF of a vector observable: each coordinate is standardized by its own
/// reference moments and the per-coordinate curves are averaged.
pub fn vector_acf(samples: &SampleSeries, max_lag: usize, moments: &[Moments]) -> Result<AcfCurve> {
    if moments.len() != samples.dim {
        return Err(Error::InvalidArgument(format!(
            "expected {} coordinate moments, got {}",
            samples.dim,
            moments.len()
        )));
    }
    let curves = moments
        .iter()
        .enumerate()
        .map(|(i, m)| acf(&samples.coordinate(i), max_lag, *m))
        .collect::<Result<Vec<_>>>()?;
    average_curves(&curves)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedTime {
    /// In samples.
    pub tau: f64,
    /// Number of lags summed.
    pub cutoff: usize,
    /// The correlations never settled below the threshold within the curve.
    pub truncated: bool,
}

impl IntegratedTime {
    /// `τ` in events: the sample value times the events per sample.
    pub fn in_events(&self, events_per_sample: f64) -> f64 {
        self.tau * events_per_sample
    }
}

pub fn integrated_time(curve: &AcfCurve, n: usize) -> IntegratedTime {
    integrated_time_with(curve, n, DEFAULT_CUTOFF)
}

/// `τ = 1/2 + Σ_{k=1}^{N_int} (1 - k/n) C(k)` where `N_int` is the first lag
/// after which every `|C(i)|` stays below `threshold`.
pub fn integrated_time_with(curve: &AcfCurve, n: usize, threshold: f64) -> IntegratedTime {
    let k_max = curve.max_lag();
    let last_big = (0..=k_max).rev().find(|&k| curve.values[k].abs() > threshold);
    let (cutoff, truncated) = match last_big {
        None => (0, false),
        Some(j) if j >= k_max => (k_max, true),
        Some(j) => (j + 1, false),
    };
    let nf = n as f64;
    let tau = 0.5
        + (1..=cutoff)
            .map(|k| (1.0 - k as f64 / nf) * curve.values[k])
            .sum::<f64>();
    IntegratedTime { tau, cutoff, truncated }
}

/// Smallest lag `M` with `M ≥ c τ(M)`, where `τ(M)` sums the curve up to `M`.
/// Returns the full range when no such lag exists.
pub fn auto_window(curve: &AcfCurve, c: f64) -> usize {
    let nf = curve.n as f64;
    let mut tau = 0.5;
    for k in 1..=curve.max_lag() {
        tau += (1.0 - k as f64 / nf) * curve.values[k];
        if k as f64 >= c * tau {
            return k;
        }
    }
    curve.max_lag()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub ess: f64,
    pub per_event: f64,
}

pub fn ess(n: usize, tau: f64, events_total: u64) -> Ess {
    let ess = n as f64 / (2.0 * tau);
    Ess {
        ess,
        per_event: ess / events_total as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub dim: f64,
    pub tau: f64,
    /// Standard error of `tau`; zero means unweighted.
    pub tau_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub exponent: f64,
    pub exponent_err: f64,
    /// `ln τ - (ln A + z ln d)` per point.
    pub residuals: Vec<f64>,
}

/// Fits `τ = A d^z` by weighted least squares on `ln τ = ln A + z ln d`.
/// Standard errors are scaled by the reduced chi-square.
pub fn fit_scaling(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points for a scaling fit, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.tau > 0.0 && p.dim > 0.0) || !p.tau.is_finite() || !p.dim.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scaling points need positive finite values, got d = {}, tau = {}",
                p.dim, p.tau
            )));
        }
        if !(p.tau_err >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative tau error {}", p.tau_err)));
        }
    }
    let weighted = points.iter().all(|p| p.tau_err > 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| if weighted { (p.tau / p.tau_err).powi(2) } else { 1.0 })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.dim.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.tau.ln()).collect();
    let sw: f64 = w.iter().sum();
    let xbar = w.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = w.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("scaling fit needs at least two distinct dimensions".into()));
    }
    let sxy: f64 = w
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    let z = sxy / sxx;
    let ln_a = ybar - z * xbar;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - ln_a - z * x).collect();
    let chi2: f64 = w.iter().zip(&residuals).map(|(w, r)| w * r * r).sum();
    let s2 = chi2 / (points.len() - 2) as f64;
    let z_err = (s2 / sxx).sqrt();
    let ln_a_err = (s2 * (1.0 / sw + xbar * xbar / sxx)).sqrt();
    let amplitude = ln_a.exp();
    Ok(ScalingFit {
        points: points.to_vec(),
        amplitude,
        amplitude_err: amplitude * ln_a_err,
        exponent: z,
        exponent_err: z_err,
        residuals,
    })
}

/// Index of the closest mean; ties go to the lowest index.
pub fn nearest_mean(x: &[f64], means: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, m) in means.iter().enumerate() {
        let d: f64 = x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Fraction of samples assigned to each mean by nearest-mean classification.
pub fn mixture_occupancy(samples: &SampleSeries, means: &[Vec<f64>]) -> Result<Vec<f64>> {
    occupancy(samples.rows(), means)
}

pub fn occupancy<'a, I: IntoIterator<Item = &'a [f64]>>(points: I, means: &[Vec<f64>]) -> Result<Vec<f64>> {
    if means.is_empty() {
        return Err(Error::InvalidArgument("no means given".into()));
    }
    let mut counts = vec![0u64; means.len()];
    let mut total = 0u64;
    for x in points {
        counts[nearest_mean(x, means)] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidArgument("no samples to classify".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}
