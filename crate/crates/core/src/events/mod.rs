//! Event-time generation for the PDMP drivers.

mod quadrature;

pub use quadrature::{integrate, oracle_event_time};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Result};
use crate::linalg::{dot, softplus};
use crate::model::GaussianMixture;

/// Time to the next event along the current segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventDraw {
    /// Elapsed time, possibly `+∞`.
    pub time: f64,
    /// Triggering factor, 0 for unfactorized targets.
    pub factor: usize,
    /// Exponential variate consumed by the winning clock. `None` for thinning.
    pub exp_variate: Option<f64>,
}

impl EventDraw {
    pub fn never() -> Self {
        Self {
            time: f64::INFINITY,
            factor: 0,
            exp_variate: None,
        }
    }
}

/// Rate `2 U_0 (t + T_0)_+` of a quadratic potential along `x + t y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticLineRate {
    pub u0: f64,
    pub t0: f64,
}

impl QuadraticLineRate {
    pub fn rate(&self, t: f64) -> f64 {
        (2.0 * self.u0 * (t + self.t0)).max(0.0)
    }
}

/// Closed-form inversion of `∫_0^T 2U_0 (t + T_0)_+ dt = e`.
pub fn quadratic_event_time(line: QuadraticLineRate, e: f64) -> Result<EventDraw> {
    if !(line.u0 > 0.0) || !line.t0.is_finite() {
        return Err(invalid(format!("quadratic line needs U0 > 0, got {:?}", line)));
    }
    if !(e >= 0.0) {
        return Err(invalid(format!("exponential variate {e}")));
    }
    let r = e / line.u0;
    let time = if line.t0 >= 0.0 {
        // -T0 + sqrt(r + T0²) without cancellation
        r / (line.t0 + (r + line.t0 * line.t0).sqrt())
    } else {
        -line.t0 + r.sqrt()
    };
    Ok(EventDraw {
        time,
        factor: 0,
        exp_variate: Some(e),
    })
}

/// First time `∫_0^T (a + b t)_+ dt = e`, for any sign of `b`.
#[inline]
pub fn linear_rate_event_time(a: f64, b: f64, e: f64) -> f64 {
    if b > 0.0 {
        if a >= 0.0 {
            2.0 * e / (a + (a * a + 2.0 * b * e).sqrt())
        } else {
            -a / b + (2.0 * e / b).sqrt()
        }
    } else if b == 0.0 {
        if a > 0.0 {
            e / a
        } else {
            f64::INFINITY
        }
    } else {
        if a <= 0.0 {
            return f64::INFINITY;
        }
        let disc = a * a + 2.0 * b * e;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            2.0 * e / (a + disc.sqrt())
        }
    }
}

/// Event time of a logistic datum term along `θ + t v`, given
/// `a = <x_i, θ>` and `b = <x_i, v>`.
#[inline]
pub fn logistic_time_ab(a: f64, b: f64, label: u8, e: f64) -> f64 {
    let increasing = if label == 1 { b < 0.0 } else { b > 0.0 };
    if !increasing {
        return f64::INFINITY;
    }
    if e == 0.0 {
        return 0.0;
    }
    let c = if label == 1 { a } else { -a };
    // ln(e^E + (e^E - 1) e^c) = E + softplus(ln(1 - e^-E) + c)
    (e + softplus((-(-e).exp_m1()).ln() + c)) / b.abs()
}

/// Same as [`logistic_time_ab`] with `E = -ln(1 - r)` for `r` uniform on
/// [0, 1). Uses `ln(e^E + (e^E - 1) e^c) = ln1p(r (1 + e^c) / (1 - r))`, which
/// needs one exponential and one logarithm.
#[inline]
pub(crate) fn logistic_time_uniform(a: f64, b: f64, label: u8, r: f64) -> f64 {
    let increasing = if label == 1 { b < 0.0 } else { b > 0.0 };
    if !increasing {
        return f64::INFINITY;
    }
    let c = if label == 1 { a } else { -a };
    let s = if c > 700.0 {
        c + (r / (1.0 - r)).ln()
    } else {
        (r * (1.0 + c.exp()) / (1.0 - r)).ln_1p()
    };
    s / b.abs()
}

pub fn logistic_event_time(x_i: &[f64], label: u8, theta: &[f64], v: &[f64], e: f64) -> Result<EventDraw> {
    if !(e >= 0.0) {
        return Err(invalid(format!("exponential variate {e}")));
    }
    if label > 1 {
        return Err(invalid("label must be 0 or 1"));
    }
    Ok(EventDraw {
        time: logistic_time_ab(dot(x_i, theta), dot(x_i, v), label, e),
        factor: 0,
        exp_variate: Some(e),
    })
}

/// Draws one exponential variate per factor and returns the earliest clock.
pub fn superposition_first_arrival<R, F>(factors: usize, mut solve: F, rng: &mut R) -> EventDraw
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64) -> f64,
{
    let mut best = EventDraw::never();
    for k in 0..factors {
        let e: f64 = rng.sample(Exp1);
        let t = solve(k, e);
        if t < best.time {
            best = EventDraw {
                time: t,
                factor: k,
                exp_variate: Some(e),
            };
        }
    }
    best
}

/// Thinning for the Gaussian mixture. The envelope is
/// `Σ_j <y, Σ_j^{-1}(x + t y - μ_j)>_+`, simulated by superposing one linear
/// clock per component and restarting from each rejected candidate.
pub fn thinned_event_time<R: Rng + ?Sized>(
    mixture: &GaussianMixture,
    x: &[f64],
    y: &[f64],
    rng: &mut R,
) -> EventDraw {
    thinned_event_time_counted(mixture, x, y, rng).0
}

/// As [`thinned_event_time`], also returning the number of proposals.
pub fn thinned_event_time_counted<R: Rng + ?Sized>(
    mixture: &GaussianMixture,
    x: &[f64],
    y: &[f64],
    rng: &mut R,
) -> (EventDraw, u64) {
    let k = mixture.components();
    let mut slopes = vec![0.0; k];
    let mut offsets = vec![0.0; k];
    for j in 0..k {
        let (a, b) = mixture.component_line(j, x, y);
        offsets[j] = a;
        slopes[j] = b;
    }
    if slopes.iter().all(|b| *b <= 0.0) {
        return (EventDraw::never(), 0);
    }
    let d = x.len();
    let mut pos = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut s = 0.0;
    let mut proposals = 0u64;
    loop {
        let cand = superposition_first_arrival(
            k,
            |j, e| linear_rate_event_time(offsets[j] + slopes[j] * s, slopes[j], e),
            rng,
        );
        if !cand.time.is_finite() {
            return (EventDraw::never(), proposals);
        }
        s += cand.time;
        proposals += 1;
        for i in 0..d {
            pos[i] = x[i] + s * y[i];
        }
        mixture.gradient(&pos, &mut grad);
        let lambda = dot(y, &grad).max(0.0);
        let envelope: f64 = (0..k).map(|j| (offsets[j] + slopes[j] * s).max(0.0)).sum();
        let u: f64 = rng.random();
        if envelope > 0.0 && u * envelope < lambda {
            return (
                EventDraw {
                    time: s,
                    factor: 0,
                    exp_variate: None,
                },
                proposals,
            );
        }
    }
}
