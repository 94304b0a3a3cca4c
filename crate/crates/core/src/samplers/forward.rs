use rand::Rng;
use rand_distr::Exp1;

use super::{EventKind, EventRecord, InitialState, PathObserver, RefreshStrategy, RunLimits, RunSummary, Trajectory};
use crate::error::{Error, Result};
use crate::events::{logistic_time_uniform, quadratic_event_time, thinned_event_time, EventDraw, QuadraticLineRate};
use crate::geometry::{sample_direction, GradientFrame};
use crate::kernels::{assemble_direction_with, KernelScratch, KernelSpec};
use crate::linalg::{all_finite, axpy, dot, norm_sq};
use crate::model::{DiagonalGaussian, GaussianMixture, LogisticPosterior, TargetModel};

/// Exact recomputation period of the cached logistic margins.
const MARGIN_RESYNC: u64 = 1024;

/// Event-time source for the driver loop.
enum Clock<'a> {
    Gaussian(&'a DiagonalGaussian),
    Mixture(&'a GaussianMixture),
    Logistic(LogisticClock<'a>),
}

/// Keeps `a_i = <x_i, θ>` and `b_i = <x_i, v>` current along the path.
struct LogisticClock<'a> {
    post: &'a LogisticPosterior,
    a: Vec<f64>,
    b: Vec<f64>,
    moves: u64,
}

impl<'a> LogisticClock<'a> {
    fn new(post: &'a LogisticPosterior, x: &[f64], y: &[f64]) -> Self {
        let n = post.data().rows();
        let mut c = Self {
            post,
            a: vec![0.0; n],
            b: vec![0.0; n],
            moves: 0,
        };
        c.resync(x);
        c.turned(y);
        c
    }

    fn resync(&mut self, x: &[f64]) {
        let data = self.post.data();
        for (i, a) in self.a.iter_mut().enumerate() {
            *a = dot(data.row(i), x);
        }
    }

    fn turned(&mut self, y: &[f64]) {
        let data = self.post.data();
        for (i, b) in self.b.iter_mut().enumerate() {
            *b = dot(data.row(i), y);
        }
    }

    fn moved(&mut self, tau: f64, x: &[f64]) {
        self.moves += 1;
        if self.moves % MARGIN_RESYNC == 0 {
            self.resync(x);
        } else {
            axpy(tau, &self.b, &mut self.a);
        }
    }

    fn next<R: Rng + ?Sized>(&self, x: &[f64], y: &[f64], rng: &mut R) -> EventDraw {
        let zeta_sq = self.post.data().prior_variance();
        let yy = norm_sq(y);
        let mut best = EventDraw::never();
        if yy > 0.0 {
            let line = QuadraticLineRate {
                u0: 0.5 * yy / zeta_sq,
                t0: dot(y, x) / yy,
            };
            let e: f64 = rng.sample(Exp1);
            best = quadratic_event_time(line, e).expect("positive U0");
            best.factor = 0;
        }
        let labels = self.post.data().labels();
        for i in 0..self.a.len() {
            let b = self.b[i];
            let label = labels[i];
            let increasing = if label == 1 { b < 0.0 } else { b > 0.0 };
            if !increasing {
                continue;
            }
            let r = rng.random::<f64>();
            let t = logistic_time_uniform(self.a[i], b, label, r);
            if t < best.time {
                best = EventDraw {
                    time: t,
                    factor: i + 1,
                    exp_variate: Some(-(-r).ln_1p()),
                };
            }
        }
        best
    }
}

impl<'a> Clock<'a> {
    fn next<R: Rng + ?Sized>(&self, x: &[f64], y: &[f64], rng: &mut R) -> Result<EventDraw> {
        match self {
            Clock::Gaussian(g) => {
                let (yx, yy) = g.directional_terms(x, y);
                if yy <= 0.0 {
                    return Ok(EventDraw::never());
                }
                let line = QuadraticLineRate {
                    u0: 0.5 * yy,
                    t0: yx / yy,
                };
                let e: f64 = rng.sample(Exp1);
                quadratic_event_time(line, e)
            }
            Clock::Mixture(m) => Ok(thinned_event_time(m, x, y, rng)),
            Clock::Logistic(c) => Ok(c.next(x, y, rng)),
        }
    }

    fn moved(&mut self, tau: f64, x: &[f64]) {
        if let Clock::Logistic(c) = self {
            c.moved(tau, x);
        }
    }

    fn turned(&mut self, y: &[f64]) {
        if let Clock::Logistic(c) = self {
            c.turned(y);
        }
    }

    fn factor_gradient(&self, target: &TargetModel, k: usize, x: &[f64], out: &mut [f64]) {
        match self {
            Clock::Logistic(c) if k > 0 => {
                // ∇U_k from the cached margin
                let i = k - 1;
                let data = c.post.data();
                let w = crate::model::sigmoid(c.a[i]) - data.label(i) as f64;
                for (o, xi) in out.iter_mut().zip(data.row(i)) {
                    *o = w * xi;
                }
            }
            _ => target.factor_gradient(k, x, out),
        }
    }
}

/// Simulates the forward event chain on an unfactorized target and records
/// the whole trajectory.
pub fn run_forward_ec<R: Rng + ?Sized>(
    target: &TargetModel,
    kernel: &KernelSpec,
    refresh: RefreshStrategy,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new();
    run_forward_ec_with(target, kernel, refresh, init, limits, rng, &mut traj)?;
    Ok(traj)
}

pub fn run_forward_ec_with<R: Rng + ?Sized, O: PathObserver>(
    target: &TargetModel,
    kernel: &KernelSpec,
    refresh: RefreshStrategy,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    if let TargetModel::Logistic(_) = target {
        return Err(Error::Unsupported(
            "the logistic posterior has no exact event times for its full potential; use the factorized driver"
                .into(),
        ));
    }
    drive(target, kernel, refresh, init, limits, rng, observer)
}

/// Superposition driver: every factor runs its own clock and the triggering
/// factor's gradient defines the event kernel.
pub fn run_factorized<R: Rng + ?Sized>(
    target: &TargetModel,
    kernel: &KernelSpec,
    refresh: RefreshStrategy,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new();
    run_factorized_with(target, kernel, refresh, init, limits, rng, &mut traj)?;
    Ok(traj)
}

pub fn run_factorized_with<R: Rng + ?Sized, O: PathObserver>(
    target: &TargetModel,
    kernel: &KernelSpec,
    refresh: RefreshStrategy,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    drive(target, kernel, refresh, init, limits, rng, observer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Next {
    Gradient,
    Refresh,
    FlagReset,
    Stop,
}

fn drive<R: Rng + ?Sized, O: PathObserver>(
    target: &TargetModel,
    kernel: &KernelSpec,
    refresh: RefreshStrategy,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    let dim = target.dim();
    kernel.validate(dim)?;
    refresh.validate()?;
    limits.validate()?;
    let law = kernel.law;
    let (mut x, mut y) = init.resolve(dim, law, rng)?;

    let mut clock = match target {
        TargetModel::Gaussian(g) => Clock::Gaussian(g),
        TargetModel::Mixture(m) => Clock::Mixture(m),
        TargetModel::Logistic(l) => Clock::Logistic(LogisticClock::new(l, &x, &y)),
    };
    let flag_kernel = kernel.without_orthogonal();
    let orthogonal_is_identity = kernel.orthogonal.is_identity();

    let mut summary = RunSummary {
        events: 0,
        gradient_events: 0,
        refreshes: 0,
        flag_resets: 0,
        total_time: 0.0,
        final_position: Vec::new(),
        final_direction: Vec::new(),
    };

    let draw_refresh = |rng: &mut R| -> f64 {
        match refresh {
            RefreshStrategy::Poisson { rate } if rate > 0.0 => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            RefreshStrategy::FixedTimeFull { period } => period,
            _ => f64::INFINITY,
        }
    };
    let mut refresh_left = draw_refresh(rng);
    let flag_period = match refresh {
        RefreshStrategy::FixedTimeFlag { period } => period,
        _ => f64::INFINITY,
    };
    let mut flag_resets_done = 0u64;
    let mut next_flag_reset = flag_period;
    // b = 0: the next gradient event uses the full kernel
    let mut flag_armed = true;

    let mut grad = vec![0.0; dim];
    let mut frame = GradientFrame::new(&grad)?;
    let mut y_new = vec![0.0; dim];
    let mut scratch = KernelScratch::new(dim);
    let mut t = 0.0f64;

    loop {
        if limits.max_events.is_some_and(|m| summary.events >= m) {
            break;
        }
        let remaining = limits.horizon - t;
        if remaining <= 0.0 {
            break;
        }
        let draw = clock.next(&x, &y, rng)?;
        if remaining.is_infinite() && draw.time.is_infinite() && refresh_left.is_infinite() {
            return Err(Error::NonFiniteState {
                events: summary.events,
                time: t,
                what: "no further events before an infinite horizon",
            });
        }
        let mut tau = remaining;
        let mut what = Next::Stop;
        if draw.time < tau {
            tau = draw.time;
            what = Next::Gradient;
        }
        if refresh_left < tau {
            tau = refresh_left;
            what = Next::Refresh;
        }
        let to_flag = next_flag_reset - t;
        if to_flag < tau {
            tau = to_flag.max(0.0);
            what = Next::FlagReset;
        }

        observer.on_segment(t, &x, &y, tau);
        axpy(tau, &y, &mut x);
        clock.moved(tau, &x);
        t = match what {
            Next::Stop => limits.horizon,
            Next::FlagReset => next_flag_reset,
            _ => t + tau,
        };
        refresh_left -= tau;

        let record = match what {
            Next::Stop => break,
            Next::Gradient => {
                clock.factor_gradient(target, draw.factor, &x, &mut grad);
                frame.reset(&grad).map_err(|_| Error::NonFiniteState {
                    events: summary.events,
                    time: t,
                    what: "gradient",
                })?;
                let use_full = flag_period.is_infinite() || flag_armed;
                let spec = if use_full { kernel } else { &flag_kernel };
                assemble_direction_with(spec, &frame, &y, &mut y_new, &mut scratch, rng)?;
                std::mem::swap(&mut y, &mut y_new);
                if flag_period.is_finite() {
                    flag_armed = false;
                }
                summary.events += 1;
                summary.gradient_events += 1;
                EventRecord {
                    time: t,
                    kind: EventKind::Gradient,
                    factor: draw.factor,
                    exp_variate: draw.exp_variate,
                    orthogonal_applied: use_full && !orthogonal_is_identity,
                }
            }
            Next::Refresh => {
                sample_direction(law, &mut y, rng);
                refresh_left = draw_refresh(rng);
                summary.events += 1;
                summary.refreshes += 1;
                EventRecord {
                    time: t,
                    kind: EventKind::Refresh,
                    factor: 0,
                    exp_variate: None,
                    orthogonal_applied: false,
                }
            }
            Next::FlagReset => {
                flag_armed = true;
                flag_resets_done += 1;
                next_flag_reset = (flag_resets_done + 1) as f64 * flag_period;
                summary.flag_resets += 1;
                EventRecord {
                    time: t,
                    kind: EventKind::FlagReset,
                    factor: 0,
                    exp_variate: None,
                    orthogonal_applied: false,
                }
            }
        };
        if record.kind != EventKind::FlagReset {
            clock.turned(&y);
        }
        if !(all_finite(&x) && all_finite(&y) && t.is_finite()) {
            return Err(Error::NonFiniteState {
                events: summary.events,
                time: t,
                what: "position or direction",
            });
        }
        observer.on_event(&record, &x, &y);
    }

    summary.total_time = t;
    summary.final_position = x;
    summary.final_direction = y;
    observer.on_finish(&summary);
    Ok(summary)
}
