//! PDMP trajectory drivers.
//!
//! Drivers stream the path to a [`PathObserver`] so that long runs do not
//! need to keep every segment. [`Trajectory`] is the observer that does.

mod discretize;
mod forward;
mod zigzag;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use discretize::{discretize, events_per_sample, Discretizer, SampleSeries};
pub use forward::{run_factorized, run_factorized_with, run_forward_ec, run_forward_ec_with};
pub use zigzag::{run_zigzag, run_zigzag_with, ZigZagBasis};

use crate::error::{Error, Result};
use crate::geometry::DirectionLaw;
use crate::kernels::{KernelSpec, OrthogonalKernel, OrthogonalVariant, ParallelKernel};
use crate::model::TargetModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefreshStrategy {
    None,
    /// Full refresh at the arrivals of a Poisson process of rate `λ̄`.
    Poisson { rate: f64 },
    /// Full refresh every `period` units of time.
    FixedTimeFull { period: f64 },
    /// The event kernel's orthogonal part is used only at the first gradient
    /// event after each multiple of `period`; otherwise it is the identity.
    FixedTimeFlag { period: f64 },
}

impl RefreshStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::Poisson { rate } if rate >= 0.0 && rate.is_finite() => Ok(()),
            Self::FixedTimeFull { period } | Self::FixedTimeFlag { period }
                if period > 0.0 && !period.is_nan() =>
            {
                Ok(())
            }
            other => Err(Error::InvalidArgument(format!("invalid refresh strategy {other:?}"))),
        }
    }
}

impl fmt::Display for RefreshStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Poisson { rate } => write!(f, "poisson({rate})"),
            Self::FixedTimeFull { period } => write!(f, "full({period})"),
            Self::FixedTimeFlag { period } => write!(f, "flag({period})"),
        }
    }
}

impl FromStr for RefreshStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Self::None);
        }
        let bad = || {
            Error::InvalidArgument(format!(
                "unknown refresh strategy {s:?}; expected none, poisson(rate), full(T) or flag(T)"
            ))
        };
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let arg: f64 = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        let r = match s[..open].trim() {
            "poisson" => Self::Poisson { rate: arg },
            "full" => Self::FixedTimeFull { period: arg },
            "flag" => Self::FixedTimeFlag { period: arg },
            _ => return Err(bad()),
        };
        r.validate()?;
        Ok(r)
    }
}

/// When a run stops: at the time horizon or after `max_events` events,
/// whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    pub horizon: f64,
    pub max_events: Option<u64>,
}

impl RunLimits {
    pub fn time(horizon: f64) -> Self {
        Self {
            horizon,
            max_events: None,
        }
    }

    pub fn events(max_events: u64) -> Self {
        Self {
            horizon: f64::INFINITY,
            max_events: Some(max_events),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon {}", self.horizon)));
        }
        if self.horizon.is_infinite() && self.max_events.is_none() {
            return Err(Error::InvalidArgument("an infinite horizon needs an event limit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialState {
    /// Defaults to the origin.
    pub position: Option<Vec<f64>>,
    /// Defaults to a draw from the direction law.
    pub direction: Option<Vec<f64>>,
}

impl InitialState {
    pub fn at(position: Vec<f64>) -> Self {
        Self {
            position: Some(position),
            direction: None,
        }
    }

    pub(crate) fn resolve<R: Rng + ?Sized>(
        &self,
        dim: usize,
        law: DirectionLaw,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = match &self.position {
            Some(p) if p.len() == dim => p.clone(),
            Some(p) => {
                return Err(Error::InvalidArgument(format!(
                    "initial position has length {}, expected {dim}",
                    p.len()
                )))
            }
            None => vec![0.0; dim],
        };
        let y = match &self.direction {
            Some(v) if v.len() == dim => v.clone(),
            Some(v) => {
                return Err(Error::InvalidArgument(format!(
                    "initial direction has length {}, expected {dim}",
                    v.len()
                )))
            }
            None => {
                let mut v = vec![0.0; dim];
                crate::geometry::sample_direction(law, &mut v, rng);
                v
            }
        };
        if !(crate::linalg::all_finite(&x) && crate::linalg::all_finite(&y)) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok((x, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Gradient,
    Refresh,
    FlagReset,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gradient => "gradient",
            Self::Refresh => "refresh",
            Self::FlagReset => "flag-reset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// Triggering factor (Zig-Zag: flipped coordinate).
    pub factor: usize,
    pub exp_variate: Option<f64>,
    /// Whether a non-identity orthogonal kernel was used at this event.
    pub orthogonal_applied: bool,
}

/// Receives the path as it is generated.
pub trait PathObserver {
    /// A linear piece `x + s y`, `s ∈ [0, duration]`, starting at `start`.
    fn on_segment(&mut self, start: f64, x: &[f64], y: &[f64], duration: f64);

    /// Called after the state has been updated by an event.
    fn on_event(&mut self, _record: &EventRecord, _x: &[f64], _y: &[f64]) {}

    /// Called once with the run's totals.
    fn on_finish(&mut self, _summary: &RunSummary) {}
}

impl PathObserver for () {
    fn on_segment(&mut self, _: f64, _: &[f64], _: &[f64], _: f64) {}
}

impl<A: PathObserver, B: PathObserver> PathObserver for (A, B) {
    fn on_segment(&mut self, start: f64, x: &[f64], y: &[f64], duration: f64) {
        self.0.on_segment(start, x, y, duration);
        self.1.on_segment(start, x, y, duration);
    }

    fn on_event(&mut self, record: &EventRecord, x: &[f64], y: &[f64]) {
        self.0.on_event(record, x, y);
        self.1.on_event(record, x, y);
    }

    fn on_finish(&mut self, summary: &RunSummary) {
        self.0.on_finish(summary);
        self.1.on_finish(summary);
    }
}

impl<O: PathObserver + ?Sized> PathObserver for &mut O {
    fn on_segment(&mut self, start: f64, x: &[f64], y: &[f64], duration: f64) {
        (**self).on_segment(start, x, y, duration);
    }

    fn on_event(&mut self, record: &EventRecord, x: &[f64], y: &[f64]) {
        (**self).on_event(record, x, y);
    }

    fn on_finish(&mut self, summary: &RunSummary) {
        (**self).on_finish(summary);
    }
}

/// Totals for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Gradient events plus refreshes.
    pub events: u64,
    pub gradient_events: u64,
    pub refreshes: u64,
    pub flag_resets: u64,
    pub total_time: f64,
    pub final_position: Vec<f64>,
    pub final_direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub position: Vec<f64>,
    pub direction: Vec<f64>,
    pub duration: f64,
    /// Event that ends the segment; `None` when the run stopped.
    pub end_event: Option<EventKind>,
    pub factor: Option<usize>,
}

/// Fully recorded sample path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub events: Vec<EventRecord>,
    pub total_events: u64,
    pub total_time: f64,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, |s| s.position.len())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub(crate) fn finish(&mut self, summary: &RunSummary) {
        self.total_events = summary.events;
        self.total_time = summary.total_time;
    }
}

impl PathObserver for Trajectory {
    fn on_segment(&mut self, start: f64, x: &[f64], y: &[f64], duration: f64) {
        self.segments.push(Segment {
            start,
            position: x.to_vec(),
            direction: y.to_vec(),
            duration,
            end_event: None,
            factor: None,
        });
    }

    fn on_event(&mut self, record: &EventRecord, _x: &[f64], _y: &[f64]) {
        if let Some(last) = self.segments.last_mut() {
            if last.end_event.is_none() && (last.start + last.duration - record.time).abs() <= 1e-9 * (1.0 + record.time) {
                last.end_event = Some(record.kind);
                last.factor = Some(record.factor);
            }
        }
        self.events.push(*record);
    }

    fn on_finish(&mut self, summary: &RunSummary) {
        self.finish(summary);
    }
}

/// Counts events without storing anything.
#[derive(Debug, Clone, Default)]
pub struct EventCounter {
    pub gradient: u64,
    pub refresh: u64,
    pub flag_reset: u64,
    pub orthogonal_applied: u64,
}

impl PathObserver for EventCounter {
    fn on_segment(&mut self, _: f64, _: &[f64], _: &[f64], _: f64) {}

    fn on_event(&mut self, record: &EventRecord, _x: &[f64], _y: &[f64]) {
        match record.kind {
            EventKind::Gradient => self.gradient += 1,
            EventKind::Refresh => self.refresh += 1,
            EventKind::FlagReset => self.flag_reset += 1,
        }
        if record.orthogonal_applied {
            self.orthogonal_applied += 1;
        }
    }
}

/// A sampling scheme: a forward event-chain kernel with a refresh rule, or Zig-Zag.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Forward { kernel: KernelSpec, refresh: RefreshStrategy },
    ZigZag { basis: ZigZagBasis },
}

impl Sampler {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Forward { kernel, refresh } => {
                kernel.validate(dim)?;
                refresh.validate()
            }
            Self::ZigZag { .. } => Ok(()),
        }
    }

    pub fn law(&self) -> DirectionLaw {
        match self {
            Self::Forward { kernel, .. } => kernel.law,
            Self::ZigZag { .. } => DirectionLaw::UniformSphere,
        }
    }
}

/// Runs any sampler on any supported target. Factorized targets use the
/// superposition driver.
pub fn run_sampler<R: Rng + ?Sized, O: PathObserver>(
    target: &TargetModel,
    sampler: &Sampler,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    match sampler {
        Sampler::Forward { kernel, refresh } => {
            if target.factor_count() > 1 {
                run_factorized_with(target, kernel, *refresh, init, limits, rng, observer)
            } else {
                run_forward_ec_with(target, kernel, *refresh, init, limits, rng, observer)
            }
        }
        Sampler::ZigZag { basis } => run_zigzag_with(target, *basis, init, limits, rng, observer),
    }
}

/// The comparison schemes used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    ForwardNoRef,
    ForwardAllRef,
    ForwardRef,
    ForwardFullRef,
    BpsFullRef,
    BpsNoRef,
    ZigZag,
    ZigZagRandomBasis,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::ForwardNoRef,
        Preset::ForwardAllRef,
        Preset::ForwardRef,
        Preset::ForwardFullRef,
        Preset::BpsFullRef,
        Preset::BpsNoRef,
        Preset::ZigZag,
        Preset::ZigZagRandomBasis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ForwardNoRef => "forward-no-ref",
            Self::ForwardAllRef => "forward-all-ref",
            Self::ForwardRef => "forward-ref",
            Self::ForwardFullRef => "forward-full-ref",
            Self::BpsFullRef => "bps-full-ref",
            Self::BpsNoRef => "bps-no-ref",
            Self::ZigZag => "zigzag",
            Self::ZigZagRandomBasis => "zigzag-random",
        }
    }

    pub fn names() -> String {
        Self::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", ")
    }

    /// Whether the preset uses the refresh period `T`.
    pub fn uses_period(self) -> bool {
        matches!(self, Self::ForwardRef | Self::ForwardFullRef | Self::BpsFullRef)
    }

    /// Builds the sampler with refresh period `period` (ignored by presets
    /// without periodic refreshment). Zig-Zag's random basis is drawn from
    /// `basis_seed`.
    pub fn sampler(self, period: f64, basis_seed: u64) -> Sampler {
        let law = DirectionLaw::UniformSphere;
        let switch = || OrthogonalKernel::positive(OrthogonalVariant::Switch);
        let forward = |orthogonal, refresh| Sampler::Forward {
            kernel: KernelSpec::new(ParallelKernel::Direct, orthogonal, law),
            refresh,
        };
        match self {
            Self::ForwardNoRef => forward(OrthogonalKernel::identity(), RefreshStrategy::None),
            Self::ForwardAllRef => forward(switch(), RefreshStrategy::None),
            Self::ForwardRef => forward(switch(), RefreshStrategy::FixedTimeFlag { period }),
            Self::ForwardFullRef => forward(OrthogonalKernel::identity(), RefreshStrategy::FixedTimeFull { period }),
            Self::BpsFullRef => Sampler::Forward {
                kernel: KernelSpec::bps(law),
                refresh: RefreshStrategy::FixedTimeFull { period },
            },
            Self::BpsNoRef => Sampler::Forward {
                kernel: KernelSpec::bps(law),
                refresh: RefreshStrategy::None,
            },
            Self::ZigZag => Sampler::ZigZag {
                basis: ZigZagBasis::Canonical,
            },
            Self::ZigZagRandomBasis => Sampler::ZigZag {
                basis: ZigZagBasis::RandomOrthogonal { seed: basis_seed },
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}; valid presets: {}", Self::names())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let e = "forward".parse::<Preset>().unwrap_err().to_string();
        assert!(e.contains("forward-ref") && e.contains("bps-no-ref"));
    }

    #[test]
    fn refresh_strings_round_trip() {
        for s in ["none", "poisson(0.5)", "full(500)", "flag(0.1)"] {
            assert_eq!(s.parse::<RefreshStrategy>().unwrap().to_string(), s);
        }
        assert!("full(-1)".parse::<RefreshStrategy>().is_err());
        assert!("sometimes".parse::<RefreshStrategy>().is_err());
    }

    #[test]
    fn presets_match_their_definitions() {
        let Sampler::Forward { kernel, refresh } = Preset::ForwardRef.sampler(5.0, 0) else {
            panic!()
        };
        assert_eq!(kernel.parallel, ParallelKernel::Direct);
        assert_eq!(kernel.orthogonal, OrthogonalKernel::positive(OrthogonalVariant::Switch));
        assert_eq!(refresh, RefreshStrategy::FixedTimeFlag { period: 5.0 });

        let Sampler::Forward { kernel, refresh } = Preset::BpsFullRef.sampler(5.0, 0) else {
            panic!()
        };
        assert_eq!(kernel, KernelSpec::bps(DirectionLaw::UniformSphere));
        assert_eq!(refresh, RefreshStrategy::FixedTimeFull { period: 5.0 });

        let Sampler::Forward { kernel, refresh } = Preset::ForwardNoRef.sampler(5.0, 0) else {
            panic!()
        };
        assert!(kernel.orthogonal.is_identity());
        assert_eq!(refresh, RefreshStrategy::None);
    }
}
