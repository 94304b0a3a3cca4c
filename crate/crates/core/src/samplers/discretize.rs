use super::{EventKind, EventRecord, PathObserver, Trajectory};
use crate::error::{Error, Result};

/// Positions at `δ, 2δ, …, nδ`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub delta: f64,
    pub dim: usize,
    pub positions: Vec<f64>,
    /// Events divided by sample count; NaN when the series is empty.
    pub events_per_sample: f64,
    pub total_events: u64,
    pub total_time: f64,
}

impl SampleSeries {
    pub fn n(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.positions.len() / self.dim
        }
    }

    /// True when `δ` exceeded the trajectory length.
    pub fn is_empty(&self) -> bool {
        self.n() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim.max(1))
    }

    /// Scalar observable evaluated at every sample.
    pub fn map<F: FnMut(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.rows().map(f).collect()
    }

    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }
}

pub fn events_per_sample(events: u64, samples: usize) -> f64 {
    if samples == 0 {
        f64::NAN
    } else {
        events as f64 / samples as f64
    }
}

pub fn discretize(traj: &Trajectory, delta: f64) -> Result<SampleSeries> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("cannot discretize an empty trajectory".into()));
    }
    let mut d = Discretizer::new(delta)?;
    for s in &traj.segments {
        d.on_segment(s.start, &s.position, &s.direction, s.duration);
    }
    Ok(d.finish(traj.total_events, traj.total_time))
}

/// Observer that records equally spaced positions while the sampler runs.
#[derive(Debug, Clone)]
pub struct Discretizer {
    delta: f64,
    next: u64,
    dim: usize,
    positions: Vec<f64>,
    events: u64,
}

impl Discretizer {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive and finite, got {delta}")));
        }
        Ok(Self { delta, next: 1, dim: 0, positions: Vec::new(), events: 0 })
    }

    pub fn samples(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.positions.len() / self.dim
        }
    }

    pub fn finish(mut self, total_events: u64, total_time: f64) -> SampleSeries {
        let n = (total_time / self.delta).floor() as usize;
        self.positions.truncate(n * self.dim);
        let n = self.samples();
        SampleSeries {
            delta: self.delta,
            dim: self.dim,
            positions: self.positions,
            events_per_sample: events_per_sample(total_events, n),
            total_events,
            total_time,
        }
    }

    /// Like `finish` but with the events seen through `on_event`.
    pub fn finish_observed(self, total_time: f64) -> SampleSeries {
        let events = self.events;
        self.finish(events, total_time)
    }
}

impl PathObserver for Discretizer {
    fn on_segment(&mut self, start: f64, x: &[f64], y: &[f64], duration: f64) {
        self.dim = x.len();
        let end = start + duration;
        let slack = 1e-12 * end.abs().max(1.0);
        loop {
            let t = self.next as f64 * self.delta;
            if t > end + slack {
                break;
            }
            let s = t - start;
            self.positions.extend(x.iter().zip(y).map(|(xi, yi)| xi + s * yi));
            self.next += 1;
        }
    }

    fn on_event(&mut self, record: &EventRecord, _x: &[f64], _y: &[f64]) {
        if record.kind != EventKind::FlagReset {
            self.events += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::Segment;

    fn single() -> Trajectory {
        Trajectory {
            segments: vec![Segment {
                start: 0.0,
                position: vec![0.0, 0.0],
                direction: vec![1.0, 0.0],
                duration: 2.0,
                end_event: None,
                factor: None,
            }],
            events: Vec::new(),
            total_events: 0,
            total_time: 2.0,
        }
    }

    #[test]
    fn linear_motion_samples() {
        let s = discretize(&single(), 0.5).unwrap();
        assert_eq!(s.n(), 4);
        let want = [0.5, 1.0, 1.5, 2.0];
        for (i, w) in want.iter().enumerate() {
            assert!((s.row(i)[0] - w).abs() < 1e-12);
            assert_eq!(s.row(i)[1], 0.0);
        }
    }

    #[test]
    fn step_longer_than_path_is_empty() {
        let s = discretize(&single(), 3.0).unwrap();
        assert!(s.is_empty());
        assert!(s.events_per_sample.is_nan());
    }

    #[test]
    fn events_per_sample_ratio() {
        assert_eq!(events_per_sample(550, 10), 55.0);
    }

    #[test]
    fn sample_count_is_floor() {
        let mut t = single();
        t.segments[0].duration = 0.3;
        t.total_time = 0.3;
        let s = discretize(&t, 0.1).unwrap();
        assert_eq!(s.n(), (0.3f64 / 0.1).floor() as usize);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(Discretizer::new(0.0).is_err());
        assert!(Discretizer::new(f64::NAN).is_err());
        assert!(discretize(&Trajectory::new(), 1.0).is_err());
    }
}
