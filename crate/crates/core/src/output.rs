//! CSV writers. Reals use 17 significant digits; metadata goes in leading
//! `# key = value` lines.

use std::io::{self, Write};

use crate::diagnostics::{AcfCurve, ScalingFit};
use crate::experiments::{Estimate, ObservableReport};
use crate::samplers::{SampleSeries, Trajectory};

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_metadata<W: Write>(w: &mut W, meta: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

fn header<W: Write>(w: &mut W, fixed: &[&str], prefix: &str, dim: usize, rest: &[&str]) -> io::Result<()> {
    let mut cols: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    cols.extend((1..=dim).map(|i| format!("{prefix}{i}")));
    cols.extend(rest.iter().map(|s| s.to_string()));
    writeln!(w, "{}", cols.join(","))
}

/// Columns `s, duration, x_1..x_d, y_1..y_d, event_kind, factor`; the event
/// columns describe the event that ends the segment.
pub fn write_segments<W: Write>(w: &mut W, traj: &Trajectory, meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    let d = traj.dim();
    let mut cols = vec!["s".to_string(), "duration".to_string()];
    cols.extend((1..=d).map(|i| format!("x_{i}")));
    cols.extend((1..=d).map(|i| format!("y_{i}")));
    cols.push("event_kind".into());
    cols.push("factor".into());
    writeln!(w, "{}", cols.join(","))?;
    for s in &traj.segments {
        let mut row = vec![real(s.start), real(s.duration)];
        row.extend(s.position.iter().map(|v| real(*v)));
        row.extend(s.direction.iter().map(|v| real(*v)));
        row.push(s.end_event.map_or("none", |k| k.as_str()).to_string());
        row.push(s.factor.map_or(String::new(), |f| f.to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `index, t, x_1..x_d`; sample `i` is taken at `t = (i + 1) δ`.
pub fn write_samples<W: Write>(w: &mut W, samples: &SampleSeries, meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    header(w, &["index", "t"], "x_", samples.dim, &[])?;
    for (i, r) in samples.rows().enumerate() {
        let mut row = vec![i.to_string(), real((i + 1) as f64 * samples.delta)];
        row.extend(r.iter().map(|v| real(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `lag_samples, lag_events, C`.
pub fn write_acf<W: Write>(w: &mut W, curve: &AcfCurve, meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "lag_samples,lag_events,C")?;
    for (k, c) in curve.values.iter().enumerate() {
        writeln!(w, "{k},{},{}", real(curve.lag_events(k)), real(*c))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub observable: String,
    pub estimate: Estimate,
    pub events_per_sample: f64,
}

impl SummaryRow {
    pub fn from_report(scheme: &str, report: &ObservableReport) -> Self {
        Self {
            scheme: scheme.to_string(),
            observable: report.observable.name().to_string(),
            estimate: report.pooled,
            events_per_sample: report.events_per_sample,
        }
    }
}

/// Columns `scheme, observable, tau_samples, tau_events, ess, ess_per_event,
/// n_delta, truncated`.
pub fn write_summary<W: Write>(w: &mut W, rows: &[SummaryRow], meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "scheme,observable,tau_samples,tau_events,ess,ess_per_event,n_delta,truncated")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            r.observable,
            real(e.tau_samples),
            real(e.tau_events),
            real(e.ess),
            real(e.ess_per_event),
            real(r.events_per_sample),
            e.truncated
        )?;
    }
    Ok(())
}

/// Per-replica estimator values: columns `scheme, observable, replica,
/// tau_samples, tau_events, ess, ess_per_event`.
pub fn write_replica_estimates<W: Write>(
    w: &mut W,
    rows: &[(String, ObservableReport)],
    meta: &[(&str, String)],
) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "scheme,observable,replica,tau_samples,tau_events,ess,ess_per_event")?;
    for (scheme, report) in rows {
        for (i, e) in report.per_replica.iter().enumerate() {
            writeln!(
                w,
                "{scheme},{},{i},{},{},{},{}",
                report.observable,
                real(e.tau_samples),
                real(e.tau_events),
                real(e.ess),
                real(e.ess_per_event)
            )?;
        }
    }
    Ok(())
}

/// Columns `d, tau, tau_err`, with the fitted `A`, `z` and errors as metadata.
pub fn write_scaling<W: Write>(w: &mut W, fit: &ScalingFit, meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    write_metadata(
        w,
        &[
            ("A", real(fit.amplitude)),
            ("A_err", real(fit.amplitude_err)),
            ("z", real(fit.exponent)),
            ("z_err", real(fit.exponent_err)),
        ],
    )?;
    writeln!(w, "d,tau,tau_err,residual")?;
    for (p, r) in fit.points.iter().zip(&fit.residuals) {
        writeln!(w, "{},{},{},{}", p.dim, real(p.tau), real(p.tau_err), real(*r))?;
    }
    Ok(())
}

/// One row per replica: `replica, p_1..p_K`.
pub fn write_occupancy<W: Write>(w: &mut W, rows: &[Vec<f64>], meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    let k = rows.first().map_or(0, Vec::len);
    header(w, &["replica"], "p_", k, &[])?;
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.iter().map(|v| real(*v)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `lo, hi, count`.
pub fn write_histogram<W: Write>(w: &mut W, lo: f64, hi: f64, counts: &[u64], meta: &[(&str, String)]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "lo,hi,count")?;
    let width = (hi - lo) / counts.len() as f64;
    for (b, c) in counts.iter().enumerate() {
        let a = lo + b as f64 * width;
        writeln!(w, "{},{},{c}", real(a), real(a + width))?;
    }
    Ok(())
}
