//! Adaptive Gauss–Kronrod (7/15) quadrature and a numerical event-time inverter.

use crate::error::{Error, Result};
use crate::events::EventDraw;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(Error::NonFinite("rate"));
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::NonFinite("rate"));
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Bisection depth forced by the event-time oracle. A kink closer to a panel
/// edge than the outermost Kronrod node is invisible to the error estimate;
/// the mass it hides shrinks with the square of the panel width.
const ORACLE_MIN_DEPTH: u32 = 5;

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: f64, depth: u32, min_depth: u32) -> Result<f64> {
    let c = 0.5 * (a + b);
    let (left, el) = gk15(f, a, c)?;
    let (right, er) = gk15(f, c, b)?;
    let sum = left + right;
    let converged = depth >= min_depth && (el + er <= tol || (whole - sum).abs() <= 1e-3 * tol);
    if converged || depth >= MAX_DEPTH || c <= a || c >= b {
        return Ok(sum);
    }
    Ok(adapt(f, a, c, 0.5 * tol, left, depth + 1, min_depth)?
        + adapt(f, c, b, 0.5 * tol, right, depth + 1, min_depth)?)
}

fn integrate_refined<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, min_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = gk15(f, a, b)?;
    if min_depth == 0 && err <= 1e-3 * tol {
        return Ok(whole);
    }
    adapt(f, a, b, tol, whole, 0, min_depth)
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_refined(&f, a, b, tol, 0)
}

/// Solves `∫_0^T rate = e` numerically, returning `+∞` when the integral over
/// `[0, t_max]` stays below `e`.
pub fn oracle_event_time<F: Fn(f64) -> f64>(rate: F, e: f64, t_max: f64) -> Result<EventDraw> {
    if !(e >= 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponential variate {e}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max {t_max}")));
    }
    let draw = |time| EventDraw {
        time,
        factor: 0,
        exp_variate: Some(e),
    };
    if e == 0.0 {
        return Ok(draw(0.0));
    }
    let tol = 1e-14 * e.max(1.0);
    const CHUNKS: usize = 256;
    let h = t_max / CHUNKS as f64;
    let mut acc = 0.0;
    for k in 0..CHUNKS {
        let lo = k as f64 * h;
        let hi = if k + 1 == CHUNKS { t_max } else { lo + h };
        let piece = integrate_refined(&rate, lo, hi, tol, ORACLE_MIN_DEPTH)?;
        if acc + piece < e {
            acc += piece;
            continue;
        }
        let target = e - acc;
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-13 * b.max(1.0) {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if integrate_refined(&rate, lo, m, tol, ORACLE_MIN_DEPTH)? < target {
                a = m;
            } else {
                b = m;
            }
        }
        return Ok(draw(0.5 * (a + b)));
    }
    Ok(draw(f64::INFINITY))
}
