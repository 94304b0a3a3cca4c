#![allow(dead_code)]

use forward_ec::geometry::{sample_direction, GradientFrame};
use forward_ec::kernels::{assemble_direction, AngleLaw};
use forward_ec::linalg::dot;
use forward_ec::{DirectionLaw, KernelSpec, OrthogonalKernel, OrthogonalVariant, ParallelKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// One-sample KS p-value against a continuous CDF.
pub fn ks_one_sample(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    ks_p(d, n)
}

/// Two-sample KS p-value.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    ks_p(d, na * nb / (na + nb))
}

/// Running mean and standard error.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tally {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Tally {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    pub fn se(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq / self.n - m * m).max(0.0) / (self.n - 1.0)).sqrt()
    }
}

/// Coordinate monomials of degree one and two.
pub fn test_functions(y: &[f64]) -> [f64; 5] {
    let d = y.len();
    [y[0], y[1], y[0] * y[0], y[0] * y[1], y[d - 1] * y[d - 1]]
}

#[derive(Debug, Clone, Copy)]
pub struct BalanceTerm {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
}

impl BalanceTerm {
    /// Difference in units of the combined standard error.
    pub fn z(&self) -> f64 {
        let se = (self.lhs_se.powi(2) + self.rhs_se.powi(2)).sqrt();
        if se == 0.0 {
            if self.lhs == self.rhs {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.lhs - self.rhs).abs() / se
        }
    }
}

/// Monte Carlo estimates of both sides of the extended balance condition at
/// gradient `grad`: `E[<y, g>_+ f(Q y)]` and `E[<y', g>_- f(y')]` with
/// `y, y' ~ mu_Y` drawn independently.
pub fn balance_check(spec: &KernelSpec, grad: &[f64], draws: usize, seed: u64) -> Vec<BalanceTerm> {
    let dim = grad.len();
    let frame = GradientFrame::new(grad).unwrap();
    let mut rng = rng(seed);
    let mut lhs = [Tally::default(); 5];
    let mut rhs = [Tally::default(); 5];
    let mut y = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    for _ in 0..draws {
        sample_direction(spec.law, &mut y, &mut rng);
        let w = dot(&y, grad).max(0.0);
        if w > 0.0 {
            assemble_direction(spec, &frame, &y, &mut out, &mut rng).unwrap();
            for (t, f) in lhs.iter_mut().zip(test_functions(&out)) {
                t.push(w * f);
            }
        } else {
            for t in lhs.iter_mut() {
                t.push(0.0);
            }
        }

        sample_direction(spec.law, &mut y, &mut rng);
        let w = (-dot(&y, grad)).max(0.0);
        for (t, f) in rhs.iter_mut().zip(test_functions(&y)) {
            t.push(w * f);
        }
    }
    lhs.iter()
        .zip(&rhs)
        .map(|(l, r)| BalanceTerm {
            lhs: l.mean(),
            lhs_se: l.se(),
            rhs: r.mean(),
            rhs_se: r.se(),
        })
        .collect()
}

/// Gradient vectors with norms spread over a few orders of magnitude.
pub fn random_gradients(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let s = 10f64.powi(i as i32 - 1);
            (0..dim).map(|_| s * (r.random::<f64>() * 4.0 - 2.0)).collect()
        })
        .collect()
}

fn orthogonal_kernels(law: DirectionLaw) -> Vec<(String, OrthogonalKernel)> {
    let mut variants = vec![
        ("switch".to_string(), OrthogonalVariant::Switch),
        ("perp-switch".to_string(), OrthogonalVariant::PerpSwitch),
        (
            "ran-2".to_string(),
            OrthogonalVariant::RanP {
                p: 2,
                angle: AngleLaw::Uniform,
            },
        ),
        ("full".to_string(), OrthogonalVariant::Full),
        (
            "mix(0.3,switch)".to_string(),
            OrthogonalVariant::Mixture {
                identity_weight: 0.3,
                inner: Box::new(OrthogonalVariant::Switch),
            },
        ),
    ];
    if !law.is_sphere() {
        variants.push(("ar(0.5)".to_string(), OrthogonalVariant::AutoRegressive { rho: 0.5 }));
    }
    let mut out = vec![("identity".to_string(), OrthogonalKernel::identity())];
    for (name, v) in variants {
        out.push((format!("{name}/naive"), OrthogonalKernel::naive(v.clone())));
        out.push((format!("{name}/positive"), OrthogonalKernel::positive(v)));
    }
    out
}

pub fn parallel_kernels(law: DirectionLaw) -> Vec<(String, ParallelKernel)> {
    let mut out = vec![
        ("identity".to_string(), ParallelKernel::Identity),
        ("direct".to_string(), ParallelKernel::Direct),
        (
            "mix(0.3,direct)".to_string(),
            ParallelKernel::Mixture {
                identity_weight: 0.3,
                inner: Box::new(ParallelKernel::Direct),
            },
        ),
    ];
    if law.is_sphere() {
        out.push(("imh".to_string(), ParallelKernel::IndependentMetropolis));
        out.push(("rwmh".to_string(), ParallelKernel::RandomWalkMetropolis { half_width: 0.5 }));
    }
    out
}

/// Every parallel x orthogonal combination defined for `law`.
pub fn kernel_variants(law: DirectionLaw) -> Vec<(String, KernelSpec)> {
    let mut out = Vec::new();
    for (pn, p) in parallel_kernels(law) {
        for (on, o) in orthogonal_kernels(law) {
            out.push((format!("{pn} x {on}"), KernelSpec::new(p.clone(), o, law)));
        }
    }
    out
}

pub fn law_name(law: DirectionLaw) -> &'static str {
    if law.is_sphere() {
        "sphere"
    } else {
        "gaussian"
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Largest `|T_closed - T_oracle|` over `n` random quadratic instances.
pub fn quadratic_oracle_max_error(n: usize, seed: u64) -> f64 {
    use forward_ec::events::{oracle_event_time, quadratic_event_time, QuadraticLineRate};
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let line = QuadraticLineRate {
            u0: 10f64.powf(r.random_range(-2.0..1.0)),
            t0: r.random_range(-5.0..5.0),
        };
        let e = -(1.0 - r.random::<f64>()).ln();
        let closed = quadratic_event_time(line, e).unwrap().time;
        let t_max = 2.0 * (line.t0.abs() + (e / line.u0).sqrt() + 1.0);
        let oracle = oracle_event_time(|t| line.rate(t), e, t_max).unwrap().time;
        worst = worst.max((closed - oracle).abs());
    }
    worst
}

/// Directional derivative of one logistic datum term along the line
/// `a + b t`, positive part.
pub fn logistic_rate(a: f64, b: f64, label: u8, t: f64) -> f64 {
    let z = a + b * t;
    let du_dz = if label == 1 { -sigmoid(-z) } else { sigmoid(z) };
    (b * du_dz).max(0.0)
}

/// Largest `|T_closed - T_oracle|` over `n` random logistic instances that
/// have a finite event time.
pub fn logistic_oracle_max_error(n: usize, seed: u64) -> f64 {
    use forward_ec::events::{logistic_event_time, oracle_event_time};
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let dim = r.random_range(1..6);
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let theta: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let label = r.random_range(0..2u8);
        let e = -(1.0 - r.random::<f64>()).ln();
        let closed = logistic_event_time(&x, label, &theta, &v, e).unwrap().time;
        if !closed.is_finite() {
            continue;
        }
        let a = dot(&x, &theta);
        let b = dot(&x, &v);
        if b.abs() < 1e-3 {
            continue;
        }
        let t_max = (e + 2.0 * a.abs() + 50.0) / b.abs();
        let oracle = oracle_event_time(|t| logistic_rate(a, b, label, t), e, t_max).unwrap().time;
        worst = worst.max((closed - oracle).abs());
        done += 1;
    }
    worst
}

/// `C(k)` by the defining double loop.
pub fn acf_bruteforce(h: &[f64], max_lag: usize, mean: f64, variance: f64) -> Vec<f64> {
    let n = h.len();
    (0..=max_lag)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n - k {
                s += h[i] * h[i + k] - mean * mean;
            }
            s / ((n - k) as f64 * variance)
        })
        .collect()
}

/// AR(1) series `h_i = m + phi (h_{i-1} - m) + s e_i`.
pub fn ar1(n: usize, phi: f64, m: f64, seed: u64) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let mut r = rng(seed);
    let s = (1.0 - phi * phi).sqrt();
    let mut x = r.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|_| {
            x = phi * x + s * r.sample::<f64, _>(StandardNormal);
            m + x
        })
        .collect()
}

/// Largest `|ΔC|` between the direct and FFT estimators and the double loop,
/// with empirical and known moments.
pub fn acf_oracle_max_error(seed: u64) -> (f64, f64) {
    use forward_ec::diagnostics::{acf_with, AcfMethod};
    use forward_ec::Moments;
    let mut worst_direct: f64 = 0.0;
    let mut worst_fft: f64 = 0.0;
    for (case, (n, k, phi, m)) in [(200, 20, 0.5, 0.0), (1000, 100, 0.9, 3.0), (4096, 300, 0.2, -1.0), (333, 332, 0.7, 0.5)]
        .into_iter()
        .enumerate()
    {
        let h = ar1(n, phi, m, seed + case as u64);
        let mean = h.iter().sum::<f64>() / n as f64;
        let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        for (moments, (mu, s2)) in [
            (Moments::Empirical, (mean, var)),
            (Moments::Known { mean: m, variance: 1.0 }, (m, 1.0)),
        ] {
            let oracle = acf_bruteforce(&h, k, mu, s2);
            let d = acf_with(&h, k, moments, AcfMethod::Direct).unwrap();
            let f = acf_with(&h, k, moments, AcfMethod::Fft).unwrap();
            for j in 0..=k {
                worst_direct = worst_direct.max((d.values[j] - oracle[j]).abs());
                worst_fft = worst_fft.max((f.values[j] - oracle[j]).abs());
            }
        }
    }
    (worst_direct, worst_fft)
}

/// Recovery error `(|Δz|, |ΔA|/A)` of the scaling fit on exact power laws.
pub fn planted_fit_error() -> (f64, f64) {
    use forward_ec::diagnostics::fit_scaling;
    use forward_ec::ScalingPoint;
    let mut worst = (0.0f64, 0.0f64);
    for (a, z) in [(0.5, 1.0), (3.0, -0.13), (120.0, 0.53), (1e-3, 2.0)] {
        for weighted in [false, true] {
            let pts: Vec<ScalingPoint> = [25.0, 100.0, 400.0, 1600.0]
                .iter()
                .map(|d: &f64| {
                    let tau = a * d.powf(z);
                    ScalingPoint {
                        dim: *d,
                        tau,
                        tau_err: if weighted { 0.05 * tau } else { 0.0 },
                    }
                })
                .collect();
            let fit = fit_scaling(&pts).unwrap();
            worst.0 = worst.0.max((fit.exponent - z).abs());
            worst.1 = worst.1.max((fit.amplitude - a).abs() / a);
        }
    }
    worst
}

/// Largest relative violation of the ESS identities.
pub fn ess_identity_error() -> f64 {
    use forward_ec::diagnostics::ess;
    let mut worst: f64 = 0.0;
    for (n, tau, nd) in [(1000usize, 0.5, 1.0), (20_000, 37.2, 54.6), (10_000_000, 1234.5, 12.9)] {
        let events = (n as f64 * nd).round() as u64;
        let e = ess(n, tau, events);
        let tau_events = tau * events as f64 / n as f64;
        let checks = [
            (e.ess, n as f64 / (2.0 * tau)),
            (e.per_event * events as f64, e.ess),
            (e.per_event, 1.0 / (2.0 * tau_events)),
        ];
        for (got, want) in checks {
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    worst
}
