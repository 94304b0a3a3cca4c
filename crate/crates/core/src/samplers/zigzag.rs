use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{EventKind, EventRecord, InitialState, PathObserver, RunLimits, RunSummary, Trajectory};
use crate::error::{Error, Result};
use crate::events::linear_rate_event_time;
use crate::geometry::fill_gaussian;
use crate::linalg::{all_finite, axpy, dot, norm, scale};
use crate::model::{DiagonalGaussian, GaussianMixture, TargetModel};

const RESYNC: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZigZagBasis {
    Canonical,
    /// Haar-random orthonormal basis drawn once from `seed`.
    RandomOrthogonal { seed: u64 },
}

impl ZigZagBasis {
    /// Basis vectors as rows.
    pub fn vectors(&self, dim: usize) -> Vec<Vec<f64>> {
        match *self {
            Self::Canonical => (0..dim)
                .map(|k| {
                    let mut e = vec![0.0; dim];
                    e[k] = 1.0;
                    e
                })
                .collect(),
            Self::RandomOrthogonal { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
                while basis.len() < dim {
                    let mut v = vec![0.0; dim];
                    fill_gaussian(&mut v, &mut rng);
                    for _ in 0..2 {
                        for b in &basis {
                            let c = dot(&v, b);
                            axpy(-c, b, &mut v);
                        }
                    }
                    let n = norm(&v);
                    if n < 1e-8 {
                        continue;
                    }
                    scale(1.0 / n, &mut v);
                    basis.push(v);
                }
                basis
            }
        }
    }
}

pub fn run_zigzag<R: Rng + ?Sized>(
    target: &TargetModel,
    basis: ZigZagBasis,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new();
    run_zigzag_with(target, basis, init, limits, rng, &mut traj)?;
    Ok(traj)
}

/// Zig-Zag process: the velocity is `Σ_k θ_k b_k` with `θ_k = ±1`, and the
/// `k`-th sign flips at rate `(θ_k <b_k, ∇U(x)>)_+`.
pub fn run_zigzag_with<R: Rng + ?Sized, O: PathObserver>(
    target: &TargetModel,
    basis: ZigZagBasis,
    init: &InitialState,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    limits.validate()?;
    let dim = target.dim();
    let b = basis.vectors(dim);
    let x = match &init.position {
        Some(p) if p.len() == dim => p.clone(),
        Some(_) => return Err(Error::InvalidArgument("initial position has the wrong length".into())),
        None => vec![0.0; dim],
    };
    let theta: Vec<f64> = match &init.direction {
        Some(v) if v.len() == dim => b
            .iter()
            .map(|bk| if dot(bk, v) < 0.0 { -1.0 } else { 1.0 })
            .collect(),
        Some(_) => return Err(Error::InvalidArgument("initial direction has the wrong length".into())),
        None => (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    let state = State::new(b, theta, x);
    let summary = match target {
        TargetModel::Gaussian(g) => gaussian_loop(g, state, limits, rng, observer)?,
        TargetModel::Mixture(m) => mixture_loop(m, state, limits, rng, observer)?,
        TargetModel::Logistic(_) => {
            return Err(Error::Unsupported(
                "Zig-Zag is implemented for the Gaussian and mixture targets".into(),
            ))
        }
    };
    observer.on_finish(&summary);
    Ok(summary)
}

struct State {
    basis: Vec<Vec<f64>>,
    theta: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    t: f64,
    summary: RunSummary,
}

impl State {
    fn new(basis: Vec<Vec<f64>>, theta: Vec<f64>, x: Vec<f64>) -> Self {
        let dim = x.len();
        let mut v = vec![0.0; dim];
        for (bk, th) in basis.iter().zip(&theta) {
            axpy(*th, bk, &mut v);
        }
        Self {
            basis,
            theta,
            x,
            v,
            t: 0.0,
            summary: RunSummary {
                events: 0,
                gradient_events: 0,
                refreshes: 0,
                flag_resets: 0,
                total_time: 0.0,
                final_position: Vec::new(),
                final_direction: Vec::new(),
            },
        }
    }

    fn done(&self, limits: &RunLimits) -> bool {
        limits.max_events.is_some_and(|m| self.summary.events >= m) || self.t >= limits.horizon
    }

    /// Moves by `tau` (clipped to the horizon); returns false if the horizon was hit.
    fn advance<O: PathObserver>(&mut self, tau: f64, limits: &RunLimits, observer: &mut O) -> bool {
        let remaining = limits.horizon - self.t;
        if tau >= remaining {
            observer.on_segment(self.t, &self.x, &self.v, remaining);
            let v = std::mem::take(&mut self.v);
            axpy(remaining, &v, &mut self.x);
            self.v = v;
            self.t = limits.horizon;
            return false;
        }
        observer.on_segment(self.t, &self.x, &self.v, tau);
        let v = std::mem::take(&mut self.v);
        axpy(tau, &v, &mut self.x);
        self.v = v;
        self.t += tau;
        true
    }

    fn flip<O: PathObserver>(&mut self, k: usize, e: Option<f64>, observer: &mut O) -> Result<()> {
        let old = self.theta[k];
        self.theta[k] = -old;
        axpy(-2.0 * old, &self.basis[k], &mut self.v);
        self.summary.events += 1;
        self.summary.gradient_events += 1;
        if !(all_finite(&self.x) && self.t.is_finite()) {
            return Err(Error::NonFiniteState {
                events: self.summary.events,
                time: self.t,
                what: "position",
            });
        }
        let record = EventRecord {
            time: self.t,
            kind: EventKind::Gradient,
            factor: k,
            exp_variate: e,
            orthogonal_applied: false,
        };
        observer.on_event(&record, &self.x, &self.v);
        Ok(())
    }

    fn finish(mut self) -> RunSummary {
        self.summary.total_time = self.t;
        self.summary.final_position = self.x;
        self.summary.final_direction = self.v;
        self.summary
    }
}

fn gaussian_loop<R: Rng + ?Sized, O: PathObserver>(
    g: &DiagonalGaussian,
    mut state: State,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    let dim = state.x.len();
    // M_jk = <b_j, P b_k>
    let m: Vec<Vec<f64>> = state
        .basis
        .iter()
        .map(|bj| state.basis.iter().map(|bk| g.quadratic_form(bj, bk)).collect())
        .collect();
    let px = |x: &[f64], bk: &[f64]| g.quadratic_form(bk, x);
    let mut alpha: Vec<f64> = state.basis.iter().map(|bk| px(&state.x, bk)).collect();
    let mut beta: Vec<f64> = state.basis.iter().map(|bk| px(&state.v, bk)).collect();

    let mut steps = 0u64;
    while !state.done(&limits) {
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for k in 0..dim {
            let th = state.theta[k];
            let e: f64 = rng.sample(Exp1);
            let t = linear_rate_event_time(th * alpha[k], th * beta[k], e);
            if t < best.0 {
                best = (t, k, e);
            }
        }
        let (tau, k, e) = best;
        if !state.advance(tau, &limits, observer) {
            break;
        }
        axpy(tau, &beta, &mut alpha);
        let old = state.theta[k];
        for (j, bj) in beta.iter_mut().enumerate() {
            *bj -= 2.0 * old * m[j][k];
        }
        state.flip(k, Some(e), observer)?;
        steps += 1;
        if steps % RESYNC == 0 {
            for (a, bk) in alpha.iter_mut().zip(&state.basis) {
                *a = px(&state.x, bk);
            }
            for (b, bk) in beta.iter_mut().zip(&state.basis) {
                *b = px(&state.v, bk);
            }
        }
    }
    Ok(state.finish())
}

fn mixture_loop<R: Rng + ?Sized, O: PathObserver>(
    mix: &GaussianMixture,
    mut state: State,
    limits: RunLimits,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunSummary> {
    let dim = state.x.len();
    let comps = mix.components();
    // offsets[k][j] + s * slopes[k][j] = θ_k <b_k, Σ_j^{-1}(x + s v - μ_j)>
    let mut offsets = vec![vec![0.0; comps]; dim];
    let mut slopes = vec![vec![0.0; comps]; dim];
    let mut pos = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut resid = vec![0.0; dim];

    while !state.done(&limits) {
        for j in 0..comps {
            let mu = &mix.means()[j];
            let pj = mix.precision(j);
            for i in 0..dim {
                resid[i] = pj[i] * (state.x[i] - mu[i]);
            }
            let pv: Vec<f64> = (0..dim).map(|i| pj[i] * state.v[i]).collect();
            for k in 0..dim {
                let th = state.theta[k];
                offsets[k][j] = th * dot(&state.basis[k], &resid);
                slopes[k][j] = th * dot(&state.basis[k], &pv);
            }
        }
        // thinning from the current point
        let mut s = 0.0;
        let (tau, flip) = loop {
            let mut best = (f64::INFINITY, 0usize);
            for k in 0..dim {
                for j in 0..comps {
                    let e: f64 = rng.sample(Exp1);
                    let t = linear_rate_event_time(offsets[k][j] + s * slopes[k][j], slopes[k][j], e);
                    if t < best.0 {
                        best = (t, k);
                    }
                }
            }
            if !best.0.is_finite() {
                break (f64::INFINITY, 0);
            }
            s += best.0;
            if s >= limits.horizon - state.t {
                break (s, usize::MAX);
            }
            let k = best.1;
            for i in 0..dim {
                pos[i] = state.x[i] + s * state.v[i];
            }
            mix.gradient(&pos, &mut grad);
            let lambda = (state.theta[k] * dot(&state.basis[k], &grad)).max(0.0);
            let envelope: f64 = (0..comps).map(|j| (offsets[k][j] + s * slopes[k][j]).max(0.0)).sum();
            if envelope > 0.0 && rng.random::<f64>() * envelope < lambda {
                break (s, k);
            }
        };
        if !state.advance(tau, &limits, observer) || flip == usize::MAX {
            break;
        }
        state.flip(flip, None, observer)?;
    }
    Ok(state.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_basis_is_orthonormal_and_reproducible() {
        let b = ZigZagBasis::RandomOrthogonal { seed: 4 }.vectors(6);
        let c = ZigZagBasis::RandomOrthogonal { seed: 4 }.vectors(6);
        assert_eq!(b, c);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&b[i], &b[j]) - want).abs() < 1e-12);
            }
        }
    }
}
