use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Number of components in the benchmark mixture.
pub const MIXTURE_COMPONENTS: usize = 5;

/// The random ingredients of the benchmark mixture: per-dimension variances,
/// one permutation per component and the two mean offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    pub dim: usize,
    /// `σ_i²`, uniform on [0.5, 3].
    pub base_variances: Vec<f64>,
    /// `κ_j`, one permutation of `0..d` per component.
    pub permutations: Vec<Vec<usize>>,
    pub nu1: f64,
    pub nu2: f64,
    pub means: Vec<Vec<f64>>,
    /// Diagonal of `Σ_j`.
    pub variances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl GaussianMixtureSpec {
    /// Deterministic construction from a seed.
    pub fn build(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("mixture needs d >= 2, got {dim}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_variances: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..=3.0)).collect();
        let permutations: Vec<Vec<usize>> = (0..MIXTURE_COMPONENTS)
            .map(|_| {
                let mut p: Vec<usize> = (0..dim).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        let nu1 = rng.random_range(1.0..=2.0);
        let nu2 = rng.random_range(1.0..=2.0);

        let sd: Vec<f64> = base_variances.iter().map(|v| v.sqrt()).collect();
        let variances: Vec<Vec<f64>> = permutations
            .iter()
            .map(|k| k.iter().map(|&i| base_variances[i]).collect())
            .collect();
        let mut means = vec![vec![0.0; dim]];
        for j in 1..MIXTURE_COMPONENTS {
            let prev = &means[j - 1];
            let step = (0..dim).map(|i| {
                nu1 * sd[permutations[j][i]] + nu2 * sd[permutations[j - 1][i]]
            });
            let next = prev.iter().zip(step).map(|(m, s)| m + s).collect();
            means.push(next);
        }
        Ok(Self {
            dim,
            base_variances,
            permutations,
            nu1,
            nu2,
            means,
            variances,
            weights: vec![1.0 / MIXTURE_COMPONENTS as f64; MIXTURE_COMPONENTS],
        })
    }
}

/// Gaussian mixture target with diagonal components.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    spec: GaussianMixtureSpec,
    precisions: Vec<Vec<f64>>,
    /// `ln w_j - ln det(2π Σ_j) / 2`
    log_norms: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(spec: GaussianMixtureSpec) -> Result<Self> {
        if spec.means.len() != spec.variances.len() || spec.means.len() != spec.weights.len() {
            return Err(invalid("mixture component lists differ in length"));
        }
        if spec.means.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        let dim = spec.dim;
        for (m, v) in spec.means.iter().zip(&spec.variances) {
            if m.len() != dim || v.len() != dim {
                return Err(invalid("mixture component has wrong dimension"));
            }
            if v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(invalid("mixture variances must be positive"));
            }
        }
        let precisions: Vec<Vec<f64>> = spec
            .variances
            .iter()
            .map(|v| v.iter().map(|s| 1.0 / s).collect())
            .collect();
        let log_norms = spec
            .variances
            .iter()
            .zip(&spec.weights)
            .map(|(v, w)| {
                let logdet: f64 = v.iter().map(|s| (2.0 * std::f64::consts::PI * s).ln()).sum();
                w.ln() - 0.5 * logdet
            })
            .collect();
        Ok(Self {
            spec,
            precisions,
            log_norms,
        })
    }

    pub fn benchmark(dim: usize, seed: u64) -> Result<Self> {
        Self::new(GaussianMixtureSpec::build(dim, seed)?)
    }

    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn components(&self) -> usize {
        self.spec.means.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.spec.means
    }

    pub(crate) fn precision(&self, j: usize) -> &[f64] {
        &self.precisions[j]
    }

    fn component_energy(&self, j: usize, x: &[f64]) -> f64 {
        let mu = &self.spec.means[j];
        let p = &self.precisions[j];
        let mut e = 0.0;
        for i in 0..x.len() {
            let r = x[i] - mu[i];
            e += r * r * p[i];
        }
        0.5 * e - self.log_norms[j]
    }

    /// Posterior responsibilities `w_j(x)`, computed with max-subtraction.
    pub fn responsibilities(&self, x: &[f64], out: &mut [f64]) {
        let mut max = f64::NEG_INFINITY;
        for (j, o) in out.iter_mut().enumerate() {
            *o = -self.component_energy(j, x);
            max = max.max(*o);
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        let neg: Vec<f64> = (0..self.components())
            .map(|j| -self.component_energy(j, x))
            .collect();
        let max = neg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = neg.iter().map(|v| (v - max).exp()).sum();
        -(max + s.ln())
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let k = self.components();
        let mut w = [0.0f64; 16];
        let mut heap;
        let w: &mut [f64] = if k <= w.len() {
            &mut w[..k]
        } else {
            heap = vec![0.0; k];
            &mut heap
        };
        self.responsibilities(x, w);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, wj) in w.iter().enumerate() {
            if *wj == 0.0 {
                continue;
            }
            let mu = &self.spec.means[j];
            let p = &self.precisions[j];
            for i in 0..x.len() {
                out[i] += wj * p[i] * (x[i] - mu[i]);
            }
        }
    }

    /// `<y, Σ_j^{-1}(x - μ_j)>` and `<y, Σ_j^{-1} y>` for component `j`.
    pub(crate) fn component_line(&self, j: usize, x: &[f64], y: &[f64]) -> (f64, f64) {
        let mu = &self.spec.means[j];
        let p = &self.precisions[j];
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..x.len() {
            let py = p[i] * y[i];
            a += py * (x[i] - mu[i]);
            b += py * y[i];
        }
        (a, b)
    }

    /// Exact draw: pick a component by weight, then a diagonal Gaussian.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut comp = self.components() - 1;
        for (j, w) in self.spec.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = j;
                break;
            }
        }
        self.spec.means[comp]
            .iter()
            .zip(&self.spec.variances[comp])
            .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}
