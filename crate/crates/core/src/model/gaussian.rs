use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::events::QuadraticLineRate;

/// Zero-mean Gaussian with diagonal covariance, `U(x) = <x, Σ^{-1} x> / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    variances: Vec<f64>,
    precisions: Vec<f64>,
}

/// Covariance diagonal log-linearly spaced between 1 and 10^6.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropicGaussianSpec {
    pub variances: Vec<f64>,
}

impl AnisotropicGaussianSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("anisotropic Gaussian needs d >= 2, got {dim}")));
        }
        let span = (dim - 1) as f64;
        let variances = (0..dim)
            .map(|i| (6.0 * i as f64 / span * std::f64::consts::LN_10).exp())
            .collect();
        Ok(Self { variances })
    }
}

impl DiagonalGaussian {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(invalid("Gaussian target needs at least one dimension"));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("Gaussian variances must be positive and finite"));
        }
        let precisions = variances.iter().map(|v| 1.0 / v).collect();
        Ok(Self {
            variances,
            precisions,
        })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![1.0; dim])
    }

    pub fn anisotropic(dim: usize) -> Result<Self> {
        Self::new(AnisotropicGaussianSpec::new(dim)?.variances)
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn precisions(&self) -> &[f64] {
        &self.precisions
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.precisions)
            .map(|(xi, p)| xi * xi * p)
            .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), p) in out.iter_mut().zip(x).zip(&self.precisions) {
            *o = xi * p;
        }
    }

    /// Linear event rate `2 U_0 (t + T_0)_+` along `x + t y`.
    pub fn line_rate(&self, x: &[f64], y: &[f64]) -> QuadraticLineRate {
        let mut yy = 0.0;
        let mut yx = 0.0;
        for i in 0..x.len() {
            let py = self.precisions[i] * y[i];
            yy += py * y[i];
            yx += py * x[i];
        }
        let u0 = 0.5 * yy;
        QuadraticLineRate {
            u0,
            t0: yx / yy,
        }
    }

    /// `<y, Σ^{-1} x>` and `<y, Σ^{-1} y>` in one pass.
    pub(crate) fn directional_terms(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        let mut yx = 0.0;
        let mut yy = 0.0;
        for i in 0..x.len() {
            let py = self.precisions[i] * y[i];
            yx += py * x[i];
            yy += py * y[i];
        }
        (yx, yy)
    }

    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.variances
            .iter()
            .map(|v| v.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Mean and variance of `U` under the target (U is half a chi-square).
    pub fn potential_moments(&self) -> (f64, f64) {
        let d = self.dim() as f64;
        (0.5 * d, 0.5 * d)
    }

    /// Mean and variance of `||x||^2` under the target.
    pub fn sqnorm_moments(&self) -> (f64, f64) {
        let mean = self.variances.iter().sum();
        let var = 2.0 * self.variances.iter().map(|v| v * v).sum::<f64>();
        (mean, var)
    }

    pub(crate) fn quadratic_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            s += a[i] * self.precisions[i] * b[i];
        }
        s
    }
}
