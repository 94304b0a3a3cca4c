use crate::error::{invalid, Result};
use crate::linalg::{dot, norm_sq, softplus};

/// Default prior variance `ζ²` of the Gaussian prior on the coefficients.
pub const DEFAULT_PRIOR_VARIANCE: f64 = 1000.0;

/// Dense binary-classification data set, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticDataset {
    covariates: Vec<f64>,
    labels: Vec<u8>,
    rows: usize,
    dim: usize,
    prior_variance: f64,
}

impl LogisticDataset {
    pub fn new(covariates: Vec<f64>, labels: Vec<u8>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dataset needs at least one covariate"));
        }
        if covariates.len() != labels.len() * dim {
            return Err(invalid(format!(
                "covariate buffer has {} entries, expected {} rows x {dim}",
                covariates.len(),
                labels.len()
            )));
        }
        if let Some(pos) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite covariate in row {}", pos / dim)));
        }
        if let Some(pos) = labels.iter().position(|l| *l > 1) {
            return Err(invalid(format!("label in row {pos} is not 0 or 1")));
        }
        Ok(Self {
            rows: labels.len(),
            covariates,
            labels,
            dim,
            prior_variance: DEFAULT_PRIOR_VARIANCE,
        })
    }

    pub fn with_prior_variance(mut self, zeta_sq: f64) -> Result<Self> {
        if !(zeta_sq.is_finite() && zeta_sq > 0.0) {
            return Err(invalid("prior variance must be positive"));
        }
        self.prior_variance = zeta_sq;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Bayesian logistic regression posterior,
/// `U(θ) = Σ_i [ln(1 + e^{<x_i,θ>}) - y_i <x_i,θ>] + ||θ||² / (2ζ²)`.
///
/// Factor 0 is the prior; factor `i >= 1` is datum `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticPosterior {
    data: LogisticDataset,
}

impl LogisticPosterior {
    pub fn new(data: LogisticDataset) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &LogisticDataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    pub fn factor_count(&self) -> usize {
        self.data.rows + 1
    }

    pub fn prior_potential(&self, theta: &[f64]) -> f64 {
        0.5 * norm_sq(theta) / self.data.prior_variance
    }

    /// `U_i` for one datum given `a = <x_i, θ>`.
    #[inline]
    pub fn datum_potential_at(a: f64, label: u8) -> f64 {
        if label == 1 {
            softplus(-a)
        } else {
            softplus(a)
        }
    }

    pub fn datum_potential(&self, i: usize, theta: &[f64]) -> f64 {
        Self::datum_potential_at(dot(self.data.row(i), theta), self.data.labels[i])
    }

    /// Negative log-likelihood, the data part of `U`.
    pub fn nll(&self, theta: &[f64]) -> f64 {
        (0..self.data.rows)
            .map(|i| self.datum_potential(i, theta))
            .sum()
    }

    pub fn potential(&self, theta: &[f64]) -> f64 {
        self.nll(theta) + self.prior_potential(theta)
    }

    pub fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        let zeta_sq = self.data.prior_variance;
        for (o, t) in out.iter_mut().zip(theta) {
            *o = t / zeta_sq;
        }
        for i in 0..self.data.rows {
            let row = self.data.row(i);
            let w = sigmoid(dot(row, theta)) - self.data.labels[i] as f64;
            for (o, x) in out.iter_mut().zip(row) {
                *o += w * x;
            }
        }
    }

    pub fn factor_potential(&self, k: usize, theta: &[f64]) -> f64 {
        if k == 0 {
            self.prior_potential(theta)
        } else {
            self.datum_potential(k - 1, theta)
        }
    }

    pub fn factor_gradient(&self, k: usize, theta: &[f64], out: &mut [f64]) {
        if k == 0 {
            let zeta_sq = self.data.prior_variance;
            for (o, t) in out.iter_mut().zip(theta) {
                *o = t / zeta_sq;
            }
        } else {
            let i = k - 1;
            let row = self.data.row(i);
            let w = sigmoid(dot(row, theta)) - self.data.labels[i] as f64;
            for (o, x) in out.iter_mut().zip(row) {
                *o = w * x;
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LogisticPosterior {
        let data = LogisticDataset::new(vec![1.0, 0.5, -2.0, 0.3, 0.0, 1.0], vec![1, 0, 1], 2).unwrap();
        LogisticPosterior::new(data)
    }

    #[test]
    fn zero_coefficients_give_ln2_per_datum() {
        let p = tiny();
        for i in 0..3 {
            assert!((p.datum_potential(i, &[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        }
        let mut g = [1.0; 2];
        p.factor_gradient(0, &[0.0, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn single_datum_value() {
        let data = LogisticDataset::new(vec![1.0], vec![1], 1).unwrap();
        let p = LogisticPosterior::new(data);
        let expect = (1.0 + 2f64.exp()).ln() - 2.0;
        assert!((p.datum_potential(0, &[2.0]) - expect).abs() < 1e-14);
        assert!((expect - 0.126928).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LogisticDataset::new(vec![f64::NAN], vec![0], 1).is_err());
        assert!(LogisticDataset::new(vec![1.0], vec![2], 1).is_err());
        assert!(LogisticDataset::new(vec![1.0, 2.0], vec![0], 1).is_err());
    }

    #[test]
    fn sigmoid_tails() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
