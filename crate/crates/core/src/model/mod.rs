//! Target distributions `π ∝ exp(-U)`.

mod dataset;
mod gaussian;
mod logistic;
mod mixture;

pub use dataset::{load_uci_csv, parse_delimited, CsvOptions, LabelColumn};
pub use gaussian::{AnisotropicGaussianSpec, DiagonalGaussian};
pub use logistic::{LogisticDataset, LogisticPosterior, DEFAULT_PRIOR_VARIANCE};
pub use mixture::{GaussianMixture, GaussianMixtureSpec, MIXTURE_COMPONENTS};

pub(crate) use logistic::sigmoid;

/// How event times along a line can be generated for a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capability {
    ExactQuadratic,
    ExactLogistic,
    ThinningRequired,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetModel {
    Gaussian(DiagonalGaussian),
    Mixture(GaussianMixture),
    Logistic(LogisticPosterior),
}

impl TargetModel {
    pub fn anisotropic_gaussian(d: usize) -> crate::Result<Self> {
        Ok(Self::Gaussian(DiagonalGaussian::anisotropic(d)?))
    }

    pub fn standard_gaussian(d: usize) -> crate::Result<Self> {
        Ok(Self::Gaussian(DiagonalGaussian::standard(d)?))
    }

    pub fn gaussian_mixture(d: usize, seed: u64) -> crate::Result<Self> {
        Ok(Self::Mixture(GaussianMixture::benchmark(d, seed)?))
    }

    pub fn logistic(data: LogisticDataset) -> Self {
        Self::Logistic(LogisticPosterior::new(data))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.dim(),
            Self::Mixture(m) => m.dim(),
            Self::Logistic(l) => l.dim(),
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        match self {
            Self::Gaussian(g) => g.potential(x),
            Self::Mixture(m) => m.potential(x),
            Self::Logistic(l) => l.potential(x),
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Gaussian(g) => g.gradient(x, out),
            Self::Mixture(m) => m.gradient(x, out),
            Self::Logistic(l) => l.gradient(x, out),
        }
    }

    /// Capability of the whole potential.
    pub fn capability(&self) -> Capability {
        match self {
            Self::Gaussian(_) => Capability::ExactQuadratic,
            Self::Mixture(_) => Capability::ThinningRequired,
            Self::Logistic(_) => Capability::ExactLogistic,
        }
    }

    /// Number of factors `U_i`; unfactorized targets have one.
    pub fn factor_count(&self) -> usize {
        match self {
            Self::Logistic(l) => l.factor_count(),
            _ => 1,
        }
    }

    pub fn factor_capability(&self, k: usize) -> Capability {
        match self {
            Self::Logistic(_) if k == 0 => Capability::ExactQuadratic,
            _ => self.capability(),
        }
    }

    pub fn factor_potential(&self, k: usize, x: &[f64]) -> f64 {
        match self {
            Self::Logistic(l) => l.factor_potential(k, x),
            _ => {
                assert_eq!(k, 0, "unfactorized target has a single factor");
                self.potential(x)
            }
        }
    }

    pub fn factor_gradient(&self, k: usize, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Logistic(l) => l.factor_gradient(k, x, out),
            _ => {
                assert_eq!(k, 0, "unfactorized target has a single factor");
                self.gradient(x, out)
            }
        }
    }
}
