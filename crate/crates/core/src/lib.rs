//! Forward event-chain Monte Carlo: piecewise-deterministic samplers whose
//! direction updates are split into a part along the gradient and a part in
//! its orthogonal complement.
//!
//! ```
//! use forward_ec::{run_sampler, Discretizer, InitialState, Preset, RunLimits, TargetModel};
//! use rand::SeedableRng;
//!
//! let target = TargetModel::standard_gaussian(3).unwrap();
//! let sampler = Preset::ForwardRef.sampler(2.0, 0);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let mut disc = Discretizer::new(0.5).unwrap();
//! let run = run_sampler(&target, &sampler, &InitialState::default(), RunLimits::events(1000), &mut rng, &mut disc)
//!     .unwrap();
//! let samples = disc.finish(run.events, run.total_time);
//! assert_eq!(samples.n(), (run.total_time / 0.5).floor() as usize);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod events;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod output;
pub mod samplers;

pub use diagnostics::{AcfCurve, IntegratedTime, Moments, ScalingFit, ScalingPoint};
pub use error::{Error, Result};
pub use events::EventDraw;
pub use experiments::{Observable, ReplicaPlan};
pub use geometry::{DirectionLaw, GradientFrame};
pub use kernels::{KernelSpec, OrthogonalKernel, OrthogonalVariant, ParallelKernel, Polarity};
pub use model::{Capability, DiagonalGaussian, GaussianMixture, LogisticDataset, LogisticPosterior, TargetModel};
pub use samplers::{
    discretize, run_sampler, Discretizer, EventKind, EventRecord, InitialState, PathObserver, Preset,
    RefreshStrategy, RunLimits, RunSummary, SampleSeries, Sampler, Trajectory, ZigZagBasis,
};
