//! Kernel solver for PDEs with rough forcing, trained against a discretized
//! negative Sobolev loss.

pub mod error;
pub mod experiments;
pub mod fft;
pub mod function_spaces;
pub mod gauss_newton;
pub mod grid;
pub mod kernels;
pub mod metrics;
pub mod noise;
pub mod operators;
pub mod reference;
pub mod seminorm;
pub mod spde;

pub use error::{Error, Result};
pub use experiments::{run_experiment, ErrorReport, ExperimentConfig, ExperimentKind};
pub use function_spaces::{MeasurementVector, Projector, SpaceKind, TestSpace};
pub use gauss_newton::{KktRoute, Representer, SolveReport, SolverConfig};
pub use grid::{Grid, GridFunction};
pub use kernels::{CollocationSet, FeatureSet, GramBlocks, KernelGrid, KernelSpec};
pub use metrics::{fit_rate, rel_l2_error, space_time_l2_error, RateFit};
pub use noise::{NoiseMode, NoisePath};
pub use operators::{Linearization, OperatorFamily, OperatorSpec};
pub use seminorm::SeminormContext;
pub use spde::{SpdeConfig, SpdeFamily, Trajectory};
