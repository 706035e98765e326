//! Low-rank tensor-regression polynomial chaos surrogates.
//!
//! A black-box response `y(ξ)` of `d` independent random inputs is
//! approximated by a full tensor-product gPC expansion whose `(p+1)^d`
//! coefficient tensor is held in CP format. The CP rank is chosen
//! automatically by an `ℓq/ℓ2` group-sparsity penalty on the rank-one
//! components, and training samples can be added adaptively by combining a
//! Monte Carlo Voronoi-volume estimate with a Taylor-remainder nonlinearity
//! score. Moments and Sobol indices come out of the factors in closed form.
//!
//! The crate is organized bottom-up:
//!
//! - [`paramspace`]: marginals, seeded Latin Hypercube / Monte Carlo designs,
//!   the unit-cube to physical-space transform, and sample-set CSV files.
//! - [`basis`]: orthonormal univariate polynomial families by three-term
//!   recurrence.
//! - [`cpmodel`]: the CP surrogate itself (evaluation, gradient, Khatri-Rao
//!   rows, pruning, model files) and a small dense-tensor oracle.
//! - [`solver`]: block coordinate descent for the group-sparse regression.
//! - [`sampler`]: two-stage adaptive sample selection.
//! - [`stats`]: mean, variance, Sobol indices, MC moments and KDE.
//! - [`benchmarks`]: the 100-dimensional synthetic function, planted models,
//!   the Monte Carlo Sobol oracle and the full adaptive experiment loop.

pub mod basis;
pub mod benchmarks;
pub mod cpmodel;
pub mod error;
pub mod paramspace;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod stats;

pub use basis::{BasisBundle, UnivariateBasis};
pub use cpmodel::{CpModel, DenseTensor, FitMeta, ModelFile};
pub use error::{Error, Result};
pub use paramspace::{Marginal, ParameterSpace, SampleSet};
pub use sampler::{CandidateScore, Selection, VoronoiEstimate};
pub use solver::{SolverConfig, SolverMode, SolverState};
pub use stats::SobolReport;
