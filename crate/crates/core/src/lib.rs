//! Numerical toolkit for high-dimensional probability experiments at desk
//! scale: dense spectral linear algebra, sub-gaussian ensembles with Orlicz
//! norm estimators, concentration-bound evaluators and audits, random
//! projections, block-model spectral clustering, covariance estimation,
//! matrix completion, gaussian widths with deviation audits, and l1 sparse
//! recovery backed by an in-repo simplex solver.
//!
//! Everything is seedable through [`rng::RngStream`]; multi-trial routines
//! split per-trial streams so parallel and serial runs produce identical
//! results.

pub mod bounds;
pub mod completion;
pub mod ensembles;
pub mod estimation;
pub mod geometry;
pub mod jl;
pub mod linalg;
pub mod networks;
pub mod recovery;
pub mod rng;

pub use bounds::{BoundFamily, BoundParams, TailBound};
pub use completion::{CompletionInstance, CompletionResult};
pub use ensembles::{EnsembleKind, EnsembleSpec, OrliczEstimate, TailClass};
pub use estimation::{CovarianceModel, SampleSet};
pub use geometry::{LpExponent, SetDescriptor, WidthEstimate};
pub use jl::{DistortionReport, JlConfig};
pub use linalg::{GenMatrix, PsdOrder, Spectrum, SvdResult, SymMatrix};
pub use networks::{ClusterLabels, Graph, SbmParams};
pub use recovery::{BpSolution, RecoveryProblem, SolveStatus};
pub use rng::RngStream;
