//! Simulation and estimation toolkit for the relative 3D localization of two
//! single-photon emitters from momentum-resolved two-photon interference.
//!
//! The modules follow the data flow of an experiment:
//!
//! * [`parametrization`]: physical, reduced and spherical separation
//!   coordinates, the far-field camera mapping and a resolution check.
//! * [`probability`]: quantum beats and outcome densities.
//! * [`sampling`]: synthetic detection samples with a seeded ChaCha stream.
//! * [`information`]: classical and quantum Fisher information, Cramér-Rao bounds.
//! * [`estimation`]: log-likelihood, score and the multi-start estimator.
//! * [`harness`]: Monte Carlo campaigns, statistics, CSV/JSON output.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the matrix algebra
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimation;
pub mod harness;
pub mod information;
pub mod parametrization;
pub mod probability;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
pub use estimation::{estimate, EstimationResult, SolverConfig};
pub use information::{crb, fisher_resolved, qfi, CrbReport, FisherMatrix};
pub use parametrization::{
    DetectorModel, MomentumDifference, PhysicalSeparation, ReducedSeparation, SourceWidths,
    SphericalParams,
};
pub use probability::{DetectionRecord, Efficiency, OutcomeLabel, Visibility};
pub use sampling::{generate_sample, Sample, SampleConfig};
