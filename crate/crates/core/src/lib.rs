//! Closed-form propagator simulation of three spring-coupled particles, each
//! prepared as a two-packet cat state, and of the spontaneous decoherence seen
//! in each particle's reduced density.
//!
//! Pipeline: [`model`] (normal modes) → [`propagator`] (coefficient cascade at a
//! fixed time) → [`evolution`] (eight-packet wavefunction) → [`reduction`]
//! (reduced densities, visibility, onset). [`classical`] supplies the corner
//! trajectories and their crossings; [`oracle`] holds the independent checks.

// Index loops mirror the component notation of the algebra, and `!(x > 0.0)`
// is used on purpose so that NaN is rejected along with non-positive values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod evolution;
pub mod model;
pub mod oracle;
pub mod par;
pub mod propagator;
pub mod quadrature;
pub mod reduction;

pub use error::{CausticMode, Error, Result};
pub use evolution::{DensityEval, Evolution, PacketOffsets, ThetaField};
pub use model::{normal_basis, CatSpec, ModelParams, NormalModeBasis};
pub use par::Execution;
pub use propagator::{ComplexCoeffs, PacketExponent, Propagator, RealCoeffs, TimeSlice};
pub use quadrature::Rule;
pub use reduction::{DecoherenceReport, QuadratureSpec, ReducedDensityProfile, ReportOptions};
