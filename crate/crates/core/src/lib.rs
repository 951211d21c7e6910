//! Isoperimetric regions inside Euclidean cones.
//!
//! The crate is `no_std` (with `alloc`) and covers five areas:
//!
//! * [`cone`]: solid cones `M = 0 x C` with their solid angle, convexity,
//!   membership and boundary second fundamental form.
//! * [`candidates`]: closed-form candidate regions (vertex balls, interior
//!   balls, boundary half-balls), the half-space profile and the existence
//!   report.
//! * [`surface`]: discrete relative boundaries (polylines, axisymmetric
//!   profiles, triangle meshes) and their curvature quantities.
//! * [`stability`]: the index form, the Minkowski formulas, the boundary
//!   identity for the support function and the classification of stable
//!   candidates.
//! * [`optimize`]: perimeter minimization at fixed enclosed volume with an
//!   augmented Lagrangian.
//!
//! IO, file formats and the command-line front end live in the `cone-iso`
//! crate.
#![no_std]
// Float methods come from `num_traits::Float`; the imports go unused in
// builds where dev-dependencies pull std into the graph.

extern crate alloc;

pub mod candidates;
pub mod cone;
pub mod linalg;
pub mod optimize;
pub mod stability;
pub mod surface;
pub mod tolerance;
pub mod vec;

pub use candidates::{
    candidate_profile, existence_report, halfspace_profile, scale_candidate, vertex_ball,
    CandidateError, CandidateKind, CandidateProfile, CandidateRegion, Conclusion, ExistenceReport,
    Winner,
};
pub use cone::{unit_sphere_measure, BoundaryPoint, ConeError, ConeShape, ConeSpec};
pub use optimize::{
    assemble_run, minimize, minimize_restart, profile_sweep, stationarity_report, Initializer,
    OptimizationConfig, OptimizationRun, OptimizeError, RestartOutcome, StationarityReport,
    SweepRow, SweepTable, TraceRow,
};
pub use stability::{analyze, classify, IndexFormReport, StabilityError, Verdict};
pub use surface::{DiscreteHypersurface, Representation, SurfaceError, SurfaceQuantities};
pub use tolerance::Tolerances;
pub use vec::{Vec2, Vec3};
