//! Every numeric threshold the crate uses, in one place.

use serde::{Deserialize, Serialize};

/// Tolerances for geometric predicates and stability diagnostics.
///
/// Geometric tolerances are absolute on unit-scale inputs and are scaled by
/// `max(1, |x|)` where a length is involved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Membership and tangency predicates on cones.
    pub geometric: f64,
    /// Distance from `∂M` allowed for boundary vertices of a surface.
    pub on_boundary: f64,
    /// Relative tie threshold when comparing candidate perimeters.
    pub tie: f64,
    /// Contact-angle residual and relative curvature spread accepted as
    /// stationary.
    pub stationarity: f64,
    /// Threshold on `Q / area` below which a surface is declared unstable.
    pub index_form: f64,
    /// Threshold on the normalized umbilicity defect and on `II(N,N)` at the
    /// contact.
    pub umbilicity: f64,
    /// Relative sphere-fit residual and center-location threshold used by the
    /// classifier.
    pub sphere_fit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            geometric: 1e-12,
            on_boundary: 1e-10,
            tie: 1e-12,
            stationarity: 1e-2,
            index_form: 1e-3,
            umbilicity: 1e-3,
            sphere_fit: 1e-2,
        }
    }
}
