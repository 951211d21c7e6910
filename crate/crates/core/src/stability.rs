//! Second-variation diagnostics on discrete surfaces.
//!
//! With `u = 1 + H̄ g` the index form can be evaluated three ways: directly
//! from the identity `Δu + |σ|²u = |σ|² - nH²` plus the boundary term,
//! through the Dirichlet energy `∫|∇u|² - ∫|σ|²u² - ∫II(N,N)u²`, and in the
//! closed form `-∫(|σ|² - nH²) - ∫II(N,N)`. Agreement between the three is
//! a consistency check on the discrete operators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cone::ConeSpec;
use crate::linalg::fit_sphere;
use crate::surface::{DiscreteHypersurface, Representation, SurfaceError, SurfaceQuantities};
use crate::tolerance::Tolerances;
use crate::vec::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("contact is not orthogonal (residual {0:.3e}); the boundary identity does not apply")]
    OrthogonalityViolated(f64),
    #[error("volume is not increasing along the family near r = {0}")]
    NonMonotoneFamily(f64),
    #[error("radius and step must be positive")]
    InvalidRadius,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    VertexBallCap,
    InteriorSphere,
    BoundaryHalfSphereOnFlatPiece,
    NotStationary,
    NotStable,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::VertexBallCap => "VertexBallCap",
            Verdict::InteriorSphere => "InteriorSphere",
            Verdict::BoundaryHalfSphereOnFlatPiece => "BoundaryHalfSphereOnFlatPiece",
            Verdict::NotStationary => "NotStationary",
            Verdict::NotStable => "NotStable",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `max |‖x - c‖ - r| / r` over the vertices.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexFormReport {
    pub representation: Representation,
    pub vertex_count: usize,
    pub area: f64,
    pub enclosed_volume: f64,
    pub mean_curvature: f64,
    pub curvature_spread: f64,
    pub contact_residual: f64,
    pub q_direct: f64,
    pub q_gradient_form: f64,
    pub q_closed: f64,
    pub minkowski1_residual: f64,
    pub minkowski2_residual: f64,
    /// `None` when the contact is not orthogonal enough for the identity.
    pub boundary_identity_residual: Option<f64>,
    pub umbilicity_defect: f64,
    pub max_boundary_ii: f64,
    pub sphere_fit: Option<SphereFit>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

/// `u_i = 1 + H̄ g_i`.
pub fn test_function(q: &SurfaceQuantities) -> Vec<f64> {
    q.test_function()
}

/// `(Q_direct, Q_gradient_form)` for the per-vertex function `u`. The
/// direct route assumes `u = 1 + H̄ g`.
pub fn index_form(s: &DiscreteHypersurface, q: &SurfaceQuantities, u: &[f64]) -> (f64, f64) {
    let n = q.n as f64;
    let hbar = q.mean_h();
    let mut direct = 0.0;
    let mut sigma_term = 0.0;
    for i in 0..u.len() {
        let h = q.mean_curvature[i];
        let w = q.area_weights[i];
        direct -= w * u[i] * (q.sigma2[i] - n * h * h);
        sigma_term += w * q.sigma2[i] * u[i] * u[i];
    }
    let mut boundary_ii = 0.0;
    for b in &q.boundary {
        let ub = u[b.index];
        direct -= b.length_weight * ub * (hbar * b.dg_dnu + b.ii_nn * ub);
        boundary_ii += b.length_weight * b.ii_nn * ub * ub;
    }
    let gradient = s.dirichlet_energy(u) - sigma_term - boundary_ii;
    (direct, gradient)
}

/// `-∫(|σ|² - nH²) - ∫_{∂Σ} II(N,N)`.
pub fn q_closed(q: &SurfaceQuantities) -> f64 {
    -umbilicity_defect(q) - q.boundary.iter().map(|b| b.length_weight * b.ii_nn).sum::<f64>()
}

/// `∫(|σ|² - nH²)`, nonnegative up to discretization error.
pub fn umbilicity_defect(q: &SurfaceQuantities) -> f64 {
    let n = q.n as f64;
    (0..q.sigma2.len())
        .map(|i| q.area_weights[i] * (q.sigma2[i] - n * q.mean_curvature[i].powi(2)))
        .sum()
}

/// Area-normalized residuals of `∫u = 0` and
/// `∫(|σ|² - nH²) g = -∫_{∂Σ} II(N,N) g`.
pub fn minkowski_checks(q: &SurfaceQuantities) -> (f64, f64) {
    let n = q.n as f64;
    let u = q.test_function();
    let first: f64 = u.iter().zip(&q.area_weights).map(|(u, w)| u * w).sum();
    let mut second = 0.0;
    for i in 0..u.len() {
        second += q.area_weights[i]
            * (q.sigma2[i] - n * q.mean_curvature[i].powi(2))
            * q.support[i];
    }
    for b in &q.boundary {
        second += b.length_weight * b.ii_nn * q.support[b.index];
    }
    (first.abs() / q.area, second.abs() / q.area)
}

/// `max |∂g/∂ν + II(N,N) g|` over the boundary vertices.
pub fn boundary_identity(q: &SurfaceQuantities, tol: &Tolerances) -> Result<f64, StabilityError> {
    let contact = q.contact_residual();
    if contact > tol.stationarity {
        return Err(StabilityError::OrthogonalityViolated(contact));
    }
    Ok(q.boundary
        .iter()
        .map(|b| (b.dg_dnu + b.ii_nn * q.support[b.index]).abs())
        .fold(0.0, f64::max))
}

/// Multiplies a quantity scaling like `length^(n-2)` by `area^((2-n)/n)` so
/// the result is invariant under dilations.
fn scale_free(value: f64, area: f64, n: usize) -> f64 {
    value * area.powf((2.0 - n as f64) / n as f64)
}

fn fit(s: &DiscreteHypersurface) -> Option<SphereFit> {
    let planar = s.representation() == Representation::Polyline;
    let mut pts: Vec<Vec3> = match s.representation() {
        Representation::Axisymmetric => {
            // Mirror the profile so the fitted center lands on the axis.
            let mut v: Vec<Vec3> = s.profile().iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
            let mirrored: Vec<Vec3> = v.iter().map(|p| Vec3::new(-p.x, p.y, 0.0)).collect();
            v.extend(mirrored);
            v
        }
        _ => s.points().to_vec(),
    };
    let centroid = pts.iter().fold(Vec3::ZERO, |a, &b| a + b) / pts.len() as f64;
    for p in &mut pts {
        *p -= centroid;
    }
    let in_plane = planar || s.representation() == Representation::Axisymmetric;
    let (c, r) = fit_sphere(&pts, in_plane)?;
    let residual = pts
        .iter()
        .map(|p| ((*p - c).norm() - r).abs())
        .fold(0.0, f64::max)
        / r;
    let c = c + centroid;
    let center = match s.representation() {
        Representation::Polyline => alloc::vec![c.x, c.y],
        Representation::Axisymmetric => alloc::vec![0.0, 0.0, c.y],
        Representation::TriangleMesh => alloc::vec![c.x, c.y, c.z],
    };
    Some(SphereFit {
        center,
        radius: r,
        relative_residual: residual,
    })
}

fn sphere_verdict(s: &DiscreteHypersurface, sf: &SphereFit, tol: &Tolerances) -> Verdict {
    let cone: &ConeSpec = s.cone();
    let r = sf.radius;
    let reach = tol.sphere_fit * r;
    let boundary_idx: Vec<usize> = (0..s.vertex_count()).filter(|&i| s.boundary_flags()[i]).collect();
    if boundary_idx.is_empty() {
        let interior = (0..s.vertex_count()).all(|i| {
            cone.distance_to_boundary(&s.ambient_point(i))
                .is_ok_and(|d| d > reach)
        });
        return if interior { Verdict::InteriorSphere } else { Verdict::Inconclusive };
    }
    let rel = tol.sphere_fit * r / sf.center.iter().map(|x| x * x).sum::<f64>().sqrt().max(r);
    if let Some(piece) = cone.flat_piece(&sf.center, rel) {
        let same = boundary_idx
            .iter()
            .all(|&i| cone.flat_piece(&s.ambient_point(i), 1e-8) == Some(piece));
        if same {
            return Verdict::BoundaryHalfSphereOnFlatPiece;
        }
    }
    let dist = sf.center.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dist <= reach {
        return Verdict::VertexBallCap;
    }
    Verdict::Inconclusive
}

/// Full report and classification of a surface.
pub fn analyze(s: &DiscreteHypersurface, tol: &Tolerances) -> Result<IndexFormReport, StabilityError> {
    let q = s.quantities()?;
    let n = q.n;
    let u = q.test_function();
    let (q_direct, q_gradient_form) = index_form(s, &q, &u);
    let qc = q_closed(&q);
    let (m1, m2) = minkowski_checks(&q);
    let bi = boundary_identity(&q, tol).ok();
    let defect = umbilicity_defect(&q);
    let spread = q.curvature_spread();
    let contact = q.contact_residual();
    let length = q.area.powf(1.0 / n as f64);
    let max_ii = q.boundary.iter().map(|b| b.ii_nn.abs()).fold(0.0, f64::max);
    let mut diagnostics = Vec::new();
    let mut sphere = None;

    // Contact is checked first. A strictly negative closed form in a convex
    // cone already rules out stability, so it is reported as such even when
    // the curvature is not constant.
    let convex = s.cone().is_convex();
    let verdict = if contact > tol.stationarity {
        diagnostics.push(format!("not stationary: contact residual {contact:.3e}"));
        Verdict::NotStationary
    } else if convex && scale_free(qc, q.area, n) < -tol.index_form {
        diagnostics.push(format!("closed-form index form is negative: {qc:.6e}"));
        if spread > tol.stationarity {
            diagnostics.push(format!("curvature spread {spread:.3e} is above tolerance"));
        }
        Verdict::NotStable
    } else if spread > tol.stationarity {
        diagnostics.push(format!("not stationary: curvature spread {spread:.3e}"));
        Verdict::NotStationary
    } else if !convex {
        diagnostics.push(String::from(
            "cone is not convex: the sign of the index form does not classify",
        ));
        Verdict::Inconclusive
    } else if scale_free(defect, q.area, n) <= tol.umbilicity && max_ii * length <= tol.umbilicity {
        match fit(s) {
            Some(sf) if sf.relative_residual <= tol.sphere_fit => {
                let v = sphere_verdict(s, &sf, tol);
                sphere = Some(sf);
                v
            }
            Some(sf) => {
                diagnostics.push(format!(
                    "umbilical but sphere fit residual is {:.3e}",
                    sf.relative_residual
                ));
                sphere = Some(sf);
                Verdict::Inconclusive
            }
            None => {
                diagnostics.push(String::from("sphere fit failed"));
                Verdict::Inconclusive
            }
        }
    } else {
        diagnostics.push(format!(
            "umbilicity defect {defect:.3e} or boundary II {max_ii:.3e} too large to classify"
        ));
        Verdict::Inconclusive
    };

    Ok(IndexFormReport {
        representation: s.representation(),
        vertex_count: s.vertex_count(),
        area: q.area,
        enclosed_volume: q.enclosed_volume,
        mean_curvature: q.mean_h(),
        curvature_spread: spread,
        contact_residual: contact,
        q_direct,
        q_gradient_form,
        q_closed: qc,
        minkowski1_residual: m1,
        minkowski2_residual: m2,
        boundary_identity_residual: bi,
        umbilicity_defect: defect,
        max_boundary_ii: max_ii,
        sphere_fit: sphere,
        verdict,
        diagnostics,
    })
}

pub fn classify(s: &DiscreteHypersurface, tol: &Tolerances) -> Result<Verdict, StabilityError> {
    Ok(analyze(s, tol)?.verdict)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeChecks {
    /// Central-difference `dP/dV`.
    pub dp_dv: f64,
    /// Expected `nH`.
    pub n_h: f64,
    pub dp_dv_residual: f64,
    /// Second difference of `P^{(n+1)/n}` in `V`.
    pub convexity_second_difference: f64,
    /// Same quantity through `((n+1)/n) P^{1/n} (P'^2/(nP) + P'')`.
    pub convexity_formula: f64,
}

/// Differentiates `r ↦ (P(r), V(r))` numerically at `r`. The first
/// derivative uses step `dr`, the second derivative the coarser `dr2` to
/// keep cancellation error small.
pub fn profile_derivative_checks_family(
    family: impl Fn(f64) -> (f64, f64),
    n: usize,
    r: f64,
    n_h: f64,
    dr: f64,
    dr2: f64,
) -> Result<DerivativeChecks, StabilityError> {
    if !(r > 0.0 && dr > 0.0 && dr2 > 0.0 && dr < r && dr2 < r) {
        return Err(StabilityError::InvalidRadius);
    }
    let m = n as f64;
    let slope = |h: f64| -> Result<f64, StabilityError> {
        let (pm, vm) = family(r - h);
        let (pp, vp) = family(r + h);
        if vp <= vm {
            return Err(StabilityError::NonMonotoneFamily(r));
        }
        Ok((pp - pm) / (vp - vm))
    };
    let dp_dv = (4.0 * slope(0.5 * dr)? - slope(dr)?) / 3.0;

    let (p0, v0) = family(r);
    let f = |p: f64| p.powf((m + 1.0) / m);
    let second_order = |h: f64| -> Result<(f64, f64), StabilityError> {
        let (pm, vm) = family(r - h);
        let (pp, vp) = family(r + h);
        if !(vm < v0 && v0 < vp) {
            return Err(StabilityError::NonMonotoneFamily(r));
        }
        let (fm, f0, fp) = (f(pm), f(p0), f(pp));
        let direct = 2.0 * ((fp - f0) / (vp - v0) - (f0 - fm) / (v0 - vm)) / (vp - vm);
        let d1 = (pp - pm) / (vp - vm);
        let d2 = 2.0 * ((pp - p0) / (vp - v0) - (p0 - pm) / (v0 - vm)) / (vp - vm);
        let formula = (m + 1.0) / m * p0.powf(1.0 / m) * (d1 * d1 / (m * p0) + d2);
        Ok((direct, formula))
    };
    // One Richardson step removes the leading h² error of both stencils.
    let (a1, b1) = second_order(dr2)?;
    let (a2, b2) = second_order(0.5 * dr2)?;
    let second = (4.0 * a2 - a1) / 3.0;
    let formula = (4.0 * b2 - b1) / 3.0;
    Ok(DerivativeChecks {
        dp_dv,
        n_h,
        dp_dv_residual: (dp_dv - n_h).abs(),
        convexity_second_difference: second,
        convexity_formula: formula,
    })
}

/// Derivative checks along the vertex-ball family of `cone` at radius `r`,
/// where `nH = n/r`.
pub fn profile_derivative_checks(cone: &ConeSpec, r: f64) -> Result<DerivativeChecks, StabilityError> {
    let n = cone.n();
    let omega = cone.solid_angle();
    let family = |rad: f64| {
        let rn = rad.powi(n as i32);
        (omega * rn, omega * rn * rad / (n as f64 + 1.0))
    };
    profile_derivative_checks_family(family, n, r, n as f64 / r, 1e-4 * r, 1e-3 * r)
}
