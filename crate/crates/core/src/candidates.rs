//! Closed-form candidate regions and the profile they induce.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cone::{unit_sphere_measure, ConeSpec};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CandidateError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("candidate comparison needs a cone with boundary")]
    NoBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateKind {
    VertexBall,
    InteriorBall {
        center: Vec<f64>,
    },
    /// Half-ball centered on a flat piece of `∂M`. When `∂M` has no flat
    /// piece the value is the limit of half-balls drifting off to infinity
    /// along the boundary: still an upper bound for the profile, but not an
    /// attained region (`asymptotic = true`, no center).
    BoundaryHalfBall {
        center: Option<Vec<f64>>,
        asymptotic: bool,
    },
}

impl CandidateKind {
    pub fn label(&self) -> &'static str {
        match self {
            CandidateKind::VertexBall => "vertex",
            CandidateKind::InteriorBall { .. } => "interior",
            CandidateKind::BoundaryHalfBall { .. } => "halfball",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRegion {
    pub kind: CandidateKind,
    pub radius: f64,
    pub perimeter: f64,
    pub volume: f64,
    pub cone: ConeSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Vertex,
    Halfball,
    Interior,
    /// Vertex ball and boundary half-ball have equal perimeter (`ω = c_n/2`).
    Tie,
}

impl Winner {
    pub fn label(self) -> &'static str {
        match self {
            Winner::Vertex => "vertex",
            Winner::Halfball => "halfball",
            Winner::Interior => "interior",
            Winner::Tie => "tie",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateProfile {
    pub volume: f64,
    /// Sorted by perimeter, ascending.
    pub candidates: Vec<CandidateRegion>,
    pub winner: Winner,
    pub winner_perimeter: f64,
    pub halfspace_profile: f64,
}

impl CandidateProfile {
    pub fn perimeter_of(&self, label: &str) -> f64 {
        self.candidates
            .iter()
            .find(|c| c.kind.label() == label)
            .map_or(f64::NAN, |c| c.perimeter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    ExistsForAllVolumes,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub solid_angle: f64,
    pub half_sphere_measure: f64,
    pub half_volume_criterion: bool,
    pub supporting_hyperplane_criterion: bool,
    /// `(volume, perimeter)` of a region with perimeter strictly below the
    /// half-space profile.
    pub profile_gap_certificate: Option<(f64, f64)>,
    pub conclusion: Conclusion,
}

fn positive_volume(v: f64) -> Result<(), CandidateError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CandidateError::NonPositiveVolume(v))
    }
}

/// `I_n(V)`, the isoperimetric profile of the half-space `R^{n+1}_+`.
pub fn halfspace_profile(n: usize, v: f64) -> Result<f64, CandidateError> {
    positive_volume(v)?;
    let m = n as f64;
    let half = 0.5 * unit_sphere_measure(n);
    Ok(half.powf(1.0 / (m + 1.0)) * (m + 1.0).powf(m / (m + 1.0)) * v.powf(m / (m + 1.0)))
}

/// Perimeter of a ball-type region whose link has measure `omega`, as a
/// function of its volume: `omega^{1/(n+1)} (n+1)^{n/(n+1)} V^{n/(n+1)}`.
fn ball_profile(n: usize, omega: f64, v: f64) -> f64 {
    let m = n as f64;
    omega.powf(1.0 / (m + 1.0)) * (m + 1.0).powf(m / (m + 1.0)) * v.powf(m / (m + 1.0))
}

/// Radius of a ball-type region of link measure `omega` and volume `v`.
fn radius_for_volume(n: usize, omega: f64, v: f64) -> f64 {
    let m = n as f64;
    ((m + 1.0) * v / omega).powf(1.0 / (m + 1.0))
}

fn require_boundary(cone: &ConeSpec) -> Result<(), CandidateError> {
    if cone.has_boundary() {
        Ok(())
    } else {
        Err(CandidateError::NoBoundary)
    }
}

/// `B_r ∩ M` with `B_r` centered at the vertex.
pub fn vertex_ball(cone: &ConeSpec, r: f64) -> Result<CandidateRegion, CandidateError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CandidateError::NonPositiveRadius(r));
    }
    let n = cone.n();
    let omega = cone.solid_angle();
    let rn = r.powi(n as i32);
    Ok(CandidateRegion {
        kind: CandidateKind::VertexBall,
        radius: r,
        perimeter: omega * rn,
        volume: omega * rn * r / (n as f64 + 1.0),
        cone: cone.clone(),
    })
}

pub fn interior_ball(cone: &ConeSpec, r: f64) -> Result<CandidateRegion, CandidateError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CandidateError::NonPositiveRadius(r));
    }
    let n = cone.n();
    let c = unit_sphere_measure(n);
    let dir = cone.interior_direction();
    let reach = cone.distance_to_boundary(&dir).unwrap_or(1.0).min(1.0);
    let s = r / reach * (1.0 + 1e-9);
    let rn = r.powi(n as i32);
    Ok(CandidateRegion {
        kind: CandidateKind::InteriorBall {
            center: dir.iter().map(|x| x * s).collect(),
        },
        radius: r,
        perimeter: c * rn,
        volume: c * rn * r / (n as f64 + 1.0),
        cone: cone.clone(),
    })
}

pub fn boundary_half_ball(cone: &ConeSpec, r: f64) -> Result<CandidateRegion, CandidateError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CandidateError::NonPositiveRadius(r));
    }
    require_boundary(cone)?;
    let n = cone.n();
    let half = 0.5 * unit_sphere_measure(n);
    let center = cone.flat_piece_anchor(r);
    let asymptotic = center.is_none();
    let rn = r.powi(n as i32);
    Ok(CandidateRegion {
        kind: CandidateKind::BoundaryHalfBall { center, asymptotic },
        radius: r,
        perimeter: half * rn,
        volume: half * rn * r / (n as f64 + 1.0),
        cone: cone.clone(),
    })
}

/// Dilation by `lambda` about the vertex.
pub fn scale_candidate(
    c: &CandidateRegion,
    lambda: f64,
) -> Result<CandidateRegion, CandidateError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CandidateError::NonPositiveScale(lambda));
    }
    let n = c.cone.n() as i32;
    let scale_point = |p: &Vec<f64>| p.iter().map(|x| x * lambda).collect::<Vec<f64>>();
    let kind = match &c.kind {
        CandidateKind::VertexBall => CandidateKind::VertexBall,
        CandidateKind::InteriorBall { center } => CandidateKind::InteriorBall {
            center: scale_point(center),
        },
        CandidateKind::BoundaryHalfBall { center, asymptotic } => {
            CandidateKind::BoundaryHalfBall {
                center: center.as_ref().map(scale_point),
                asymptotic: *asymptotic,
            }
        }
    };
    Ok(CandidateRegion {
        kind,
        radius: c.radius * lambda,
        perimeter: c.perimeter * lambda.powi(n),
        volume: c.volume * lambda.powi(n + 1),
        cone: c.cone.clone(),
    })
}

/// The three candidate families at volume `v`, ranked by perimeter.
pub fn candidate_profile(cone: &ConeSpec, v: f64) -> Result<CandidateProfile, CandidateError> {
    candidate_profile_tol(cone, v, &Tolerances::default())
}

pub fn candidate_profile_tol(
    cone: &ConeSpec,
    v: f64,
    tol: &Tolerances,
) -> Result<CandidateProfile, CandidateError> {
    positive_volume(v)?;
    require_boundary(cone)?;
    let n = cone.n();
    let omega = cone.solid_angle();
    let full = unit_sphere_measure(n);
    let half = 0.5 * full;

    let vb = vertex_ball(cone, radius_for_volume(n, omega, v))?;
    let hb = boundary_half_ball(cone, radius_for_volume(n, half, v))?;
    let ib = interior_ball(cone, radius_for_volume(n, full, v))?;
    let mut candidates = alloc::vec![vb, hb, ib];
    candidates.sort_by(|a, b| a.perimeter.total_cmp(&b.perimeter));

    // ω against c_n/2 decides between vertex ball and half-ball; the interior
    // ball never wins since its link is the whole sphere.
    let winner = if (omega - half).abs() <= tol.tie * half {
        Winner::Tie
    } else if omega < half {
        Winner::Vertex
    } else {
        Winner::Halfball
    };
    let winner_perimeter = ball_profile(n, omega.min(half), v);
    Ok(CandidateProfile {
        volume: v,
        candidates,
        winner,
        winner_perimeter,
        halfspace_profile: halfspace_profile(n, v)?,
    })
}

/// Sufficient conditions for existence of isoperimetric regions of every
/// volume. `probes` are `(volume, perimeter)` pairs of known regions.
pub fn existence_report(cone: &ConeSpec, probes: &[(f64, f64)]) -> ExistenceReport {
    let n = cone.n();
    let omega = cone.solid_angle();
    let half = 0.5 * unit_sphere_measure(n);
    let tol = Tolerances::default();
    let half_volume = cone.has_boundary() && omega <= half * (1.0 + tol.tie);

    let supporting = match cone.shape() {
        crate::cone::ConeShape::Euclidean => false,
        crate::cone::ConeShape::Circular { alpha } if cone.ambient_dim() > 2 => {
            *alpha <= core::f64::consts::FRAC_PI_2 + 1e-15
        }
        // Flat rays, flat facets and the half-space all have II = 0.
        _ => true,
    };

    let mut certificate = None;
    if cone.has_boundary() {
        let mut all: Vec<(f64, f64)> = probes.to_vec();
        if let Ok(vb) = vertex_ball(cone, 1.0) {
            all.push((vb.volume, vb.perimeter));
        }
        for (v, p) in all {
            if let Ok(iv) = halfspace_profile(n, v) {
                if p < iv - 1e-12 * iv.max(1.0) {
                    certificate = Some((v, p));
                    break;
                }
            }
        }
    }

    let conclusion = if half_volume || supporting || certificate.is_some() {
        Conclusion::ExistsForAllVolumes
    } else {
        Conclusion::Unknown
    };
    ExistenceReport {
        solid_angle: omega,
        half_sphere_measure: half,
        half_volume_criterion: half_volume,
        supporting_hyperplane_criterion: supporting,
        profile_gap_certificate: certificate,
        conclusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn vertex_ball_quarter_plane() {
        let c = ConeSpec::sector(FRAC_PI_2).unwrap();
        let b = vertex_ball(&c, 1.0).unwrap();
        assert!((b.perimeter - FRAC_PI_2).abs() < 1e-15);
        assert!((b.volume - FRAC_PI_4).abs() < 1e-15);
        assert!(vertex_ball(&c, 0.0).is_err());
        let tiny = vertex_ball(&c, 1e-9).unwrap();
        assert!(tiny.perimeter < 1e-8 && tiny.volume < 1e-17);
    }

    #[test]
    fn halfspace_profile_values() {
        assert!((halfspace_profile(1, 2.0 * PI).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((halfspace_profile(2, 2.0 * PI / 3.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((halfspace_profile(1, FRAC_PI_2).unwrap() - PI).abs() < 1e-12);
        assert!(halfspace_profile(1, 0.0).is_err());
    }

    #[test]
    fn comparison_in_sectors() {
        let quarter = ConeSpec::sector(FRAC_PI_2).unwrap();
        let p = candidate_profile(&quarter, FRAC_PI_4).unwrap();
        assert_eq!(p.winner, Winner::Vertex);
        assert!((p.winner_perimeter - FRAC_PI_2).abs() < 1e-12);
        assert!((p.perimeter_of("halfball") - PI / 2.0_f64.sqrt()).abs() < 1e-12);

        let wide = ConeSpec::sector(1.5 * PI).unwrap();
        let p = candidate_profile(&wide, FRAC_PI_2).unwrap();
        assert_eq!(p.winner, Winner::Halfball);
        assert!((p.winner_perimeter - PI).abs() < 1e-12);
        assert!((p.perimeter_of("vertex") - (1.5 * PI * PI).sqrt()).abs() < 1e-12);

        let flat = ConeSpec::sector(PI).unwrap();
        assert_eq!(candidate_profile(&flat, 3.0).unwrap().winner, Winner::Tie);
    }

    #[test]
    fn scaling_is_exact() {
        let c = ConeSpec::sector(FRAC_PI_2).unwrap();
        let b = vertex_ball(&c, 1.0).unwrap();
        let s = scale_candidate(&b, 2.0).unwrap();
        assert_eq!(s.perimeter, PI);
        assert_eq!(s.volume, PI);
        assert_eq!(scale_candidate(&b, 1.0).unwrap(), b);
        assert!(scale_candidate(&b, -1.0).is_err());
    }

    #[test]
    fn existence_examples() {
        let wide = existence_report(&ConeSpec::sector(1.5 * PI).unwrap(), &[]);
        assert!(!wide.half_volume_criterion);
        assert!(wide.supporting_hyperplane_criterion);
        assert_eq!(wide.conclusion, Conclusion::ExistsForAllVolumes);

        let narrow = existence_report(&ConeSpec::circular(3, FRAC_PI_3).unwrap(), &[]);
        assert!(narrow.half_volume_criterion);
        assert!(narrow.profile_gap_certificate.is_some());

        let fat = existence_report(&ConeSpec::circular(3, 3.0 * FRAC_PI_4).unwrap(), &[]);
        assert!(!fat.half_volume_criterion);
        assert!(!fat.supporting_hyperplane_criterion);
        assert!(fat.profile_gap_certificate.is_none());
        assert_eq!(fat.conclusion, Conclusion::Unknown);
    }

    #[test]
    fn half_ball_centers_are_admissible() {
        for theta in [0.3, 1.0, 2.5, 4.0, 6.0] {
            let c = ConeSpec::sector(theta).unwrap();
            let hb = boundary_half_ball(&c, 0.7).unwrap();
            let CandidateKind::BoundaryHalfBall { center: Some(x), .. } = &hb.kind else {
                panic!("sector rays are flat");
            };
            assert!(norm2(x) >= 0.7);
        }
        let cap = ConeSpec::circular(3, FRAC_PI_3).unwrap();
        let hb = boundary_half_ball(&cap, 1.0).unwrap();
        assert_eq!(
            hb.kind,
            CandidateKind::BoundaryHalfBall {
                center: None,
                asymptotic: true
            }
        );
    }

    fn norm2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
