//! Solid cones `M = 0 x C` over spherical domains `C ⊂ S^n`.
//!
//! A [`ConeSpec`] is immutable after construction. Polyhedral cones cache
//! their extreme rays and solid angle when they are built, so every query is
//! a pure function of the value.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tolerance::Tolerances;
use crate::vec::{dot, norm, Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConeError {
    #[error("ambient dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("sector cones live in dimension 2, got dimension {0}")]
    SectorDimension(usize),
    #[error("angle {name} = {value} is outside {range}")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("polyhedral cone needs at least one normal")]
    NoNormals,
    #[error("normal {index} has length {length}, expected unit length")]
    NonUnitNormal { index: usize, length: f64 },
    #[error("normal {index} has {got} components, ambient dimension is {expected}")]
    NormalDimension {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("the half-spaces have an empty common interior")]
    EmptyInterior,
    #[error("point has {got} coordinates, ambient dimension is {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("the vertex is excluded: boundary quantities are undefined at 0")]
    AtVertex,
    #[error("point is not on the cone boundary (distance {0:e})")]
    NotOnBoundary(f64),
    #[error("point lies on an edge of the polyhedral cone; the boundary normal is ambiguous")]
    OnEdge,
    #[error("the Euclidean space has no boundary")]
    NoBoundary,
}

/// Geometric description of the link `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeShape {
    /// Planar sector bounded by the rays at angles `0` and `theta`.
    Sector { theta: f64 },
    /// Circular cone of half-angle `alpha` around the last coordinate axis.
    Circular { alpha: f64 },
    /// Intersection of the half-spaces `<n_i, x> >= 0`.
    Polyhedral { normals: Vec<Vec<f64>> },
    /// `x_last >= 0`.
    #[serde(rename = "halfspace")]
    HalfSpace,
    /// The whole space, a cone without boundary (`C = S^n`).
    Euclidean,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawConeSpec {
    ambient_dim: usize,
    shape: ConeShape,
}

/// Cached geometry of polyhedral cones.
#[derive(Clone, Debug, Default)]
struct PolyGeometry {
    /// Rank of the span of the normals.
    rank: usize,
    /// Unit interior direction.
    interior: Vec<f64>,
    /// Extreme rays (dimension <= 3, pointed cones).
    rays: Vec<Vec3>,
    /// Planar description (start angle, opening) in dimension 2.
    planar: Option<(f64, f64)>,
    solid_angle: f64,
    solid_angle_error: f64,
}

/// A solid cone in `R^{n+1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawConeSpec", into = "RawConeSpec")]
pub struct ConeSpec {
    ambient_dim: usize,
    shape: ConeShape,
    poly: PolyGeometry,
}

impl PartialEq for ConeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim && self.shape == other.shape
    }
}

impl TryFrom<RawConeSpec> for ConeSpec {
    type Error = ConeError;
    fn try_from(raw: RawConeSpec) -> Result<Self, ConeError> {
        ConeSpec::new(raw.ambient_dim, raw.shape)
    }
}

impl From<ConeSpec> for RawConeSpec {
    fn from(c: ConeSpec) -> Self {
        RawConeSpec {
            ambient_dim: c.ambient_dim,
            shape: c.shape,
        }
    }
}

/// `c_n = H^n(S^n)`, the measure of the unit sphere in `R^{n+1}`.
pub fn unit_sphere_measure(n: usize) -> f64 {
    // c_0 = 2, c_1 = 2π, c_n = 2π c_{n-2} / (n - 1)
    let (mut even, mut odd) = (2.0, 2.0 * PI);
    if n == 0 {
        return even;
    }
    for k in 2..=n {
        if k % 2 == 0 {
            even *= 2.0 * PI / (k as f64 - 1.0);
        } else {
            odd *= 2.0 * PI / (k as f64 - 1.0);
        }
    }
    if n.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// `∫_0^alpha sin^k t dt` by the standard reduction formula.
fn sin_power_integral(k: usize, alpha: f64) -> f64 {
    match k {
        0 => alpha,
        1 => 1.0 - alpha.cos(),
        _ => {
            let kf = k as f64;
            (-(alpha.sin().powi(k as i32 - 1)) * alpha.cos()
                + (kf - 1.0) * sin_power_integral(k - 2, alpha))
                / kf
        }
    }
}

impl ConeSpec {
    pub fn new(ambient_dim: usize, shape: ConeShape) -> Result<Self, ConeError> {
        if ambient_dim < 2 {
            return Err(ConeError::DimensionTooSmall(ambient_dim));
        }
        let mut poly = PolyGeometry::default();
        match &shape {
            ConeShape::Sector { theta } => {
                if ambient_dim != 2 {
                    return Err(ConeError::SectorDimension(ambient_dim));
                }
                if !(*theta > 0.0 && *theta < 2.0 * PI) {
                    return Err(ConeError::AngleOutOfRange {
                        name: "theta",
                        value: *theta,
                        range: "(0, 2π)",
                    });
                }
            }
            ConeShape::Circular { alpha } => {
                if !(*alpha > 0.0 && *alpha < PI) {
                    return Err(ConeError::AngleOutOfRange {
                        name: "alpha",
                        value: *alpha,
                        range: "(0, π)",
                    });
                }
            }
            ConeShape::Polyhedral { normals } => {
                poly = polyhedral_geometry(ambient_dim, normals)?;
            }
            ConeShape::HalfSpace | ConeShape::Euclidean => {}
        }
        Ok(ConeSpec {
            ambient_dim,
            shape,
            poly,
        })
    }

    pub fn sector(theta: f64) -> Result<Self, ConeError> {
        ConeSpec::new(2, ConeShape::Sector { theta })
    }

    pub fn circular(ambient_dim: usize, alpha: f64) -> Result<Self, ConeError> {
        ConeSpec::new(ambient_dim, ConeShape::Circular { alpha })
    }

    pub fn halfspace(ambient_dim: usize) -> Result<Self, ConeError> {
        ConeSpec::new(ambient_dim, ConeShape::HalfSpace)
    }

    pub fn euclidean(ambient_dim: usize) -> Result<Self, ConeError> {
        ConeSpec::new(ambient_dim, ConeShape::Euclidean)
    }

    pub fn polyhedral(ambient_dim: usize, normals: Vec<Vec<f64>>) -> Result<Self, ConeError> {
        ConeSpec::new(ambient_dim, ConeShape::Polyhedral { normals })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension `n` of the link `C ⊂ S^n` (and of the relative boundary).
    pub fn n(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn shape(&self) -> &ConeShape {
        &self.shape
    }

    /// Short human-readable label, e.g. `circular(alpha=0.7854, dim=3)`.
    pub fn label(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = match &self.shape {
            ConeShape::Sector { theta } => write!(s, "sector(theta={theta:.6})"),
            ConeShape::Circular { alpha } => {
                write!(s, "circular(alpha={alpha:.6}, dim={})", self.ambient_dim)
            }
            ConeShape::Polyhedral { normals } => write!(
                s,
                "polyhedral({} facets, dim={})",
                normals.len(),
                self.ambient_dim
            ),
            ConeShape::HalfSpace => write!(s, "halfspace(dim={})", self.ambient_dim),
            ConeShape::Euclidean => write!(s, "euclidean(dim={})", self.ambient_dim),
        };
        s
    }

    /// For planar cones: the boundary rays as `(start angle, opening)`, the
    /// cone being the counterclockwise sweep between them.
    pub fn planar_sector(&self) -> Option<(f64, f64)> {
        if self.ambient_dim != 2 {
            return None;
        }
        match &self.shape {
            ConeShape::Sector { theta } => Some((0.0, *theta)),
            ConeShape::Circular { alpha } => Some((FRAC_PI_2 - alpha, 2.0 * alpha)),
            ConeShape::HalfSpace => Some((0.0, PI)),
            ConeShape::Polyhedral { .. } => self.poly.planar,
            ConeShape::Euclidean => None,
        }
    }

    /// `H^n(C)`. Exact except for polyhedral cones in dimension >= 4, which
    /// carry a Monte Carlo estimate (see [`ConeSpec::solid_angle_error`]).
    pub fn solid_angle(&self) -> f64 {
        let n = self.n();
        match &self.shape {
            ConeShape::Sector { theta } => *theta,
            ConeShape::Circular { alpha } => {
                unit_sphere_measure(n - 1) * sin_power_integral(n - 1, *alpha)
            }
            ConeShape::Polyhedral { .. } => self.poly.solid_angle,
            ConeShape::HalfSpace => 0.5 * unit_sphere_measure(n),
            ConeShape::Euclidean => unit_sphere_measure(n),
        }
    }

    /// Absolute error bound on [`ConeSpec::solid_angle`]; zero up to
    /// rounding for every closed-form case.
    pub fn solid_angle_error(&self) -> f64 {
        self.poly.solid_angle_error
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            ConeShape::Sector { theta } => *theta <= PI,
            ConeShape::Circular { alpha } => {
                if self.ambient_dim == 2 {
                    *alpha <= FRAC_PI_2
                } else {
                    *alpha <= FRAC_PI_2 + 1e-15
                }
            }
            ConeShape::Polyhedral { .. } | ConeShape::HalfSpace | ConeShape::Euclidean => true,
        }
    }

    /// True when the cone is a half-space in disguise, so its vertex is not a
    /// genuine singular point.
    pub fn is_halfspace_like(&self) -> bool {
        let eps = 1e-12;
        match &self.shape {
            ConeShape::Sector { theta } => (*theta - PI).abs() <= eps,
            ConeShape::Circular { alpha } => (*alpha - FRAC_PI_2).abs() <= eps,
            ConeShape::HalfSpace => true,
            ConeShape::Polyhedral { .. } => {
                self.poly.rank == 1
                    || self
                        .poly
                        .planar
                        .is_some_and(|(_, open)| (open - PI).abs() <= eps)
            }
            ConeShape::Euclidean => false,
        }
    }

    pub fn has_boundary(&self) -> bool {
        !matches!(self.shape, ConeShape::Euclidean)
    }

    /// A unit vector strictly inside the cone.
    pub fn interior_direction(&self) -> Vec<f64> {
        let d = self.ambient_dim;
        let mut e = vec![0.0; d];
        if let Some((start, open)) = self.planar_sector() {
            let v = Vec2::from_angle(start + 0.5 * open);
            return vec![v.x, v.y];
        }
        match &self.shape {
            ConeShape::Polyhedral { .. } => self.poly.interior.clone(),
            _ => {
                e[d - 1] = 1.0;
                e
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ConeError> {
        if x.len() != self.ambient_dim {
            return Err(ConeError::PointDimension {
                got: x.len(),
                expected: self.ambient_dim,
            });
        }
        Ok(())
    }

    /// Membership in the closed cone (the vertex included).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, Tolerances::default().geometric)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.ambient_dim {
            return false;
        }
        let r = norm(x);
        if r <= tol {
            return true;
        }
        let scaled = tol * r.max(1.0);
        if let Some((start, open)) = self.planar_sector() {
            let p = Vec2::new(x[0], x[1]);
            let da = Vec2::from_angle(start);
            let db = Vec2::from_angle(start + open);
            // Signed distances to the two boundary lines (positive inside).
            let sa = da.cross(p);
            let sb = p.cross(db);
            return if open <= PI {
                sa >= -scaled && sb >= -scaled && (p.dot(da) >= -scaled || p.dot(db) >= -scaled)
            } else {
                sa >= -scaled || sb >= -scaled
            };
        }
        match &self.shape {
            ConeShape::Circular { alpha } => {
                let last = x[self.ambient_dim - 1];
                let horiz = (r * r - last * last).max(0.0).sqrt();
                // Signed distance to the cone surface within the meridian plane.
                let s = alpha.sin() * last - alpha.cos() * horiz;
                s >= -scaled
            }
            ConeShape::HalfSpace => x[self.ambient_dim - 1] >= -scaled,
            ConeShape::Polyhedral { normals } => normals.iter().all(|n| dot(n, x) >= -scaled),
            ConeShape::Euclidean => true,
            ConeShape::Sector { .. } => unreachable!(),
        }
    }

    /// Euclidean distance from `x` to `∂M` (infinite for the Euclidean cone).
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64, ConeError> {
        self.check_dim(x)?;
        let r = norm(x);
        if let Some((start, open)) = self.planar_sector() {
            let p = Vec2::new(x[0], x[1]);
            let ray_dist = |d: Vec2| {
                let t = p.dot(d);
                if t >= 0.0 {
                    (p - d * t).norm()
                } else {
                    r
                }
            };
            let da = Vec2::from_angle(start);
            let db = Vec2::from_angle(start + open);
            return Ok(ray_dist(da).min(ray_dist(db)));
        }
        Ok(match &self.shape {
            ConeShape::Circular { alpha } => {
                if r == 0.0 {
                    return Ok(0.0);
                }
                let last = x[self.ambient_dim - 1];
                let beta = (last / r).clamp(-1.0, 1.0).acos();
                let gap = (beta - alpha).abs();
                if gap <= FRAC_PI_2 {
                    r * gap.sin()
                } else {
                    r
                }
            }
            ConeShape::HalfSpace => x[self.ambient_dim - 1].abs(),
            ConeShape::Polyhedral { normals } => {
                if self.contains(x) {
                    normals
                        .iter()
                        .map(|n| dot(n, x))
                        .fold(f64::INFINITY, f64::min)
                        .max(0.0)
                } else {
                    let p = project_onto_halfspaces(normals, x);
                    x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                }
            }
            ConeShape::Euclidean => f64::INFINITY,
            ConeShape::Sector { .. } => unreachable!(),
        })
    }

    /// Closest point of `∂M` (used to snap boundary vertices back after
    /// refinement).
    pub fn project_to_boundary(&self, x: &[f64]) -> Result<Vec<f64>, ConeError> {
        self.check_dim(x)?;
        let d = self.ambient_dim;
        if let Some((start, open)) = self.planar_sector() {
            let p = Vec2::new(x[0], x[1]);
            let proj = |dir: Vec2| dir * p.dot(dir).max(0.0);
            let a = proj(Vec2::from_angle(start));
            let b = proj(Vec2::from_angle(start + open));
            let q = if (p - a).norm() <= (p - b).norm() { a } else { b };
            return Ok(vec![q.x, q.y]);
        }
        match &self.shape {
            ConeShape::Circular { alpha } => {
                let last = x[d - 1];
                let horiz: f64 = x[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut e = vec![0.0; d - 1];
                if horiz > 0.0 {
                    for (ei, xi) in e.iter_mut().zip(&x[..d - 1]) {
                        *ei = xi / horiz;
                    }
                } else {
                    e[0] = 1.0;
                }
                let (s, c) = (alpha.sin(), alpha.cos());
                let t = (horiz * s + last * c).max(0.0);
                let mut q: Vec<f64> = e.iter().map(|ei| ei * t * s).collect();
                q.push(t * c);
                Ok(q)
            }
            ConeShape::HalfSpace => {
                let mut q = x.to_vec();
                q[d - 1] = 0.0;
                Ok(q)
            }
            ConeShape::Polyhedral { normals } => {
                let best = normals
                    .iter()
                    .min_by(|a, b| dot(a, x).abs().total_cmp(&dot(b, x).abs()))
                    .ok_or(ConeError::NoNormals)?;
                let s = dot(best, x);
                Ok(x.iter().zip(best).map(|(xi, ni)| xi - s * ni).collect())
            }
            ConeShape::Euclidean => Err(ConeError::NoBoundary),
            ConeShape::Sector { .. } => unreachable!(),
        }
    }

    /// Validates that `x` lies on `∂M − {0}` and attaches the inward normal.
    pub fn boundary_point(&self, x: &[f64]) -> Result<BoundaryPoint, ConeError> {
        self.boundary_point_tol(x, Tolerances::default().on_boundary)
    }

    pub fn boundary_point_tol(&self, x: &[f64], tol: f64) -> Result<BoundaryPoint, ConeError> {
        self.check_dim(x)?;
        if !self.has_boundary() {
            return Err(ConeError::NoBoundary);
        }
        let r = norm(x);
        if r <= tol {
            return Err(ConeError::AtVertex);
        }
        let dist = self.distance_to_boundary(x)?;
        if dist > tol * r.max(1.0) {
            return Err(ConeError::NotOnBoundary(dist));
        }
        let d = self.ambient_dim;
        let normal = if let Some((start, open)) = self.planar_sector() {
            let p = Vec2::new(x[0], x[1]);
            let da = Vec2::from_angle(start);
            let db = Vec2::from_angle(start + open);
            let on_a = p.dot(da) > 0.0 && da.cross(p).abs() <= tol * r.max(1.0);
            let n = if on_a { da.perp() } else { -db.perp() };
            vec![n.x, n.y]
        } else {
            match &self.shape {
                ConeShape::Circular { alpha } => {
                    let horiz: f64 = x[..d - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
                    let (s, c) = (alpha.sin(), alpha.cos());
                    let mut n: Vec<f64> = x[..d - 1].iter().map(|v| -c * v / horiz).collect();
                    n.push(s);
                    n
                }
                ConeShape::HalfSpace => {
                    let mut n = vec![0.0; d];
                    n[d - 1] = 1.0;
                    n
                }
                ConeShape::Polyhedral { normals } => {
                    let scaled = tol * r.max(1.0);
                    let mut active = normals.iter().filter(|n| dot(n, x).abs() <= scaled);
                    let first = active.next().ok_or(ConeError::NotOnBoundary(dist))?;
                    if active.any(|m| dot(m, first) < 1.0 - 1e-12) {
                        return Err(ConeError::OnEdge);
                    }
                    first.clone()
                }
                _ => unreachable!(),
            }
        };
        Ok(BoundaryPoint {
            position: x.to_vec(),
            inward_normal: normal,
        })
    }

    /// Normal curvature `II(v, v)` of `∂M − {0}` at `p` with respect to the
    /// inner normal. `v` is projected onto `T_p ∂M` first, so the value is the
    /// quadratic form evaluated on the tangential part.
    #[allow(non_snake_case)]
    pub fn boundary_II(&self, p: &BoundaryPoint, v: &[f64]) -> Result<f64, ConeError> {
        self.check_dim(v)?;
        let nu = &p.inward_normal;
        let vn = dot(v, nu);
        let vt: Vec<f64> = v.iter().zip(nu).map(|(a, b)| a - vn * b).collect();
        Ok(match &self.shape {
            ConeShape::Circular { alpha } if self.ambient_dim > 2 => {
                let r = norm(&p.position);
                let along = dot(&vt, &p.position) / r;
                let cot = alpha.cos() / alpha.sin();
                cot / r * (dot(&vt, &vt) - along * along)
            }
            _ => 0.0,
        })
    }

    /// Identifier of the flat piece of `∂M` through `x`, if `∂M` is flat in a
    /// neighborhood of `x`. Points on the same flat piece share the id.
    pub fn flat_piece(&self, x: &[f64], tol: f64) -> Option<usize> {
        if !self.has_boundary() || x.len() != self.ambient_dim {
            return None;
        }
        let r = norm(x);
        if r <= tol {
            return self.is_halfspace_like().then_some(0);
        }
        if self.distance_to_boundary(x).ok()? > tol * r.max(1.0) {
            return None;
        }
        if self.is_halfspace_like() {
            return Some(0);
        }
        if let Some((start, _)) = self.planar_sector() {
            let p = Vec2::new(x[0], x[1]);
            let da = Vec2::from_angle(start);
            let on_a = p.dot(da) > 0.0 && da.cross(p).abs() <= tol * r.max(1.0);
            return Some(if on_a { 0 } else { 1 });
        }
        match &self.shape {
            ConeShape::Polyhedral { normals } => {
                let scaled = tol * r.max(1.0);
                let active: Vec<usize> = (0..normals.len())
                    .filter(|&i| dot(&normals[i], x).abs() <= scaled)
                    .collect();
                let first = *active.first()?;
                active
                    .iter()
                    .all(|&i| dot(&normals[i], &normals[first]) >= 1.0 - 1e-12)
                    .then_some(first)
            }
            _ => None,
        }
    }

    /// A point in the relative interior of a flat piece of `∂M` at distance
    /// `>= 1` from every other part of the boundary, scaled by `r`; used as
    /// the center of boundary half-balls of radius `r`. `None` when `∂M` has
    /// no flat piece.
    pub fn flat_piece_anchor(&self, r: f64) -> Option<Vec<f64>> {
        let d = self.ambient_dim;
        if let Some((start, open)) = self.planar_sector() {
            // Distance from c = s·d_a to the other ray must exceed r.
            let gap = if open < FRAC_PI_2 {
                open.sin()
            } else if open > 1.5 * PI {
                (2.0 * PI - open).sin()
            } else {
                1.0
            };
            let s = 1.5 * r / gap;
            let da = Vec2::from_angle(start);
            return Some(vec![da.x * s, da.y * s]);
        }
        match &self.shape {
            ConeShape::HalfSpace => {
                let mut c = vec![0.0; d];
                c[0] = 1.5 * r;
                Some(c)
            }
            ConeShape::Circular { alpha } if (*alpha - FRAC_PI_2).abs() <= 1e-12 => {
                let mut c = vec![0.0; d];
                c[0] = 1.5 * r;
                Some(c)
            }
            ConeShape::Polyhedral { normals } => {
                let facet_point = self.poly_facet_point(0)?;
                let margin = normals
                    .iter()
                    .filter(|n| dot(n, &normals[0]) < 1.0 - 1e-12)
                    .map(|n| dot(n, &facet_point))
                    .fold(f64::INFINITY, f64::min);
                let s = if margin.is_finite() {
                    1.5 * r / margin
                } else {
                    1.5 * r
                };
                Some(facet_point.iter().map(|v| v * s).collect())
            }
            _ => None,
        }
    }

    fn poly_facet_point(&self, facet: usize) -> Option<Vec<f64>> {
        let ConeShape::Polyhedral { normals } = &self.shape else {
            return None;
        };
        let nf = &normals[facet];
        match self.poly.rank {
            1 => {
                let n3 = Vec3::from_slice(nf);
                if self.ambient_dim == 3 {
                    Some(n3.any_orthogonal().to_array().to_vec())
                } else {
                    let mut e = vec![0.0; self.ambient_dim];
                    let k = (0..self.ambient_dim)
                        .min_by(|&a, &b| nf[a].abs().total_cmp(&nf[b].abs()))
                        .unwrap();
                    e[k] = 1.0;
                    let s = dot(&e, nf);
                    let v: Vec<f64> = e.iter().zip(nf).map(|(a, b)| a - s * b).collect();
                    let l = norm(&v);
                    Some(v.iter().map(|x| x / l).collect())
                }
            }
            _ if self.ambient_dim <= 3 && !self.poly.rays.is_empty() => {
                let on: Vec<Vec3> = self
                    .poly
                    .rays
                    .iter()
                    .copied()
                    .filter(|r| dot(&r.to_array()[..self.ambient_dim], nf).abs() <= 1e-9)
                    .collect();
                if on.is_empty() {
                    return None;
                }
                let sum = on.iter().fold(Vec3::ZERO, |a, &b| a + b).normalized();
                Some(sum.to_array()[..self.ambient_dim].to_vec())
            }
            _ => None,
        }
    }
}

/// A point of `∂M − {0}` with its inward unit normal `ν*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Vec<f64>,
    pub inward_normal: Vec<f64>,
}

/// Projection of `x` onto `{y : <n_i, y> >= 0 ∀ i}` by Dykstra's alternating
/// projections.
fn project_onto_halfspaces(normals: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let k = normals.len();
    let d = x.len();
    let mut y = x.to_vec();
    let mut incr = vec![vec![0.0; d]; k];
    for _ in 0..10_000 {
        let prev = y.clone();
        for (i, n) in normals.iter().enumerate() {
            let z: Vec<f64> = y.iter().zip(&incr[i]).map(|(a, b)| a + b).collect();
            let s = dot(n, &z);
            let p: Vec<f64> = if s < 0.0 {
                z.iter().zip(n).map(|(a, b)| a - s * b).collect()
            } else {
                z.clone()
            };
            for j in 0..d {
                incr[i][j] = z[j] - p[j];
            }
            y = p;
        }
        let change: f64 = y.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        if change <= 1e-15 * (1.0 + norm(x)) {
            break;
        }
    }
    y
}

/// Rays and solid angle of a planar cone given by unit normals.
fn planar_from_normals(normals: &[Vec2]) -> Option<(f64, f64)> {
    let feasible = |c: Vec2| normals.iter().all(|n| n.dot(c) >= -1e-12);
    let mut rays: Vec<Vec2> = Vec::new();
    for n in normals {
        for c in [n.perp(), -n.perp()] {
            if feasible(c) && !rays.iter().any(|r| (*r - c).norm() < 1e-9) {
                rays.push(c);
            }
        }
    }
    match rays.len() {
        0 | 1 => None,
        _ => {
            // Pick the pair with the largest opening; orient counterclockwise.
            let mut best = (0, 1, -2.0_f64);
            for i in 0..rays.len() {
                for j in i + 1..rays.len() {
                    let c = -rays[i].dot(rays[j]);
                    if c > best.2 {
                        best = (i, j, c);
                    }
                }
            }
            let (a, b) = (rays[best.0], rays[best.1]);
            let cos = a.dot(b).clamp(-1.0, 1.0);
            if (cos + 1.0).abs() <= 1e-12 {
                // Half-plane: start at the ray from which the normal is a
                // counterclockwise quarter turn.
                let n = normals[0];
                let start = (-n.perp()).angle();
                return Some((start, PI));
            }
            let open = cos.acos();
            if open <= 1e-12 {
                return None;
            }
            let (start, end) = if a.cross(b) > 0.0 { (a, b) } else { (b, a) };
            let mid = (start + end).normalized();
            if !feasible(mid) {
                return None;
            }
            Some((start.angle(), open))
        }
    }
}

fn polyhedral_geometry(dim: usize, normals: &[Vec<f64>]) -> Result<PolyGeometry, ConeError> {
    if normals.is_empty() {
        return Err(ConeError::NoNormals);
    }
    for (i, n) in normals.iter().enumerate() {
        if n.len() != dim {
            return Err(ConeError::NormalDimension {
                index: i,
                got: n.len(),
                expected: dim,
            });
        }
        let l = norm(n);
        if (l - 1.0).abs() > 1e-9 {
            return Err(ConeError::NonUnitNormal {
                index: i,
                length: l,
            });
        }
    }
    let rank = span_rank(normals);
    let mut geo = PolyGeometry {
        rank,
        ..Default::default()
    };
    match dim {
        2 => {
            let ns: Vec<Vec2> = normals.iter().map(|n| Vec2::new(n[0], n[1])).collect();
            let (start, open) = planar_from_normals(&ns).ok_or(ConeError::EmptyInterior)?;
            let mid = Vec2::from_angle(start + 0.5 * open);
            geo.interior = vec![mid.x, mid.y];
            geo.planar = Some((start, open));
            geo.rays = vec![
                Vec2::from_angle(start).to_vec3(),
                Vec2::from_angle(start + open).to_vec3(),
            ];
            geo.solid_angle = open;
        }
        3 => {
            let ns: Vec<Vec3> = normals.iter().map(|n| Vec3::from_slice(n)).collect();
            solid_3d(&ns, rank, &mut geo)?;
        }
        _ => {
            let interior = strictly_feasible_point(normals).ok_or(ConeError::EmptyInterior)?;
            geo.interior = interior;
            let (omega, err) = monte_carlo_solid_angle(dim, normals, 1 << 20);
            geo.solid_angle = omega;
            geo.solid_angle_error = err;
        }
    }
    if normals
        .iter()
        .map(|n| dot(n, &geo.interior))
        .fold(f64::INFINITY, f64::min)
        <= 1e-9
    {
        return Err(ConeError::EmptyInterior);
    }
    Ok(geo)
}

fn span_rank(normals: &[Vec<f64>]) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for n in normals {
        let mut v = n.clone();
        for b in &basis {
            let s = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= s * bi;
            }
        }
        let l = norm(&v);
        if l > 1e-9 {
            basis.push(v.iter().map(|x| x / l).collect());
        }
    }
    basis.len()
}

fn solid_3d(ns: &[Vec3], rank: usize, geo: &mut PolyGeometry) -> Result<(), ConeError> {
    match rank {
        1 => {
            if ns.iter().any(|n| n.dot(ns[0]) < 0.0) {
                return Err(ConeError::EmptyInterior);
            }
            geo.interior = ns[0].to_array().to_vec();
            geo.solid_angle = 2.0 * PI;
        }
        2 => {
            // M = line x planar cone; the link is a lune of twice the planar
            // opening.
            let e1 = ns[0];
            let other = ns
                .iter()
                .map(|n| *n - e1 * n.dot(e1))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap();
            let e2 = other.normalized();
            let planar: Vec<Vec2> = ns
                .iter()
                .map(|n| Vec2::new(n.dot(e1), n.dot(e2)).normalized())
                .collect();
            let (start, open) = planar_from_normals(&planar).ok_or(ConeError::EmptyInterior)?;
            let mid = Vec2::from_angle(start + 0.5 * open);
            geo.interior = (e1 * mid.x + e2 * mid.y).to_array().to_vec();
            let a = Vec2::from_angle(start);
            let b = Vec2::from_angle(start + open);
            geo.rays = vec![e1 * a.x + e2 * a.y, e1 * b.x + e2 * b.y];
            geo.solid_angle = 2.0 * open;
        }
        _ => {
            let feasible = |c: Vec3| ns.iter().all(|n| n.dot(c) >= -1e-12);
            let mut rays: Vec<Vec3> = Vec::new();
            for i in 0..ns.len() {
                for j in i + 1..ns.len() {
                    let c = ns[i].cross(ns[j]);
                    if c.norm() < 1e-12 {
                        continue;
                    }
                    let c = c.normalized();
                    for cand in [c, -c] {
                        if feasible(cand) && !rays.iter().any(|r| (*r - cand).norm() < 1e-9) {
                            rays.push(cand);
                        }
                    }
                }
            }
            if rays.len() < 3 {
                return Err(ConeError::EmptyInterior);
            }
            let center = rays.iter().fold(Vec3::ZERO, |a, &b| a + b).normalized();
            let u = center.any_orthogonal();
            let v = center.cross(u);
            rays.sort_by(|a, b| {
                let ta = a.dot(v).atan2(a.dot(u));
                let tb = b.dot(v).atan2(b.dot(u));
                ta.total_cmp(&tb)
            });
            let mut omega = 0.0;
            for k in 0..rays.len() {
                let a = rays[k];
                let b = rays[(k + 1) % rays.len()];
                omega += triangle_solid_angle(center, a, b);
            }
            geo.interior = center.to_array().to_vec();
            geo.rays = rays;
            geo.solid_angle = omega;
        }
    }
    Ok(())
}

/// Solid angle of the spherical triangle spanned by unit vectors (Van
/// Oosterom and Strackee).
pub(crate) fn triangle_solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = a.dot(b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

fn strictly_feasible_point(normals: &[Vec<f64>]) -> Option<Vec<f64>> {
    // Perceptron iteration on <n_i, x> >= 1.
    let d = normals[0].len();
    let mut x = vec![0.0; d];
    for n in normals {
        for (xi, ni) in x.iter_mut().zip(n) {
            *xi += ni;
        }
    }
    for _ in 0..100_000 {
        let worst = normals
            .iter()
            .min_by(|a, b| dot(a, &x).total_cmp(&dot(b, &x)))
            .unwrap();
        if dot(worst, &x) >= 1.0 {
            let l = norm(&x);
            return Some(x.iter().map(|v| v / l).collect());
        }
        for (xi, ni) in x.iter_mut().zip(worst) {
            *xi += ni;
        }
    }
    None
}

/// Monte Carlo estimate of the solid angle with a 3-sigma error bound.
fn monte_carlo_solid_angle(dim: usize, normals: &[Vec<f64>], samples: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let mut hits = 0usize;
    let mut x = vec![0.0; dim];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = standard_normal(&mut rng);
        }
        if normals.iter().all(|n| dot(n, &x) >= 0.0) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let total = unit_sphere_measure(dim - 1);
    let sigma = (p * (1.0 - p) / samples as f64).sqrt();
    (p * total, 3.0 * sigma * total)
}

pub(crate) fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn standard_normal(rng: &mut impl RngCore) -> f64 {
    // Box-Muller; u1 in (0, 1].
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sphere_measures() {
        assert!(close(unit_sphere_measure(0), 2.0, 1e-15));
        assert!(close(unit_sphere_measure(1), 2.0 * PI, 1e-14));
        assert!(close(unit_sphere_measure(2), 4.0 * PI, 1e-14));
        assert!(close(unit_sphere_measure(3), 2.0 * PI * PI, 1e-13));
        assert!(close(unit_sphere_measure(4), 8.0 * PI * PI / 3.0, 1e-13));
    }

    #[test]
    fn solid_angle_examples() {
        assert!(close(ConeSpec::sector(PI).unwrap().solid_angle(), PI, 1e-15));
        let half = ConeSpec::circular(3, FRAC_PI_2).unwrap();
        assert!(close(half.solid_angle(), 2.0 * PI, 1e-12));
        let c = ConeSpec::circular(3, FRAC_PI_3).unwrap();
        assert!(close(c.solid_angle(), PI, 1e-12));
        assert!(close(
            ConeSpec::halfspace(3).unwrap().solid_angle(),
            2.0 * PI,
            1e-14
        ));
        // Dimension 2: circular(alpha) is a sector of opening 2 alpha.
        let c2 = ConeSpec::circular(2, 0.4).unwrap();
        assert!(close(c2.solid_angle(), 0.8, 1e-15));
        // Dimension 4 half-angle π/2 is half of c_3.
        let c4 = ConeSpec::circular(4, FRAC_PI_2).unwrap();
        assert!(close(c4.solid_angle(), PI * PI, 1e-12));
    }

    #[test]
    fn convexity() {
        assert!(ConeSpec::sector(FRAC_PI_2).unwrap().is_convex());
        assert!(ConeSpec::sector(PI).unwrap().is_convex());
        assert!(!ConeSpec::sector(1.5 * PI).unwrap().is_convex());
        assert!(!ConeSpec::circular(3, 2.0 * FRAC_PI_3).unwrap().is_convex());
        assert!(ConeSpec::circular(3, FRAC_PI_2).unwrap().is_convex());
    }

    #[test]
    fn invalid_specs() {
        assert!(ConeSpec::sector(0.0).is_err());
        assert!(ConeSpec::sector(2.0 * PI).is_err());
        assert!(ConeSpec::circular(3, PI).is_err());
        assert!(ConeSpec::new(3, ConeShape::Sector { theta: 1.0 }).is_err());
        assert!(ConeSpec::polyhedral(3, vec![vec![0.0, 0.0, 2.0]]).is_err());
        assert!(
            ConeSpec::polyhedral(3, vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]).is_err()
        );
    }

    #[test]
    fn membership() {
        let s = ConeSpec::sector(FRAC_PI_2).unwrap();
        assert!(s.contains(&[1.0, 1.0]));
        assert!(!s.contains(&[-1.0, 1.0]));
        assert!(s.contains(&[0.0, 0.0]));
        let wide = ConeSpec::sector(1.5 * PI).unwrap();
        assert!(wide.contains(&[-1.0, -0.5]));
        assert!(!wide.contains(&[0.5, -1.0]));
        let c = ConeSpec::circular(3, FRAC_PI_4).unwrap();
        assert!(c.contains(&[0.0, 0.0, 1.0]));
        assert!(!c.contains(&[1.0, 0.0, 0.5]));
        let d = c.distance_to_boundary(&[0.0, 0.0, 1.0]).unwrap();
        assert!(close(d, FRAC_PI_4.cos(), 1e-15));
    }

    #[test]
    fn boundary_curvature() {
        let c = ConeSpec::circular(3, FRAC_PI_4).unwrap();
        let s = FRAC_PI_4.sin();
        let p = c.boundary_point(&[s, 0.0, s]).unwrap();
        let parallel = [0.0, 1.0, 0.0];
        assert!(close(c.boundary_II(&p, &parallel).unwrap(), 1.0, 1e-12));
        let ruling = [s, 0.0, s];
        assert!(close(c.boundary_II(&p, &ruling).unwrap(), 0.0, 1e-12));
        assert_eq!(c.boundary_point(&[0.0, 0.0, 0.0]), Err(ConeError::AtVertex));
        let sector = ConeSpec::sector(1.5 * PI).unwrap();
        let q = sector.boundary_point(&[2.0, 0.0]).unwrap();
        assert_eq!(sector.boundary_II(&q, &[1.0, 0.0]).unwrap(), 0.0);
        assert!(close(q.inward_normal[1], 1.0, 1e-15));
    }

    #[test]
    fn polyhedral_octant() {
        let octant = ConeSpec::polyhedral(
            3,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap();
        assert!(close(octant.solid_angle(), PI / 2.0, 1e-12));
        assert!(octant.contains(&[1.0, 2.0, 3.0]));
        assert!(!octant.contains(&[1.0, -2.0, 3.0]));
        assert_eq!(
            octant.boundary_point(&[1.0, 0.0, 0.0]).unwrap_err(),
            ConeError::OnEdge
        );
        let d = octant.distance_to_boundary(&[-1.0, -1.0, 2.0]).unwrap();
        assert!(close(d, 2.0_f64.sqrt(), 1e-9));
        // A wedge (rank 2) is a lune.
        let wedge =
            ConeSpec::polyhedral(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(close(wedge.solid_angle(), PI, 1e-12));
    }

    #[test]
    fn polyhedral_planar_matches_sector() {
        // Quarter plane x >= 0, y >= 0.
        let q = ConeSpec::polyhedral(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (start, open) = q.planar_sector().unwrap();
        assert!(close(open, FRAC_PI_2, 1e-12));
        assert!(close(start, 0.0, 1e-12));
        let h = ConeSpec::polyhedral(2, vec![vec![0.0, 1.0]]).unwrap();
        assert!(h.is_halfspace_like());
        assert!(close(h.solid_angle(), PI, 1e-12));
    }

    #[test]
    fn serde_shape_tags() {
        let c = ConeSpec::circular(3, FRAC_PI_4).unwrap();
        assert_eq!(c.label(), "circular(alpha=0.785398, dim=3)");
    }
}
