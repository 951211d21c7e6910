//! Discrete relative boundaries `Σ` and their curvature quantities.
//!
//! Three representations share one type:
//!
//! * polylines in planar cones (open with both ends on `∂M`, or closed),
//! * meridian profiles `(ρ, z)` of surfaces of revolution about the last
//!   axis of a three-dimensional cone,
//! * triangle meshes in three-dimensional cones.
//!
//! Points are stored as [`Vec3`]; planar points have `z = 0` and meridian
//! points are stored as `(ρ, 0, z)`, i.e. already placed in the `xz`
//! half-plane. Every constructor orients the surface so that the enclosed
//! volume is positive, which makes the normal field point into `Ω`.

pub(crate) mod intersect;
mod quantities;
mod refine;
pub mod shapes;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cone::{ConeError, ConeShape, ConeSpec};
use crate::tolerance::Tolerances;
use crate::vec::{Vec2, Vec3};

pub use quantities::{BoundaryVertex, SurfaceQuantities};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("{0}")]
    UnsupportedCone(&'static str),
    #[error("need at least {need} vertices, got {got}")]
    TooFewVertices { got: usize, need: usize },
    #[error("vertex {index} lies outside the cone")]
    OutsideCone { index: usize },
    #[error("boundary vertex {index} is off the cone boundary by {distance:e}")]
    BoundaryOffCone { index: usize, distance: f64 },
    #[error("vertex {index} is flagged as boundary but the surface has no boundary there")]
    BadBoundaryFlag { index: usize },
    #[error("interior profile vertex {index} lies on the rotation axis")]
    InteriorOnAxis { index: usize },
    #[error("elements {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("element {index} has zero measure")]
    ZeroMeasureElement { index: usize },
    #[error("element {index} references a missing vertex")]
    InvalidElement { index: usize },
    #[error("enclosed volume is undefined for a degenerate surface")]
    Degenerate,
    #[error("surface boundary touches a polyhedral edge at vertex {index}")]
    OnEdge { index: usize },
    #[error("{0} vertices but {1} boundary flags")]
    FlagCount(usize, usize),
    #[error("refinement factor must be a positive power of two for meshes, got {0}")]
    BadFactor(usize),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Polyline,
    Axisymmetric,
    TriangleMesh,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteHypersurface {
    representation: Representation,
    cone: ConeSpec,
    points: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    closed: bool,
    boundary: Vec<bool>,
    flipped: bool,
}

/// On-disk layout shared by all representations. Polyline and profile
/// elements are index pairs, mesh elements index triples. Profile vertices
/// are `[ρ, z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub representation: Representation,
    pub vertices: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
    pub boundary_flags: Vec<bool>,
}

fn planar_or_euclidean(cone: &ConeSpec) -> bool {
    cone.planar_sector().is_some() || matches!(cone.shape(), ConeShape::Euclidean)
}

/// Cones with rotational symmetry about the last axis in dimension 3.
pub fn supports_axisymmetric(cone: &ConeSpec) -> bool {
    cone.ambient_dim() == 3
        && matches!(
            cone.shape(),
            ConeShape::Circular { .. } | ConeShape::HalfSpace | ConeShape::Euclidean
        )
}

impl DiscreteHypersurface {
    /// Polyline in a planar cone. Open polylines must start and end on `∂M`.
    pub fn polyline(cone: &ConeSpec, pts: &[Vec2], closed: bool) -> Result<Self, SurfaceError> {
        let mut s = Self::polyline_unchecked(cone, pts, closed)?;
        s.orient();
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn polyline_unchecked(
        cone: &ConeSpec,
        pts: &[Vec2],
        closed: bool,
    ) -> Result<Self, SurfaceError> {
        if cone.ambient_dim() != 2 || !planar_or_euclidean(cone) {
            return Err(SurfaceError::UnsupportedCone(
                "polylines need a two-dimensional cone",
            ));
        }
        let need = if closed { 3 } else { 2 };
        if pts.len() < need {
            return Err(SurfaceError::TooFewVertices {
                got: pts.len(),
                need,
            });
        }
        let mut boundary = vec![false; pts.len()];
        if !closed {
            boundary[0] = true;
            *boundary.last_mut().unwrap() = true;
        }
        Ok(DiscreteHypersurface {
            representation: Representation::Polyline,
            cone: cone.clone(),
            points: pts.iter().map(|p| p.to_vec3()).collect(),
            triangles: Vec::new(),
            closed,
            boundary,
            flipped: false,
        })
    }

    /// Meridian profile `(ρ, z)` of a surface of revolution. Each end lies
    /// either on the axis (`ρ = 0`) or on `∂M`.
    pub fn axisymmetric(cone: &ConeSpec, profile: &[Vec2]) -> Result<Self, SurfaceError> {
        let mut s = Self::axisymmetric_unchecked(cone, profile)?;
        s.orient();
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn axisymmetric_unchecked(
        cone: &ConeSpec,
        profile: &[Vec2],
    ) -> Result<Self, SurfaceError> {
        if !supports_axisymmetric(cone) {
            return Err(SurfaceError::UnsupportedCone(
                "profiles need a circular, half-space or Euclidean cone in dimension 3",
            ));
        }
        if profile.len() < 3 {
            return Err(SurfaceError::TooFewVertices {
                got: profile.len(),
                need: 3,
            });
        }
        let tol = Tolerances::default().on_boundary;
        let mut points: Vec<Vec3> = Vec::with_capacity(profile.len());
        let mut boundary = vec![false; profile.len()];
        let last = profile.len() - 1;
        for (i, p) in profile.iter().enumerate() {
            let scale = p.norm().max(1.0);
            let on_axis = p.x.abs() <= tol * scale;
            if i == 0 || i == last {
                if !on_axis {
                    boundary[i] = true;
                }
            } else if on_axis || p.x < 0.0 {
                return Err(SurfaceError::InteriorOnAxis { index: i });
            }
            let rho = if on_axis { 0.0 } else { p.x };
            points.push(Vec3::new(rho, 0.0, p.y));
        }
        Ok(DiscreteHypersurface {
            representation: Representation::Axisymmetric,
            cone: cone.clone(),
            points,
            triangles: Vec::new(),
            closed: false,
            boundary,
            flipped: false,
        })
    }

    /// Triangle mesh. When `boundary_flags` is `None` the flags are taken from
    /// the topological boundary (edges with a single incident triangle).
    pub fn mesh(
        cone: &ConeSpec,
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        boundary_flags: Option<Vec<bool>>,
    ) -> Result<Self, SurfaceError> {
        if cone.ambient_dim() != 3 {
            return Err(SurfaceError::UnsupportedCone(
                "triangle meshes need a three-dimensional cone",
            ));
        }
        if vertices.len() < 3 || triangles.is_empty() {
            return Err(SurfaceError::TooFewVertices {
                got: vertices.len(),
                need: 3,
            });
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len())
                || tri[0] == tri[1]
                || tri[1] == tri[2]
                || tri[0] == tri[2]
            {
                return Err(SurfaceError::InvalidElement { index: t });
            }
        }
        let topo = topological_boundary(vertices.len(), &triangles);
        let boundary = match boundary_flags {
            Some(f) => {
                if f.len() != vertices.len() {
                    return Err(SurfaceError::FlagCount(vertices.len(), f.len()));
                }
                if let Some(i) = (0..f.len()).find(|&i| f[i] && !topo[i]) {
                    return Err(SurfaceError::BadBoundaryFlag { index: i });
                }
                f
            }
            None => topo,
        };
        let closed = !boundary.iter().any(|&b| b);
        let mut s = DiscreteHypersurface {
            representation: Representation::TriangleMesh,
            cone: cone.clone(),
            points: vertices,
            triangles,
            closed,
            boundary,
            flipped: false,
        };
        s.orient();
        s.validate()?;
        Ok(s)
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_closed(&self) -> bool {
        match self.representation {
            Representation::Polyline => self.closed,
            Representation::Axisymmetric => !self.boundary.iter().any(|&b| b),
            Representation::TriangleMesh => self.closed,
        }
    }

    /// Whether the constructor reversed the input orientation.
    pub fn was_flipped(&self) -> bool {
        self.flipped
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    /// Dimension `n` of `Σ`.
    pub fn n(&self) -> usize {
        match self.representation {
            Representation::Polyline => 1,
            _ => 2,
        }
    }

    /// Position of vertex `i` in the cone's ambient space.
    pub fn ambient_point(&self, i: usize) -> Vec<f64> {
        self.points[i].to_array()[..self.cone.ambient_dim()].to_vec()
    }

    /// Index pairs of the segments of a polyline or profile.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let m = self.points.len();
        let mut segs: Vec<(usize, usize)> = (0..m - 1).map(|i| (i, i + 1)).collect();
        if self.representation == Representation::Polyline && self.closed {
            segs.push((m - 1, 0));
        }
        segs
    }

    /// Meridian coordinates `(ρ, z)` of a profile.
    pub fn profile(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| Vec2::new(p.x, p.z)).collect()
    }

    /// Total `H^n` measure.
    pub fn area(&self) -> f64 {
        match self.representation {
            Representation::Polyline => self
                .segments()
                .iter()
                .map(|&(a, b)| (self.points[b] - self.points[a]).norm())
                .sum(),
            Representation::Axisymmetric => self
                .segments()
                .iter()
                .map(|&(a, b)| {
                    let (pa, pb) = (self.points[a], self.points[b]);
                    match axis_cap(Vec2::new(pa.x, pa.z), Vec2::new(pb.x, pb.z)) {
                        Some((area, _)) => area,
                        None => PI * (pa.x + pb.x) * (pb - pa).norm(),
                    }
                })
                .sum(),
            Representation::TriangleMesh => self
                .triangles
                .iter()
                .map(|t| triangle_area(self.points[t[0]], self.points[t[1]], self.points[t[2]]))
                .sum(),
        }
    }

    /// Signed enclosed volume by the flux of `X`; the part of `∂Ω` on `∂M`
    /// contributes nothing because `X` is tangent there.
    pub(crate) fn signed_volume(&self) -> f64 {
        match self.representation {
            Representation::Polyline => {
                0.5 * self
                    .segments()
                    .iter()
                    .map(|&(a, b)| self.points[a].xy().cross(self.points[b].xy()))
                    .sum::<f64>()
            }
            Representation::Axisymmetric => {
                PI / 3.0
                    * self
                        .segments()
                        .iter()
                        .map(|&(a, b)| {
                            let (pa, pb) = (self.points[a], self.points[b]);
                            let lens = axis_cap(Vec2::new(pa.x, pa.z), Vec2::new(pb.x, pb.z))
                                .map_or(0.0, |(_, lens)| lens);
                            (pa.x + pb.x) * (pa.x * pb.z - pa.z * pb.x) + 3.0 / PI * lens
                        })
                        .sum::<f64>()
            }
            Representation::TriangleMesh => {
                self.triangles
                    .iter()
                    .map(|t| {
                        let (a, b, c) = (self.points[t[0]], self.points[t[1]], self.points[t[2]]);
                        a.dot(b.cross(c))
                    })
                    .sum::<f64>()
                    / 6.0
            }
        }
    }

    pub fn enclosed_volume(&self) -> Result<f64, SurfaceError> {
        let area = self.area();
        let v = self.signed_volume();
        if self.points.len() < 3 || area <= 0.0 || v.abs() <= 1e-14 * area.powf(1.5).max(1e-300)
        {
            return Err(SurfaceError::Degenerate);
        }
        Ok(v)
    }

    /// `(area, enclosed volume)`.
    pub fn measure(&self) -> Result<(f64, f64), SurfaceError> {
        Ok((self.area(), self.enclosed_volume()?))
    }

    fn orient(&mut self) {
        if self.points.len() < 3 || self.signed_volume() >= 0.0 {
            return;
        }
        match self.representation {
            Representation::Polyline | Representation::Axisymmetric => {
                self.points.reverse();
                self.boundary.reverse();
            }
            Representation::TriangleMesh => {
                for t in &mut self.triangles {
                    t.swap(1, 2);
                }
            }
        }
        self.flipped = true;
    }

    /// Checks every structural invariant: vertices in the cone, boundary
    /// vertices on `∂M`, no zero-measure elements, no self-intersection.
    pub fn validate(&self) -> Result<(), SurfaceError> {
        let tol = Tolerances::default();
        let d = self.cone.ambient_dim();
        for (i, p) in self.points.iter().enumerate() {
            let x = &p.to_array()[..d];
            let scale = p.norm().max(1.0);
            if !self.cone.contains_tol(x, tol.on_boundary * scale) {
                return Err(SurfaceError::OutsideCone { index: i });
            }
            if self.boundary[i] {
                let dist = self.cone.distance_to_boundary(x)?;
                if dist > tol.on_boundary * scale {
                    return Err(SurfaceError::BoundaryOffCone { index: i, distance: dist });
                }
                if let Err(ConeError::OnEdge) = self.cone.boundary_point_tol(x, tol.on_boundary) {
                    return Err(SurfaceError::OnEdge { index: i });
                }
            }
        }
        match self.representation {
            Representation::Polyline | Representation::Axisymmetric => {
                for (k, (a, b)) in self.segments().into_iter().enumerate() {
                    if (self.points[b] - self.points[a]).norm() == 0.0 && self.points.len() > 2 {
                        return Err(SurfaceError::ZeroMeasureElement { index: k });
                    }
                }
                if let Some((i, j)) = intersect::polyline_self_intersection(
                    &self.points.iter().map(|p| self.planar(*p)).collect::<Vec<_>>(),
                    self.representation == Representation::Polyline && self.closed,
                ) {
                    return Err(SurfaceError::SelfIntersection(i, j));
                }
            }
            Representation::TriangleMesh => {
                for (k, t) in self.triangles.iter().enumerate() {
                    let a = triangle_area(self.points[t[0]], self.points[t[1]], self.points[t[2]]);
                    if a <= 0.0 {
                        return Err(SurfaceError::ZeroMeasureElement { index: k });
                    }
                }
                if let Some((i, j)) = intersect::mesh_self_intersection(&self.points, &self.triangles)
                {
                    return Err(SurfaceError::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }

    /// In-plane coordinates of a polyline point or `(ρ, z)` of a profile point.
    fn planar(&self, p: Vec3) -> Vec2 {
        match self.representation {
            Representation::Axisymmetric => Vec2::new(p.x, p.z),
            _ => p.xy(),
        }
    }

    /// Dilation about the vertex.
    pub fn scaled(&self, lambda: f64) -> DiscreteHypersurface {
        let mut s = self.clone();
        for p in &mut s.points {
            *p = *p * lambda;
        }
        s
    }

    pub fn quantities(&self) -> Result<SurfaceQuantities, SurfaceError> {
        quantities::compute(self)
    }

    /// Max over boundary vertices of `|<N, ν*>|`; zero without boundary.
    pub fn contact_angle_residual(&self) -> Result<f64, SurfaceError> {
        Ok(self.quantities()?.contact_residual())
    }

    /// Discrete Dirichlet energy `∫ |∇u|²` of a per-vertex function.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        match self.representation {
            Representation::Polyline => self
                .segments()
                .iter()
                .map(|&(a, b)| {
                    let l = (self.points[b] - self.points[a]).norm();
                    (u[b] - u[a]).powi(2) / l
                })
                .sum(),
            Representation::Axisymmetric => self
                .segments()
                .iter()
                .map(|&(a, b)| {
                    let (pa, pb) = (self.points[a], self.points[b]);
                    let l = (pb - pa).norm();
                    (u[b] - u[a]).powi(2) / l * PI * (pa.x + pb.x)
                })
                .sum(),
            Representation::TriangleMesh => {
                let mut e = 0.0;
                for t in &self.triangles {
                    for k in 0..3 {
                        let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                        let cot = cot_at(self.points[o], self.points[i], self.points[j]);
                        e += 0.5 * cot * (u[i] - u[j]).powi(2);
                    }
                }
                e
            }
        }
    }

    /// Refines by `factor` (segments are split into `factor` pieces; meshes
    /// are subdivided `log2(factor)` times). New vertices are placed on
    /// locally fitted circles or spheres, and new boundary vertices are
    /// snapped back to `∂M`.
    pub fn refine(&self, factor: usize) -> Result<DiscreteHypersurface, SurfaceError> {
        refine::refine(self, factor)
    }

    pub fn to_file(&self) -> SurfaceFile {
        let vertices = match self.representation {
            Representation::Polyline => self.points.iter().map(|p| vec![p.x, p.y]).collect(),
            Representation::Axisymmetric => self.points.iter().map(|p| vec![p.x, p.z]).collect(),
            Representation::TriangleMesh => self.points.iter().map(|p| p.to_array().to_vec()).collect(),
        };
        let elements = match self.representation {
            Representation::TriangleMesh => self.triangles.iter().map(|t| t.to_vec()).collect(),
            _ => self.segments().iter().map(|&(a, b)| vec![a, b]).collect(),
        };
        SurfaceFile {
            representation: self.representation,
            vertices,
            elements,
            boundary_flags: self.boundary.clone(),
        }
    }

    pub fn from_file(cone: &ConeSpec, file: &SurfaceFile) -> Result<Self, SurfaceError> {
        let m = file.vertices.len();
        if file.boundary_flags.len() != m {
            return Err(SurfaceError::FlagCount(m, file.boundary_flags.len()));
        }
        let dim_needed = match file.representation {
            Representation::TriangleMesh => 3,
            _ => 2,
        };
        if let Some(i) = file.vertices.iter().position(|v| v.len() != dim_needed) {
            return Err(SurfaceError::InvalidElement { index: i });
        }
        match file.representation {
            Representation::Polyline | Representation::Axisymmetric => {
                // Elements must chain the vertices in order.
                for (k, e) in file.elements.iter().enumerate() {
                    let ok = e.len() == 2 && e[0] < m && e[1] < m && (e[1] == e[0] + 1 || (e[0] == m - 1 && e[1] == 0));
                    if !ok {
                        return Err(SurfaceError::InvalidElement { index: k });
                    }
                }
                let closed = file.elements.iter().any(|e| e[0] == m - 1 && e[1] == 0);
                let pts: Vec<Vec2> = file.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
                let s = if file.representation == Representation::Polyline {
                    DiscreteHypersurface::polyline(cone, &pts, closed)?
                } else {
                    DiscreteHypersurface::axisymmetric(cone, &pts)?
                };
                // Flags are derived; reject files that disagree.
                let mut flags = file.boundary_flags.clone();
                if s.flipped {
                    flags.reverse();
                }
                if let Some(i) = (0..m).find(|&i| flags[i] != s.boundary[i]) {
                    return Err(SurfaceError::BadBoundaryFlag { index: i });
                }
                Ok(s)
            }
            Representation::TriangleMesh => {
                let mut tris = Vec::with_capacity(file.elements.len());
                for (k, e) in file.elements.iter().enumerate() {
                    if e.len() != 3 {
                        return Err(SurfaceError::InvalidElement { index: k });
                    }
                    tris.push([e[0], e[1], e[2]]);
                }
                let verts = file.vertices.iter().map(|v| Vec3::from_slice(v)).collect();
                DiscreteHypersurface::mesh(cone, verts, tris, Some(file.boundary_flags.clone()))
            }
        }
    }
}

/// A meridian segment with one end on the axis sweeps a cone; it is
/// integrated instead as the spherical cap through its two ends, which is
/// exact for spheres. Returns the cap area and the signed volume between the
/// cap and the cone (positive when the cap bulges out of the region).
pub(crate) fn axis_cap(a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let (ring, axis, sign) = if b.x == 0.0 && a.x > 0.0 {
        (a, b, 1.0)
    } else if a.x == 0.0 && b.x > 0.0 {
        (b, a, -1.0)
    } else {
        return None;
    };
    let h = axis.y - ring.y;
    let r2 = ring.x * ring.x + h * h;
    Some((PI * r2, sign * PI * h * r2 / 6.0))
}

pub(crate) fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(c - a).norm()
}

/// Cotangent of the angle at `o` in the triangle `(o, a, b)`.
pub(crate) fn cot_at(o: Vec3, a: Vec3, b: Vec3) -> f64 {
    let (u, v) = (a - o, b - o);
    u.dot(v) / u.cross(v).norm()
}

fn topological_boundary(nv: usize, tris: &[[usize; 3]]) -> Vec<bool> {
    let mut edges: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    let mut flags = vec![false; nv];
    let mut i = 0;
    while i < edges.len() {
        let mut j = i;
        while j < edges.len() && edges[j] == edges[i] {
            j += 1;
        }
        if j - i == 1 {
            flags[edges[i].0] = true;
            flags[edges[i].1] = true;
        }
        i = j;
    }
    flags
}
