//! Generators for the reference surfaces: arcs, spherical caps, spheres and
//! ellipsoids in each representation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use super::{DiscreteHypersurface, SurfaceError};
use crate::cone::{ConeShape, ConeSpec};
use crate::vec::{Vec2, Vec3};

/// `segments + 1` points on the circle `|x - center| = r` from angle `from`
/// to angle `to`.
pub fn arc_points(center: Vec2, r: f64, from: f64, to: f64, segments: usize) -> Vec<Vec2> {
    (0..=segments)
        .map(|k| {
            let t = from + (to - from) * k as f64 / segments as f64;
            center + Vec2::from_angle(t) * r
        })
        .collect()
}

fn planar(cone: &ConeSpec) -> Result<(f64, f64), SurfaceError> {
    cone.planar_sector()
        .ok_or(SurfaceError::UnsupportedCone("needs a planar cone with boundary"))
}

/// Arc of radius `r` about the vertex, from one boundary ray to the other.
pub fn vertex_arc(cone: &ConeSpec, r: f64, segments: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    let (start, open) = planar(cone)?;
    DiscreteHypersurface::polyline(
        cone,
        &arc_points(Vec2::ZERO, r, start, start + open, segments),
        false,
    )
}

/// Closed circle (needs to fit inside the cone).
pub fn circle(cone: &ConeSpec, center: Vec2, r: f64, segments: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    let mut pts = arc_points(center, r, 0.0, 2.0 * PI, segments);
    pts.pop();
    DiscreteHypersurface::polyline(cone, &pts, true)
}

/// Half-circle of radius `r` centered on the first boundary ray at distance
/// `center_distance` from the vertex.
pub fn half_disk_on_ray(
    cone: &ConeSpec,
    center_distance: f64,
    r: f64,
    segments: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let (start, _) = planar(cone)?;
    let c = Vec2::from_angle(start) * center_distance;
    DiscreteHypersurface::polyline(cone, &arc_points(c, r, start, start + PI, segments), false)
}

/// Arc of radius `r` meeting the first boundary ray at angle `π/2 - tilt`
/// at both ends: a circle whose center sits `r sin(tilt)` behind the ray.
pub fn tilted_arc(
    cone: &ConeSpec,
    tilt: f64,
    r: f64,
    center_distance: f64,
    segments: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let (start, _) = planar(cone)?;
    let d = Vec2::from_angle(start);
    let c = d * center_distance - d.perp() * (r * tilt.sin());
    DiscreteHypersurface::polyline(
        cone,
        &arc_points(c, r, start + tilt, start + PI - tilt, segments),
        false,
    )
}

/// Half-angle of the rotationally symmetric boundary, `None` without boundary.
fn axis_half_angle(cone: &ConeSpec) -> Option<f64> {
    match cone.shape() {
        ConeShape::Circular { alpha } => Some(*alpha),
        ConeShape::HalfSpace => Some(FRAC_PI_2),
        _ => None,
    }
}

/// Meridian profile of the sphere of radius `r` centered at height
/// `center_z` on the axis, clipped by `∂M`. Spheres that miss `∂M` are
/// returned whole.
pub fn axisymmetric_sphere(
    cone: &ConeSpec,
    center_z: f64,
    r: f64,
    segments: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let mut phi0 = PI;
    if let Some(alpha) = axis_half_angle(cone) {
        let disc = r * r - (center_z * alpha.sin()).powi(2);
        if disc > 0.0 {
            let t = center_z * alpha.cos() + disc.sqrt();
            let (rho, z) = (t * alpha.sin(), t * alpha.cos());
            if t > 0.0 {
                phi0 = rho.atan2(z - center_z);
            }
        }
    }
    let pts: Vec<Vec2> = (0..=segments)
        .map(|k| {
            let phi = phi0 * (1.0 - k as f64 / segments as f64);
            Vec2::new(r * phi.sin(), center_z + r * phi.cos())
        })
        .collect();
    DiscreteHypersurface::axisymmetric(cone, &pts)
}

/// Vertex cap `∂B_r ∩ M` as a meridian profile.
pub fn axisymmetric_vertex_cap(
    cone: &ConeSpec,
    r: f64,
    segments: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    axisymmetric_sphere(cone, 0.0, r, segments)
}

/// Closed spheroid with equatorial semi-axis `a` and polar semi-axis `c`.
pub fn axisymmetric_ellipsoid(
    cone: &ConeSpec,
    center_z: f64,
    a: f64,
    c: f64,
    segments: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let pts: Vec<Vec2> = (0..=segments)
        .map(|k| {
            let phi = PI * (1.0 - k as f64 / segments as f64);
            Vec2::new(a * phi.sin(), center_z + c * phi.cos())
        })
        .collect();
    DiscreteHypersurface::axisymmetric(cone, &pts)
}

fn orient_outward(pts: &[Vec3], tris: &mut [[usize; 3]], center: Vec3) {
    for t in tris.iter_mut() {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        let n = (b - a).cross(c - a);
        if n.dot((a + b + c) / 3.0 - center) < 0.0 {
            t.swap(1, 2);
        }
    }
}

/// One level of midpoint subdivision; `place` maps the edge endpoints, the
/// linear midpoint and a boundary-edge flag to the new vertex position.
pub(super) fn subdivide(
    pts: &mut Vec<Vec3>,
    tris: &[[usize; 3]],
    flags: &mut Vec<bool>,
    place: &dyn Fn(usize, usize, Vec3, bool) -> Vec3,
) -> Vec<[usize; 3]> {
    let mut edge_count: Vec<((usize, usize), usize)> = Vec::new();
    let mut keys: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    keys.sort_unstable();
    for k in keys {
        match edge_count.last_mut() {
            Some((e, c)) if *e == k => *c += 1,
            _ => edge_count.push((k, 1)),
        }
    }
    let mut mid = vec![0usize; edge_count.len()];
    for (slot, &((a, b), count)) in edge_count.iter().enumerate() {
        let on_boundary = count == 1;
        let p = place(a, b, (pts[a] + pts[b]) * 0.5, on_boundary);
        mid[slot] = pts.len();
        pts.push(p);
        flags.push(on_boundary);
    }
    let lookup = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        mid[edge_count.binary_search_by(|(e, _)| e.cmp(&key)).unwrap()]
    };
    let mut out = Vec::with_capacity(4 * tris.len());
    for t in tris {
        let (a, b, c) = (t[0], t[1], t[2]);
        let (ab, bc, ca) = (lookup(a, b), lookup(b, c), lookup(c, a));
        out.push([a, ab, ca]);
        out.push([b, bc, ab]);
        out.push([c, ca, bc]);
        out.push([ab, bc, ca]);
    }
    out
}

/// Icosphere of radius `r` with `level` subdivisions (`20·4^level` faces).
pub fn icosphere(
    cone: &ConeSpec,
    center: Vec3,
    r: f64,
    level: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    ellipsoid_mesh(cone, center, [r, r, r], level)
}

/// Image of an icosphere under `diag(axes)`: vertices lie exactly on the
/// ellipsoid.
pub fn ellipsoid_mesh(
    cone: &ConeSpec,
    center: Vec3,
    axes: [f64; 3],
    level: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let mut pts: Vec<Vec3> = raw
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
        .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut flags = vec![false; pts.len()];
    for _ in 0..level {
        tris = subdivide(&mut pts, &tris, &mut flags, &|_, _, p, _| p.normalized());
    }
    orient_outward(&pts, &mut tris, Vec3::ZERO);
    let pts = pts
        .into_iter()
        .map(|p| center + Vec3::new(p.x * axes[0], p.y * axes[1], p.z * axes[2]))
        .collect();
    DiscreteHypersurface::mesh(cone, pts, tris, Some(flags))
}

/// Spherical cap `{center + r·w : |w| = 1, angle(w, axis) <= polar}` as a
/// mesh with `level` subdivisions; the rim is flagged as boundary.
pub fn spherical_cap_mesh(
    cone: &ConeSpec,
    center: Vec3,
    axis: Vec3,
    r: f64,
    polar: f64,
    level: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let a = axis.normalized();
    let e1 = a.any_orthogonal();
    let e2 = a.cross(e1);
    let dir = |theta: f64, phi: f64| {
        (e1 * phi.cos() + e2 * phi.sin()) * theta.sin() + a * theta.cos()
    };
    let mut pts = vec![a];
    for k in 0..6 {
        pts.push(dir(0.5 * polar, k as f64 * PI / 3.0));
    }
    for k in 0..12 {
        pts.push(dir(polar, k as f64 * PI / 6.0));
    }
    let ring1 = |k: usize| 1 + k % 6;
    let ring2 = |k: usize| 7 + k % 12;
    let mut tris = Vec::new();
    for k in 0..6 {
        tris.push([0, ring1(k), ring1(k + 1)]);
        tris.push([ring1(k), ring2(2 * k), ring2(2 * k + 1)]);
        tris.push([ring1(k), ring2(2 * k + 1), ring1(k + 1)]);
        tris.push([ring1(k + 1), ring2(2 * k + 1), ring2(2 * k + 2)]);
    }
    let mut flags: Vec<bool> = (0..pts.len()).map(|i| i >= 7).collect();
    let cos_p = polar.cos();
    let sin_p = polar.sin();
    let place = move |_: usize, _: usize, p: Vec3, on_rim: bool| {
        if on_rim {
            let horiz = p - a * p.dot(a);
            horiz.normalized() * sin_p + a * cos_p
        } else {
            p.normalized()
        }
    };
    for _ in 0..level {
        tris = subdivide(&mut pts, &tris, &mut flags, &place);
    }
    orient_outward(&pts, &mut tris, Vec3::ZERO);
    let pts = pts.into_iter().map(|p| center + p * r).collect();
    DiscreteHypersurface::mesh(cone, pts, tris, Some(flags))
}

/// Vertex cap `∂B_r ∩ M` of a circular cone (or half-space) as a mesh.
pub fn vertex_cap_mesh(cone: &ConeSpec, r: f64, level: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    let alpha = axis_half_angle(cone)
        .ok_or(SurfaceError::UnsupportedCone("vertex caps need a circular cone or half-space"))?;
    spherical_cap_mesh(cone, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), r, alpha, level)
}

/// Flat disk of radius `r` in the boundary plane of a half-space, centered
/// at `center` (a point of the plane `z = 0`).
pub fn flat_disk_mesh(cone: &ConeSpec, center: Vec3, r: f64, level: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    let mut pts = vec![Vec3::ZERO];
    for k in 0..6 {
        pts.push(Vec3::new((k as f64 * PI / 3.0).cos(), (k as f64 * PI / 3.0).sin(), 0.0));
    }
    let mut tris: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    let mut flags: Vec<bool> = (0..pts.len()).map(|i| i > 0).collect();
    let place = |_: usize, _: usize, p: Vec3, on_rim: bool| if on_rim { p.normalized() } else { p };
    for _ in 0..level {
        tris = subdivide(&mut pts, &tris, &mut flags, &place);
    }
    let pts = pts.into_iter().map(|p| center + p * r).collect();
    DiscreteHypersurface::mesh(cone, pts, tris, None)
}
