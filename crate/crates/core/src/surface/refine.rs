//! Subdivision that keeps circles on circles and spheres on spheres.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::quantities::topology;
use super::shapes::subdivide;
use crate::linalg::fit_sphere;
use super::{DiscreteHypersurface, Representation, SurfaceError};
use crate::vec::{Vec2, Vec3};

fn circumcenter(a: Vec2, b: Vec2, c: Vec2) -> Option<(Vec2, f64)> {
    let (u, v) = (b - a, c - a);
    let d = 2.0 * u.cross(v);
    if d.abs() <= 1e-12 * u.norm() * v.norm() {
        return None;
    }
    let center = a + (v.norm_sq() * u.perp() - u.norm_sq() * v.perp()) / d;
    Some((center, (a - center).norm()))
}

/// Point at fraction `t` along the short arc from `a` to `b` on the circle
/// `(center, r)`.
fn on_arc(center: Vec2, r: f64, a: Vec2, b: Vec2, t: f64) -> Vec2 {
    let ta = (a - center).angle();
    let mut d = (b - center).angle() - ta;
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    center + Vec2::from_angle(ta + t * d) * r
}

fn refine_curve(s: &DiscreteHypersurface, factor: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    let pts: Vec<Vec2> = match s.representation() {
        Representation::Axisymmetric => s.profile(),
        _ => s.points().iter().map(|p| p.xy()).collect(),
    };
    let m = pts.len();
    let closed = s.representation() == Representation::Polyline && s.is_closed();
    let axisym = s.representation() == Representation::Axisymmetric;
    let flags = s.boundary_flags();
    let ghost = |p: Vec2| Vec2::new(-p.x, p.y);
    let before = |a: usize| -> Option<Vec2> {
        if a > 0 {
            Some(pts[a - 1])
        } else if closed {
            Some(pts[m - 1])
        } else if axisym && !flags[0] {
            Some(ghost(pts[1]))
        } else {
            None
        }
    };
    let after = |b: usize| -> Option<Vec2> {
        if b + 1 < m {
            Some(pts[b + 1])
        } else if closed {
            Some(pts[(b + 1) % m])
        } else if axisym && !flags[m - 1] {
            Some(ghost(pts[m - 2]))
        } else {
            None
        }
    };
    let mut out: Vec<Vec2> = Vec::with_capacity(m * factor);
    for (a, b) in s.segments() {
        out.push(pts[a]);
        let (pa, pb) = (pts[a], pts[b]);
        let c1 = before(a).and_then(|p| circumcenter(p, pa, pb));
        let c2 = after(b).and_then(|n| circumcenter(pa, pb, n));
        for j in 1..factor {
            let t = j as f64 / factor as f64;
            let mut acc = Vec2::ZERO;
            let mut cnt = 0.0;
            for (c, r) in [c1, c2].into_iter().flatten() {
                acc += on_arc(c, r, pa, pb, t);
                cnt += 1.0;
            }
            out.push(if cnt > 0.0 { acc / cnt } else { pa + (pb - pa) * t });
        }
    }
    if !closed {
        out.push(pts[m - 1]);
    }
    if axisym {
        DiscreteHypersurface::axisymmetric(s.cone(), &out)
    } else {
        DiscreteHypersurface::polyline(s.cone(), &out, closed)
    }
}

fn refine_mesh_once(s: &DiscreteHypersurface) -> Result<DiscreteHypersurface, SurfaceError> {
    let q = s.quantities()?;
    let pts0 = s.points().to_vec();
    let topo = topology(pts0.len(), s.triangles());
    // A sphere through each vertex and its 1-ring; the osculating sphere of
    // the local fit is the fallback when the ring is degenerate.
    let spheres: Vec<Option<(Vec3, f64)>> = (0..pts0.len())
        .map(|i| {
            let mut ring: Vec<Vec3> = topo.one_ring[i].iter().map(|&j| pts0[j]).collect();
            ring.push(pts0[i]);
            let h_edge = ring.iter().map(|p| (*p - pts0[i]).norm()).fold(0.0, f64::max);
            let fitted = (ring.len() >= 4).then(|| fit_sphere(&ring, false)).flatten();
            match fitted {
                Some((c, r)) if r < 1e6 * h_edge && ((pts0[i] - c).norm() - r).abs() <= 1e-6 * h_edge => {
                    Some((c, r))
                }
                _ => {
                    let h = q.mean_curvature[i];
                    (h.abs() > 1e-9).then(|| (pts0[i] + q.normals[i] / h, 1.0 / h.abs()))
                }
            }
        })
        .collect();
    let cone = s.cone().clone();
    let d = cone.ambient_dim();
    let project = |p: Vec3, sph: &[(Vec3, f64)]| -> Vec3 {
        if sph.is_empty() {
            return p;
        }
        let mut acc = Vec3::ZERO;
        for (c, r) in sph {
            acc += *c + (p - *c).normalized() * *r;
        }
        acc / sph.len() as f64
    };
    let snap = |p: Vec3| -> Vec3 {
        cone.project_to_boundary(&p.to_array()[..d])
            .map(|v| Vec3::from_slice(&v))
            .unwrap_or(p)
    };
    let place = |a: usize, b: usize, mid: Vec3, on_rim: bool| {
        let sph: Vec<(Vec3, f64)> = [spheres[a], spheres[b]].into_iter().flatten().collect();
        let mut p = project(mid, &sph);
        if on_rim {
            for _ in 0..8 {
                p = project(snap(p), &sph);
            }
            p = snap(p);
        }
        p
    };
    let mut pts = pts0.clone();
    let mut flags = s.boundary_flags().to_vec();
    let tris = subdivide(&mut pts, s.triangles(), &mut flags, &place);
    DiscreteHypersurface::mesh(s.cone(), pts, tris, Some(flags))
}

pub(super) fn refine(s: &DiscreteHypersurface, factor: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    if factor == 0 {
        return Err(SurfaceError::BadFactor(factor));
    }
    if factor == 1 {
        return Ok(s.clone());
    }
    match s.representation() {
        Representation::TriangleMesh => {
            if !factor.is_power_of_two() {
                return Err(SurfaceError::BadFactor(factor));
            }
            let mut cur = s.clone();
            for _ in 0..factor.trailing_zeros() {
                cur = refine_mesh_once(&cur)?;
            }
            Ok(cur)
        }
        _ => refine_curve(s, factor),
    }
}
