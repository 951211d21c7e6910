//! Per-vertex curvature data.
//!
//! Sign conventions: `N` points into `Ω` and `nH` is the sum of the principal
//! curvatures with respect to `N`, so a round ball has `H = 1/r`. The
//! conormal `ν` at a boundary vertex is the unit tangent of `Σ` normal to
//! `∂Σ`, pointing into `Σ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{cot_at, DiscreteHypersurface, Representation, SurfaceError};
use crate::cone::{ConeError, ConeSpec};
use crate::linalg::qr_least_squares;
use crate::tolerance::Tolerances;
use crate::vec::{Vec2, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVertex {
    pub index: usize,
    /// Inward conormal `ν` of `∂Σ` in `Σ`.
    pub conormal: Vec3,
    /// Inward normal `ν*` of `∂M`.
    pub cone_normal: Vec3,
    /// `H^{n-1}` weight of the vertex on `∂Σ`.
    pub length_weight: f64,
    /// `II(N, N)` of `∂M`.
    pub ii_nn: f64,
    /// `∂g/∂ν` from the osculating data at the vertex.
    pub dg_dnu: f64,
    /// `<N, ν*>`, zero for orthogonal contact.
    pub contact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceQuantities {
    pub n: usize,
    pub normals: Vec<Vec3>,
    pub mean_curvature: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub support: Vec<f64>,
    pub area_weights: Vec<f64>,
    pub boundary: Vec<BoundaryVertex>,
    pub area: f64,
    pub enclosed_volume: f64,
}

impl SurfaceQuantities {
    /// Area-weighted mean of `H`.
    pub fn mean_h(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (h, w) in self.mean_curvature.iter().zip(&self.area_weights) {
            num += h * w;
            den += w;
        }
        num / den
    }

    /// `max_i |H_i - H̄| / |H̄|`.
    pub fn curvature_spread(&self) -> f64 {
        let hbar = self.mean_h();
        self.mean_curvature
            .iter()
            .map(|h| (h - hbar).abs())
            .fold(0.0, f64::max)
            / hbar.abs()
    }

    pub fn contact_residual(&self) -> f64 {
        self.boundary
            .iter()
            .map(|b| b.contact.abs())
            .fold(0.0, f64::max)
    }

    /// `u = 1 + H̄ g` per vertex.
    pub fn test_function(&self) -> Vec<f64> {
        let hbar = self.mean_h();
        self.support.iter().map(|g| 1.0 + hbar * g).collect()
    }
}

pub(super) fn compute(s: &DiscreteHypersurface) -> Result<SurfaceQuantities, SurfaceError> {
    // Degenerate surfaces (a flat disk on the boundary, say) still get
    // curvature data; their volume is reported as computed.
    let enclosed_volume = s.enclosed_volume().unwrap_or_else(|_| s.signed_volume());
    let mut q = match s.representation() {
        Representation::Polyline => polyline(s)?,
        Representation::Axisymmetric => axisymmetric(s)?,
        Representation::TriangleMesh => mesh(s)?,
    };
    q.enclosed_volume = enclosed_volume;
    q.area = s.area();
    Ok(q)
}

/// Signed curvature and normal at `p` of the circle through `a, p, b`
/// (traversed in that order), with the normal on the left of the direction
/// of travel. Collinear points give zero curvature.
fn circle_at(a: Vec2, p: Vec2, b: Vec2, at: Vec2) -> (f64, Vec2) {
    let (u, v) = (p - a, b - a);
    let d = 2.0 * u.cross(v);
    let chord = (b - a).normalized();
    let left = chord.perp();
    if d.abs() <= 1e-14 * u.norm() * v.norm() {
        return (0.0, left);
    }
    let cu = (v.norm_sq() * u.perp() - u.norm_sq() * v.perp()) / d;
    let center = a + cu;
    let r = (at - center).norm();
    let to_center = (center - at) / r;
    // Turning left (positive orientation) puts the center on the left.
    if d > 0.0 {
        (1.0 / r, to_center)
    } else {
        (-1.0 / r, -to_center)
    }
}

fn boundary_normal(cone: &ConeSpec, x: &[f64], hint: &[f64]) -> Result<(Vec<f64>, f64, Vec<f64>), ConeError> {
    let tol = Tolerances::default().on_boundary;
    match cone.boundary_point_tol(x, tol) {
        Ok(bp) => Ok((bp.inward_normal.clone(), 0.0, bp.position)),
        Err(ConeError::AtVertex) => {
            // Endpoint sitting on the vertex: use the boundary piece the
            // neighboring vertex points to. In the plane that is the ray
            // closest in angle, which the projection can miss when it lands
            // on the vertex itself.
            if let Some((start, open)) = cone.planar_sector() {
                let h = Vec2::new(hint[0], hint[1]);
                let mut rel = h.angle() - start;
                while rel < 0.0 {
                    rel += 2.0 * PI;
                }
                while rel >= 2.0 * PI {
                    rel -= 2.0 * PI;
                }
                let gap_end = (rel - open).abs();
                let gap_start = rel.min(2.0 * PI - rel);
                let ray = Vec2::from_angle(if gap_start <= gap_end { start } else { start + open });
                let bp = cone.boundary_point_tol(&[ray.x, ray.y], 1e-8)?;
                return Ok((bp.inward_normal, f64::NAN, vec![0.0, 0.0]));
            }
            let proj = cone.project_to_boundary(hint)?;
            let bp = cone.boundary_point_tol(&proj, 1e-8)?;
            Ok((bp.inward_normal, f64::NAN, proj))
        }
        Err(e) => Err(e),
    }
}

fn cone_err(index: usize, e: ConeError) -> SurfaceError {
    match e {
        ConeError::OnEdge => SurfaceError::OnEdge { index },
        ConeError::NotOnBoundary(distance) => SurfaceError::BoundaryOffCone { index, distance },
        other => SurfaceError::Cone(other),
    }
}

fn polyline(s: &DiscreteHypersurface) -> Result<SurfaceQuantities, SurfaceError> {
    let pts: Vec<Vec2> = s.points().iter().map(|p| p.xy()).collect();
    let m = pts.len();
    let closed = s.is_closed();
    let segs = s.segments();
    let mut len = Vec::with_capacity(segs.len());
    let mut tan = Vec::with_capacity(segs.len());
    for (k, &(a, b)) in segs.iter().enumerate() {
        let d = pts[b] - pts[a];
        let l = d.norm();
        if l == 0.0 {
            return Err(SurfaceError::ZeroMeasureElement { index: k });
        }
        len.push(l);
        tan.push(d / l);
    }
    let nseg = segs.len();
    let mut normals = vec![Vec3::ZERO; m];
    let mut curv = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let prev = if i > 0 {
            Some(i - 1)
        } else if closed {
            Some(nseg - 1)
        } else {
            None
        };
        let next = if i < nseg { Some(i) } else { None };
        match (prev, next) {
            (Some(a), Some(b)) => {
                // Turning-vector curvature: exact on uniformly sampled circles
                // and makes the discrete first Minkowski formula exact.
                let w = 0.5 * (len[a] + len[b]);
                let k = tan[b] - tan[a];
                let bis = tan[a] + tan[b];
                let n = if bis.norm() > 1e-12 { bis.perp().normalized() } else { tan[b].perp() };
                normals[i] = n.to_vec3();
                curv[i] = k.dot(n) / w;
                weights[i] = w;
            }
            (None, Some(b)) => {
                weights[i] = 0.5 * len[b];
                let (k, n) = if m >= 3 {
                    circle_at(pts[0], pts[1], pts[2], pts[0])
                } else {
                    (0.0, tan[b].perp())
                };
                curv[i] = k;
                normals[i] = n.to_vec3();
            }
            (Some(a), None) => {
                weights[i] = 0.5 * len[a];
                let (k, n) = if m >= 3 {
                    circle_at(pts[m - 3], pts[m - 2], pts[m - 1], pts[m - 1])
                } else {
                    (0.0, tan[a].perp())
                };
                curv[i] = k;
                normals[i] = n.to_vec3();
            }
            (None, None) => unreachable!(),
        }
    }
    let support: Vec<f64> = (0..m).map(|i| pts[i].to_vec3().dot(normals[i])).collect();
    let mut boundary = Vec::new();
    if !closed {
        for (i, nb) in [(0, 1), (m - 1, m - 2)] {
            let n = normals[i].xy();
            let conormal = if i == 0 { -n.perp() } else { n.perp() };
            let x = [pts[i].x, pts[i].y];
            let hint = [pts[nb].x, pts[nb].y];
            let (nu_star, _, _) = boundary_normal(s.cone(), &x, &hint).map_err(|e| cone_err(i, e))?;
            let nu_star = Vec2::new(nu_star[0], nu_star[1]);
            boundary.push(BoundaryVertex {
                index: i,
                conormal: conormal.to_vec3(),
                cone_normal: nu_star.to_vec3(),
                length_weight: 1.0,
                ii_nn: 0.0,
                dg_dnu: -curv[i] * pts[i].dot(conormal),
                contact: n.dot(nu_star),
            });
        }
    }
    Ok(SurfaceQuantities {
        n: 1,
        normals,
        sigma2: curv.iter().map(|k| k * k).collect(),
        mean_curvature: curv,
        support,
        area_weights: weights,
        boundary,
        area: 0.0,
        enclosed_volume: 0.0,
    })
}

fn axisymmetric(s: &DiscreteHypersurface) -> Result<SurfaceQuantities, SurfaceError> {
    let pts = s.profile();
    let m = pts.len();
    let flags = s.boundary_flags();
    let mut weights = vec![0.0; m];
    for (k, (a, b)) in s.segments().into_iter().enumerate() {
        let (pa, pb) = (pts[a], pts[b]);
        let l = (pb - pa).norm();
        if l == 0.0 {
            return Err(SurfaceError::ZeroMeasureElement { index: k });
        }
        weights[a] += 2.0 * PI * l * (pa.x / 3.0 + pb.x / 6.0);
        weights[b] += 2.0 * PI * l * (pa.x / 6.0 + pb.x / 3.0);
    }
    let ghost = |p: Vec2| Vec2::new(-p.x, p.y);
    let mut km = vec![0.0; m];
    let mut nrm = vec![Vec2::ZERO; m];
    for i in 0..m {
        let (k, n) = if i == 0 {
            if flags[0] {
                circle_at(pts[0], pts[1], pts[2], pts[0])
            } else {
                circle_at(ghost(pts[1]), pts[0], pts[1], pts[0])
            }
        } else if i == m - 1 {
            if flags[m - 1] {
                circle_at(pts[m - 3], pts[m - 2], pts[m - 1], pts[m - 1])
            } else {
                circle_at(pts[m - 2], pts[m - 1], ghost(pts[m - 2]), pts[m - 1])
            }
        } else {
            circle_at(pts[i - 1], pts[i], pts[i + 1], pts[i])
        };
        km[i] = k;
        nrm[i] = n;
    }
    let mut h = vec![0.0; m];
    let mut sigma2 = vec![0.0; m];
    let mut normals = vec![Vec3::ZERO; m];
    let mut support = vec![0.0; m];
    for i in 0..m {
        let kp = if pts[i].x > 0.0 { -nrm[i].x / pts[i].x } else { km[i] };
        h[i] = 0.5 * (km[i] + kp);
        sigma2[i] = km[i] * km[i] + kp * kp;
        normals[i] = Vec3::new(nrm[i].x, 0.0, nrm[i].y);
        support[i] = pts[i].dot(nrm[i]);
    }
    let mut boundary = Vec::new();
    for (i, nb) in [(0, 1), (m - 1, m - 2)] {
        if !flags[i] {
            continue;
        }
        let n = nrm[i];
        let conormal = if i == 0 { -n.perp() } else { n.perp() };
        let x = [pts[i].x, 0.0, pts[i].y];
        let hint = [pts[nb].x, 0.0, pts[nb].y];
        let (nu_star, _, pos) = boundary_normal(s.cone(), &x, &hint).map_err(|e| cone_err(i, e))?;
        let n3 = normals[i];
        let bp = crate::cone::BoundaryPoint { position: pos, inward_normal: nu_star.clone() };
        let ii = s.cone().boundary_II(&bp, &n3.to_array()).map_err(|e| cone_err(i, e))?;
        let nu3 = Vec3::from_slice(&nu_star);
        boundary.push(BoundaryVertex {
            index: i,
            conormal: Vec3::new(conormal.x, 0.0, conormal.y),
            cone_normal: nu3,
            length_weight: 2.0 * PI * pts[i].x,
            ii_nn: ii,
            dg_dnu: -km[i] * pts[i].dot(conormal),
            contact: n3.dot(nu3),
        });
    }
    Ok(SurfaceQuantities {
        n: 2,
        normals,
        mean_curvature: h,
        sigma2,
        support,
        area_weights: weights,
        boundary,
        area: 0.0,
        enclosed_volume: 0.0,
    })
}

/// Local second-order fit of a mesh surface around one vertex.
#[derive(Clone, Copy, Debug)]
pub(super) struct LocalFit {
    pub normal: Vec3,
    /// Sum of principal curvatures.
    pub k_sum: f64,
    /// Sum of squared principal curvatures.
    pub k_sq: f64,
    e1: Vec3,
    e2: Vec3,
    shape: [[f64; 2]; 2],
}

impl LocalFit {
    /// Shape operator applied to a tangent vector.
    fn apply(&self, v: Vec3) -> Vec3 {
        let (a, b) = (v.dot(self.e1), v.dot(self.e2));
        self.e1 * (self.shape[0][0] * a + self.shape[0][1] * b)
            + self.e2 * (self.shape[1][0] * a + self.shape[1][1] * b)
    }
}

/// Height-function fit over the tangent plane with basis
/// `u², uv, v², u, v, s⁴, s⁶` (`s² = u² + v²`), refining the normal a few
/// times. The radial terms make round spheres exact up to high order.
pub(super) fn fit_vertex(x: Vec3, n0: Vec3, nbrs: &[Vec3]) -> Option<LocalFit> {
    if nbrs.len() < 5 {
        return None;
    }
    let h = nbrs.iter().map(|q| (*q - x).norm()).sum::<f64>() / nbrs.len() as f64;
    let p = if nbrs.len() >= 10 {
        7
    } else if nbrs.len() >= 8 {
        6
    } else {
        5
    };
    let mut n = n0;
    let mut fit = None;
    for _ in 0..4 {
        let e1 = n.any_orthogonal();
        let e2 = n.cross(e1);
        let mut rows = Vec::with_capacity(nbrs.len());
        let mut rhs = Vec::with_capacity(nbrs.len());
        for q in nbrs {
            let d = *q - x;
            let (u, v, w) = (d.dot(e1) / h, d.dot(e2) / h, d.dot(n) / h);
            let s2 = u * u + v * v;
            let full = [u * u, u * v, v * v, u, v, s2 * s2, s2 * s2 * s2];
            rows.push(full[..p].to_vec());
            rhs.push(w);
        }
        let c = qr_least_squares(&rows, &rhs)?;
        let (ga, gb) = (c[3], c[4]);
        let hess = [[2.0 * c[0] / h, c[1] / h], [c[1] / h, 2.0 * c[2] / h]];
        let g2 = 1.0 + ga * ga + gb * gb;
        let sq = g2.sqrt();
        let b = [[hess[0][0] / sq, hess[0][1] / sq], [hess[1][0] / sq, hess[1][1] / sq]];
        let g = [[1.0 + ga * ga, ga * gb], [ga * gb, 1.0 + gb * gb]];
        let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let gi = [[g[1][1] / det_g, -g[0][1] / det_g], [-g[1][0] / det_g, g[0][0] / det_g]];
        let shape = [
            [
                gi[0][0] * b[0][0] + gi[0][1] * b[1][0],
                gi[0][0] * b[0][1] + gi[0][1] * b[1][1],
            ],
            [
                gi[1][0] * b[0][0] + gi[1][1] * b[1][0],
                gi[1][0] * b[0][1] + gi[1][1] * b[1][1],
            ],
        ];
        let tr = shape[0][0] + shape[1][1];
        let det = shape[0][0] * shape[1][1] - shape[0][1] * shape[1][0];
        let new_n = (n - e1 * ga - e2 * gb).normalized();
        fit = Some(LocalFit {
            normal: new_n,
            k_sum: tr,
            k_sq: (tr * tr - 2.0 * det).max(0.5 * tr * tr),
            e1,
            e2,
            shape,
        });
        let converged = (new_n - n).norm() < 1e-14;
        n = new_n;
        if converged {
            break;
        }
    }
    fit
}

pub(super) struct MeshTopology {
    pub one_ring: Vec<Vec<usize>>,
    pub boundary_neighbors: Vec<Vec<usize>>,
}

pub(super) fn topology(nv: usize, tris: &[[usize; 3]]) -> MeshTopology {
    let mut one_ring: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * tris.len());
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !one_ring[a].contains(&b) {
                one_ring[a].push(b);
            }
            if !one_ring[b].contains(&a) {
                one_ring[b].push(a);
            }
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    let mut boundary_neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut i = 0;
    while i < edges.len() {
        let mut j = i;
        while j < edges.len() && edges[j] == edges[i] {
            j += 1;
        }
        if j - i == 1 {
            let (a, b) = edges[i];
            boundary_neighbors[a].push(b);
            boundary_neighbors[b].push(a);
        }
        i = j;
    }
    MeshTopology {
        one_ring,
        boundary_neighbors,
    }
}

pub(super) fn two_ring(topo: &MeshTopology, i: usize) -> Vec<usize> {
    let mut out: Vec<usize> = topo.one_ring[i].clone();
    for &j in &topo.one_ring[i] {
        for &k in &topo.one_ring[j] {
            if k != i && !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

/// Mixed Voronoi areas and the cotangent mean-curvature vector
/// `ΔX = nH N` at every vertex.
pub(super) fn cotangent_data(pts: &[Vec3], tris: &[[usize; 3]]) -> (Vec<f64>, Vec<Vec3>, Vec<Vec3>) {
    let nv = pts.len();
    let mut area = vec![0.0; nv];
    let mut lap = vec![Vec3::ZERO; nv];
    let mut face_n = vec![Vec3::ZERO; nv];
    for t in tris {
        let p = [pts[t[0]], pts[t[1]], pts[t[2]]];
        let cross = (p[1] - p[0]).cross(p[2] - p[0]);
        let ta = 0.5 * cross.norm();
        for k in 0..3 {
            face_n[t[k]] -= cross;
        }
        let cots = [
            cot_at(p[0], p[1], p[2]),
            cot_at(p[1], p[2], p[0]),
            cot_at(p[2], p[0], p[1]),
        ];
        let obtuse = (0..3).find(|&k| (p[(k + 1) % 3] - p[k]).dot(p[(k + 2) % 3] - p[k]) < 0.0);
        for k in 0..3 {
            let (i, j, o) = (k, (k + 1) % 3, (k + 2) % 3);
            // Edge i-j is opposite to vertex o.
            let w = 0.5 * cots[o];
            let d = p[j] - p[i];
            lap[t[i]] += d * w;
            lap[t[j]] -= d * w;
        }
        match obtuse {
            None => {
                for k in 0..3 {
                    let (j, l) = ((k + 1) % 3, (k + 2) % 3);
                    area[t[k]] += 0.125
                        * ((p[j] - p[k]).norm_sq() * cots[l] + (p[l] - p[k]).norm_sq() * cots[j]);
                }
            }
            Some(ob) => {
                for k in 0..3 {
                    area[t[k]] += if k == ob { 0.5 * ta } else { 0.25 * ta };
                }
            }
        }
    }
    let lap = lap.iter().zip(&area).map(|(l, a)| *l / *a).collect();
    (area, lap, face_n)
}

fn mesh(s: &DiscreteHypersurface) -> Result<SurfaceQuantities, SurfaceError> {
    let pts = s.points();
    let tris = s.triangles();
    let nv = pts.len();
    let (area, lap, face_n) = cotangent_data(pts, tris);
    let topo = topology(nv, tris);
    let flags = s.boundary_flags();
    let mut normals = vec![Vec3::ZERO; nv];
    let mut h = vec![0.0; nv];
    let mut sigma2 = vec![0.0; nv];
    let mut fits: Vec<Option<LocalFit>> = vec![None; nv];
    for i in 0..nv {
        let fallback = face_n[i].normalized();
        let n0 = if !flags[i] && lap[i].norm() > 1e-8 * (1.0 / area[i].sqrt()) {
            let d = lap[i].normalized();
            if d.dot(fallback) >= 0.0 { d } else { -d }
        } else {
            fallback
        };
        let ring: Vec<Vec3> = two_ring(&topo, i).iter().map(|&j| pts[j]).collect();
        match fit_vertex(pts[i], n0, &ring) {
            Some(f) => {
                normals[i] = f.normal;
                h[i] = 0.5 * f.k_sum;
                sigma2[i] = f.k_sq;
                fits[i] = Some(f);
            }
            None => {
                normals[i] = n0;
                h[i] = 0.5 * lap[i].dot(n0);
                sigma2[i] = 2.0 * h[i] * h[i];
            }
        }
    }
    let support: Vec<f64> = (0..nv).map(|i| pts[i].dot(normals[i])).collect();
    let mut boundary = Vec::new();
    let d = s.cone().ambient_dim();
    for i in 0..nv {
        if !flags[i] {
            continue;
        }
        let bn = &topo.boundary_neighbors[i];
        if bn.len() != 2 {
            return Err(SurfaceError::BadBoundaryFlag { index: i });
        }
        let (a, b) = (pts[bn[0]], pts[bn[1]]);
        let n = normals[i];
        let tau = (b - a).normalized();
        let mut nu = n.cross(tau);
        nu = (nu - n * nu.dot(n)).normalized();
        let centroid = topo.one_ring[i]
            .iter()
            .fold(Vec3::ZERO, |acc, &j| acc + pts[j])
            / topo.one_ring[i].len() as f64;
        if nu.dot(centroid - pts[i]) < 0.0 {
            nu = -nu;
        }
        let x = &pts[i].to_array()[..d];
        let hint = &pts[topo.one_ring[i][0]].to_array()[..d];
        let (nu_star, _, pos) = boundary_normal(s.cone(), x, hint).map_err(|e| cone_err(i, e))?;
        let bp = crate::cone::BoundaryPoint { position: pos, inward_normal: nu_star.clone() };
        let ii = s.cone().boundary_II(&bp, &n.to_array()).map_err(|e| cone_err(i, e))?;
        let nu3 = Vec3::from_slice(&nu_star);
        let dg = match &fits[i] {
            Some(f) => -pts[i].dot(f.apply(nu)),
            None => -h[i] * pts[i].dot(nu),
        };
        boundary.push(BoundaryVertex {
            index: i,
            conormal: nu,
            cone_normal: nu3,
            length_weight: 0.5 * ((a - pts[i]).norm() + (b - pts[i]).norm()),
            ii_nn: ii,
            dg_dnu: dg,
            contact: n.dot(nu3),
        });
    }
    Ok(SurfaceQuantities {
        n: 2,
        normals,
        mean_curvature: h,
        sigma2,
        support,
        area_weights: area,
        boundary,
        area: 0.0,
        enclosed_volume: 0.0,
    })
}
