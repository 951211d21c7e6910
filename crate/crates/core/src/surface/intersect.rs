//! Self-intersection tests.

use alloc::vec;
use alloc::vec::Vec;


use crate::vec::{Vec2, Vec3};

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let scale = (b - a).norm().max((d - c).norm());
    let eps = 1e-13 * scale * scale;
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))
    {
        return true;
    }
    // Touching configurations count as intersections too.
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o.abs() <= eps
            && r.x >= p.x.min(q.x) - 1e-15
            && r.x <= p.x.max(q.x) + 1e-15
            && r.y >= p.y.min(q.y) - 1e-15
            && r.y <= p.y.max(q.y) + 1e-15
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// First pair of non-adjacent segments that intersect, if any. A uniform
/// grid over segment bounding boxes keeps this near-linear.
pub(crate) fn polyline_self_intersection(pts: &[Vec2], closed: bool) -> Option<(usize, usize)> {
    let m = pts.len();
    let nseg = if closed { m } else { m - 1 };
    if nseg < 3 {
        return None;
    }
    let seg = |k: usize| (pts[k], pts[(k + 1) % m]);
    let adjacent = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d <= 1 || (closed && d == nseg - 1)
    };
    let (mut lo, mut hi) = (pts[0], pts[0]);
    let mut total = 0.0;
    for k in 0..nseg {
        let (a, b) = seg(k);
        total += (b - a).norm();
        for p in [a, b] {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let cell = (total / nseg as f64).max(1e-300);
    let nx = (((hi.x - lo.x) / cell) as usize + 1).min(4096);
    let ny = (((hi.y - lo.y) / cell) as usize + 1).min(4096);
    let cx = (hi.x - lo.x).max(1e-300) / nx as f64;
    let cy = (hi.y - lo.y).max(1e-300) / ny as f64;
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let to_cell = |v: f64, o: f64, c: f64, n: usize| (((v - o) / c) as usize).min(n - 1);
    for k in 0..nseg {
        let (a, b) = seg(k);
        let (x0, x1) = (to_cell(a.x.min(b.x), lo.x, cx, nx), to_cell(a.x.max(b.x), lo.x, cx, nx));
        let (y0, y1) = (to_cell(a.y.min(b.y), lo.y, cy, ny), to_cell(a.y.max(b.y), lo.y, cy, ny));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                grid[gx * ny + gy].push(k);
            }
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for bucket in &grid {
        for (p, &i) in bucket.iter().enumerate() {
            for &j in &bucket[p + 1..] {
                let (i, j) = (i.min(j), i.max(j));
                if adjacent(i, j) {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_cross(a, b, c, d) && best.is_none_or(|bst| (i, j) < bst) {
                    best = Some((i, j));
                }
            }
        }
    }
    best
}

fn segment_hits_triangle(p: Vec3, q: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    // Möller–Trumbore restricted to the open segment.
    let dir = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(e2);
    let det = e1.dot(h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale {
        return false;
    }
    let s = p - a;
    let u = s.dot(h) / det;
    if !(1e-9..=1.0 - 1e-9).contains(&u) {
        return false;
    }
    let qv = s.cross(e1);
    let v = dir.dot(qv) / det;
    if v < 1e-9 || u + v > 1.0 - 1e-9 {
        return false;
    }
    let t = e2.dot(qv) / det;
    t > 1e-9 && t < 1.0 - 1e-9
}

fn triangles_intersect(t1: [Vec3; 3], t2: [Vec3; 3]) -> bool {
    (0..3).any(|k| segment_hits_triangle(t1[k], t1[(k + 1) % 3], t2[0], t2[1], t2[2]))
        || (0..3).any(|k| segment_hits_triangle(t2[k], t2[(k + 1) % 3], t1[0], t1[1], t1[2]))
}

/// First pair of vertex-disjoint triangles that intersect, using a uniform
/// grid of bounding boxes as the broad phase.
pub(crate) fn mesh_self_intersection(pts: &[Vec3], tris: &[[usize; 3]]) -> Option<(usize, usize)> {
    let nt = tris.len();
    if nt < 2 {
        return None;
    }
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    let mean_edge = tris
        .iter()
        .map(|t| (pts[t[1]] - pts[t[0]]).norm())
        .sum::<f64>()
        / nt as f64;
    let cell = (2.0 * mean_edge).max(1e-300);
    let dims = |l: f64, h: f64| (((h - l) / cell) as usize + 1).min(256);
    let (nx, ny, nz) = (dims(lo.x, hi.x), dims(lo.y, hi.y), dims(lo.z, hi.z));
    let idx = |v: f64, o: f64, n: usize| (((v - o) / cell) as usize).min(n - 1);
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny * nz];
    for (k, t) in tris.iter().enumerate() {
        let ps = [pts[t[0]], pts[t[1]], pts[t[2]]];
        let min = |f: fn(&Vec3) -> f64| ps.iter().map(f).fold(f64::INFINITY, f64::min);
        let max = |f: fn(&Vec3) -> f64| ps.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1) = (idx(min(|p| p.x), lo.x, nx), idx(max(|p| p.x), lo.x, nx));
        let (y0, y1) = (idx(min(|p| p.y), lo.y, ny), idx(max(|p| p.y), lo.y, ny));
        let (z0, z1) = (idx(min(|p| p.z), lo.z, nz), idx(max(|p| p.z), lo.z, nz));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                for gz in z0..=z1 {
                    grid[(gx * ny + gy) * nz + gz].push(k);
                }
            }
        }
    }
    let mut best: Option<(usize, usize)> = None;
    for bucket in &grid {
        for (p, &i) in bucket.iter().enumerate() {
            for &j in &bucket[p + 1..] {
                let (i, j) = (i.min(j), i.max(j));
                let (ti, tj) = (tris[i], tris[j]);
                if ti.iter().any(|v| tj.contains(v)) {
                    continue;
                }
                let a = [pts[ti[0]], pts[ti[1]], pts[ti[2]]];
                let b = [pts[tj[0]], pts[tj[1]], pts[tj[2]]];
                if triangles_intersect(a, b) && best.is_none_or(|bst| (i, j) < bst) {
                    best = Some((i, j));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_eight_is_detected() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(polyline_self_intersection(&pts, true).is_some());
        let square = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(polyline_self_intersection(&square, true).is_none());
    }

    #[test]
    fn crossing_triangles() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.2, 0.2, -0.5),
            Vec3::new(0.2, 0.2, 0.5),
            Vec3::new(0.8, 0.8, 0.5),
        ];
        assert!(mesh_self_intersection(&pts, &[[0, 1, 2], [3, 4, 5]]).is_some());
    }
}
