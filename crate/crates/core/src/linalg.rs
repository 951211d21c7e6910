//! Small dense and banded linear algebra: local quadric fits, sphere fits
//! and the smoothing preconditioner of the optimizer.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::vec::Vec3;

/// Solves `a x = b` for a square row-major system by Gaussian elimination
/// with partial pivoting. Returns `None` for (numerically) singular systems.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Weighted linear least squares through the normal equations. `rows` holds
/// one design row per observation.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64], weights: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut ata = vec![0.0; p * p];
    let mut atb = vec![0.0; p];
    for ((row, &y), &w) in rows.iter().zip(rhs).zip(weights) {
        for i in 0..p {
            atb[i] += w * row[i] * y;
            for j in 0..p {
                ata[i * p + j] += w * row[i] * row[j];
            }
        }
    }
    solve(ata, atb)
}

/// Least squares `min |A x - b|` by Householder QR, better conditioned than
/// the normal equations. `rows` holds one design row per observation.
pub fn qr_least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    let p = rows.first()?.len();
    if m < p {
        return None;
    }
    let mut a: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let mut b = rhs.to_vec();
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..p {
        let col_norm = (k..m).map(|i| a[i * p + k] * a[i * p + k]).sum::<f64>().sqrt();
        if col_norm <= 1e-13 * scale {
            return None;
        }
        let alpha = if a[k * p + k] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i * p + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let s: f64 = (k..m).map(|i| v[i - k] * a[i * p + j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                a[i * p + j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..m {
            b[i] -= s * v[i - k];
        }
    }
    let mut x = vec![0.0; p];
    for row in (0..p).rev() {
        let mut s = b[row];
        for k in row + 1..p {
            s -= a[row * p + k] * x[k];
        }
        x[row] = s / a[row * p + row];
    }
    Some(x)
}

/// Eigenvalues of the symmetric 2x2 matrix `[[a, b], [b, c]]`, ascending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let radius = (0.5 * (a - c)).hypot(b);
    (mean - radius, mean + radius)
}

/// Algebraic least-squares sphere (circle when all points share `z`) through
/// `points`. Returns center and radius. Coordinates are centered and scaled
/// before the solve so tiny or distant point clouds stay well conditioned.
pub fn fit_sphere(points: &[Vec3], planar: bool) -> Option<(Vec3, f64)> {
    if points.is_empty() {
        return None;
    }
    let origin = points.iter().fold(Vec3::ZERO, |a, &b| a + b) / points.len() as f64;
    let scale = (points.iter().map(|p| (*p - origin).norm_sq()).sum::<f64>() / points.len() as f64).sqrt();
    if !(scale > 0.0) {
        return None;
    }
    let local: Vec<Vec3> = points.iter().map(|p| (*p - origin) / scale).collect();
    let rows: Vec<Vec<f64>> = local
        .iter()
        .map(|p| {
            if planar {
                vec![2.0 * p.x, 2.0 * p.y, 1.0]
            } else {
                vec![2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0]
            }
        })
        .collect();
    let rhs: Vec<f64> = local.iter().map(|p| if planar { p.x * p.x + p.y * p.y } else { p.norm_sq() }).collect();
    let sol = qr_least_squares(&rows, &rhs)?;
    let c = if planar {
        Vec3::new(sol[0], sol[1], 0.0)
    } else {
        Vec3::new(sol[0], sol[1], sol[2])
    };
    let r2 = *sol.last().unwrap() + c.norm_sq();
    if !(r2 > 0.0) || !r2.is_finite() {
        return None;
    }
    let mut center = origin + c * scale;
    if planar {
        center.z = points[0].z;
    }
    Some((center, r2.sqrt() * scale))
}

/// Symmetric positive definite matrix stored by its lower band.
pub struct SymBand {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        SymBand {
            n,
            p: half_bandwidth,
            data: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.p);
        i * (self.p + 1) + (i - j)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.p {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Banded Cholesky solve; `None` if the matrix is not positive definite.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let (n, p) = (self.n, self.p);
        let mut l = SymBand::zeros(n, p);
        for i in 0..n {
            for j in i.saturating_sub(p)..=i {
                let mut s = self.get(i, j);
                for k in i.saturating_sub(p)..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    let k = l.slot(i, i);
                    l.data[k] = s.sqrt();
                } else {
                    let k = l.slot(i, j);
                    l.data[k] = s / l.get(j, j);
                }
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(p)..i {
                y[i] -= l.get(i, k) * y[k];
            }
            y[i] /= l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..(i + p + 1).min(n) {
                y[i] -= l.get(k, i) * y[k];
            }
            y[i] /= l.get(i, i);
        }
        Some(y)
    }
}
