//! The descent engine: discrete perimeter and volume with exact gradients,
//! the smoothing preconditioner and one restart of the augmented Lagrangian
//! loop. Everything here runs in units where the vertex ball of the target
//! volume has radius one.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{OptimizationConfig, OptimizeError, TraceRow};
use crate::cone::ConeSpec;
use crate::linalg::SymBand;
use crate::surface::intersect::polyline_self_intersection;
use crate::surface::{axis_cap, DiscreteHypersurface};
use crate::vec::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    /// Open polyline in a planar cone.
    Planar,
    /// Meridian `(ρ, z)` of a surface of revolution.
    Axisymmetric,
}

/// Endpoints slide on rays from the origin: `x = t d` with `t ≥ 0`.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub kind: Kind,
    pub cone: ConeSpec,
    pub rays: [Vec2; 2],
    pub target: f64,
}

pub(crate) struct Eval {
    pub perimeter: f64,
    pub volume: f64,
    pub grad_p: Vec<Vec2>,
    pub grad_v: Vec<Vec2>,
}

pub(crate) fn evaluate(kind: Kind, x: &[Vec2]) -> Eval {
    let m = x.len();
    let mut e = Eval {
        perimeter: 0.0,
        volume: 0.0,
        grad_p: vec![Vec2::ZERO; m],
        grad_v: vec![Vec2::ZERO; m],
    };
    let rho = Vec2::new(1.0, 0.0);
    for k in 0..m - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let len = (b - a).norm();
        let t = (b - a) / len;
        let cross = a.cross(b);
        match kind {
            Kind::Planar => {
                e.perimeter += len;
                e.volume += 0.5 * cross;
                e.grad_p[k] -= t;
                e.grad_p[k + 1] += t;
                // d(a x b)/da = -perp(b), d(a x b)/db = perp(a)
                e.grad_v[k] -= b.perp() * 0.5;
                e.grad_v[k + 1] += a.perp() * 0.5;
            }
            Kind::Axisymmetric => {
                let w = a.x + b.x;
                e.volume += PI / 3.0 * w * cross;
                e.grad_v[k] += (rho * cross - b.perp() * w) * (PI / 3.0);
                e.grad_v[k + 1] += (rho * cross + a.perp() * w) * (PI / 3.0);
                match axis_cap(a, b) {
                    Some((area, lens)) => {
                        let (ring, axis, sign) = if b.x == 0.0 { (k, k + 1, 1.0) } else { (k + 1, k, -1.0) };
                        let r = x[ring].x;
                        let h = x[axis].y - x[ring].y;
                        e.perimeter += area;
                        e.volume += lens;
                        e.grad_p[ring] += Vec2::new(2.0 * PI * r, -2.0 * PI * h);
                        e.grad_p[axis].y += 2.0 * PI * h;
                        let dh = sign * PI * (r * r + 3.0 * h * h) / 6.0;
                        e.grad_v[ring] += Vec2::new(sign * PI * h * r / 3.0, -dh);
                        e.grad_v[axis].y += dh;
                    }
                    None => {
                        e.perimeter += PI * w * len;
                        e.grad_p[k] += (rho * len - t * w) * PI;
                        e.grad_p[k + 1] += (rho * len + t * w) * PI;
                    }
                }
            }
        }
    }
    e
}

/// Lumped masses and edge stiffnesses of the `H^1` metric on the curve,
/// weighted by `2πρ` for surfaces of revolution.
fn metric(kind: Kind, x: &[Vec2]) -> (Vec<f64>, Vec<f64>) {
    let m = x.len();
    let mut mass = vec![0.0; m];
    let mut stiff = vec![0.0; m - 1];
    for k in 0..m - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let len = (b - a).norm();
        match kind {
            Kind::Planar => {
                mass[k] += 0.5 * len;
                mass[k + 1] += 0.5 * len;
                stiff[k] = 1.0 / len;
            }
            Kind::Axisymmetric => {
                mass[k] += 2.0 * PI * len * (2.0 * a.x + b.x) / 6.0;
                mass[k + 1] += 2.0 * PI * len * (a.x + 2.0 * b.x) / 6.0;
                stiff[k] = PI * (a.x + b.x) / len;
            }
        }
    }
    (mass, stiff)
}

/// Reduced coordinates: the slide parameter of each endpoint and both
/// coordinates of every interior vertex.
fn reduce(rays: &[Vec2; 2], full: &[Vec2]) -> Vec<f64> {
    let m = full.len();
    let mut r = Vec::with_capacity(2 * m - 2);
    r.push(full[0].dot(rays[0]));
    for v in &full[1..m - 1] {
        r.push(v.x);
        r.push(v.y);
    }
    r.push(full[m - 1].dot(rays[1]));
    r
}

fn expand(rays: &[Vec2; 2], red: &[f64], m: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(m);
    out.push(rays[0] * red[0]);
    for i in 1..m - 1 {
        out.push(Vec2::new(red[2 * i - 1], red[2 * i]));
    }
    out.push(rays[1] * red[2 * m - 3]);
    out
}

/// Solves `(M + τK) d = g` in reduced coordinates.
fn precondition(p: &Problem, x: &[Vec2], g: &[f64], tau: f64, active: [bool; 2]) -> Option<Vec<f64>> {
    let m = x.len();
    let (mass, stiff) = metric(p.kind, x);
    let n = 2 * m - 2;
    let mut a = SymBand::zeros(n, 3);
    let diag = |i: usize| {
        let mut d = mass[i];
        if i > 0 {
            d += tau * stiff[i - 1];
        }
        if i + 1 < m {
            d += tau * stiff[i];
        }
        d
    };
    a.add(0, 0, diag(0));
    a.add(n - 1, n - 1, diag(m - 1));
    for i in 1..m - 1 {
        let (ix, iy) = (2 * i - 1, 2 * i);
        a.add(ix, ix, diag(i));
        a.add(iy, iy, diag(i));
    }
    for k in 0..m - 1 {
        let (i, j) = (k, k + 1);
        // Active endpoints are frozen: decouple them from their neighbors.
        if (i == 0 && active[0]) || (j == m - 1 && active[1]) {
            continue;
        }
        let off = -tau * stiff[k];
        match (i == 0, j == m - 1) {
            (true, true) => a.add(n - 1, 0, off * p.rays[0].dot(p.rays[1])),
            (true, false) => {
                a.add(1, 0, off * p.rays[0].x);
                a.add(2, 0, off * p.rays[0].y);
            }
            (false, true) => {
                a.add(n - 1, 2 * i - 1, off * p.rays[1].x);
                a.add(n - 1, 2 * i, off * p.rays[1].y);
            }
            (false, false) => {
                a.add(2 * j - 1, 2 * i - 1, off);
                a.add(2 * j, 2 * i, off);
            }
        }
    }
    a.solve(g)
}

struct State {
    x: Vec<Vec2>,
    eval: Eval,
    merit: f64,
    /// Reduced gradient, normal part only at interior vertices, with the
    /// components blocked by an endpoint resting on the vertex removed.
    grad: Vec<f64>,
    active: [bool; 2],
}

fn state(p: &Problem, x: Vec<Vec2>, lambda: f64, mu: f64) -> State {
    let eval = evaluate(p.kind, &x);
    let dv = eval.volume - p.target;
    let merit = eval.perimeter - lambda * dv + 0.5 * mu * dv * dv;
    let coef = -lambda + mu * dv;
    let full: Vec<Vec2> = eval
        .grad_p
        .iter()
        .zip(&eval.grad_v)
        .map(|(gp, gv)| *gp + *gv * coef)
        .collect();
    let mut grad = reduce(&p.rays, &full);
    let last = grad.len() - 1;
    let red = reduce(&p.rays, &x);
    // Descent would push t below zero: the bound t >= 0 is active.
    let active = [red[0] <= 0.0 && grad[0] > 0.0, red[last] <= 0.0 && grad[last] > 0.0];
    if active[0] {
        grad[0] = 0.0;
    }
    if active[1] {
        grad[last] = 0.0;
    }
    project_normal(&x, &mut grad);
    State { x, eval, merit, grad, active }
}

/// Keeps only the normal component of each interior vertex block. Tangential
/// forces are a parametrization artifact; spacing is handled by resampling.
fn project_normal(x: &[Vec2], g: &mut [f64]) {
    for i in 1..x.len() - 1 {
        let nrm = (x[i + 1] - x[i - 1]).perp();
        let len = nrm.norm();
        if len == 0.0 {
            continue;
        }
        let nrm = nrm * (1.0 / len);
        let (ix, iy) = (2 * i - 1, 2 * i);
        let c = g[ix] * nrm.x + g[iy] * nrm.y;
        g[ix] = c * nrm.x;
        g[iy] = c * nrm.y;
    }
}

/// Largest relative deviation of the segment lengths from the spacing that
/// `resample` would produce.
fn spacing_defect(kind: Kind, x: &[Vec2]) -> f64 {
    let m = x.len();
    let last = polar_ratio(kind, x);
    let lens: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let unit = lens.iter().sum::<f64>() / ((m - 2) as f64 + last);
    lens.iter()
        .enumerate()
        .map(|(k, l)| {
            let target = if k == m - 2 { last * unit } else { unit };
            (l / target - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

fn polar_ratio(kind: Kind, x: &[Vec2]) -> f64 {
    if kind == Kind::Axisymmetric && x[x.len() - 1].x == 0.0 {
        POLAR_SEGMENT
    } else {
        1.0
    }
}

/// Mass-weighted RMS of the gradient: in the smooth limit the RMS of
/// `nH - λ` over the surface.
fn grad_norm(p: &Problem, s: &State) -> f64 {
    let (mass, _) = metric(p.kind, &s.x);
    let m = s.x.len();
    let mut acc = s.grad[0].powi(2) / mass[0] + s.grad[2 * m - 3].powi(2) / mass[m - 1];
    for i in 1..m - 1 {
        acc += (s.grad[2 * i - 1].powi(2) + s.grad[2 * i].powi(2)) / mass[i];
    }
    (acc / mass.iter().sum::<f64>()).sqrt()
}

pub(crate) fn build_surface(p: &Problem, x: &[Vec2]) -> Result<DiscreteHypersurface, crate::surface::SurfaceError> {
    match p.kind {
        Kind::Planar => DiscreteHypersurface::polyline_unchecked(&p.cone, x, false),
        Kind::Axisymmetric => DiscreteHypersurface::axisymmetric_unchecked(&p.cone, x),
    }
}

fn admissible(p: &Problem, x: &[Vec2]) -> bool {
    if x.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
        return false;
    }
    let m = x.len();
    for k in 0..m - 1 {
        if (x[k + 1] - x[k]).norm() <= 1e-12 {
            return false;
        }
    }
    match p.kind {
        Kind::Planar => {
            for v in &x[1..m - 1] {
                if !p.cone.contains(&[v.x, v.y]) || v.norm() <= 1e-12 {
                    return false;
                }
            }
        }
        Kind::Axisymmetric => {
            for v in &x[1..m - 1] {
                if v.x <= 1e-12 || !p.cone.contains(&[v.x, 0.0, v.y]) {
                    return false;
                }
            }
        }
    }
    polyline_self_intersection(x, false).is_none()
}

/// Reparametrizes the curve by arc length, keeping the endpoints.
/// Length of the segment ending on the axis relative to the others. The
/// spherical cap element there balances the axis vertex exactly, but leaves
/// an error at its neighbor that decays like the square of this ratio.
const POLAR_SEGMENT: f64 = 4.0;

/// Redistributes the vertices evenly by arc length (a longer polar segment
/// for meridians that close on the axis).
pub(crate) fn resample(kind: Kind, x: &[Vec2]) -> Vec<Vec2> {
    let m = x.len();
    let last = polar_ratio(kind, x);
    let units = (m - 2) as f64 + last;
    let mut cum = vec![0.0; m];
    for k in 1..m {
        cum[k] = cum[k - 1] + (x[k] - x[k - 1]).norm();
    }
    let total = cum[m - 1];
    let mut out = Vec::with_capacity(m);
    out.push(x[0]);
    let mut seg = 0;
    for j in 1..m - 1 {
        let s = total * j as f64 / units;
        while seg + 1 < m - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let t = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        out.push(x[seg] + (x[seg + 1] - x[seg]) * t);
    }
    out.push(x[m - 1]);
    out
}

pub(crate) struct Outcome {
    pub points: Vec<Vec2>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub multiplier: f64,
    pub iterations: usize,
}

const RESAMPLE_EVERY: usize = 25;
/// Spacing checked every `RESAMPLE_EVERY` iterations is redistributed only
/// when some segment is off its target length by more than this fraction.
const SPACING_SLACK: f64 = 0.25;
const INNER_MAX: usize = 60;
const MAX_REJECTIONS: usize = 40;

/// One restart from `x0`. Trace values are in normalized units; the caller
/// rescales them.
pub(crate) fn descend(
    p: &Problem,
    config: &OptimizationConfig,
    x0: Vec<Vec2>,
) -> Result<Outcome, OptimizeError> {
    let n = match p.kind {
        Kind::Planar => 1.0,
        Kind::Axisymmetric => 2.0,
    };
    let tau = config.step_size;
    let mut lambda = n;
    let mut mu = config.penalty_initial;
    let mu_max = config.penalty_initial * config.penalty_growth.powi(4);
    let mut st = state(p, x0, lambda, mu);
    let mut trace = Vec::new();
    let mut epoch = 0;
    let mut inner = 0;
    let mut last_vol_err = f64::INFINITY;
    let mut step = tau;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..config.max_iterations {
        iterations = iter + 1;
        let gn = grad_norm(p, &st);
        let vol_err = (st.eval.volume - p.target).abs() / p.target;
        let (contact, spread) = build_surface(p, &st.x)
            .and_then(|s| s.quantities())
            .map(|q| (q.contact_residual(), q.curvature_spread()))
            .unwrap_or((f64::NAN, f64::NAN));
        trace.push(TraceRow {
            iter,
            perimeter: st.eval.perimeter,
            volume: st.eval.volume,
            grad_norm: gn,
            contact_residual: contact,
            curvature_spread: spread,
            merit: st.merit,
            multiplier: lambda,
            penalty: mu,
            epoch,
        });
        if gn < config.grad_tolerance && vol_err < config.volume_tolerance {
            converged = true;
            break;
        }

        let mut direction = precondition(p, &st.x, &st.grad, tau, st.active).ok_or(OptimizeError::Breakdown(iter))?;
        project_normal(&st.x, &mut direction);
        let predicted: f64 = st.grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
        let stalled = predicted * tau <= 1e-13 * st.merit.abs().max(1.0);

        if stalled || gn < config.grad_tolerance.max(vol_err) || inner >= INNER_MAX {
            if stalled && vol_err < config.volume_tolerance {
                // Stationary to machine precision.
                converged = true;
                break;
            }
            let dv = st.eval.volume - p.target;
            lambda -= mu * dv;
            if vol_err > config.volume_tolerance && vol_err > 0.25 * last_vol_err {
                mu = (mu * config.penalty_growth).min(mu_max);
            }
            last_vol_err = vol_err;
            inner = 0;
            epoch += 1;
            st = state(p, st.x, lambda, mu);
            continue;
        }

        if iter > 0 && iter % RESAMPLE_EVERY == 0 && spacing_defect(p.kind, &st.x) > SPACING_SLACK {
            // Dilation about the vertex keeps endpoints on their rays and
            // undoes the volume lost to the chords.
            let y = resample(p.kind, &st.x);
            let scale = (st.eval.volume / evaluate(p.kind, &y).volume).powf(1.0 / (n + 1.0));
            let y: Vec<Vec2> = y.into_iter().map(|v| v * scale).collect();
            if admissible(p, &y) {
                st = state(p, y, lambda, mu);
                epoch += 1;
                continue;
            }
        }

        let red = reduce(&p.rays, &st.x);
        let m = st.x.len();
        let mut s = step;
        let mut rejections = 0;
        loop {
            let mut trial: Vec<f64> = red.iter().zip(&direction).map(|(r, d)| r - s * d).collect();
            let last = trial.len() - 1;
            trial[0] = trial[0].max(0.0);
            trial[last] = trial[last].max(0.0);
            let y = expand(&p.rays, &trial, m);
            if admissible(p, &y) {
                let cand = state(p, y, lambda, mu);
                if cand.merit <= st.merit - 1e-4 * s * predicted {
                    st = cand;
                    break;
                }
            }
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(OptimizeError::StepRejected { iteration: iter });
            }
            s *= 0.5;
        }
        step = (2.0 * s).min(tau);
        inner += 1;
    }

    let multiplier = lambda - mu * (st.eval.volume - p.target);
    Ok(Outcome {
        points: st.x,
        trace,
        converged,
        multiplier,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradients(kind: Kind, x: &[Vec2]) {
        let e = evaluate(kind, x);
        let h = 1e-6;
        for i in 0..x.len() {
            for axis in 0..2 {
                if axis == 0 && x[i].x == 0.0 {
                    continue;
                }
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                if axis == 0 {
                    xp[i].x += h;
                    xm[i].x -= h;
                } else {
                    xp[i].y += h;
                    xm[i].y -= h;
                }
                let (ep, em) = (evaluate(kind, &xp), evaluate(kind, &xm));
                let fd_p = (ep.perimeter - em.perimeter) / (2.0 * h);
                let fd_v = (ep.volume - em.volume) / (2.0 * h);
                let (gp, gv) = if axis == 0 {
                    (e.grad_p[i].x, e.grad_v[i].x)
                } else {
                    (e.grad_p[i].y, e.grad_v[i].y)
                };
                assert!((fd_p - gp).abs() < 1e-7, "perimeter gradient at {i}/{axis}");
                assert!((fd_v - gv).abs() < 1e-7, "volume gradient at {i}/{axis}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x: Vec<Vec2> = (0..9)
            .map(|k| {
                let t = 0.15 * k as f64;
                Vec2::new(0.1 + (1.0 + 0.2 * t.sin()) * t.sin(), (1.0 + 0.3 * t).cos())
            })
            .collect();
        check_gradients(Kind::Planar, &x);
        check_gradients(Kind::Axisymmetric, &x);
        // Meridians ending on the axis at either end.
        let mut y = x.clone();
        y[0].x = 0.0;
        let last = y.len() - 1;
        y[last].x = 0.0;
        check_gradients(Kind::Axisymmetric, &y);
    }

    #[test]
    fn resampling_equalizes_spacing() {
        let x: Vec<Vec2> = [0.0, 0.1, 0.15, 0.7, 1.0].iter().map(|&t| Vec2::new(t, 2.0 * t)).collect();
        let y = resample(Kind::Planar, &x);
        for k in 0..4 {
            assert!(((y[k + 1] - y[k]).norm() - 5f64.sqrt() / 4.0).abs() < 1e-12);
        }
    }
}
