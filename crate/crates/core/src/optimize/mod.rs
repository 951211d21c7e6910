//! Perimeter minimization at fixed enclosed volume.
//!
//! Curves in planar cones and meridians of surfaces of revolution in
//! circular cones are evolved by a preconditioned gradient descent on the
//! augmented Lagrangian `P - λ(V - V*) + μ/2 (V - V*)²`. Endpoints slide on
//! the boundary rays. Every restart runs in units where the vertex ball of
//! volume `V*` has radius one and is scaled back at the end, so results are
//! equivariant under dilation by construction.

mod flow;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{candidate_profile, halfspace_profile, CandidateError};
use crate::cone::{uniform01, ConeShape, ConeSpec};
use crate::surface::{DiscreteHypersurface, SurfaceError};
use crate::vec::Vec2;
use flow::{Kind, Problem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error("volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported cone: {0}")]
    UnsupportedCone(String),
    #[error("initializer {0:?} is not available for this cone")]
    UnsupportedInitializer(Initializer),
    #[error("40 consecutive step rejections at iteration {iteration}")]
    StepRejected { iteration: usize },
    #[error("preconditioner broke down at iteration {0}")]
    Breakdown(usize),
    #[error("every restart failed; first error: {0}")]
    AllRestartsFailed(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Candidate(#[from] CandidateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Initializer {
    VertexCap,
    BoundaryHalfBall,
    RandomBlob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub target_volume: f64,
    /// Initial step, also the time scale of the smoothing preconditioner.
    pub step_size: f64,
    pub max_iterations: usize,
    pub grad_tolerance: f64,
    /// Relative to the target volume.
    pub volume_tolerance: f64,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub resolution: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub initializer: Initializer,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            target_volume: 1.0,
            step_size: 0.05,
            max_iterations: 4000,
            grad_tolerance: 1e-6,
            volume_tolerance: 1e-8,
            penalty_initial: 10.0,
            penalty_growth: 2.0,
            resolution: 200,
            restarts: 1,
            rng_seed: 0,
            initializer: Initializer::VertexCap,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.target_volume > 0.0) || !self.target_volume.is_finite() {
            return Err(OptimizeError::NonPositiveVolume(self.target_volume));
        }
        let positive = [
            ("step_size", self.step_size),
            ("grad_tolerance", self.grad_tolerance),
            ("volume_tolerance", self.volume_tolerance),
            ("penalty_initial", self.penalty_initial),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(OptimizeError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.penalty_growth > 1.0) {
            return Err(OptimizeError::InvalidConfig(format!(
                "penalty_growth must exceed 1, got {}",
                self.penalty_growth
            )));
        }
        if self.resolution < 8 {
            return Err(OptimizeError::InvalidConfig(format!(
                "resolution must be at least 8, got {}",
                self.resolution
            )));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(OptimizeError::InvalidConfig(String::from(
                "restarts and max_iterations must be at least 1",
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub perimeter: f64,
    pub volume: f64,
    pub grad_norm: f64,
    pub contact_residual: f64,
    pub curvature_spread: f64,
    pub merit: f64,
    pub multiplier: f64,
    pub penalty: f64,
    /// Incremented whenever the merit function changes (multiplier or
    /// penalty update) or the curve is resampled; the merit is
    /// non-increasing within an epoch.
    pub epoch: usize,
}

/// Result of a single restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub index: usize,
    pub trace: Vec<TraceRow>,
    pub surface: DiscreteHypersurface,
    pub converged: bool,
    pub multiplier: f64,
    pub iterations: usize,
    pub perimeter: f64,
    pub volume: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationRun {
    pub config: OptimizationConfig,
    pub trace: Vec<TraceRow>,
    pub final_surface: DiscreteHypersurface,
    pub converged: bool,
    /// `(P_num - P_winner) / P_winner` against the best closed-form candidate.
    pub best_candidate_gap: f64,
    /// Lagrange multiplier at the end of the run, comparable to `nH`.
    pub multiplier: f64,
    pub restart: usize,
    /// Final perimeter of each restart, `None` for failed restarts.
    pub restart_perimeters: Vec<Option<f64>>,
    pub iterations: usize,
    /// Final surface within `5 r_vertex(V)` of the vertex.
    pub bounded: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub curvature_spread: f64,
    pub contact_residual: f64,
    pub multiplier_gap: f64,
    pub mean_curvature: f64,
    /// False when the run did not converge; the values are then only
    /// indicative.
    pub converged: bool,
}

fn problem(cone: &ConeSpec, target: f64) -> Result<Problem, OptimizeError> {
    match cone.ambient_dim() {
        2 => {
            let (start, open) = cone.planar_sector().ok_or_else(|| {
                OptimizeError::UnsupportedCone(String::from("planar runs need a cone with two boundary rays"))
            })?;
            Ok(Problem {
                kind: Kind::Planar,
                cone: cone.clone(),
                rays: [Vec2::from_angle(start), Vec2::from_angle(start + open)],
                target,
            })
        }
        3 => {
            let alpha = match cone.shape() {
                ConeShape::Circular { alpha } => *alpha,
                ConeShape::HalfSpace => FRAC_PI_2,
                _ => {
                    return Err(OptimizeError::UnsupportedCone(String::from(
                        "three-dimensional runs need a circular cone",
                    )))
                }
            };
            Ok(Problem {
                kind: Kind::Axisymmetric,
                cone: cone.clone(),
                rays: [Vec2::new(alpha.sin(), alpha.cos()), Vec2::new(0.0, 1.0)],
                target,
            })
        }
        d => Err(OptimizeError::UnsupportedCone(format!(
            "ambient dimension {d}; only 2 and 3 are supported"
        ))),
    }
}

/// Radius of the vertex ball of volume `v`.
fn vertex_radius(cone: &ConeSpec, v: f64) -> f64 {
    let n = cone.n() as f64;
    ((n + 1.0) * v / cone.solid_angle()).powf(1.0 / (n + 1.0))
}

/// Initial curve in normalized units, already scaled to the target volume.
fn initial_curve(p: &mut Problem, init: Initializer, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec2>, OptimizeError> {
    // Polar parametrization between the two rays: angle from the first ray
    // in the plane, or polar angle from the axis for meridians.
    let (phi0, phi1, polar): (f64, f64, fn(f64, f64) -> Vec2) = match p.kind {
        Kind::Planar => {
            let (a, b) = (p.rays[0].angle(), p.rays[1].angle());
            let b = if b <= a { b + 2.0 * PI } else { b };
            (a, b, |phi, r| Vec2::from_angle(phi) * r)
        }
        Kind::Axisymmetric => {
            let alpha = p.rays[0].x.atan2(p.rays[0].y);
            (alpha, 0.0, |psi, r| Vec2::new(psi.sin(), psi.cos()) * r)
        }
    };
    let radial = |f: &dyn Fn(f64) -> f64| -> Vec<Vec2> {
        (0..m)
            .map(|k| {
                let s = k as f64 / (m - 1) as f64;
                polar(phi0 + (phi1 - phi0) * s, f(s))
            })
            .collect()
    };
    let curve = match init {
        Initializer::VertexCap => radial(&|_| 1.0),
        Initializer::RandomBlob => {
            // Smooth star-shaped perturbation; meridians use even modes so
            // the profile stays smooth across the axis.
            let modes = 4;
            let mut coef = Vec::with_capacity(2 * modes);
            for _ in 0..2 * modes {
                coef.push(2.0 * uniform01(rng) - 1.0);
            }
            let planar = p.kind == Kind::Planar;
            let shape = |s: f64| -> f64 {
                (1..=modes)
                    .map(|k| {
                        let w = k as f64 * PI * s;
                        let sin = if planar { coef[2 * k - 1] * w.sin() } else { 0.0 };
                        (coef[2 * k - 2] * w.cos() + sin) / k as f64
                    })
                    .sum()
            };
            let peak = (0..=200)
                .map(|k| shape(k as f64 / 200.0).abs())
                .fold(0.0, f64::max)
                .max(1e-12);
            radial(&|s| 1.0 + 0.3 * shape(s) / peak)
        }
        Initializer::BoundaryHalfBall => match p.kind {
            Kind::Planar => {
                let open = phi1 - phi0;
                let r = (2.0 * p.target / PI).sqrt();
                let c = 1.5 * r / open.min(FRAC_PI_2).sin();
                let center = p.rays[0] * c;
                // Both ends rest on the first ray.
                p.rays[1] = p.rays[0];
                (0..m)
                    .map(|k| center + Vec2::from_angle(phi0 + PI * k as f64 / (m - 1) as f64) * r)
                    .collect()
            }
            Kind::Axisymmetric if (phi0 - FRAC_PI_2).abs() < 1e-12 => radial(&|_| 1.0),
            Kind::Axisymmetric => return Err(OptimizeError::UnsupportedInitializer(init)),
        },
    };
    // Endpoints exactly on their rays.
    let mut curve = curve;
    let last = m - 1;
    curve[0] = p.rays[0] * curve[0].dot(p.rays[0]);
    curve[last] = p.rays[1] * curve[last].dot(p.rays[1]);
    let curve = flow::resample(p.kind, &curve);
    let v = flow::evaluate(p.kind, &curve).volume;
    if !(v > 0.0) {
        return Err(OptimizeError::InvalidConfig(String::from("initial curve encloses no volume")));
    }
    let n = match p.kind {
        Kind::Planar => 1.0,
        Kind::Axisymmetric => 2.0,
    };
    let scale = (p.target / v).powf(1.0 / (n + 1.0));
    Ok(curve.into_iter().map(|x| x * scale).collect())
}

fn check_cone(cone: &ConeSpec, target: f64) -> Result<Problem, OptimizeError> {
    let length = vertex_radius(cone, target);
    let p = problem(cone, target / length.powi(cone.ambient_dim() as i32))?;
    Ok(p)
}

/// Runs restart `index` of `config`. Restarts are independent: restart `k`
/// draws from stream `k` of the generator seeded with `rng_seed`.
pub fn minimize_restart(cone: &ConeSpec, config: &OptimizationConfig, index: usize) -> Result<RestartOutcome, OptimizeError> {
    config.validate()?;
    let mut p = check_cone(cone, config.target_volume)?;
    let length = vertex_radius(cone, config.target_volume);
    let n = cone.n() as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64);
    let x0 = initial_curve(&mut p, config.initializer, config.resolution, &mut rng)?;
    let out = flow::descend(&p, config, x0)?;
    let points: Vec<Vec2> = out.points.iter().map(|x| *x * length).collect();
    let surface = match p.kind {
        Kind::Planar => DiscreteHypersurface::polyline(cone, &points, false)?,
        Kind::Axisymmetric => DiscreteHypersurface::axisymmetric(cone, &points)?,
    };
    let trace: Vec<TraceRow> = out
        .trace
        .into_iter()
        .map(|r| TraceRow {
            perimeter: r.perimeter * length.powi(n),
            volume: r.volume * length.powi(n + 1),
            merit: r.merit * length.powi(n),
            multiplier: r.multiplier / length,
            penalty: r.penalty / length.powi(n + 2),
            ..r
        })
        .collect();
    Ok(RestartOutcome {
        index,
        perimeter: surface.area(),
        volume: surface.enclosed_volume()?,
        trace,
        surface,
        converged: out.converged,
        multiplier: out.multiplier / length,
        iterations: out.iterations,
    })
}

/// Picks the best restart (converged first, then smallest perimeter, then
/// lowest index) and attaches the diagnostics.
pub fn assemble_run(
    cone: &ConeSpec,
    config: &OptimizationConfig,
    outcomes: Vec<Result<RestartOutcome, OptimizeError>>,
) -> Result<OptimizationRun, OptimizeError> {
    let restart_perimeters: Vec<Option<f64>> = outcomes
        .iter()
        .map(|o| o.as_ref().ok().map(|r| r.perimeter))
        .collect();
    let mut warnings = Vec::new();
    let mut first_error = None;
    let mut best: Option<RestartOutcome> = None;
    for o in outcomes {
        match o {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => (r.converged, -r.perimeter) > (b.converged, -b.perimeter),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                warnings.push(format!("restart failed: {e}"));
                first_error.get_or_insert(e);
            }
        }
    }
    let best = match (best, first_error) {
        (Some(b), _) => b,
        // Configuration problems hit every restart alike and are reported as such.
        (None, Some(e @ (OptimizeError::InvalidConfig(_)
        | OptimizeError::NonPositiveVolume(_)
        | OptimizeError::UnsupportedCone(_)
        | OptimizeError::UnsupportedInitializer(_)))) => return Err(e),
        (None, e) => {
            return Err(OptimizeError::AllRestartsFailed(e.map(|e| e.to_string()).unwrap_or_default()))
        }
    };
    let winner = candidate_profile(cone, config.target_volume)?.winner_perimeter;
    let reach = 5.0 * vertex_radius(cone, config.target_volume);
    let d = cone.ambient_dim();
    let bounded = (0..best.surface.vertex_count()).all(|i| {
        let x = best.surface.ambient_point(i);
        x[..d].iter().map(|c| c * c).sum::<f64>().sqrt() <= reach
    });
    if !best.converged {
        warnings.push(format!("not converged after {} iterations", best.iterations));
    }
    if !bounded {
        warnings.push(String::from("final surface leaves the ball of radius 5 r_vertex"));
    }
    Ok(OptimizationRun {
        config: config.clone(),
        best_candidate_gap: (best.perimeter - winner) / winner,
        trace: best.trace,
        final_surface: best.surface,
        converged: best.converged,
        multiplier: best.multiplier,
        restart: best.index,
        restart_perimeters,
        iterations: best.iterations,
        bounded,
        warnings,
    })
}

/// All restarts in sequence; see [`minimize_restart`] to run them in
/// parallel and [`assemble_run`] to combine them.
pub fn minimize(cone: &ConeSpec, config: &OptimizationConfig) -> Result<OptimizationRun, OptimizeError> {
    config.validate()?;
    check_cone(cone, config.target_volume)?;
    let outcomes = (0..config.restarts)
        .map(|k| minimize_restart(cone, config, k))
        .collect();
    assemble_run(cone, config, outcomes)
}

pub fn stationarity_report(run: &OptimizationRun) -> Result<StationarityReport, OptimizeError> {
    let q = run.final_surface.quantities()?;
    let h = q.mean_h();
    let nh = q.n as f64 * h;
    Ok(StationarityReport {
        curvature_spread: q.curvature_spread(),
        contact_residual: q.contact_residual(),
        multiplier_gap: (run.multiplier - nh).abs() / nh.abs(),
        mean_curvature: h,
        converged: run.converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub volume: f64,
    pub p_numerical: Option<f64>,
    pub p_candidate_winner: f64,
    pub p_halfspace: f64,
    pub gap: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope `c` of `P^{(n+1)/n} ≈ c V` over successful rows.
    pub fitted_constant: Option<f64>,
    /// `max |P^{(n+1)/n} - c V| / P^{(n+1)/n}`.
    pub linearity_residual: Option<f64>,
}

impl SweepTable {
    pub fn from_rows(n: usize, rows: Vec<SweepRow>) -> Self {
        let e = (n as f64 + 1.0) / n as f64;
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.p_numerical.map(|p| (r.volume, p.powf(e))))
            .collect();
        let (mut fitted_constant, mut linearity_residual) = (None, None);
        if !pts.is_empty() {
            let c = pts.iter().map(|(v, f)| v * f).sum::<f64>() / pts.iter().map(|(v, _)| v * v).sum::<f64>();
            fitted_constant = Some(c);
            linearity_residual = Some(pts.iter().map(|(v, f)| (f - c * v).abs() / f).fold(0.0, f64::max));
        }
        SweepTable {
            rows,
            fitted_constant,
            linearity_residual,
        }
    }
}

/// The sweep row of volume `v`, turning errors into a flagged row.
pub fn sweep_row(cone: &ConeSpec, v: f64, run: Result<OptimizationRun, OptimizeError>) -> SweepRow {
    let winner = candidate_profile(cone, v).map(|c| c.winner_perimeter).unwrap_or(f64::NAN);
    let half = halfspace_profile(cone.n(), v).unwrap_or(f64::NAN);
    match run {
        Ok(r) => {
            let p = r.final_surface.area();
            SweepRow {
                volume: v,
                p_numerical: Some(p),
                p_candidate_winner: winner,
                p_halfspace: half,
                gap: Some((p - winner) / winner),
                converged: r.converged,
                error: None,
            }
        }
        Err(e) => SweepRow {
            volume: v,
            p_numerical: None,
            p_candidate_winner: winner,
            p_halfspace: half,
            gap: None,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

/// One minimization per volume. Failed rows are flagged and the sweep
/// continues.
pub fn profile_sweep(cone: &ConeSpec, volumes: &[f64], config: &OptimizationConfig) -> Result<SweepTable, OptimizeError> {
    if let Some(&v) = volumes.iter().find(|&&v| !(v > 0.0)) {
        return Err(OptimizeError::NonPositiveVolume(v));
    }
    let rows = volumes
        .iter()
        .map(|&v| {
            let cfg = OptimizationConfig {
                target_volume: v,
                ..config.clone()
            };
            sweep_row(cone, v, minimize(cone, &cfg))
        })
        .collect();
    Ok(SweepTable::from_rows(cone.n(), rows))
}
