use std::io::Write;
use std::path::Path;

use cone_iso_core::optimize::{sweep_row, SweepTable};
use cone_iso_core::surface::SurfaceFile;
use cone_iso_core::{
    analyze, assemble_run, candidate_profile, existence_report, minimize_restart, stationarity_report, CandidateProfile,
    ConeSpec, DiscreteHypersurface, IndexFormReport, OptimizationConfig, OptimizationRun, OptimizeError, Tolerances,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::args::{Common, ExistenceArgs, MinimizeArgs, OptimizerFlags, SurfaceArgs, SweepArgs, VolumesArgs};
use crate::config::{load_cone, load_config, read};
use crate::output::{csv_bytes, fmt17, fmt_opt, json_bytes, sha256_hex, OutputDir};
use crate::CliError;

pub struct Ctx<'a> {
    pub stdout: &'a mut dyn Write,
    pub command_line: String,
}

impl Ctx<'_> {
    fn print(&mut self, bytes: &[u8]) -> Result<(), CliError> {
        self.stdout.write_all(bytes).map_err(CliError::internal)
    }
}

fn check_volumes(volumes: &[f64]) -> Result<(), CliError> {
    match volumes.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(CliError::usage(format!("volume must be positive, got {v}"))),
        None => Ok(()),
    }
}

/// Writes `files` under `--out` (when given) followed by the manifest.
fn persist(
    ctx: &Ctx,
    common: &Common,
    cone: &ConeSpec,
    parameters: Value,
    files: Vec<(String, Vec<u8>)>,
) -> Result<(), CliError> {
    if let Some(root) = &common.out {
        let mut dir = OutputDir::create(root)?;
        for (rel, bytes) in &files {
            dir.write(rel, bytes)?;
        }
        dir.finish(ctx.command_line.clone(), cone, parameters)?;
    }
    Ok(())
}

const PROFILE_HEADER: [&str; 6] = [
    "volume",
    "perimeter_vertex",
    "perimeter_halfball",
    "perimeter_interior",
    "halfspace_profile",
    "winner",
];

fn profile_rows(cone: &ConeSpec, volumes: &[f64]) -> Result<Vec<CandidateProfile>, CliError> {
    volumes
        .iter()
        .map(|&v| candidate_profile(cone, v).map_err(|e| CliError::usage(e.to_string())))
        .collect()
}

fn profile_csv(rows: &[CandidateProfile]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &PROFILE_HEADER,
        rows.iter().map(|p| {
            vec![
                fmt17(p.volume),
                fmt17(p.perimeter_of("vertex")),
                fmt17(p.perimeter_of("halfball")),
                fmt17(p.perimeter_of("interior")),
                fmt17(p.halfspace_profile),
                p.winner.label().to_string(),
            ]
        }),
    )
}

pub fn profile(ctx: &mut Ctx, a: &VolumesArgs) -> Result<(), CliError> {
    check_volumes(&a.volumes)?;
    let cone = load_cone(a.common.cone.as_deref())?;
    let rows = profile_rows(&cone, &a.volumes)?;
    let csv = profile_csv(&rows)?;
    // P^{(n+1)/n} = c V along the winning family.
    let e = (cone.n() as f64 + 1.0) / cone.n() as f64;
    let constants: Vec<f64> = rows.iter().map(|p| p.winner_perimeter.powf(e) / p.volume).collect();
    let c = constants.iter().sum::<f64>() / constants.len() as f64;
    let spread = constants.iter().map(|k| (k - c).abs() / c).fold(0.0, f64::max);
    let fit = json!({ "exponent": e, "constant": c, "linearity_residual": spread });
    ctx.print(&csv)?;
    persist(
        ctx,
        &a.common,
        &cone,
        json!({ "volumes": a.volumes }),
        vec![("profile.csv".into(), csv), ("profile_fit.json".into(), json_bytes(&fit)?)],
    )
}

pub fn compare(ctx: &mut Ctx, a: &VolumesArgs) -> Result<(), CliError> {
    check_volumes(&a.volumes)?;
    let cone = load_cone(a.common.cone.as_deref())?;
    let rows = profile_rows(&cone, &a.volumes)?;
    let csv = profile_csv(&rows)?;
    ctx.print(&csv)?;
    persist(
        ctx,
        &a.common,
        &cone,
        json!({ "volumes": a.volumes }),
        vec![("compare.csv".into(), csv), ("compare.json".into(), json_bytes(&rows)?)],
    )
}

fn parse_probe(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::usage(format!("probe `{s}` is not of the form volume:perimeter"));
    let (v, p) = s.split_once(':').ok_or_else(bad)?;
    let (v, p): (f64, f64) = (v.trim().parse().map_err(|_| bad())?, p.trim().parse().map_err(|_| bad())?);
    if !(v > 0.0 && p > 0.0) {
        return Err(CliError::usage(format!("probe `{s}` needs positive volume and perimeter")));
    }
    Ok((v, p))
}

pub fn existence(ctx: &mut Ctx, a: &ExistenceArgs) -> Result<(), CliError> {
    let probes = a.probes.iter().map(|s| parse_probe(s)).collect::<Result<Vec<_>, _>>()?;
    let cone = load_cone(a.common.cone.as_deref())?;
    let report = existence_report(&cone, &probes);
    let bytes = json_bytes(&report)?;
    ctx.print(&bytes)?;
    persist(ctx, &a.common, &cone, json!({ "probes": probes }), vec![("existence.json".into(), bytes)])
}

fn flag_map(f: &OptimizerFlags, volume: Option<f64>) -> Map<String, Value> {
    let mut m = Map::new();
    if let Some(v) = volume {
        m.insert("target_volume".into(), json!(v));
    }
    if let Some(r) = f.resolution {
        m.insert("resolution".into(), json!(r));
    }
    if let Some(s) = f.seed {
        m.insert("rng_seed".into(), json!(s));
    }
    if let Some(r) = f.restarts {
        m.insert("restarts".into(), json!(r));
    }
    if let Some(i) = f.initializer {
        let init: cone_iso_core::Initializer = i.into();
        m.insert("initializer".into(), serde_json::to_value(init).expect("enum serializes"));
    }
    if let Some(k) = f.max_iterations {
        m.insert("max_iterations".into(), json!(k));
    }
    m
}

fn optimize_error(e: OptimizeError) -> CliError {
    match e {
        OptimizeError::NonPositiveVolume(_)
        | OptimizeError::InvalidConfig(_)
        | OptimizeError::UnsupportedCone(_)
        | OptimizeError::UnsupportedInitializer(_)
        | OptimizeError::Candidate(_) => CliError::usage(e.to_string()),
        _ => CliError::internal(e),
    }
}

/// Worker pool sized by `CONE_ISO_THREADS` (unset or 0 means one worker
/// per core).
fn pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("CONE_ISO_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::usage(format!("CONE_ISO_THREADS must be a non-negative integer, got `{s}`")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(CliError::internal)
}

/// Runs every restart of every config on the pool; results come back in
/// input order, so the outcome does not depend on scheduling.
fn run_all(cone: &ConeSpec, configs: &[OptimizationConfig]) -> Result<Vec<Result<OptimizationRun, OptimizeError>>, CliError> {
    let tasks: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.restarts).map(move |k| (i, k)))
        .collect();
    let mut outcomes: Vec<_> = pool()?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, k)| (i, minimize_restart(cone, &configs[i], k)))
            .collect()
    });
    let mut runs = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate().rev() {
        let mine: Vec<_> = outcomes.split_off(outcomes.len() - cfg.restarts);
        debug_assert!(mine.iter().all(|(j, _)| *j == i));
        runs.push(assemble_run(cone, cfg, mine.into_iter().map(|(_, o)| o).collect()));
    }
    runs.reverse();
    Ok(runs)
}

const TRACE_HEADER: [&str; 6] = ["iter", "perimeter", "volume", "grad_norm", "contact_residual", "curvature_spread"];

pub fn trace_csv(run: &OptimizationRun) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &TRACE_HEADER,
        run.trace.iter().map(|r| {
            vec![
                r.iter.to_string(),
                fmt17(r.perimeter),
                fmt17(r.volume),
                fmt17(r.grad_norm),
                fmt17(r.contact_residual),
                fmt17(r.curvature_spread),
            ]
        }),
    )
}

/// Content-derived run id: identical inputs give identical directories.
pub fn run_id(cone: &ConeSpec, cfg: &OptimizationConfig) -> String {
    let key = serde_json::to_vec(&json!({ "cone": cone, "config": cfg })).expect("serializable");
    sha256_hex(&key)[..12].to_string()
}

fn run_report(run: &OptimizationRun) -> Result<Value, CliError> {
    let stationarity = stationarity_report(run).map_err(CliError::internal)?;
    let stability = analyze(&run.final_surface, &Tolerances::default());
    let winner = candidate_profile(run.final_surface.cone(), run.config.target_volume).map_err(CliError::internal)?;
    Ok(json!({
        "converged": run.converged,
        "iterations": run.iterations,
        "restart": run.restart,
        "restart_perimeters": run.restart_perimeters,
        "perimeter": run.final_surface.area(),
        "volume": run.final_surface.enclosed_volume().ok(),
        "multiplier": run.multiplier,
        "candidate_winner": winner.winner,
        "candidate_perimeter": winner.winner_perimeter,
        "best_candidate_gap": run.best_candidate_gap,
        "bounded": run.bounded,
        "warnings": run.warnings,
        "stationarity": stationarity,
        "stability": stability.as_ref().ok(),
        "stability_error": stability.as_ref().err().map(|e| e.to_string()),
    }))
}

/// Run directory name and its files, relative to the output root.
type RunFiles = (String, Vec<(String, Vec<u8>)>);

fn run_files(cone: &ConeSpec, run: &OptimizationRun) -> Result<RunFiles, CliError> {
    let dir = format!("run-{}", run_id(cone, &run.config));
    let files = vec![
        (format!("{dir}/config.json"), json_bytes(&run.config)?),
        (format!("{dir}/trace.csv"), trace_csv(run)?),
        (format!("{dir}/final_surface.json"), json_bytes(&run.final_surface.to_file())?),
        (format!("{dir}/report.json"), json_bytes(&run_report(run)?)?),
    ];
    Ok((dir, files))
}

fn require_out(common: &Common, command: &str) -> Result<(), CliError> {
    match common.out {
        Some(_) => Ok(()),
        None => Err(CliError::usage(format!("{command} needs --out <dir>"))),
    }
}

pub fn minimize(ctx: &mut Ctx, a: &MinimizeArgs) -> Result<(), CliError> {
    if let Some(v) = a.volume {
        check_volumes(&[v])?;
    }
    let cfg = load_config(a.optimizer.config.as_deref(), &flag_map(&a.optimizer, a.volume))?;
    let cone = load_cone(a.common.cone.as_deref())?;
    require_out(&a.common, "minimize")?;
    let run = run_all(&cone, std::slice::from_ref(&cfg))?
        .pop()
        .expect("one config")
        .map_err(optimize_error)?;
    let (dir, files) = run_files(&cone, &run)?;
    let line = format!(
        "{dir}: perimeter={} volume={} converged={} iterations={} gap={}\n",
        fmt17(run.final_surface.area()),
        fmt_opt(run.final_surface.enclosed_volume().ok()),
        run.converged,
        run.iterations,
        fmt17(run.best_candidate_gap),
    );
    ctx.print(line.as_bytes())?;
    persist(ctx, &a.common, &cone, serde_json::to_value(&cfg).map_err(CliError::internal)?, files)
}

const SWEEP_HEADER: [&str; 7] = [
    "volume",
    "p_numerical",
    "p_candidate_winner",
    "p_halfspace",
    "gap",
    "converged",
    "error",
];

pub fn sweep(ctx: &mut Ctx, a: &SweepArgs) -> Result<(), CliError> {
    check_volumes(&a.volumes)?;
    let base = load_config(a.optimizer.config.as_deref(), &flag_map(&a.optimizer, None))?;
    let cone = load_cone(a.common.cone.as_deref())?;
    require_out(&a.common, "sweep")?;
    let configs: Vec<OptimizationConfig> = a
        .volumes
        .iter()
        .map(|&v| OptimizationConfig {
            target_volume: v,
            ..base.clone()
        })
        .collect();
    let runs = run_all(&cone, &configs)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (&v, run) in a.volumes.iter().zip(runs) {
        // Problems with the request itself are the same for every row.
        if let Err(
            e @ (OptimizeError::UnsupportedCone(_) | OptimizeError::UnsupportedInitializer(_) | OptimizeError::InvalidConfig(_)),
        ) = run
        {
            return Err(optimize_error(e));
        }
        if let Ok(r) = &run {
            files.extend(run_files(&cone, r)?.1);
        }
        rows.push(sweep_row(&cone, v, run));
    }
    let table = SweepTable::from_rows(cone.n(), rows);
    let csv = csv_bytes(
        &SWEEP_HEADER,
        table.rows.iter().map(|r| {
            vec![
                fmt17(r.volume),
                fmt_opt(r.p_numerical),
                fmt17(r.p_candidate_winner),
                fmt17(r.p_halfspace),
                fmt_opt(r.gap),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    ctx.print(&csv)?;
    files.insert(0, ("sweep.csv".into(), csv));
    files.insert(1, ("sweep.json".into(), json_bytes(&table)?));
    let mut params = serde_json::to_value(&base).map_err(CliError::internal)?;
    params["volumes"] = json!(a.volumes);
    if let Some(m) = params.as_object_mut() {
        m.remove("target_volume");
    }
    persist(ctx, &a.common, &cone, params, files)
}

fn load_surface(cone: &ConeSpec, path: &Path) -> Result<DiscreteHypersurface, CliError> {
    let text = read(path, "surface")?;
    let file: SurfaceFile =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid surface JSON: {e}")))?;
    DiscreteHypersurface::from_file(cone, &file).map_err(|e| CliError::usage(format!("invalid surface: {e}")))
}

const QUANTITY_HEADER: [&str; 9] = ["idx", "x", "y", "z", "H", "sigma2", "g", "area_weight", "is_boundary"];

fn quantities_csv(s: &DiscreteHypersurface) -> Result<Vec<u8>, CliError> {
    let q = s.quantities().map_err(|e| CliError::usage(e.to_string()))?;
    csv_bytes(
        &QUANTITY_HEADER,
        s.points().iter().enumerate().map(|(i, p)| {
            vec![
                i.to_string(),
                fmt17(p.x),
                fmt17(p.y),
                fmt17(p.z),
                fmt17(q.mean_curvature[i]),
                fmt17(q.sigma2[i]),
                fmt17(q.support[i]),
                fmt17(q.area_weights[i]),
                u8::from(s.boundary_flags()[i]).to_string(),
            ]
        }),
    )
}

fn table(rows: &[(&str, String)]) -> String {
    rows.iter().map(|(k, v)| format!("{k:<28}{v}\n")).collect()
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(|| String::from("n/a"), |v| format!("{v:.6e}"))
}

fn report_table(r: &IndexFormReport) -> String {
    let mut rows = vec![
        ("representation", format!("{:?}", r.representation)),
        ("vertices", r.vertex_count.to_string()),
        ("area", format!("{:.12}", r.area)),
        ("enclosed_volume", format!("{:.12}", r.enclosed_volume)),
        ("mean_curvature", format!("{:.12}", r.mean_curvature)),
        ("curvature_spread", format!("{:.6e}", r.curvature_spread)),
        ("contact_residual", format!("{:.6e}", r.contact_residual)),
        ("q_direct", format!("{:.6e}", r.q_direct)),
        ("q_gradient_form", format!("{:.6e}", r.q_gradient_form)),
        ("q_closed", format!("{:.6e}", r.q_closed)),
        ("minkowski1_residual", format!("{:.6e}", r.minkowski1_residual)),
        ("minkowski2_residual", format!("{:.6e}", r.minkowski2_residual)),
        ("boundary_identity_residual", opt_cell(r.boundary_identity_residual)),
        ("umbilicity_defect", format!("{:.6e}", r.umbilicity_defect)),
        ("max_boundary_ii", format!("{:.6e}", r.max_boundary_ii)),
        ("verdict", r.verdict.label().to_string()),
    ];
    for d in &r.diagnostics {
        rows.push(("note", d.clone()));
    }
    table(&rows)
}

fn report_for(cone: &ConeSpec, a: &SurfaceArgs) -> Result<(DiscreteHypersurface, IndexFormReport), CliError> {
    let s = load_surface(cone, &a.surface)?;
    let r = analyze(&s, &Tolerances::default()).map_err(|e| CliError::usage(e.to_string()))?;
    Ok((s, r))
}

pub fn stability(ctx: &mut Ctx, a: &SurfaceArgs) -> Result<(), CliError> {
    let cone = load_cone(a.common.cone.as_deref())?;
    let (s, report) = report_for(&cone, a)?;
    let mut value = serde_json::to_value(&report).map_err(CliError::internal)?;
    value["resolution"] = json!({
        "vertex_count": s.vertex_count(),
        "element_count": match s.representation() {
            cone_iso_core::Representation::TriangleMesh => s.triangles().len(),
            _ => s.segments().len(),
        },
    });
    ctx.print(report_table(&report).as_bytes())?;
    let files = vec![
        ("stability.json".into(), json_bytes(&value)?),
        ("quantities.csv".into(), quantities_csv(&s)?),
    ];
    persist(ctx, &a.common, &cone, json!({ "surface": a.surface }), files)
}

/// Verification bundle for one surface. Each residual is scale-free.
#[derive(serde::Serialize)]
pub struct Checks {
    pub minkowski1_residual: f64,
    pub minkowski2_residual: f64,
    pub boundary_identity_residual: Option<f64>,
    /// `|Q_direct - Q_gradient_form| / area`.
    pub index_form_gradient_gap: f64,
    /// `|Q_direct - Q_closed| / area`.
    pub index_form_closed_gap: f64,
    pub contact_residual: f64,
    pub curvature_spread: f64,
    pub verdict: cone_iso_core::Verdict,
}

pub fn checks(ctx: &mut Ctx, a: &SurfaceArgs) -> Result<(), CliError> {
    let cone = load_cone(a.common.cone.as_deref())?;
    let (_, r) = report_for(&cone, a)?;
    let c = Checks {
        minkowski1_residual: r.minkowski1_residual,
        minkowski2_residual: r.minkowski2_residual,
        boundary_identity_residual: r.boundary_identity_residual,
        index_form_gradient_gap: (r.q_direct - r.q_gradient_form).abs() / r.area,
        index_form_closed_gap: (r.q_direct - r.q_closed).abs() / r.area,
        contact_residual: r.contact_residual,
        curvature_spread: r.curvature_spread,
        verdict: r.verdict,
    };
    let text = table(&[
        ("minkowski1_residual", format!("{:.6e}", c.minkowski1_residual)),
        ("minkowski2_residual", format!("{:.6e}", c.minkowski2_residual)),
        ("boundary_identity_residual", opt_cell(c.boundary_identity_residual)),
        ("index_form_gradient_gap", format!("{:.6e}", c.index_form_gradient_gap)),
        ("index_form_closed_gap", format!("{:.6e}", c.index_form_closed_gap)),
        ("contact_residual", format!("{:.6e}", c.contact_residual)),
        ("curvature_spread", format!("{:.6e}", c.curvature_spread)),
        ("verdict", c.verdict.label().to_string()),
    ]);
    ctx.print(text.as_bytes())?;
    persist(ctx, &a.common, &cone, json!({ "surface": a.surface }), vec![("checks.json".into(), json_bytes(&c)?)])
}
