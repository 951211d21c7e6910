//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always shown.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use cone_iso::run_with;
use cone_iso_core::candidates::Winner;
use cone_iso_core::stability::{boundary_identity, index_form, minkowski_checks, profile_derivative_checks, q_closed};
use cone_iso_core::surface::shapes::{
    axisymmetric_vertex_cap, ellipsoid_mesh, half_disk_on_ray, icosphere, spherical_cap_mesh, tilted_arc, vertex_arc,
    vertex_cap_mesh,
};
use cone_iso_core::{
    analyze, candidate_profile, classify, halfspace_profile, minimize, stationarity_report, ConeSpec,
    DiscreteHypersurface, Initializer, OptimizationConfig, Tolerances, Vec3, Verdict,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Family = Box<dyn Fn(usize) -> DiscreteHypersurface>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_halfspace_profile() -> Outcome {
    let a = halfspace_profile(1, 2.0 * PI).map_err(|e| e.to_string())?;
    let b = halfspace_profile(2, 2.0 * PI / 3.0).map_err(|e| e.to_string())?;
    check((a - 2.0 * PI).abs() <= 1e-12 && (b - 2.0 * PI).abs() <= 1e-12, || format!("I_1 = {a}, I_2 = {b}"))?;
    Ok(format!("I_1(2π) - 2π = {:.1e}, I_2(2π/3) - 2π = {:.1e}", a - 2.0 * PI, b - 2.0 * PI))
}

fn c2_crossover() -> Outcome {
    for v in [0.1, 1.0, 10.0] {
        for (theta, want) in [(PI - 0.01, Winner::Vertex), (PI, Winner::Tie), (PI + 0.01, Winner::Halfball)] {
            let cone = ConeSpec::sector(theta).map_err(|e| e.to_string())?;
            let p = candidate_profile(&cone, v).map_err(|e| e.to_string())?;
            check(p.winner == want, || format!("θ = {theta}, V = {v}: {:?}", p.winner))?;
            if want == Winner::Tie {
                let gap = (p.perimeter_of("vertex") - p.perimeter_of("halfball")).abs();
                check(gap <= 1e-12 * p.winner_perimeter, || format!("tie gap {gap}"))?;
            }
        }
    }
    Ok(String::from("vertex / tie / halfball at θ = π - 0.01, π, π + 0.01 for V in {0.1, 1, 10}"))
}

fn c3_scaling_law() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let cone = match k % 3 {
            0 => ConeSpec::sector(rng.random_range(0.2..6.0)),
            1 => ConeSpec::circular(3, rng.random_range(0.1..3.0)),
            _ => ConeSpec::circular(4, rng.random_range(0.1..3.0)),
        }
        .map_err(|e| e.to_string())?;
        let n = cone.n() as i32;
        let v = rng.random_range(0.1..10.0);
        let base = candidate_profile(&cone, v).map_err(|e| e.to_string())?.winner_perimeter;
        for lambda in [0.5f64, 2.0, 10.0] {
            let scaled = candidate_profile(&cone, lambda.powi(n + 1) * v).map_err(|e| e.to_string())?.winner_perimeter;
            let err = (scaled - lambda.powi(n) * base).abs() / scaled;
            worst = worst.max(err);
        }
    }
    check(worst <= 1e-10, || format!("relative error {worst:.2e}"))?;
    Ok(format!("5 cones, worst relative error {worst:.1e}"))
}

fn hausdorff_to_arc(pts: &[[f64; 2]], r: f64, theta: f64) -> f64 {
    let arc: Vec<[f64; 2]> = (0..=4000)
        .map(|k| {
            let t = theta * k as f64 / 4000.0;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let to_polyline = |q: [f64; 2]| {
        pts.windows(2)
            .map(|w| {
                let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
                let t = (((q[0] - w[0][0]) * d[0] + (q[1] - w[0][1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
                dist(q, [w[0][0] + t * d[0], w[0][1] + t * d[1]])
            })
            .fold(f64::INFINITY, f64::min)
    };
    let one = arc.iter().map(|q| to_polyline(*q)).fold(0.0, f64::max);
    let two = pts
        .iter()
        .map(|p| arc.iter().map(|a| dist(*p, *a)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    one.max(two)
}

const QUARTER: &str = r#"{"ambient_dim":2,"shape":{"kind":"sector","theta":1.5707963267948966}}"#;

/// Criterion 4 through the command line; returns the run directory.
fn quarter_run(out: &Path) -> Result<std::path::PathBuf, String> {
    let volume = format!("{}", PI / 4.0);
    let args = [
        "cone-iso",
        "minimize",
        "--cone",
        QUARTER,
        "--volume",
        &volume,
        "--resolution",
        "200",
        "--restarts",
        "3",
        "--initializer",
        "random-blob",
        "--seed",
        "2024",
        "--out",
        out.to_str().unwrap(),
    ];
    let (mut so, mut se) = (Vec::new(), Vec::new());
    let code = run_with(args, &mut so, &mut se);
    check(code == 0, || format!("exit {code}: {}", String::from_utf8_lossy(&se)))?;
    let run = fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.is_dir())
        .ok_or("no run directory")?;
    Ok(run)
}

fn c4_quarter_sector(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let run = quarter_run(&tmp.join("c4"))?;
    let secs = start.elapsed().as_secs_f64();
    let surface: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("final_surface.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let pts: Vec<[f64; 2]> = surface["vertices"]
        .as_array()
        .ok_or("no vertices")?
        .iter()
        .map(|v| [v[0].as_f64().unwrap(), v[1].as_f64().unwrap()])
        .collect();
    let p: f64 = pts.windows(2).map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt()).sum();
    let h = hausdorff_to_arc(&pts, 1.0, FRAC_PI_2);
    check((p - FRAC_PI_2).abs() <= 0.01 * FRAC_PI_2, || format!("P = {p}"))?;
    check(h <= 0.02, || format!("Hausdorff distance {h}"))?;
    check(secs <= 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("P = {p:.7} (π/2 = {FRAC_PI_2:.7}), Hausdorff {h:.1e}, {secs:.2} s"))
}

fn c5_nonconvex_sector() -> Outcome {
    let cone = ConeSpec::sector(1.5 * PI).map_err(|e| e.to_string())?;
    let cfg = OptimizationConfig {
        target_volume: FRAC_PI_2,
        initializer: Initializer::RandomBlob,
        restarts: 5,
        rng_seed: 7,
        ..Default::default()
    };
    let run = minimize(&cone, &cfg).map_err(|e| e.to_string())?;
    let p = run.final_surface.area();
    let vertex = (2.0 * 1.5 * PI * FRAC_PI_2).sqrt();
    check((p - PI).abs() <= 0.02 * PI, || format!("P = {p}"))?;
    check(p <= 0.85 * vertex, || format!("P = {p} vs vertex arc {vertex}"))?;
    Ok(format!("P = {p:.6}, {:.1}% below the vertex arc {vertex:.4}", 100.0 * (1.0 - p / vertex)))
}

fn c6_circular_cone() -> Outcome {
    let cone = ConeSpec::circular(3, PI / 3.0).map_err(|e| e.to_string())?;
    let run = minimize(&cone, &OptimizationConfig { target_volume: PI / 3.0, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let st = stationarity_report(&run).map_err(|e| e.to_string())?;
    let verdict = classify(&run.final_surface, &Tolerances::default()).map_err(|e| e.to_string())?;
    check((st.mean_curvature - 1.0).abs() <= 0.02, || format!("H̄ = {}", st.mean_curvature))?;
    check(st.multiplier_gap <= 0.02, || format!("multiplier gap {}", st.multiplier_gap))?;
    check(verdict == Verdict::VertexBallCap, || format!("verdict {verdict:?}"))?;
    Ok(format!("H̄ = {:.6}, multiplier gap {:.1e}, {}", st.mean_curvature, st.multiplier_gap, verdict.label()))
}

/// Residuals below this are roundoff and need not keep halving.
const FLOOR: f64 = 1e-12;

fn c7_minkowski() -> Outcome {
    let families: [(&str, Family); 3] = [
        (
            "sphere",
            Box::new(|l| icosphere(&ConeSpec::euclidean(3).unwrap(), Vec3::ZERO, 1.0, l).unwrap()),
        ),
        (
            "vertex cap",
            Box::new(|l| vertex_cap_mesh(&ConeSpec::circular(3, FRAC_PI_4).unwrap(), 1.0, l).unwrap()),
        ),
        (
            "half-sphere",
            Box::new(|l| {
                spherical_cap_mesh(&ConeSpec::halfspace(3).unwrap(), Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 1.0, FRAC_PI_2, l)
                    .unwrap()
            }),
        ),
    ];
    let mut summary = Vec::new();
    for (name, make) in &families {
        let res: Vec<(f64, f64)> = (1..=4)
            .map(|l| minkowski_checks(&make(l).quantities().unwrap()))
            .collect();
        for w in res.windows(2) {
            for (a, b) in [(w[0].0, w[1].0), (w[0].1, w[1].1)] {
                check(b <= FLOOR || b <= 0.5 * a, || format!("{name}: {a:.2e} -> {b:.2e}"))?;
            }
        }
        let (m1, m2) = res[3];
        check(m1 <= 1e-6 && m2 <= 1e-6, || format!("{name}: level 4 residuals {m1:.2e}, {m2:.2e}"))?;
        summary.push(format!("{name} {m1:.1e}/{m2:.1e}"));
    }
    Ok(format!("level 4: {}", summary.join(", ")))
}

fn c8_boundary_identity() -> Outcome {
    let tol = Tolerances::default();
    let bi = |s: DiscreteHypersurface| boundary_identity(&s.quantities().unwrap(), &tol).map_err(|e| e.to_string());
    let cap = bi(vertex_cap_mesh(&ConeSpec::circular(3, FRAC_PI_4).unwrap(), 1.0, 4).unwrap())?;
    check(cap <= 1e-4, || format!("vertex cap {cap:.2e}"))?;
    let flat = [
        bi(vertex_arc(&ConeSpec::sector(FRAC_PI_2).unwrap(), 1.0, 200).unwrap())?,
        bi(half_disk_on_ray(&ConeSpec::sector(1.5 * PI).unwrap(), 2.0, 1.0, 200).unwrap())?,
        bi(spherical_cap_mesh(&ConeSpec::halfspace(3).unwrap(), Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 1.0, FRAC_PI_2, 4)
            .unwrap())?,
    ];
    let worst = flat.iter().copied().fold(0.0, f64::max);
    check(worst <= 1e-6, || format!("flat walls {flat:?}"))?;
    Ok(format!("vertex cap {cap:.1e}, flat walls ≤ {worst:.1e}"))
}

fn c9_index_form() -> Outcome {
    let c3 = ConeSpec::circular(3, PI / 3.0).unwrap();
    let c4 = ConeSpec::circular(3, FRAC_PI_4).unwrap();
    let half = ConeSpec::halfspace(3).unwrap();
    let umbilical = [
        vertex_cap_mesh(&c4, 1.0, 4).unwrap(),
        axisymmetric_vertex_cap(&c3, 1.0, 200).unwrap(),
        spherical_cap_mesh(&half, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 1.0, FRAC_PI_2, 4).unwrap(),
        icosphere(&c3, Vec3::new(0.0, 0.0, 5.0), 1.0, 4).unwrap(),
    ];
    let mut worst_gap: f64 = 0.0;
    let mut worst_q = f64::NEG_INFINITY;
    for s in &umbilical {
        let q = s.quantities().unwrap();
        let (qd, qg) = index_form(s, &q, &q.test_function());
        let qc = q_closed(&q);
        let gap = (qd - qg).abs().max((qd - qc).abs()) / s.area();
        worst_gap = worst_gap.max(gap);
        worst_q = worst_q.max(qc);
        check(gap <= 1e-3, || format!("gap {gap:.2e} on {:?}", s.representation()))?;
        // ε_h: the discretization tolerance of the consistency check.
        check(qc <= 1e-6 + 1e-3 * s.area(), || format!("Q_closed = {qc:.2e}"))?;
    }
    let egg = ellipsoid_mesh(&c3, Vec3::new(0.0, 0.0, 5.0), [1.0, 1.0, 1.2], 4).unwrap();
    let qe = q_closed(&egg.quantities().unwrap());
    check(qe < -0.05, || format!("ellipsoid Q_closed = {qe}"))?;
    Ok(format!("gaps ≤ {worst_gap:.1e}·area, max Q_closed {worst_q:.1e}, ellipsoid Q_closed {qe:.4}"))
}

fn c10_derivatives() -> Outcome {
    let mut worst: f64 = 0.0;
    for cone in [ConeSpec::sector(FRAC_PI_2).unwrap(), ConeSpec::circular(3, PI / 3.0).unwrap()] {
        for r in [0.5, 1.0, 2.0] {
            let d = profile_derivative_checks(&cone, r).map_err(|e| e.to_string())?;
            let n_h = cone.n() as f64 / r;
            worst = worst.max((d.dp_dv - n_h).abs()).max(d.convexity_second_difference.abs());
            check((d.dp_dv - n_h).abs() <= 1e-8, || format!("dP/dV = {} vs nH = {n_h}", d.dp_dv))?;
            check(d.convexity_second_difference.abs() <= 1e-8, || {
                format!("second derivative {}", d.convexity_second_difference)
            })?;
        }
    }
    Ok(format!("worst residual {worst:.1e}"))
}

fn c11_stationarity_detector() -> Outcome {
    let s = tilted_arc(&ConeSpec::sector(FRAC_PI_2).unwrap(), 10f64.to_radians(), 1.0, 1.5, 200)
        .map_err(|e| e.to_string())?;
    let r = analyze(&s, &Tolerances::default()).map_err(|e| e.to_string())?;
    check(r.verdict == Verdict::NotStationary, || format!("verdict {:?}", r.verdict))?;
    check(r.minkowski1_residual > 1e-2, || format!("minkowski1 {}", r.minkowski1_residual))?;
    Ok(format!("NotStationary, minkowski1 = {:.3e}", r.minkowski1_residual))
}

fn c12_reproducibility(tmp: &Path) -> Outcome {
    let a = fs::read(quarter_run(&tmp.join("c12a"))?.join("trace.csv")).map_err(|e| e.to_string())?;
    let b = fs::read(quarter_run(&tmp.join("c12b"))?.join("trace.csv")).map_err(|e| e.to_string())?;
    check(a == b, || String::from("trace.csv differs between runs"))?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let t = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("half-space profile", Box::new(c1_halfspace_profile)),
        ("candidate crossover", Box::new(c2_crossover)),
        ("scaling law", Box::new(c3_scaling_law)),
        ("optimizer on a quarter plane", Box::new(move || c4_quarter_sector(t))),
        ("optimizer on Sector(3π/2)", Box::new(c5_nonconvex_sector)),
        ("optimizer on Circular(π/3)", Box::new(c6_circular_cone)),
        ("Minkowski formulas", Box::new(c7_minkowski)),
        ("boundary identity", Box::new(c8_boundary_identity)),
        ("index form", Box::new(c9_index_form)),
        ("profile derivatives", Box::new(c10_derivatives)),
        ("stationarity detector", Box::new(c11_stationarity_detector)),
        ("reproducible trace", Box::new(move || c12_reproducibility(t))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
