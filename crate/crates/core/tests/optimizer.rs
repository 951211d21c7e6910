use cone_iso_core::{
    assemble_run, classify, minimize, minimize_restart, profile_sweep, stationarity_report, SweepTable, ConeSpec,
    DiscreteHypersurface, Initializer, OptimizationConfig, OptimizationRun, OptimizeError, Tolerances, Vec2, Verdict,
};
use cone_iso_core::optimize::sweep_row;
use std::f64::consts::{FRAC_PI_2, PI};

fn config(v: f64) -> OptimizationConfig {
    OptimizationConfig {
        target_volume: v,
        ..Default::default()
    }
}

/// Hausdorff distance between a planar polyline and the arc of radius `r`
/// about the origin between the angles `from` and `to`, sampled densely on
/// both sides.
fn hausdorff_to_arc(s: &DiscreteHypersurface, r: f64, from: f64, to: f64) -> f64 {
    let pts: Vec<Vec2> = s.points().iter().map(|p| p.xy()).collect();
    let arc: Vec<Vec2> = (0..=4000)
        .map(|k| Vec2::from_angle(from + (to - from) * k as f64 / 4000.0) * r)
        .collect();
    let to_polyline = |q: Vec2| {
        pts.windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                let t = ((q - w[0]).dot(d) / d.dot(d)).clamp(0.0, 1.0);
                (q - (w[0] + d * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let to_arc = |q: Vec2| arc.iter().map(|a| (q - *a).norm()).fold(f64::INFINITY, f64::min);
    let mut h: f64 = 0.0;
    for q in &arc {
        h = h.max(to_polyline(*q));
    }
    for p in &pts {
        h = h.max(to_arc(*p));
    }
    h
}

fn assert_monotone(run: &OptimizationRun) {
    for w in run.trace.windows(2) {
        if w[0].epoch == w[1].epoch {
            assert!(w[1].merit <= w[0].merit, "merit rose at iteration {}", w[1].iter);
        }
    }
}

#[test]
fn quarter_sector_converges_to_the_vertex_arc() {
    let cone = ConeSpec::sector(FRAC_PI_2).unwrap();
    let run = minimize(&cone, &config(PI / 4.0)).unwrap();
    assert!(run.converged);
    let p = run.final_surface.area();
    assert!((p - FRAC_PI_2).abs() < 0.01 * FRAC_PI_2, "P = {p}");
    assert!(hausdorff_to_arc(&run.final_surface, 1.0, 0.0, FRAC_PI_2) < 0.02);
    let v = run.final_surface.enclosed_volume().unwrap();
    assert!((v - PI / 4.0).abs() <= 1e-8 * PI / 4.0 + 1e-12);
    assert_monotone(&run);
    assert!(run.bounded);
    assert!(run.best_candidate_gap.abs() < 1e-3);

    let st = stationarity_report(&run).unwrap();
    assert!(st.converged);
    assert!(st.curvature_spread <= 0.02 && st.contact_residual <= 1e-2 && st.multiplier_gap <= 0.02, "{st:?}");
    assert_eq!(classify(&run.final_surface, &Tolerances::default()).unwrap(), Verdict::VertexBallCap);
}

#[test]
fn wide_sector_prefers_the_half_disk() {
    let cone = ConeSpec::sector(1.5 * PI).unwrap();
    let cfg = OptimizationConfig {
        target_volume: FRAC_PI_2,
        initializer: Initializer::RandomBlob,
        restarts: 5,
        rng_seed: 11,
        ..Default::default()
    };
    let run = minimize(&cone, &cfg).unwrap();
    assert!(run.converged);
    let p = run.final_surface.area();
    assert!((p - PI).abs() < 0.02 * PI, "P = {p}");
    assert!(p < 1.5f64.sqrt() * PI);
    assert_eq!(run.restart_perimeters.len(), 5);
    assert_monotone(&run);
}

#[test]
fn circular_cone_vertex_cap() {
    let cone = ConeSpec::circular(3, PI / 3.0).unwrap();
    let run = minimize(&cone, &config(PI / 3.0)).unwrap();
    assert!(run.converged);
    let st = stationarity_report(&run).unwrap();
    assert!((st.mean_curvature - 1.0).abs() < 0.02, "{st:?}");
    assert!(st.multiplier_gap < 0.02);
    // V = 2π(1 - cos α) r³/3 gives r = 1, so P = 2π(1 - cos α) = π.
    assert!((run.final_surface.area() - PI).abs() < 0.01 * PI);
    assert_monotone(&run);
    assert_eq!(classify(&run.final_surface, &Tolerances::default()).unwrap(), Verdict::VertexBallCap);
}

#[test]
fn flat_start_in_the_half_space_gives_the_half_ball() {
    for dim in [2, 3] {
        let cone = ConeSpec::halfspace(dim).unwrap();
        let cfg = OptimizationConfig {
            target_volume: 1.0,
            initializer: Initializer::BoundaryHalfBall,
            ..Default::default()
        };
        let run = minimize(&cone, &cfg).unwrap();
        assert!(run.converged, "dimension {dim}");
        let st = stationarity_report(&run).unwrap();
        assert!(st.multiplier_gap <= 0.02, "{st:?}");
        assert!(run.best_candidate_gap.abs() < 1e-2);
        assert_eq!(
            classify(&run.final_surface, &Tolerances::default()).unwrap(),
            Verdict::BoundaryHalfSphereOnFlatPiece
        );
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let cone = ConeSpec::sector(1.0).unwrap();
    for v in [0.0, -1.0, f64::NAN] {
        assert!(matches!(minimize(&cone, &config(v)), Err(OptimizeError::NonPositiveVolume(_))));
    }
    let bad = [
        OptimizationConfig { resolution: 4, ..config(1.0) },
        OptimizationConfig { penalty_growth: 1.0, ..config(1.0) },
        OptimizationConfig { grad_tolerance: 0.0, ..config(1.0) },
        OptimizationConfig { restarts: 0, ..config(1.0) },
    ];
    for cfg in &bad {
        assert!(matches!(minimize(&cone, cfg), Err(OptimizeError::InvalidConfig(_))));
    }
    for c in [
        ConeSpec::euclidean(2).unwrap(),
        ConeSpec::circular(4, 1.0).unwrap(),
        ConeSpec::polyhedral(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap(),
    ] {
        assert!(matches!(minimize(&c, &config(1.0)), Err(OptimizeError::UnsupportedCone(_))));
    }
    let c3 = ConeSpec::circular(3, 1.0).unwrap();
    let cfg = OptimizationConfig { initializer: Initializer::BoundaryHalfBall, ..config(1.0) };
    assert!(matches!(minimize(&c3, &cfg), Err(OptimizeError::UnsupportedInitializer(_))));
}

#[test]
fn identical_seeds_give_identical_traces() {
    let cone = ConeSpec::sector(2.0).unwrap();
    let cfg = OptimizationConfig {
        target_volume: 0.7,
        initializer: Initializer::RandomBlob,
        restarts: 2,
        rng_seed: 42,
        ..Default::default()
    };
    let a = minimize(&cone, &cfg).unwrap();
    let b = minimize(&cone, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.final_surface.points(), b.final_surface.points());
    let other = minimize(&cone, &OptimizationConfig { rng_seed: 43, ..cfg.clone() }).unwrap();
    assert_ne!(a.trace, other.trace);
}

#[test]
fn restarts_do_not_depend_on_execution_order() {
    let cone = ConeSpec::sector(2.5).unwrap();
    let cfg = OptimizationConfig {
        target_volume: 1.0,
        initializer: Initializer::RandomBlob,
        restarts: 3,
        rng_seed: 5,
        ..Default::default()
    };
    let sequential = minimize(&cone, &cfg).unwrap();
    let handles: Vec<_> = (0..cfg.restarts)
        .rev()
        .map(|k| {
            let (cone, cfg) = (cone.clone(), cfg.clone());
            std::thread::spawn(move || minimize_restart(&cone, &cfg, k))
        })
        .collect();
    let mut outcomes: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    outcomes.reverse();
    let parallel = assemble_run(&cone, &cfg, outcomes).unwrap();
    assert_eq!(sequential.trace, parallel.trace);
    assert_eq!(sequential.restart, parallel.restart);
    assert_eq!(sequential.restart_perimeters, parallel.restart_perimeters);
}

#[test]
fn dilation_equivariance() {
    let cone = ConeSpec::sector(1.3).unwrap();
    let base = minimize(&cone, &config(0.6)).unwrap();
    for lambda in [0.5, 3.0] {
        let scaled = minimize(&cone, &config(lambda * lambda * 0.6)).unwrap();
        let expected = lambda * base.final_surface.area();
        assert!((scaled.final_surface.area() - expected).abs() < 1e-6 * expected);
        let rescaled = base.final_surface.scaled(lambda);
        assert!((rescaled.area() - scaled.final_surface.area()).abs() < 1e-6 * expected);
    }
    let c3 = ConeSpec::circular(3, 0.9).unwrap();
    let base = minimize(&c3, &config(0.5)).unwrap();
    let scaled = minimize(&c3, &config(8.0 * 0.5)).unwrap();
    assert!((scaled.final_surface.area() - 4.0 * base.final_surface.area()).abs() < 1e-5 * scaled.final_surface.area());
}

#[test]
fn quarter_sector_sweep_follows_the_power_law() {
    let cone = ConeSpec::sector(FRAC_PI_2).unwrap();
    let table = profile_sweep(&cone, &[0.25, 0.5, 1.0, 2.0], &OptimizationConfig::default()).unwrap();
    let c = table.fitted_constant.unwrap();
    assert!((c - PI).abs() < 0.02 * PI, "P²/V = {c}");
    assert!(table.linearity_residual.unwrap() < 1e-3);
    for row in &table.rows {
        assert!(row.converged && row.error.is_none());
        assert!(row.gap.unwrap().abs() <= 0.01);
    }
}

#[test]
fn convex_sweeps_match_the_vertex_ball() {
    let cone = ConeSpec::circular(3, 0.7).unwrap();
    let table = profile_sweep(&cone, &[0.3, 1.0, 3.0], &OptimizationConfig::default()).unwrap();
    for row in &table.rows {
        assert!(row.gap.unwrap().abs() <= 0.01, "{row:?}");
    }
}

#[test]
fn wide_sector_sweep_stays_in_the_band() {
    let cone = ConeSpec::sector(1.5 * PI).unwrap();
    let cfg = OptimizationConfig {
        initializer: Initializer::BoundaryHalfBall,
        ..Default::default()
    };
    let table = profile_sweep(&cone, &[0.5, 2.0], &cfg).unwrap();
    for row in &table.rows {
        let p = row.p_numerical.unwrap();
        assert!(p >= row.p_candidate_winner * (1.0 - 1e-3) && p <= row.p_halfspace * (1.0 + 1e-3), "{row:?}");
    }
}

#[test]
fn sweep_flags_failed_rows_and_continues() {
    let cone = ConeSpec::sector(1.0).unwrap();
    assert!(matches!(
        profile_sweep(&cone, &[-1.0, 0.5], &OptimizationConfig::default()),
        Err(OptimizeError::NonPositiveVolume(_))
    ));
    let failed = sweep_row(&cone, 0.5, Err(OptimizeError::StepRejected { iteration: 7 }));
    assert!(failed.error.is_some() && failed.p_numerical.is_none() && !failed.converged);
    let ok = sweep_row(&cone, 0.5, minimize(&cone, &config(0.5)));
    let table = SweepTable::from_rows(1, vec![failed, ok]);
    assert!(table.fitted_constant.is_some());
    assert!(table.linearity_residual.unwrap() < 1e-9);
}

#[test]
fn non_converged_runs_are_flagged() {
    let cone = ConeSpec::sector(1.0).unwrap();
    let run = minimize(&cone, &OptimizationConfig { max_iterations: 3, initializer: Initializer::RandomBlob, ..config(1.0) }).unwrap();
    assert!(!run.converged);
    assert!(!run.warnings.is_empty());
    assert!(!stationarity_report(&run).unwrap().converged);
}
