use cone_iso_core::surface::shapes::{
    arc_points, axisymmetric_ellipsoid, axisymmetric_vertex_cap, circle, ellipsoid_mesh, flat_disk_mesh,
    half_disk_on_ray, icosphere, tilted_arc, vertex_arc, vertex_cap_mesh,
};
use cone_iso_core::{ConeSpec, DiscreteHypersurface, SurfaceError, Vec2, Vec3};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn euclid3() -> ConeSpec {
    ConeSpec::euclidean(3).unwrap()
}

#[test]
fn icosphere_measures() {
    let s = icosphere(&euclid3(), Vec3::ZERO, 1.0, 4).unwrap();
    let (a, v) = s.measure().unwrap();
    assert!(rel(a, 4.0 * PI) < 3e-3, "area {a}");
    assert!(rel(v, 4.0 * PI / 3.0) < 3e-3, "volume {v}");
    assert!(s.is_closed());
}

#[test]
fn quarter_arc_measures() {
    let cone = ConeSpec::sector(FRAC_PI_2).unwrap();
    let s = vertex_arc(&cone, 1.0, 100).unwrap();
    let (len, area) = s.measure().unwrap();
    // Inscribed regular polygon: 100 chords and 100 triangles at the vertex.
    let h = FRAC_PI_2 / 100.0;
    assert!((len - 200.0 * (h / 2.0).sin()).abs() < 1e-13);
    assert!((area - 50.0 * h.sin()).abs() < 1e-13);
    assert!((len - FRAC_PI_2).abs() < 1e-4);
    assert!((area - PI / 4.0).abs() < 1e-4);
}

#[test]
fn degenerate_polyline() {
    let cone = ConeSpec::sector(FRAC_PI_2).unwrap();
    let s = DiscreteHypersurface::polyline(&cone, &[Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)], false).unwrap();
    assert_eq!(s.area(), 0.0);
    assert_eq!(s.enclosed_volume(), Err(SurfaceError::Degenerate));
    assert!(DiscreteHypersurface::polyline(&cone, &[Vec2::new(1.0, 0.0)], false).is_err());
}

#[test]
fn sphere_quantities_in_three_representations() {
    let r = 2.0;
    let mesh = icosphere(&euclid3(), Vec3::ZERO, r, 4).unwrap();
    let q = mesh.quantities().unwrap();
    for i in 0..mesh.vertex_count() {
        assert!(rel(q.mean_curvature[i], 1.0 / r) < 0.02, "H {}", q.mean_curvature[i]);
        assert!((q.support[i] + r).abs() < 1e-10, "g {}", q.support[i]);
        assert!(rel(q.sigma2[i], 2.0 / (r * r)) < 0.05, "sigma2 {}", q.sigma2[i]);
    }

    let cap = axisymmetric_vertex_cap(&ConeSpec::circular(3, PI / 3.0).unwrap(), r, 200).unwrap();
    let q = cap.quantities().unwrap();
    for i in 0..cap.vertex_count() {
        assert!(rel(q.mean_curvature[i], 1.0 / r) < 1e-6);
        assert!((q.support[i] + r).abs() < 1e-10);
        assert!(rel(q.sigma2[i], 2.0 / (r * r)) < 1e-6);
    }

    let ring = circle(&ConeSpec::euclidean(2).unwrap(), Vec2::ZERO, r, 64).unwrap();
    let q = ring.quantities().unwrap();
    for i in 0..ring.vertex_count() {
        assert!(rel(q.mean_curvature[i], 1.0 / r) < 1e-12);
        assert!((q.support[i] + r).abs() < 1e-10);
    }
}

#[test]
fn flat_disk_has_no_curvature() {
    let h = ConeSpec::halfspace(3).unwrap();
    let s = flat_disk_mesh(&h, Vec3::new(0.5, -0.2, 0.0), 1.0, 2).unwrap();
    let q = s.quantities().unwrap();
    assert!(q.mean_curvature.iter().all(|h| h.abs() < 1e-12));
    assert!(q.sigma2.iter().all(|s| s.abs() < 1e-12));
}

#[test]
fn vertex_arc_has_exact_curvature() {
    for &theta in &[FRAC_PI_2, 1.0, 1.5 * PI] {
        let s = vertex_arc(&ConeSpec::sector(theta).unwrap(), 1.0, 73).unwrap();
        let q = s.quantities().unwrap();
        for i in 1..s.vertex_count() - 1 {
            assert!((q.mean_curvature[i] - 1.0).abs() < 1e-6);
        }
        assert!(q.contact_residual() < 1e-10);
    }
}

#[test]
fn contact_angle_examples() {
    let wide = ConeSpec::sector(1.5 * PI).unwrap();
    let hd = half_disk_on_ray(&wide, 2.0, 1.0, 200).unwrap();
    assert!(hd.contact_angle_residual().unwrap() < 1e-10);

    let quarter = ConeSpec::sector(FRAC_PI_2).unwrap();
    let tilt = 10f64.to_radians();
    let t = tilted_arc(&quarter, tilt, 1.0, 1.5, 400).unwrap();
    let res = t.contact_angle_residual().unwrap();
    assert!((res - tilt.sin()).abs() < 1e-3, "residual {res}");

    let closed = circle(&quarter, Vec2::new(2.0, 2.0), 0.5, 40).unwrap();
    assert_eq!(closed.contact_angle_residual().unwrap(), 0.0);
}

#[test]
fn refining_an_arc_keeps_it_on_the_circle() {
    let cone = ConeSpec::sector(1.2).unwrap();
    let s = vertex_arc(&cone, 1.5, 16).unwrap();
    let r = s.refine(2).unwrap();
    assert_eq!(r.segments().len(), 32);
    for p in r.points() {
        assert!((p.norm() - 1.5).abs() < 1e-12);
    }
    let off = DiscreteHypersurface::polyline(
        &ConeSpec::euclidean(2).unwrap(),
        &{
            let mut pts = arc_points(Vec2::new(0.3, -0.1), 0.7, 0.0, 2.0 * PI, 16);
            pts.pop();
            pts
        },
        true,
    )
    .unwrap();
    for p in off.refine(4).unwrap().points() {
        assert!(((p.xy() - Vec2::new(0.3, -0.1)).norm() - 0.7).abs() < 1e-12);
    }
}

#[test]
fn refining_an_icosphere() {
    let e = euclid3();
    let s2 = icosphere(&e, Vec3::ZERO, 1.0, 2).unwrap();
    let s3 = s2.refine(2).unwrap();
    assert_eq!(s3.vertex_count(), icosphere(&e, Vec3::ZERO, 1.0, 3).unwrap().vertex_count());
    for p in s3.points() {
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }
    // Quadratic convergence of the area.
    let err = |lvl: usize| (icosphere(&e, Vec3::ZERO, 1.0, lvl).unwrap().area() - 4.0 * PI).abs();
    for lvl in 1..5 {
        assert!(err(lvl) / err(lvl + 1) >= 3.5, "level {lvl}");
    }
}

#[test]
fn refined_boundary_vertices_stay_on_the_cone() {
    let cone = ConeSpec::circular(3, FRAC_PI_4).unwrap();
    let s = vertex_cap_mesh(&cone, 1.0, 1).unwrap().refine(4).unwrap();
    s.validate().unwrap();
    for (p, &b) in s.points().iter().zip(s.boundary_flags()) {
        assert!((p.norm() - 1.0).abs() < 1e-9);
        if b {
            assert!(cone.distance_to_boundary(&p.to_array()).unwrap() < 1e-10);
        }
    }
}

/// Volume of the convex hull of `pts`, given a candidate facet list: every
/// facet is checked to be supporting (all points on one side) and the hull
/// is decomposed into tetrahedra over the centroid of the points.
fn hull_volume(pts: &[Vec3], facets: &[[usize; 3]]) -> f64 {
    let c = pts.iter().fold(Vec3::ZERO, |a, &p| a + p) * (1.0 / pts.len() as f64);
    let mut vol = 0.0;
    for f in facets {
        let (a, b, d) = (pts[f[0]], pts[f[1]], pts[f[2]]);
        let n = (b - a).cross(d - a);
        let side = n.dot(c - a).signum();
        for p in pts {
            assert!(side * n.dot(*p - a) >= -1e-12 * n.norm(), "not a hull facet");
        }
        vol += n.dot(c - a).abs() / 6.0;
    }
    vol
}

#[test]
fn convex_mesh_volume_and_weights() {
    let axes = [1.0, 1.3, 0.8];
    for level in 3..5 {
        let s = ellipsoid_mesh(&euclid3(), Vec3::new(0.2, 0.0, -0.4), axes, level).unwrap();
        let (area, vol) = s.measure().unwrap();
        let hull = hull_volume(s.points(), s.triangles());
        assert!(vol > 0.0);
        assert!(rel(vol, hull) < 5e-3, "volume {vol} vs hull {hull}");
        let smooth = 4.0 / 3.0 * PI * axes[0] * axes[1] * axes[2];
        assert!(rel(vol, smooth) < 1e-2);
        let q = s.quantities().unwrap();
        assert!(rel(q.area_weights.iter().sum::<f64>(), area) < 1e-12);
        // H² ≤ |σ|²/n pointwise, up to discretization error.
        for i in 0..s.vertex_count() {
            assert!(q.mean_curvature[i].powi(2) <= q.sigma2[i] / 2.0 * 1.01);
        }
        let defect: f64 = (0..s.vertex_count())
            .map(|i| (q.sigma2[i] - 2.0 * q.mean_curvature[i].powi(2)) * q.area_weights[i])
            .sum();
        assert!(defect > 0.0);
    }
}

#[test]
fn orientation_is_fixed_and_recorded() {
    let cone = ConeSpec::sector(FRAC_PI_2).unwrap();
    let mut pts = arc_points(Vec2::ZERO, 1.0, 0.0, FRAC_PI_2, 20);
    let forward = DiscreteHypersurface::polyline(&cone, &pts, false).unwrap();
    pts.reverse();
    let backward = DiscreteHypersurface::polyline(&cone, &pts, false).unwrap();
    assert!(!forward.was_flipped());
    assert!(backward.was_flipped());
    assert!((forward.enclosed_volume().unwrap() - backward.enclosed_volume().unwrap()).abs() < 1e-15);
    assert!(backward.quantities().unwrap().mean_curvature[5] > 0.0);
}

#[test]
fn invalid_surfaces_are_rejected() {
    let e2 = ConeSpec::euclidean(2).unwrap();
    let figure_eight = [
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
    ];
    assert!(matches!(
        DiscreteHypersurface::polyline(&e2, &figure_eight, true),
        Err(SurfaceError::SelfIntersection(..))
    ));
    let quarter = ConeSpec::sector(FRAC_PI_2).unwrap();
    let off = arc_points(Vec2::new(0.1, 0.1), 1.0, 0.0, FRAC_PI_2, 10);
    assert!(DiscreteHypersurface::polyline(&quarter, &off, false).is_err());
    let outside = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.5), Vec2::new(0.0, 1.0)];
    assert!(matches!(
        DiscreteHypersurface::polyline(&quarter, &outside, false),
        Err(SurfaceError::OutsideCone { .. })
    ));
}

#[test]
fn surface_file_round_trip() {
    let cone = ConeSpec::circular(3, 1.0).unwrap();
    let cases = [
        axisymmetric_vertex_cap(&cone, 1.3, 30).unwrap(),
        vertex_cap_mesh(&cone, 0.7, 2).unwrap(),
    ];
    for s in cases {
        let json = serde_json::to_value(s.to_file()).unwrap();
        for key in ["representation", "vertices", "elements", "boundary_flags"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back = DiscreteHypersurface::from_file(&cone, &serde_json::from_value(json).unwrap()).unwrap();
        assert_eq!(back.points(), s.points());
        assert_eq!(back.boundary_flags(), s.boundary_flags());
    }
    let bad = r#"{"representation": "polyline", "vertices": [], "elements": [], "boundary_flags": [], "extra": 1}"#;
    assert!(serde_json::from_str::<cone_iso_core::surface::SurfaceFile>(bad).is_err());
}

#[test]
fn axisymmetric_caps_measure_exactly() {
    // The segment on the axis is a spherical cap; the rest are frustums.
    let alpha = PI / 3.0;
    let s = axisymmetric_vertex_cap(&ConeSpec::circular(3, alpha).unwrap(), 1.0, 400).unwrap();
    let (a, v) = s.measure().unwrap();
    assert!(rel(a, 2.0 * PI * (1.0 - alpha.cos())) < 1e-5);
    assert!(rel(v, 2.0 * PI * (1.0 - alpha.cos()) / 3.0) < 1e-5);
    let e = axisymmetric_ellipsoid(&euclid3(), 0.0, 1.0, 1.2, 400).unwrap();
    assert!(rel(e.enclosed_volume().unwrap(), 4.0 / 3.0 * PI * 1.2) < 1e-4);
}

proptest! {
    #[test]
    fn dilation_covariance(lambda in 0.05f64..20.0, theta in 0.3f64..6.0, cx in -0.5f64..0.5) {
        let cone = ConeSpec::sector(theta).unwrap();
        let s = vertex_arc(&cone, 1.0, 40).unwrap();
        let t = s.scaled(lambda);
        prop_assert!(rel(t.area(), lambda * s.area()) < 1e-13);
        prop_assert!(rel(t.enclosed_volume().unwrap(), lambda * lambda * s.enclosed_volume().unwrap()) < 1e-13);
        let (qs, qt) = (s.quantities().unwrap(), t.quantities().unwrap());
        for i in 0..s.vertex_count() {
            // Three-point curvature of a fine arc loses about (segment angle)⁻² in roundoff.
            prop_assert!(rel(qt.mean_curvature[i], qs.mean_curvature[i] / lambda) < 1e-9);
            prop_assert!((qt.support[i] - lambda * qs.support[i]).abs() < 1e-12 * lambda.max(1.0));
        }

        let e3 = ConeSpec::euclidean(3).unwrap();
        let m = ellipsoid_mesh(&e3, Vec3::new(cx, 0.1, 0.0), [1.0, 0.9, 1.2], 2).unwrap();
        let mt = m.scaled(lambda);
        prop_assert!(rel(mt.area(), lambda * lambda * m.area()) < 1e-13);
        prop_assert!(rel(mt.enclosed_volume().unwrap(), lambda.powi(3) * m.enclosed_volume().unwrap()) < 1e-13);
        let (qm, qmt) = (m.quantities().unwrap(), mt.quantities().unwrap());
        for i in 0..m.vertex_count() {
            prop_assert!(rel(qmt.mean_curvature[i], qm.mean_curvature[i] / lambda) < 1e-10);
        }
    }

    #[test]
    fn support_function_is_rotation_invariant(phi in 0.0f64..TAU) {
        // Rotating a vertex cap about the cone axis permutes nothing and
        // changes no support value.
        let cone = ConeSpec::circular(3, 0.9).unwrap();
        let s = vertex_cap_mesh(&cone, 1.0, 2).unwrap();
        let (c, sn) = (phi.cos(), phi.sin());
        let rotated: Vec<Vec3> = s.points().iter().map(|p| Vec3::new(c * p.x - sn * p.y, sn * p.x + c * p.y, p.z)).collect();
        let r = DiscreteHypersurface::mesh(&cone, rotated, s.triangles().to_vec(), Some(s.boundary_flags().to_vec())).unwrap();
        let (qa, qb) = (s.quantities().unwrap(), r.quantities().unwrap());
        for i in 0..s.vertex_count() {
            prop_assert!((qa.support[i] - qb.support[i]).abs() < 1e-9);
        }
    }
}
