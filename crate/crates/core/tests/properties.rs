use lpbm::bodies::{Body, Polytope, SmoothBody};
use lpbm::geom::{reflect, Mat3, Vec3};
use lpbm::lab::{fit_support, read_report, write_report, ExperimentReport, Settings};
use lpbm::lp_ops::{check_covariance, PiProjection};
use lpbm::numgrid::{sphere_grid, Quadrature1D};
use lpbm::rolodex::{Fiber, Wedge};
use lpbm::shadow::ShadowSystem;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0)
        .prop_filter("non-zero", |v| v.norm() > 0.2)
        .prop_map(|v| v.normalize())
}

/// Convex hull of the octahedron `±e_i` and a few random points, so the
/// origin is interior.
fn polytope() -> impl Strategy<Value = Body> {
    prop::collection::vec(vec3(1.5), 3..9).prop_map(|extra| {
        let mut pts: Vec<Vec3> = (0..3)
            .flat_map(|i| {
                let mut e = Vec3::zeros();
                e[i] = 0.6;
                [e, -e]
            })
            .collect();
        pts.extend(extra);
        Polytope::from_points(&pts, 3).unwrap().into()
    })
}

fn matrix() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-0.4..0.4f64).prop_map(|a| Mat3::identity() + Mat3::from_row_slice(&a))
}

fn smooth() -> impl Strategy<Value = Body> {
    (1.5..6.0f64, matrix(), vec3(0.1)).prop_map(|(q, a, c)| SmoothBody::new(3, q, a, c).unwrap().into())
}

fn sl(a: Mat3) -> Option<Mat3> {
    let d = a.determinant();
    (d > 0.2).then(|| a / d.cbrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_contains_inputs_and_closes(pts in prop::collection::vec(vec3(2.0), 5..40)) {
        prop_assume!(Polytope::from_points(&pts, 3).is_ok());
        let p = Polytope::from_points(&pts, 3).unwrap();
        for x in &pts {
            for f in &p.facets {
                prop_assert!(f.normal.dot(x) <= f.offset + 1e-9);
            }
        }
        let moment: Vec3 = p.facets.iter().map(|f| f.area * f.normal).sum();
        prop_assert!(moment.norm() <= 1e-9 * p.surface_area());
    }

    #[test]
    fn support_is_sublinear(k in smooth(), a in vec3(1.0), b in vec3(1.0), s in 0.1..5.0f64) {
        prop_assert!(k.support(&(a + b)) <= k.support(&a) + k.support(&b) + 1e-12);
        prop_assert!((k.support(&(s * a)) - s * k.support(&a)).abs() <= 1e-12 * (1.0 + s * a.norm()));
    }

    #[test]
    fn radial_and_polar_support_are_reciprocal(k in smooth(), v in direction()) {
        let r = k.radial(&v).unwrap();
        prop_assert!((r * k.polar_support(&v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_support_is_even_homogeneous_and_positive(k in polytope(), v in direction(), p in 1.2..4.0f64) {
        let pi = PiProjection::new(&k, p, 0).unwrap();
        let h = pi.support(&v);
        prop_assert!(h > 0.0);
        prop_assert!((pi.support(&-v) - h).abs() <= 1e-12 * h);
        prop_assert!((pi.support(&(3.0 * v)) - 3.0 * h).abs() <= 1e-12 * h);
    }

    #[test]
    fn pi_covariance_is_exact_on_polytopes(k in polytope(), a in matrix(), p in 1.2..4.0f64) {
        let Some(a) = sl(a) else { return Ok(()) };
        let r = check_covariance(&k, &a, p, &sphere_grid(3, 1).unwrap()).unwrap();
        prop_assert!(r.pi_deviation <= 1e-9, "{r:?}");
    }

    #[test]
    fn shadow_members_keep_volume_and_mirror(k in polytope(), u in direction(), t in -1.0..1.0f64) {
        let sys = ShadowSystem::new(&k, &u, 2).unwrap();
        let v = k.volume_exact();
        let kt = sys.body_at(t).unwrap();
        prop_assert!((kt.volume_exact() - v).abs() <= 1e-9 * v);
        let mirror = sys.body_at(-t).unwrap();
        for w in sphere_grid(3, 1).unwrap().nodes {
            prop_assert!((mirror.support(&w) - kt.support(&reflect(&w, &u))).abs() <= 1e-9);
        }
    }

    #[test]
    fn smooth_shadows_keep_fiber_volume(k in smooth(), u in direction(), t in -1.0..1.0f64) {
        let sys = ShadowSystem::new(&k, &u, 2).unwrap();
        prop_assert!(sys.volume_invariance(&[t, 0.0]).unwrap() <= 1e-12);
    }

    #[test]
    fn wedge_gauge_is_even_and_sublinear(k in polytope(), u in direction(), alpha in 0.0..3.1f64,
                                        x in (-1.0..1.0f64, -1.0..1.0f64), y in (-1.0..1.0f64, -1.0..1.0f64)) {
        let pi = PiProjection::new(&k, 2.5, 0).unwrap();
        let w = Wedge::new(&pi, &Fiber::new(&u, alpha).unwrap());
        prop_assert!((w.norm(x.0, x.1) - w.norm(-x.0, -x.1)).abs() <= 1e-12 * (1.0 + w.norm(x.0, x.1)));
        prop_assert!(w.norm(x.0 + y.0, x.1 + y.1) <= w.norm(x.0, x.1) + w.norm(y.0, y.1) + 1e-12);
    }

    #[test]
    fn quadratic_support_fit_is_exact(a in matrix()) {
        let Some(a) = sl(a) else { return Ok(()) };
        let g = sphere_grid(3, 2).unwrap();
        let h: Vec<f64> = g.nodes.iter().map(|v| (a.transpose() * v).norm()).collect();
        let (_, r) = fit_support(3, &g.nodes, &h).unwrap();
        prop_assert!(r <= 1e-10);
    }

    #[test]
    fn report_round_trips(values in prop::collection::vec((-1e6..1e6f64, 1e-12..1.0f64), 0..8)) {
        let mut r = ExperimentReport::new("prop", None, Settings::new(3).params(true));
        for (i, (v, t)) in values.iter().enumerate() {
            r.push(format!("r{i}"), *v, *t);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let written = write_report(&r, &path).unwrap();
        prop_assert_eq!(read_report(&path).unwrap(), written);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauss_legendre_is_exact_to_degree(n in 1usize..24, c in prop::collection::vec(-1.0..1.0f64, 1..48)) {
        let deg = (2 * n - 1).min(c.len() - 1);
        let q = Quadrature1D::gauss_legendre(n, -1.0, 2.0).unwrap();
        let f = |x: f64| c[..=deg].iter().rev().fold(0.0, |acc, a| acc * x + a);
        let exact: f64 = c[..=deg]
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2f64.powi(k as i32 + 1) - (-1f64).powi(k as i32 + 1)) / (k as f64 + 1.0))
            .sum();
        prop_assert!((q.integrate(f) - exact).abs() <= 1e-11 * (1.0 + exact.abs()) * 3f64.powi(deg as i32));
    }

    #[test]
    fn sphere_rule_kills_linear_functions(a in vec3(3.0), level in 0u32..4) {
        for n in [2, 3] {
            let g = sphere_grid(n, level).unwrap();
            prop_assert!(g.integrate(|v| a.dot(v)).abs() <= 1e-10 * (1.0 + a.norm()));
        }
    }
}
