//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use lpbm::bodies::{Body, Polytope, SmoothBody};
use lpbm::geom::{Mat3, Vec3};
use lpbm::lab::{
    default_directions, default_map, harmonic_samples, midpoint_coplanarity, petty_steiner_check, rigidity_experiment,
    RigidityTolerances, Settings, CONVEXITY_TS,
};
use lpbm::lp_ops::{check_covariance, fixed_point_residual, PiProjection};
use lpbm::numgrid::sphere_grid;
use lpbm::rolodex::{
    convexity_check, fiber_angles, harmonic_inequality_check, monotonicity_sweep, rolodex_volume, Fiber,
};
use lpbm::shadow::ShadowSystem;

type Outcome = Result<(bool, String), String>;

fn err(e: lpbm::Error) -> String {
    format!("{e:#}")
}

fn vol_ball() -> f64 {
    4.0 * std::f64::consts::PI / 3.0
}

/// diag(1, 1.5, 2) scaled to determinant 1.
fn ellipsoid() -> Body {
    let a = Mat3::from_diagonal(&Vec3::new(1.0, 1.5, 2.0)) / 3f64.cbrt();
    SmoothBody::ellipsoid(3, a).unwrap().into()
}

/// A rotated, sheared centered ellipsoid.
fn tilted_ellipsoid() -> Body {
    let a = Mat3::new(1.2, 0.3, -0.1, 0.0, 0.9, 0.4, 0.2, -0.3, 1.5);
    SmoothBody::ellipsoid(3, a).unwrap().into()
}

fn l4() -> Body {
    SmoothBody::new(3, 4.0, Mat3::identity(), Vec3::zeros()).unwrap().into()
}

fn skew() -> Body {
    let a = Mat3::new(1.0, 0.3, 0.0, 0.1, 1.2, 0.2, 0.0, -0.2, 0.9);
    SmoothBody::new(3, 4.0, a, Vec3::new(0.1, -0.05, 0.15)).unwrap().into()
}

fn egg() -> Body {
    SmoothBody::new(
        3,
        3.0,
        Mat3::from_diagonal(&Vec3::new(1.0, 0.8, 1.3)),
        Vec3::new(0.2, 0.1, -0.1),
    )
    .unwrap()
    .into()
}

fn tet() -> Body {
    let v = [
        Vec3::new(1.0, 0.2, -0.5),
        Vec3::new(-0.7, 0.9, -0.4),
        Vec3::new(-0.4, -0.8, -0.6),
        Vec3::new(0.1, 0.0, 1.2),
    ];
    Polytope::from_points(&v, 3).unwrap().into()
}

/// An origin-containing hexahedron without symmetry.
fn wedge() -> Body {
    let v = [
        Vec3::new(1.1, 0.1, -0.6),
        Vec3::new(-0.8, 0.7, -0.5),
        Vec3::new(-0.3, -0.9, -0.7),
        Vec3::new(0.2, 0.1, 1.0),
        Vec3::new(0.9, 0.8, 0.4),
        Vec3::new(-0.6, -0.4, 0.8),
    ];
    Polytope::from_points(&v, 3).unwrap().into()
}

fn generic_directions() -> Vec<Vec3> {
    [
        Vec3::new(1.0, 2.0, 3.0),
        Vec3::new(0.2, 0.1, 1.0),
        Vec3::new(-0.7, 0.4, 0.3),
        Vec3::new(0.5, -1.0, 0.2),
        Vec3::new(0.3, 0.6, -0.9),
        Vec3::new(1.0, 0.05, 0.1),
    ]
    .iter()
    .map(|v| v.normalize())
    .collect()
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let (ok, msg) = f()?;
    let dt = t.elapsed();
    let fast = limit.is_none_or(|l| dt <= l);
    let budget = limit.map_or(String::new(), |l| format!(" (budget {:.0} s)", l.as_secs_f64()));
    Ok((ok && fast, format!("{msg}; {:.2} s{budget}", dt.as_secs_f64())))
}

fn normalization() -> Outcome {
    let b = Body::ball(3);
    let probe = sphere_grid(3, 3).map_err(err)?;
    let mut worst = Vec::new();
    for level in [3, 5] {
        let pi = PiProjection::new(&b, 2.0, level).map_err(err)?;
        worst.push(
            probe
                .nodes
                .iter()
                .map(|v| (pi.support(v) - 1.0).abs())
                .fold(0.0, f64::max),
        );
    }
    let ok = worst[0] <= 1e-3 && worst[1] <= 1e-4;
    Ok((
        ok,
        format!(
            "max |h - 1| = {:.2e} at level 3 (tol 1e-3), {:.2e} at level 5 (tol 1e-4)",
            worst[0], worst[1]
        ),
    ))
}

fn rolodex_equivalence() -> Outcome {
    let u = Vec3::new(0.2, 0.3, 1.0).normalize();
    let grid = sphere_grid(3, 3).map_err(err)?;
    let bodies = [
        ("ball", Body::ball(3)),
        ("cube", Body::cube(3)),
        ("ellipsoid", ellipsoid()),
        ("l4", l4()),
    ];
    let (mut worst, mut ball) = (0.0f64, 0.0f64);
    for (name, k) in &bodies {
        for p in [1.5, 2.0, 3.0] {
            let direct = PiProjection::new(k, p, 3).map_err(err)?.polar_volume(&grid);
            let rolo = rolodex_volume(k, &u, p, 16, 32, 3).map_err(err)?;
            worst = worst.max((rolo - direct).abs() / direct);
            if *name == "ball" {
                ball = ball.max((rolo - vol_ball()).abs() / vol_ball());
            }
        }
    }
    Ok((
        worst <= 2e-2 && ball <= 1e-3,
        format!("max relative gap {worst:.2e} (tol 2e-2), ball vs 4pi/3 {ball:.2e} (tol 1e-3)"),
    ))
}

fn monotonicity() -> Outcome {
    let ts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let grid = sphere_grid(3, 3).map_err(err)?;
    let mut worst = f64::NEG_INFINITY;
    for k in [skew(), egg(), tet(), wedge()] {
        for u in &generic_directions()[..2] {
            let sys = ShadowSystem::new(&k, u, 3).map_err(err)?;
            let sw = monotonicity_sweep(&sys, 2.0, &ts, &grid).map_err(err)?;
            worst = worst.max(sw.max_increase / sw.polar_volumes[0]);
        }
    }
    Ok((
        worst <= 1e-6,
        format!("largest relative increase {worst:.2e} (tol 1e-6)"),
    ))
}

fn steiner() -> Outcome {
    // equality cases (ellipsoids) sit at the level-3 quadrature drift, so use level 4
    let grid = sphere_grid(3, 4).map_err(err)?;
    let mut worst = (f64::NEG_INFINITY, "");
    let mut count = 0;
    for (name, k) in [
        ("tilted ellipsoid", tilted_ellipsoid()),
        ("skew", skew()),
        ("egg", egg()),
        ("cube", Body::cube(3)),
        ("tet", tet()),
    ] {
        for u in generic_directions() {
            for p in [1.5, 2.0, 3.0] {
                let v = petty_steiner_check(&k, &u, p, &grid, 3).map_err(err)?.value;
                if v > worst.0 {
                    worst = (v, name);
                }
                count += 1;
            }
        }
    }
    Ok((
        worst.0 <= 1e-6,
        format!(
            "{count} cases, largest relative deficit {:.2e} on {} (tol 1e-6)",
            worst.0, worst.1
        ),
    ))
}

fn fibers(u: &Vec3, m: usize) -> Result<Vec<Fiber>, String> {
    fiber_angles(m)
        .into_iter()
        .map(|a| Fiber::new(u, a).map_err(err))
        .collect()
}

fn convexity() -> Outcome {
    let (mut viol, mut asym) = (f64::NEG_INFINITY, 0.0f64);
    for k in [skew(), tet()] {
        let sys = ShadowSystem::new(&k, &generic_directions()[1], 3).map_err(err)?;
        let r = convexity_check(&sys, &fibers(&sys.u(), 8)?, 2.0, &CONVEXITY_TS, 32, 3).map_err(err)?;
        viol = viol.max(r.max_violation);
        asym = asym.max(r.max_asymmetry);
    }
    Ok((
        viol <= 1e-6 && asym <= 1e-8,
        format!("midpoint violation {viol:.2e} (tol 1e-6), |M(t)-M(-t)| {asym:.2e} (tol 1e-8)"),
    ))
}

fn harmonic() -> Outcome {
    let mut s = Settings::new(3);
    s.seed = 20240917;
    let (mut sec, mut wedge) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, k) in [skew(), tet()].iter().enumerate() {
        let sys = ShadowSystem::new(k, &generic_directions()[1], 3).map_err(err)?;
        let fs = fibers(&sys.u(), 8)?;
        let samples = harmonic_samples(&sys, &fs[0], &s, i).map_err(err)?;
        let r = harmonic_inequality_check(&sys, &fs, 2.0, &samples, 3).map_err(err)?;
        sec = sec.max(r.section_violation);
        wedge = wedge.max(r.wedge_violation);
    }
    Ok((
        sec <= 1e-6 && wedge <= 1e-6,
        format!("200 samples per body, section violation {sec:.2e}, wedge violation {wedge:.2e} (tol 1e-6)"),
    ))
}

fn admissibility() -> Outcome {
    let k = ellipsoid();
    let sys = ShadowSystem::new(&k, &Vec3::new(1.0, 2.0, 3.0), 4).map_err(err)?;
    let grid = sphere_grid(3, 3).map_err(err)?;
    let trace = sys.check_admissible(&[0.9, 0.99, 0.999], &grid).map_err(err)?;
    let last = trace.sup_deviation[2];
    let area = k.surface_measure(5).map_err(err)?.total_mass();
    let phi = sys.phi_surface_integral(5).map_err(err)?.abs() / area;
    let ok = trace.strictly_decreasing() && last <= 1e-2 && phi <= 1e-4;
    Ok((
        ok,
        format!(
            "sup deviations {:.2e} > {:.2e} > {:.2e} (final tol 1e-2), |int phi dS| / area {phi:.2e} (tol 1e-4)",
            trace.sup_deviation[0], trace.sup_deviation[1], last
        ),
    ))
}

fn rigidity() -> Outcome {
    let mut s = Settings::new(3);
    s.directions = default_directions(3);
    let tol = RigidityTolerances::default();
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, k) in [("ellipsoid", ellipsoid()), ("tilted ellipsoid", tilted_ellipsoid())] {
        let r = rigidity_experiment(&k, None, &s, &tol).map_err(err)?;
        let fixed = r.record("fixed_point_residual").unwrap().value;
        let refined = r.record("fixed_point_residual_refined").unwrap().value;
        let var = r.records_like("variation").map(|x| x.value).fold(0.0, f64::max);
        let cop = r.records_like("coplanarity").map(|x| x.value).fold(0.0, f64::max);
        ok &= fixed <= 1e-2 && refined <= 3e-3 && var <= 5e-3 && cop <= 1e-6;
        msg.push(format!(
            "{name}: residual {fixed:.1e} -> {refined:.1e}, variation {var:.1e}, coplanarity {cop:.1e}"
        ));
    }
    let k = l4();
    let coarse = fixed_point_residual(&k, 2.0, &sphere_grid(3, 3).map_err(err)?)
        .map_err(err)?
        .1;
    let fine = fixed_point_residual(&k, 2.0, &sphere_grid(3, 4).map_err(err)?)
        .map_err(err)?
        .1;
    let cop = midpoint_coplanarity(&k, &Vec3::new(1.0, 2.0, 3.0), 3).map_err(err)?;
    ok &= coarse >= 1e-2 && fine >= 1e-2 && cop >= 1e-2;
    msg.push(format!("l4: residual {coarse:.3} -> {fine:.3}, coplanarity {cop:.3}"));
    Ok((ok, msg.join("; ")))
}

fn covariance() -> Outcome {
    let maps = [Mat3::from_diagonal(&Vec3::new(2.0, 0.5, 1.0)), default_map(), {
        let m = Mat3::new(1.0, 0.4, -0.2, 0.3, 1.1, 0.5, -0.1, 0.2, 0.8);
        m / m.determinant().cbrt()
    }];
    let mut pi = 0.0f64;
    for k in [Body::cube(3), tet(), wedge()] {
        for a in &maps {
            for p in [1.5, 2.0, 3.0] {
                pi = pi.max(
                    check_covariance(&k, a, p, &sphere_grid(3, 2).map_err(err)?)
                        .map_err(err)?
                        .pi_deviation,
                );
            }
        }
    }
    let mut gamma = Vec::new();
    let mut ok = pi <= 1e-9;
    for k in [Body::cube(3), ellipsoid()] {
        let coarse = check_covariance(&k, &maps[1], 2.0, &sphere_grid(3, 4).map_err(err)?)
            .map_err(err)?
            .gamma_deviation;
        let fine = check_covariance(&k, &maps[1], 2.0, &sphere_grid(3, 5).map_err(err)?)
            .map_err(err)?
            .gamma_deviation;
        ok &= coarse <= 1e-2 && fine < coarse;
        gamma.push(format!("{coarse:.1e} -> {fine:.1e}"));
    }
    Ok((
        ok,
        format!(
            "Pi deviation {pi:.1e} (tol 1e-9), Gamma deviation at levels 4 -> 5 {} (tol 1e-2, shrinking)",
            gamma.join(", ")
        ),
    ))
}

fn determinism() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &str, args: &[&str]| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_lpbm"))
            .args(args)
            .args(["--seed", "11", "--u", "0.2,0.1,1", "--out"])
            .arg(tmp.path().join(out))
            .current_dir(&root)
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if status.code() == Some(2) {
            return Err(format!("lpbm {args:?} exited 2"));
        }
        Ok(())
    };
    let suites: [&[&str]; 2] = [
        &["verify", "harmonic", "--body", "bodies/skew.json"],
        &["verify", "monotone", "--body", "bodies/tet.json"],
    ];
    for args in suites {
        run("a", args)?;
        run("b", args)?;
    }
    let mut files = 0;
    let mut same = true;
    for entry in std::fs::read_dir(tmp.path().join("a")).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let a = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
        let b = std::fs::read(tmp.path().join("b").join(entry.file_name())).map_err(|e| e.to_string())?;
        same &= a == b;
        files += 1;
    }
    Ok((
        same && files >= 3,
        format!("{files} report files compared byte for byte"),
    ))
}

type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("normalization oracle", Some(1), normalization),
        ("Rolodex equivalence", Some(120), rolodex_equivalence),
        ("monotonicity", Some(60), monotonicity),
        ("Steiner inequality", None, steiner),
        ("convexity and evenness of M", None, convexity),
        ("harmonic section inequality", None, harmonic),
        ("admissibility", None, admissibility),
        ("rigidity chain", Some(300), rigidity),
        ("covariance", None, covariance),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let out = timed(budget.map(Duration::from_secs), f);
        let (ok, msg) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {msg}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
