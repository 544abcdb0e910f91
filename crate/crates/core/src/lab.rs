//! Experiment harness: the rigidity chain, ellipsoid fitting, the operator
//! iteration, the verification suites, and report serialization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, BodySpec, Polytope};
use crate::error::{domain, Error, Result};
use crate::geom::{unit, Mat3, Vec3};
use crate::lp_ops::{check_covariance, gamma_polar_pi, ratio_spread, PiProjection};
use crate::numgrid::{sphere_grid, SphereQuadrature};
use crate::rolodex::{
    convexity_check, fiber_angles, harmonic_inequality_check, monotonicity_sweep, rolodex_volume, Fiber,
    HarmonicSample, Wedge,
};
use crate::shadow::ShadowSystem;

/// One check: passes when `value ≤ tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Record {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub sphere: u32,
    pub base: u32,
    pub angles: usize,
    pub scount: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub grids: Grids,
    pub directions: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Numeric table written as CSV next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|x| sig10(*x)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub body: Option<BodySpec>,
    pub params: Params,
    pub records: Vec<Record>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, body: Option<BodySpec>, params: Params) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            body,
            params,
            records: Vec::new(),
            artifacts: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.records.push(Record::new(name, value, tol));
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn record(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Records whose name starts with `prefix`.
    pub fn records_like<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.name.starts_with(prefix))
    }

    /// Rigidity verdict from the fixed-point and ellipsoid records.
    pub fn verdict(&self) -> Option<Verdict> {
        let fixed = self.record("fixed_point_residual")?.pass;
        let ellipsoid = self.record("ellipsoid_fit_residual")?.pass;
        Some(match (fixed, ellipsoid) {
            (true, true) => Verdict::Both,
            (true, false) => Verdict::FixedPointOnly,
            (false, true) => Verdict::EllipsoidOnly,
            (false, false) => Verdict::Neither,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Both,
    FixedPointOnly,
    EllipsoidOnly,
    Neither,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Both => "fixed-point AND ellipsoid",
            Verdict::FixedPointOnly => "fixed-point only",
            Verdict::EllipsoidOnly => "ellipsoid only",
            Verdict::Neither => "neither",
        })
    }
}

/// `x` rounded to 10 significant digits, shortest form.
pub fn sig10(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.9e}").parse().expect("float round trip");
    if r != 0.0 && !(1e-4..1e15).contains(&r.abs()) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Writes the report as pretty JSON and each table as `<stem>_<table>.csv`
/// beside it; returns the report as written.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<ExperimentReport> {
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        err: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let mut out = report.clone();
    for t in &report.tables {
        let name = format!("{stem}_{}.csv", t.name);
        let csv = path.with_file_name(&name);
        std::fs::write(&csv, t.to_csv()).map_err(|e| Error::Io {
            path: csv.clone(),
            err: e,
        })?;
        if !out.artifacts.contains(&name) {
            out.artifacts.push(name);
        }
    }
    let mut json = serde_json::to_string_pretty(&out).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        err: e,
    })?;
    json.push('\n');
    std::fs::write(path, json).map_err(io)?;
    Ok(out)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        err: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        err: e,
    })
}

/// The ±axis and diagonal directions.
pub fn default_directions(dim: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = Vec3::zeros();
            v[i] = s;
            out.push(v);
        }
    }
    let signs = [1.0, -1.0];
    if dim == 2 {
        for a in signs {
            for b in signs {
                out.push(Vec3::new(a, b, 0.0).normalize());
            }
        }
    } else {
        for a in signs {
            for b in signs {
                for c in signs {
                    out.push(Vec3::new(a, b, c).normalize());
                }
            }
        }
    }
    out
}

/// Grid and sampling parameters shared by the experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub p: f64,
    /// Sphere grid level; also the surface-measure level.
    pub level: u32,
    /// Base grid level of shadow systems.
    pub base_level: u32,
    /// Fiber angles of the Rolodex average.
    pub angles: usize,
    /// Gauss–Legendre nodes of the section integral.
    pub scount: usize,
    /// `(a, b, n)`: `n` equally spaced values from `a` to `b`.
    pub tgrid: (f64, f64, usize),
    pub directions: Vec<Vec3>,
    pub seed: u64,
    /// Harmonic-inequality draws per direction.
    pub samples: usize,
    /// Fibers per direction for the `M` and harmonic checks.
    pub fibers: usize,
    /// Backward steps of the first-variation quotient.
    pub steps: Vec<f64>,
    /// Map of the covariance suite.
    pub map: Option<Mat3>,
}

impl Settings {
    pub fn new(dim: usize) -> Self {
        Settings {
            p: 2.0,
            level: 3,
            base_level: 3,
            angles: 16,
            scount: 32,
            tgrid: (0.0, 1.0, 11),
            directions: default_directions(dim),
            seed: 0,
            samples: 200,
            fibers: 8,
            steps: vec![1e-2, 5e-3, 2.5e-3],
            map: None,
        }
    }

    pub fn ts(&self) -> Vec<f64> {
        linspace(self.tgrid.0, self.tgrid.1, self.tgrid.2)
    }

    pub fn params(&self, seed: bool) -> Params {
        Params {
            p: self.p,
            grids: Grids {
                sphere: self.level,
                base: self.base_level,
                angles: self.angles,
                scount: self.scount,
            },
            directions: self.directions.iter().map(|v| [v.x, v.y, v.z]).collect(),
            seed: seed.then_some(self.seed),
        }
    }

    fn grid(&self, dim: usize) -> Result<SphereQuadrature> {
        sphere_grid(dim, self.level)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Relative Steiner deficit `(vol(Π_p*K) − vol(Π_p*S_uK)) / vol(Π_p*K)`;
/// both bodies come from one shadow system so they share a discretization.
pub fn petty_steiner_check(k: &Body, u: &Vec3, p: f64, grid: &SphereQuadrature, base_level: u32) -> Result<Record> {
    let sys = ShadowSystem::new(k, u, base_level)?;
    let v1 = sys.polar_pi_volume_at(1.0, p, grid)?;
    let v0 = sys.polar_pi_volume_at(0.0, p, grid)?;
    Ok(Record::new("steiner_deficit", (v1 - v0) / v1, 1e-6))
}

/// Diameter estimate `max_v (h(v) + h(−v))` over a level-3 grid.
fn diameter(k: &Body) -> Result<f64> {
    let g = sphere_grid(k.dim(), 3)?;
    Ok(g.nodes
        .iter()
        .map(|v| k.support(v) + k.support(&-v))
        .fold(0.0, f64::max))
}

/// Least squares solution of `a·x ≈ b`.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Fit(e.to_string()))
}

/// Largest deviation of the chord midpoints `(f+g)/2` from their affine
/// least-squares fit over the base, relative to the diameter.
pub fn midpoint_coplanarity(k: &Body, u: &Vec3, base_level: u32) -> Result<f64> {
    let gf = k.graph_functions(u)?;
    let pts = gf.base_points(base_level)?;
    let dim = k.dim();
    let mut rows = Vec::with_capacity(pts.len());
    let mut mids = Vec::with_capacity(pts.len());
    for x in &pts {
        let m = gf.midpoint(x)?;
        let mut row = vec![1.0];
        row.extend(gf.frame.coords(x));
        rows.push(row);
        mids.push(m);
    }
    if rows.len() < dim + 1 {
        return Err(Error::Rank("too few base points for an affine fit".into()));
    }
    let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let b = DVector::from_vec(mids);
    let c = least_squares(a.clone(), b.clone())?;
    let resid = (a * c - b).amax();
    Ok(resid / diameter(k)?)
}

/// Fits `h(v)² ≈ vᵀMv` on the nodes; returns `A = M^{1/2}` and
/// `max |h(v) − |Av|| / h(v)`.
pub fn fit_support(dim: usize, nodes: &[Vec3], values: &[f64]) -> Result<(Mat3, f64)> {
    let idx: &[(usize, usize)] = if dim == 2 {
        &[(0, 0), (1, 1), (0, 1)]
    } else {
        &[(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    };
    let a = DMatrix::from_fn(nodes.len(), idx.len(), |r, c| {
        let (i, j) = idx[c];
        let v = nodes[r];
        if i == j {
            v[i] * v[i]
        } else {
            2.0 * v[i] * v[j]
        }
    });
    let b = DVector::from_iterator(values.len(), values.iter().map(|h| h * h));
    let c = least_squares(a, b)?;
    let mut m = Mat3::identity();
    for (k, &(i, j)) in idx.iter().enumerate() {
        m[(i, j)] = c[k];
        m[(j, i)] = c[k];
    }
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Fit(format!(
            "quadratic form is not positive definite: {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    let root = eig.eigenvectors * Mat3::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let residual = nodes
        .iter()
        .zip(values)
        .map(|(v, h)| ((root * v).norm() - h).abs() / h)
        .fold(0.0, f64::max);
    Ok((root, residual))
}

/// Centered ellipsoid `A·B` best matching `h_K` on the grid.
pub fn ellipsoid_fit(k: &Body, grid: &SphereQuadrature) -> Result<(Mat3, f64)> {
    let values: Vec<f64> = grid.nodes.iter().map(|v| k.support(v)).collect();
    let scale = values.iter().copied().fold(0.0, f64::max);
    let asym = grid
        .nodes
        .iter()
        .zip(&values)
        .map(|(v, h)| (k.support(&-v) - h).abs())
        .fold(0.0, f64::max);
    if asym > 1e-8 * scale {
        return Err(domain(format!(
            "ellipsoid fit needs an origin-symmetric body (asymmetry {asym:e})"
        )));
    }
    fit_support(grid.dim, &grid.nodes, &values)
}

/// Tolerances of the rigidity chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityTolerances {
    pub fixed_point: f64,
    pub fixed_point_refined: f64,
    pub variation: f64,
    pub constancy: f64,
    pub monotone: f64,
    pub coplanarity: f64,
    pub ellipsoid: f64,
}

impl Default for RigidityTolerances {
    fn default() -> Self {
        RigidityTolerances {
            fixed_point: 1e-2,
            fixed_point_refined: 3e-3,
            variation: 5e-3,
            constancy: 1e-2,
            monotone: 1e-5,
            coplanarity: 1e-6,
            ellipsoid: 1e-6,
        }
    }
}

impl RigidityTolerances {
    pub fn tightened(self, f: f64) -> Self {
        RigidityTolerances {
            fixed_point: self.fixed_point / f,
            fixed_point_refined: self.fixed_point_refined / f,
            variation: self.variation / f,
            constancy: self.constancy / f,
            monotone: self.monotone,
            coplanarity: self.coplanarity / f,
            ellipsoid: self.ellipsoid / f,
        }
    }
}

fn sweep_table(name: String, sw: &crate::rolodex::Sweep) -> Table {
    let mut t = Table::new(name, &["t", "vol_Kt", "vol_polar_pi"]);
    for i in 0..sw.ts.len() {
        t.rows.push(vec![sw.ts[i], sw.volumes[i], sw.polar_volumes[i]]);
    }
    t
}

fn require_smooth(k: &Body, what: &str) -> Result<()> {
    if k.as_smooth().is_some() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} needs a smooth body")))
    }
}

struct DirectionResult {
    variation: f64,
    constancy: f64,
    monotone: f64,
    coplanarity: f64,
    sweep: crate::rolodex::Sweep,
}

/// Runs the chain: vanishing first variation, constant `vol(Π_p*K_t)`,
/// Steiner equality, coplanar midpoints, and the ellipsoid fit.
pub fn rigidity_experiment(
    k: &Body,
    spec: Option<BodySpec>,
    s: &Settings,
    tol: &RigidityTolerances,
) -> Result<ExperimentReport> {
    require_smooth(k, "the rigidity experiment")?;
    let dim = k.dim();
    let grid = s.grid(dim)?;
    let mut report = ExperimentReport::new("rigidity", spec, s.params(false));

    let (_, fixed) = fixed_point_residual_of(k, s.p, &grid)?;
    report.push("fixed_point_residual", fixed, tol.fixed_point);
    let (_, refined) = fixed_point_residual_of(k, s.p, &sphere_grid(dim, s.level + 1)?)?;
    report.push("fixed_point_residual_refined", refined, tol.fixed_point_refined);
    let (_, fit) = ellipsoid_fit(k, &grid)?;
    report.push("ellipsoid_fit_residual", fit, tol.ellipsoid);

    let ts = s.ts();
    let per: Vec<DirectionResult> = s
        .directions
        .par_iter()
        .map(|u| {
            let sys = ShadowSystem::new(k, u, s.base_level)?;
            let sweep = monotonicity_sweep(&sys, s.p, &ts, &grid)?;
            let v1 = sys.polar_pi_volume_at(1.0, s.p, &grid)?;
            let variation = sys.first_variation_polar_pi(s.p, &s.steps, &grid)?.abs() / v1;
            let constancy = sweep.polar_volumes.iter().map(|v| (v - v1).abs()).fold(0.0, f64::max) / v1;
            let coplanarity = midpoint_coplanarity(k, u, s.base_level)?;
            Ok(DirectionResult {
                variation,
                constancy,
                monotone: sweep.max_increase / v1,
                coplanarity,
                sweep,
            })
        })
        .collect::<Result<_>>()?;
    for (i, d) in per.iter().enumerate() {
        report.push(format!("variation.u{i}"), d.variation, tol.variation);
        report.push(format!("constancy.u{i}"), d.constancy, tol.constancy);
        report.push(format!("monotone.u{i}"), d.monotone, tol.monotone);
        report.push(format!("coplanarity.u{i}"), d.coplanarity, tol.coplanarity);
        report.tables.push(sweep_table(format!("sweep_u{i}"), &d.sweep));
    }
    Ok(report)
}

fn fixed_point_residual_of(k: &Body, p: f64, grid: &SphereQuadrature) -> Result<(f64, f64)> {
    crate::lp_ops::fixed_point_residual(k, p, grid)
}

/// Wulff shape `{x : ⟨x, vᵢ⟩ ≤ hᵢ}` of sampled support values, built as
/// the polar of `conv{vᵢ / hᵢ}`.
pub fn wulff_shape(dim: usize, nodes: &[Vec3], values: &[f64]) -> Result<Polytope> {
    if values.iter().any(|h| !(*h > 0.0)) {
        return Err(domain("Wulff shape needs positive support values"));
    }
    let dual: Vec<Vec3> = nodes.iter().zip(values).map(|(v, h)| v / *h).collect();
    let dual = Polytope::from_points(&dual, dim)?;
    let verts: Vec<Vec3> = dual.facets.iter().map(|f| f.normal / f.offset).collect();
    Polytope::from_points(&verts, dim)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateStep {
    pub step: usize,
    /// Dilation factor between `h_{Γ_pΠ_p*K_j}` and `h_{K_j}`.
    pub c_star: f64,
    pub fixed_residual: f64,
    /// Ellipsoid-fit residual of `h_{K_j}`; `NaN` when no fit exists.
    pub ellipsoid_residual: f64,
    /// Largest relative support loss `(hᵢ − h_W(vᵢ))/hᵢ` when `K_j` was built
    /// from samples; 0 for the start body.
    pub convexity_violation: f64,
}

/// `K_{j+1}` = Wulff shape of `h_{Γ_pΠ_p*K_j}` on the grid, rescaled to unit
/// volume. Row `j` describes `K_j`, `j < steps`.
pub fn iterate_operator(k0: &Body, p: f64, steps: usize, grid: &SphereQuadrature) -> Result<Vec<IterateStep>> {
    let dim = k0.dim();
    let mut k = k0.clone();
    let mut violation = 0.0;
    let mut out = Vec::with_capacity(steps);
    for j in 0..steps {
        let image = gamma_polar_pi(&k, p, grid)?;
        let hk: Vec<f64> = grid.nodes.iter().map(|v| k.support(v)).collect();
        let (c_star, fixed_residual) = ratio_spread(&image.values, &hk);
        let ellipsoid_residual = fit_support(dim, &grid.nodes, &hk).map_or(f64::NAN, |f| f.1);
        out.push(IterateStep {
            step: j,
            c_star,
            fixed_residual,
            ellipsoid_residual,
            convexity_violation: violation,
        });
        if j + 1 == steps {
            break;
        }
        let w = wulff_shape(dim, &grid.nodes, &image.values)?;
        violation = grid
            .nodes
            .iter()
            .zip(&image.values)
            .map(|(v, h)| (h - w.support(v)) / h)
            .fold(0.0, f64::max);
        let w: Body = w.into();
        k = w.scale(w.volume_exact().powf(-1.0 / dim as f64))?;
    }
    Ok(out)
}

pub fn iterate_report(k0: &Body, spec: Option<BodySpec>, s: &Settings, steps: usize) -> Result<ExperimentReport> {
    let grid = s.grid(k0.dim())?;
    let traj = iterate_operator(k0, s.p, steps, &grid)?;
    let mut report = ExperimentReport::new("iterate", spec, s.params(false));
    let mut table = Table::new(
        "trajectory",
        &["step", "c_star", "fixed_residual", "ellipsoid_residual"],
    );
    for st in &traj {
        table.rows.push(vec![
            st.step as f64,
            st.c_star,
            st.fixed_residual,
            st.ellipsoid_residual,
        ]);
        if st.step > 0 {
            report.push(
                format!("convexity_violation.step{}", st.step),
                st.convexity_violation,
                1e-6,
            );
        }
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Covariance,
    Rolodex,
    Monotone,
    Convexity,
    Harmonic,
    Admissible,
    Petty,
    Coplanar,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Covariance,
        Suite::Rolodex,
        Suite::Monotone,
        Suite::Convexity,
        Suite::Harmonic,
        Suite::Admissible,
        Suite::Petty,
        Suite::Coplanar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Covariance => "covariance",
            Suite::Rolodex => "rolodex",
            Suite::Monotone => "monotone",
            Suite::Convexity => "convexity",
            Suite::Harmonic => "harmonic",
            Suite::Admissible => "admissible",
            Suite::Petty => "petty",
            Suite::Coplanar => "coplanar",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

/// `diag(2, 1/2, 1)` followed by a unit shear.
pub fn default_map() -> Mat3 {
    Mat3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0) * Mat3::from_diagonal(&Vec3::new(2.0, 0.5, 1.0))
}

/// Symmetric `M(t)` grid on `[−1, 1]`.
pub const CONVEXITY_TS: [f64; 9] = [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0];

/// Harmonic draws for one direction, seeded by `(seed, direction index)`.
pub fn harmonic_samples(sys: &ShadowSystem, fiber: &Fiber, s: &Settings, index: usize) -> Result<Vec<HarmonicSample>> {
    let top = Wedge::new(&PiProjection::new(&sys.body_at(1.0)?, s.p, s.level)?, fiber).top();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64));
    Ok(HarmonicSample::draw(&mut rng, s.samples, top))
}

fn fibers(u: &Vec3, m: usize) -> Result<Vec<Fiber>> {
    fiber_angles(m).into_iter().map(|a| Fiber::new(u, a)).collect()
}

/// Runs one verification suite; every record carries its tolerance.
pub fn run_suite(suite: Suite, k: &Body, spec: Option<BodySpec>, s: &Settings) -> Result<ExperimentReport> {
    let dim = k.dim();
    let grid = s.grid(dim)?;
    let mut report = ExperimentReport::new(suite.name(), spec, s.params(suite == Suite::Harmonic));
    let dirs: Vec<Vec3> = s.directions.iter().map(|u| unit(*u)).collect::<Result<_>>()?;
    match suite {
        Suite::Covariance => {
            let a = s.map.unwrap_or_else(default_map);
            let r = check_covariance(k, &a, s.p, &grid)?;
            report.push(
                "pi_deviation",
                r.pi_deviation,
                if k.is_polytope() { 1e-9 } else { 1e-2 },
            );
            report.push("gamma_deviation", r.gamma_deviation, 1e-2);
        }
        Suite::Rolodex => {
            let u = dirs.first().ok_or_else(|| domain("no direction given"))?;
            let rolo = rolodex_volume(k, u, s.p, s.angles, s.scount, s.level)?;
            let direct = PiProjection::new(k, s.p, s.level)?.polar_volume(&grid);
            report.push("rolodex_gap", (rolo - direct).abs() / direct, 2e-2);
        }
        Suite::Monotone => {
            let ts = s.ts();
            let rows: Vec<_> = dirs
                .par_iter()
                .map(|u| {
                    let sys = ShadowSystem::new(k, u, s.base_level)?;
                    let sw = monotonicity_sweep(&sys, s.p, &ts, &grid)?;
                    let inv = sys.volume_invariance(&ts)?;
                    Ok((sw, inv))
                })
                .collect::<Result<_>>()?;
            for (i, (sw, inv)) in rows.iter().enumerate() {
                let vol = sw.polar_volumes.iter().copied().fold(0.0, f64::max);
                report.push(format!("monotone.u{i}"), sw.max_increase / vol, 1e-6);
                report.push(format!("volume_invariance.u{i}"), *inv, 1e-9);
                report.tables.push(sweep_table(format!("sweep_u{i}"), sw));
            }
        }
        Suite::Convexity => {
            for (i, u) in dirs.iter().enumerate() {
                let sys = ShadowSystem::new(k, u, s.base_level)?;
                let r = convexity_check(
                    &sys,
                    &fibers(&sys.u(), s.fibers)?,
                    s.p,
                    &CONVEXITY_TS,
                    s.scount,
                    s.level,
                )?;
                report.push(format!("convexity.u{i}"), r.max_violation, 1e-6);
                report.push(format!("evenness.u{i}"), r.max_asymmetry, 1e-8);
            }
        }
        Suite::Harmonic => {
            for (i, u) in dirs.iter().enumerate() {
                let sys = ShadowSystem::new(k, u, s.base_level)?;
                let fs = fibers(&sys.u(), s.fibers)?;
                let samples = harmonic_samples(&sys, &fs[0], s, i)?;
                let r = harmonic_inequality_check(&sys, &fs, s.p, &samples, s.level)?;
                report.push(format!("harmonic_section.u{i}"), r.section_violation, 1e-6);
                report.push(format!("harmonic_wedge.u{i}"), r.wedge_violation, 1e-6);
            }
        }
        Suite::Admissible => {
            require_smooth(k, "the admissibility suite")?;
            let area = k.surface_measure(s.level)?.total_mass();
            for (i, u) in dirs.iter().enumerate() {
                let sys = ShadowSystem::new(k, u, s.base_level)?;
                let trace = sys.check_admissible(&[0.9, 0.99, 0.999], &grid)?;
                let last = *trace.sup_deviation.last().expect("three parameters");
                report.push(format!("admissible_sup.u{i}"), last, 1e-2);
                report.push(
                    format!("admissible_decreasing.u{i}"),
                    if trace.strictly_decreasing() { 0.0 } else { 1.0 },
                    0.0,
                );
                report.push(
                    format!("phi_integral.u{i}"),
                    sys.phi_surface_integral(s.level)?.abs() / area,
                    1e-4,
                );
            }
        }
        Suite::Petty => {
            let recs: Vec<Record> = dirs
                .par_iter()
                .map(|u| petty_steiner_check(k, u, s.p, &grid, s.base_level))
                .collect::<Result<_>>()?;
            for (i, r) in recs.into_iter().enumerate() {
                report.push(format!("steiner_deficit.u{i}"), r.value, r.tol);
            }
        }
        Suite::Coplanar => {
            let res: Vec<f64> = dirs
                .par_iter()
                .map(|u| midpoint_coplanarity(k, u, s.base_level))
                .collect::<Result<_>>()?;
            for (i, r) in res.into_iter().enumerate() {
                report.push(format!("coplanarity.u{i}"), r, 1e-6);
            }
        }
    }
    Ok(report)
}
