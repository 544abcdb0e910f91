use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lpbm::bodies::{Body, BodySpec};
use lpbm::geom::{Mat3, Vec3};
use lpbm::lab::{
    iterate_report, rigidity_experiment, run_suite, sig10, write_report, ExperimentReport, RigidityTolerances,
    Settings, Suite,
};
use lpbm::lp_ops::{check_p, GammaCentroid, PiProjection};
use lpbm::numgrid::sphere_grid;
use lpbm::shadow::ShadowSystem;

#[derive(Parser, Debug)]
#[command(name = "lpbm", version, about = "L_p projection and centroid body laboratory")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Body spec (JSON).
    #[arg(long, global = true)]
    body: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2.0)]
    p: f64,
    /// Sphere grid level.
    #[arg(long, global = true, default_value_t = 3)]
    level: u32,
    /// Base grid level of shadow systems.
    #[arg(long, global = true, default_value_t = 3)]
    base_level: u32,
    /// Fiber angles of the Rolodex average.
    #[arg(long, global = true, default_value_t = 16)]
    angles: usize,
    /// Section-integral nodes.
    #[arg(long, global = true, default_value_t = 32)]
    scount: usize,
    /// Parameter grid `a:b:n`.
    #[arg(long, global = true, default_value = "0:1:11")]
    tgrid: String,
    /// Direction `x,y,z`; repeat for a list (default: axes and diagonals).
    #[arg(long = "u", global = true)]
    u: Vec<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "LPBMK_OUT", default_value = "lpbm-out")]
    out: PathBuf,
    /// JSON file overriding the settings above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Linear map: `diag:a,b,c` or row-major entries.
    #[arg(long = "A", global = true, allow_hyphen_values = true)]
    map: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one operator.
    Op {
        #[arg(value_enum)]
        what: OpKind,
    },
    /// Run a verification suite; exit 1 when a check fails.
    Verify { suite: Suite },
    /// Run the rigidity chain and print its verdict.
    Rigidity,
    /// Iterate `K ↦ Γ_pΠ_p*K` at unit volume.
    Iterate {
        #[arg(long, default_value_t = 3)]
        steps: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OpKind {
    Support,
    Pibody,
    Gamma,
    Polar,
    Steiner,
    Volume,
}

/// Keys accepted by `--config`.
#[derive(serde::Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    p: Option<f64>,
    level: Option<u32>,
    base_level: Option<u32>,
    angles: Option<usize>,
    scount: Option<usize>,
    tgrid: Option<String>,
    directions: Option<Vec<Vec<f64>>>,
    seed: Option<u64>,
    samples: Option<usize>,
    fibers: Option<usize>,
    steps: Option<Vec<f64>>,
    map: Option<Vec<Vec<f64>>>,
}

fn parse_vector(s: &str) -> Result<Vec3> {
    let xs = parse_list(s)?;
    vector(&xs).with_context(|| format!("bad direction `{s}`"))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow!("bad number `{x}`: {e}")))
        .collect()
}

fn vector(xs: &[f64]) -> Result<Vec3> {
    match xs {
        [x, y] => Ok(Vec3::new(*x, *y, 0.0)),
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => bail!("expected 2 or 3 components, got {}", xs.len()),
    }
}

fn parse_tgrid(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("bad --tgrid `{s}`: expected a:b:n")
    };
    let tgrid = (a.parse()?, b.parse()?, n.parse()?);
    if !(-1.0..=1.0).contains(&tgrid.0) || !(-1.0..=1.0).contains(&tgrid.1) {
        bail!("bad --tgrid `{s}`: endpoints must lie in [-1, 1]");
    }
    Ok(tgrid)
}

fn parse_map(s: &str) -> Result<Mat3> {
    if let Some(d) = s.strip_prefix("diag:") {
        let xs = parse_list(d)?;
        return Ok(Mat3::from_diagonal(&vector(&xs).context("bad --A diagonal")?)
            + if xs.len() == 2 {
                Mat3::from_diagonal(&Vec3::z())
            } else {
                Mat3::zeros()
            });
    }
    let xs = parse_list(s)?;
    match xs.len() {
        4 => Ok(Mat3::new(xs[0], xs[1], 0.0, xs[2], xs[3], 0.0, 0.0, 0.0, 1.0)),
        9 => Ok(Mat3::from_row_slice(&xs)),
        n => bail!("bad --A: expected diag:… or 4 or 9 entries, got {n}"),
    }
}

fn rows_to_map(rows: &[Vec<f64>]) -> Result<Mat3> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    match (rows.len(), flat.len()) {
        (2, 4) => Ok(Mat3::new(flat[0], flat[1], 0.0, flat[2], flat[3], 0.0, 0.0, 0.0, 1.0)),
        (3, 9) => Ok(Mat3::from_row_slice(&flat)),
        _ => bail!("config `map`: expected a 2x2 or 3x3 matrix"),
    }
}

struct Run {
    settings: Settings,
    /// Directions were given explicitly.
    explicit_u: bool,
    out: PathBuf,
    body: Option<(BodySpec, Body)>,
}

impl Run {
    fn new(c: &Common) -> Result<Self> {
        let cfg: Option<ConfigFile> = match &c.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
                Some(serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?)
            }
            None => None,
        };
        let base_level = cfg.as_ref().and_then(|c| c.base_level).unwrap_or(c.base_level);
        let body = match &c.body {
            Some(path) => {
                let spec = BodySpec::load(path)?;
                let body = spec.build(base_level).with_context(|| format!("{}", path.display()))?;
                Some((spec, body))
            }
            None => None,
        };
        let dim = body.as_ref().map_or(3, |(_, b)| b.dim());
        let mut s = Settings::new(dim);
        let explicit_u = !c.u.is_empty();
        s.p = c.p;
        s.level = c.level;
        s.base_level = c.base_level;
        s.angles = c.angles;
        s.scount = c.scount;
        s.tgrid = parse_tgrid(&c.tgrid)?;
        s.seed = c.seed;
        if explicit_u {
            s.directions = c.u.iter().map(|u| parse_vector(u)).collect::<Result<_>>()?;
        }
        if let Some(m) = &c.map {
            s.map = Some(parse_map(m)?);
        }
        if let Some(cfg) = cfg {
            apply_config(&mut s, cfg)?;
        }
        check_p(s.p)?;
        Ok(Run {
            settings: s,
            explicit_u,
            out: c.out.clone(),
            body,
        })
    }

    fn body(&self) -> Result<(&BodySpec, &Body)> {
        self.body
            .as_ref()
            .map(|(s, b)| (s, b))
            .ok_or_else(|| anyhow!("--body is required"))
    }

    fn write(&self, report: &ExperimentReport) -> Result<PathBuf> {
        let path = self.out.join(format!("{}.json", report.experiment));
        write_report(report, &path)?;
        Ok(path)
    }
}

fn apply_config(s: &mut Settings, cfg: ConfigFile) -> Result<()> {
    if let Some(p) = cfg.p {
        s.p = p;
    }
    if let Some(v) = cfg.level {
        s.level = v;
    }
    if let Some(v) = cfg.base_level {
        s.base_level = v;
    }
    if let Some(v) = cfg.angles {
        s.angles = v;
    }
    if let Some(v) = cfg.scount {
        s.scount = v;
    }
    if let Some(v) = cfg.tgrid {
        s.tgrid = parse_tgrid(&v)?;
    }
    if let Some(v) = cfg.directions {
        s.directions = v
            .iter()
            .map(|d| vector(d))
            .collect::<Result<_>>()
            .context("config `directions`")?;
    }
    if let Some(v) = cfg.seed {
        s.seed = v;
    }
    if let Some(v) = cfg.samples {
        s.samples = v;
    }
    if let Some(v) = cfg.fibers {
        s.fibers = v;
    }
    if let Some(v) = cfg.steps {
        s.steps = v;
    }
    if let Some(v) = cfg.map {
        s.map = Some(rows_to_map(&v)?);
    }
    Ok(())
}

fn print_records(report: &ExperimentReport) {
    for r in &report.records {
        println!(
            "{} {} tol {} {}",
            r.name,
            sig10(r.value),
            sig10(r.tol),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
}

fn table_row(v: &Vec3, dim: usize, h: f64) -> String {
    let mut cols: Vec<String> = v.as_slice()[..dim].iter().map(|x| sig10(*x)).collect();
    cols.push(sig10(h));
    cols.join(",")
}

/// Tables can be long; a closed pipe (`| head`) ends output quietly.
fn print_table(dim: usize, nodes: &[Vec3], f: impl Fn(&Vec3) -> f64) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let head = if dim == 2 { "v1,v2,h" } else { "v1,v2,v3,h" };
    let res = writeln!(out, "{head}").and_then(|_| {
        nodes
            .iter()
            .try_for_each(|v| writeln!(out, "{}", table_row(v, dim, f(v))))
    });
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_op(run: &Run, what: OpKind) -> Result<u8> {
    let (spec, k) = run.body()?;
    let s = &run.settings;
    let dim = k.dim();
    let grid = sphere_grid(dim, s.level)?;
    let nodes: Vec<Vec3> = if run.explicit_u {
        s.directions.iter().map(|v| v.normalize()).collect()
    } else {
        grid.nodes.clone()
    };
    match what {
        OpKind::Support => print_table(dim, &nodes, |v| k.support(v))?,
        OpKind::Pibody => {
            let pi = PiProjection::new(k, s.p, s.level)?;
            print_table(dim, &nodes, |v| pi.support(v))?;
        }
        OpKind::Gamma => {
            let g = GammaCentroid::of_body(k, &grid, s.p)?;
            print_table(dim, &nodes, |v| g.support(v))?;
        }
        OpKind::Polar => println!("{}", sig10(PiProjection::new(k, s.p, s.level)?.polar_volume(&grid))),
        OpKind::Volume => println!("{}", sig10(k.volume_exact())),
        OpKind::Steiner => {
            if !run.explicit_u {
                bail!("op steiner needs --u");
            }
            let u = &s.directions[0];
            let sym = k.steiner(u, s.base_level)?;
            let out = BodySpec::describe(&sym).unwrap_or_else(|| BodySpec::Shadow {
                body: Box::new(spec.clone()),
                u: u.as_slice()[..dim].to_vec(),
                t: 0.0,
            });
            std::fs::create_dir_all(&run.out).with_context(|| format!("{}", run.out.display()))?;
            let path = run.out.join("steiner.json");
            let mut text = serde_json::to_string_pretty(&out)?;
            text.push('\n');
            std::fs::write(&path, text).with_context(|| format!("{}", path.display()))?;
            println!("{}", path.display());
            // both volumes from one discretization
            let sys = ShadowSystem::new(k, u, s.base_level)?;
            let (v1, v0) = (sys.body_at(1.0)?.volume_exact(), sys.body_at(0.0)?.volume_exact());
            println!("volume {} -> {}", sig10(v1), sig10(v0));
        }
    }
    Ok(0)
}

fn cmd_verify(run: &Run, suite: Suite) -> Result<u8> {
    let (spec, k) = run.body()?;
    let report = run_suite(suite, k, Some(spec.clone()), &run.settings)?;
    print_records(&report);
    let path = run.write(&report)?;
    println!("report {}", path.display());
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_rigidity(run: &Run) -> Result<u8> {
    let (spec, k) = run.body()?;
    let report = rigidity_experiment(k, Some(spec.clone()), &run.settings, &RigidityTolerances::default())?;
    print_records(&report);
    let path = run.write(&report)?;
    println!("report {}", path.display());
    let verdict = report.verdict().expect("rigidity records present");
    println!("verdict: {verdict}");
    Ok(0)
}

fn cmd_iterate(run: &Run, steps: usize) -> Result<u8> {
    let (spec, k) = run.body()?;
    let report = iterate_report(k, Some(spec.clone()), &run.settings, steps)?;
    for t in &report.tables {
        print!("{}", t.to_csv());
    }
    let path = run.write(&report)?;
    println!("report {}", path.display());
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    if let Some(n) = cli.common.jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let run = Run::new(&cli.common)?;
    match &cli.command {
        Command::Op { what } => cmd_op(&run, *what),
        Command::Verify { suite } => cmd_verify(&run, *suite),
        Command::Rigidity => cmd_rigidity(&run),
        Command::Iterate { steps } => cmd_iterate(&run, *steps),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
