//! The L_p-projection Rolodex in three dimensions.
//!
//! For a line `E = span{e(α)} ⊂ u^⊥` the plane `E^⊥` has the orthonormal
//! frame `{w, u}`; a point `y·w + s·u` is written `(y, s)`. The wedge
//! functional is the gauge
//!
//! ```text
//! N(y, s)^p = ∫ |⟨J(yw + su), ν⟩|^p h^{1−p} dS = Σ mᵢ |y·aᵢ − s·bᵢ|^p
//! ```
//!
//! with `aᵢ = ⟨u, νᵢ⟩`, `bᵢ = ⟨w, νᵢ⟩`, and `L_{E,p}` is its unit ball.

use rayon::prelude::*;

use crate::bodies::Body;
use crate::error::{domain, Result};
use crate::geom::{Frame, Vec3};
use crate::lp_ops::PiProjection;
use crate::numgrid::{abs_pow, golden_min, rolodex_constant, Quadrature1D, SphereQuadrature};
use crate::shadow::ShadowSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fiber {
    pub u: Vec3,
    pub alpha: f64,
    /// Spans `E`.
    pub e: Vec3,
    /// Spans `E^⊥ ∩ u^⊥`.
    pub w: Vec3,
}

impl Fiber {
    pub fn new(u: &Vec3, alpha: f64) -> Result<Self> {
        let f = Frame::new(3, *u)?;
        let (c, s) = (alpha.cos(), alpha.sin());
        let e = c * f.basis[0] + s * f.basis[1];
        let w = -s * f.basis[0] + c * f.basis[1];
        Ok(Fiber { u: f.u, alpha, e, w })
    }

    /// Quarter turn of `E^⊥`: `J(w) = u`, `J(u) = −w`; `x` is first
    /// projected onto `E^⊥`.
    pub fn j(&self, x: &Vec3) -> Vec3 {
        let (y, s) = self.coords(x);
        y * self.u - s * self.w
    }

    /// `(y, s)` coordinates of the projection of `x` onto `E^⊥`.
    pub fn coords(&self, x: &Vec3) -> (f64, f64) {
        (x.dot(&self.w), x.dot(&self.u))
    }

    pub fn point(&self, y: f64, s: f64) -> Vec3 {
        y * self.w + s * self.u
    }
}

/// The wedge gauge of one body on one fiber.
#[derive(Debug, Clone)]
pub struct Wedge {
    pub p: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    m: Vec<f64>,
    /// Circumradius of `L_{E,p}`.
    reach: f64,
}

impl Wedge {
    pub fn new(pi: &PiProjection, fiber: &Fiber) -> Self {
        let (normals, weights) = pi.atoms();
        let mut a = Vec::with_capacity(normals.len());
        let mut b = Vec::with_capacity(normals.len());
        let mut m = Vec::with_capacity(normals.len());
        for (nu, wt) in normals.iter().zip(weights) {
            a.push(nu.dot(&fiber.u));
            b.push(nu.dot(&fiber.w));
            m.push(*wt);
        }
        let mut wedge = Wedge {
            p: pi.p,
            a,
            b,
            m,
            reach: 0.0,
        };
        let k = 720;
        let min = (0..k)
            .map(|i| {
                let phi = std::f64::consts::PI * i as f64 / k as f64;
                wedge.norm(phi.cos(), phi.sin())
            })
            .fold(f64::INFINITY, f64::min);
        // the sampled minimum can miss the true one by a factor cos(π/2k)
        wedge.reach = 1.001 / min;
        wedge
    }

    pub fn norm_p(&self, y: f64, s: f64) -> f64 {
        let p = self.p;
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.m)
            .map(|((a, b), m)| m * abs_pow(y * a - s * b, p))
            .sum()
    }

    /// `N(y, s)`.
    pub fn norm(&self, y: f64, s: f64) -> f64 {
        self.norm_p(y, s).powf(1.0 / self.p)
    }

    /// `N^p` and its `y`-derivative.
    fn norm_p_dy(&self, y: f64, s: f64) -> (f64, f64) {
        let p = self.p;
        let (mut f, mut df) = (0.0, 0.0);
        for ((a, b), m) in self.a.iter().zip(&self.b).zip(&self.m) {
            let z = y * a - s * b;
            let az = z.abs();
            let q = if p == 2.0 { az } else { az.powf(p - 1.0) };
            f += m * q * az;
            df += m * p * q * z.signum() * a;
        }
        (f, df)
    }

    /// Endpoint of `{N(·, s) ≤ 1}` reached by Newton's method from `y0`
    /// outside the set; `None` when the section is empty. Convexity keeps
    /// the iterates on the outside, moving monotonically.
    fn endpoint(&self, s: f64, y0: f64) -> Option<f64> {
        let dir = y0.signum();
        let mut y = y0;
        for _ in 0..200 {
            let (f, df) = self.norm_p_dy(y, s);
            let g = f - 1.0;
            if g <= 0.0 {
                return Some(y);
            }
            if df * dir <= 0.0 {
                return None;
            }
            let step = g / df;
            y -= step;
            if step.abs() <= 1e-15 * self.reach {
                return Some(y);
            }
        }
        Some(y)
    }

    /// `L_{E,p,u,s}` as an interval of `y`.
    pub fn section(&self, s: f64) -> Option<(f64, f64)> {
        let y0 = 2.0 * self.reach;
        let hi = self.endpoint(s, y0)?;
        let lo = self.endpoint(s, -y0)?;
        (hi >= lo).then_some((lo, hi))
    }

    pub fn section_length(&self, s: f64) -> f64 {
        self.section(s).map_or(0.0, |(lo, hi)| hi - lo)
    }

    /// Largest height `max{s : (y, s) ∈ L_{E,p}}`.
    pub fn top(&self) -> f64 {
        let bound = self.reach * self.norm(0.0, 1.0);
        let (_, min) = golden_min(|y| self.norm_p(y, 1.0), -bound, bound, 1e-13 * bound);
        min.powf(-1.0 / self.p)
    }

    /// `∫_ℝ |s|·|L_{E,p,u,s}| ds` by Gauss–Legendre in `τ`, `s = top·(1−τ²)`.
    pub fn section_integral(&self, rule: &Quadrature1D) -> f64 {
        let top = self.top();
        // the body is origin-symmetric, so both halves agree
        2.0 * rule.integrate(|tau| {
            let s = top * (1.0 - tau * tau);
            s * self.section_length(s) * 2.0 * top * tau
        })
    }

    /// Boundary points `d / N(d)` of `L_{E,p}` for `m` equally spaced
    /// directions, as `(y, s)` pairs.
    pub fn boundary(&self, m: usize) -> Vec<(f64, f64)> {
        (0..m)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let (c, s) = (phi.cos(), phi.sin());
                let r = self.norm(c, s);
                (c / r, s / r)
            })
            .collect()
    }
}

fn tau_rule(scount: usize) -> Result<Quadrature1D> {
    Quadrature1D::gauss_legendre(scount, 0.0, 1.0)
}

fn check_dim(k: &Body) -> Result<()> {
    if k.dim() == 3 {
        Ok(())
    } else {
        Err(crate::Error::Unsupported(
            "the Rolodex is implemented for n = 3 only".into(),
        ))
    }
}

/// `|P_{E∧x,p}K|`.
pub fn pe_wedge(k: &Body, fiber: &Fiber, x: &Vec3, p: f64, level: u32) -> Result<f64> {
    check_dim(k)?;
    let (y, s) = fiber.coords(x);
    Ok(Wedge::new(&PiProjection::new(k, p, level)?, fiber).norm(y, s))
}

pub fn section_length(k: &Body, fiber: &Fiber, s: f64, p: f64, level: u32) -> Result<f64> {
    check_dim(k)?;
    Ok(Wedge::new(&PiProjection::new(k, p, level)?, fiber).section_length(s))
}

/// Boundary of `L_{E,p}(K)` as points of `E^⊥`.
pub fn lep_boundary(k: &Body, fiber: &Fiber, p: f64, m: usize, level: u32) -> Result<Vec<Vec3>> {
    check_dim(k)?;
    let wedge = Wedge::new(&PiProjection::new(k, p, level)?, fiber);
    Ok(wedge.boundary(m).into_iter().map(|(y, s)| fiber.point(y, s)).collect())
}

/// Fiber angles `α_k = (k + ½)π/m`.
pub fn fiber_angles(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| (k as f64 + 0.5) * std::f64::consts::PI / m as f64)
        .collect()
}

/// `c̃_{3,p} · avg_α ∫ |s|·|L_{E,p,u,s}(K)| ds`.
pub fn rolodex_volume(k: &Body, u: &Vec3, p: f64, angles: usize, scount: usize, level: u32) -> Result<f64> {
    check_dim(k)?;
    if angles == 0 || scount == 0 {
        return Err(domain("angle and s counts must be positive"));
    }
    let pi = PiProjection::new(k, p, level)?;
    let rule = tau_rule(scount)?;
    let fibers = fiber_angles(angles)
        .into_iter()
        .map(|a| Fiber::new(u, a))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<f64> = fibers
        .par_iter()
        .map(|f| Wedge::new(&pi, f).section_integral(&rule))
        .collect();
    Ok(rolodex_constant(3, p)? * parts.iter().sum::<f64>() / angles as f64)
}

/// `M(t) = (∫ |s|·|L_{E,p,u,s}(K_t)| ds)^{−1/q}`, `q = 1 + 1/p`.
pub fn m_functional(sys: &ShadowSystem, fiber: &Fiber, t: f64, p: f64, scount: usize, level: u32) -> Result<f64> {
    let kt = sys.body_at(t)?;
    check_dim(&kt)?;
    let wedge = Wedge::new(&PiProjection::new(&kt, p, level)?, fiber);
    let i = wedge.section_integral(&tau_rule(scount)?);
    if !(i > 0.0) {
        return Err(domain("degenerate section integral"));
    }
    Ok(i.powf(-1.0 / (1.0 + 1.0 / p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub ts: Vec<f64>,
    /// `M(t)` per fiber.
    pub values: Vec<Vec<f64>>,
    /// Largest `M(t_α) − [(1−α)M(t₀) + αM(t₁)]` over consecutive triples.
    pub max_violation: f64,
    /// Largest `|M(t) − M(−t)|`.
    pub max_asymmetry: f64,
}

pub fn convexity_check(
    sys: &ShadowSystem,
    fibers: &[Fiber],
    p: f64,
    ts: &[f64],
    scount: usize,
    level: u32,
) -> Result<ConvexityReport> {
    let mut all: Vec<f64> = ts.iter().flat_map(|t| [*t, -*t]).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let rule = tau_rule(scount)?;
    let e = -1.0 / (1.0 + 1.0 / p);
    // rows indexed by t, columns by fiber
    let table: Vec<Vec<f64>> = all
        .par_iter()
        .map(|t| {
            let kt = sys.body_at(*t)?;
            check_dim(&kt)?;
            let pi = PiProjection::new(&kt, p, level)?;
            Ok(fibers
                .iter()
                .map(|f| Wedge::new(&pi, f).section_integral(&rule).powf(e))
                .collect())
        })
        .collect::<Result<_>>()?;
    let at = |t: f64, j: usize| table[all.iter().position(|x| *x == t).expect("t present")][j];
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_asymmetry = 0.0f64;
    for j in 0..fibers.len() {
        for w in ts.windows(3) {
            let alpha = (w[1] - w[0]) / (w[2] - w[0]);
            let v = at(w[1], j) - ((1.0 - alpha) * at(w[0], j) + alpha * at(w[2], j));
            max_violation = max_violation.max(v);
        }
        for t in ts {
            max_asymmetry = max_asymmetry.max((at(*t, j) - at(-*t, j)).abs());
        }
    }
    let values = (0..fibers.len())
        .map(|j| ts.iter().map(|t| at(*t, j)).collect())
        .collect();
    Ok(ConvexityReport {
        ts: ts.to_vec(),
        values,
        max_violation,
        max_asymmetry,
    })
}

/// One draw for the harmonic section inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSample {
    pub s0: f64,
    pub s1: f64,
    pub alpha: f64,
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl HarmonicSample {
    pub fn lambda(&self) -> f64 {
        self.alpha * self.s0 / (self.alpha * self.s0 + (1.0 - self.alpha) * self.s1)
    }

    pub fn s_alpha(&self) -> f64 {
        let l = self.lambda();
        (1.0 - l) * self.s0 + l * self.s1
    }

    pub fn t_alpha(&self) -> f64 {
        (1.0 - self.alpha) * self.t0 + self.alpha * self.t1
    }

    /// Seeded draws with heights as fractions of a reference height.
    pub fn draw(rng: &mut impl rand::Rng, n: usize, height: f64) -> Vec<HarmonicSample> {
        (0..n)
            .map(|_| HarmonicSample {
                s0: height * rng.gen_range(0.02..0.98),
                s1: height * rng.gen_range(0.02..0.98),
                alpha: rng.gen_range(0.02..0.98),
                t0: rng.gen_range(-1.0..=1.0),
                t1: rng.gen_range(-1.0..=1.0),
                y0: height * rng.gen_range(-1.0..1.0),
                y1: height * rng.gen_range(-1.0..1.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicReport {
    /// Largest `RHS − LHS` of the weighted section inequality.
    pub section_violation: f64,
    /// Largest relative `LHS − RHS` of the p-th power wedge inequality.
    pub wedge_violation: f64,
}

/// Sample `k` is evaluated on fiber `k mod fibers.len()`.
pub fn harmonic_inequality_check(
    sys: &ShadowSystem,
    fibers: &[Fiber],
    p: f64,
    samples: &[HarmonicSample],
    level: u32,
) -> Result<HarmonicReport> {
    if fibers.is_empty() {
        return Err(domain("no fibers"));
    }
    let pi_at = |t: f64| -> Result<PiProjection> { PiProjection::new(&sys.body_at(t)?, p, level) };
    let e = (p - 1.0) / p;
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .enumerate()
        .map(|(k, h)| {
            let fiber = &fibers[k % fibers.len()];
            let w0 = Wedge::new(&pi_at(h.t0)?, fiber);
            let w1 = Wedge::new(&pi_at(h.t1)?, fiber);
            let wa = Wedge::new(&pi_at(h.t_alpha())?, fiber);
            let (l, sa) = (h.lambda(), h.s_alpha());
            let lhs = sa.powf(e) * wa.section_length(sa);
            let f0 = h.s0.powf(e) * w0.section_length(h.s0);
            let f1 = h.s1.powf(e) * w1.section_length(h.s1);
            let rhs = f0.powf(1.0 - l) * f1.powf(l);
            let sec = rhs - lhs;

            let yl = (1.0 - l) * h.y0 + l * h.y1;
            let left = wa.norm_p(yl, sa);
            let right = (1.0 - l) * (h.s0 / sa).powf(1.0 - p) * w0.norm_p(h.y0, h.s0)
                + l * (h.s1 / sa).powf(1.0 - p) * w1.norm_p(h.y1, h.s1);
            Ok((sec, (left - right) / right))
        })
        .collect::<Result<_>>()?;
    let section_violation = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let wedge_violation = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(HarmonicReport {
        section_violation,
        wedge_violation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub ts: Vec<f64>,
    /// `vol(K_t)` (fiber volume).
    pub volumes: Vec<f64>,
    pub polar_volumes: Vec<f64>,
    /// Largest `vol(t_{i+1}) − vol(t_i)` of the polar volumes.
    pub max_increase: f64,
}

/// `vol(Π_p* K_t)` along a `t` grid in `[0, 1]`.
pub fn monotonicity_sweep(sys: &ShadowSystem, p: f64, ts: &[f64], grid: &SphereQuadrature) -> Result<Sweep> {
    if ts.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(domain("monotonicity sweep needs t in [0, 1]"));
    }
    let mut volumes = Vec::with_capacity(ts.len());
    let mut polar_volumes = Vec::with_capacity(ts.len());
    for &t in ts {
        let kt = sys.body_at(t)?;
        volumes.push(kt.volume_exact());
        polar_volumes.push(PiProjection::new(&kt, p, grid.level)?.polar_volume(grid));
    }
    let max_increase = polar_volumes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Sweep {
        ts: ts.to_vec(),
        volumes,
        polar_volumes,
        max_increase,
    })
}
