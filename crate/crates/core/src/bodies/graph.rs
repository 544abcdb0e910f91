//! Bodies given by an upper and a lower graph over their projection onto
//! u^⊥, generated from a smooth source body. A `GraphBody` is one member
//! `K_t` of the linear reflection shadow system of the source:
//!
//! ```text
//! f_t = t·a + h,  g_t = t·a − h,  a = (f+g)/2,  h = (f−g)/2.
//! ```
//!
//! The base samples (and therefore every boundary quadrature) are shared by
//! all `t`, which keeps fiber lengths and symmetries exact on the grid.

use std::sync::Arc;

use rayon::prelude::*;

use super::measure::{MeasureNode, SurfaceMeasure};
use super::smooth::{Chord, SmoothBody};
use crate::error::{domain, Result};
use crate::geom::{reflect, Frame, Mat3, Vec3};
use crate::numgrid::{bisect, golden_min, sphere_grid};

/// Base point with its t-independent graph data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSample {
    /// Point of u^⊥.
    pub x: Vec3,
    /// (n−1)-dimensional cell measure.
    pub weight: f64,
    pub f: f64,
    pub g: f64,
    pub df: Vec3,
    pub dg: Vec3,
}

#[derive(Debug, Clone)]
pub struct GraphData {
    pub source: SmoothBody,
    pub frame: Frame,
    pub base_level: u32,
    pub samples: Vec<BaseSample>,
    /// `a(x') = a0 + ⟨b, x'⟩` when the source is a quadric.
    affine: Option<(f64, Vec3)>,
    /// Boundary parameters, boundary points and their midpoint heights, for
    /// seeding support searches.
    coarse: Vec<(Vec3, Vec3, f64)>,
}

fn fold_rotation(dim: usize) -> Mat3 {
    if dim == 2 {
        nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 0.1234567).into_inner()
    } else {
        nalgebra::Rotation3::from_euler_angles(0.3217, 0.7123, 1.1379).into_inner()
    }
}

impl GraphData {
    pub fn new(source: SmoothBody, u: Vec3, base_level: u32) -> Result<Arc<Self>> {
        let frame = Frame::new(source.dim, u)?;
        if !source.origin_interior() {
            return Err(domain("origin is not interior to the body"));
        }
        let u = frame.u;
        let grid = sphere_grid(source.dim, base_level)?.rotated(&fold_rotation(source.dim));
        let samples: Vec<Option<BaseSample>> = grid
            .nodes
            .par_iter()
            .zip(grid.weights.par_iter())
            .map(|(w, om)| base_sample(&source, &frame, w, *om))
            .collect::<Result<_>>()?;
        let samples = samples.into_iter().flatten().collect();

        let affine = source.is_quadric().then(|| {
            let beta = source.inverse() * u;
            let bb = beta.norm_squared();
            let a0 = (source.inverse() * source.center).dot(&beta) / bb;
            let b = -(source.inverse().transpose() * beta) / bb;
            (a0, b - b.dot(&u) * u)
        });
        let coarse = if affine.is_some() {
            Vec::new()
        } else {
            let cg = sphere_grid(source.dim, 3)?;
            cg.nodes
                .par_iter()
                .map(|w| {
                    let x = source.boundary_sample(w).0;
                    (*w, x, midpoint_at(&source, &frame, &x))
                })
                .collect()
        };
        Ok(Arc::new(GraphData {
            source,
            frame,
            base_level,
            samples,
            affine,
            coarse,
        }))
    }

    pub fn u(&self) -> Vec3 {
        self.frame.u
    }

    pub fn dim(&self) -> usize {
        self.source.dim
    }

    pub fn is_affine(&self) -> bool {
        self.affine.is_some()
    }

    pub fn chord(&self, x: &Vec3) -> Result<Chord> {
        self.source.chord(&self.frame.project(x), &self.frame.u)
    }

    /// Radial function of the projected base in the direction `d ∈ u^⊥`.
    pub fn base_radial(&self, d: &Vec3) -> f64 {
        base_radial(&self.source, &self.frame, d)
    }
}

fn base_radial(k: &SmoothBody, frame: &Frame, d: &Vec3) -> f64 {
    if k.dim == 2 {
        return k.support(d);
    }
    let side = frame.u.cross(d);
    let h = |phi: f64| k.support(&(phi.cos() * d + phi.sin() * side)) / phi.cos();
    let lim = std::f64::consts::FRAC_PI_2 - 1e-9;
    golden_min(h, -lim, lim, 1e-12).1
}

/// Midpoint height of the chord through the boundary point `x`.
fn midpoint_at(k: &SmoothBody, frame: &Frame, x: &Vec3) -> f64 {
    match k.chord(&frame.project(x), &frame.u) {
        Ok(c) => 0.5 * (c.lower + c.upper),
        Err(_) => x.dot(&frame.u),
    }
}

fn base_sample(k: &SmoothBody, frame: &Frame, w: &Vec3, omega: f64) -> Result<Option<BaseSample>> {
    let u = frame.u;
    let wu = w.dot(&u);
    if wu.abs() < 1e-9 {
        return Ok(None);
    }
    let what = if wu > 0.0 { *w } else { reflect(w, &u) };
    let pw = frame.project(&what);
    let r = pw.norm();
    let (x, rho) = if r < 1e-15 {
        (Vec3::zeros(), base_radial(k, frame, &frame.basis[0]))
    } else {
        let rho = base_radial(k, frame, &(pw / r));
        (rho * pw, rho)
    };
    let weight = 0.5 * omega * rho.powi(k.dim as i32 - 1) * what.dot(&u);
    // nodes hugging the rim can land a rounding error outside the base
    let mut xs = x;
    let mut chord = k.chord(&xs, &u);
    for e in 1..=9 {
        if chord.is_ok() {
            break;
        }
        xs = (1.0 - 10f64.powi(e - 16)) * x;
        chord = k.chord(&xs, &u);
    }
    let c = chord?;
    Ok(Some(BaseSample {
        x: xs,
        weight,
        f: c.upper,
        g: c.lower,
        df: c.upper_grad,
        dg: c.lower_grad,
    }))
}

/// A member `K_t` of the shadow system of `data.source` in direction `u`.
#[derive(Debug, Clone)]
pub struct GraphBody {
    pub data: Arc<GraphData>,
    pub t: f64,
}

impl PartialEq for GraphBody {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) && self.t == other.t
    }
}

impl GraphBody {
    pub fn new(data: Arc<GraphData>, t: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(domain(format!("shadow parameter t = {t} outside [-1, 1]")));
        }
        Ok(GraphBody { data, t })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn u(&self) -> Vec3 {
        self.data.u()
    }

    /// The point map `x ↦ x + (t−1)a(x')u` restricted to the boundary.
    fn image(&self, x: &Vec3) -> Vec3 {
        let a = midpoint_at(&self.data.source, &self.data.frame, x);
        x + (self.t - 1.0) * a * self.data.frame.u
    }

    pub fn support(&self, theta: &Vec3) -> f64 {
        let k = &self.data.source;
        if self.t == 1.0 {
            return k.support(theta);
        }
        let u = self.data.frame.u;
        let tu = theta.dot(&u);
        if let Some((a0, b)) = self.data.affine {
            let moved = theta + (self.t - 1.0) * tu * b;
            return k.support(&moved) + (self.t - 1.0) * a0 * tu;
        }
        let score = |x: &Vec3, a: f64| x.dot(theta) + (self.t - 1.0) * a * tu;
        let (best, _) = self
            .data
            .coarse
            .iter()
            .enumerate()
            .map(|(i, (_, x, a))| (i, score(x, *a)))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let w0 = self.data.coarse[best].0;
        let value = |w: &Vec3| -> f64 { self.image(&k.boundary_sample(w).0).dot(theta) };
        if self.dim() == 2 {
            let phi0 = w0.y.atan2(w0.x);
            let span = 2.0 * std::f64::consts::PI / self.data.coarse.len() as f64;
            let (_, v) = golden_min(
                |phi| -value(&Vec3::new(phi.cos(), phi.sin(), 0.0)),
                phi0 - span,
                phi0 + span,
                1e-12,
            );
            return -v;
        }
        let frame = Frame::new(3, w0).expect("unit node");
        let at = |c: [f64; 2]| -> Vec3 { (w0 + c[0] * frame.basis[0] + c[1] * frame.basis[1]).normalize() };
        let (_, v) = nelder_mead(|c| -value(&at(c)), [0.0, 0.0], 0.08, 1e-13);
        -v
    }

    /// Upper graph height of `K_t` over `x ∈ u^⊥` with its gradient.
    pub fn upper(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        let c = self.data.chord(x)?;
        let (a, da) = (0.5 * (c.upper + c.lower), 0.5 * (c.upper_grad + c.lower_grad));
        let (h, dh) = (0.5 * (c.upper - c.lower), 0.5 * (c.upper_grad - c.lower_grad));
        Ok((self.t * a + h, self.t * da + dh))
    }

    pub fn lower(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        let c = self.data.chord(x)?;
        let (a, da) = (0.5 * (c.upper + c.lower), 0.5 * (c.upper_grad + c.lower_grad));
        let (h, dh) = (0.5 * (c.upper - c.lower), 0.5 * (c.upper_grad - c.lower_grad));
        Ok((self.t * a - h, self.t * da - dh))
    }

    /// Signed distance-like membership: negative strictly inside.
    fn excess(&self, y: &Vec3) -> f64 {
        let u = self.data.frame.u;
        let s = y.dot(&u);
        match self.data.chord(y) {
            Ok(c) => {
                let a = 0.5 * (c.upper + c.lower);
                let h = 0.5 * (c.upper - c.lower);
                (s - self.t * a).abs() - h
            }
            Err(_) => 1.0,
        }
    }

    pub fn contains(&self, y: &Vec3) -> bool {
        self.excess(y) <= 0.0
    }

    pub fn radial(&self, v: &Vec3) -> Result<f64> {
        if self.excess(&Vec3::zeros()) >= 0.0 {
            return Err(domain("origin is not interior to the shadow body"));
        }
        let mut hi = 1.0;
        while self.excess(&(hi * v)) < 0.0 {
            hi *= 2.0;
        }
        bisect(|r| self.excess(&(r * v)), 0.0, hi, 1e-14 * hi)
    }

    /// Fiber (Fubini) volume over the shared base samples; independent of t.
    pub fn fiber_volume(&self) -> f64 {
        self.data.samples.iter().map(|s| s.weight * (s.f - s.g)).sum()
    }

    pub fn surface_measure(&self) -> SurfaceMeasure {
        let u = self.data.frame.u;
        let t = self.t;
        let mut nodes = Vec::with_capacity(2 * self.data.samples.len());
        for s in &self.data.samples {
            let (a, da) = (0.5 * (s.f + s.g), 0.5 * (s.df + s.dg));
            let (h, dh) = (0.5 * (s.f - s.g), 0.5 * (s.df - s.dg));
            let (ft, dft) = (t * a + h, t * da + dh);
            let (gt, dgt) = (t * a - h, t * da - dh);
            let ru = (1.0 + dft.norm_squared()).sqrt();
            nodes.push(MeasureNode {
                point: s.x + ft * u,
                normal: (u - dft) / ru,
                mass: ru * s.weight,
                support: (ft - s.x.dot(&dft)) / ru,
            });
            let rl = (1.0 + dgt.norm_squared()).sqrt();
            nodes.push(MeasureNode {
                point: s.x + gt * u,
                normal: (dgt - u) / rl,
                mass: rl * s.weight,
                support: (s.x.dot(&dgt) - gt) / rl,
            });
        }
        SurfaceMeasure { atomic: false, nodes }
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        GraphBody::new(self.data.clone(), t)
    }
}

/// Minimal Nelder–Mead in two variables.
pub(crate) fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], step: f64, tol: f64) -> ([f64; 2], f64) {
    let mut s = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut v = s.map(&f);
    for _ in 0..2000 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        s = idx.map(|i| s[i]);
        v = idx.map(|i| v[i]);
        let size = ((s[1][0] - s[0][0]).abs() + (s[1][1] - s[0][1]).abs())
            .max((s[2][0] - s[0][0]).abs() + (s[2][1] - s[0][1]).abs());
        if size < tol {
            break;
        }
        let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let along = |k: f64| [c[0] + k * (s[2][0] - c[0]), c[1] + k * (s[2][1] - c[1])];
        let r = along(-1.0);
        let fr = f(r);
        if fr < v[0] {
            let e = along(-2.0);
            let fe = f(e);
            if fe < fr {
                (s[2], v[2]) = (e, fe);
            } else {
                (s[2], v[2]) = (r, fr);
            }
        } else if fr < v[1] {
            (s[2], v[2]) = (r, fr);
        } else {
            let k = if fr < v[2] { -0.5 } else { 0.5 };
            let cpt = along(k);
            let fc = f(cpt);
            if fc < v[2].min(fr) {
                (s[2], v[2]) = (cpt, fc);
            } else {
                for i in 1..3 {
                    s[i] = [(s[i][0] + s[0][0]) / 2.0, (s[i][1] + s[0][1]) / 2.0];
                    v[i] = f(s[i]);
                }
            }
        }
    }
    let i = (0..3).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    (s[i], v[i])
}
