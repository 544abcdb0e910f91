//! Convex bodies in three representations and the basic operations on them.

mod graph;
mod hull;
mod measure;
mod polytope;
mod smooth;
mod spec;

use rayon::prelude::*;

pub use graph::{BaseSample, GraphBody, GraphData};
pub use hull::hull;
pub use measure::{MeasureNode, SurfaceMeasure};
pub use polytope::{Facet, Polytope};
pub use smooth::{Chord, SmoothBody};
pub use spec::BodySpec;

use crate::error::{domain, Error, Result};
use crate::geom::{Frame, Mat3, Vec3};
use crate::numgrid::{sphere_grid, SphereQuadrature};

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Polytope(Polytope),
    Smooth(SmoothBody),
    Graph(GraphBody),
}

impl From<Polytope> for Body {
    fn from(p: Polytope) -> Self {
        Body::Polytope(p)
    }
}

impl From<SmoothBody> for Body {
    fn from(s: SmoothBody) -> Self {
        Body::Smooth(s)
    }
}

impl From<GraphBody> for Body {
    fn from(g: GraphBody) -> Self {
        Body::Graph(g)
    }
}

impl Body {
    pub fn ball(dim: usize) -> Body {
        SmoothBody::ball(dim, 1.0).expect("unit ball").into()
    }

    pub fn cube(dim: usize) -> Body {
        Polytope::cuboid(&vec![1.0; dim]).expect("cube").into()
    }

    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(p) => p.dim,
            Body::Smooth(s) => s.dim,
            Body::Graph(g) => g.dim(),
        }
    }

    pub fn is_polytope(&self) -> bool {
        matches!(self, Body::Polytope(_))
    }

    pub fn support(&self, v: &Vec3) -> f64 {
        match self {
            Body::Polytope(p) => p.support(v),
            Body::Smooth(s) => s.support(v),
            Body::Graph(g) => g.support(v),
        }
    }

    pub fn radial(&self, v: &Vec3) -> Result<f64> {
        match self {
            Body::Polytope(p) => p.radial(v),
            Body::Smooth(s) => s.radial(v),
            Body::Graph(g) => g.radial(v),
        }
    }

    /// Support function of the polar body.
    pub fn polar_support(&self, v: &Vec3) -> Result<f64> {
        Ok(1.0 / self.radial(v)?)
    }

    /// `(1/n) ∫ ρⁿ` over the grid.
    pub fn volume(&self, grid: &SphereQuadrature) -> Result<f64> {
        let n = self.dim() as i32;
        let rho: Vec<f64> = grid.nodes.par_iter().map(|v| self.radial(v)).collect::<Result<_>>()?;
        Ok(rho.iter().zip(&grid.weights).map(|(r, w)| w * r.powi(n)).sum::<f64>() / n as f64)
    }

    /// Closed-form volume where one exists: pyramid sum for polytopes, the
    /// linear-image formula for smooth bodies and the fiber sum for graphs.
    pub fn volume_exact(&self) -> f64 {
        match self {
            Body::Polytope(p) => p.exact_volume(),
            Body::Smooth(s) => s.volume(),
            Body::Graph(g) => g.fiber_volume(),
        }
    }

    /// Surface area measure; `level` sets the boundary quadrature of smooth
    /// bodies and is ignored otherwise (graphs carry their own base grid).
    pub fn surface_measure(&self, level: u32) -> Result<SurfaceMeasure> {
        match self {
            Body::Polytope(p) => Ok(SurfaceMeasure {
                atomic: true,
                nodes: p
                    .facets
                    .iter()
                    .map(|f| MeasureNode {
                        point: f.offset * f.normal,
                        normal: f.normal,
                        mass: f.area,
                        support: f.offset,
                    })
                    .collect(),
            }),
            Body::Smooth(s) => {
                let grid = sphere_grid(s.dim, level)?;
                let nodes = grid
                    .nodes
                    .par_iter()
                    .zip(grid.weights.par_iter())
                    .map(|(w, om)| {
                        let (x, nu, dh) = s.boundary_sample(w);
                        MeasureNode {
                            point: x,
                            normal: nu,
                            mass: om * dh,
                            support: x.dot(&nu),
                        }
                    })
                    .collect();
                Ok(SurfaceMeasure { atomic: false, nodes })
            }
            Body::Graph(g) => Ok(g.surface_measure()),
        }
    }

    pub fn sp_integral(&self, phi: impl Fn(&Vec3) -> f64, p: f64, level: u32) -> Result<f64> {
        self.surface_measure(level)?.sp_integral(phi, p)
    }

    /// Graph functions of the body in direction `u`.
    pub fn graph_functions(&self, u: &Vec3) -> Result<GraphFunctions> {
        let frame = Frame::new(self.dim(), *u)?;
        Ok(GraphFunctions {
            body: self.clone(),
            frame,
        })
    }

    /// Affine smooth equivalent of a quadric shadow member.
    pub fn as_smooth(&self) -> Option<SmoothBody> {
        match self {
            Body::Smooth(s) => Some(s.clone()),
            Body::Graph(g) if g.data.is_affine() => {
                if g.t == 1.0 {
                    return Some(g.data.source.clone());
                }
                let u = g.u();
                let src = &g.data.source;
                let beta = src.inverse() * u;
                let bb = beta.norm_squared();
                let a0 = (src.inverse() * src.center).dot(&beta) / bb;
                let b = -(src.inverse().transpose() * beta) / bb;
                let b = b - b.dot(&u) * u;
                let d = Mat3::identity() + (g.t - 1.0) * u * b.transpose();
                let s = src.apply_linear(&d).ok()?;
                s.translate(&((g.t - 1.0) * a0 * u)).ok()
            }
            _ => None,
        }
    }

    /// Steiner symmetral in direction `u`.
    pub fn steiner(&self, u: &Vec3, base_level: u32) -> Result<Body> {
        self.shadow(u, 0.0, base_level)
    }

    /// Member `K_t` of the linear reflection shadow system in direction `u`.
    pub fn shadow(&self, u: &Vec3, t: f64, base_level: u32) -> Result<Body> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(domain(format!("shadow parameter t = {t} outside [-1, 1]")));
        }
        match self {
            Body::Polytope(p) => Ok(polytope_shadow(p, u, t)?.into()),
            Body::Smooth(s) => Ok(GraphBody::new(GraphData::new(s.clone(), *u, base_level)?, t)?.into()),
            Body::Graph(g) => {
                if (g.u() - u.normalize()).norm() < 1e-14 {
                    // the system of K_s in its own direction has midpoint s·a
                    return Ok(GraphBody::new(g.data.clone(), t * g.t)?.into());
                }
                match self.as_smooth() {
                    Some(s) => Body::Smooth(s).shadow(u, t, base_level),
                    None => Err(Error::Unsupported(
                        "shadow of a non-quadric shadow body in a new direction".into(),
                    )),
                }
            }
        }
    }

    pub fn apply_linear(&self, a: &Mat3) -> Result<Body> {
        let det = a.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::Singular(det));
        }
        match self {
            Body::Polytope(p) => Ok(p.apply_linear(a)?.into()),
            Body::Smooth(s) => Ok(s.apply_linear(a)?.into()),
            Body::Graph(_) => match self.as_smooth() {
                Some(s) => Ok(s.apply_linear(a)?.into()),
                None => Err(Error::Unsupported("linear image of a non-quadric shadow body".into())),
            },
        }
    }

    pub fn scale(&self, s: f64) -> Result<Body> {
        self.apply_linear(&(Mat3::identity() * s))
    }

    pub fn is_origin_symmetric(&self, grid: &SphereQuadrature, tol: f64) -> bool {
        grid.nodes
            .iter()
            .all(|v| (self.support(v) - self.support(&-v)).abs() <= tol)
    }
}

/// Exact polytope `K_t` via the lifted vertices of the projected edge
/// arrangement.
pub fn polytope_shadow(p: &Polytope, u: &Vec3, t: f64) -> Result<Polytope> {
    let frame = Frame::new(p.dim, *u)?;
    let u = frame.u;
    let mut pts = Vec::new();
    for x in p.overlay_points(&frame) {
        let (f, _) = p.upper(&u, &x)?;
        let (g, _) = p.lower(&u, &x)?;
        let (a, h) = (0.5 * (f + g), 0.5 * (f - g));
        pts.push(x + (t * a + h) * u);
        pts.push(x + (t * a - h) * u);
    }
    hull(&pts, p.dim)
}

/// Graph functions `f ≥ g` of a body over its projection onto `u^⊥`.
#[derive(Debug, Clone)]
pub struct GraphFunctions {
    body: Body,
    pub frame: Frame,
}

impl GraphFunctions {
    pub fn u(&self) -> Vec3 {
        self.frame.u
    }

    /// Upper height over `x` (projected onto u^⊥ first) and its gradient.
    pub fn upper(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        let x = self.frame.project(x);
        let u = self.frame.u;
        match &self.body {
            Body::Polytope(p) => p.upper(&u, &x),
            Body::Smooth(s) => s.chord(&x, &u).map(|c| (c.upper, c.upper_grad)),
            Body::Graph(g) => self.graph_side(g, &x, true),
        }
    }

    pub fn lower(&self, x: &Vec3) -> Result<(f64, Vec3)> {
        let x = self.frame.project(x);
        let u = self.frame.u;
        match &self.body {
            Body::Polytope(p) => p.lower(&u, &x),
            Body::Smooth(s) => s.chord(&x, &u).map(|c| (c.lower, c.lower_grad)),
            Body::Graph(g) => self.graph_side(g, &x, false),
        }
    }

    fn graph_side(&self, g: &GraphBody, x: &Vec3, upper: bool) -> Result<(f64, Vec3)> {
        if (g.u() - self.frame.u).norm() < 1e-14 {
            return if upper { g.upper(x) } else { g.lower(x) };
        }
        match self.body.as_smooth() {
            Some(s) => {
                let c = s.chord(x, &self.frame.u)?;
                Ok(if upper {
                    (c.upper, c.upper_grad)
                } else {
                    (c.lower, c.lower_grad)
                })
            }
            None => Err(Error::Unsupported(
                "graph functions of a non-quadric shadow body in a new direction".into(),
            )),
        }
    }

    /// Chord midpoint `(f+g)/2` over `x`.
    pub fn midpoint(&self, x: &Vec3) -> Result<f64> {
        Ok(0.5 * (self.upper(x)?.0 + self.lower(x)?.0))
    }

    /// Base points of `u^⊥` inside the projection: for polytopes the lifted
    /// arrangement vertices plus interior points of a regular lattice, for
    /// smooth bodies a folded sphere grid.
    pub fn base_points(&self, level: u32) -> Result<Vec<Vec3>> {
        let dim = self.body.dim();
        match &self.body {
            Body::Polytope(p) => {
                let mut pts = p.overlay_points(&self.frame);
                let r = p
                    .vertices
                    .iter()
                    .map(|x| self.frame.project(x).norm())
                    .fold(0.0, f64::max);
                let m = 4usize << level;
                let span: Vec<f64> = (0..=m).map(|i| -r + 2.0 * r * i as f64 / m as f64).collect();
                let e = &self.frame.basis;
                if dim == 2 {
                    pts.extend(span.iter().map(|s| *s * e[0]));
                } else {
                    for a in &span {
                        for b in &span {
                            pts.push(*a * e[0] + *b * e[1]);
                        }
                    }
                }
                Ok(pts
                    .into_iter()
                    .filter(|x| self.upper(x).is_ok() && self.lower(x).is_ok())
                    .collect())
            }
            _ => {
                let src = self
                    .body
                    .as_smooth()
                    .ok_or_else(|| Error::Unsupported("base sampling of a non-quadric shadow body".into()))?;
                let data = GraphData::new(src, self.frame.u, level)?;
                Ok(data.samples.iter().map(|s| s.x).collect())
            }
        }
    }
}

/// `max |h_K − h_L|` over the grid.
pub fn sup_distance(k: &Body, l: &Body, grid: &SphereQuadrature) -> f64 {
    grid.nodes
        .par_iter()
        .map(|v| (k.support(v) - l.support(v)).abs())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}
