//! Linear reflection shadow systems `K_t = {x + (t−1)a(x')u}`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bodies::{polytope_shadow, Body, GraphBody, GraphData, GraphFunctions, SmoothBody};
use crate::error::{Error, Result};
use crate::geom::{Frame, Vec3};
use crate::lp_ops::PiProjection;
use crate::numgrid::SphereQuadrature;

#[derive(Debug, Clone)]
enum Family {
    Polytope(crate::bodies::Polytope),
    Graph(Arc<GraphData>),
}

#[derive(Debug, Clone)]
pub struct ShadowSystem {
    pub body: Body,
    pub frame: Frame,
    family: Family,
}

impl ShadowSystem {
    /// `base_level` sets the base grid used for smooth bodies.
    pub fn new(body: &Body, u: &Vec3, base_level: u32) -> Result<Self> {
        let frame = Frame::new(body.dim(), *u)?;
        let (body, family) = match body {
            Body::Polytope(p) => (body.clone(), Family::Polytope(p.clone())),
            Body::Smooth(s) => (
                body.clone(),
                Family::Graph(GraphData::new(s.clone(), frame.u, base_level)?),
            ),
            Body::Graph(g) => match body.as_smooth() {
                Some(s) => (
                    Body::Smooth(s.clone()),
                    Family::Graph(GraphData::new(s, frame.u, base_level)?),
                ),
                None if g.t == 1.0 && (g.u() - frame.u).norm() < 1e-14 => {
                    (Body::Smooth(g.data.source.clone()), Family::Graph(g.data.clone()))
                }
                None => return Err(Error::Unsupported("shadow system of a non-quadric shadow body".into())),
            },
        };
        Ok(ShadowSystem { body, frame, family })
    }

    pub fn u(&self) -> Vec3 {
        self.frame.u
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn graph(&self) -> Result<GraphFunctions> {
        self.body.graph_functions(&self.frame.u)
    }

    pub fn smooth(&self) -> Option<&SmoothBody> {
        match &self.body {
            Body::Smooth(s) => Some(s),
            _ => None,
        }
    }

    /// The member `K_t`, `t ∈ [−1, 1]`.
    pub fn body_at(&self, t: f64) -> Result<Body> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(crate::error::domain(format!(
                "shadow parameter t = {t} outside [-1, 1]"
            )));
        }
        match &self.family {
            Family::Polytope(p) => Ok(polytope_shadow(p, &self.frame.u, t)?.into()),
            Family::Graph(d) => Ok(GraphBody::new(d.clone(), t)?.into()),
        }
    }

    /// Midpoint height `a(x')` of the chord over the projection of `x`; for
    /// rim points the chord degenerates to `x` itself.
    fn midpoint(&self, x: &Vec3) -> f64 {
        let u = self.frame.u;
        let xp = self.frame.project(x);
        match &self.body {
            Body::Smooth(s) => match s.chord(&xp, &u) {
                Ok(c) => 0.5 * (c.lower + c.upper),
                Err(_) => x.dot(&u),
            },
            Body::Polytope(p) => match (p.upper(&u, &xp), p.lower(&u, &xp)) {
                (Ok((f, _)), Ok((g, _))) => 0.5 * (f + g),
                _ => x.dot(&u),
            },
            Body::Graph(_) => unreachable!("graph sources are converted on construction"),
        }
    }

    /// Speed `φ(θ) = a(x_K(θ))⟨u, θ⟩` of the support perturbation.
    pub fn perturbation_phi(&self, theta: &Vec3) -> Result<f64> {
        let s = self
            .smooth()
            .ok_or_else(|| Error::Unsupported("perturbation speed needs a smooth body".into()))?;
        let x = s.support_point(theta);
        Ok(self.midpoint(&x) * theta.dot(&self.frame.u))
    }

    /// Difference quotients `(h_{K_t} − h_K)/(t−1)` against `φ`.
    pub fn check_admissible(&self, ts: &[f64], grid: &SphereQuadrature) -> Result<PerturbationTrace> {
        let phi: Vec<f64> = grid
            .nodes
            .iter()
            .map(|v| self.perturbation_phi(v))
            .collect::<Result<_>>()?;
        let h: Vec<f64> = grid.nodes.par_iter().map(|v| self.body.support(v)).collect();
        let mut quotients = Vec::with_capacity(ts.len());
        let mut sup_deviation = Vec::with_capacity(ts.len());
        for &t in ts {
            if !(t < 1.0) {
                return Err(crate::error::domain("difference quotients need t < 1"));
            }
            let kt = self.body_at(t)?;
            let q: Vec<f64> = grid
                .nodes
                .par_iter()
                .zip(h.par_iter())
                .map(|(v, hv)| (kt.support(v) - hv) / (t - 1.0))
                .collect();
            sup_deviation.push(q.iter().zip(&phi).map(|(q, f)| (q - f).abs()).fold(0.0, f64::max));
            quotients.push(q);
        }
        Ok(PerturbationTrace {
            ts: ts.to_vec(),
            quotients,
            phi,
            sup_deviation,
        })
    }

    /// `∫ φ dS(K, ·)`, using the boundary points of the measure as support
    /// points.
    pub fn phi_surface_integral(&self, level: u32) -> Result<f64> {
        if self.smooth().is_none() {
            return Err(Error::Unsupported("perturbation speed needs a smooth body".into()));
        }
        let m = self.body.surface_measure(level)?;
        let u = self.frame.u;
        Ok(m.nodes
            .par_iter()
            .map(|n| self.midpoint(&n.point) * n.normal.dot(&u) * n.mass)
            .collect::<Vec<_>>()
            .iter()
            .sum())
    }

    /// `vol(Π_p* K_t)`.
    pub fn polar_pi_volume_at(&self, t: f64, p: f64, grid: &SphereQuadrature) -> Result<f64> {
        Ok(PiProjection::new(&self.body_at(t)?, p, grid.level)?.polar_volume(grid))
    }

    /// Richardson-extrapolated left derivative of `t ↦ vol(Π_p* K_t)` at 1.
    pub fn first_variation_polar_pi(&self, p: f64, steps: &[f64], grid: &SphereQuadrature) -> Result<f64> {
        let v1 = self.polar_pi_volume_at(1.0, p, grid)?;
        let q: Vec<f64> = steps
            .iter()
            .map(|h| Ok((v1 - self.polar_pi_volume_at(1.0 - h, p, grid)?) / h))
            .collect::<Result<_>>()?;
        Ok(richardson(steps, &q))
    }

    /// `max_t |vol(K_t) − vol(K)| / vol(K)` with fiber (Fubini) volumes.
    pub fn volume_invariance(&self, ts: &[f64]) -> Result<f64> {
        let v1 = self.body_at(1.0)?.volume_exact();
        let mut worst = 0.0f64;
        for &t in ts {
            worst = worst.max((self.body_at(t)?.volume_exact() - v1).abs() / v1);
        }
        Ok(worst)
    }
}

/// Neville-style extrapolation to step 0 of values `q` at decreasing steps.
pub fn richardson(steps: &[f64], q: &[f64]) -> f64 {
    let mut t = q.to_vec();
    for k in 1..t.len() {
        for i in (k..t.len()).rev() {
            let (hi, hk) = (steps[i], steps[i - k]);
            t[i] = (hk * t[i] - hi * t[i - 1]) / (hk - hi);
        }
    }
    *t.last().unwrap_or(&f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrace {
    pub ts: Vec<f64>,
    /// One row of difference quotients per `t`, one column per grid node.
    pub quotients: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub sup_deviation: Vec<f64>,
}

impl PerturbationTrace {
    pub fn strictly_decreasing(&self) -> bool {
        self.sup_deviation.windows(2).all(|w| w[1] < w[0])
    }
}
