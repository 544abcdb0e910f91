//! L_p projection and centroid bodies.

use rayon::prelude::*;

use crate::bodies::Body;
use crate::error::{domain, Result};
use crate::geom::{Mat3, Vec3};
use crate::numgrid::{abs_pow, lyz_constant, unit_ball_volume, SphereQuadrature};

pub fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= 10.0 {
        Ok(())
    } else {
        Err(domain(format!("p = {p} outside (1, 10]")))
    }
}

/// `Π_pK` through its L_p surface measure, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PiProjection {
    pub p: f64,
    normals: Vec<Vec3>,
    weights: Vec<f64>,
    norm: f64,
}

impl PiProjection {
    /// `level` sets the boundary quadrature of smooth bodies.
    pub fn new(k: &Body, p: f64, level: u32) -> Result<Self> {
        check_p(p)?;
        let n = k.dim();
        let m = k.surface_measure(level)?;
        let mut normals = Vec::with_capacity(m.nodes.len());
        let mut weights = Vec::with_capacity(m.nodes.len());
        for node in &m.nodes {
            if !(node.support > 1e-14) {
                return Err(domain(format!(
                    "nonpositive support value {} on the boundary",
                    node.support
                )));
            }
            normals.push(node.normal);
            weights.push(node.mass * node.support.powf(1.0 - p));
        }
        let norm = n as f64 * unit_ball_volume(n as f64)? * lyz_constant(n - 2, p)?;
        Ok(PiProjection {
            p,
            normals,
            weights,
            norm,
        })
    }

    /// Normals and L_p weights `mass·h^{1−p}` of the surface measure.
    pub fn atoms(&self) -> (&[Vec3], &[f64]) {
        (&self.normals, &self.weights)
    }

    /// `h_{Π_pK}(v)`, positively 1-homogeneous in `v`.
    pub fn support(&self, v: &Vec3) -> f64 {
        let s: f64 = self
            .normals
            .iter()
            .zip(&self.weights)
            .map(|(nu, w)| w * abs_pow(nu.dot(v), self.p))
            .sum();
        (s / self.norm).powf(1.0 / self.p)
    }

    pub fn support_on(&self, grid: &SphereQuadrature) -> Vec<f64> {
        grid.nodes.par_iter().map(|v| self.support(v)).collect()
    }

    /// `vol(Π_p*K) = (1/n) ∫ h_{Π_pK}^{−n}`.
    pub fn polar_volume(&self, grid: &SphereQuadrature) -> f64 {
        let n = grid.dim as i32;
        let h = self.support_on(grid);
        h.iter().zip(&grid.weights).map(|(h, w)| w * h.powi(-n)).sum::<f64>() / n as f64
    }
}

pub fn pi_support(k: &Body, p: f64, v: &Vec3, level: u32) -> Result<f64> {
    Ok(PiProjection::new(k, p, level)?.support(v))
}

/// Volume of `Π_p*K`; the grid level also sets the boundary quadrature.
pub fn polar_pi_volume(k: &Body, p: f64, grid: &SphereQuadrature) -> Result<f64> {
    Ok(PiProjection::new(k, p, grid.level)?.polar_volume(grid))
}

/// `Γ_p` of a star body given by radial values on a grid, in polar
/// coordinates.
#[derive(Debug, Clone)]
pub struct GammaCentroid {
    pub p: f64,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    norm: f64,
}

impl GammaCentroid {
    pub fn new(grid: &SphereQuadrature, rho: &[f64], p: f64) -> Result<Self> {
        check_p(p)?;
        if rho.len() != grid.len() {
            return Err(domain("radial values do not match the grid"));
        }
        if let Some(r) = rho.iter().find(|r| !(**r > 0.0)) {
            return Err(domain(format!("nonpositive radial value {r}")));
        }
        let n = grid.dim;
        let vol = rho
            .iter()
            .zip(&grid.weights)
            .map(|(r, w)| w * r.powi(n as i32))
            .sum::<f64>()
            / n as f64;
        let weights = rho
            .iter()
            .zip(&grid.weights)
            .map(|(r, w)| w * r.powf(n as f64 + p))
            .collect();
        let norm = (n as f64 + p) * lyz_constant(n, p)? * vol;
        Ok(GammaCentroid {
            p,
            nodes: grid.nodes.clone(),
            weights,
            norm,
        })
    }

    pub fn of_body(k: &Body, grid: &SphereQuadrature, p: f64) -> Result<Self> {
        let rho: Vec<f64> = grid.nodes.par_iter().map(|v| k.radial(v)).collect::<Result<_>>()?;
        Self::new(grid, &rho, p)
    }

    pub fn support(&self, v: &Vec3) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(th, w)| w * abs_pow(th.dot(v), self.p))
            .sum();
        (s / self.norm).powf(1.0 / self.p)
    }
}

pub fn gamma_support(grid: &SphereQuadrature, rho: &[f64], p: f64, v: &Vec3) -> Result<f64> {
    Ok(GammaCentroid::new(grid, rho, p)?.support(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Pi,
    Gamma,
    GammaPolarPi,
    Body,
}

/// Support values of some body sampled on a grid.
#[derive(Debug, Clone)]
pub struct SampledSupport {
    pub grid: SphereQuadrature,
    pub values: Vec<f64>,
    pub source: Operator,
}

impl SampledSupport {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Worst relative subadditivity defect `h(vᵢ+vⱼ) − h(vᵢ) − h(vⱼ)` over
    /// node pairs whose normalized sum is (nearly) a node.
    pub fn subadditivity_defect(&self, pairs: usize) -> f64 {
        let g = &self.grid;
        let m = g.len();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..pairs.min(m * m) {
            let i = (k * 7919) % m;
            let j = (k * 104729 + 13) % m;
            let s = g.nodes[i] + g.nodes[j];
            let r = s.norm();
            if r < 1e-3 {
                continue;
            }
            let l = g.nearest(&(s / r));
            if (g.nodes[l] - s / r).norm() > 1e-12 {
                continue;
            }
            worst = worst.max(r * self.values[l] - self.values[i] - self.values[j]);
        }
        worst
    }
}

/// `h_{Γ_pΠ_p*K}` on the grid.
pub fn gamma_polar_pi(k: &Body, p: f64, grid: &SphereQuadrature) -> Result<SampledSupport> {
    let pi = PiProjection::new(k, p, grid.level)?;
    let rho: Vec<f64> = pi.support_on(grid).iter().map(|h| 1.0 / h).collect();
    let gamma = GammaCentroid::new(grid, &rho, p)?;
    let values = grid.nodes.par_iter().map(|v| gamma.support(v)).collect();
    Ok(SampledSupport {
        grid: grid.clone(),
        values,
        source: Operator::GammaPolarPi,
    })
}

/// Minimax dilation factor and relative spread of `h_{Γ_pΠ_p*K}/h_K`.
pub fn fixed_point_residual(k: &Body, p: f64, grid: &SphereQuadrature) -> Result<(f64, f64)> {
    let s = gamma_polar_pi(k, p, grid)?;
    Ok(ratio_spread(
        &s.values,
        &grid.nodes.iter().map(|v| k.support(v)).collect::<Vec<_>>(),
    ))
}

/// `(c*, residual)` for ratios `a_i / b_i`.
pub fn ratio_spread(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (lo, hi) = a
        .iter()
        .zip(b)
        .map(|(a, b)| a / b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let c = 0.5 * (lo + hi);
    (c, (hi - lo) / (2.0 * c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceReport {
    /// `max |h_{Π_p(AK)}(v) − h_{Π_pK}(A^{−1}v)|` relative to `h_{Π_p(AK)}`.
    pub pi_deviation: f64,
    /// `max |h_{Γ_p(AK)}(v) − h_{Γ_pK}(Aᵀv)|` relative to `h_{Γ_p(AK)}`.
    pub gamma_deviation: f64,
}

/// Checks `Π_p(AK) = A^{−T}Π_pK` and `Γ_p(AK) = AΓ_pK` for `det A = 1`.
pub fn check_covariance(k: &Body, a: &Mat3, p: f64, grid: &SphereQuadrature) -> Result<CovarianceReport> {
    let n = k.dim();
    let mut a = *a;
    if n == 2 {
        a[(2, 2)] = 1.0;
    }
    let det = a.determinant();
    if (det - 1.0).abs() > 1e-10 {
        return Err(domain(format!("covariance needs det A = 1, got {det}")));
    }
    let inv = a.try_inverse().ok_or(crate::Error::Singular(det))?;
    let ak = k.apply_linear(&a)?;

    let pi_k = PiProjection::new(k, p, grid.level)?;
    let pi_ak = PiProjection::new(&ak, p, grid.level)?;
    let gam_k = GammaCentroid::of_body(k, grid, p)?;
    let gam_ak = GammaCentroid::of_body(&ak, grid, p)?;
    let devs: Vec<(f64, f64)> = grid
        .nodes
        .par_iter()
        .map(|v| {
            let lhs = pi_ak.support(v);
            let pd = (lhs - pi_k.support(&(inv * v))).abs() / lhs;
            let lhs = gam_ak.support(v);
            let gd = (lhs - gam_k.support(&(a.transpose() * v))).abs() / lhs;
            (pd, gd)
        })
        .collect();
    let (pi_deviation, gamma_deviation) = devs
        .iter()
        .fold((0.0f64, 0.0f64), |(x, y), (p, g)| (x.max(*p), y.max(*g)));
    Ok(CovarianceReport {
        pi_deviation,
        gamma_deviation,
    })
}
