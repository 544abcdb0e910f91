use crate::error::{domain, Result};
use crate::geom::Vec3;

/// One atom or boundary quadrature node of a surface area measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureNode {
    /// A boundary point with this normal (facet foot point for atoms).
    pub point: Vec3,
    pub normal: Vec3,
    pub mass: f64,
    /// Support value `⟨x, ν⟩`.
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMeasure {
    /// Facet atoms of a polytope rather than boundary quadrature.
    pub atomic: bool,
    pub nodes: Vec<MeasureNode>,
}

impl SurfaceMeasure {
    pub fn total_mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.mass).sum()
    }

    pub fn first_moment(&self) -> Vec3 {
        self.nodes.iter().map(|n| n.mass * n.normal).sum()
    }

    /// `∫ φ(θ) h(θ)^{1−p} dS(θ)`.
    pub fn sp_integral(&self, phi: impl Fn(&Vec3) -> f64, p: f64) -> Result<f64> {
        let mut acc = 0.0;
        for n in &self.nodes {
            if !(n.support > 1e-14) {
                return Err(domain(format!(
                    "nonpositive support value {} on the boundary",
                    n.support
                )));
            }
            let w = if p == 2.0 {
                1.0 / n.support
            } else {
                n.support.powf(1.0 - p)
            };
            acc += phi(&n.normal) * w * n.mass;
        }
        Ok(acc)
    }

    /// Plain pairing `∫ φ dS`.
    pub fn integrate(&self, phi: impl Fn(&Vec3) -> f64) -> f64 {
        self.nodes.iter().map(|n| phi(&n.normal) * n.mass).sum()
    }
}
