use super::hull::hull;
use crate::error::{domain, Result};
use crate::geom::{Frame, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec3,
    /// (n−1)-dimensional measure.
    pub area: f64,
    /// Support value in direction `normal`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    pub facets: Vec<Facet>,
    /// Pairs of vertex indices; facets in the plane are their own edges.
    pub edges: Vec<(usize, usize)>,
}

impl Polytope {
    pub(crate) fn from_parts(dim: usize, vertices: Vec<Vec3>, facets: Vec<Facet>, edges: Vec<(usize, usize)>) -> Self {
        Polytope {
            dim,
            vertices,
            facets,
            edges,
        }
    }

    pub fn from_points(points: &[Vec3], dim: usize) -> Result<Self> {
        hull(points, dim)
    }

    /// Axis-parallel box [−a₁,a₁]×…
    pub fn cuboid(half: &[f64]) -> Result<Self> {
        let dim = half.len();
        let mut pts = Vec::new();
        for mask in 0..(1 << dim) {
            let mut p = Vec3::zeros();
            for (i, h) in half.iter().enumerate() {
                p[i] = if mask & (1 << i) != 0 { *h } else { -*h };
            }
            pts.push(p);
        }
        hull(&pts, dim)
    }

    pub fn support(&self, v: &Vec3) -> f64 {
        self.vertices.iter().map(|x| x.dot(v)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn origin_interior(&self) -> bool {
        self.facets.iter().all(|f| f.offset > 0.0)
    }

    pub fn radial(&self, v: &Vec3) -> Result<f64> {
        if !self.origin_interior() {
            return Err(domain("origin is not interior to the polytope"));
        }
        Ok(self
            .facets
            .iter()
            .filter_map(|f| {
                let c = f.normal.dot(v);
                (c > 0.0).then(|| f.offset / c)
            })
            .fold(f64::INFINITY, f64::min))
    }

    pub fn exact_volume(&self) -> f64 {
        self.facets.iter().map(|f| f.offset * f.area).sum::<f64>() / self.dim as f64
    }

    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }

    pub fn apply_linear(&self, a: &Mat3) -> Result<Self> {
        let pts: Vec<Vec3> = self.vertices.iter().map(|x| a * x).collect();
        hull(&pts, self.dim)
    }

    pub fn translate(&self, c: &Vec3) -> Result<Self> {
        let pts: Vec<Vec3> = self.vertices.iter().map(|x| x + c).collect();
        hull(&pts, self.dim)
    }

    /// Upper graph height over `x` (a point of u^⊥) and the gradient of the
    /// attaining facet; ties go to the lowest facet index.
    pub fn upper(&self, u: &Vec3, x: &Vec3) -> Result<(f64, Vec3)> {
        self.graph_side(u, x)
    }

    pub fn lower(&self, u: &Vec3, x: &Vec3) -> Result<(f64, Vec3)> {
        let (s, grad) = self.graph_side(&-u, x)?;
        Ok((-s, -grad))
    }

    fn graph_side(&self, u: &Vec3, x: &Vec3) -> Result<(f64, Vec3)> {
        let mut best: Option<(f64, Vec3)> = None;
        let mut floor = f64::NEG_INFINITY;
        for f in &self.facets {
            let c = f.normal.dot(u);
            let slack = f.offset - f.normal.dot(x);
            if c > 1e-12 {
                let s = slack / c;
                if best.is_none_or(|(b, _)| s < b) {
                    let tangential = f.normal - c * u;
                    best = Some((s, -tangential / c));
                }
            } else if c < -1e-12 {
                floor = floor.max(slack / c);
            } else if slack < -1e-12 * (1.0 + f.offset.abs()) {
                return Err(domain("point lies outside the projected base"));
            }
        }
        let (s, grad) = best.ok_or_else(|| domain("no facet faces the direction"))?;
        if s < floor - 1e-12 * (1.0 + s.abs()) {
            return Err(domain("point lies outside the projected base"));
        }
        Ok((s, grad))
    }

    /// Vertices of the projection onto u^⊥, in frame coordinates.
    pub fn projected_vertices(&self, frame: &Frame) -> Vec<Vec3> {
        self.vertices.iter().map(|x| frame.project(x)).collect()
    }

    /// Candidate base points where the graph functions can kink: projected
    /// vertices plus pairwise crossings of projected edges.
    pub(crate) fn overlay_points(&self, frame: &Frame) -> Vec<Vec3> {
        let mut pts = self.projected_vertices(frame);
        if self.dim == 3 {
            let segs: Vec<(Vec3, Vec3)> = self
                .edges
                .iter()
                .map(|&(a, b)| (planar(frame, &self.vertices[a]), planar(frame, &self.vertices[b])))
                .collect();
            for i in 0..segs.len() {
                for j in i + 1..segs.len() {
                    if let Some((s, _)) = crossing(&segs[i], &segs[j]) {
                        let (p, q) = (self.vertices[self.edges[i].0], self.vertices[self.edges[i].1]);
                        pts.push(frame.project(&(p + s * (q - p))));
                    }
                }
            }
        }
        pts
    }
}

fn planar(frame: &Frame, x: &Vec3) -> Vec3 {
    let c = frame.coords(x);
    Vec3::new(c[0], c[1], 0.0)
}

/// Proper crossing of two planar segments given by their first two coordinates.
fn crossing(a: &(Vec3, Vec3), b: &(Vec3, Vec3)) -> Option<(f64, f64)> {
    let r = a.1 - a.0;
    let s = b.1 - b.0;
    let den = r.x * s.y - r.y * s.x;
    let scale = r.norm() * s.norm();
    if den.abs() <= 1e-12 * scale {
        return None;
    }
    let d = b.0 - a.0;
    let ta = (d.x * s.y - d.y * s.x) / den;
    let tb = (d.x * r.y - d.y * r.x) / den;
    let eps = 1e-12;
    (ta > eps && ta < 1.0 - eps && tb > eps && tb < 1.0 - eps).then_some((ta, tb))
}
