//! JSON body specifications.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Body, GraphBody, GraphData, Polytope, SmoothBody};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    LqBall {
        q: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Member `K_t` of the shadow system of `body` in direction `u`.
    Shadow {
        body: Box<BodySpec>,
        u: Vec<f64>,
        t: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::Spec {
        field: field.into(),
        msg: msg.into(),
    }
}

fn vector(field: &str, v: &[f64], dim: usize) -> Result<Vec3> {
    if v.len() != dim {
        return Err(bad(field, format!("expected {dim} components, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(bad(field, "non-finite entry"));
    }
    let mut out = Vec3::zeros();
    out.as_mut_slice()[..dim].copy_from_slice(v);
    Ok(out)
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<(usize, Mat3)> {
    let dim = rows.len();
    if !(dim == 2 || dim == 3) {
        return Err(bad(field, format!("expected a 2x2 or 3x3 matrix, got {dim} rows")));
    }
    let mut m = Mat3::identity();
    for (i, r) in rows.iter().enumerate() {
        let r = vector(field, r, dim)?;
        for j in 0..dim {
            m[(i, j)] = r[j];
        }
    }
    Ok((dim, m))
}

impl BodySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<body spec>".into(),
            err: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            err: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            err: e,
        })
    }

    /// Realizes the body; `base_level` sets the base grid of shadow bodies.
    pub fn build(&self, base_level: u32) -> Result<Body> {
        match self {
            BodySpec::Polytope { vertices } => {
                let dim = vertices.first().map_or(0, Vec::len);
                if !(dim == 2 || dim == 3) {
                    return Err(bad("vertices", "points must have 2 or 3 coordinates"));
                }
                let pts = vertices
                    .iter()
                    .map(|v| vector("vertices", v, dim))
                    .collect::<Result<Vec<_>>>()?;
                let p = Polytope::from_points(&pts, dim).map_err(|e| bad("vertices", e.to_string()))?;
                if !p.origin_interior() {
                    return Err(bad("vertices", "origin must lie in the interior"));
                }
                Ok(p.into())
            }
            BodySpec::Ellipsoid { matrix: m, center } => {
                let (dim, a) = matrix("matrix", m)?;
                let c = center
                    .as_deref()
                    .map(|c| vector("center", c, dim))
                    .transpose()?
                    .unwrap_or_default();
                let s = SmoothBody::new(dim, 2.0, a, c).map_err(|e| bad("matrix", e.to_string()))?;
                if !s.origin_interior() {
                    return Err(bad("center", "origin must lie in the interior"));
                }
                Ok(s.into())
            }
            BodySpec::LqBall {
                q,
                scale,
                dim,
                matrix: m,
                center,
            } => {
                if !(*q > 1.0) || !q.is_finite() {
                    return Err(bad("q", "must be a finite number above 1"));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(bad("scale", "must be positive"));
                }
                let (dim, a) = match (m, dim) {
                    (Some(m), d) => {
                        let (md, a) = matrix("matrix", m)?;
                        if d.is_some_and(|d| d != md) {
                            return Err(bad("dim", "disagrees with matrix size"));
                        }
                        (md, a)
                    }
                    (None, Some(d)) if *d == 2 || *d == 3 => (*d, Mat3::identity()),
                    (None, Some(_)) => return Err(bad("dim", "must be 2 or 3")),
                    (None, None) => (3, Mat3::identity()),
                };
                let c = center
                    .as_deref()
                    .map(|c| vector("center", c, dim))
                    .transpose()?
                    .unwrap_or_default();
                let s = SmoothBody::new(dim, *q, a * *scale, c).map_err(|e| bad("matrix", e.to_string()))?;
                if !s.origin_interior() {
                    return Err(bad("center", "origin must lie in the interior"));
                }
                Ok(s.into())
            }
            BodySpec::Shadow { body, u, t } => {
                let inner = body.build(base_level)?;
                let u = vector("u", u, inner.dim())?;
                if !(-1.0..=1.0).contains(t) {
                    return Err(bad("t", "must lie in [-1, 1]"));
                }
                match inner {
                    Body::Smooth(s) => Ok(GraphBody::new(GraphData::new(s, u, base_level)?, *t)?.into()),
                    other => other.shadow(&u, *t, base_level),
                }
            }
        }
    }

    /// Spec of a body where one can be written down.
    pub fn describe(body: &Body) -> Option<BodySpec> {
        let dim = body.dim();
        let rows = |m: &Mat3| (0..dim).map(|i| (0..dim).map(|j| m[(i, j)]).collect()).collect();
        let vec = |v: &Vec3| v.as_slice()[..dim].to_vec();
        match body {
            Body::Polytope(p) => Some(BodySpec::Polytope {
                vertices: p.vertices.iter().map(vec).collect(),
            }),
            _ => {
                let s = body.as_smooth()?;
                let center = (s.center.norm() > 0.0).then(|| vec(&s.center));
                if s.is_quadric() {
                    Some(BodySpec::Ellipsoid {
                        matrix: rows(&s.map),
                        center,
                    })
                } else {
                    Some(BodySpec::LqBall {
                        q: s.q,
                        scale: 1.0,
                        dim: Some(dim),
                        matrix: Some(rows(&s.map)),
                        center,
                    })
                }
            }
        }
    }
}
