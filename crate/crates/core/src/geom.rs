//! Small vector helpers shared by every module.
//!
//! Planar bodies live in the `z = 0` plane of a three-vector so that one set
//! of routines serves both dimensions; the ambient dimension is carried
//! separately wherever it matters (volume exponents, constants).

use nalgebra::{Matrix3, Vector3};

use crate::error::{domain, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(domain(format!("dimension {n} not supported (2 or 3 only)")))
    }
}

/// Normalizes `v`, failing on (near) zero vectors.
pub fn unit(v: Vec3) -> Result<Vec3> {
    let r = v.norm();
    if !(r > 1e-300) || !r.is_finite() {
        return Err(domain("cannot normalize a zero vector"));
    }
    Ok(v / r)
}

/// Reflection about the hyperplane `u^⊥`.
pub fn reflect(v: &Vec3, u: &Vec3) -> Vec3 {
    v - 2.0 * v.dot(u) * u
}

/// Orthonormal frame adapted to a direction `u`: `basis` spans `u^⊥` and,
/// in three dimensions, `{basis[0], basis[1], u}` is right-handed.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub dim: usize,
    pub u: Vec3,
    pub basis: Vec<Vec3>,
}

impl Frame {
    pub fn new(dim: usize, u: Vec3) -> Result<Self> {
        check_dim(dim)?;
        let mut u = unit(u)?;
        if dim == 2 {
            if u.z.abs() > 1e-12 {
                return Err(domain("planar direction must have zero third component"));
            }
            u.z = 0.0;
            let e1 = Vec3::new(-u.y, u.x, 0.0);
            return Ok(Frame {
                dim,
                u,
                basis: vec![e1],
            });
        }
        // axis least aligned with u
        let a = u.abs();
        let seed = if a.x <= a.y && a.x <= a.z {
            Vec3::x()
        } else if a.y <= a.z {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let e1 = unit(seed - seed.dot(&u) * u)?;
        let e2 = u.cross(&e1);
        Ok(Frame {
            dim,
            u,
            basis: vec![e1, e2],
        })
    }

    /// Orthogonal projection onto `u^⊥`.
    pub fn project(&self, x: &Vec3) -> Vec3 {
        x - x.dot(&self.u) * self.u
    }

    /// Coordinates of a point of `u^⊥` in the frame basis.
    pub fn coords(&self, x: &Vec3) -> Vec<f64> {
        self.basis.iter().map(|e| e.dot(x)).collect()
    }
}

/// Rotation taking `e_z` to `u` (any such rotation; used to align grids).
pub fn rotation_to(u: &Vec3) -> Result<Mat3> {
    let f = Frame::new(3, *u)?;
    Ok(Mat3::from_columns(&[f.basis[0], f.basis[1], f.u]))
}
