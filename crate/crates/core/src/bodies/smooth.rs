//! Smooth bodies of the form `A·B_q + c`: ellipsoids (q = 2) and linear
//! images of ℓ_q balls.

use crate::error::{domain, Error, Result};
use crate::geom::{check_dim, Mat3, Vec3};
use crate::numgrid::{abs_pow, gamma};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBody {
    pub dim: usize,
    pub q: f64,
    pub map: Mat3,
    pub center: Vec3,
    inv: Mat3,
    det: f64,
}

fn lq_norm(y: &Vec3, q: f64, dim: usize) -> f64 {
    if q == 2.0 {
        return y.norm();
    }
    (0..dim).map(|i| abs_pow(y[i], q)).sum::<f64>().powf(1.0 / q)
}

impl SmoothBody {
    /// `map` acts on the first `dim` coordinates; in the plane its third
    /// row and column are replaced by the identity.
    pub fn new(dim: usize, q: f64, map: Mat3, center: Vec3) -> Result<Self> {
        check_dim(dim)?;
        if !(q > 1.0) || !q.is_finite() {
            return Err(domain(format!("exponent q = {q} must exceed 1")));
        }
        let mut map = map;
        let mut center = center;
        if dim == 2 {
            for i in 0..3 {
                map[(2, i)] = 0.0;
                map[(i, 2)] = 0.0;
            }
            map[(2, 2)] = 1.0;
            center.z = 0.0;
        }
        let det = map.determinant();
        let scale = map.norm().powi(dim as i32).max(f64::MIN_POSITIVE);
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::Singular(det));
        }
        let inv = map.try_inverse().ok_or(Error::Singular(det))?;
        Ok(SmoothBody {
            dim,
            q,
            map,
            center,
            inv,
            det,
        })
    }

    pub fn ball(dim: usize, r: f64) -> Result<Self> {
        Self::new(dim, 2.0, Mat3::identity() * r, Vec3::zeros())
    }

    pub fn ellipsoid(dim: usize, map: Mat3) -> Result<Self> {
        Self::new(dim, 2.0, map, Vec3::zeros())
    }

    pub fn is_quadric(&self) -> bool {
        self.q == 2.0
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inv
    }

    fn dual(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn gauge(&self, x: &Vec3) -> f64 {
        lq_norm(&(self.inv * (x - self.center)), self.q, self.dim)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.gauge(x) <= 1.0
    }

    pub fn support(&self, v: &Vec3) -> f64 {
        lq_norm(&(self.map.transpose() * v), self.dual(), self.dim) + self.center.dot(v)
    }

    /// The (unique) boundary point with outer normal direction `v`.
    pub fn support_point(&self, v: &Vec3) -> Vec3 {
        let w = self.map.transpose() * v;
        let qs = self.dual();
        let nrm = lq_norm(&w, qs, self.dim);
        let mut y = Vec3::zeros();
        for i in 0..self.dim {
            y[i] = w[i].signum() * (w[i].abs() / nrm).powf(qs - 1.0);
        }
        self.map * y + self.center
    }

    pub fn radial(&self, v: &Vec3) -> Result<f64> {
        if self.center.norm() == 0.0 {
            return Ok(1.0 / lq_norm(&(self.inv * v), self.q, self.dim));
        }
        if self.gauge(&Vec3::zeros()) >= 1.0 {
            return Err(domain("origin is not interior to the body"));
        }
        let mut hi = 1.0;
        while self.gauge(&(hi * v)) < 1.0 {
            hi *= 2.0;
        }
        crate::numgrid::bisect(|r| self.gauge(&(r * v)) - 1.0, 0.0, hi, 1e-15 * hi)
    }

    pub fn origin_interior(&self) -> bool {
        self.gauge(&Vec3::zeros()) < 1.0
    }

    /// |det A|·vol(B_q^n).
    pub fn volume(&self) -> f64 {
        let n = self.dim as f64;
        self.det.abs() * (2.0 * gamma(1.0 + 1.0 / self.q)).powf(n) / gamma(1.0 + n / self.q)
    }

    /// Boundary point along the ray of `w` in the parameter ball, together
    /// with the outer unit normal and the local surface element relative to
    /// the sphere measure at `w`.
    pub fn boundary_sample(&self, w: &Vec3) -> (Vec3, Vec3, f64) {
        let n = self.dim;
        let r = 1.0 / lq_norm(w, self.q, n);
        let y = r * w;
        let mut nb = Vec3::zeros();
        for i in 0..n {
            nb[i] = y[i].signum() * y[i].abs().powf(self.q - 1.0);
        }
        let nb = nb.normalize();
        let dh_ball = r.powi(n as i32 - 1) / w.dot(&nb);
        let m = self.inv.transpose() * nb;
        let mn = m.norm();
        let x = self.map * y + self.center;
        (x, m / mn, self.det.abs() * mn * dh_ball)
    }

    fn outer_radius(&self) -> f64 {
        self.center.norm() + 3f64.sqrt() * self.map.norm() + 1.0
    }

    /// Chord of the body along `x + s·u` for `x` in u^⊥: returns lower and
    /// upper heights with their gradients (in u^⊥).
    pub fn chord(&self, x: &Vec3, u: &Vec3) -> Result<Chord> {
        let alpha = self.inv * (x - self.center);
        let beta = self.inv * u;
        let (lo, hi) = if self.q == 2.0 {
            let a = beta.norm_squared();
            let b = alpha.dot(&beta);
            let c = alpha.norm_squared() - 1.0;
            let disc = b * b - a * c;
            if disc < 0.0 {
                return Err(domain("point lies outside the projected base"));
            }
            let sq = disc.sqrt();
            let k = -(b + b.signum() * sq);
            if k == 0.0 {
                (-(-c / a).sqrt(), (-c / a).sqrt())
            } else {
                let (r1, r2) = (k / a, c / k);
                (r1.min(r2), r1.max(r2))
            }
        } else {
            self.chord_general(&alpha, &beta)?
        };
        let grad = |s: f64| -> Vec3 {
            let z = alpha + s * beta;
            let mut dz = Vec3::zeros();
            for i in 0..self.dim {
                dz[i] = z[i].signum() * z[i].abs().powf(self.q - 1.0);
            }
            let g = self.inv.transpose() * dz;
            let gu = g.dot(u);
            -(g - gu * u) / gu
        };
        Ok(Chord {
            lower: lo,
            upper: hi,
            lower_grad: grad(lo),
            upper_grad: grad(hi),
        })
    }

    fn chord_general(&self, alpha: &Vec3, beta: &Vec3) -> Result<(f64, f64)> {
        let q = self.q;
        let n = self.dim;
        let g = |s: f64| (0..n).map(|i| abs_pow(alpha[i] + s * beta[i], q)).sum::<f64>() - 1.0;
        let dg = |s: f64| {
            (0..n)
                .map(|i| {
                    let z = alpha[i] + s * beta[i];
                    q * beta[i] * z.signum() * z.abs().powf(q - 1.0)
                })
                .sum::<f64>()
        };
        let r = self.outer_radius() * self.inv.norm() / beta.norm().max(1e-300);
        // minimiser of the convex function g
        let (mut a, mut b) = (-r, r);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if dg(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
            if b - a <= 1e-15 * r {
                break;
            }
        }
        let smin = 0.5 * (a + b);
        if g(smin) >= 0.0 {
            return Err(domain("point lies outside the projected base"));
        }
        let lo = safe_newton(&g, &dg, -r, smin)?;
        let hi = safe_newton(&g, &dg, smin, r)?;
        Ok((lo, hi))
    }

    pub fn apply_linear(&self, a: &Mat3) -> Result<Self> {
        Self::new(self.dim, self.q, a * self.map, a * self.center)
    }

    pub fn translate(&self, c: &Vec3) -> Result<Self> {
        Self::new(self.dim, self.q, self.map, self.center + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub lower: f64,
    pub upper: f64,
    pub lower_grad: Vec3,
    pub upper_grad: Vec3,
}

/// Newton's method kept inside a sign-changing bracket.
fn safe_newton(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo, hi });
    }
    let rising = fb > fa;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            b = x;
        } else {
            a = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > a && next < b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || b - a <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
