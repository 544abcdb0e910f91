//! Special constants, quadrature rules and scalar root finding.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::geom::{check_dim, Mat3, Vec3};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

pub fn beta(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

/// Volume of the unit ball, `π^{r/2} / Γ(1 + r/2)`, for real `r ≥ 0`.
pub fn unit_ball_volume(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(format!("unit ball volume needs r >= 0, got {r}")));
    }
    Ok(PI.powf(r / 2.0) / gamma(1.0 + r / 2.0))
}

/// `ω_{n+p} / (ω_2 ω_n ω_{p-1})`, the normalization of the L_p operators.
pub fn lyz_constant(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(domain(format!("p must exceed 1, got {p}")));
    }
    let n = n as f64;
    Ok(unit_ball_volume(n + p)? / (unit_ball_volume(2.0)? * unit_ball_volume(n)? * unit_ball_volume(p - 1.0)?))
}

/// `∫_{S^1} |cos φ|^{n-2} dφ = 2 B((n-1)/2, 1/2)`, the fiber constant of the
/// hyperplane Blaschke–Petkantschin formula.
pub fn bp_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(domain(format!("fiber constant needs n >= 3, got {n}")));
    }
    Ok(2.0 * beta((n as f64 - 1.0) / 2.0, 0.5))
}

/// Constant relating the polar projection body volume to the weighted
/// measure of its Rolodex: `nω_n (nω_n c_{n-2,p})^{n/p} / c̄_{n,n-1}`.
pub fn rolodex_constant(n: usize, p: f64) -> Result<f64> {
    let nf = n as f64;
    let area = nf * unit_ball_volume(nf)?;
    let c = lyz_constant(n.checked_sub(2).ok_or_else(|| domain("n >= 3 required"))?, p)?;
    Ok(area * (area * c).powf(nf / p) / bp_constant(n)?)
}

/// `|x|^p` with exact fast paths for the common integer exponents.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 1.0 {
        a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// A one-dimensional rule on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl Quadrature1D {
    /// Gauss–Legendre rule with `n` nodes.
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(domain("gauss-legendre needs n >= 1 and lo < hi"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = mid - half * x;
            nodes[n - 1 - i] = mid + half * x;
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        Ok(Quadrature1D {
            nodes,
            weights,
            interval: (lo, hi),
        })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights on `S^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub level: u32,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(v, w)| w * f(v)).sum()
    }

    /// Same rule with every node rotated by `rot`.
    pub fn rotated(&self, rot: &Mat3) -> Self {
        SphereQuadrature {
            dim: self.dim,
            level: self.level,
            nodes: self.nodes.iter().map(|v| (rot * v).normalize()).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Index of the node closest to `v`.
    pub fn nearest(&self, v: &Vec3) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, x) in self.nodes.iter().enumerate() {
            let d = x.dot(v);
            if d > best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

/// Sphere rule: uniform angles on the circle, subdivided icosahedron with
/// centroid nodes and exact spherical-triangle weights on `S^2`.
pub fn sphere_grid(n: usize, level: u32) -> Result<SphereQuadrature> {
    check_dim(n)?;
    if n == 2 {
        let m = 32usize << level;
        let w = 2.0 * PI / m as f64;
        let nodes = (0..m)
            .map(|k| {
                let a = (k as f64 + 0.5) * w;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        return Ok(SphereQuadrature {
            dim: 2,
            level,
            nodes,
            weights: vec![w; m],
        });
    }
    let (mut verts, mut tris) = icosahedron();
    for _ in 0..level {
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    let mut nodes = Vec::with_capacity(tris.len());
    let mut weights = Vec::with_capacity(tris.len());
    for &[a, b, c] in &tris {
        let (a, b, c) = (verts[a], verts[b], verts[c]);
        nodes.push((a + b + c).normalize());
        let num = a.dot(&b.cross(&c)).abs();
        let den = 1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a);
        weights.push(2.0 * num.atan2(den));
    }
    Ok(SphereQuadrature {
        dim: 3,
        level,
        nodes,
        weights,
    })
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts = Vec::with_capacity(12);
    for &(a, b) in &[(1.0, phi), (-1.0, phi), (1.0, -phi), (-1.0, -phi)] {
        verts.push(Vec3::new(0.0, a, b));
        verts.push(Vec3::new(a, b, 0.0));
        verts.push(Vec3::new(b, 0.0, a));
    }
    let mut tris = Vec::with_capacity(20);
    for i in 0..12 {
        for j in i + 1..12 {
            for k in j + 1..12 {
                let e = |x: usize, y: usize| ((verts[x] - verts[y]).norm() - 2.0).abs() < 1e-9;
                if e(i, j) && e(j, k) && e(i, k) {
                    let (a, b, c) = (verts[i], verts[j], verts[k]);
                    // outward orientation
                    if (b - a).cross(&(c - a)).dot(&(a + b + c)) > 0.0 {
                        tris.push([i, j, k]);
                    } else {
                        tris.push([i, k, j]);
                    }
                }
            }
        }
    }
    for v in &mut verts {
        *v = v.normalize();
    }
    (verts, tris)
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to bracket width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section minimization of a unimodal function; returns `(x, f(x))`.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Composite Simpson, used as an independent oracle below.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(2.5) - 0.75 * PI.sqrt()).abs() < 1e-13);
        assert!((gamma(6.0) - 120.0).abs() < 1e-10);
        let mut fact = 1.0f64;
        for k in 1..25 {
            fact *= k as f64;
            let g = gamma(k as f64 + 1.0);
            assert!((g / fact - 1.0).abs() < 1e-12, "Γ({}) = {g}, want {fact}", k + 1);
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2.0).unwrap() - PI).abs() < 1e-14);
        assert!((unit_ball_volume(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((unit_ball_volume(3.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((unit_ball_volume(1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(5.0).unwrap() - 8.0 * PI * PI / 15.0).abs() < 1e-13);
        assert!(unit_ball_volume(-0.1).is_err());
    }

    #[test]
    fn lyz_constants() {
        assert!((lyz_constant(3, 2.0).unwrap() - 0.2).abs() < 1e-13);
        assert!((lyz_constant(1, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        assert!((lyz_constant(2, 2.0).unwrap() - 0.25).abs() < 1e-13);
        assert!(lyz_constant(3, 1.0).is_err());
        assert!(lyz_constant(3, 0.5).is_err());
    }

    #[test]
    fn bp_constant_matches_direct_quadrature() {
        assert!((bp_constant(3).unwrap() - 4.0).abs() < 1e-13);
        assert!((bp_constant(4).unwrap() - PI).abs() < 1e-13);
        assert!(bp_constant(2).is_err());
        for n in 3..8 {
            // |cos|^{n-2} is smooth on [0, π/2]; four symmetric copies fill [0, 2π]
            let direct = 4.0 * simpson(|x| x.cos().abs().powi(n as i32 - 2), 0.0, PI / 2.0, 20_000);
            assert!((bp_constant(n).unwrap() - direct).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn bp_constant_via_circle_grid() {
        let g = sphere_grid(2, 4).unwrap();
        let q = g.integrate(|v| v.x.abs());
        assert!((q - bp_constant(3).unwrap()).abs() < 1e-2);
        let q = g.integrate(|v| v.x * v.x);
        assert!((q - bp_constant(4).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rolodex_constant_closed_form() {
        let c = rolodex_constant(3, 2.0).unwrap();
        let want = PI * (4.0 * PI / 3.0).powf(1.5);
        assert!((c - want).abs() < 1e-11 * want);
        assert!((c - 26.9330).abs() < 1e-3);
        for &(n, p) in &[(3usize, 1.5), (3, 3.0), (4, 2.0), (5, 2.5)] {
            let nf = n as f64;
            let area = nf * unit_ball_volume(nf).unwrap();
            let lhs = rolodex_constant(n, p).unwrap() * bp_constant(n).unwrap();
            let rhs = area * (area * lyz_constant(n - 2, p).unwrap()).powf(nf / p);
            assert!((lhs - rhs).abs() < 1e-12 * rhs);
        }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let q = Quadrature1D::gauss_legendre(8, -1.0, 3.0).unwrap();
        let sum: f64 = q.weights.iter().sum();
        assert!((sum - 4.0).abs() < 1e-12);
        assert!(q.nodes.iter().all(|&x| (-1.0..=3.0).contains(&x)));
        // degree 15 is integrated exactly
        let exact = (3f64.powi(16) - 1.0) / 16.0;
        assert!((q.integrate(|x| x.powi(15)) - exact).abs() < 1e-9 * exact);
        let q = Quadrature1D::gauss_legendre(1, 0.0, 2.0).unwrap();
        assert_eq!(q.nodes, vec![1.0]);
    }

    #[test]
    fn circle_grid_uniform() {
        let g = sphere_grid(2, 1).unwrap();
        let m = g.len();
        assert!(g.weights.iter().all(|&w| (w - 2.0 * PI / m as f64).abs() < 1e-15));
        assert!((g.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn icosahedral_grid_invariants() {
        for level in 0..5 {
            let g = sphere_grid(3, level).unwrap();
            assert_eq!(g.len(), 20 * 4usize.pow(level));
            let total: f64 = g.weights.iter().sum();
            assert!((total - 4.0 * PI).abs() < 1e-10 * 4.0 * PI, "level {level}: {total}");
            assert!(g.nodes.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
            assert!(g.weights.iter().all(|&w| w > 0.0));
            let a = Vec3::new(0.3, -0.7, 1.1);
            assert!(g.integrate(|v| a.dot(v)).abs() < 1e-10);
        }
    }

    #[test]
    fn second_moments() {
        let g = sphere_grid(3, 3).unwrap();
        let want = 4.0 * PI / 3.0;
        let q = g.integrate(|v| v.z * v.z);
        assert!((q - want).abs() < 1e-4 * want, "{q} vs {want}");
        for i in 0..3 {
            for j in 0..3 {
                let q = g.integrate(|v| v[i] * v[j]);
                let w = if i == j { want } else { 0.0 };
                assert!((q - w).abs() < 1e-3 * want);
            }
        }
    }

    #[test]
    fn refinement_converges() {
        let p = 1.5;
        let exact = 4.0 * PI / (p + 1.0);
        let errs: Vec<f64> = (1..5)
            .map(|l| {
                let g = sphere_grid(3, l).unwrap();
                (g.integrate(|v| v.z.abs().powf(p)) - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            // observed order >= 1 means each halving of the mesh at least halves the error
            assert!(w[1] <= 0.5 * w[0], "{errs:?}");
        }
    }

    #[test]
    fn bisection() {
        assert!((bisect(|x| x - 1.0, 0.0, 2.0, 1e-10).unwrap() - 1.0).abs() < 1e-10);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(bisect(|x| x, 1.0, 2.0, 1e-10), Err(Error::Bracket { .. })));
    }

    #[test]
    fn golden_section() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}
