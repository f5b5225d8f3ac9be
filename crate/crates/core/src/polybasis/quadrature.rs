//! Gauss rules on the reference interval, triangle and square, and their
//! images on mesh entities.
//!
//! Triangles use the conical product rule: Gauss-Jacobi (weight `s`) in the
//! collapsed direction times Gauss-Legendre in the other, which keeps every
//! weight positive and reaches any exactness degree. Rules mapped onto an
//! entity that touches a [`Singularity`] switch to a Gauss-Jacobi rule in
//! the distance from the singular vertex.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::{Point, Singularity};
use crate::mesh::Mesh;

/// Highest exactness degree any constructor accepts.
pub const MAX_DEGREE: usize = 80;

/// Extra Legendre points used across the angular direction of singular rules,
/// whose integrands are smooth but not polynomial there.
const ANGULAR_EXTRA_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// A rule on a mesh edge: physical points, canonical parameters in
/// `[-1, 1]` and physical weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature {
    pub points: Vec<Point>,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
}

fn check_degree(d: usize) -> Result<()> {
    if d > MAX_DEGREE {
        return Err(Error::QuadratureDegree {
            requested: d,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

fn points_for(d: usize) -> usize {
    d / 2 + 1
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `n`-point Gauss-Jacobi rule on `[0, 1]` for the weight `u^beta`,
/// `beta > -1`, via the Golub-Welsch eigenproblem.
pub fn gauss_jacobi_unit(n: usize, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && beta > -1.0);
    // Monic Jacobi recurrence for (1 - x)^0 (1 + x)^beta on [-1, 1].
    let (a, b) = (0.0, beta);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let beta_m = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = beta_m.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(b + 1.0) / (b + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let scale = 2f64.powf(-beta - 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let weights = pairs.iter().map(|p| p.1 * scale).collect();
    (nodes, weights)
}

impl Rule1d {
    /// Gauss-Legendre on `[-1, 1]` exact through degree `d`.
    pub fn edge(d: usize) -> Result<Rule1d> {
        check_degree(d)?;
        let (points, weights) = gauss_legendre(points_for(d));
        Ok(Rule1d {
            points,
            weights,
            degree: d,
        })
    }
}

impl QuadratureRule {
    /// Rule on the reference triangle `(0,0), (1,0), (0,1)`.
    pub fn triangle(d: usize) -> Result<QuadratureRule> {
        check_degree(d)?;
        if d <= 1 {
            return Ok(QuadratureRule {
                points: vec![[1.0 / 3.0, 1.0 / 3.0]],
                weights: vec![0.5],
                degree: d,
            });
        }
        let n = points_for(d);
        let (s, ws) = gauss_jacobi_unit(n, 1.0);
        let (t, wt) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (si, wsi) in s.iter().zip(&ws) {
            for (ti, wti) in t.iter().zip(&wt) {
                let eta = 0.5 * (ti + 1.0);
                points.push([1.0 - si, si * eta]);
                weights.push(wsi * wti * 0.5);
            }
        }
        Ok(QuadratureRule {
            points,
            weights,
            degree: d,
        })
    }

    /// Tensor Gauss-Legendre rule on `[-1, 1]^2`.
    pub fn rectangle(d: usize) -> Result<QuadratureRule> {
        check_degree(d)?;
        let (x, w) = gauss_legendre(points_for(d));
        let mut points = Vec::with_capacity(x.len() * x.len());
        let mut weights = Vec::with_capacity(x.len() * x.len());
        for (yi, wy) in x.iter().zip(&w) {
            for (xi, wx) in x.iter().zip(&w) {
                points.push([*xi, *yi]);
                weights.push(wx * wy);
            }
        }
        Ok(QuadratureRule {
            points,
            weights,
            degree: d,
        })
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    fn append(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Reference triangle rule mapped affinely onto `verts`.
pub fn triangle_rule(verts: [Point; 3], d: usize) -> Result<QuadratureRule> {
    let r = QuadratureRule::triangle(d)?;
    let e1 = sub(verts[1], verts[0]);
    let e2 = sub(verts[2], verts[0]);
    let jac = cross(e1, e2).abs();
    let points = r
        .points
        .iter()
        .map(|p| [verts[0][0] + p[0] * e1[0] + p[1] * e2[0], verts[0][1] + p[0] * e1[1] + p[1] * e2[1]])
        .collect();
    let weights = r.weights.iter().map(|w| w * jac).collect();
    Ok(QuadratureRule {
        points,
        weights,
        degree: d,
    })
}

fn is_parallelogram(v: &[Point]) -> bool {
    if v.len() != 4 {
        return false;
    }
    let scale = sub(v[2], v[0]).iter().map(|c| c.abs()).fold(0.0, f64::max);
    let gap = sub(sub(v[1], v[0]), sub(v[2], v[3]));
    gap[0].abs() <= 1e-13 * scale && gap[1].abs() <= 1e-13 * scale
}

/// Tensor rule mapped affinely onto a parallelogram `v0, v1, v2, v3`.
pub fn parallelogram_rule(v: [Point; 4], d: usize) -> Result<QuadratureRule> {
    let r = QuadratureRule::rectangle(d)?;
    let e1 = sub(v[1], v[0]);
    let e2 = sub(v[3], v[0]);
    let jac = cross(e1, e2).abs() / 4.0;
    let points = r
        .points
        .iter()
        .map(|p| {
            let (a, b) = (0.5 * (p[0] + 1.0), 0.5 * (p[1] + 1.0));
            [v[0][0] + a * e1[0] + b * e2[0], v[0][1] + a * e1[1] + b * e2[1]]
        })
        .collect();
    let weights = r.weights.iter().map(|w| w * jac).collect();
    Ok(QuadratureRule {
        points,
        weights,
        degree: d,
    })
}

/// Rule on a convex polygon: direct for triangles and parallelograms,
/// otherwise a fan of triangle rules.
pub fn polygon_rule(verts: &[Point], d: usize) -> Result<QuadratureRule> {
    match verts.len() {
        3 => triangle_rule([verts[0], verts[1], verts[2]], d),
        4 if is_parallelogram(verts) => parallelogram_rule([verts[0], verts[1], verts[2], verts[3]], d),
        n => {
            let mut rule = QuadratureRule {
                points: vec![],
                weights: vec![],
                degree: d,
            };
            for i in 1..n - 1 {
                rule.append(triangle_rule([verts[0], verts[i], verts[i + 1]], d)?);
            }
            Ok(rule)
        }
    }
}

/// Rule on the triangle `apex, b, c` for integrands `s^beta * P(s, eta)`,
/// `s` the collapsed distance from `apex`, with `P` a polynomial of degree
/// `d` in `s` and smooth in `eta`.
pub fn singular_triangle_rule(apex: Point, b: Point, c: Point, d: usize, beta: f64) -> Result<QuadratureRule> {
    check_degree(d)?;
    // The area Jacobian contributes one power of s; beta already includes it.
    let (s, ws) = gauss_jacobi_unit(points_for(d) + 1, beta);
    let (t, wt) = gauss_legendre(points_for(d) + ANGULAR_EXTRA_POINTS);
    let e1 = sub(b, apex);
    let e2 = sub(c, b);
    let area2 = cross(sub(b, apex), sub(c, apex)).abs();
    let mut points = Vec::with_capacity(s.len() * t.len());
    let mut weights = Vec::with_capacity(s.len() * t.len());
    for (si, wsi) in s.iter().zip(&ws) {
        for (ti, wti) in t.iter().zip(&wt) {
            let eta = 0.5 * (ti + 1.0);
            let dir = [e1[0] + eta * e2[0], e1[1] + eta * e2[1]];
            points.push([apex[0] + si * dir[0], apex[1] + si * dir[1]]);
            // jacobian area2 * s, divided by the weight function s^beta
            weights.push(wsi * 0.5 * wti * area2 * si.powf(1.0 - beta));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree: d,
    })
}

fn near(a: Point, b: Point) -> bool {
    (a[0] - b[0]).abs() <= 1e-14 && (a[1] - b[1]).abs() <= 1e-14
}

/// Physical quadrature on element `element`, exact for polynomials of degree
/// `d` and adapted to `singularity` when the element touches it.
pub fn element_rule(mesh: &Mesh, element: usize, d: usize, singularity: Option<Singularity>) -> Result<QuadratureRule> {
    let verts = mesh.element_vertices(element);
    if let Some(sing) = singularity {
        if let Some(apex) = verts.iter().position(|v| near(*v, sing.point)) {
            let n = verts.len();
            let mut rule = QuadratureRule {
                points: vec![],
                weights: vec![],
                degree: d,
            };
            for i in 1..n - 1 {
                let b = verts[(apex + i) % n];
                let c = verts[(apex + i + 1) % n];
                rule.append(singular_triangle_rule(verts[apex], b, c, d, sing.weight_exponent)?);
            }
            return Ok(rule);
        }
    }
    polygon_rule(&verts, d)
}

/// Physical quadrature on `edge`, parametrized along its canonical direction.
pub fn edge_rule(mesh: &Mesh, edge: usize, d: usize, singularity: Option<Singularity>) -> Result<EdgeQuadrature> {
    let [a, b] = mesh.edge_endpoints(edge);
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let at = |t: f64| {
        [
            0.5 * (1.0 - t) * a[0] + 0.5 * (1.0 + t) * b[0],
            0.5 * (1.0 - t) * a[1] + 0.5 * (1.0 + t) * b[1],
        ]
    };

    if let Some(sing) = singularity {
        let from_a = near(a, sing.point);
        if from_a || near(b, sing.point) {
            check_degree(d)?;
            let beta = sing.weight_exponent;
            let (tau, w) = gauss_jacobi_unit(points_for(d) + 1, beta);
            let mut out = EdgeQuadrature {
                points: vec![],
                params: vec![],
                weights: vec![],
            };
            for (ti, wi) in tau.iter().zip(&w) {
                let t = if from_a { 2.0 * ti - 1.0 } else { 1.0 - 2.0 * ti };
                out.points.push(at(t));
                out.params.push(t);
                out.weights.push(wi * len * ti.powf(-beta));
            }
            return Ok(out);
        }
    }

    let r = Rule1d::edge(d)?;
    Ok(EdgeQuadrature {
        points: r.points.iter().map(|&t| at(t)).collect(),
        params: r.points.clone(),
        weights: r.weights.iter().map(|w| 0.5 * len * w).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// `int_T x^a y^b` on the reference triangle = a! b! / (a + b + 2)!.
    fn dirichlet(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn legendre_classical() {
        let r = Rule1d::edge(1).unwrap();
        assert_eq!(r.points, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
        let r = Rule1d::edge(3).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!((r.points[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let r = Rule1d::edge(10).unwrap();
        let i: f64 = r.points.iter().zip(&r.weights).map(|(t, w)| w * t.powi(10)).sum();
        assert!((i - 2.0 / 11.0).abs() <= 1e-15);
    }

    #[test]
    fn jacobi_moments() {
        for beta in [-0.5, -0.875, 0.0, 1.0, 0.25] {
            let (u, w) = gauss_jacobi_unit(6, beta);
            for k in 0..12 {
                let q: f64 = u.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                let exact = 1.0 / (k as f64 + beta + 1.0);
                assert!((q - exact).abs() <= 1e-13 * exact, "beta {beta} k {k}");
            }
        }
    }

    #[test]
    fn triangle_centroid_rule() {
        let r = QuadratureRule::triangle(1).unwrap();
        assert_eq!(r.points.len(), 1);
        let t = triangle_rule([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]], 1).unwrap();
        assert!((t.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_high_degree() {
        let r = QuadratureRule::triangle(14).unwrap();
        let q = r.integrate(|p| p[0].powi(7) * p[1].powi(7));
        let exact = dirichlet(7, 7);
        assert!((q - exact).abs() <= 1e-14 * exact, "{q} vs {exact}");
    }

    #[test]
    fn rectangle_gauss() {
        let r = QuadratureRule::rectangle(3).unwrap();
        assert_eq!(r.points.len(), 4);
        let q = r.integrate(|p| p[0].powi(3) * p[1].powi(3) + p[0] * p[0] * p[1] * p[1]);
        assert!((q - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn degree_limit() {
        assert!(QuadratureRule::triangle(MAX_DEGREE + 1).is_err());
        assert!(Rule1d::edge(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn random_polynomials_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let d = trial % 21;
            let coeffs: Vec<((u32, u32), f64)> = (0..=d as u32)
                .flat_map(|t| (0..=t).map(move |b| (t - b, b)))
                .map(|ab| (ab, rng.random_range(-1.0..1.0)))
                .collect();
            let eval = |p: Point| {
                coeffs
                    .iter()
                    .map(|((a, b), c)| c * p[0].powi(*a as i32) * p[1].powi(*b as i32))
                    .sum::<f64>()
            };

            let tri = QuadratureRule::triangle(d).unwrap();
            let exact: f64 = coeffs.iter().map(|((a, b), c)| c * dirichlet(*a, *b)).sum();
            let scale: f64 = coeffs.iter().map(|((a, b), c)| c.abs() * dirichlet(*a, *b)).sum();
            assert!((tri.integrate(eval) - exact).abs() <= 1e-12 * scale, "triangle d={d}");

            let sq = QuadratureRule::rectangle(d).unwrap();
            let mono = |k: u32| if k.is_multiple_of(2) { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let exact: f64 = coeffs.iter().map(|((a, b), c)| c * mono(*a) * mono(*b)).sum();
            let scale: f64 = coeffs.iter().map(|((a, b), c)| c.abs() * 4.0 / ((a + 1) * (b + 1)) as f64).sum();
            assert!((sq.integrate(eval) - exact).abs() <= 1e-12 * scale, "square d={d}");
        }
    }

    #[test]
    fn weights_sum_to_measure() {
        for d in 0..30 {
            let t: f64 = QuadratureRule::triangle(d).unwrap().weights.iter().sum();
            assert!((t - 0.5).abs() < 1e-14);
            assert!(QuadratureRule::triangle(d).unwrap().weights.iter().all(|w| *w > 0.0));
            let s: f64 = QuadratureRule::rectangle(d).unwrap().weights.iter().sum();
            assert!((s - 4.0).abs() < 1e-13);
            let e: f64 = Rule1d::edge(d).unwrap().weights.iter().sum();
            assert!((e - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_rule_matches_graded_composite() {
        // r^(alpha - 2) * x * y over a triangle with a vertex at the origin.
        let alpha: f64 = 0.5;
        let f = |p: Point| (p[0] * p[0] + p[1] * p[1]).powf(0.5 * (alpha - 2.0)) * (1.0 + p[0]) * p[1];
        let (a, b, c) = ([0.0, 0.0], [0.25, 0.0], [0.25, 0.25]);
        let q = singular_triangle_rule(a, b, c, 6, alpha - 1.0).unwrap().integrate(f);

        // Oracle: 60 levels of dyadic grading toward the origin.
        let mut oracle = 0.0;
        let mut scale = 1.0;
        let lerp = |s: f64, v: Point| [a[0] + s * (v[0] - a[0]), a[1] + s * (v[1] - a[1])];
        for _ in 0..60 {
            let half = 0.5 * scale;
            let (b1, c1, b2, c2) = (lerp(half, b), lerp(half, c), lerp(scale, b), lerp(scale, c));
            oracle += triangle_rule([b1, b2, c2], 30).unwrap().integrate(f);
            oracle += triangle_rule([b1, c2, c1], 30).unwrap().integrate(f);
            scale = half;
        }
        assert!((q - oracle).abs() <= 1e-12 * oracle.abs(), "{q} vs {oracle}");
    }

    #[test]
    fn edge_rule_orientation() {
        let m = Mesh::uniform_triangular(1).unwrap();
        for e in 0..m.num_edges() {
            let r = edge_rule(&m, e, 5, None).unwrap();
            let [a, b] = m.edge_endpoints(e);
            for (p, t) in r.points.iter().zip(&r.params) {
                let s = 0.5 * (t + 1.0);
                assert!((p[0] - (a[0] + s * (b[0] - a[0]))).abs() < 1e-15);
            }
            let len: f64 = r.weights.iter().sum();
            assert!((len - m.edge_length(e)).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_edge_rule() {
        let m = Mesh::uniform_triangular(2).unwrap();
        let sing = Singularity {
            point: [0.0, 0.0],
            weight_exponent: -0.5,
        };
        let diag = (0..m.num_edges())
            .find(|&e| m.edge_endpoints(e) == [[0.0, 0.0], [0.5, 0.5]])
            .unwrap();
        let r = edge_rule(&m, diag, 4, Some(sing)).unwrap();
        // int_0^L s^(-1/2) (1 + s) ds along the diagonal
        let len = m.edge_length(diag);
        let q: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| {
                let s = p[0].hypot(p[1]);
                w * s.powf(-0.5) * (1.0 + s)
            })
            .sum();
        let exact = 2.0 * len.sqrt() + 2.0 / 3.0 * len.powf(1.5);
        assert!((q - exact).abs() < 1e-13);
    }
}
