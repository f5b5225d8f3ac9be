//! Polynomial bases on elements and edges, and the quadrature rules that
//! integrate them.

mod basis;
pub mod quadrature;

pub use basis::{dim_p, monomial_index, multi_indices, EdgeBasis, ElementBasis};
pub use quadrature::{edge_rule, element_rule, gauss_jacobi_unit, gauss_legendre, polygon_rule, EdgeQuadrature, QuadratureRule, Rule1d};

use nalgebra::{DMatrix, DVector};

/// Shape tag for [`element_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Triangle,
    Rectangle,
}

/// Reference rule for a shape: the unit right triangle or `[-1, 1]^2`.
pub fn element_quadrature(shape: Shape, d: usize) -> crate::Result<QuadratureRule> {
    match shape {
        Shape::Triangle => QuadratureRule::triangle(d),
        Shape::Rectangle => QuadratureRule::rectangle(d),
    }
}

/// Gauss-Legendre on `[-1, 1]`.
pub fn edge_quadrature(d: usize) -> crate::Result<Rule1d> {
    Rule1d::edge(d)
}

/// `(phi_i, phi_j)` for the basis under the given rule.
pub fn mass_matrix(basis: &ElementBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut v = vec![0.0; n];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(*p, &mut v);
        for j in 0..n {
            let wj = w * v[j];
            for i in j..n {
                m[(i, j)] += wj * v[i];
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// L2 projection onto the span of `basis` under `rule`: least squares on
/// the weighted, column-equilibrated Vandermonde matrix via QR, which sees
/// the square root of the mass matrix's conditioning.
pub fn l2_fit(basis: &ElementBasis, rule: &QuadratureRule, values: &[f64]) -> Option<Vec<f64>> {
    let n = basis.dim();
    let nq = rule.points.len();
    if nq < n {
        return None;
    }
    let mut b = DMatrix::<f64>::zeros(nq, n);
    let mut rhs = DVector::<f64>::zeros(nq);
    let mut v = vec![0.0; n];
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let sw = w.sqrt();
        basis.eval_into(*p, &mut v);
        for i in 0..n {
            b[(q, i)] = sw * v[i];
        }
        rhs[q] = sw * values[q];
    }
    let norms: Vec<f64> = (0..n).map(|i| b.column(i).norm()).collect();
    if norms.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    for (i, s) in norms.iter().enumerate() {
        b.column_mut(i).scale_mut(1.0 / s);
    }
    let qr = b.qr();
    let qtb = qr.q().transpose() * rhs;
    let y = qr.r().solve_upper_triangular(&qtb)?;
    Some(y.iter().zip(&norms).map(|(yi, s)| yi / s).collect())
}

/// Basis of `P_r` orthonormal in the discrete inner product of a rule exact
/// through degree `2r`: `psi = phi * transform`, with `transform` upper
/// triangular, so in graded order the first `dim_p(s)` functions span `P_s`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    pub monomials: ElementBasis,
    pub transform: DMatrix<f64>,
}

impl OrthonormalBasis {
    pub fn new(monomials: ElementBasis, rule: &QuadratureRule) -> Option<OrthonormalBasis> {
        let n = monomials.dim();
        let nq = rule.points.len();
        if nq < n {
            return None;
        }
        let mut b = DMatrix::<f64>::zeros(nq, n);
        let mut v = vec![0.0; n];
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            monomials.eval_into(*p, &mut v);
            let sw = w.sqrt();
            for i in 0..n {
                b[(q, i)] = sw * v[i];
            }
        }
        let norms: Vec<f64> = (0..n).map(|i| b.column(i).norm()).collect();
        if norms.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        for (i, s) in norms.iter().enumerate() {
            b.column_mut(i).scale_mut(1.0 / s);
        }
        let mut r = b.qr().r();
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                r.row_mut(i).neg_mut();
            }
        }
        let mut t = r.try_inverse()?;
        for (i, s) in norms.iter().enumerate() {
            t.row_mut(i).scale_mut(1.0 / s);
        }
        Some(OrthonormalBasis { monomials, transform: t })
    }

    pub fn dim(&self) -> usize {
        self.monomials.dim()
    }

    pub fn eval_into(&self, p: crate::field::Point, out: &mut [f64]) {
        let v = self.monomials.eval(p);
        let n = v.len();
        for j in 0..n {
            out[j] = (0..=j).map(|i| v[i] * self.transform[(i, j)]).sum();
        }
    }

    pub fn eval(&self, p: crate::field::Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }
}

/// `diag(M)^-1/2`, or `None` if a diagonal entry is not positive.
pub fn equilibration(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let d = m.diagonal();
    if d.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    Some(d.map(|x| 1.0 / x.sqrt()))
}

pub fn equilibrate(m: &DMatrix<f64>, scale: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| scale[i] * m[(i, j)] * scale[j])
}
