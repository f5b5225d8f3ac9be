use nalgebra::DMatrix;

use crate::field::Point;

/// Dimension of `P_r` in two variables.
pub const fn dim_p(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Position of `X^a Y^b` in graded lexicographic order
/// `1, X, Y, X^2, XY, Y^2, ...`.
pub const fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Exponent pairs in basis order.
pub fn multi_indices(r: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=r).flat_map(|d| (0..=d).map(move |b| (d - b, b)))
}

/// Monomials in `X = (x - xc)/h`, `Y = (y - yc)/h` up to total degree `degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
}

impl ElementBasis {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        ElementBasis { degree, center, scale }
    }

    pub fn dim(&self) -> usize {
        dim_p(self.degree)
    }

    fn powers(&self, p: Point) -> (Vec<f64>, Vec<f64>) {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * x;
            py[i] = py[i - 1] * y;
        }
        (px, py)
    }

    pub fn eval_into(&self, p: Point, out: &mut [f64]) {
        let (px, py) = self.powers(p);
        for (i, (a, b)) in multi_indices(self.degree).enumerate() {
            out[i] = px[a] * py[b];
        }
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    pub fn grad(&self, p: Point) -> Vec<[f64; 2]> {
        let (px, py) = self.powers(p);
        let inv = 1.0 / self.scale;
        multi_indices(self.degree)
            .map(|(a, b)| {
                let dx = if a > 0 { a as f64 * px[a - 1] * py[b] * inv } else { 0.0 };
                let dy = if b > 0 { b as f64 * px[a] * py[b - 1] * inv } else { 0.0 };
                [dx, dy]
            })
            .collect()
    }

    /// Gradient of every basis function as coefficients of a vector field in
    /// `[P_target]^2` over the same center and scale. Column `i` holds basis
    /// function `i`; rows are x-block then y-block. Requires
    /// `target + 1 >= degree`.
    pub fn gradient_embedding(&self, target: usize) -> DMatrix<f64> {
        assert!(target + 1 >= self.degree, "target degree too small for gradient embedding");
        let nt = dim_p(target);
        let mut g = DMatrix::zeros(2 * nt, self.dim());
        let inv = 1.0 / self.scale;
        for (i, (a, b)) in multi_indices(self.degree).enumerate() {
            if a > 0 {
                g[(monomial_index(a - 1, b), i)] = a as f64 * inv;
            }
            if b > 0 {
                g[(nt + monomial_index(a, b - 1), i)] = b as f64 * inv;
            }
        }
        g
    }
}

/// Legendre polynomials `L_0..L_degree` in the edge parameter `t` in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        if self.degree >= 1 {
            out[1] = t;
        }
        for n in 1..self.degree {
            let nf = n as f64;
            out[n + 1] = ((2.0 * nf + 1.0) * t * out[n] - nf * out[n - 1]) / (nf + 1.0);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Diagonal of the mass matrix on an edge of the given length.
    pub fn mass_diagonal(&self, length: f64) -> Vec<f64> {
        (0..self.dim()).map(|m| length / (2 * m + 1) as f64).collect()
    }
}
