//! Sparse symmetric storage and the two linear solvers.
//!
//! The direct path is an up-looking simplicial `L D L^T` factorization
//! under an approximate-minimum-degree ordering. It does no pivoting, so a
//! vanishing or negative pivot is reported with its position instead of
//! being regularized away.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::amd;
use faer::sparse::SymbolicSparseColMatRef;

use crate::error::{Error, Result};

/// Pivots below this fraction of the matching original diagonal entry are
/// treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Square sparse matrix in compressed-column form with both triangles
/// stored and row indices sorted within each column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Sums duplicates in the order given, so the result depends only on
    /// the triplet sequence.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CscMatrix {
        triplets.sort_by_key(|t| (t.1, t.0));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc != 0.0 {
                for (r, v) in self.column(c) {
                    y[r] += v * xc;
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for (r, v) in self.column(c) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// One `row col value` line per stored entry, 17 significant digits.
    pub fn dump_coordinates(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 40);
        for c in 0..self.n {
            for (r, v) in self.column(c) {
                out.push_str(&format!("{r} {c} {v:.16e}\n"));
            }
        }
        out
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||A x - b|| / ||b||`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Fill-reducing permutation: `perm[new] = old`.
pub fn amd_ordering(a: &CscMatrix) -> Result<Vec<usize>> {
    let n = a.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    // upper triangle, as the ordering expects
    let mut col_ptr = vec![0usize; n + 1];
    let mut row_idx = Vec::with_capacity(a.nnz() / 2 + n);
    for c in 0..n {
        for (r, _) in a.column(c) {
            if r <= c {
                row_idx.push(r);
            }
        }
        col_ptr[c + 1] = row_idx.len();
    }
    let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
    let mut perm = vec![0usize; n];
    let mut perm_inv = vec![0usize; n];
    let mut mem = MemBuffer::new(amd::order_scratch::<usize>(n, row_idx.len()));
    amd::order(&mut perm, &mut perm_inv, sym, amd::Control::default(), MemStack::new(&mut mem))
        .map_err(|e| Error::InvalidParameter(format!("ordering failed: {e:?}")))?;
    Ok(perm)
}

/// `P A P^T = L D L^T` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    perm: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    pub fn new(a: &CscMatrix) -> Result<LdlFactor> {
        let perm = amd_ordering(a)?;
        Self::with_ordering(a, perm)
    }

    pub fn with_ordering(a: &CscMatrix, perm: Vec<usize>) -> Result<LdlFactor> {
        let n = a.n;
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }
        // upper triangle of the permuted matrix, by column
        let mut up_ptr = vec![0usize; n + 1];
        for c in 0..n {
            for (r, _) in a.column(c) {
                if pinv[r] <= pinv[c] {
                    up_ptr[pinv[c] + 1] += 1;
                }
            }
        }
        for c in 0..n {
            up_ptr[c + 1] += up_ptr[c];
        }
        let mut up_idx = vec![0usize; up_ptr[n]];
        let mut up_val = vec![0.0; up_ptr[n]];
        let mut next = up_ptr.clone();
        for c in 0..n {
            for (r, v) in a.column(c) {
                let (pr, pc) = (pinv[r], pinv[c]);
                if pr <= pc {
                    up_idx[next[pc]] = pr;
                    up_val[next[pc]] = v;
                    next[pc] += 1;
                }
            }
        }

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &up_idx[up_ptr[k]..up_ptr[k + 1]] {
                let mut i = i0;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_ptr[k + 1] = l_ptr[k] + lnz[k];
        }
        let total = l_ptr[n];
        let mut l_idx = vec![0usize; total];
        let mut l_val = vec![0.0; total];
        let mut d = vec![0.0; n];

        // numeric, row by row
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = l_ptr[..n].to_vec();
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let mut akk = 0.0;
            for p in up_ptr[k]..up_ptr[k + 1] {
                let mut i = up_idx[p];
                if i == k {
                    akk += up_val[p];
                    continue;
                }
                y[i] += up_val[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = akk;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in l_ptr[i]..lfill[i] {
                    y[l_idx[p]] -= l_val[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                l_idx[lfill[i]] = k;
                l_val[lfill[i]] = lki;
                lfill[i] += 1;
            }
            if !(dk > PIVOT_TOLERANCE * akk.abs()) || !(dk > 0.0) {
                return Err(Error::SingularSystem {
                    pivot: k,
                    dof: perm[k],
                    value: dk,
                    diagonal: akk,
                });
            }
            d[k] = dk;
        }
        Ok(LdlFactor {
            perm,
            l_ptr,
            l_idx,
            l_val,
            d,
        })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L stored by columns of L (row k entries were appended to column i)
        for j in 0..n {
            let xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                s -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// Direct solve with up to three rounds of iterative refinement.
pub fn solve_direct(a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let f = LdlFactor::new(a)?;
    let mut x = f.solve(b);
    for _ in 0..3 {
        if relative_residual(a, &x, b) <= 1e-14 {
            break;
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = f.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn solve_cg(a: &CscMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularSystem {
            pivot: i,
            dof: i,
            value: diag[i],
            diagonal: diag[i],
        });
    }
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                iterations: 0,
                residual: norm(&r) / nb,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * nb {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: norm(&r) / nb,
    })
}
