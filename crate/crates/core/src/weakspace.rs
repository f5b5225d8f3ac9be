//! Weak function spaces `P_k(T) / P_j(e) / [P_l(T)]^2`: degree-of-freedom
//! layout, L2 projections, and the generalized discrete weak gradient.
//!
//! On each element the weak gradient is `grad v0 + delta v`, where
//! `delta v` in `[P_l]^2` solves
//!
//! ```text
//! (delta v, psi)_T = <v_b - Q_b v0, psi . n>_{dT}   for all psi in [P_l]^2.
//! ```
//!
//! Both pieces are stored as coefficients in `[P_m]^2`, `m = max(k - 1, l)`,
//! using scaled monomials centered at the element centroid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Component, Point, ScalarField, VectorField};
use crate::mesh::{ElementGeometry, Mesh, Side};
use crate::polybasis::{dim_p, edge_rule, element_rule, l2_fit, mass_matrix, EdgeBasis, ElementBasis, OrthonormalBasis};

/// Extra exactness degrees used when integrating non-polynomial data
/// against basis functions.
pub const DATA_EXTRA_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeakSpaceSignature {
    pub k: usize,
    pub j: usize,
    pub l: usize,
}

impl WeakSpaceSignature {
    pub fn new(k: usize, j: usize, l: usize) -> Self {
        WeakSpaceSignature { k, j, l }
    }

    /// `min(j, l)`, the degree the commutation property holds for.
    pub fn s(&self) -> usize {
        self.j.min(self.l)
    }

    /// Degree of the polynomial space carrying the weak gradient.
    pub fn m(&self) -> usize {
        self.k.saturating_sub(1).max(self.l)
    }

    pub fn interior_dim(&self) -> usize {
        dim_p(self.k)
    }

    pub fn edge_dim(&self) -> usize {
        self.j + 1
    }

    /// Exactness degree for integrals of data against `P_k` and `P_j`.
    pub fn data_degree(&self) -> usize {
        2 * self.k.max(self.j) + DATA_EXTRA_DEGREE
    }
}

impl std::fmt::Display for WeakSpaceSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}/P{}/[P{}]^2", self.k, self.j, self.l)
    }
}

/// Interior blocks for every element first, then one block per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDofMap {
    pub num_elements: usize,
    pub num_edges: usize,
    pub interior_dim: usize,
    pub edge_dim: usize,
    pub boundary: Vec<bool>,
}

impl GlobalDofMap {
    pub fn new(mesh: &Mesh, sig: WeakSpaceSignature) -> Self {
        GlobalDofMap {
            num_elements: mesh.num_elements(),
            num_edges: mesh.num_edges(),
            interior_dim: sig.interior_dim(),
            edge_dim: sig.edge_dim(),
            boundary: mesh.edges.iter().map(|e| e.is_boundary()).collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.num_elements * self.interior_dim + self.num_edges * self.edge_dim
    }

    pub fn interior_offset(&self, element: usize) -> usize {
        element * self.interior_dim
    }

    pub fn edge_offset(&self, edge: usize) -> usize {
        self.num_elements * self.interior_dim + edge * self.edge_dim
    }

    pub fn interior_range(&self, element: usize) -> std::ops::Range<usize> {
        let o = self.interior_offset(element);
        o..o + self.interior_dim
    }

    pub fn edge_range(&self, edge: usize) -> std::ops::Range<usize> {
        let o = self.edge_offset(edge);
        o..o + self.edge_dim
    }

    /// Global indices of an element's local DoFs: interior block, then the
    /// blocks of its sides in traversal order.
    pub fn local_dofs(&self, mesh: &Mesh, element: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.interior_range(element).collect();
        for side in &mesh.element_edges[element] {
            out.extend(self.edge_range(side.edge));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakFunction {
    pub coeffs: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(map: &GlobalDofMap) -> Self {
        WeakFunction {
            coeffs: vec![0.0; map.total()],
        }
    }

    pub fn check_len(&self, map: &GlobalDofMap) -> Result<()> {
        if self.coeffs.len() != map.total() {
            return Err(Error::DimensionMismatch {
                expected: map.total(),
                found: self.coeffs.len(),
            });
        }
        Ok(())
    }

    pub fn interior<'a>(&'a self, map: &GlobalDofMap, element: usize) -> &'a [f64] {
        &self.coeffs[map.interior_range(element)]
    }

    pub fn edge<'a>(&'a self, map: &GlobalDofMap, edge: usize) -> &'a [f64] {
        &self.coeffs[map.edge_range(edge)]
    }

    /// Membership in the zero-boundary subspace.
    pub fn in_vh0(&self, map: &GlobalDofMap) -> bool {
        (0..map.num_edges)
            .filter(|&e| map.boundary[e])
            .all(|e| self.edge(map, e).iter().all(|&c| c == 0.0))
    }

    pub fn local(&self, dofs: &[usize]) -> DVector<f64> {
        DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| self.coeffs[i]))
    }

    pub fn scaled(&self, c: f64) -> WeakFunction {
        WeakFunction {
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// Value of the edge component at a physical point on `edge`.
    pub fn edge_value(&self, mesh: &Mesh, map: &GlobalDofMap, edge: usize, p: Point) -> f64 {
        let t = edge_parameter(mesh, edge, p);
        let basis = EdgeBasis::new(map.edge_dim - 1);
        basis.eval(t).iter().zip(self.edge(map, edge)).map(|(b, c)| b * c).sum()
    }

    /// Value of the interior component at a point of `element`.
    pub fn interior_value(&self, mesh: &Mesh, map: &GlobalDofMap, element: usize, p: Point) -> Result<f64> {
        let g = mesh.geometry(element)?;
        let k = degree_of_dim(map.interior_dim);
        let basis = ElementBasis::new(k, g.centroid, g.diameter);
        Ok(basis.eval(p).iter().zip(self.interior(map, element)).map(|(b, c)| b * c).sum())
    }
}

fn degree_of_dim(dim: usize) -> usize {
    (0..).find(|&r| dim_p(r) == dim).expect("interior dimension is triangular")
}

/// Canonical parameter in `[-1, 1]` of a point on an edge.
pub fn edge_parameter(mesh: &Mesh, edge: usize, p: Point) -> f64 {
    let [a, b] = mesh.edge_endpoints(edge);
    let d = [b[0] - a[0], b[1] - a[1]];
    let s = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    2.0 * s - 1.0
}

fn element_basis(geometry: &ElementGeometry, degree: usize) -> ElementBasis {
    ElementBasis::new(degree, geometry.centroid, geometry.diameter)
}

/// `Q_0 f` on one element: coefficients in the scaled monomial basis of `P_k`.
pub fn project_q0(f: &dyn ScalarField, mesh: &Mesh, element: usize, k: usize) -> Result<Vec<f64>> {
    project_q0_with_degree(f, mesh, element, k, 2 * k + DATA_EXTRA_DEGREE)
}

pub fn project_q0_with_degree(f: &dyn ScalarField, mesh: &Mesh, element: usize, k: usize, degree: usize) -> Result<Vec<f64>> {
    let g = mesh.geometry(element)?;
    let basis = element_basis(&g, k);
    let rule = element_rule(mesh, element, degree.max(2 * k), f.singularity())?;
    let values: Vec<f64> = rule.points.iter().map(|p| f.value(*p)).collect();
    let c = l2_fit(&basis, &rule, &values).ok_or(Error::SingularLocalMatrix {
        what: "element mass",
        element,
    })?;
    // normal-equation residual, measured against |M| |c| + |b|
    let mass = mass_matrix(&basis, &rule);
    let mut b = DVector::<f64>::zeros(basis.dim());
    let mut v = vec![0.0; basis.dim()];
    for ((p, w), fv) in rule.points.iter().zip(&rule.weights).zip(&values) {
        basis.eval_into(*p, &mut v);
        for i in 0..v.len() {
            b[i] += w * fv * v[i];
        }
    }
    let cv = DVector::from_column_slice(&c);
    let residual = (&mass * &cv - &b).norm();
    if !(residual <= 1e-12 * (mass.norm() * cv.norm() + b.norm()).max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularLocalMatrix {
            what: "element mass",
            element,
        });
    }
    Ok(c)
}

/// `Q_b f` on one edge: Legendre coefficients along the canonical direction.
pub fn project_qb(f: &dyn ScalarField, mesh: &Mesh, edge: usize, j: usize) -> Result<Vec<f64>> {
    project_qb_with_degree(f, mesh, edge, j, 2 * j + DATA_EXTRA_DEGREE)
}

pub fn project_qb_with_degree(f: &dyn ScalarField, mesh: &Mesh, edge: usize, j: usize, degree: usize) -> Result<Vec<f64>> {
    let basis = EdgeBasis::new(j);
    let rule = edge_rule(mesh, edge, degree, f.singularity())?;
    let mut c = vec![0.0; j + 1];
    let mut v = vec![0.0; j + 1];
    for ((p, t), w) in rule.points.iter().zip(&rule.params).zip(&rule.weights) {
        basis.eval_into(*t, &mut v);
        let fw = w * f.value(*p);
        for (ci, vi) in c.iter_mut().zip(&v) {
            *ci += fw * vi;
        }
    }
    let diag = basis.mass_diagonal(mesh.edge_length(edge));
    Ok(c.iter().zip(diag).map(|(ci, d)| ci / d).collect())
}

/// `Q_h f = {Q_0 f, Q_b f}` over the whole mesh.
pub fn project_qh(f: &dyn ScalarField, mesh: &Mesh, sig: WeakSpaceSignature) -> Result<WeakFunction> {
    let map = GlobalDofMap::new(mesh, sig);
    let degree = sig.data_degree();
    let interiors: Vec<Vec<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| project_q0_with_degree(f, mesh, e, sig.k, degree))
        .collect::<Result<_>>()?;
    let edges: Vec<Vec<f64>> = (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| project_qb_with_degree(f, mesh, e, sig.j, degree))
        .collect::<Result<_>>()?;
    let mut coeffs = Vec::with_capacity(map.total());
    interiors.into_iter().chain(edges).for_each(|b| coeffs.extend(b));
    Ok(WeakFunction { coeffs })
}

/// Componentwise `Q_0` at degree `s`.
pub fn project_qs_vector(f: &dyn VectorField, mesh: &Mesh, element: usize, s: usize) -> Result<[Vec<f64>; 2]> {
    let x = project_q0(&Component { field: f, index: 0 }, mesh, element, s)?;
    let y = project_q0(&Component { field: f, index: 1 }, mesh, element, s)?;
    Ok([x, y])
}

/// Per-element discrete operators for one signature.
///
/// Vector fields are stored as coefficients in `[P_m]^2` (x-block, then
/// y-block) against [`OrthonormalBasis`] of `P_m`; its leading `dim_p(l)`
/// functions are an orthonormal basis of `P_l`, so the vector mass matrix
/// is the identity and `delta` is read off directly from edge moments.
#[derive(Debug, Clone)]
pub struct LocalWeakGradient {
    pub element: usize,
    pub signature: WeakSpaceSignature,
    pub geometry: ElementGeometry,
    pub sides: Vec<Side>,
    /// Global DoF indices matching the operator columns.
    pub dofs: Vec<usize>,
    pub vector_basis: OrthonormalBasis,
    /// `delta_g`: local DoFs to `[P_l]^2` coefficients.
    pub delta: DMatrix<f64>,
    /// Full weak gradient: local DoFs to `[P_m]^2` coefficients.
    pub gradient: DMatrix<f64>,
    /// Per side: local DoFs to Legendre coefficients of `Q_b v0 - v_b`.
    pub trace_jumps: Vec<DMatrix<f64>>,
    /// Per side: diagonal of the Legendre mass matrix.
    pub edge_mass: Vec<Vec<f64>>,
}

impl LocalWeakGradient {
    pub fn build(mesh: &Mesh, element: usize, sig: WeakSpaceSignature) -> Result<Self> {
        let geometry = mesh.geometry(element)?;
        let sides = mesh.element_edges[element].clone();
        let (nk, nl, m) = (sig.interior_dim(), dim_p(sig.l), sig.m());
        let nm = dim_p(m);
        let ne = sig.edge_dim();
        let nloc = nk + sides.len() * ne;

        let basis_k = element_basis(&geometry, sig.k);
        let edge_basis = EdgeBasis::new(sig.j);
        let rule = element_rule(mesh, element, 2 * m.max(sig.k), None)?;
        let vector_basis = OrthonormalBasis::new(element_basis(&geometry, m), &rule).ok_or(Error::SingularLocalMatrix {
            what: "vector mass",
            element,
        })?;

        let mut delta = DMatrix::<f64>::zeros(2 * nl, nloc);
        let mut trace_jumps = Vec::with_capacity(sides.len());
        let mut edge_mass = Vec::with_capacity(sides.len());
        let edge_degree = sig.j + sig.k.max(sig.l);

        let (mut vk, mut vm, mut ve) = (vec![0.0; nk], vec![0.0; nm], vec![0.0; ne]);
        for (i, side) in sides.iter().enumerate() {
            let erule = edge_rule(mesh, side.edge, edge_degree, None)?;
            let normal = geometry.normals[i];
            // Legendre moments of the P_l functions, and Q_b of the interior basis
            let mut moments = DMatrix::<f64>::zeros(ne, nl);
            let mut qb = DMatrix::<f64>::zeros(ne, nk);
            for ((p, t), w) in erule.points.iter().zip(&erule.params).zip(&erule.weights) {
                basis_k.eval_into(*p, &mut vk);
                vector_basis.eval_into(*p, &mut vm);
                edge_basis.eval_into(*t, &mut ve);
                for a in 0..ne {
                    let wa = w * ve[a];
                    for b in 0..nl {
                        moments[(a, b)] += wa * vm[b];
                    }
                    for b in 0..nk {
                        qb[(a, b)] += wa * vk[b];
                    }
                }
            }
            let diag = edge_basis.mass_diagonal(geometry.lengths[i]);
            for a in 0..ne {
                for b in 0..nk {
                    qb[(a, b)] /= diag[a];
                }
            }
            let mut jump = DMatrix::<f64>::zeros(ne, nloc);
            jump.view_mut((0, 0), (ne, nk)).copy_from(&qb);
            for a in 0..ne {
                jump[(a, nk + i * ne + a)] = -1.0;
            }
            // <v_b - Q_b v0, psi n_c>_e = -(moments^T jump) n_c
            let contrib = moments.transpose() * &jump;
            for c in 0..2 {
                let mut block = delta.view_mut((c * nl, 0), (nl, nloc));
                block -= &contrib * normal[c];
            }
            trace_jumps.push(jump);
            edge_mass.push(diag);
        }

        let mut gradient = DMatrix::<f64>::zeros(2 * nm, nloc);
        if sig.k > 0 {
            // (grad phi_i, psi_r)_T, exact since grad phi_i lies in [P_m]^2
            let mut ps = vec![0.0; nm];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let grads = basis_k.grad(*p);
                vector_basis.eval_into(*p, &mut ps);
                for (i, g) in grads.iter().enumerate() {
                    for r in 0..nm {
                        gradient[(r, i)] += w * g[0] * ps[r];
                        gradient[(nm + r, i)] += w * g[1] * ps[r];
                    }
                }
            }
        }
        for c in 0..2 {
            let mut rows = gradient.rows_mut(c * nm, nl);
            rows += delta.rows(c * nl, nl);
        }

        Ok(LocalWeakGradient {
            element,
            signature: sig,
            geometry,
            sides,
            dofs: GlobalDofMap::new(mesh, sig).local_dofs(mesh, element),
            vector_basis,
            delta,
            gradient,
            trace_jumps,
            edge_mass,
        })
    }

    pub fn num_local_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// Evaluates a `[P_r]^2` coefficient vector (`r` = `l` or `m`) at a point.
    pub fn eval_vector(&self, coeffs: &DVector<f64>, p: Point) -> [f64; 2] {
        let n = coeffs.len() / 2;
        let vals = self.vector_basis.eval(p);
        let gx = (0..n).map(|i| coeffs[i] * vals[i]).sum();
        let gy = (0..n).map(|i| coeffs[n + i] * vals[i]).sum();
        [gx, gy]
    }

    /// Evaluates the weak gradient of local DoFs `v` at a point.
    pub fn eval_gradient(&self, v: &DVector<f64>, p: Point) -> [f64; 2] {
        self.eval_vector(&(&self.gradient * v), p)
    }
}

/// Local operators for every element, built in parallel.
pub fn build_all(mesh: &Mesh, sig: WeakSpaceSignature) -> Result<Vec<LocalWeakGradient>> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| LocalWeakGradient::build(mesh, e, sig))
        .collect()
}
