//! The discrete problem `a(u_h, v) + s(u_h, v) = (f, v0)` for all `v` in the
//! zero-boundary space, with `u_b = Q_b g` on the boundary.

pub mod solver;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use solver::{CscMatrix, LdlFactor};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::polybasis::{element_rule, ElementBasis};
use crate::weakspace::{project_qb_with_degree, GlobalDofMap, LocalWeakGradient, WeakFunction, WeakSpaceSignature};

pub type Tensor = [[f64; 2]; 2];

pub const IDENTITY: Tensor = [[1.0, 0.0], [0.0, 1.0]];

/// Piecewise-constant diffusion tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Identity,
    Constant(Tensor),
    PerElement(Vec<Tensor>),
}

impl Coefficient {
    pub fn on(&self, element: usize) -> Tensor {
        match self {
            Coefficient::Identity => IDENTITY,
            Coefficient::Constant(a) => *a,
            Coefficient::PerElement(v) => v[element],
        }
    }
}

fn check_spd(a: &Tensor) -> bool {
    let sym = (a[0][1] - a[1][0]).abs() <= 1e-14 * (a[0][0].abs() + a[1][1].abs());
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    sym && a[0][0] > 0.0 && det > 0.0 && a.iter().flatten().all(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParameters {
    pub rho: f64,
    pub gamma: f64,
    pub coefficient: Coefficient,
}

impl Default for SchemeParameters {
    fn default() -> Self {
        SchemeParameters {
            rho: 1.0,
            gamma: -1.0,
            coefficient: Coefficient::Identity,
        }
    }
}

impl SchemeParameters {
    pub fn new(rho: f64, gamma: f64) -> Self {
        SchemeParameters {
            rho,
            gamma,
            coefficient: Coefficient::Identity,
        }
    }

    pub fn validate(&self, num_elements: usize) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!("rho must be finite and >= 0, got {}", self.rho)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be finite, got {}", self.gamma)));
        }
        match &self.coefficient {
            Coefficient::Identity => Ok(()),
            Coefficient::Constant(a) if check_spd(a) => Ok(()),
            Coefficient::Constant(a) => Err(Error::InvalidParameter(format!(
                "coefficient {a:?} is not symmetric positive definite"
            ))),
            Coefficient::PerElement(v) => {
                if v.len() != num_elements {
                    return Err(Error::DimensionMismatch {
                        expected: num_elements,
                        found: v.len(),
                    });
                }
                match v.iter().position(|a| !check_spd(a)) {
                    Some(e) => Err(Error::InvalidParameter(format!(
                        "coefficient on element {e} is not symmetric positive definite"
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// `rho h_T^gamma`.
    pub fn stabilizer_weight(&self, diameter: f64) -> f64 {
        if self.rho == 0.0 {
            0.0
        } else {
            self.rho * diameter.powf(self.gamma)
        }
    }
}

/// `(a grad_g w, grad_g v)_T` over local DoFs.
pub fn local_stiffness(op: &LocalWeakGradient, a: &Tensor) -> DMatrix<f64> {
    let nm = op.gradient.nrows() / 2;
    let gx = op.gradient.rows(0, nm);
    let gy = op.gradient.rows(nm, nm);
    // the vector basis is orthonormal, so the mass is a (x) I
    let xx = gx.transpose() * gx;
    let yy = gy.transpose() * gy;
    let xy = gx.transpose() * gy;
    let mut k = xx * a[0][0] + yy * a[1][1] + &xy * a[0][1] + xy.transpose() * a[1][0];
    symmetrize(&mut k);
    k
}

/// `rho h_T^gamma <Q_b w0 - w_b, Q_b v0 - v_b>_{dT}` over local DoFs.
pub fn local_stabilizer(op: &LocalWeakGradient, params: &SchemeParameters) -> DMatrix<f64> {
    let n = op.num_local_dofs();
    let weight = params.stabilizer_weight(op.geometry.diameter);
    let mut s = DMatrix::zeros(n, n);
    if weight == 0.0 {
        return s;
    }
    for (jump, mass) in op.trace_jumps.iter().zip(&op.edge_mass) {
        let scaled = DMatrix::from_fn(jump.nrows(), n, |r, c| mass[r] * jump[(r, c)]);
        s += jump.transpose() * scaled;
    }
    s *= weight;
    symmetrize(&mut s);
    s
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Per-element operators.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub weak_gradient: LocalWeakGradient,
    pub coefficient: Tensor,
    /// `rho h_T^gamma`.
    pub stabilizer_weight: f64,
    pub stiffness: DMatrix<f64>,
    pub stabilizer: DMatrix<f64>,
}

impl LocalOperators {
    pub fn build(mesh: &Mesh, element: usize, sig: WeakSpaceSignature, params: &SchemeParameters) -> Result<Self> {
        let weak_gradient = LocalWeakGradient::build(mesh, element, sig)?;
        let coefficient = params.coefficient.on(element);
        let stiffness = local_stiffness(&weak_gradient, &coefficient);
        let stabilizer = local_stabilizer(&weak_gradient, params);
        let stabilizer_weight = params.stabilizer_weight(weak_gradient.geometry.diameter);
        Ok(LocalOperators {
            weak_gradient,
            coefficient,
            stabilizer_weight,
            stiffness,
            stabilizer,
        })
    }

    /// `(a(v, v), s(v, v))` on this element for local DoFs `v`, as sums of
    /// squares: the quadratic forms lose about `eps * |K|` to cancellation,
    /// far above the error levels a fine mesh reaches.
    pub fn energies(&self, v: &DVector<f64>) -> (f64, f64) {
        let g = &self.weak_gradient.gradient * v;
        let nm = g.len() / 2;
        let a = &self.coefficient;
        let mut stiff = 0.0;
        for r in 0..nm {
            let (x, y) = (g[r], g[nm + r]);
            stiff += a[0][0] * x * x + (a[0][1] + a[1][0]) * x * y + a[1][1] * y * y;
        }
        let mut stab = 0.0;
        if self.stabilizer_weight != 0.0 {
            for (jump, mass) in self.weak_gradient.trace_jumps.iter().zip(&self.weak_gradient.edge_mass) {
                let d = jump * v;
                stab += d.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>();
            }
            stab *= self.stabilizer_weight;
        }
        (stiff, stab)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.stiffness + &self.stabilizer
    }
}

pub fn build_local_operators(mesh: &Mesh, sig: WeakSpaceSignature, params: &SchemeParameters) -> Result<Vec<LocalOperators>> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| LocalOperators::build(mesh, e, sig, params))
        .collect()
}

/// `(f, phi_i)_T` for the interior basis.
pub fn local_load(f: &dyn ScalarField, mesh: &Mesh, element: usize, sig: WeakSpaceSignature) -> Result<Vec<f64>> {
    let g = mesh.geometry(element)?;
    let basis = ElementBasis::new(sig.k, g.centroid, g.diameter);
    let rule = element_rule(mesh, element, sig.data_degree(), f.singularity())?;
    let mut b = vec![0.0; basis.dim()];
    let mut v = vec![0.0; basis.dim()];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval_into(*p, &mut v);
        let fw = w * f.value(*p);
        b.iter_mut().zip(&v).for_each(|(bi, vi)| *bi += fw * vi);
    }
    Ok(b)
}

#[derive(Debug, Clone)]
pub struct GlobalSystem {
    /// Free-DoF block of `a + s`.
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub map: GlobalDofMap,
    /// Global index of each free DoF.
    pub free: Vec<usize>,
    /// Prescribed values `Q_b g` on boundary DoFs, by global index.
    pub dirichlet: Vec<(usize, f64)>,
}

impl GlobalSystem {
    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// Scatters a free-DoF vector and the Dirichlet values into a full
    /// weak function.
    pub fn expand(&self, x: &[f64]) -> WeakFunction {
        let mut w = WeakFunction::zeros(&self.map);
        for (&g, &v) in self.free.iter().zip(x) {
            w.coeffs[g] = v;
        }
        for &(g, v) in &self.dirichlet {
            w.coeffs[g] = v;
        }
        w
    }
}

/// Assembles the global system. Local matrices are built in parallel and
/// scattered in element order, so the result does not depend on scheduling.
pub fn assemble(
    mesh: &Mesh,
    sig: WeakSpaceSignature,
    params: &SchemeParameters,
    f: &dyn ScalarField,
    g: &dyn ScalarField,
) -> Result<GlobalSystem> {
    params.validate(mesh.num_elements())?;
    let ops = build_local_operators(mesh, sig, params)?;
    assemble_with(mesh, sig, &ops, f, g)
}

pub fn assemble_with(
    mesh: &Mesh,
    sig: WeakSpaceSignature,
    ops: &[LocalOperators],
    f: &dyn ScalarField,
    g: &dyn ScalarField,
) -> Result<GlobalSystem> {
    let map = GlobalDofMap::new(mesh, sig);
    let total = map.total();

    let mut prescribed = vec![None; total];
    let boundary: Vec<usize> = (0..mesh.num_edges()).filter(|&e| map.boundary[e]).collect();
    let degree = sig.data_degree();
    let values: Vec<Vec<f64>> = boundary
        .par_iter()
        .map(|&e| project_qb_with_degree(g, mesh, e, sig.j, degree))
        .collect::<Result<_>>()?;
    let mut dirichlet = Vec::new();
    for (&e, v) in boundary.iter().zip(values) {
        for (i, x) in map.edge_range(e).zip(v) {
            prescribed[i] = Some(x);
            dirichlet.push((i, x));
        }
    }

    let mut free_index = vec![usize::MAX; total];
    let mut free = Vec::with_capacity(total - dirichlet.len());
    for i in 0..total {
        if prescribed[i].is_none() {
            free_index[i] = free.len();
            free.push(i);
        }
    }

    let loads: Vec<Vec<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| local_load(f, mesh, e, sig))
        .collect::<Result<_>>()?;

    let mut rhs = vec![0.0; free.len()];
    let per = ops.first().map_or(0, |o| o.weak_gradient.num_local_dofs().pow(2));
    let mut triplets = Vec::with_capacity(per * ops.len());
    for (e, op) in ops.iter().enumerate() {
        let dofs = &op.weak_gradient.dofs;
        let m = op.matrix();
        for (i, &gi) in dofs.iter().enumerate().take(sig.interior_dim()) {
            rhs[free_index[gi]] += loads[e][i];
        }
        for (jl, &gj) in dofs.iter().enumerate() {
            let fj = free_index[gj];
            for (il, &gi) in dofs.iter().enumerate() {
                let fi = free_index[gi];
                if fi == usize::MAX {
                    continue;
                }
                let v = m[(il, jl)];
                match prescribed[gj] {
                    None => triplets.push((fi, fj, v)),
                    Some(x) => rhs[fi] -= v * x,
                }
            }
        }
    }
    let matrix = CscMatrix::from_triplets(free.len(), triplets);
    Ok(GlobalSystem {
        matrix,
        rhs,
        map,
        free,
        dirichlet,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Direct,
    ConjugateGradient,
}

/// Solves for the free DoFs and returns the full weak function.
pub fn solve(system: &GlobalSystem, solver: Solver) -> Result<WeakFunction> {
    let x = match solver {
        Solver::Direct => solver::solve_direct(&system.matrix, &system.rhs)?,
        Solver::ConjugateGradient => {
            let n = system.num_free();
            solver::solve_cg(&system.matrix, &system.rhs, 1e-13, 20 * n + 100)?
        }
    };
    Ok(system.expand(&x))
}

/// Residual `||A x - b|| / ||b||` of a full weak function restricted to the
/// free DoFs.
pub fn residual(system: &GlobalSystem, w: &WeakFunction) -> f64 {
    let x: Vec<f64> = system.free.iter().map(|&g| w.coeffs[g]).collect();
    solver::relative_residual(&system.matrix, &x, &system.rhs)
}

/// Energy `a(v, v)` and `s(v, v)` of a full weak function.
pub fn energies(ops: &[LocalOperators], v: &WeakFunction) -> (f64, f64) {
    ops.iter()
        .map(|op| op.energies(&v.local(&op.weak_gradient.dofs)))
        .fold((0.0, 0.0), |(a, s), (x, y)| (a + x, s + y))
}
