use rayon::prelude::*;

use crate::assembly::{energies, LocalOperators};
use crate::error::Result;
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::polybasis::{element_rule, EdgeBasis, ElementBasis};
use crate::weakspace::{project_qh, GlobalDofMap, WeakFunction, WeakSpaceSignature};

/// `e_h = Q_h u - u_h`.
pub fn error_function(u: &dyn ScalarField, uh: &WeakFunction, mesh: &Mesh, sig: WeakSpaceSignature) -> Result<WeakFunction> {
    uh.check_len(&GlobalDofMap::new(mesh, sig))?;
    let mut e = project_qh(u, mesh, sig)?;
    e.coeffs.iter_mut().zip(&uh.coeffs).for_each(|(a, b)| *a -= b);
    Ok(e)
}

/// `|||v||| = (a(v, v) + s(v, v))^(1/2)`.
pub fn energy_norm(v: &WeakFunction, ops: &[LocalOperators]) -> f64 {
    let (a, s) = energies(ops, v);
    (a.max(0.0) + s.max(0.0)).sqrt()
}

/// `||v0||` over the domain, by quadrature of the squared interior values.
pub fn l2_norm_e0(v: &WeakFunction, mesh: &Mesh, sig: WeakSpaceSignature) -> Result<f64> {
    let map = GlobalDofMap::new(mesh, sig);
    v.check_len(&map)?;
    let parts: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let g = mesh.geometry(e)?;
            let basis = ElementBasis::new(sig.k, g.centroid, g.diameter);
            let rule = element_rule(mesh, e, 2 * sig.k, None)?;
            let c = v.interior(&map, e);
            let mut vals = vec![0.0; basis.dim()];
            Ok(rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    basis.eval_into(*p, &mut vals);
                    let x: f64 = vals.iter().zip(c).map(|(a, b)| a * b).sum();
                    w * x * x
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// `(sum_T h_T ||v_b||^2_{dT})^(1/2)`; interior edges count once per side.
pub fn edge_norm_eb(v: &WeakFunction, mesh: &Mesh, sig: WeakSpaceSignature) -> Result<f64> {
    let map = GlobalDofMap::new(mesh, sig);
    v.check_len(&map)?;
    let basis = EdgeBasis::new(sig.j);
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let h = mesh.geometry(e)?.diameter;
        for side in &mesh.element_edges[e] {
            let mass = basis.mass_diagonal(mesh.edge_length(side.edge));
            let sq: f64 = v.edge(&map, side.edge).iter().zip(&mass).map(|(c, m)| m * c * c).sum();
            total += h * sq;
        }
    }
    Ok(total.sqrt())
}
