use gwg::assembly::{assemble, solve, SchemeParameters, Solver};
use gwg::field::{Point, ScalarField};
use gwg::mesh::Mesh;
use gwg::polybasis::{element_rule, ElementBasis};
use gwg::verify::{rate, run_convergence_study, ManufacturedCase, MeshFamily, Study};
use gwg::weakspace::{project_q0, project_qs_vector, GlobalDofMap, WeakSpaceSignature};
use nalgebra::{Cholesky, DVector};
use std::f64::consts::PI;

fn cc(p: Point) -> f64 {
    (PI * p[0]).cos() * (PI * p[1]).cos()
}

fn grad_cc(p: Point) -> [f64; 2] {
    [
        -PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
        -PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
    ]
}

/// `||phi - Q_0 phi||` over the mesh, summed over `components` scalar fields.
fn projection_error(mesh: &Mesh, degree: usize, components: &[&dyn ScalarField]) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let g = mesh.geometry(e).unwrap();
        let basis = ElementBasis::new(degree, g.centroid, g.diameter);
        let rule = element_rule(mesh, e, 2 * degree + 8, None).unwrap();
        for f in components {
            let c = project_q0(*f, mesh, e, degree).unwrap();
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let q: f64 = basis.eval(*p).iter().zip(&c).map(|(a, b)| a * b).sum();
                total += w * (f.value(*p) - q).powi(2);
            }
        }
    }
    total.sqrt()
}

#[test]
fn interior_projection_converges_at_order_three() {
    let errs: Vec<(f64, f64)> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let mesh = Mesh::uniform_triangular(n).unwrap();
            (mesh.h_max(), projection_error(&mesh, 2, &[&cc]))
        })
        .collect();
    for w in errs.windows(2) {
        let r = rate(w[0].1, w[1].1, w[0].0, w[1].0).unwrap();
        assert!((r - 3.0).abs() <= 0.1, "{r}");
    }
}

#[test]
fn vector_projection_converges_at_order_three() {
    let gx = |p: Point| grad_cc(p)[0];
    let gy = |p: Point| grad_cc(p)[1];
    let errs: Vec<(f64, f64)> = [8, 16]
        .iter()
        .map(|&n| {
            let mesh = Mesh::uniform_triangular(n).unwrap();
            (mesh.h_max(), projection_error(&mesh, 2, &[&gx, &gy]))
        })
        .collect();
    let r = rate(errs[0].1, errs[1].1, errs[0].0, errs[1].0).unwrap();
    assert!((r - 3.0).abs() <= 0.1, "{r}");

    // the dedicated vector projection agrees with the componentwise one
    let mesh = Mesh::uniform_triangular(3).unwrap();
    let [x, y] = project_qs_vector(&grad_cc, &mesh, 4, 2).unwrap();
    assert_eq!(x, project_q0(&gx, &mesh, 4, 2).unwrap());
    assert_eq!(y, project_q0(&gy, &mesh, 4, 2).unwrap());
}

#[test]
fn direct_solve_matches_dense_factorization() {
    let mesh = Mesh::uniform_triangular(2).unwrap();
    let sig = WeakSpaceSignature::new(1, 0, 0);
    let case = ManufacturedCase::cospi_cospi();
    let params = SchemeParameters::new(1.0, 0.0);
    let system = assemble(&mesh, sig, &params, &case.source(gwg::assembly::IDENTITY), &case.boundary()).unwrap();
    let dense = Cholesky::new(system.matrix.to_dense()).expect("positive definite");
    let want = dense.solve(&DVector::from_column_slice(&system.rhs));
    for solver in [Solver::Direct, Solver::ConjugateGradient] {
        let uh = solve(&system, solver).unwrap();
        let got: Vec<f64> = system.free.iter().map(|&g| uh.coeffs[g]).collect();
        let diff = (DVector::from_vec(got) - &want).amax();
        assert!(diff <= 1e-10 * want.amax(), "{solver:?}: {diff:e}");
    }
    // Dirichlet DoFs carry the projected boundary data
    let uh = solve(&system, Solver::Direct).unwrap();
    let map = GlobalDofMap::new(&mesh, sig);
    for &(g, v) in &system.dirichlet {
        assert_eq!(uh.coeffs[g], v);
    }
    assert_eq!(system.free.len() + system.dirichlet.len(), map.total());
}

fn unstabilized(family: MeshFamily, labels: Vec<usize>) -> Study {
    Study {
        case: ManufacturedCase::x2_cospi(),
        family,
        labels,
        signature: WeakSpaceSignature::new(2, 1, 3),
        params: SchemeParameters::new(0.0, -1.0),
        solver: Solver::Direct,
        homogeneous: false,
    }
}

#[test]
fn unstabilized_element_matches_reference_rectangular_errors() {
    let r = run_convergence_study(&unstabilized(MeshFamily::Rectangular, vec![16, 32])).unwrap();
    for (level, want) in r.levels.iter().zip([2.04e-5, 2.55e-6]) {
        assert!((level.energy / want - 1.0).abs() < 0.01, "{level:?}");
    }
}

#[test]
fn unstabilized_element_solves_on_triangles() {
    // Triangles do not show the rectangular superconvergence: one order less.
    let r = run_convergence_study(&unstabilized(MeshFamily::Triangular, vec![8, 16])).unwrap();
    let [e, l2, b] = r.final_rates().map(Option::unwrap);
    assert!(
        (e - 2.0).abs() < 0.1 && (l2 - 3.0).abs() < 0.15 && (b - 3.0).abs() < 0.2,
        "{e} {l2} {b}"
    );
}
