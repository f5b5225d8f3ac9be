use gwg::assembly::solver::{solve_cg, solve_direct, CscMatrix};
use gwg::assembly::{build_local_operators, energies, SchemeParameters};
use gwg::field::Point;
use gwg::mesh::Mesh;
use gwg::verify::rate;
use gwg::weakspace::{project_qh, GlobalDofMap, WeakFunction, WeakSpaceSignature};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn mesh_strategy() -> impl Strategy<Value = Mesh> {
    prop_oneof![
        (1usize..9).prop_map(|n| Mesh::uniform_triangular(n).unwrap()),
        (0u32..3).prop_map(|l| Mesh::uniform_rectangular(l).unwrap()),
    ]
}

fn signature_strategy() -> impl Strategy<Value = WeakSpaceSignature> {
    (0usize..4, 0usize..4, 0usize..4).prop_map(|(k, j, l)| WeakSpaceSignature::new(k, j, l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_geometry_invariants(mesh in mesh_strategy()) {
        mesh.validate().unwrap();
        let mut area = 0.0;
        for e in 0..mesh.num_elements() {
            let g = mesh.geometry(e).unwrap();
            area += g.area;
            let mut s = [0.0, 0.0];
            for (n, l) in g.normals.iter().zip(&g.lengths) {
                prop_assert!((n[0].hypot(n[1]) - 1.0).abs() <= 1e-14);
                s[0] += l * n[0];
                s[1] += l * n[1];
            }
            prop_assert!(s[0].abs() <= 1e-12 && s[1].abs() <= 1e-12);
        }
        prop_assert!((area - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn projection_reproduces_low_degree_polynomials(
        sig in signature_strategy(),
        c in prop::array::uniform6(-2.0f64..2.0),
    ) {
        let mesh = Mesh::uniform_triangular(3).unwrap();
        let d = sig.k.min(sig.j).min(2);
        let f = move |p: Point| {
            let q = c[0] + c[1] * p[0] + c[2] * p[1];
            if d >= 2 { q + c[3] * p[0] * p[0] + c[4] * p[0] * p[1] + c[5] * p[1] * p[1] } else if d == 1 { q } else { c[0] }
        };
        let map = GlobalDofMap::new(&mesh, sig);
        let v = project_qh(&f, &mesh, sig).unwrap();
        for e in 0..mesh.num_elements() {
            let g = mesh.geometry(e).unwrap();
            let x = v.interior_value(&mesh, &map, e, g.centroid).unwrap();
            prop_assert!((x - f(g.centroid)).abs() <= 1e-11);
        }
        for e in 0..mesh.num_edges() {
            let [a, b] = mesh.edge_endpoints(e);
            let p = [0.3 * a[0] + 0.7 * b[0], 0.3 * a[1] + 0.7 * b[1]];
            prop_assert!((v.edge_value(&mesh, &map, e, p) - f(p)).abs() <= 1e-11);
        }
    }

    #[test]
    fn energies_are_nonnegative_quadratic(
        sig in signature_strategy(),
        seed in any::<u64>(),
        scale in -5.0f64..5.0,
        rho in 0.0f64..3.0,
        gamma in -2.0f64..2.0,
    ) {
        let mesh = Mesh::uniform_triangular(2).unwrap();
        let map = GlobalDofMap::new(&mesh, sig);
        let mut state = seed | 1;
        let coeffs = (0..map.total()).map(|_| {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            (state % 2001) as f64 / 1000.0 - 1.0
        }).collect();
        let v = WeakFunction { coeffs };
        let ops = build_local_operators(&mesh, sig, &SchemeParameters::new(rho, gamma)).unwrap();
        let (a, s) = energies(&ops, &v);
        prop_assert!(a >= 0.0 && s >= 0.0);
        let (a2, s2) = energies(&ops, &v.scaled(scale));
        let k = scale * scale;
        prop_assert!((a2 - k * a).abs() <= 1e-10 * (k * a).max(1e-300));
        prop_assert!((s2 - k * s).abs() <= 1e-10 * (k * s).max(1e-300));
    }

    #[test]
    fn sparse_solvers_match_dense(n in 2usize..30, seed in any::<u64>()) {
        let mut state = seed | 1;
        let mut next = || { state ^= state << 13; state ^= state >> 7; state ^= state << 17; (state % 1000) as f64 / 500.0 - 1.0 };
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if (i + 2 * j) % 3 == 0 || i == j { b[(i, j)] = next(); }
            }
        }
        let a = &b * b.transpose() + DMatrix::identity(n, n);
        let triplets = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| a[(i, j)] != 0.0).map(|(i, j)| (i, j, a[(i, j)])).collect();
        let csc = CscMatrix::from_triplets(n, triplets);
        let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
        let want = a.clone().cholesky().unwrap().solve(&DVector::from_column_slice(&rhs));
        let direct = DVector::from_vec(solve_direct(&csc, &rhs).unwrap());
        let cg = DVector::from_vec(solve_cg(&csc, &rhs, 1e-13, 20 * n + 100).unwrap());
        prop_assert!((direct - &want).amax() <= 1e-10 * want.amax());
        prop_assert!((cg - &want).amax() <= 1e-9 * want.amax());
    }

    #[test]
    fn rate_recovers_power_laws(p in -1.0f64..6.0, c in 1e-6f64..1e3, h in 0.01f64..0.5) {
        let r = rate(c * (2.0 * h).powf(p), c * h.powf(p), 2.0 * h, h).unwrap();
        prop_assert!((r - p).abs() <= 1e-9);
    }
}
