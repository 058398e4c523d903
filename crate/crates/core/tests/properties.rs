use lsamgdd::aggregation::{build_topology, multi_pass_aggregation, standard_aggregation};
use lsamgdd::mm::{read_matrix, write_matrix};
use lsamgdd::smoother::{SchwarzMode, SchwarzSmoother};
use lsamgdd::sparse::{dot, norm2, CsrMatrix, Pattern};
use lsamgdd::splitting::{compute_row_sets, verify_splitting};
use proptest::prelude::*;

fn sparse(rows: usize, cols: usize) -> impl Strategy<Value = CsrMatrix> {
    prop::collection::vec((0..rows, 0..cols, -2.0f64..2.0), 0..rows * cols)
        .prop_map(move |t| CsrMatrix::from_triplets(rows, cols, &t).unwrap())
}

/// A tall factor with a scaled identity block underneath, so `GᵀG` is SPD.
fn full_rank_factor() -> impl Strategy<Value = CsrMatrix> {
    (4usize..24).prop_flat_map(|n| {
        prop::collection::vec((0..2 * n, 0..n, -1.0f64..1.0), n..4 * n).prop_map(move |mut t| {
            t.extend((0..n).map(|j| (2 * n + j, j, 0.1)));
            CsrMatrix::from_triplets(3 * n, n, &t).unwrap()
        })
    })
}

fn normal(g: &CsrMatrix) -> CsrMatrix {
    g.transpose().spgemm(g, Pattern::Symbolic).unwrap()
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spgemm_matches_dense_product((a, b) in (1usize..8, 1usize..8, 1usize..8)
        .prop_flat_map(|(m, k, n)| (sparse(m, k), sparse(k, n))))
    {
        let expected = a.to_dense() * b.to_dense();
        for pattern in [Pattern::Symbolic, Pattern::Numeric] {
            let c = a.spgemm(&b, pattern).unwrap();
            prop_assert!((c.to_dense() - &expected).abs().max() <= 1e-12);
        }
        let symbolic = a.spgemm(&b, Pattern::Symbolic).unwrap();
        let numeric = a.spgemm(&b, Pattern::Numeric).unwrap();
        prop_assert!(symbolic.nnz() >= numeric.nnz());
    }

    #[test]
    fn transpose_is_an_involution_and_adjoint(a in sparse(7, 5), x in vector(5), y in vector(7)) {
        prop_assert_eq!(a.transpose().transpose().to_dense(), a.to_dense());
        let lhs = dot(&a.spmv(&x).unwrap(), &y);
        let rhs = dot(&x, &a.spmv_transpose(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn matrix_market_round_trip_is_exact(a in sparse(6, 9)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix(&path, &a).unwrap();
        let b = read_matrix(&path).unwrap();
        prop_assert_eq!((b.n_rows(), b.n_cols()), (6, 9));
        prop_assert_eq!(b.to_dense(), a.to_dense());
    }

    #[test]
    fn aggregation_covers_every_node(g in full_rank_factor(), passes in 1usize..3) {
        let a = normal(&g);
        let part = multi_pass_aggregation(&a, passes).unwrap();
        let assign = part.assignment.clone();
        prop_assert_eq!(assign.len(), a.n_rows());
        let members = part.members();
        prop_assert!(members.iter().all(|m| !m.is_empty()));
        prop_assert_eq!(members.iter().map(Vec::len).sum::<usize>(), a.n_rows());
    }

    #[test]
    fn splitting_reassembles_normal_matrix(g in full_rank_factor()) {
        let a = normal(&g);
        let part = standard_aggregation(&a).unwrap();
        let mut topo = build_topology(&a, &part).unwrap();
        let rows = compute_row_sets(&g, &mut topo).unwrap();
        prop_assert!(verify_splitting(&g, &a, &topo, &rows).unwrap() <= 1e-12);
        for (j, &m) in rows.multiplicity.iter().enumerate() {
            prop_assert_eq!(m == 0, g.row(j).0.is_empty());
        }
    }

    #[test]
    fn ras_transpose_is_the_adjoint_of_ras((g, x, y) in full_rank_factor()
        .prop_flat_map(|g| { let n = g.n_cols(); (Just(g), vector(n), vector(n)) }))
    {
        let a = normal(&g);
        let topo = build_topology(&a, &standard_aggregation(&a).unwrap()).unwrap();
        let s = SchwarzSmoother::new(&a, &topo).unwrap();
        let rx = s.apply(SchwarzMode::Ras, &x).unwrap();
        let ty = s.apply(SchwarzMode::RasTranspose, &y).unwrap();
        let scale = norm2(&rx) * norm2(&y) + norm2(&x) * norm2(&ty) + f64::MIN_POSITIVE;
        prop_assert!((dot(&rx, &y) - dot(&x, &ty)).abs() / scale <= 1e-12);
        let ax = s.apply(SchwarzMode::Asm, &x).unwrap();
        let ay = s.apply(SchwarzMode::Asm, &y).unwrap();
        prop_assert!((dot(&ax, &y) - dot(&x, &ay)).abs() <= 1e-10 * (1.0 + norm2(&ax) * norm2(&y)));
        prop_assert!(dot(&x, &ax) >= 0.0);
    }
}
