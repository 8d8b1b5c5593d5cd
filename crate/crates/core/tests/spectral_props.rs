use gsi_core::graph::{knn_graph, Graph, KnnWeighting};
use gsi_core::signal::{bl_energy, gft, inverse_gft, tv_l0, tv_l1, tv_l2, tv_l2_quadratic};
use gsi_core::spectral::{decompose_graph, ShiftOperator};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn weighted_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(
            prop_oneof![3 => Just(0.0), 2 => 0.05..3.0f64],
            n * (n - 1) / 2,
        )
        .prop_map(move |w| {
            let mut a = Array2::zeros((n, n));
            let mut it = w.into_iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = it.next().unwrap();
                    a[[i, j]] = v;
                    a[[j, i]] = v;
                }
            }
            Graph::from_adjacency(a).unwrap()
        })
    })
}

fn graph_and_signal(max_n: usize) -> impl Strategy<Value = (Graph, Array1<f64>)> {
    weighted_graph(max_n).prop_flat_map(|g| {
        let n = g.n_nodes();
        (
            Just(g),
            proptest::collection::vec(-3.0..3.0f64, n).prop_map(Array1::from),
        )
    })
}

/// Union-find component count, independent of the library's traversal.
fn components_oracle(g: &Graph) -> usize {
    let n = g.n_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (i, j, _) in g.edges() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_psd_with_zero_row_sums(g in weighted_graph(24)) {
        let l = g.laplacian();
        for row in l.rows() {
            prop_assert!(row.sum().abs() <= 1e-12);
        }
        let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
        prop_assert!(sd.eigenvalues().iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn decomposition_reconstructs(g in weighted_graph(64), adjacency in any::<bool>()) {
        let op = if adjacency { ShiftOperator::Adjacency } else { ShiftOperator::Laplacian };
        let m = op.matrix(&g);
        let sd = decompose_graph(&g, op).unwrap();
        let v = sd.eigenvectors();
        let rebuilt = (v * sd.eigenvalues()).dot(&v.t());
        let resid = (&rebuilt - &m).iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        prop_assert!(resid <= 1e-7, "residual {resid}");
        let gram = v.t().dot(v);
        let ortho = (&gram - &Array2::<f64>::eye(g.n_nodes())).iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        prop_assert!(ortho <= 1e-9, "orthogonality {ortho}");
        prop_assert!(sd.eigenvalues().windows(2).into_iter().all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_eigenvalues_count_components(g in weighted_graph(20)) {
        let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
        let zeros = sd.eigenvalues().iter().filter(|&&v| v.abs() < 1e-8).count();
        let expected = components_oracle(&g);
        prop_assert_eq!(zeros, expected);
        prop_assert_eq!(g.n_components(), expected);
    }

    #[test]
    fn tv_spectral_identity((g, x) in graph_and_signal(32)) {
        let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
        let coeffs = gft(&sd, x.view()).unwrap();
        let spectral: f64 = sd.eigenvalues().iter().zip(&coeffs).map(|(l, c)| l * c * c).sum();
        let tv = tv_l2(&g, x.view()).unwrap();
        prop_assert!((tv - spectral).abs() <= 1e-8 * (1.0 + tv.abs()), "{tv} vs {spectral}");
        prop_assert!((tv - tv_l2_quadratic(&g, x.view()).unwrap()).abs() <= 1e-9 * (1.0 + tv));
        let back = inverse_gft(&sd, coeffs.view()).unwrap();
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9));
    }

    #[test]
    fn total_variation_ignores_constant_shift((g, x) in graph_and_signal(24), c in -5.0..5.0f64) {
        let shifted = &x + c;
        let a = tv_l2(&g, x.view()).unwrap();
        let b = tv_l2(&g, shifted.view()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        let a1 = tv_l1(&g, x.view()).unwrap();
        let b1 = tv_l1(&g, shifted.view()).unwrap();
        prop_assert!((a1 - b1).abs() <= 1e-9 * (1.0 + a1));
        prop_assert!(a >= 0.0 && a1 >= 0.0);
    }

    #[test]
    fn constant_signals_have_zero_variation(g in weighted_graph(24), c in -5.0..5.0f64) {
        let x = Array1::from_elem(g.n_nodes(), c);
        prop_assert_eq!(tv_l2(&g, x.view()).unwrap(), 0.0);
        prop_assert_eq!(tv_l1(&g, x.view()).unwrap(), 0.0);
        prop_assert_eq!(tv_l0(&g, x.view(), 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn bandlimited_energy_is_monotone((g, x) in graph_and_signal(24)) {
        let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
        let n = g.n_nodes();
        let energies: Vec<f64> = (0..=n).map(|k| bl_energy(&sd, x.view(), k).unwrap()).collect();
        prop_assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!(energies[n].abs() <= 1e-12);
        let total = x.dot(&x);
        prop_assert!((energies[0] - total).abs() <= 1e-9 * (1.0 + total));
    }

    #[test]
    fn knn_output_is_a_valid_graph(
        n in 3usize..30,
        k_frac in 0.0..1.0f64,
        coords in proptest::collection::vec(-10.0..10.0f64, 60),
        inverse in any::<bool>(),
    ) {
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let points = Array2::from_shape_vec((n, 2), coords[..2 * n].to_vec()).unwrap();
        let weighting = if inverse { KnnWeighting::InverseDistance } else { KnnWeighting::Binary };
        let g = match knn_graph(points.view(), k, weighting) {
            Ok(g) => g,
            // Coincident points cannot get inverse-distance weights.
            Err(gsi_core::Error::DuplicatePoints(..)) if inverse => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let a = g.adjacency();
        for i in 0..n {
            prop_assert_eq!(a[[i, i]], 0.0);
            let degree = a.row(i).iter().filter(|&&w| w > 0.0).count();
            prop_assert!(degree >= k);
            for j in 0..n {
                prop_assert_eq!(a[[i, j]], a[[j, i]]);
                prop_assert!(a[[i, j]] >= 0.0 && a[[i, j]].is_finite());
                if !inverse {
                    prop_assert!(a[[i, j]] == 0.0 || a[[i, j]] == 1.0);
                }
            }
        }
    }
}
