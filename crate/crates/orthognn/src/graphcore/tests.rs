use super::*;
use proptest::prelude::*;
use std::io::Write;

fn k2() -> Graph {
    build_graph(&[(0, 1)], 2, SelfLoopPolicy::Reject).unwrap()
}

fn triangle() -> Graph {
    build_graph(&[(0, 1), (1, 2), (0, 2)], 3, SelfLoopPolicy::Reject).unwrap()
}

#[test]
fn single_edge_graph() {
    let g = k2();
    assert_eq!(g.edges(), &[(0, 1)]);
    assert_eq!(g.degrees(), vec![1, 1]);
}

#[test]
fn symmetric_duplicates_collapse() {
    let g = build_graph(&[(0, 1), (1, 0)], 2, SelfLoopPolicy::Reject).unwrap();
    assert_eq!(g.edges().len(), 1);
}

#[test]
fn endpoint_out_of_range_rejected() {
    let err = build_graph(&[(0, 5)], 3, SelfLoopPolicy::Reject).unwrap_err();
    assert!(matches!(err, GraphError::EndpointOutOfRange { u: 0, v: 5, n: 3 }));
}

#[test]
fn self_loop_policy() {
    let err = build_graph(&[(2, 2)], 3, SelfLoopPolicy::Reject).unwrap_err();
    assert!(matches!(err, GraphError::SelfLoop { node: 2 }));
    let g = build_graph(&[(2, 2), (0, 1)], 3, SelfLoopPolicy::Drop).unwrap();
    assert_eq!(g.edges(), &[(0, 1)]);
}

#[test]
fn rebuilding_from_own_edges_is_identity() {
    let g = triangle();
    let g2 = build_graph(g.edges(), g.n(), SelfLoopPolicy::Reject).unwrap();
    assert_eq!(g.edges(), g2.edges());
    assert_eq!(g.n(), g2.n());
}

#[test]
fn k2_propagation_matrix() {
    let p = propagation_matrix(&k2(), false).unwrap();
    let d = p.to_dense();
    assert_eq!(d[(0, 0)], 0.0);
    assert_eq!(d[(0, 1)], 1.0);
    assert_eq!(d[(1, 0)], 1.0);
    assert_eq!(d[(1, 1)], 0.0);
}

#[test]
fn triangle_propagation_entries_are_half() {
    // Degrees are all 2, so off-diagonal entries are 1/sqrt(2*2).
    let p = propagation_matrix(&triangle(), false).unwrap();
    let d = p.to_dense();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 0.0 } else { 0.5 };
            assert_eq!(d[(i, j)], want);
        }
    }
}

#[test]
fn isolated_node_is_an_error() {
    let g = build_graph(&[(0, 1)], 3, SelfLoopPolicy::Reject).unwrap();
    let err = propagation_matrix(&g, false).unwrap_err();
    assert!(matches!(err, GraphError::IsolatedNode { node: 2 }));
    // Self-loops rescue it.
    assert!(propagation_matrix(&g, true).is_ok());
}

#[test]
fn spmv_identity_and_swap() {
    let id = SparseMatrix::identity(4);
    let x = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]]);
    assert_eq!(spmv(&id, &x).unwrap(), x);

    let p = propagation_matrix(&k2(), false).unwrap();
    let x = Mat::column(&[1.0, 0.0]);
    let y = spmv(&p, &x).unwrap();
    assert_eq!(y.data(), &[0.0, 1.0]);
}

#[test]
fn spmv_constant_vector_on_regular_graph() {
    // Row sums of P are exactly 1 on a d-regular graph.
    let p = propagation_matrix(&triangle(), false).unwrap();
    let ones = Mat::column(&[1.0, 1.0, 1.0]);
    let y = spmv(&p, &ones).unwrap();
    assert_eq!(y.data(), &[1.0, 1.0, 1.0]);
}

#[test]
fn spmv_dimension_mismatch() {
    let p = propagation_matrix(&k2(), false).unwrap();
    let x = Mat::column(&[1.0, 2.0, 3.0]);
    assert!(matches!(
        spmv(&p, &x),
        Err(GraphError::DimensionMismatch { got: 3, expected: 2 })
    ));
}

#[test]
fn grid_graph_counts() {
    let img = GrayImage::new(2, 2, vec![0, 64, 128, 255]);
    let (g, signal) = grid_graph_from_image(&img).unwrap();
    assert_eq!(g.n(), 4);
    assert_eq!(g.edges().len(), 4);
    assert!((signal[(3, 0)] - 1.0).abs() < 1e-15);
    assert_eq!(signal[(0, 0)], 0.0);

    let img3 = GrayImage::new(3, 3, vec![10; 9]);
    let (g3, _) = grid_graph_from_image(&img3).unwrap();
    assert_eq!(g3.edges().len(), 12);
}

#[test]
fn grid_graph_edge_count_formula_exhaustive() {
    for h in 2..=16usize {
        for w in 2..=16usize {
            let img = GrayImage::new(h, w, vec![7; h * w]);
            let (g, _) = grid_graph_from_image(&img).unwrap();
            assert_eq!(g.edges().len(), h * (w - 1) + w * (h - 1), "h={h} w={w}");
        }
    }
}

#[test]
fn all_zero_image_gives_zero_signal() {
    let img = GrayImage::new(2, 2, vec![0; 4]);
    let (_, signal) = grid_graph_from_image(&img).unwrap();
    assert!(signal.data().iter().all(|&v| v == 0.0));
}

#[test]
fn tiny_images_rejected() {
    let img = GrayImage::new(1, 5, vec![0; 5]);
    assert!(matches!(
        grid_graph_from_image(&img),
        Err(GraphError::ImageTooSmall { height: 1, width: 5 })
    ));
}

#[test]
fn load_dataset_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    std::fs::write(&edges, "0 1\n1 2\n0 2\n").unwrap();
    let g = load_dataset(&edges, None, None, false).unwrap();
    assert_eq!(g.n(), 3);
    assert_eq!(g.edges().len(), 3);
}

#[test]
fn load_dataset_feature_row_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    std::fs::write(&edges, "0 1\n1 2\n").unwrap();
    let feats = dir.path().join("features.csv");
    std::fs::write(&feats, "1.0,0.0\n0.0,1.0\n").unwrap(); // 2 rows for 3 nodes
    let err = load_dataset(&edges, Some(&feats), None, false).unwrap_err();
    assert!(matches!(err, GraphError::CountMismatch { got: 2, expected: 3, .. }));
}

#[test]
fn load_dataset_label_class_gap() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    std::fs::write(&edges, "0 1\n1 2\n").unwrap();
    let labels = dir.path().join("labels.csv");
    // Classes {0, 2}: class 1 never occurs, so the [0, c) invariant fails.
    std::fs::write(&labels, "0\n2\n0\n").unwrap();
    let err = load_dataset(&edges, None, Some(&labels), false).unwrap_err();
    assert!(matches!(err, GraphError::EmptyClass { class: 1 }));
}

#[test]
fn load_dataset_parse_error_has_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    std::fs::write(&edges, "0 1\nnope 2\n").unwrap();
    let err = load_dataset(&edges, None, None, false).unwrap_err();
    match err {
        GraphError::Parse { line, .. } => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn pgm_ascii_and_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::new(3, 4, (0..12).map(|i| (i * 20) as u8).collect());

    let ascii = dir.path().join("a.pgm");
    write_pgm(&ascii, &img).unwrap();
    assert_eq!(read_pgm(&ascii).unwrap(), img);

    // Binary P5 with a comment line in the header.
    let binary = dir.path().join("b.pgm");
    let mut f = std::fs::File::create(&binary).unwrap();
    write!(f, "P5\n# comment\n4 3\n255\n").unwrap();
    f.write_all(&img.pixels).unwrap();
    drop(f);
    assert_eq!(read_pgm(&binary).unwrap(), img);
}

#[test]
fn pgm_wrong_maxval_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pgm");
    std::fs::write(&path, "P2\n2 2\n65535\n0 1 2 3\n").unwrap();
    assert!(read_pgm(&path).is_err());
}

proptest! {
    #[test]
    fn build_graph_idempotent(raw in proptest::collection::vec((0usize..20, 0usize..20), 0..60)) {
        let filtered: Vec<_> = raw.into_iter().filter(|(u, v)| u != v).collect();
        let g = build_graph(&filtered, 20, SelfLoopPolicy::Reject).unwrap();
        let g2 = build_graph(g.edges(), 20, SelfLoopPolicy::Reject).unwrap();
        prop_assert_eq!(g.edges(), g2.edges());
    }

    #[test]
    fn propagation_matrix_is_symmetric_with_unit_diagonal_scaling(
        raw in proptest::collection::vec((0usize..12, 0usize..12), 1..40),
        self_loops in proptest::bool::ANY,
    ) {
        let filtered: Vec<_> = raw.into_iter().filter(|(u, v)| u != v).collect();
        prop_assume!(!filtered.is_empty());
        let g = build_graph(&filtered, 12, SelfLoopPolicy::Reject).unwrap();
        if let Ok(p) = propagation_matrix(&g, self_loops) {
            let d = p.to_dense();
            for i in 0..12 {
                for j in 0..12 {
                    prop_assert_eq!(d[(i, j)], d[(j, i)]);
                }
            }
            // Rayleigh bound |xᵀPx| ≤ xᵀx follows from the spectrum
            // being inside [−1, 1]; spot-check with the all-ones vector.
            let ones = Mat::column(&vec![1.0; 12]);
            let y = spmv(&p, &ones).unwrap();
            let quad: f64 = y.data().iter().sum();
            prop_assert!(quad.abs() <= 12.0 + 1e-9);
        }
    }
}
