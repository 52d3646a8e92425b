use datasim::crossmatch::{crossmatch_null_moments, min_weight_matching, MatchPolicy};
use datasim::distances::DistanceMatrix;
use datasim::oracles::{
    brute_force_matching, cross_count_moments, edge_count_moments, layered_mst_union, optimal_graphs, union_of,
    OracleGraph,
};
use datasim::otdd::transport::{sinkhorn, transport_exact};
use datasim::simgraph::{build_graph, null_moments, Edge, GraphKind, GraphSpec, SimilarityGraph, TieMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
    SimilarityGraph::from_edges(n, edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect()).unwrap()
}

#[test]
fn path_of_four_expected_cross_edges() {
    let edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)];
    let o = edge_count_moments(4, &edges, 2).unwrap();
    assert_eq!(o.assignments, 6);
    assert!((o.mean[0] - 2.0).abs() < 1e-12);
    let p = null_moments(&graph(4, &edges), 2, 2).unwrap();
    assert!((p.e_r - 2.0).abs() < 1e-12);
    assert!((p.var_r - o.var[0]).abs() < 1e-12);
}

#[test]
fn complete_graph_has_fixed_within_counts() {
    for n in 4..=7 {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, 1.0));
            }
        }
        for n1 in 1..n {
            let o = edge_count_moments(n, &edges, n1).unwrap();
            let p = null_moments(&graph(n, &edges), n1, n - n1).unwrap();
            assert!(o.var[1].abs() < 1e-12 && o.var[2].abs() < 1e-12 && o.cov_r1_r2.abs() < 1e-12);
            assert!(p.var_r1.abs() <= p.eps() && p.var_r2.abs() <= p.eps() && p.cov_r12.abs() <= p.eps());
        }
    }
}

#[test]
fn weighted_random_graphs_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let n = rng.gen_range(4..=8);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.4) {
                    edges.push((u, v, rng.gen_range(0.05..=1.0)));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        let g = graph(n, &edges);
        for n1 in 1..n {
            let o = edge_count_moments(n, &edges, n1).unwrap();
            let p = null_moments(&g, n1, n - n1).unwrap();
            for (a, b) in [
                (o.mean[0], p.e_r),
                (o.mean[1], p.e_r1),
                (o.var[0], p.var_r),
                (o.var[1], p.var_r1),
                (o.var[2], p.var_r2),
                (o.cov_r1_r2, p.cov_r12),
            ] {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn equidistant_triangle_tree_union() {
    let d = vec![0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0, 2.0, 0.0];
    let trees = optimal_graphs(3, &d, OracleGraph::Mst, 1).unwrap();
    let union = union_of(&trees);
    assert_eq!(union.len(), 2);
    let dm = DistanceMatrix::from_raw(3, d.clone()).unwrap();
    let g = build_graph(&dm, GraphSpec::new(GraphKind::Mst, 1, TieMode::Union)).unwrap();
    let got: std::collections::BTreeSet<(usize, usize)> = g.edges.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
    assert_eq!(got, union);
    assert_eq!(layered_mst_union(3, &d, 1).unwrap(), union);
}

#[test]
fn distinct_distances_give_one_tree_with_unit_weights() {
    let d = vec![
        0.0, 1.0, 4.0, 6.0, //
        1.0, 0.0, 2.0, 5.0, //
        4.0, 2.0, 0.0, 3.0, //
        6.0, 5.0, 3.0, 0.0,
    ];
    assert_eq!(optimal_graphs(4, &d, OracleGraph::Mst, 1).unwrap().len(), 1);
    let dm = DistanceMatrix::from_raw(4, d).unwrap();
    for tie in [TieMode::Union, TieMode::Average] {
        let g = build_graph(&dm, GraphSpec::new(GraphKind::Mst, 1, tie)).unwrap();
        assert_eq!(g.edges.len(), 3);
        assert!(g.edges.iter().all(|e| e.w == 1.0));
    }
}

#[test]
fn blossom_matches_brute_force_on_integer_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(2..=10);
        let mut d = vec![0.0; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let x = rng.gen_range(1..6) as f64;
                d[u * n + v] = x;
                d[v * n + u] = x;
            }
        }
        let brute = brute_force_matching(n, &d).unwrap();
        let dm = DistanceMatrix::from_raw(n, d).unwrap();
        for policy in [MatchPolicy::Deterministic, MatchPolicy::Permuted(3)] {
            assert_eq!(min_weight_matching(&dm, policy).unwrap().weight, brute);
        }
    }
}

#[test]
fn cross_moments_for_three_samples() {
    for sizes in [vec![2, 2, 2], vec![3, 2, 1], vec![4, 3, 1], vec![2, 3, 3]] {
        let n: usize = sizes.iter().sum();
        let pairs: Vec<(usize, usize)> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
        let (om, oc) = cross_count_moments(&pairs, &sizes).unwrap();
        let (pm, pc) = crossmatch_null_moments(&sizes, n / 2);
        for i in 0..om.len() {
            assert!((om[i] - pm[i]).abs() < 1e-10);
            for j in 0..om.len() {
                assert!((oc[i][j] - pc[i][j]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn exact_transport_and_sinkhorn_agree_on_small_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..5));
        let supply: Vec<i64> = (0..m).map(|_| rng.gen_range(1..6)).collect();
        let total: i64 = supply.iter().sum();
        let mut demand = vec![1i64; n];
        for _ in n as i64..total.max(n as i64) {
            demand[rng.gen_range(0..n)] += 1;
        }
        let dsum: i64 = demand.iter().sum();
        let mut supply = supply;
        supply[0] += dsum - total;
        let cost: Vec<f64> = (0..m * n).map(|_| rng.gen_range(0..5) as f64).collect();
        let exact = transport_exact(&supply, &demand, &cost).unwrap();
        let oracle = datasim::oracles::transport_vertex_enumeration(
            &supply.iter().map(|&x| x as f64 / dsum as f64).collect::<Vec<_>>(),
            &demand.iter().map(|&x| x as f64 / dsum as f64).collect::<Vec<_>>(),
            &cost,
        )
        .unwrap();
        assert!((exact.cost - oracle).abs() < 1e-9, "{} vs {oracle}", exact.cost);
        for i in 0..m {
            let row: f64 = exact.entries.iter().filter(|e| e.0 == i).map(|e| e.2).sum();
            assert!((row - supply[i] as f64 / dsum as f64).abs() < 1e-8);
        }
        let a: Vec<f64> = supply.iter().map(|&x| x as f64 / dsum as f64).collect();
        let b: Vec<f64> = demand.iter().map(|&x| x as f64 / dsum as f64).collect();
        let s = sinkhorn(&a, &b, &cost, 0.01).unwrap();
        let trace = &s.dual_trace;
        for w in trace.windows(2).skip(1) {
            assert!(w[1] >= w[0] - 1e-9, "dual objective decreased");
        }
        assert!(s.plan.cost >= exact.cost - 1e-5);
    }
}
