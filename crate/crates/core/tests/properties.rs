use proptest::prelude::*;

use datasim::crossmatch::{cross_counts, min_weight_matching, MatchPolicy};
use datasim::data::{pool, CategoricalDataset};
use datasim::distances::{dataset_distances, hamming, DistanceMatrix, Metric};
use datasim::outcome::Direction;
use datasim::pesr::{mcse, pesr};
use datasim::simgen::{generate, weights_for, Family, ScenarioSpec};
use datasim::simgraph::{build_graph, edge_counts, null_moments, GraphKind, GraphSpec, TieMode};

fn rows(n: usize, p: usize, arity: u32) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(prop::collection::vec(0..arity, p), n)
}

fn dataset(rows: &[Vec<u32>], arity: u32) -> CategoricalDataset {
    CategoricalDataset::from_rows(rows, arity).unwrap()
}

proptest! {
    #[test]
    fn hamming_triangle_inequality(t in rows(3, 6, 4)) {
        let ab = hamming(&t[0], &t[1]).unwrap();
        let bc = hamming(&t[1], &t[2]).unwrap();
        let ac = hamming(&t[0], &t[2]).unwrap();
        prop_assert!(ac <= ab + bc);
        prop_assert_eq!(ab, hamming(&t[1], &t[0]).unwrap());
    }

    #[test]
    fn binary_dummy_distance_squared_is_hamming(r in rows(8, 5, 2)) {
        let d = dataset(&r, 2);
        let h = dataset_distances(&d, Metric::Hamming).unwrap();
        let e = dataset_distances(&d, Metric::EuclideanDummy).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                prop_assert!((e.get(i, j).powi(2) - h.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_counts_sum_to_total_weight(
        r in rows(14, 3, 3),
        k in 1usize..4,
        mst in any::<bool>(),
        average in any::<bool>(),
    ) {
        let d1 = dataset(&r[..7], 3);
        let d2 = dataset(&r[7..], 3);
        let pooled = pool(&[d1, d2]).unwrap();
        let dm = datasim::distances::distance_matrix(&pooled, Metric::Hamming).unwrap();
        let kind = if mst { GraphKind::Mst } else { GraphKind::Nn };
        let tie = if average { TieMode::Average } else { TieMode::Union };
        let g = build_graph(&dm, GraphSpec::new(kind, k, tie)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in &g.edges {
            prop_assert!(e.u != e.v);
            prop_assert!(e.w > 0.0 && e.w <= 1.0);
            prop_assert!(seen.insert((e.u.min(e.v), e.u.max(e.v))));
        }
        let c = edge_counts(&g, pooled.membership()).unwrap();
        prop_assert!((c.r + c.r1 + c.r2 - g.total_weight()).abs() < 1e-9);
        let m = null_moments(&g, 7, 7).unwrap();
        let tol = 1e-7 * g.total_weight().powi(2).max(1.0);
        prop_assert!(m.var_r1 >= -tol && m.var_r2 >= -tol);
        prop_assert!(m.var_r1 * m.var_r2 - m.cov_r12 * m.cov_r12 >= -tol * tol.max(1.0));
    }

    #[test]
    fn matching_is_perfect_and_counts_cover_pairs(r in rows(11, 3, 3)) {
        let d1 = dataset(&r[..5], 3);
        let d2 = dataset(&r[5..], 3);
        let pooled = pool(&[d1, d2]).unwrap();
        let dm = datasim::distances::distance_matrix(&pooled, Metric::EuclideanDummy).unwrap();
        let m = min_weight_matching(&dm, MatchPolicy::Deterministic).unwrap();
        prop_assert_eq!(m.pairs.len(), 5);
        prop_assert!(m.unmatched.is_some());
        let mut used = vec![false; 11];
        for &(a, b) in &m.pairs {
            prop_assert!(!used[a] && !used[b]);
            used[a] = true;
            used[b] = true;
        }
        let c = cross_counts(&m, pooled.membership(), 2);
        let mut upper = 0;
        for i in 0..2 {
            for j in i..2 {
                upper += c.counts[i][j];
            }
        }
        prop_assert_eq!(upper, 5);
    }

    #[test]
    fn pesr_lies_in_unit_interval(
        null in prop::collection::vec(-5.0f64..5.0, 20..60),
        alt in prop::collection::vec(-5.0f64..5.0, 20..60),
        high in any::<bool>(),
    ) {
        let dir = if high { Direction::HighMeansSimilar } else { Direction::LowMeansSimilar };
        let n: Vec<Option<f64>> = null.into_iter().map(Some).collect();
        let a: Vec<Option<f64>> = alt.into_iter().map(Some).collect();
        let e = pesr(&n, &a, dir).unwrap();
        let p = e.pesr.unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(e.n_valid + e.n_missing, a.len());
        prop_assert!((e.mcse.unwrap() - mcse(p, e.n_valid)).abs() < 1e-15);
    }

    #[test]
    fn pesr_grows_when_alternative_shifts_away(
        null in prop::collection::vec(-3.0f64..3.0, 40),
        alt in prop::collection::vec(-3.0f64..3.0, 40),
        shift in 0.0f64..4.0,
    ) {
        let n: Vec<Option<f64>> = null.into_iter().map(Some).collect();
        let a: Vec<Option<f64>> = alt.iter().copied().map(Some).collect();
        let shifted: Vec<Option<f64>> = alt.iter().map(|x| Some(x + shift)).collect();
        let base = pesr(&n, &a, Direction::LowMeansSimilar).unwrap().pesr.unwrap();
        let more = pesr(&n, &shifted, Direction::LowMeansSimilar).unwrap().pesr.unwrap();
        prop_assert!(more >= base);
        let down: Vec<Option<f64>> = alt.iter().map(|x| Some(x - shift)).collect();
        let base = pesr(&n, &a, Direction::HighMeansSimilar).unwrap().pesr.unwrap();
        let more = pesr(&n, &down, Direction::HighMeansSimilar).unwrap().pesr.unwrap();
        prop_assert!(more >= base);
    }

    #[test]
    fn pesr_missing_iff_over_exclusion_threshold(missing in 0usize..40) {
        let null: Vec<Option<f64>> = (0..100).map(|i| Some(i as f64)).collect();
        let alt: Vec<Option<f64>> = (0..100).map(|i| (i >= missing).then_some(i as f64)).collect();
        let e = pesr(&null, &alt, Direction::LowMeansSimilar).unwrap();
        prop_assert_eq!(e.pesr.is_none(), missing > 20);
        prop_assert_eq!(e.n_missing, missing);
    }

    #[test]
    fn weights_are_positive_and_normalized(
        delta in 0.05f64..0.7,
        family in 0usize..3,
        arity in 3u32..6,
        j in 0usize..2,
    ) {
        let f = match family {
            0 => Family::Skewed(delta),
            1 => Family::OneUpOneDown(delta),
            _ => Family::Null,
        };
        let spec = ScenarioSpec::new(2, 100, 3, arity, f);
        let w = weights_for(&spec, j).unwrap();
        prop_assert!(w.weights().iter().all(|&x| x > 0.0));
        let s: f64 = w.probabilities().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), rep in 0usize..50) {
        let mut spec = ScenarioSpec::new(2, 40, 3, 3, Family::Skewed(0.5));
        spec.seed = seed;
        let a = generate(&spec, rep).unwrap();
        let b = generate(&spec, rep).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a[0].n() + a[1].n(), 40);
    }

    #[test]
    fn distance_matrix_is_symmetric_with_zero_diagonal(r in rows(9, 4, 3)) {
        let d = dataset(&r, 3);
        let m: DistanceMatrix = dataset_distances(&d, Metric::Hamming).unwrap();
        for i in 0..9 {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..9 {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }
}
