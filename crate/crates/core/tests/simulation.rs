use datasim::simgen::{
    attach_target, expand_grid, generate, is_standard_grid, ogm_coefficients, standard_deltas, standard_grid,
    weights_for, Family, Grouping, Ogm, ScenarioSpec,
};

fn code_frequencies(spec: &ScenarioSpec, dataset: usize, reps: usize) -> (Vec<f64>, usize) {
    let mut counts = vec![0usize; spec.arity as usize];
    let mut total = 0;
    for rep in 0..reps {
        let d = &generate(spec, rep).unwrap()[dataset];
        for &v in d.values() {
            counts[v as usize] += 1;
            total += 1;
        }
    }
    (counts.iter().map(|&c| c as f64 / total as f64).collect(), total)
}

#[test]
fn null_binary_codes_are_fair() {
    let spec = ScenarioSpec::new(2, 1000, 10, 2, Family::Null);
    let (freq, total) = code_frequencies(&spec, 1, 2);
    assert!(total >= 10_000);
    let se = (0.25 / total as f64).sqrt();
    assert!((freq[1] - 0.5).abs() < 4.0 * se, "{freq:?}");
}

#[test]
fn skewed_unit_shift_matches_linear_weights() {
    let spec = ScenarioSpec::new(2, 1000, 10, 5, Family::Skewed(1.0));
    let (freq, total) = code_frequencies(&spec, 1, 2);
    for (c, f) in freq.iter().enumerate() {
        let expect = (c + 1) as f64 / 15.0;
        let se = (expect * (1.0 - expect) / total as f64).sqrt();
        assert!((f - expect).abs() < 4.0 * se, "code {c}: {f} vs {expect}");
    }
    let (base, _) = code_frequencies(&spec, 0, 2);
    assert!(base.iter().all(|f| (f - 0.2).abs() < 0.02), "{base:?}");
}

#[test]
fn binary_shift_weights() {
    let spec = ScenarioSpec::new(2, 100, 2, 2, Family::BinaryShift(0.5));
    assert_eq!(weights_for(&spec, 0).unwrap().weights(), &[1.0, 1.0]);
    assert_eq!(weights_for(&spec, 1).unwrap().weights(), &[1.0, 1.5]);
}

#[test]
fn updown_moves_the_last_two_codes() {
    let spec = ScenarioSpec::new(2, 100, 2, 5, Family::OneUpOneDown(0.3));
    let w = weights_for(&spec, 1).unwrap();
    assert_eq!(w.weights(), &[1.0, 1.0, 1.0, 1.3, 0.7]);
}

#[test]
fn four_sample_groupings_escalate() {
    let mut spec = ScenarioSpec::new(4, 200, 2, 5, Family::Skewed(0.2));
    spec.grouping = Some(Grouping::OneOneOneOne);
    let slopes: Vec<f64> = (0..4).map(|j| weights_for(&spec, j).unwrap().weights()[1] - 1.0).collect();
    let expect = [0.0, 0.2, 0.3, 0.4];
    for (s, e) in slopes.iter().zip(expect) {
        assert!((s - e).abs() < 1e-12, "{slopes:?}");
    }
    spec.grouping = Some(Grouping::TwoTwo);
    let slopes: Vec<f64> = (0..4).map(|j| weights_for(&spec, j).unwrap().weights()[1] - 1.0).collect();
    assert_eq!(slopes[0], slopes[1]);
    assert_eq!(slopes[2], slopes[3]);
    assert!(slopes[2] > 0.0);
}

/// Every standard cell either constructs, or fails because one of its
/// up/down weights would not be positive.
#[test]
fn standard_grid_cells() {
    let grid = standard_grid(10, 7);
    assert!(!grid.is_empty());
    let mut rejected = Vec::new();
    for spec in &grid {
        assert!(is_standard_grid(spec), "{}", spec.id());
        let nonpositive = matches!(spec.family, Family::OneUpOneDown(_))
            && (0..spec.k).any(|j| weights_for(spec, j).is_err());
        match spec.validate() {
            Ok(()) => {
                assert!(!nonpositive, "{}", spec.id());
                let data = generate(spec, 0).unwrap();
                assert_eq!(data.len(), spec.k);
                assert_eq!(data.iter().map(|d| d.n()).sum::<usize>(), spec.n_total);
                assert!(data.iter().all(|d| d.p() == spec.p));
            }
            Err(_) => {
                assert!(nonpositive, "{} rejected for another reason", spec.id());
                rejected.push(spec.id());
            }
        }
    }
    for id in &rejected {
        assert!(id.starts_with("k4-") && id.contains("updown"), "{id}");
        assert!(id.contains("g2+1+1") || id.contains("g1+1+1+1"), "{id}");
    }
    assert!(rejected.iter().any(|id| id.contains("updown:0.9") && id.contains("g2+1+1")));
    assert!(rejected.iter().any(|id| id.contains("updown:0.8") && id.contains("g1+1+1+1")));
    assert!(!rejected.iter().any(|id| id.contains("updown:0.7")));
}

#[test]
fn standard_delta_lists() {
    assert_eq!(standard_deltas("binary", 2).len(), 12);
    assert_eq!(standard_deltas("skewed", 2), vec![0.1, 0.2, 0.3, 0.4, 0.5, 1.0]);
    assert_eq!(standard_deltas("skewed", 4).len(), 10);
    assert_eq!(standard_deltas("updown", 2).len(), 9);
}

#[test]
fn outcome_model_variants() {
    let width = 8;
    let (b0, truth) = ogm_coefficients(width, Ogm::True, 1);
    assert_eq!(b0, -0.5);
    let (_, size) = ogm_coefficients(width, Ogm::WrongSize, 1);
    let (_, sign) = ogm_coefficients(width, Ogm::WrongSign, 1);
    let (_, coef) = ogm_coefficients(width, Ogm::WrongCoef, 1);
    for i in 0..width {
        assert_eq!(size[i].signum(), truth[i].signum());
        assert!(size[i].abs() < truth[i].abs());
        assert_eq!(sign[i], -truth[i]);
        if i < width / 2 {
            assert_eq!(coef[i], 0.0);
        } else {
            assert!(coef[i] != 0.0);
        }
    }
    assert_eq!(ogm_coefficients(width, Ogm::WrongCoef, 0), (b0, truth));
}

#[test]
fn targets_follow_the_logistic_model() {
    let mut spec = ScenarioSpec::new(2, 4000, 2, 2, Family::Null);
    spec.ogm = Ogm::True;
    let data = generate(&spec, 0).unwrap();
    for d in &data {
        let t = d.target().unwrap();
        let rows_00: Vec<usize> = (0..d.n()).filter(|&i| d.row(i) == [0, 0]).collect();
        let rate = rows_00.iter().filter(|&&i| t[i] == 1).count() as f64 / rows_00.len() as f64;
        let expect = 1.0 / (1.0 + 0.5f64.exp());
        let se = (expect * (1.0 - expect) / rows_00.len() as f64).sqrt();
        assert!((rate - expect).abs() < 4.0 * se, "{rate} vs {expect}");
    }
    let bare = generate(&ScenarioSpec::new(2, 100, 2, 2, Family::Null), 0).unwrap();
    assert!(attach_target(bare.clone(), Ogm::True, 1).is_ok());
    assert!(attach_target(bare[..1].to_vec(), Ogm::True, 1).is_err());
}

#[test]
fn grid_files_expand_to_valid_scenarios() {
    let text = "k = 2\nN = [100, 200]\np = 10\narity = [2, 5]\nfamily = \"binary\"\ndelta = [0.5, 1.0]\n";
    let specs = expand_grid(text).unwrap();
    assert_eq!(specs.len(), 4);
    assert!(specs.iter().all(|s| s.arity == 2));
    let json = r#"{"k": 4, "N": 200, "family": "skewed", "delta": 0.3, "arity": 3, "grouping": ["3+1", "2+2"]}"#;
    assert_eq!(expand_grid(json).unwrap().len(), 2);
}

#[test]
fn scenario_ids_are_distinct_across_the_grid() {
    let grid = standard_grid(1, 1);
    let mut ids: Vec<String> = grid.iter().map(ScenarioSpec::id).collect();
    let n = ids.len();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), n);
}
