use approx::assert_relative_eq;
use fairalloc::ambiguity::{
    is_eps_feasible, is_vacuous, membership_slacks, worst_slack, AmbiguitySpec, MomentAmbiguity,
};
use fairalloc::model::Labels;
use fairalloc::presets::{toy_generator, toy_matrix, toy_scenarios, TWO_POINT_CONFIGS};
use fairalloc::scenarios::{
    generate, ingest_trace, sample_moments, write_scenarios_csv, Family, GeneratorSpec,
};
use fairalloc::{DiscreteDistribution, Error, Matrix, ScenarioSet};
use proptest::prelude::*;

fn scalar(v: f64) -> Matrix {
    Matrix::from_rows(&[vec![v]]).unwrap()
}

fn scalar_set(vals: &[f64]) -> ScenarioSet {
    ScenarioSet::new(vals.iter().map(|&v| scalar(v)).collect()).unwrap()
}

#[test]
fn two_point_generator_recovers_branches() {
    let spec = toy_generator(TWO_POINT_CONFIGS[0], 0.5, 2, 11);
    let sc = generate(&spec).unwrap();
    let mut got: Vec<f64> = sc.iter().map(|m| m.get(0, 1)).collect();
    got.sort_by(f64::total_cmp);
    assert_eq!(got, vec![0.5, 5.5]);
    let (exact, p) = toy_scenarios(TWO_POINT_CONFIGS[0], 0.5).unwrap();
    assert_eq!(exact.get(0), &toy_matrix(0.5, 0.5));
    assert_eq!(p.probs(), &[0.5, 0.5]);
}

#[test]
fn degenerate_box_is_an_error() {
    let spec = GeneratorSpec {
        family: Family::Box {
            nominal: scalar(1.0),
            radius: 0.0,
        },
        count: 3,
        seed: 1,
    };
    assert!(matches!(
        generate(&spec),
        Err(Error::DegenerateSupport { .. })
    ));
    let bad = GeneratorSpec {
        family: Family::Uniform {
            lower: scalar(2.0),
            upper: scalar(1.0),
        },
        count: 3,
        seed: 1,
    };
    assert!(generate(&bad).is_err());
}

#[test]
fn triangular_mean_within_three_sigma() {
    let spec = GeneratorSpec {
        family: Family::Triangular {
            lower: scalar(0.0),
            mode: scalar(1.0),
            upper: scalar(2.0),
        },
        count: 500,
        seed: 42,
    };
    let (mean, _) = sample_moments(&generate(&spec).unwrap(), None).unwrap();
    // Var of the symmetric triangular law on [0, 2] is 1/6.
    let sigma = (1.0f64 / 6.0).sqrt();
    assert!((mean.get(0, 0) - 1.0).abs() <= 3.0 * sigma / 500f64.sqrt());
}

#[test]
fn generation_is_deterministic_and_in_support() {
    let spec = GeneratorSpec {
        family: Family::Box {
            nominal: Matrix::from_rows(&[vec![3.0, 1.0], vec![2.0, 0.1]]).unwrap(),
            radius: 0.5,
        },
        count: 50,
        seed: 9,
    };
    let a = generate(&spec).unwrap();
    assert_eq!(a, generate(&spec).unwrap());
    assert_ne!(a, generate(&spec.with_seed(10)).unwrap());
    for s in a.iter() {
        assert!((s.get(0, 0) - 3.0).abs() <= 0.5);
        assert!(s.get(1, 1) >= 0.0, "clamped at zero");
    }
}

#[test]
fn moments_examples() {
    let two = scalar_set(&[0.5, 5.5]);
    let (m, v) = sample_moments(&two, None).unwrap();
    assert_relative_eq!(m.get(0, 0), 3.0);
    assert_relative_eq!(v.get(0, 0), 6.25);
    let (_, v1) = sample_moments(&scalar_set(&[2.0]), None).unwrap();
    assert_eq!(v1.get(0, 0), 0.0);
    let (m0, v0) = sample_moments(&two, Some(&DiscreteDistribution::point_mass(2, 0))).unwrap();
    assert_eq!((m0.get(0, 0), v0.get(0, 0)), (0.5, 0.0));
}

#[test]
fn trace_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let sc = ScenarioSet::new(vec![toy_matrix(0.5, 0.5), toy_matrix(5.5, 1.5)]).unwrap();
    write_scenarios_csv(&sc, &Labels::default(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 9, "header plus 8 rows");
    let tr = ingest_trace(&path).unwrap();
    assert_eq!(tr.scenarios, sc);
    let truncated: Vec<&str> = text.lines().take(8).collect();
    std::fs::write(&path, truncated.join("\n")).unwrap();
    let err = ingest_trace(&path).unwrap_err();
    assert!(matches!(err, Error::MissingCell { .. }), "{err}");
    std::fs::write(&path, "scenario_id,user,resource,requirement\n1,a,r,-1\n").unwrap();
    assert!(ingest_trace(&path).is_err());
}

#[test]
fn delta_scaling_example() {
    let set = MomentAmbiguity::from_moments(&scalar(3.0), &scalar(6.25), 0.2).unwrap();
    assert_relative_eq!(set.mean_lower.get(0, 0), 2.4);
    assert_relative_eq!(set.mean_upper.get(0, 0), 3.6);
    assert_relative_eq!(set.variance_upper.get(0, 0), 7.5);
    assert!(MomentAmbiguity::from_moments(&scalar(3.0), &scalar(6.25), -0.1).is_err());
    let eq = MomentAmbiguity::from_moments(&scalar(3.0), &scalar(6.25), 0.0).unwrap();
    assert_eq!(eq.mean_lower, eq.mean_upper);
}

#[test]
fn slack_examples() {
    let set = MomentAmbiguity::from_moments(&scalar(3.0), &scalar(6.25), 0.2).unwrap();
    let sc = scalar_set(&[3.0, 5.5]);
    let s = membership_slacks(&DiscreteDistribution::point_mass(2, 0), &sc, &set).unwrap();
    assert!(s[0].min() >= 0.0);
    let s = membership_slacks(&DiscreteDistribution::point_mass(2, 1), &sc, &set).unwrap();
    assert_relative_eq!(s[0].mean_upper, -1.9, max_relative = 1e-12);
    let (sc, p) = toy_scenarios(TWO_POINT_CONFIGS[0], 0.5).unwrap();
    let (mean, var) = sample_moments(&sc, Some(&p)).unwrap();
    let own = MomentAmbiguity::from_moments(&mean, &var, 0.0).unwrap();
    let slacks = membership_slacks(&DiscreteDistribution::uniform(2), &sc, &own).unwrap();
    assert!(slacks.iter().all(|s| s.mean_lower.abs() < 1e-12
        && s.mean_upper.abs() < 1e-12
        && s.variance.abs() < 1e-12));
}

#[test]
fn vacuous_examples() {
    let sc = scalar_set(&[1.0, 2.0, 4.0]);
    assert!(is_vacuous(&MomentAmbiguity::vacuous(&sc), &sc));
    let (m, v) = sample_moments(&sc, None).unwrap();
    assert!(!is_vacuous(
        &MomentAmbiguity::from_moments(&m, &v, 0.0).unwrap(),
        &sc
    ));
    let one = scalar_set(&[2.0]);
    assert!(is_vacuous(
        &MomentAmbiguity::from_moments(&scalar(2.0), &scalar(0.0), 0.1).unwrap(),
        &one
    ));
    assert!(!is_vacuous(
        &MomentAmbiguity::from_moments(&scalar(3.0), &scalar(0.0), 0.1).unwrap(),
        &one
    ));
    // Every vertex and midpoint of the support satisfies the vacuous set.
    let set = MomentAmbiguity::vacuous(&sc);
    for a in 0..3 {
        for b in 0..3 {
            let mut p = vec![0.0; 3];
            p[a] += 0.5;
            p[b] += 0.5;
            assert!(
                is_eps_feasible(&DiscreteDistribution::new(p).unwrap(), &sc, &set, 1e-12).unwrap()
            );
        }
    }
}

#[test]
fn delta_spec_resolves_against_sample_moments() {
    let sc = scalar_set(&[0.5, 5.5]);
    let set = AmbiguitySpec::Delta { delta: 0.2 }.resolve(&sc).unwrap();
    assert_relative_eq!(set.mean_upper.get(0, 0), 3.6);
}

proptest! {
    #[test]
    fn nested_in_delta(vals in prop::collection::vec(0.1f64..10.0, 2..6), d1 in 0.0f64..1.0, dd in 0.0f64..1.0, w in prop::collection::vec(0.01f64..1.0, 6)) {
        let mut vals = vals;
        vals.dedup();
        prop_assume!(vals.windows(2).all(|p| p[0] != p[1]));
        let sc = scalar_set(&vals);
        let (m, v) = sample_moments(&sc, None).unwrap();
        let small = MomentAmbiguity::from_moments(&m, &v, d1).unwrap();
        let large = MomentAmbiguity::from_moments(&m, &v, d1 + dd).unwrap();
        let p = DiscreteDistribution::from_raw(w[..vals.len()].to_vec()).unwrap();
        let a = worst_slack(&membership_slacks(&p, &sc, &small).unwrap());
        let b = worst_slack(&membership_slacks(&p, &sc, &large).unwrap());
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn uniform_is_mean_tight(vals in prop::collection::vec(0.1f64..10.0, 1..6)) {
        prop_assume!(ScenarioSet::new(vals.iter().map(|&v| scalar(v)).collect()).is_ok());
        let sc = scalar_set(&vals);
        let (m, v) = sample_moments(&sc, None).unwrap();
        let set = MomentAmbiguity::from_moments(&m, &v, 0.0).unwrap();
        let s = membership_slacks(&DiscreteDistribution::uniform(vals.len()), &sc, &set).unwrap();
        prop_assert!(s[0].mean_lower.abs() < 1e-12 && s[0].mean_upper.abs() < 1e-12);
    }

    #[test]
    fn point_mass_moments(vals in prop::collection::vec(0.1f64..10.0, 1..6), k in 0usize..6) {
        prop_assume!(ScenarioSet::new(vals.iter().map(|&v| scalar(v)).collect()).is_ok());
        let k = k % vals.len();
        let sc = scalar_set(&vals);
        let (m, v) = sample_moments(&sc, Some(&DiscreteDistribution::point_mass(vals.len(), k))).unwrap();
        prop_assert_eq!(m.get(0, 0), vals[k]);
        prop_assert!(v.get(0, 0).abs() < 1e-12);
    }
}
