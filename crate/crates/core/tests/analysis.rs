use approx::assert_relative_eq;
use fairalloc::ambiguity::{AmbiguitySpec, MomentAmbiguity};
use fairalloc::analysis::{
    beta_sweep, check_envy, check_pareto_spot, check_properties, check_sharing_incentive,
    confidence_bounds, max_ratio_proxy, relative_gap, t_critical, BoundsMode, BoundsModel,
    T_CRIT_4, Z_CRIT,
};
use fairalloc::baselines::{solve_fds, solve_saa};
use fairalloc::cutting::solve_sadr;
use fairalloc::fairness::{eval_fairness, eval_special, Regime};
use fairalloc::presets::{toy_instance, toy_scenarios, TWO_POINT_CONFIGS};
use fairalloc::scenarios::{Family, GeneratorSpec};
use fairalloc::{DiscreteDistribution, FairnessParams, Matrix, ResourceInstance, ScenarioSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coupled(beta: f64) -> FairnessParams {
    FairnessParams::coupled(beta, 1.0, 1e-4)
}

fn single(rows: &[Vec<f64>]) -> ScenarioSet {
    ScenarioSet::single(Matrix::from_rows(rows).unwrap()).unwrap()
}

#[test]
fn gap_arithmetic() {
    assert_relative_eq!(
        relative_gap(-15.82, -15.31, -15.50),
        3.2903225806451615,
        max_relative = 1e-3
    );
    assert!((relative_gap(-15.82, -15.31, -15.50) - 3.29).abs() < 5e-3);
    assert_eq!(relative_gap(-2.0, -2.0, -2.0), 0.0);
}

#[test]
fn critical_values() {
    assert_eq!(Z_CRIT, 1.64);
    assert_eq!(T_CRIT_4, 2.13);
    assert_relative_eq!(t_critical(4).unwrap(), 2.13, max_relative = 1e-3);
    let mut prev = f64::INFINITY;
    for nu in 1..=30 {
        let t = t_critical(nu).unwrap();
        assert!(t < prev && t > 1.64);
        prev = t;
    }
    assert!(t_critical(0).is_err());
    assert!(t_critical(31).is_err());
}

#[test]
fn sharing_incentive_examples() {
    let inst = ResourceInstance::new(2, vec![10.0, 10.0], None).unwrap();
    let sym = single(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
    let r = solve_fds(&inst, sym.get(0), &coupled(2.0), 1).unwrap();
    let si =
        check_sharing_incentive(r.x(), &sym, &DiscreteDistribution::uniform(1), &inst).unwrap();
    assert!(
        si.values.iter().all(|&v| v >= 0.5 - 1e-8),
        "{:?}",
        si.values
    );
    let starved =
        check_sharing_incentive(&[5.0, 0.0], &sym, &DiscreteDistribution::uniform(1), &inst)
            .unwrap();
    assert_eq!(starved.pass, vec![true, false]);
    assert_eq!(starved.values[1], 0.0);
    let one = ResourceInstance::new(1, vec![4.0], None).unwrap();
    let sc = single(&[vec![2.0]]);
    assert!(
        check_sharing_incentive(&[2.0], &sc, &DiscreteDistribution::uniform(1), &one)
            .unwrap()
            .all_pass()
    );
    assert!(
        !check_sharing_incentive(&[1.5], &sc, &DiscreteDistribution::uniform(1), &one)
            .unwrap()
            .all_pass()
    );
}

#[test]
fn deterministic_optimum_has_sharing_incentive() {
    // With one scenario the chance rows are hard constraints and the guarantee holds.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let d = rng.gen_range(2..5);
        let m = rng.gen_range(1..4);
        let inst =
            ResourceInstance::new(d, (0..m).map(|_| rng.gen_range(5.0..20.0)).collect(), None)
                .unwrap();
        let r = Matrix::new(m, d, (0..m * d).map(|_| rng.gen_range(0.2..4.0)).collect()).unwrap();
        let sc = ScenarioSet::single(r.clone()).unwrap();
        let set = MomentAmbiguity::vacuous(&sc);
        let (rep, _) = solve_sadr(&inst, &sc, &set, &coupled(2.0), 1).unwrap();
        let si = check_sharing_incentive(rep.x(), &sc, &DiscreteDistribution::uniform(1), &inst)
            .unwrap();
        assert!(si.all_pass(), "{:?}", si.values);
    }
}

#[test]
fn envy_examples() {
    let inst = ResourceInstance::new(2, vec![10.0], None).unwrap();
    let sc = single(&[vec![1.0, 1.0]]);
    let e = check_envy(&[1.0, 2.0], &sc, &inst).unwrap();
    assert_eq!(e.len(), 1);
    assert_eq!((e[0].envious, e[0].envied), (0, 1));
    assert!(check_envy(&[1.0, 1.0], &sc, &inst).unwrap().is_empty());
    let (sc, p) = toy_scenarios(TWO_POINT_CONFIGS[0], 0.5).unwrap();
    let (m, v) = fairalloc::scenarios::sample_moments(&sc, Some(&p)).unwrap();
    let set = MomentAmbiguity::from_moments(&m, &v, 0.2).unwrap();
    let (rep, _) = solve_sadr(&toy_instance(), &sc, &set, &coupled(2.0), 1).unwrap();
    assert!(check_envy(rep.x(), &sc, &toy_instance())
        .unwrap()
        .is_empty());
}

#[test]
fn pareto_examples() {
    let inst = ResourceInstance::new(2, vec![10.0], None).unwrap();
    let sc = single(&[vec![1.0, 2.0]]);
    let mu = sc.dominant(&inst).unwrap().remove(0);
    let fx = eval_fairness(&[2.0, 1.0], &mu, 2.0, -0.5).unwrap().value;
    let fy = eval_fairness(&[1.0, 1.0], &mu, 2.0, -0.5).unwrap().value;
    assert!(fx > fy);
    let spot = check_pareto_spot(&[2.0, 1.0], &sc, &inst, &coupled(2.0), 200, 3).unwrap();
    assert!(spot.guarantee_applicable);
    assert_eq!(spot.violations, 0);
    assert_eq!(spot.trials, 200);
    assert!(spot.skipped > 0 && spot.skipped < 200);
    let weak = FairnessParams::explicit(2.0, -0.1, 1.0, 1e-4);
    assert!(
        !check_pareto_spot(&[2.0, 1.0], &sc, &inst, &weak, 10, 3)
            .unwrap()
            .guarantee_applicable
    );
}

#[test]
fn properties_of_a_stored_report() {
    let inst = ResourceInstance::new(2, vec![10.0, 10.0], None).unwrap();
    let sc = single(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
    let rep = solve_saa(&inst, &sc, &coupled(2.0), 1).unwrap();
    let props = check_properties(&rep, &sc, &inst, 50, 1).unwrap();
    assert!(props.passed());
}

#[test]
fn beta_sweep_examples() {
    let (sc, p) = toy_scenarios(TWO_POINT_CONFIGS[0], 0.5).unwrap();
    let inst = toy_instance();
    let fixed = beta_sweep(&[1.5, 2.0, 3.0, 5.0, 10.0], |b| {
        let params = FairnessParams::explicit(b, -0.5, 1.0, 1e-4);
        Ok(fairalloc::baselines::solve_ev(&inst, &sc, &p, &params, 1)?.objective)
    })
    .unwrap();
    assert!(fixed.monotone, "{:?}", fixed.values);
    assert!(beta_sweep(&[2.0], |_| Ok(-1.0)).unwrap().monotone);
    assert!(beta_sweep(&[2.0, 1.5], |_| Ok(-1.0)).is_err());
    assert!(!beta_sweep(&[2.0, 3.0], Ok).unwrap().monotone);
    let r = solve_saa(&inst, &sc, &coupled(50.0), 1).unwrap();
    let (_, b) = max_ratio_proxy(r.x(), &sc, &inst, &p, 50.0).unwrap();
    let mus = sc.dominant(&inst).unwrap();
    let direct: f64 = mus
        .iter()
        .zip(p.probs())
        .map(|(mu, q)| q * eval_special(r.x(), mu, Regime::MaxRatioInf, -49.0 / 50.0).unwrap())
        .sum();
    assert_relative_eq!(b, direct, max_relative = 1e-12);
    // Per scenario the coupled value is the closed form times (y_min k / S)^(1/β)
    // with k = Σ (y_min / y_j)^(β−1), so the error shrinks like 1/β.
    let mut prev = f64::INFINITY;
    for beta in [5.0, 10.0, 20.0, 50.0] {
        let (a, b) = max_ratio_proxy(r.x(), &sc, &inst, &p, beta).unwrap();
        let predicted: f64 = mus
            .iter()
            .zip(p.probs())
            .map(|(mu, q)| {
                let y: Vec<f64> = r.x().iter().zip(mu).map(|(x, m)| x * m).collect();
                let s: f64 = y.iter().sum();
                let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
                let k: f64 = y.iter().map(|v| (ymin / v).powf(beta - 1.0)).sum();
                q * eval_special(r.x(), mu, Regime::MaxRatioInf, (1.0 - beta) / beta).unwrap()
                    * (ymin * k / s).powf(1.0 / beta)
            })
            .sum();
        assert_relative_eq!(a, predicted, max_relative = 1e-10);
        let err = ((a - b) / b).abs();
        assert!(err < prev, "beta {beta}: {err}");
        prev = err;
    }
}

#[test]
fn bounds_with_identical_replicates() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
    let gen = GeneratorSpec {
        family: Family::TwoPoint {
            low: m.clone(),
            high: m,
            prob: 1.0,
        },
        count: 1,
        seed: 5,
    };
    let inst = ResourceInstance::new(2, vec![10.0, 10.0], None).unwrap();
    let rep = confidence_bounds(
        &BoundsModel::Saa,
        &inst,
        &gen,
        &coupled(2.0),
        5,
        BoundsMode::SaaPoint,
    )
    .unwrap();
    assert!(rep.sigma_upper < 1e-12 && rep.sigma_lower < 1e-12);
    assert_relative_eq!(rep.lower, rep.upper, max_relative = 1e-12);
    assert_relative_eq!(rep.lower, rep.point, max_relative = 1e-12);
    assert!(rep.gap_percent.abs() < 1e-9);
    assert_eq!((rep.z_critical, rep.t_critical), (1.64, 2.13));
    let dr = BoundsModel::Sadr(AmbiguitySpec::Delta { delta: 0.1 });
    let rep =
        confidence_bounds(&dr, &inst, &gen, &coupled(2.0), 5, BoundsMode::DrReplicate).unwrap();
    assert!(rep.gap_percent.abs() < 1e-6, "{}", rep.gap_percent);
    assert!(
        (relative_gap(rep.lower, rep.upper, rep.point) - rep.gap_percent).abs() <= 1e-10,
        "stored gap matches its inputs"
    );
    assert!(confidence_bounds(
        &BoundsModel::Saa,
        &inst,
        &gen,
        &coupled(2.0),
        1,
        BoundsMode::SaaPoint
    )
    .is_err());
}
