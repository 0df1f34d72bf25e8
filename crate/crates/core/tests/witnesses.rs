use std::f64::consts::{PI, TAU};

use diew::optimize::{maximize_witness, OptimizerConfig};
use diew::qlin::CMatrix;
use diew::states::{self, random_biseparable};
use diew::witnesses::{
    correlator, correlator_table, evaluate, joint_probability, mermin, steering_scenario, Coefficients,
    MeasurementScenario, Setting, WitnessKind, WitnessName, WitnessSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_setting<R: Rng>(rng: &mut R) -> Setting {
    // Uniform on the sphere.
    let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
    Setting::new(theta, rng.random_range(0.0..TAU))
}

fn random_scenario<R: Rng>(rng: &mut R, spec: &WitnessSpec) -> MeasurementScenario {
    match spec.kind {
        WitnessKind::Steering => {
            let a: [Setting; 3] = std::array::from_fn(|_| random_setting(rng));
            let b: [Setting; 3] = std::array::from_fn(|_| random_setting(rng));
            steering_scenario(&a, &b)
        }
        _ => {
            let settings = std::array::from_fn(|_| (0..spec.m).map(|_| random_setting(rng)).collect());
            MeasurementScenario::new(settings).unwrap()
        }
    }
}

fn random_mixed(seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: f64 = rng.random();
    let a = states::random_pure(&mut rng, 3);
    let b = states::random_pure(&mut rng, 3);
    &a.scale(w) + &b.scale(1.0 - w)
}

#[test]
fn biseparable_states_respect_every_bound() {
    let specs: Vec<WitnessSpec> = WitnessName::ALL.iter().map(|w| w.spec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = vec![f64::NEG_INFINITY; specs.len()];
    for k in 0..200u64 {
        let rho = random_biseparable(1000 + k, 1 + (k as usize % 4)).unwrap().assemble();
        assert!(rho.is_density(1e-10));
        for _ in 0..50 {
            for (spec, worst) in specs.iter().zip(worst.iter_mut()) {
                let sc = random_scenario(&mut rng, spec);
                let margin = spec.margin(evaluate(spec, &rho, &sc).unwrap());
                *worst = worst.max(margin);
            }
        }
    }
    for (spec, worst) in specs.iter().zip(&worst) {
        assert!(*worst <= 1e-9, "{} exceeded its bound by {worst}", spec.name);
    }
}

#[test]
fn optimized_biseparable_states_respect_every_bound() {
    let cfg = OptimizerConfig::default().with_restarts(8).with_seed(3);
    for k in 0..6u64 {
        let rho = random_biseparable(50 + k, 1).unwrap().assemble();
        for w in WitnessName::ALL {
            let spec = w.spec();
            let best = maximize_witness(&rho, &spec, &cfg).unwrap();
            assert!(spec.margin(best.value) <= 1e-9, "{w} on sample {k}: {}", best.value);
        }
    }
}

#[test]
fn correlators_match_outcome_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = WitnessName::Bancal.spec();
    for seed in 0..20 {
        let rho = random_mixed(seed);
        let sc = random_scenario(&mut rng, &spec);
        let table = correlator_table(&rho, &sc).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    let mut total = 0.0;
                    let mut signed = 0.0;
                    for a in [-1i8, 1] {
                        for b in [-1i8, 1] {
                            for c in [-1i8, 1] {
                                let pr = joint_probability(&rho, &sc, x, y, z, a, b, c).unwrap();
                                assert!((-1e-12..=1.0 + 1e-12).contains(&pr));
                                total += pr;
                                signed += f64::from(a * b * c) * pr;
                            }
                        }
                    }
                    let corr = correlator(&rho, &sc, x, y, z).unwrap();
                    assert!((total - 1.0).abs() < 1e-10);
                    assert!((signed - corr).abs() < 1e-10);
                    assert!((table.get(x, y, z) - corr).abs() < 1e-12);
                }
            }
        }
    }
}

fn relabelled_mermin() -> WitnessSpec {
    let mut spec = mermin();
    if let WitnessKind::Linear { coeffs, .. } = &mut spec.kind {
        let old = coeffs.clone();
        let values = (0..8)
            .map(|i| {
                let (x, y, z) = (i / 4, (i / 2) % 2, i % 2);
                old.get(1 - x, 1 - y, 1 - z)
            })
            .collect();
        *coeffs = Coefficients { m: 2, values };
    }
    spec
}

#[test]
fn mermin_relabelling_keeps_the_maximum() {
    let cfg = OptimizerConfig::default().with_restarts(24);
    let relabelled = relabelled_mermin();
    for seed in 0..4 {
        let rho = random_mixed(seed);
        let a = maximize_witness(&rho, &mermin(), &cfg).unwrap().value;
        let b = maximize_witness(&rho, &relabelled, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn steering_settings_on_the_trusted_side_are_ignored() {
    let rho = random_mixed(5);
    let spec = WitnessName::Cavalcanti.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sc = random_scenario(&mut rng, &spec);
    let mut other = sc.clone();
    other.settings[2] = vec![Setting::Z, Setting::Z, Setting::new(PI / 3.0, 0.2)];
    assert_eq!(
        evaluate(&spec, &rho, &sc).unwrap(),
        evaluate(&spec, &rho, &other).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn witness_values_stay_in_algebraic_range(seed in any::<u64>(), angles in prop::collection::vec(0.0..TAU, 18)) {
        let rho = random_mixed(seed);
        let sc2 = MeasurementScenario::from_angles(2, &angles[..12]).unwrap();
        let sc3 = MeasurementScenario::from_angles(3, &angles).unwrap();
        let m = evaluate(&mermin(), &rho, &sc2).unwrap();
        prop_assert!((0.0..=4.0 + 1e-9).contains(&m));
        let u = evaluate(&WitnessName::Uffink.spec(), &rho, &sc2).unwrap();
        prop_assert!((-1e-12..=16.0 + 1e-9).contains(&u));
        let b = evaluate(&WitnessName::Bancal.spec(), &rho, &sc3).unwrap();
        prop_assert!(b.abs() <= 18.0 * 3f64.sqrt() / 2.0 + 1e-9);
    }

    #[test]
    fn from_angles_round_trips(angles in prop::collection::vec(-10.0..10.0f64, 12)) {
        let sc = MeasurementScenario::from_angles(2, &angles).unwrap();
        prop_assert_eq!(sc.to_angles(), angles);
    }
}
