mod common;

use common::{
    and_aux, bec, check_schedule, config, private_only_aux, random_aux, random_bundle, random_code, tv,
};
use polar_broadcast::exec::ExecMode;
use polar_broadcast::model::{AuxiliaryStructure, Receiver};
use polar_broadcast::profile::Threshold;
use polar_broadcast::scheme::{
    build_code, run_trial, shared_randomness, simulate, CodeConfig, CodeLayer, Corner, Messages, SimulationSeeds,
};
use polar_broadcast::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn schedule_invariants_on_random_bundles() {
    let mut feasible = 0;
    for seed in 0..100 {
        if check_schedule(&random_bundle(seed), 4) {
            feasible += 1;
        }
    }
    // both branches are exercised
    assert!(feasible > 10 && feasible < 100, "{feasible}");
}

#[test]
fn common_allocation_conserves_rate() {
    let mut checked = 0;
    for seed in 0.. {
        if checked == 20 {
            break;
        }
        assert!(seed < 200, "too few feasible codes");
        let Some(code) = random_code(seed, 64) else { continue };
        let cap = code.common_capacity();
        if cap == 0.0 {
            continue;
        }
        let before = code.rates();
        let sup_rate = |r: &polar_broadcast::scheme::CodeRates| if code.sup == Receiver::One { r.r1 } else { r.r2 };
        let r0 = (seed % 4 + 1) as f64 / 4.0 * cap;
        let after_code = code.allocate_common(r0).unwrap();
        let after = after_code.rates();
        let moved = (after.r0 * 64.0).round();
        assert_eq!(moved, (r0 * 64.0 + 1e-9).floor());
        assert!((after.r0 + sup_rate(&after) - sup_rate(&before)).abs() < 1e-12);
        assert_eq!(if code.sup == Receiver::One { after.r2 } else { after.r1 }, if code.sup == Receiver::One { before.r2 } else { before.r1 });
        // common positions are decodable by both receivers
        let b = &after_code.bundle;
        let both = b
            .i_sup
            .intersection(&b.i_v_oth)
            .unwrap()
            .union(&after_code.schedule.p2)
            .unwrap()
            .union(&after_code.schedule.b2)
            .unwrap();
        assert!(after_code.common.is_subset(&both));
        assert!(matches!(code.allocate_common(cap + 2.0 / 64.0), Err(Error::CommonCapacity { .. }) | Err(Error::Config(_))));
        checked += 1;
    }
}

#[test]
fn full_common_allocation_empties_superposition_messages() {
    let spec = bec(0.3, 0.5);
    let aux = AuxiliaryStructure::superposition_only(0.5).unwrap();
    let code = build_code(&spec, &aux, &config(256, 2, Corner::B)).unwrap();
    let full = code.allocate_common(code.common_capacity()).unwrap();
    let r = full.rates();
    let sup = if code.sup == Receiver::One { r.r1 } else { r.r2 };
    assert_eq!(sup, 0.0);
    assert!(r.r0 > 0.0);
}

#[test]
fn noiseless_codes_decode_without_error() {
    let cases = [
        (AuxiliaryStructure::superposition_only(0.5).unwrap(), Corner::A),
        (private_only_aux(), Corner::A),
        (private_only_aux(), Corner::B),
    ];
    for (aux, corner) in cases {
        let code = build_code(&bec(0.0, 0.0), &aux, &config(256, 4, corner)).unwrap();
        let (m1, m2, _) = code.message_lengths();
        assert!(m1 + m2 > 0);
        let sim = simulate(&code, 100, SimulationSeeds { messages: 1, noise: 2 }, ExecMode::Parallel).unwrap();
        assert_eq!(sim.errors, [0, 0, 0]);
    }
}

#[test]
fn fully_frozen_code_reproduces_shared_sequences() {
    let code = build_code(&bec(1.0, 1.0), &and_aux(), &config(64, 2, Corner::B)).unwrap();
    assert_eq!(code.message_lengths(), (0, 0, 0));
    let shared = shared_randomness(&code, 4);
    let enc = code.encode(&Messages::default(), &shared).unwrap();
    let again = code.encode(&Messages::default(), &shared).unwrap();
    assert_eq!(enc, again);
    // every output is an erasure
    let y = vec![2; enc.x.len()];
    for r in [Receiver::One, Receiver::Two] {
        let d = code.decode(r, &y, &shared).unwrap();
        assert!(d.private.is_empty());
        assert_eq!(d.v, enc.layers[0]);
        let own = if r == code.sup { &enc.layers[1] } else { &enc.layers[2] };
        assert_eq!(&d.own_layer, own, "{r:?}");
    }
}

#[test]
fn input_distribution_is_honest() {
    let code = build_code(&bec(0.3, 0.5), &and_aux(), &config(256, 4, Corner::B)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut ones = 0usize;
    let mut total = 0usize;
    let mut trial = 0u64;
    while total < 10_000 {
        let msgs = Messages::random(&code, &mut rng);
        let enc = code.encode(&msgs, &shared_randomness(&code, trial)).unwrap();
        ones += enc.x.iter().filter(|&&x| x == 1).count();
        total += enc.x.len();
        trial += 1;
    }
    let p1 = ones as f64 / total as f64;
    let want = code.aux.input_distribution();
    assert!(tv(&[1.0 - p1, p1], &want) <= 0.05, "{p1} vs {want:?}");
}

#[test]
fn swapped_roles_have_no_unpaired_superposition_positions() {
    // receiver 2 is stronger for V; the swapped construction puts receiver 1 on the superposition layer
    let spec = bec(0.5, 0.3);
    let aux = AuxiliaryStructure::superposition_only(0.5).unwrap();
    let code = build_code(&spec, &aux, &config(1024, 4, Corner::B)).unwrap();
    assert_eq!(code.sup, Receiver::One);
    assert!(code.schedule.b2.is_empty());
    assert!(code.bundle.i_sup.is_subset(&code.bundle.i_v_oth));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn census_covers_every_position(seed in any::<u64>()) {
        if let Some(code) = random_code(seed, 64) {
            for layer in CodeLayer::ALL {
                prop_assert_eq!(code.census(layer).total(), 64);
            }
            let backed = code.backoff(0.85).unwrap();
            for layer in CodeLayer::ALL {
                prop_assert_eq!(backed.census(layer).total(), 64);
            }
        }
    }

    #[test]
    fn trials_are_deterministic(seed in any::<u64>()) {
        if let Some(code) = random_code(seed, 32) {
            let seeds = SimulationSeeds { messages: seed, noise: seed ^ 1 };
            prop_assert_eq!(run_trial(&code, 7, seeds).unwrap(), run_trial(&code, 7, seeds).unwrap());
        }
    }

    #[test]
    fn noiseless_round_trip_random_aux(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let aux = random_aux(&mut rng);
        let cfg = CodeConfig {
            threshold: Threshold::new(1e-6, 0.95).unwrap(),
            ..config(64, 3, if rng.random() { Corner::A } else { Corner::B })
        };
        match build_code(&bec(0.0, 0.0), &aux, &cfg) {
            Ok(code) => {
                let sim = simulate(&code, 10, SimulationSeeds { messages: seed, noise: 0 }, ExecMode::Sequential).unwrap();
                prop_assert_eq!(sim.errors, [0, 0, 0]);
            }
            Err(Error::Infeasible { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
