//! End-to-end checks across module boundaries.

mod common;

use sst_core::game::{enumerate_paths, monte_carlo, success_stats, Strategy, StrategyFile};
use sst_core::protocol::{assimilate, extraction_protocol};
use sst_core::states::gibbs_rescale;
use sst_core::stepfn::majorizes;
use sst_core::workcalc::extractable_work;
use sst_core::{rat, Rational, Scalar};

use common::*;

#[test]
fn protocol_survives_a_json_round_trip() {
    let mut rng = rng(31);
    for _ in 0..20 {
        let (rho, sigma) = (random_state(&mut rng, 3), random_state(&mut rng, 3));
        let eps = eps_from(&mut rng, &[(0, 1), (1, 5), (1, 2)]);
        let plan = extraction_protocol(&rho, &sigma, &eps).unwrap();
        let text = serde_json::to_string(&StrategyFile::from_strategy(&plan.strategy)).unwrap();
        let back: Strategy<Rational> = serde_json::from_str::<StrategyFile>(&text).unwrap().to_strategy().unwrap();
        assert_eq!(back, plan.strategy);
        let paths = enumerate_paths(&plan.initial, &back).unwrap();
        let stats = success_stats(&paths, &back.target).unwrap();
        assert_eq!(stats.p_s, rat(1, 1) - eps);
    }
}

#[test]
fn float_and_exact_protocols_agree() {
    let (rho, sigma) = worked_pair();
    let exact = extraction_protocol(&rho, &sigma, &rat(1, 2)).unwrap();
    let to_f = |s: &sst_core::DiagonalState<Rational>| {
        sst_core::DiagonalState::new(
            s.weights().iter().map(Scalar::to_f64).collect(),
            s.probs().iter().map(Scalar::to_f64).collect(),
        )
        .unwrap()
    };
    let float = extraction_protocol(&to_f(&rho), &to_f(&sigma), &0.5).unwrap();
    assert!((float.mixedness.m - 4.0 / 3.0).abs() < 1e-12);
    let a = monte_carlo(&exact.initial, &exact.strategy, 1.0, 2000, 5).unwrap();
    let b = monte_carlo(&float.initial, &float.strategy, 1.0, 2000, 5).unwrap();
    assert_eq!(a.successes, b.successes);
}

#[test]
fn assimilation_costs_nothing_when_the_source_majorizes() {
    let mut rng = rng(32);
    let mut checked = 0;
    while checked < 20 {
        let (rho, sigma) = (random_state(&mut rng, 3), random_state(&mut rng, 3));
        if !majorizes(&gibbs_rescale(&rho), &gibbs_rescale(&sigma)) {
            continue;
        }
        let run = assimilate(&rho, &sigma).unwrap();
        let w = extractable_work(&rho, &sigma, &rat(0, 1), 1.0).unwrap();
        assert!(w.m >= rat(1, 1));
        let paths = enumerate_paths(&run.initial, &Strategy::new(run.actions.clone(), rat(1, 1))).unwrap();
        assert!(paths.iter().all(|p| !p.escaped() && p.logwork == rat(1, 1)));
        checked += 1;
    }
}
