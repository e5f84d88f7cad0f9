//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use rand::Rng;
use sst_core::game::{audit_bound, enumerate_paths, monte_carlo, Strategy};
use sst_core::laws::{entropy_energy_check, kelvin_violation_demo, two_level_partial_thermalize};
use sst_core::protocol::{
    extraction_protocol, isothermal_shift, run_protocol, shuttle_exact, shuttle_monte_carlo, ProtocolRun, RunMode,
    ShiftSpec,
};
use sst_core::workcalc::{d0_work, extractable_work, kelvin_cycle_bound, szilard_work, triangle_check, work_via_hmax};
use sst_core::{rat, DiagonalState, Rational, Scalar};

use common::*;

/// Float agreement for closed forms.
const FLOAT_TOL: f64 = 1e-12;
const WORKED_RUNTIME: Duration = Duration::from_secs(1);
const MONTE_CARLO_RUNTIME: Duration = Duration::from_secs(30);
const MONTE_CARLO_RUNS: usize = 100_000;
/// Allowed decrease of the work spread per decade of shuttle rounds.
const DECADE_RATIO: (f64, f64) = (2.5, 4.0);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_worked_example() -> Outcome {
    let (rho, sigma) = worked_pair();
    let start = Instant::now();
    let r = extractable_work(&rho, &sigma, &rat(1, 2), 1.0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(r.m == rat(4, 3), || format!("factor {} instead of 4/3", r.m))?;
    ensure((r.work - (4.0f64 / 3.0).ln()).abs() < 1e-15, || format!("work {}", r.work))?;
    ensure(elapsed < WORKED_RUNTIME, || format!("took {elapsed:?}"))?;
    Ok(format!("factor 4/3 exactly in {elapsed:?}"))
}

fn c2_gibbs_pairs() -> Outcome {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let (np, nq) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let (wp, wq) = (weights(&mut rng, np), weights(&mut rng, nq));
        let eps = eps_from(&mut rng, &[(0, 1), (1, 10), (1, 4), (1, 3), (1, 2), (9, 10)]);
        let (zp, zq) = (wp.iter().fold(rat(0, 1), |a, w| a + w.clone()), wq.iter().fold(rat(0, 1), |a, w| a + w.clone()));
        let expected = zq.clone() / (zp.clone() * (rat(1, 1) - eps.clone()));
        let r = extractable_work(&gibbs(wp.clone()), &gibbs(wq.clone()), &eps, 1.0).map_err(|e| e.to_string())?;
        ensure(r.m == expected, || format!("instance {i}: {} vs {expected}", r.m))?;
        let to_f = |v: &[Rational]| v.iter().map(Scalar::to_f64).collect::<Vec<f64>>();
        let gp = sst_core::states::gibbs_state(to_f(&wp)).unwrap();
        let gq = sst_core::states::gibbs_state(to_f(&wq)).unwrap();
        let rf = extractable_work(&gp, &gq, &eps.to_f64(), 1.0).map_err(|e| e.to_string())?;
        let closed = (zq.to_f64() / zp.to_f64()).ln() + (1.0 / (1.0 - eps.to_f64())).ln();
        let err = (rf.work - closed).abs() / closed.abs().max(1.0);
        worst = worst.max(err);
        ensure(err <= FLOAT_TOL, || format!("instance {i}: float work off by {err:e}"))?;
    }
    Ok(format!("200 pairs exact; float worst relative error {worst:.1e}"))
}

fn c3_landauer() -> Outcome {
    let bit = state(&[(1, 1), (1, 1)], &[(1, 2), (1, 2)]);
    let erased = state(&[(1, 1), (1, 1)], &[(1, 1), (0, 1)]);
    for (a, b) in [(0, 1), (1, 10), (1, 4), (1, 2), (3, 4)] {
        let eps = rat(a, b);
        let r = extractable_work(&bit, &erased, &eps, 1.0).map_err(|e| e.to_string())?;
        let expected = rat(1, 2) / (rat(1, 1) - eps.clone());
        ensure(r.m == expected, || format!("eps {eps}: erasure factor {} vs {expected}", r.m))?;
    }
    let szilard = extractable_work(&erased, &bit, &rat(0, 1), 1.0).map_err(|e| e.to_string())?;
    ensure(szilard.m == rat(2, 1), || format!("Szilard factor {}", szilard.m))?;
    let formula = szilard_work(1, &erased, &rat(0, 1), 1.0).map_err(|e| e.to_string())?;
    ensure(formula.factor == rat(2, 1), || format!("cylinder formula {}", formula.factor))?;
    ensure((szilard.work - LN_2).abs() < 1e-15, || format!("Szilard work {}", szilard.work))?;
    Ok("erasure costs ln2 less the risk bonus; the reverse yields ln2".into())
}

fn exact_run(rho: &DiagonalState<Rational>, sigma: &DiagonalState<Rational>, eps: &Rational) -> Result<(), String> {
    let bound = extractable_work(rho, sigma, eps, 1.0).map_err(|e| e.to_string())?;
    let run = run_protocol(rho, sigma, eps, RunMode::Exact).map_err(|e| e.to_string())?;
    let ProtocolRun::Exact(r) = run else { return Err("expected an exact run".into()) };
    ensure(r.p_s == rat(1, 1) - eps.clone(), || format!("P_S {} at eps {eps}", r.p_s))?;
    ensure(r.success_logwork.as_ref() == Some(&bound.m), || {
        format!("success factor {:?} vs bound {}", r.success_logwork, bound.m)
    })?;
    ensure(r.reached_target, || "final state differs from the target".into())?;
    ensure(r.catalyst_restored, || "catalyst not restored".into())?;
    ensure(r.audit.holds && r.audit.min_slack.as_ref().is_some_and(|s| *s >= rat(0, 1)), || {
        format!("audit {:?}", r.audit.min_slack)
    })?;
    Ok(())
}

fn c4_protocol_exact() -> Outcome {
    let (rho, sigma) = worked_pair();
    exact_run(&rho, &sigma, &rat(1, 2)).map_err(|e| format!("worked example: {e}"))?;
    let mut rng = rng(4);
    for i in 0..100 {
        let (rho, sigma) = (random_state(&mut rng, 4), random_state(&mut rng, 4));
        let eps = eps_from(&mut rng, &[(0, 1), (1, 10), (1, 5), (1, 3), (1, 2), (3, 4)]);
        exact_run(&rho, &sigma, &eps).map_err(|e| format!("instance {i}: {e}"))?;
    }
    Ok("worked example and 100 random pairs saturate the bound".into())
}

fn c5_protocol_monte_carlo() -> Outcome {
    let (rho, sigma) = worked_pair();
    let plan = extraction_protocol(&rho, &sigma, &rat(1, 2)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = monte_carlo(&plan.initial, &plan.strategy, 1.0, MONTE_CARLO_RUNS, 2024).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let sd = (0.25 / MONTE_CARLO_RUNS as f64).sqrt();
    let z = (report.success_rate - 0.5) / sd;
    ensure(z.abs() <= 4.0, || format!("rate {} is {z:.2} sd from 1/2", report.success_rate))?;
    ensure(elapsed < MONTE_CARLO_RUNTIME, || format!("took {elapsed:?}"))?;
    let again = monte_carlo(&plan.initial, &plan.strategy, 1.0, MONTE_CARLO_RUNS, 2024).map_err(|e| e.to_string())?;
    ensure(again == report, || "rerun with the same seed differs".into())?;
    Ok(format!("rate {:.4} ({z:+.2} sd), reproducible, {elapsed:?}", report.success_rate))
}

fn c6_audit() -> Outcome {
    let mut rng = rng(6);
    let mut worst: Option<Rational> = None;
    for i in 0..1000 {
        let s = random_state(&mut rng, 4);
        let extracts = rng.random_range(1..=8);
        let draft = random_strategy(&mut rng, &s, extracts);
        let paths = enumerate_paths(&s, &draft).map_err(|e| format!("instance {i}: {e}"))?;
        let live: Vec<&Rational> = paths.iter().filter(|p| !p.escaped()).map(|p| &p.logwork).collect();
        let target = if live.is_empty() { rat(1, 1) } else { live[rng.random_range(0..live.len())].clone() };
        let strategy = Strategy::new(draft.actions, target.clone());
        let r = audit_bound(&s, &strategy, &target).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(r.holds, || format!("instance {i}: slack {:?}", r.min_slack))?;
        if let Some(slack) = r.min_slack {
            if worst.as_ref().is_none_or(|w| slack < *w) {
                worst = Some(slack);
            }
        }
    }
    Ok(format!("1000 strategies, smallest slack {}", worst.map_or("n/a".into(), |w| w.to_string())))
}

fn c7_special_cases() -> Outcome {
    let mut rng = rng(7);
    let eps_choices = [(0, 1), (1, 10), (1, 4), (1, 2), (2, 3)];
    for i in 0..100 {
        let n = rng.random_range(1..=3u32);
        let w = rat(rng.random_range(1..=5), rng.random_range(1..=3));
        let rho = DiagonalState::new(vec![w.clone(); 1 << n], probs(&mut rng, 1 << n)).unwrap();
        let eps = eps_from(&mut rng, &eps_choices);
        let f = szilard_work(n, &rho, &eps, 1.0).map_err(|e| e.to_string())?;
        let m = extractable_work(&rho, &gibbs(vec![w; 1 << n]), &eps, 1.0).map_err(|e| e.to_string())?.m;
        ensure(f.factor == m, || format!("cylinders {i}: {} vs {m}", f.factor))?;
    }
    for i in 0..100 {
        let rho = random_state(&mut rng, 5);
        let k = rng.random_range(1..=5);
        let wq = weights(&mut rng, k);
        let mut keep: Vec<bool> = (0..k).map(|_| rng.random_bool(0.7)).collect();
        keep[0] = true;
        let z = wq.iter().zip(&keep).filter(|(_, &k)| k).fold(rat(0, 1), |a, (w, _)| a + w.clone());
        let pq = wq.iter().zip(&keep).map(|(w, &k)| if k { w.clone() / z.clone() } else { rat(0, 1) }).collect();
        let sigma = DiagonalState::new(wq, pq).unwrap();
        let eps = eps_from(&mut rng, &eps_choices);
        let f = work_via_hmax(&rho, &sigma, &eps, 1.0).map_err(|e| e.to_string())?;
        let m = extractable_work(&rho, &sigma, &eps, 1.0).map_err(|e| e.to_string())?.m;
        ensure(f.factor == m, || format!("max-entropy {i}: {} vs {m}", f.factor))?;
    }
    for i in 0..100 {
        let rho = random_state(&mut rng, 5);
        let eps = eps_from(&mut rng, &eps_choices);
        let f = d0_work(&rho, &eps, 1.0).map_err(|e| e.to_string())?;
        let m = extractable_work(&rho, &gibbs(rho.weights()), &eps, 1.0).map_err(|e| e.to_string())?.m;
        ensure(f.factor == m, || format!("relative entropy {i}: {} vs {m}", f.factor))?;
    }
    Ok("cylinder, max-entropy and relative-entropy formulas agree on 100 instances each".into())
}

fn c8_triangle() -> Outcome {
    let mut rng = rng(8);
    let choices = [(0, 1), (1, 20), (1, 5)];
    for i in 0..1000 {
        let (rho, tau, sigma) = (random_state(&mut rng, 4), random_state(&mut rng, 4), random_state(&mut rng, 4));
        let (e1, e2) = (eps_from(&mut rng, &choices), eps_from(&mut rng, &choices));
        let r = triangle_check(&rho, &tau, &sigma, &e1, &e2).map_err(|e| e.to_string())?;
        ensure(r.m12_joint >= r.m1.clone() * r.m2.clone() && r.holds, || {
            format!("triple {i}: {} * {} > {}", r.m1, r.m2, r.m12_joint)
        })?;
        let two = kelvin_cycle_bound(&[rho.clone(), sigma.clone(), rho.clone()], &[e1.clone(), e2.clone()], 1.0)
            .map_err(|e| e.to_string())?;
        ensure(two.holds, || format!("two-cycle {i}: {} > {}", two.total_work, two.bound))?;
    }
    for i in 0..250 {
        let legs = rng.random_range(2..=4);
        let mut cycle: Vec<DiagonalState<Rational>> = (0..legs).map(|_| random_state(&mut rng, 4)).collect();
        cycle.push(cycle[0].clone());
        let eps: Vec<Rational> = (0..legs).map(|_| eps_from(&mut rng, &[(0, 1), (1, 20), (1, 10), (1, 5)])).collect();
        let r = kelvin_cycle_bound(&cycle, &eps, 1.0).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("cycle {i}: {} > {}", r.total_work, r.bound))?;
    }
    Ok("1000 triples, 1000 two-cycles and 250 longer cycles respect the bound".into())
}

fn c9_second_law() -> Outcome {
    let before = state(&[(1, 1), (1, 1), (1, 1)], &[(1, 2), (1, 2), (0, 1)]);
    let after = state(&[(1, 1), (1, 1), (1, 1)], &[(2, 3), (1, 6), (1, 6)]);
    let r = entropy_energy_check(&before, &after, 1.0).map_err(|e| e.to_string())?;
    ensure((r.delta_s - (1.2516 - 1.0)).abs() < 1e-4, || format!("entropy change {}", r.delta_s))?;
    ensure(r.m0 == rat(3, 4) && r.w0 < 0.0, || format!("zero-risk factor {}", r.m0))?;
    ensure(r.entropy_holds && !r.majorization_holds, || "counterexample verdicts wrong".into())?;
    let mut rng = rng(9);
    for i in 0..10_000 {
        let n = rng.random_range(2..=5);
        let energies: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let p: Vec<f64> = probs(&mut rng, n).iter().map(Scalar::to_f64).collect();
        let kt = rng.random_range(0.2..5.0);
        let s = DiagonalState::from_energies(&energies, p, kt).map_err(|e| e.to_string())?;
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let t: f64 = rng.random_range(0.0..=1.0);
        let (_, r) = two_level_partial_thermalize(&s, a, b, &t, 1.0 / kt).map_err(|e| e.to_string())?;
        ensure(r.entropy_holds, || format!("pair mix {i}: {} < {}", r.delta_s, r.beta_delta_e))?;
    }
    for i in 0..1000 {
        let s = random_state(&mut rng, 5);
        let b = thermalization(&mut rng, &s.weights());
        let after = sst_core::game::apply_thermalization(&s, &b).map_err(|e| e.to_string())?;
        let r = entropy_energy_check(&s, &after, 1.0).map_err(|e| e.to_string())?;
        ensure(r.majorization_holds && r.entropy_holds, || format!("thermalization {i} fails"))?;
    }
    Ok(format!("entropy change {:.4} bits with factor 3/4; 10^4 pair mixes and 10^3 maps pass", r.delta_s))
}

fn c10_isothermal_shift() -> Outcome {
    let s = state(&[(1, 3), (1, 3), (1, 3)], &[(1, 3), (1, 3), (1, 3)]);
    let spec = ShiftSpec::new(0, 1, rat(1, 4));
    let out = isothermal_shift(&s, &spec).map_err(|e| e.to_string())?;
    ensure(out.work == rat(0, 1), || "analytic shift does work".into())?;
    ensure(out.state.weights() == vec![rat(1, 2), rat(1, 6), rat(1, 3)], || "wrong weights after the shift".into())?;
    for n in 1..=12 {
        let e = shuttle_exact(&s, &spec, n).map_err(|e| e.to_string())?;
        ensure(e.expected_factor == rat(1, 1), || format!("n = {n}: mean factor {}", e.expected_factor))?;
    }
    let stds: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| shuttle_monte_carlo(&s, &spec, n, 20_000, 10).map(|r| r.std_work))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let ratios = [stds[0] / stds[1], stds[1] / stds[2]];
    for r in ratios {
        ensure((DECADE_RATIO.0..=DECADE_RATIO.1).contains(&r), || format!("spread ratios {ratios:?}"))?;
    }
    Ok(format!("mean factor 1 for n <= 12; spread ratios per decade {:.2}, {:.2}", ratios[0], ratios[1]))
}

fn c11_kelvin() -> Outcome {
    let mut rng = rng(11);
    let mut monotone = 0;
    let mut first_bad = None;
    for i in 0..50 {
        let d = rng.random_range(2..=4);
        let map = non_bistochastic(&mut rng, d);
        let r = kelvin_violation_demo(&map).map_err(|e| e.to_string())?;
        ensure(r.rate > 0.0, || format!("map {i}: rate {}", r.rate))?;
        if r.monotone {
            monotone += 1;
        } else if first_bad.is_none() {
            first_bad = Some((i, r.rate, r.finite_rates));
        }
    }
    match first_bad {
        None => Ok("50 maps: positive rates, finite-size rates approach monotonically".into()),
        Some((i, rate, rates)) => {
            let shown: Vec<String> = rates.iter().map(|(n, x)| format!("{n}:{x:.4}")).collect();
            Err(format!(
                "rates positive for all 50 maps, but only {monotone}/50 approach monotonically; map {i} (rate {rate:.4}): {}",
                shown.join(" ")
            ))
        }
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("worked example, exact", c1_worked_example),
        ("thermal pairs closed form", c2_gibbs_pairs),
        ("erasure and Szilard", c3_landauer),
        ("protocol achieves the bound (exact)", c4_protocol_exact),
        ("protocol achieves the bound (Monte Carlo)", c5_protocol_monte_carlo),
        ("upper-bound audit", c6_audit),
        ("special-case formulas", c7_special_cases),
        ("triangle and cycle inequalities", c8_triangle),
        ("entropy versus majorization", c9_second_law),
        ("isothermal shift", c10_isothermal_shift),
        ("work from non-bistochastic maps", c11_kelvin),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
