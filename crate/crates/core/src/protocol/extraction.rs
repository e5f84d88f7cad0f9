//! The optimal extraction strategy and its execution.
//!
//! Both states are padded onto a common set of levels: the source tensored with a
//! degenerate two-level catalyst held in its first level, plus empty levels the shifts
//! need. The strategy then
//! 1. raises every empty level of positive weight to infinite energy,
//! 2. splits the level straddling success mass `1 - eps`, if any, with a shift,
//! 3. raises the remaining tail to infinite energy (this is where `eps` is lost),
//! 4. extracts the factor `M` on every surviving level,
//! 5. assimilates into the target at zero work,
//! 6. fills in the target's empty levels and relabels.

use crate::error::{Error, Result};
use crate::game::{audit_bound, enumerate_paths, monte_carlo, success_stats, AuditReport, MonteCarloReport, Strategy};
use crate::scalar::Scalar;
use crate::states::{gibbs_rescale, DiagonalState};
use crate::stepfn::{check_eps, relative_mixedness, Mixedness};

use super::assimilation::{arrange, Planner};
use super::shift::ShiftSpec;

/// How the two states were embedded in the common level set.
///
/// Source side: `source_levels` levels of the source with the catalyst in its first
/// level, then as many partner levels (catalyst in its second level, same weights, empty),
/// then `source_empty` levels of zero weight. Target side likewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaddingReport {
    pub source_levels: usize,
    pub target_levels: usize,
    pub source_empty: usize,
    pub target_empty: usize,
    pub total_levels: usize,
}

impl PaddingReport {
    pub fn new(source_levels: usize, target_levels: usize) -> Self {
        let source_empty = 2 * target_levels + 2;
        let target_empty = 2 * source_levels + 2;
        PaddingReport {
            source_levels,
            target_levels,
            source_empty,
            target_empty,
            total_levels: 2 * source_levels + source_empty,
        }
    }

    /// Positions holding the catalyst's second level on the target side.
    pub fn target_partners(&self) -> std::ops::Range<usize> {
        self.target_levels..2 * self.target_levels
    }
}

fn embed<T: Scalar>(state: &DiagonalState<T>, empty: usize) -> Result<DiagonalState<T>> {
    let weights = state.weights();
    let mut padded_weights = weights.clone();
    padded_weights.extend(weights);
    padded_weights.extend(std::iter::repeat_n(T::zero(), empty));
    let mut probs = state.probs();
    probs.extend(std::iter::repeat_n(T::zero(), state.len() + empty));
    DiagonalState::new(padded_weights, probs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPlan<T> {
    pub strategy: Strategy<T>,
    pub padding: PaddingReport,
    /// Padded source the strategy starts from.
    pub initial: DiagonalState<T>,
    /// Padded target reached on success.
    pub target: DiagonalState<T>,
    pub mixedness: Mixedness<T>,
}

pub fn extraction_protocol<T: Scalar>(rho: &DiagonalState<T>, sigma: &DiagonalState<T>, eps: &T) -> Result<ProtocolPlan<T>> {
    check_eps(eps)?;
    let mixedness = relative_mixedness(&gibbs_rescale(rho), &gibbs_rescale(sigma), eps)?;
    let m = mixedness.m.clone();
    let padding = PaddingReport::new(rho.len(), sigma.len());
    let initial = embed(rho, padding.source_empty)?;
    let target = embed(sigma, padding.target_empty)?;
    let mut planner = Planner::new(&initial);

    let empties = (0..planner.len()).filter(|&i| planner.probs[i].is_zero() && !planner.weights[i].is_zero()).collect();
    planner.raise_to_infinity(empties)?;

    let mut occupied: Vec<usize> = (0..planner.len()).filter(|&i| !planner.probs[i].is_zero()).collect();
    occupied.sort_by(|&a, &b| {
        let lhs = planner.probs[a].clone() * planner.weights[b].clone();
        let rhs = planner.probs[b].clone() * planner.weights[a].clone();
        rhs.partial_cmp(&lhs).unwrap_or(std::cmp::Ordering::Equal)
    });
    let keep = T::one() - eps.clone();
    let mut mass = T::zero();
    let mut boundary = occupied.len() - 1;
    for (pos, &l) in occupied.iter().enumerate() {
        let next = mass.clone() + planner.probs[l].clone();
        if next.at_least(&keep) {
            boundary = pos;
            break;
        }
        mass = next;
    }
    let mut tail: Vec<usize> = occupied[boundary + 1..].to_vec();
    let straddling = occupied[boundary];
    let reached = mass.clone() + planner.probs[straddling].clone();
    if !reached.near(&keep) {
        let e = planner.vacant()?;
        let amount = (keep - mass) / planner.probs[straddling].clone() - T::one();
        planner.shift(ShiftSpec::new(straddling, e, amount))?;
        tail.push(e);
    }
    planner.raise_to_infinity(tail)?;

    let survivors: Vec<usize> = occupied[..=boundary].to_vec();
    planner.extract_all(survivors, m.clone())?;

    let sigma_occupied: Vec<usize> = (0..sigma.len()).filter(|&i| !sigma.levels()[i].prob.is_zero()).collect();
    let wanted: Vec<(T, T)> =
        sigma_occupied.iter().map(|&i| (sigma.levels()[i].weight.clone(), sigma.levels()[i].prob.clone())).collect();
    let placed = planner.assimilate(&wanted)?;
    let mut slot = vec![None; target.len()];
    for (&i, &level) in sigma_occupied.iter().zip(&placed) {
        slot[i] = Some(level);
    }
    let order = arrange(&mut planner, &target, slot)?;
    planner.permute(order);

    Ok(ProtocolPlan { strategy: Strategy::new(planner.actions, m), padding, initial, target, mixedness })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Exact,
    MonteCarlo { runs: usize, seed: u64, kt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRun<T> {
    pub plan: ProtocolPlan<T>,
    pub p_s: T,
    /// Smallest log-work factor over successful paths.
    pub success_logwork: Option<T>,
    /// Success-conditioned final state.
    pub state: Option<DiagonalState<T>>,
    /// Final state equals the padded target level by level.
    pub reached_target: bool,
    /// The catalyst ends in its first level on every success path.
    pub catalyst_restored: bool,
    pub audit: AuditReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolRun<T> {
    Exact(ExactRun<T>),
    MonteCarlo { plan: ProtocolPlan<T>, report: MonteCarloReport<T> },
}

fn same_levels<T: Scalar>(a: &DiagonalState<T>, b: &DiagonalState<T>) -> bool {
    a.len() == b.len()
        && a.levels().iter().zip(b.levels()).all(|(x, y)| x.weight.near(&y.weight) && x.prob.near(&y.prob))
}

pub fn run_protocol<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps: &T,
    mode: RunMode,
) -> Result<ProtocolRun<T>> {
    let plan = extraction_protocol(rho, sigma, eps)?;
    match mode {
        RunMode::Exact => {
            let target = &plan.strategy.target;
            let paths = enumerate_paths(&plan.initial, &plan.strategy)?;
            let stats = success_stats(&paths, target)?;
            let success_logwork = paths
                .iter()
                .filter(|p| !p.escaped() && p.logwork.at_least(target))
                .map(|p| p.logwork.clone())
                .reduce(|a, b| if b < a { b } else { a });
            let partners = plan.padding.target_partners();
            let catalyst_restored = paths
                .iter()
                .filter_map(|p| p.state.as_ref().filter(|_| p.logwork.at_least(target)))
                .all(|s| s.levels()[partners.clone()].iter().all(|l| l.prob.near_zero()));
            let reached_target = stats.state.as_ref().is_some_and(|s| same_levels(s, &plan.target));
            let audit = audit_bound(&plan.initial, &plan.strategy, target)?;
            Ok(ProtocolRun::Exact(ExactRun {
                p_s: stats.p_s,
                success_logwork,
                state: stats.state,
                reached_target,
                catalyst_restored,
                audit,
                plan,
            }))
        }
        RunMode::MonteCarlo { runs, seed, kt } => {
            if kt <= 0.0 || !kt.is_finite() {
                return Err(Error::domain(format!("kT must be positive, got {kt}")));
            }
            let report = monte_carlo(&plan.initial, &plan.strategy, kt, runs, seed)?;
            Ok(ProtocolRun::MonteCarlo { plan, report })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Action;
    use crate::scalar::{rat, Rational};
    use crate::stepfn::majorizes;
    use crate::workcalc::extractable_work;
    use proptest::prelude::*;
    use proptest::strategy::Strategy;

    fn state(w: &[(i64, i64)], p: &[(i64, i64)]) -> DiagonalState<Rational> {
        DiagonalState::new(w.iter().map(|&(a, b)| rat(a, b)).collect(), p.iter().map(|&(a, b)| rat(a, b)).collect())
            .unwrap()
    }

    fn worked_pair() -> (DiagonalState<Rational>, DiagonalState<Rational>) {
        (
            state(&[(1, 3), (1, 3), (1, 3)], &[(2, 3), (1, 3), (0, 1)]),
            state(&[(1, 6), (1, 3), (1, 2)], &[(1, 2), (1, 2), (0, 1)]),
        )
    }

    fn exact(run: ProtocolRun<Rational>) -> ExactRun<Rational> {
        match run {
            ProtocolRun::Exact(r) => r,
            ProtocolRun::MonteCarlo { .. } => panic!("expected an exact run"),
        }
    }

    #[test]
    fn padding_counts() {
        let p = PaddingReport::new(3, 2);
        assert_eq!((p.source_empty, p.target_empty, p.total_levels), (6, 8, 12));
        assert_eq!(p.total_levels, 2 * p.target_levels + p.target_empty);
    }

    #[test]
    fn worked_example_steps() {
        let (rho, sigma) = worked_pair();
        let plan = extraction_protocol(&rho, &sigma, &rat(1, 2)).unwrap();
        assert_eq!(plan.strategy.target, rat(4, 3));
        let a = &plan.strategy.actions;
        // raise the empty level and the catalyst partners
        assert_eq!(a[0], Action::Extract { levels: vec![2, 3, 4, 5], factor: rat(0, 1) });
        // split the top level at weight 1/4
        let Action::Shift(spec) = &a[1] else { panic!("expected a shift, got {:?}", a[1]) };
        assert_eq!((spec.level_j, &spec.amount), (0, &rat(-1, 4)));
        assert!(matches!(&a[2], Action::Extract { factor, .. } if *factor == rat(0, 1)));
        assert_eq!(a[3], Action::Extract { levels: vec![0], factor: rat(4, 3) });
    }

    #[test]
    fn worked_example_runs_exactly() {
        let (rho, sigma) = worked_pair();
        let r = exact(run_protocol(&rho, &sigma, &rat(1, 2), RunMode::Exact).unwrap());
        assert_eq!(r.p_s, rat(1, 2));
        assert_eq!(r.success_logwork, Some(rat(4, 3)));
        assert!(r.reached_target && r.catalyst_restored);
        assert_eq!(r.state.unwrap().probs(), r.plan.target.probs());
        assert!(r.audit.holds);
        assert_eq!(r.audit.min_slack, Some(rat(0, 1)));
    }

    #[test]
    fn exact_prefix_skips_the_split() {
        let (rho, sigma) = worked_pair();
        let plan = extraction_protocol(&rho, &sigma, &rat(1, 3)).unwrap();
        assert!(!plan.strategy.actions[..3].iter().any(|a| matches!(a, Action::Shift(_))));
        let r = exact(run_protocol(&rho, &sigma, &rat(1, 3), RunMode::Exact).unwrap());
        assert_eq!(r.p_s, rat(2, 3));
        assert!(r.reached_target);
    }

    #[test]
    fn identity_costs_nothing() {
        let (rho, _) = worked_pair();
        let r = exact(run_protocol(&rho, &rho, &rat(0, 1), RunMode::Exact).unwrap());
        assert_eq!(r.p_s, rat(1, 1));
        assert_eq!(r.success_logwork, Some(rat(1, 1)));
        assert!(r.reached_target);
    }

    #[test]
    fn monte_carlo_mode_is_seeded() {
        let (rho, sigma) = worked_pair();
        let mode = RunMode::MonteCarlo { runs: 2000, seed: 4, kt: 1.0 };
        let ProtocolRun::MonteCarlo { report, .. } = run_protocol(&rho, &sigma, &rat(1, 2), mode).unwrap() else {
            panic!("expected a Monte Carlo run")
        };
        assert!((report.success_rate - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt());
        for t in report.traces.iter().filter(|t| t.success) {
            assert!((t.work - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        }
    }

    fn arb_state() -> impl Strategy<Value = DiagonalState<Rational>> {
        prop::collection::vec((1i64..5, 0i64..5), 1..=4).prop_filter_map("mass", |raw| {
            let total: i64 = raw.iter().map(|&(_, c)| c).sum();
            if total == 0 {
                return None;
            }
            DiagonalState::new(raw.iter().map(|&(w, _)| rat(w, 2)).collect(), raw.iter().map(|&(_, c)| rat(c, total)).collect()).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn protocol_saturates_the_bound(rho in arb_state(), sigma in arb_state(), e in 0i64..4) {
            let eps = rat(e, 5);
            let r = exact(run_protocol(&rho, &sigma, &eps, RunMode::Exact).unwrap());
            let bound = extractable_work(&rho, &sigma, &eps, 1.0).unwrap();
            prop_assert_eq!(r.p_s, rat(1, 1) - eps);
            prop_assert_eq!(r.success_logwork, Some(bound.m));
            prop_assert!(r.reached_target);
            prop_assert!(r.catalyst_restored);
            prop_assert!(r.audit.holds);
            prop_assert!(majorizes(&gibbs_rescale(&r.plan.initial), &gibbs_rescale(&rho)));
        }
    }
}
