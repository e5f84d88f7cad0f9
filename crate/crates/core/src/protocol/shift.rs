//! Isothermal shift of the boundary between two levels of equal rescaled height.
//!
//! The analytic (infinitely slow) version moves weight `amount * (A_j + A_k)` from level
//! `k` to level `j` at zero work. The finite version runs the `n`-round shuttle it is the
//! limit of, for validating that limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{Action, Matrix, Strategy};
use crate::scalar::Scalar;
use crate::states::{DiagonalState, Level};

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec<T> {
    pub level_j: usize,
    pub level_k: usize,
    /// Fraction of the pair's weight moved from `k` to `j`, in
    /// `[-A_j / (A_j + A_k), A_k / (A_j + A_k)]`.
    pub amount: T,
}

impl<T: Scalar> ShiftSpec<T> {
    pub fn new(level_j: usize, level_k: usize, amount: T) -> Self {
        ShiftSpec { level_j, level_k, amount }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome<T> {
    pub state: DiagonalState<T>,
    /// Probability of finding the system in the shifted pair.
    pub pair_prob: T,
    /// Identically zero on every branch.
    pub work: T,
}

/// Applies a shift in place to weight and probability vectors.
pub(crate) fn shift_in_place<T: Scalar>(weights: &mut [T], probs: &mut [T], spec: &ShiftSpec<T>) -> Result<()> {
    let (j, k) = (spec.level_j, spec.level_k);
    let n = weights.len();
    if j >= n || k >= n || j == k {
        return Err(Error::invalid("shift needs two distinct levels in range"));
    }
    let total = weights[j].clone() + weights[k].clone();
    if total.is_zero() {
        return Err(Error::precondition("cannot shift between two infinite-energy levels"));
    }
    // an empty zero-weight partner satisfies the equal-height condition vacuously
    let lhs = probs[j].clone() * weights[k].clone();
    let rhs = probs[k].clone() * weights[j].clone();
    if !lhs.near(&rhs) {
        return Err(Error::precondition(format!("levels {j} and {k} have different rescaled heights")));
    }
    let low = -(weights[j].clone() / total.clone());
    let high = weights[k].clone() / total.clone();
    if !spec.amount.at_least(&low) || !high.at_least(&spec.amount) {
        return Err(Error::domain(format!("shift amount {} outside [{low}, {high}]", spec.amount)));
    }
    let moved = spec.amount.clone() * total.clone();
    let new_j = clamp_nonnegative(weights[j].clone() + moved.clone());
    let new_k = clamp_nonnegative(weights[k].clone() - moved);
    let pair = probs[j].clone() + probs[k].clone();
    probs[j] = pair.clone() * new_j.clone() / total.clone();
    probs[k] = pair * new_k.clone() / total;
    weights[j] = new_j;
    weights[k] = new_k;
    Ok(())
}

fn clamp_nonnegative<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else {
        x
    }
}

pub fn isothermal_shift<T: Scalar>(state: &DiagonalState<T>, spec: &ShiftSpec<T>) -> Result<ShiftOutcome<T>> {
    let mut weights = state.weights();
    let mut probs = state.probs();
    shift_in_place(&mut weights, &mut probs, spec)?;
    let pair_prob = probs[spec.level_j].clone() + probs[spec.level_k].clone();
    let levels = state
        .levels()
        .iter()
        .zip(weights.into_iter().zip(probs))
        .map(|(l, (weight, prob))| Level { weight, prob, label: l.label })
        .collect();
    Ok(ShiftOutcome { state: DiagonalState::from_levels(levels)?, pair_prob, work: T::zero() })
}

/// One round of the shuttle: thermal shares of the pair before the round, the factors
/// credited on `j` and `k`, and the share of `j` after the round's mix.
struct Round<T> {
    share_j: T,
    factor_j: T,
    share_k: T,
    factor_k: T,
    share_j_after: T,
}

/// Round `r` raises `A_j` by `amount * S / n` (factor on `j`), lowers `A_k` by the same
/// amount (factor on `k`), then fully mixes the pair.
fn shuttle_rounds<T: Scalar>(a_j: &T, a_k: &T, amount: &T, n: usize) -> Vec<Round<T>> {
    let total = a_j.clone() + a_k.clone();
    let step = amount.clone() * total.clone() / T::from_usize(n);
    let (mut wj, mut wk) = (a_j.clone(), a_k.clone());
    (0..n)
        .map(|_| {
            let factor_j = T::one() + step.clone() / wj.clone();
            let factor_k = T::one() - step.clone() / wk.clone();
            let (share_j, share_k) = (wj.clone() / total.clone(), wk.clone() / total.clone());
            wj = wj.clone() + step.clone();
            wk = wk.clone() - step.clone();
            Round { share_j, factor_j, share_k, factor_k, share_j_after: wj.clone() / total.clone() }
        })
        .collect()
}

/// Float plan for sampling: (ln factor on j, ln factor on k, share of j after the mix).
fn float_plan<T: Scalar>(rounds: &[Round<T>]) -> Vec<(f64, f64, f64)> {
    rounds.iter().map(|r| (r.factor_j.ln(), r.factor_k.ln(), r.share_j_after.to_f64())).collect()
}

fn check_shuttle<T: Scalar>(state: &DiagonalState<T>, spec: &ShiftSpec<T>, n: usize) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::invalid("the shuttle needs at least one round"));
    }
    // reuse the analytic checks
    isothermal_shift(state, spec)?;
    let a_j = state.levels()[spec.level_j].weight.clone();
    let a_k = state.levels()[spec.level_k].weight.clone();
    if a_j.is_zero() || a_k.is_zero() {
        return Err(Error::precondition("the finite shuttle needs both levels at finite energy"));
    }
    let total = a_j.clone() + a_k.clone();
    let (low, high) = (-(a_j.clone() / total.clone()), a_k.clone() / total);
    if spec.amount.at_least(&high) || low.at_least(&spec.amount) {
        return Err(Error::precondition("the finite shuttle cannot empty a level completely"));
    }
    Ok((a_j, a_k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuttleEnumeration<T> {
    /// `E[w_tot]`, where `w_tot` is the product of the factors credited in a run.
    pub expected_factor: T,
    pub mean_work: f64,
    pub std_work: f64,
    pub outcomes: usize,
}

/// Largest round count [`shuttle_exact`] accepts.
pub const SHUTTLE_EXACT_LIMIT: usize = 12;

/// Exact distribution of the shuttle's work by enumerating all `2^n` in-pair histories.
///
/// After every mix the pair is thermal again, so rounds are independent.
pub fn shuttle_exact<T: Scalar>(state: &DiagonalState<T>, spec: &ShiftSpec<T>, n: usize) -> Result<ShuttleEnumeration<T>> {
    if n > SHUTTLE_EXACT_LIMIT {
        return Err(Error::CapExceeded { extracts: 2 * n, limit: 2 * SHUTTLE_EXACT_LIMIT });
    }
    let (a_j, a_k) = check_shuttle(state, spec, n)?;
    let rounds = shuttle_rounds(&a_j, &a_k, &spec.amount, n);
    let pair = state.levels()[spec.level_j].prob.clone() + state.levels()[spec.level_k].prob.clone();
    // (probability, factor product, ln work)
    let mut paths = vec![(pair.clone(), T::one(), 0.0f64)];
    for Round { share_j: pj, factor_j: fj, share_k: pk, factor_k: fk, .. } in &rounds {
        let (lj, lk) = (fj.ln(), fk.ln());
        paths = paths
            .into_iter()
            .flat_map(|(p, w, l)| {
                [
                    (p.clone() * pj.clone(), w.clone() * fj.clone(), l + lj),
                    (p * pk.clone(), w * fk.clone(), l + lk),
                ]
            })
            .collect();
    }
    let outside = T::one() - pair;
    let expected_factor = paths.iter().fold(outside.clone(), |acc, (p, w, _)| acc + p.clone() * w.clone());
    let mean_work: f64 = paths.iter().map(|(p, _, l)| p.to_f64() * l).sum();
    let second: f64 = paths.iter().map(|(p, _, l)| p.to_f64() * l * l).sum();
    let std_work = (second - mean_work * mean_work).max(0.0).sqrt();
    Ok(ShuttleEnumeration { expected_factor, mean_work, std_work, outcomes: paths.len() + 1 })
}

/// The shuttle as a game strategy: per round, extract on `j`, extract on `k`, mix the pair.
pub fn shuttle_strategy<T: Scalar>(state: &DiagonalState<T>, spec: &ShiftSpec<T>, n: usize) -> Result<Strategy<T>> {
    let (a_j, a_k) = check_shuttle(state, spec, n)?;
    let rounds = shuttle_rounds(&a_j, &a_k, &spec.amount, n);
    let mut weights = state.weights();
    let total = a_j + a_k;
    let step = spec.amount.clone() * total / T::from_usize(n);
    let mut actions = Vec::with_capacity(3 * n);
    for round in rounds {
        actions.push(Action::Extract { levels: vec![spec.level_j], factor: round.factor_j });
        actions.push(Action::Extract { levels: vec![spec.level_k], factor: round.factor_k });
        weights[spec.level_j] = weights[spec.level_j].clone() + step.clone();
        weights[spec.level_k] = weights[spec.level_k].clone() - step.clone();
        actions.push(Action::Thermalize { matrix: Matrix::gibbs_mix(&weights, &[spec.level_j, spec.level_k])? });
    }
    Ok(Strategy::new(actions, T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuttleTrace {
    pub round_work: Vec<f64>,
    pub total_work: f64,
    /// Occupied level at the end.
    pub final_level: usize,
}

/// One seeded realization of the shuttle, in units of kT.
pub fn shuttle_realization<T: Scalar>(
    state: &DiagonalState<T>,
    spec: &ShiftSpec<T>,
    n: usize,
    seed: u64,
    index: u64,
) -> Result<ShuttleTrace> {
    let (a_j, a_k) = check_shuttle(state, spec, n)?;
    let plan = float_plan(&shuttle_rounds(&a_j, &a_k, &spec.amount, n));
    let probs: Vec<f64> = state.levels().iter().map(|l| l.prob.to_f64()).collect();
    Ok(run_shuttle(&probs, spec.level_j, spec.level_k, &plan, seed, index))
}

fn run_shuttle(probs: &[f64], j: usize, k: usize, plan: &[(f64, f64, f64)], seed: u64, index: u64) -> ShuttleTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut level = sample_index(probs, rng.random::<f64>());
    let mut round_work = Vec::with_capacity(plan.len());
    for &(lj, lk, share_after) in plan {
        let mut w = 0.0;
        if level == j || level == k {
            w = if level == j { lj } else { lk };
            level = if rng.random::<f64>() < share_after { j } else { k };
        }
        round_work.push(w);
    }
    let total_work = round_work.iter().sum();
    ShuttleTrace { round_work, total_work, final_level: level }
}

pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let target = u * total;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuttleStats {
    pub runs: usize,
    pub mean_work: f64,
    pub std_work: f64,
    /// Sample mean of `exp(work)`; 1 in expectation.
    pub mean_factor: f64,
}

/// Seeded Monte Carlo over independent shuttle realizations.
pub fn shuttle_monte_carlo<T: Scalar>(
    state: &DiagonalState<T>,
    spec: &ShiftSpec<T>,
    n: usize,
    runs: usize,
    seed: u64,
) -> Result<ShuttleStats> {
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let (a_j, a_k) = check_shuttle(state, spec, n)?;
    let plan = float_plan(&shuttle_rounds(&a_j, &a_k, &spec.amount, n));
    let probs: Vec<f64> = state.levels().iter().map(|l| l.prob.to_f64()).collect();
    let works: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|i| run_shuttle(&probs, spec.level_j, spec.level_k, &plan, seed, i).total_work)
        .collect();
    let mean_work = works.iter().sum::<f64>() / runs as f64;
    let var = works.iter().map(|w| (w - mean_work).powi(2)).sum::<f64>() / runs as f64;
    let mean_factor = works.iter().map(|w| w.exp()).sum::<f64>() / runs as f64;
    Ok(ShuttleStats { runs, mean_work, std_work: var.sqrt(), mean_factor })
}
