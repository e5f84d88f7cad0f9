//! Single realizations of the game and seeded Monte Carlo over many of them.
//!
//! Realization `i` of a run with seed `s` draws from its own ChaCha8 stream `(s, i)`, so
//! results do not depend on how realizations are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::protocol::shift::{sample_index, shift_in_place};
use crate::scalar::Scalar;
use crate::states::DiagonalState;

use super::action::{Action, Strategy};

/// First-law bookkeeping of one realization: `dE_sys = -dE_bath - dW - dE_extra`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ledger {
    pub d_e_sys: f64,
    pub d_e_bath: f64,
    /// Work delivered to the work reservoir: the target on success, everything otherwise.
    pub d_w: f64,
    /// Work extracted beyond the target.
    pub d_e_extra: f64,
}

impl Ledger {
    /// Residual of the first-law identity; zero up to rounding.
    pub fn imbalance(&self) -> f64 {
        self.d_e_sys + self.d_e_bath + self.d_w + self.d_e_extra
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub initial_level: usize,
    /// Occupied level after each action, up to an escape.
    pub history: Vec<usize>,
    /// Product of the credited factors.
    pub logwork: T,
    /// `kT ln(logwork)`; `-inf` after an escape.
    pub work: f64,
    pub escaped: bool,
    pub success: bool,
    /// `None` for escaped realizations.
    pub ledger: Option<Ledger>,
}

enum Step<T> {
    /// Cumulative distribution of the destination for each source level.
    Hop { cdf: Vec<Vec<f64>> },
    Extract { inside: Vec<bool>, factor: T, ln_factor: f64 },
    Permute { position: Vec<usize> },
    Shift { j: usize, k: usize, share_j: f64 },
    SetEmpty { level: usize },
}

/// A strategy resolved against an initial state: weights along the way are fixed, so
/// every per-step quantity can be precomputed once.
pub struct CompiledStrategy<T> {
    initial: Vec<f64>,
    steps: Vec<Step<T>>,
    /// Level energies in units of kT before each step, plus the final ones.
    energies: Vec<Vec<f64>>,
    target: T,
}

fn energies_of<T: Scalar>(weights: &[T]) -> Vec<f64> {
    weights.iter().map(|w| -w.ln()).collect()
}

impl<T: Scalar> CompiledStrategy<T> {
    pub fn new(state: &DiagonalState<T>, strategy: &Strategy<T>) -> Result<Self> {
        strategy.validate(state.len())?;
        let mut weights = state.weights();
        let n = weights.len();
        let mut steps = Vec::with_capacity(strategy.actions.len());
        let mut energies = vec![energies_of(&weights)];
        for (i, action) in strategy.actions.iter().enumerate() {
            let context = |e: Error| Error::Invalid(format!("action {i} ({}): {e}", action.name()));
            let step = match action {
                Action::Thermalize { matrix } => {
                    matrix.check_thermalization(&weights).map_err(context)?;
                    let cdf = (0..n)
                        .map(|j| {
                            let mut acc = 0.0;
                            (0..n)
                                .map(|r| {
                                    acc += matrix.get(r, j).to_f64();
                                    acc
                                })
                                .collect()
                        })
                        .collect();
                    Step::Hop { cdf }
                }
                Action::Extract { levels, factor } => {
                    let mut inside = vec![false; n];
                    for &l in levels {
                        inside[l] = true;
                        weights[l] = weights[l].clone() * factor.clone();
                    }
                    Step::Extract { inside, factor: factor.clone(), ln_factor: factor.ln() }
                }
                Action::Permute { order } => {
                    let mut position = vec![0; n];
                    for (new, &old) in order.iter().enumerate() {
                        position[old] = new;
                    }
                    weights = order.iter().map(|&o| weights[o].clone()).collect();
                    Step::Permute { position }
                }
                Action::Shift(spec) => {
                    let mut scratch = vec![T::zero(); n];
                    shift_in_place(&mut weights, &mut scratch, spec).map_err(context)?;
                    let (wj, wk) = (weights[spec.level_j].to_f64(), weights[spec.level_k].to_f64());
                    Step::Shift { j: spec.level_j, k: spec.level_k, share_j: wj / (wj + wk) }
                }
                Action::SetEmpty { level, weight } => {
                    weights[*level] = weight.clone();
                    Step::SetEmpty { level: *level }
                }
            };
            steps.push(step);
            energies.push(energies_of(&weights));
        }
        let initial = state.levels().iter().map(|l| l.prob.to_f64()).collect();
        Ok(CompiledStrategy { initial, steps, energies, target: strategy.target.clone() })
    }

    /// Realization `index` of the stream family `seed`; energies and work scale with `kt`.
    pub fn realize(&self, kt: f64, seed: u64, index: u64) -> Result<Trace<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut level = sample_index(&self.initial, rng.random::<f64>());
        let initial_level = level;
        let mut history = Vec::with_capacity(self.steps.len());
        let mut logwork = T::one();
        let (mut d_e_sys, mut d_e_bath, mut work) = (0.0, 0.0, 0.0);
        for (i, step) in self.steps.iter().enumerate() {
            let (before, after) = (&self.energies[i], &self.energies[i + 1]);
            match step {
                Step::Hop { cdf } => {
                    let u = rng.random::<f64>();
                    let column = &cdf[level];
                    let total = column.last().copied().unwrap_or(1.0);
                    let next = column.iter().position(|&c| u * total < c).unwrap_or(column.len() - 1);
                    let de = kt * (before[next] - before[level]);
                    d_e_sys += de;
                    d_e_bath -= de;
                    level = next;
                }
                Step::Extract { inside, factor, ln_factor } => {
                    if inside[level] {
                        logwork = logwork * factor.clone();
                        if factor.is_zero() {
                            return Ok(Trace {
                                initial_level,
                                history,
                                logwork,
                                work: f64::NEG_INFINITY,
                                escaped: true,
                                success: false,
                                ledger: None,
                            });
                        }
                        work += kt * ln_factor;
                        d_e_sys -= kt * ln_factor;
                    }
                }
                Step::Permute { position } => level = position[level],
                Step::Shift { j, k, share_j } => {
                    if level == *j || level == *k {
                        let next = if rng.random::<f64>() < *share_j { *j } else { *k };
                        let de = kt * (after[next] - before[level]);
                        d_e_sys += de;
                        d_e_bath -= de;
                        level = next;
                    }
                }
                Step::SetEmpty { level: l } => {
                    if *l == level {
                        return Err(Error::precondition(format!("action {i} (set_empty): level {l} is occupied")));
                    }
                }
            }
            history.push(level);
        }
        let success = logwork.at_least(&self.target);
        let (d_w, d_e_extra) = if success {
            let dw = kt * self.target.ln();
            (dw, work - dw)
        } else {
            (work, 0.0)
        };
        Ok(Trace {
            initial_level,
            history,
            logwork,
            work,
            escaped: false,
            success,
            ledger: Some(Ledger { d_e_sys, d_e_bath, d_w, d_e_extra }),
        })
    }
}

/// One realization with stream index 0.
pub fn sample_realization<T: Scalar>(state: &DiagonalState<T>, strategy: &Strategy<T>, kt: f64, seed: u64) -> Result<Trace<T>> {
    CompiledStrategy::new(state, strategy)?.realize(kt, seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport<T> {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// 95% Wilson score interval for the success probability.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Ordered by realization index.
    pub traces: Vec<Trace<T>>,
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: usize, runs: usize, z: f64) -> (f64, f64) {
    if runs == 0 {
        return (0.0, 1.0);
    }
    let n = runs as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn monte_carlo<T: Scalar>(
    state: &DiagonalState<T>,
    strategy: &Strategy<T>,
    kt: f64,
    runs: usize,
    seed: u64,
) -> Result<MonteCarloReport<T>> {
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let compiled = CompiledStrategy::new(state, strategy)?;
    let traces = (0..runs as u64)
        .into_par_iter()
        .map(|i| compiled.realize(kt, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let successes = traces.iter().filter(|t| t.success).count();
    let (ci_low, ci_high) = wilson_interval(successes, runs, 1.96);
    Ok(MonteCarloReport { runs, successes, success_rate: successes as f64 / runs as f64, ci_low, ci_high, traces })
}
