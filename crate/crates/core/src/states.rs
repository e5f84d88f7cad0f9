//! Diagonal states, Gibbs rescaling and entropy functionals.
//!
//! A level with weight 0 stands for infinite energy and must be empty. Entropies are in
//! bits.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};
use crate::stepfn::{check_eps, Block, StepFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct Level<T> {
    /// Gibbs weight `exp(-E / kT)`.
    pub weight: T,
    pub prob: T,
    /// Stable identity used by permutations and reports.
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState<T> {
    levels: Vec<Level<T>>,
    energies: Option<EnergyView>,
}

/// Energies and temperature a state was specified with.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyView {
    pub energies: Vec<f64>,
    pub kt: f64,
}

impl<T: Scalar> DiagonalState<T> {
    pub fn new(weights: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if weights.len() != probs.len() {
            return Err(Error::invalid(format!(
                "{} weights but {} probabilities",
                weights.len(),
                probs.len()
            )));
        }
        let levels = weights
            .into_iter()
            .zip(probs)
            .enumerate()
            .map(|(label, (weight, prob))| Level { weight, prob, label })
            .collect();
        Self::from_levels(levels)
    }

    /// Validates an explicit level list (labels are kept as given).
    pub fn from_levels(levels: Vec<Level<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("a state needs at least one level"));
        }
        for (i, l) in levels.iter().enumerate() {
            if !l.weight.to_f64().is_finite() || !l.prob.to_f64().is_finite() {
                return Err(Error::invalid(format!("level {i}: weight and probability must be finite")));
            }
            if l.weight < T::zero() {
                return Err(Error::invalid(format!("level {i}: negative weight")));
            }
            if l.prob < T::zero() {
                return Err(Error::invalid(format!("level {i}: negative probability")));
            }
            if l.weight.is_zero() && !l.prob.is_zero() {
                return Err(Error::invalid(format!("level {i}: infinite-energy level must be empty")));
            }
        }
        let total = sum(levels.iter().map(|l| &l.prob));
        if !total.near(&T::one()) {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        if sum(levels.iter().map(|l| &l.weight)).is_zero() {
            return Err(Error::invalid("partition function is zero"));
        }
        Ok(DiagonalState { levels, energies: None })
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn weights(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.weight.clone()).collect()
    }

    pub fn probs(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.prob.clone()).collect()
    }

    pub fn partition_function(&self) -> T {
        sum(self.levels.iter().map(|l| &l.weight))
    }

    pub fn energy_view(&self) -> Option<&EnergyView> {
        self.energies.as_ref()
    }

    /// Same weights, new probabilities.
    pub fn with_probs(&self, probs: Vec<T>) -> Result<Self> {
        if probs.len() != self.len() {
            return Err(Error::invalid("probability vector has the wrong length"));
        }
        let levels = self
            .levels
            .iter()
            .zip(probs)
            .map(|(l, prob)| Level { weight: l.weight.clone(), prob, label: l.label })
            .collect();
        let mut s = Self::from_levels(levels)?;
        s.energies = self.energies.clone();
        Ok(s)
    }

    /// Level `i` of the result is level `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.len())?;
        let levels = order.iter().map(|&i| self.levels[i].clone()).collect();
        let energies = self.energies.as_ref().map(|v| EnergyView {
            energies: order.iter().map(|&i| v.energies[i]).collect(),
            kt: v.kt,
        });
        Ok(DiagonalState { levels, energies })
    }

    /// Level indices sorted by rescaled height `prob / weight`, descending, stable.
    /// Infinite-energy levels come last.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| compare_heights(&self.levels[b], &self.levels[a]));
        idx
    }
}

impl DiagonalState<f64> {
    /// Weights `exp(-E / kT)`; `E = +inf` gives weight 0.
    pub fn from_energies(energies: &[f64], probs: Vec<f64>, kt: f64) -> Result<Self> {
        if kt <= 0.0 || !kt.is_finite() {
            return Err(Error::invalid(format!("kT must be positive and finite, got {kt}")));
        }
        if energies.iter().any(|e| e.is_nan() || *e == f64::NEG_INFINITY) {
            return Err(Error::invalid("energies must be finite or +inf"));
        }
        let weights = energies.iter().map(|e| (-e / kt).exp()).collect();
        let mut s = Self::new(weights, probs)?;
        s.energies = Some(EnergyView { energies: energies.to_vec(), kt });
        Ok(s)
    }
}

/// Compares `a.prob / a.weight` with `b.prob / b.weight` without dividing; weight-0
/// levels count as lowest.
pub(crate) fn compare_heights<T: Scalar>(a: &Level<T>, b: &Level<T>) -> Ordering {
    match (a.weight.is_zero(), b.weight.is_zero()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => {
            let lhs = a.prob.clone() * b.weight.clone();
            let rhs = b.prob.clone() * a.weight.clone();
            lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal)
        }
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::invalid(format!("permutation has {} entries for {n} levels", order.len())));
    }
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::invalid(format!("{order:?} is not a permutation of 0..{n}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// One block per level: width = weight, height = prob / weight.
pub fn gibbs_rescale<T: Scalar>(state: &DiagonalState<T>) -> StepFunction<T> {
    let blocks = state
        .levels
        .iter()
        .filter(|l| !l.weight.is_zero())
        .map(|l| Block::new(l.weight.clone(), l.prob.clone() / l.weight.clone()))
        .collect();
    StepFunction::new(blocks).expect("valid states rescale to valid step functions")
}

/// Thermal state `prob_i = A_i / Z`.
pub fn gibbs_state<T: Scalar>(weights: Vec<T>) -> Result<DiagonalState<T>> {
    let z = sum(weights.iter());
    if z.is_zero() {
        return Err(Error::invalid("all weights are zero"));
    }
    let probs = weights.iter().map(|a| a.clone() / z.clone()).collect();
    DiagonalState::new(weights, probs)
}

pub fn shannon_entropy<T: Scalar>(state: &DiagonalState<T>) -> f64 {
    state
        .levels
        .iter()
        .map(|l| l.prob.to_f64())
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Mean energy at inverse temperature `beta`.
///
/// Uses the stored energies when the state was given by energies; otherwise
/// `E_i = -ln(A_i) / beta`.
pub fn expected_energy<T: Scalar>(state: &DiagonalState<T>, beta: f64) -> Result<f64> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be positive and finite, got {beta}")));
    }
    let mut total = 0.0;
    for (i, l) in state.levels.iter().enumerate() {
        if l.prob.is_zero() {
            continue;
        }
        let e = match &state.energies {
            Some(v) => v.energies[i],
            None => -l.weight.ln() / beta,
        };
        if !e.is_finite() {
            return Err(Error::invalid(format!("level {i} is occupied but has infinite energy")));
        }
        total += l.prob.to_f64() * e;
    }
    Ok(total)
}

/// `log2` of the width where the spectrum is positive.
pub fn h_max<T: Scalar>(f: &StepFunction<T>) -> f64 {
    f.positive_support().log2()
}

/// Minimal extent carrying mass `1 - eps` (the smoothed support `d_eps`).
pub fn smooth_support<T: Scalar>(f: &StepFunction<T>, eps: &T) -> Result<T> {
    check_eps(eps)?;
    f.check_unit_mass("spectrum")?;
    f.curve()
        .inf_inverse(&(T::one() - eps.clone()))
        .ok_or_else(|| Error::domain("spectrum cannot reach mass 1 - eps"))
}

pub fn h_max_eps<T: Scalar>(f: &StepFunction<T>, eps: &T) -> Result<f64> {
    Ok(smooth_support(f, eps)?.log2())
}

/// Weight of the minimal fractional prefix (levels in descending rescaled height) carrying
/// probability `1 - eps`, divided by the partition function.
pub fn d0_eps_fraction<T: Scalar>(state: &DiagonalState<T>, eps: &T) -> Result<T> {
    check_eps(eps)?;
    let target = T::one() - eps.clone();
    let mut mass = T::zero();
    let mut weight = T::zero();
    for i in state.descending_order() {
        let l = &state.levels[i];
        if l.prob.is_zero() {
            break;
        }
        let next = mass.clone() + l.prob.clone();
        if next >= target {
            let part = (target - mass) / l.prob.clone();
            weight = weight + l.weight.clone() * part;
            return Ok(weight / state.partition_function());
        }
        mass = next;
        weight = weight + l.weight.clone();
    }
    // float residue only
    Ok(weight / state.partition_function())
}

/// `D_0^eps` of a state relative to the thermal state on its own weights, in bits.
pub fn d0_eps<T: Scalar>(state: &DiagonalState<T>, eps: &T) -> Result<f64> {
    Ok(-d0_eps_fraction(state, eps)?.log2())
}

/// The probability vector as a step function of unit-width blocks.
pub fn spectrum_step_function<T: Scalar>(state: &DiagonalState<T>) -> StepFunction<T> {
    let blocks = state.levels.iter().map(|l| Block::new(T::one(), l.prob.clone())).collect();
    StepFunction::new(blocks).expect("probabilities are valid heights")
}

/// Product state: level `(i, j)` at index `i * b.len() + j`.
pub fn tensor_product<T: Scalar>(a: &DiagonalState<T>, b: &DiagonalState<T>) -> DiagonalState<T> {
    let mut levels = Vec::with_capacity(a.len() * b.len());
    for x in &a.levels {
        for y in &b.levels {
            levels.push(Level {
                weight: x.weight.clone() * y.weight.clone(),
                prob: x.prob.clone() * y.prob.clone(),
                label: levels.len(),
            });
        }
    }
    DiagonalState { levels, energies: None }
}

/// `n`-fold product, refusing results with more than `max_levels` levels.
pub fn tensor_power<T: Scalar>(state: &DiagonalState<T>, n: usize, max_levels: usize) -> Result<DiagonalState<T>> {
    if n == 0 {
        return Err(Error::invalid("tensor power needs n >= 1"));
    }
    let size = (state.len() as f64).powi(n as i32);
    if size > max_levels as f64 {
        return Err(Error::invalid(format!("{n}-fold power has {size} levels, cap is {max_levels}")));
    }
    let mut out = state.clone();
    out.energies = None;
    for _ in 1..n {
        out = tensor_product(&out, state);
    }
    Ok(out)
}
