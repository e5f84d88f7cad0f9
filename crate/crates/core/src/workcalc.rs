//! Extractable work, its closed-form special cases, and cycle bounds.
//!
//! Every work value is `kT ln(factor)`. Reports keep the factor in the scalar type so that
//! exact comparisons between formulas compare factors, never logarithms.

use crate::error::{Error, Result};
use crate::scalar::{NumericMode, Scalar};
use crate::states::{
    d0_eps_fraction, gibbs_rescale, smooth_support, spectrum_step_function, DiagonalState,
};
use crate::stepfn::{check_eps, relative_mixedness};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkReport<T> {
    /// `kt * ln(m)`; negative values are a minimal investment.
    pub work: f64,
    pub m: T,
    pub binding_l: T,
    pub eps: T,
    pub kt: f64,
    pub mode: NumericMode,
}

/// A work value together with the argument of its logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkValue<T> {
    pub factor: T,
    pub work: f64,
}

impl<T: Scalar> WorkValue<T> {
    fn new(factor: T, kt: f64) -> Self {
        let work = kt * factor.ln();
        WorkValue { factor, work }
    }
}

fn check_kt(kt: f64) -> Result<()> {
    if kt > 0.0 && kt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("kT must be positive and finite, got {kt}")))
    }
}

/// Work extractable from `rho -> sigma` with failure probability at most `eps`.
pub fn extractable_work<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps: &T,
    kt: f64,
) -> Result<WorkReport<T>> {
    check_kt(kt)?;
    let mix = relative_mixedness(&gibbs_rescale(rho), &gibbs_rescale(sigma), eps)?;
    Ok(WorkReport {
        work: kt * mix.m.ln(),
        m: mix.m,
        binding_l: mix.binding_l,
        eps: eps.clone(),
        kt,
        mode: T::MODE,
    })
}

/// Szilard engine with `n` cylinders: `2^n` degenerate levels driven to the uniform state.
///
/// `kT ln2 (n - H)` with `H` the smooth max-entropy of the bare probability vector.
pub fn szilard_work<T: Scalar>(n: u32, rho: &DiagonalState<T>, eps: &T, kt: f64) -> Result<WorkValue<T>> {
    check_kt(kt)?;
    if n >= 63 || rho.len() != 1usize << n {
        return Err(Error::invalid(format!("{n} cylinders need exactly 2^{n} levels, got {}", rho.len())));
    }
    let w0 = &rho.levels()[0].weight;
    if w0.is_zero() || rho.levels().iter().any(|l| l.weight != *w0) {
        return Err(Error::invalid("Szilard formula needs degenerate levels of positive weight"));
    }
    let d = smooth_support(&spectrum_step_function(rho), eps)?;
    let factor = T::from_ratio(1i64 << n, 1) / d;
    Ok(WorkValue::new(factor, kt))
}

/// `kT ln2 (H_max(q) - H_max^eps(p))`; only valid for a flat final spectrum.
pub fn work_via_hmax<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps: &T,
    kt: f64,
) -> Result<WorkValue<T>> {
    check_kt(kt)?;
    check_eps(eps)?;
    let q = gibbs_rescale(sigma);
    if !q.is_flat() {
        return Err(Error::precondition(
            "the max-entropy formula is only established for final states with a flat rescaled spectrum",
        ));
    }
    let d = smooth_support(&gibbs_rescale(rho), eps)?;
    Ok(WorkValue::new(q.positive_support() / d, kt))
}

/// `kT ln2 D_0^eps(rho || thermal state on rho's weights)`.
pub fn d0_work<T: Scalar>(rho: &DiagonalState<T>, eps: &T, kt: f64) -> Result<WorkValue<T>> {
    check_kt(kt)?;
    let fraction = d0_eps_fraction(rho, eps)?;
    Ok(WorkValue::new(T::one() / fraction, kt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleReport<T> {
    /// `rho -> tau` at `eps1`.
    pub m1: T,
    /// `tau -> sigma` at `eps2`.
    pub m2: T,
    /// `rho -> sigma` at `eps1 + eps2`.
    pub m12: T,
    /// `rho -> sigma` at `1 - (1 - eps1)(1 - eps2)`, never above `m12`.
    pub m12_joint: T,
    pub holds: bool,
}

impl<T: Scalar> TriangleReport<T> {
    /// Work form: `W(rho->tau) + W(tau->sigma) <= W(rho->sigma)` in units of kT.
    pub fn works(&self) -> (f64, f64, f64) {
        (self.m1.ln(), self.m2.ln(), self.m12.ln())
    }
}

pub fn triangle_check<T: Scalar>(
    rho: &DiagonalState<T>,
    tau: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps1: &T,
    eps2: &T,
) -> Result<TriangleReport<T>> {
    check_eps(eps1)?;
    check_eps(eps2)?;
    let total = eps1.clone() + eps2.clone();
    if total >= T::one() {
        return Err(Error::domain("eps1 + eps2 must be below 1"));
    }
    let joint = total.clone() - eps1.clone() * eps2.clone();
    let (p, t, s) = (gibbs_rescale(rho), gibbs_rescale(tau), gibbs_rescale(sigma));
    let m1 = relative_mixedness(&p, &t, eps1)?.m;
    let m2 = relative_mixedness(&t, &s, eps2)?.m;
    let m12 = relative_mixedness(&p, &s, &total)?.m;
    let m12_joint = relative_mixedness(&p, &s, &joint)?.m;
    let product = m1.clone() * m2.clone();
    let holds = m12_joint.at_least(&product) && m12.at_least(&m12_joint);
    Ok(TriangleReport { m1, m2, m12, m12_joint, holds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport<T> {
    pub legs: Vec<WorkValue<T>>,
    pub total_work: f64,
    /// `1 / (1 - sum of eps)`, the mixedness of a state with itself at that risk.
    pub bound_factor: T,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `sum of leg works <= kT ln(1 / (1 - sum eps))` around a closed cycle.
///
/// `cycle` lists the states including the closing repeat of the first; `eps[i]` is the
/// risk of leg `i`.
pub fn kelvin_cycle_bound<T: Scalar>(cycle: &[DiagonalState<T>], eps: &[T], kt: f64) -> Result<CycleReport<T>> {
    check_kt(kt)?;
    if cycle.len() < 2 {
        return Err(Error::invalid("a cycle needs at least two states"));
    }
    let first = &cycle[0];
    let last = &cycle[cycle.len() - 1];
    if first.weights() != last.weights() || first.probs() != last.probs() {
        return Err(Error::invalid("cycle is not closed: last state differs from the first"));
    }
    if eps.len() != cycle.len() - 1 {
        return Err(Error::invalid(format!("{} legs but {} eps values", cycle.len() - 1, eps.len())));
    }
    let total_eps = eps.iter().fold(T::zero(), |acc, e| acc + e.clone());
    if total_eps >= T::one() {
        return Err(Error::domain("total risk around the cycle must be below 1"));
    }
    let mut legs = Vec::with_capacity(eps.len());
    let mut product = T::one();
    for (pair, e) in cycle.windows(2).zip(eps) {
        let r = extractable_work(&pair[0], &pair[1], e, kt)?;
        product = product * r.m.clone();
        legs.push(WorkValue { factor: r.m, work: r.work });
    }
    let bound_factor = T::one() / (T::one() - total_eps);
    let total_work = legs.iter().map(|l| l.work).sum();
    let holds = bound_factor.at_least(&product);
    Ok(CycleReport { legs, total_work, bound: kt * bound_factor.ln(), bound_factor, holds })
}
