//! Second-law style checks: free-entropy increase versus majorization, partial
//! thermalization of a level pair, and work from maps that do not fix the uniform state.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::game::Matrix;
use crate::scalar::Scalar;
use crate::states::{expected_energy, gibbs_rescale, shannon_entropy, DiagonalState};
use crate::stepfn::{relative_mixedness, StepFunction};

/// Slack allowed on the entropy inequality, in bits.
pub const ENTROPY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LawReport<T> {
    /// `S(after) - S(before)` in bits.
    pub delta_s: f64,
    /// `beta (<E>_after - <E>_before) / ln 2`.
    pub beta_delta_e: f64,
    /// Relative mixedness at zero risk; the transition is free iff it is at least 1.
    pub m0: T,
    /// `kT ln m0`.
    pub w0: f64,
    /// `delta_s >= beta_delta_e`.
    pub entropy_holds: bool,
    /// `m0 >= 1`, i.e. the rescaled spectra are ordered by majorization.
    pub majorization_holds: bool,
    /// The entropy test passes although the transition needs work.
    pub kelvin_risk: bool,
}

pub fn entropy_energy_check<T: Scalar>(
    before: &DiagonalState<T>,
    after: &DiagonalState<T>,
    beta: f64,
) -> Result<LawReport<T>> {
    if before.len() != after.len() {
        return Err(Error::invalid(format!("{} levels before but {} after", before.len(), after.len())));
    }
    if before.levels().iter().zip(after.levels()).any(|(a, b)| !a.weight.near(&b.weight)) {
        return Err(Error::invalid("energies must be the same before and after"));
    }
    let delta_s = shannon_entropy(after) - shannon_entropy(before);
    let beta_delta_e = beta * (expected_energy(after, beta)? - expected_energy(before, beta)?) / LN_2;
    let m0 = relative_mixedness(&gibbs_rescale(before), &gibbs_rescale(after), &T::zero())?.m;
    let w0 = m0.ln() / beta;
    let entropy_holds = delta_s - beta_delta_e >= -ENTROPY_TOLERANCE;
    let majorization_holds = m0.at_least(&T::one());
    Ok(LawReport {
        delta_s,
        beta_delta_e,
        m0,
        w0,
        entropy_holds,
        majorization_holds,
        kelvin_risk: entropy_holds && !majorization_holds,
    })
}

/// Moves `(p_i, p_j)` a fraction `t` of the way toward the thermal split of the pair,
/// keeping `p_i + p_j` fixed.
pub fn two_level_partial_thermalize<T: Scalar>(
    state: &DiagonalState<T>,
    i: usize,
    j: usize,
    t: &T,
    beta: f64,
) -> Result<(DiagonalState<T>, LawReport<T>)> {
    let n = state.len();
    if i >= n || j >= n || i == j {
        return Err(Error::invalid("need two distinct levels in range"));
    }
    if t.is_negative_strict() || *t > T::one() {
        return Err(Error::domain(format!("mixing fraction must lie in [0, 1], got {t}")));
    }
    let levels = state.levels();
    let pair_weight = levels[i].weight.clone() + levels[j].weight.clone();
    if pair_weight.is_zero() {
        return Err(Error::precondition("both levels have infinite energy"));
    }
    let pair = levels[i].prob.clone() + levels[j].prob.clone();
    let thermal_i = pair.clone() * levels[i].weight.clone() / pair_weight;
    let new_i = levels[i].prob.clone() + t.clone() * (thermal_i - levels[i].prob.clone());
    let mut probs = state.probs();
    probs[j] = pair - new_i.clone();
    probs[i] = new_i;
    let after = state.with_probs(probs)?;
    let report = entropy_energy_check(state, &after, beta)?;
    Ok((after, report))
}

/// Work available from repeatedly applying a non-bistochastic map to degenerate levels.
#[derive(Debug, Clone, PartialEq)]
pub struct KelvinReport<T> {
    /// Image of the uniform distribution.
    pub sigma: Vec<T>,
    /// Per-copy work in units of kT for many copies: `(log2 d - S(sigma)) ln 2`.
    pub rate: f64,
    /// `(n, ln M(sigma^n -> uniform^n, eps) / n)` for each checked `n`.
    pub finite_rates: Vec<(usize, f64)>,
    /// `|finite rate - rate|` never grows along `finite_rates`.
    pub monotone: bool,
}

/// Largest number of copies the finite-size check uses.
pub const KELVIN_MAX_COPIES: usize = 12;

/// Risk used for the finite-size rates.
pub fn kelvin_eps<T: Scalar>() -> T {
    T::from_ratio(1, 100)
}

pub fn kelvin_violation_demo<T: Scalar>(map: &Matrix<T>) -> Result<KelvinReport<T>> {
    if !map.is_stochastic() {
        return Err(Error::invalid("map must be column-stochastic"));
    }
    if map.is_bistochastic() {
        return Err(Error::precondition("bistochastic maps fix the uniform state and yield no work"));
    }
    let d = map.dim();
    let uniform = vec![T::one() / T::from_usize(d); d];
    let sigma = map.apply(&uniform);
    let image = DiagonalState::new(vec![T::one(); d], sigma.clone())?;
    let rate = ((d as f64).log2() - shannon_entropy(&image)) * LN_2;
    let single = gibbs_rescale(&image);
    let flat = StepFunction::flat(T::from_usize(d))?;
    let eps = kelvin_eps::<T>();
    let finite_rates = (2..=KELVIN_MAX_COPIES)
        .map(|n| {
            let m = relative_mixedness(&single.tensor_power(n)?, &flat.tensor_power(n)?, &eps)?.m;
            Ok((n, m.ln() / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = finite_rates.iter().map(|(_, r)| (r - rate).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + ENTROPY_TOLERANCE);
    Ok(KelvinReport { sigma, rate, finite_rates, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::apply_thermalization;
    use crate::scalar::{rat, Rational};
    use proptest::prelude::*;

    fn state(w: &[(i64, i64)], p: &[(i64, i64)]) -> DiagonalState<Rational> {
        DiagonalState::new(w.iter().map(|&(a, b)| rat(a, b)).collect(), p.iter().map(|&(a, b)| rat(a, b)).collect())
            .unwrap()
    }

    #[test]
    fn entropy_increase_without_majorization() {
        let before = state(&[(1, 1), (1, 1), (1, 1)], &[(1, 2), (1, 2), (0, 1)]);
        let after = state(&[(1, 1), (1, 1), (1, 1)], &[(2, 3), (1, 6), (1, 6)]);
        let r = entropy_energy_check(&before, &after, 1.0).unwrap();
        assert!((r.delta_s - 0.251629).abs() < 1e-6);
        assert_eq!(r.beta_delta_e, 0.0);
        assert_eq!(r.m0, rat(3, 4));
        assert!((r.w0 - (0.75f64).ln()).abs() < 1e-15);
        assert!(r.entropy_holds && !r.majorization_holds && r.kelvin_risk);
    }

    #[test]
    fn unchanged_state_passes_both() {
        let s = state(&[(1, 2), (1, 1)], &[(1, 3), (2, 3)]);
        let r = entropy_energy_check(&s, &s, 2.0).unwrap();
        assert_eq!((r.delta_s, r.beta_delta_e, r.m0.clone()), (0.0, 0.0, rat(1, 1)));
        assert!(r.entropy_holds && r.majorization_holds && !r.kelvin_risk);
    }

    #[test]
    fn full_thermalization_passes() {
        let s = state(&[(1, 2), (1, 1), (1, 4)], &[(1, 1), (0, 1), (0, 1)]);
        let gibbs = crate::states::gibbs_state(s.weights()).unwrap();
        let r = entropy_energy_check(&s, &gibbs, 1.0).unwrap();
        assert!(r.entropy_holds && r.majorization_holds);
        assert!(entropy_energy_check(&s, &state(&[(1, 1)], &[(1, 1)]), 1.0).is_err());
    }

    #[test]
    fn partial_thermalization_endpoints() {
        let s = state(&[(1, 1), (1, 1), (1, 2)], &[(3, 4), (1, 4), (0, 1)]);
        let (same, r) = two_level_partial_thermalize(&s, 0, 1, &rat(0, 1), 1.0).unwrap();
        assert_eq!(same, s);
        assert_eq!(r.delta_s, 0.0);
        let (mixed, r) = two_level_partial_thermalize(&s, 0, 1, &rat(1, 1), 1.0).unwrap();
        assert_eq!(mixed.probs(), vec![rat(1, 2), rat(1, 2), rat(0, 1)]);
        assert!(r.delta_s > 0.0);
        assert!(two_level_partial_thermalize(&s, 1, 1, &rat(1, 2), 1.0).is_err());
        assert!(two_level_partial_thermalize(&s, 0, 1, &rat(3, 2), 1.0).is_err());
    }

    #[test]
    fn kelvin_demo_examples() {
        let id = Matrix::<Rational>::identity(2);
        assert!(matches!(kelvin_violation_demo(&id), Err(Error::Precondition(_))));
        let collapse = Matrix::from_rows(vec![vec![rat(1, 1), rat(1, 1)], vec![rat(0, 1), rat(0, 1)]]).unwrap();
        let r = kelvin_violation_demo(&collapse).unwrap();
        assert_eq!(r.sigma, vec![rat(1, 1), rat(0, 1)]);
        assert!((r.rate - LN_2).abs() < 1e-15);
        // a pure state gives one bit per copy plus the risk bonus ln(1 / (1 - eps)) spread over n
        for &(n, x) in &r.finite_rates {
            assert!((x - LN_2 - (1.0f64 / 0.99).ln() / n as f64).abs() < 1e-12);
        }
        assert!(r.monotone);
        let to_counterexample = Matrix::from_rows(vec![
            vec![rat(1, 1), rat(1, 2), rat(1, 2)],
            vec![rat(0, 1), rat(1, 2), rat(0, 1)],
            vec![rat(0, 1), rat(0, 1), rat(1, 2)],
        ])
        .unwrap();
        let r = kelvin_violation_demo(&to_counterexample).unwrap();
        assert_eq!(r.sigma, vec![rat(2, 3), rat(1, 6), rat(1, 6)]);
        assert!((r.rate - (3f64.log2() - 1.251629167) * LN_2).abs() < 1e-8);
        assert!(r.rate > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn partial_thermalization_never_lowers_free_entropy(
            raw in prop::collection::vec((1i64..9, 0i64..9), 2..=5),
            pick in (0usize..5, 1usize..5),
            t in 0i64..=8,
            beta in 0.1f64..5.0,
        ) {
            let total: i64 = raw.iter().map(|&(_, c)| c).sum();
            prop_assume!(total > 0);
            let s = DiagonalState::new(
                raw.iter().map(|&(w, _)| rat(w, 4)).collect(),
                raw.iter().map(|&(_, c)| rat(c, total)).collect(),
            ).unwrap();
            let i = pick.0 % raw.len();
            let j = (i + pick.1 % (raw.len() - 1) + 1) % raw.len();
            let (_, r) = two_level_partial_thermalize(&s, i, j, &rat(t, 8), beta).unwrap();
            prop_assert!(r.entropy_holds, "{:?}", r);
            prop_assert!(r.majorization_holds);
        }

        #[test]
        fn gibbs_fixing_maps_pass_both_laws(
            raw in prop::collection::vec((1i64..9, 0i64..9), 3),
            pair in 0usize..3,
            t in 0i64..=4,
        ) {
            let total: i64 = raw.iter().map(|&(_, c)| c).sum();
            prop_assume!(total > 0);
            let s = DiagonalState::new(
                raw.iter().map(|&(w, _)| rat(w, 4)).collect(),
                raw.iter().map(|&(_, c)| rat(c, total)).collect(),
            ).unwrap();
            let full = Matrix::gibbs_mix(&s.weights(), &[pair, (pair + 1) % 3]).unwrap();
            let frac = rat(t, 4);
            let rows = (0..3).map(|a| (0..3).map(|b| {
                let id = if a == b { rat(1, 1) } else { rat(0, 1) };
                id * (rat(1, 1) - frac.clone()) + full.get(a, b).clone() * frac.clone()
            }).collect()).collect();
            let after = apply_thermalization(&s, &Matrix::from_rows(rows).unwrap()).unwrap();
            let r = entropy_energy_check(&s, &after, 1.0).unwrap();
            prop_assert!(r.entropy_holds && r.majorization_holds);
        }
    }
}
