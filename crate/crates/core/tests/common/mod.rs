//! Seeded generators of random rational instances shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sst_core::game::{Action, Matrix, Strategy};
use sst_core::{rat, DiagonalState, Rational};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn state(w: &[(i64, i64)], p: &[(i64, i64)]) -> DiagonalState<Rational> {
    DiagonalState::new(w.iter().map(|&(a, b)| rat(a, b)).collect(), p.iter().map(|&(a, b)| rat(a, b)).collect())
        .unwrap()
}

/// The three-level pair used throughout: success mass 1/2 gives the factor 4/3.
pub fn worked_pair() -> (DiagonalState<Rational>, DiagonalState<Rational>) {
    (
        state(&[(1, 3), (1, 3), (1, 3)], &[(2, 3), (1, 3), (0, 1)]),
        state(&[(1, 6), (1, 3), (1, 2)], &[(1, 2), (1, 2), (0, 1)]),
    )
}

pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| rat(rng.random_range(1..=6), rng.random_range(1..=4))).collect()
}

/// Random probabilities with small denominators; some entries may be zero.
pub fn probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    loop {
        let raw: Vec<i64> = (0..n).map(|_| rng.random_range(0..=5)).collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.iter().map(|&c| rat(c, total)).collect();
        }
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, max_levels: usize) -> DiagonalState<Rational> {
    let n = rng.random_range(1..=max_levels);
    DiagonalState::new(weights(rng, n), probs(rng, n)).unwrap()
}

pub fn gibbs(weights: Vec<Rational>) -> DiagonalState<Rational> {
    sst_core::states::gibbs_state(weights).unwrap()
}

pub fn eps_from(rng: &mut ChaCha8Rng, choices: &[(i64, i64)]) -> Rational {
    let (a, b) = choices[rng.random_range(0..choices.len())];
    rat(a, b)
}

/// Mixes a random pair of levels a random fraction of the way to their thermal split.
pub fn pair_mix(rng: &mut ChaCha8Rng, weights: &[Rational]) -> Matrix<Rational> {
    let n = weights.len();
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n.max(2))) % n;
    if i == j || (weights[i] == rat(0, 1) && weights[j] == rat(0, 1)) {
        return Matrix::identity(n);
    }
    let full = Matrix::gibbs_mix(weights, &[i, j]).unwrap();
    let t = rat(rng.random_range(0..=4), 4);
    let rows = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let id = if a == b { rat(1, 1) } else { rat(0, 1) };
                    id * (rat(1, 1) - t.clone()) + full.get(a, b).clone() * t.clone()
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).unwrap()
}

fn multiply(a: &Matrix<Rational>, b: &Matrix<Rational>) -> Matrix<Rational> {
    let n = a.dim();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(rat(0, 1), |acc, k| acc + a.get(i, k).clone() * b.get(k, j).clone()))
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).unwrap()
}

/// A random thermalization: a product of partial pair mixes, sometimes with a full mix of
/// a random subset.
pub fn thermalization(rng: &mut ChaCha8Rng, weights: &[Rational]) -> Matrix<Rational> {
    let n = weights.len();
    let mut m = Matrix::identity(n);
    for _ in 0..rng.random_range(1..=3) {
        m = multiply(&pair_mix(rng, weights), &m);
    }
    if rng.random_bool(0.3) {
        let subset: Vec<usize> = (0..n).filter(|&i| weights[i] != rat(0, 1) && rng.random_bool(0.6)).collect();
        if !subset.is_empty() {
            m = multiply(&Matrix::gibbs_mix(weights, &subset).unwrap(), &m);
        }
    }
    m
}

/// A random strategy with `extracts` extraction steps interleaved with thermalizations
/// and relabellings. The target is filled in by the caller.
pub fn random_strategy(rng: &mut ChaCha8Rng, state: &DiagonalState<Rational>, extracts: usize) -> Strategy<Rational> {
    let n = state.len();
    let mut weights = state.weights();
    let mut actions = Vec::new();
    for _ in 0..extracts {
        if rng.random_bool(0.6) {
            actions.push(Action::Thermalize { matrix: thermalization(rng, &weights) });
        }
        if rng.random_bool(0.2) {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            weights = order.iter().map(|&i| weights[i].clone()).collect();
            actions.push(Action::Permute { order });
        }
        let k = rng.random_range(1..=n);
        let rest_empty = weights[k..].iter().all(|w| *w == rat(0, 1));
        let factor = if !rest_empty && rng.random_bool(0.15) {
            rat(0, 1)
        } else {
            rat(rng.random_range(1..=8), rng.random_range(1..=4))
        };
        for w in weights.iter_mut().take(k) {
            *w = w.clone() * factor.clone();
        }
        actions.push(Action::Extract { levels: (0..k).collect(), factor });
    }
    Strategy::new(actions, rat(1, 1))
}

/// A column-stochastic matrix on `d` levels that is not bistochastic.
pub fn non_bistochastic(rng: &mut ChaCha8Rng, d: usize) -> Matrix<Rational> {
    loop {
        let columns: Vec<Vec<Rational>> = (0..d).map(|_| probs(rng, d)).collect();
        let rows = (0..d).map(|i| (0..d).map(|j| columns[j][i].clone()).collect()).collect();
        let m = Matrix::from_rows(rows).unwrap();
        if !m.is_bistochastic() {
            return m;
        }
    }
}
