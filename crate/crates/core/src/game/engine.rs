//! Exact execution of strategies: every branch of every work extraction is followed.

use crate::error::{Error, Result};
use crate::protocol::shift::shift_in_place;
use crate::scalar::Scalar;
use crate::states::{gibbs_rescale, DiagonalState, Level};
use crate::stepfn::{relative_mixedness, StepFunction};

use super::action::{Action, Matrix, Strategy};

/// Maximum number of extraction steps [`enumerate_paths`] accepts.
pub const ENUMERATION_CAP: usize = 20;

/// `prob <- B prob` after checking that `B` is a valid thermalization for the state.
pub fn apply_thermalization<T: Scalar>(state: &DiagonalState<T>, matrix: &Matrix<T>) -> Result<DiagonalState<T>> {
    matrix.check_thermalization(&state.weights())?;
    state.with_probs(matrix.apply(&state.probs()))
}

/// The thermalization lifted to `n` equal-width cells of the rescaled picture.
#[derive(Debug, Clone, PartialEq)]
pub struct FineGrained<T> {
    pub matrix: Matrix<T>,
    /// Level owning each cell.
    pub cell_levels: Vec<usize>,
}

/// Builds `F[l][m] = B[k_l][k_m] / N_{k_l}` on `n` cells of width `Z / n`, where level `k`
/// owns `N_k = n A_k / Z` cells, and checks that `F` is bistochastic and reproduces `B`.
pub fn fine_grained_matrix<T: Scalar>(matrix: &Matrix<T>, state: &DiagonalState<T>, n: usize) -> Result<FineGrained<T>> {
    let weights = state.weights();
    matrix.check_thermalization(&weights)?;
    if n == 0 {
        return Err(Error::invalid("need at least one cell"));
    }
    let z = state.partition_function();
    let mut counts = Vec::with_capacity(weights.len());
    for (k, a) in weights.iter().enumerate() {
        let cells = a.clone() * T::from_usize(n) / z.clone();
        if !cells.near(&cells.floor()) {
            return Err(Error::invalid(format!("weight of level {k} is not a multiple of Z / {n}")));
        }
        counts.push(cells.floor().to_f64().round() as usize);
    }
    let cell_levels: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    let rows = cell_levels
        .iter()
        .map(|&kl| {
            cell_levels
                .iter()
                .map(|&km| matrix.get(kl, km).clone() / T::from_usize(counts[kl]))
                .collect()
        })
        .collect();
    let fine = Matrix::from_rows(rows)?;
    if !fine.is_bistochastic() {
        return Err(Error::invalid("fine-grained matrix is not bistochastic"));
    }
    let probs = state.probs();
    let cells: Vec<T> = cell_levels.iter().map(|&k| probs[k].clone() / T::from_usize(counts[k])).collect();
    let after = fine.apply(&cells);
    let coarse = matrix.apply(&probs);
    for (l, &k) in cell_levels.iter().enumerate() {
        if !after[l].near(&(coarse[k].clone() / T::from_usize(counts[k]))) {
            return Err(Error::invalid("fine-grained matrix disagrees with the level thermalization"));
        }
    }
    Ok(FineGrained { matrix: fine, cell_levels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub eta: T,
    /// `None` when the branch escaped to infinite energy.
    pub state: Option<DiagonalState<T>>,
    pub logwork: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome<T> {
    /// System found in the driven levels: the factor is credited.
    pub taken: Option<Branch<T>>,
    /// System elsewhere: no work, but the driven levels moved all the same.
    pub missed: Option<Branch<T>>,
    /// `Z + a (factor - 1)`, with `a` the driven weight.
    pub z_next: T,
}

/// One work-extraction step on a state. Zero-probability branches are omitted.
pub fn extract_step<T: Scalar>(state: &DiagonalState<T>, levels: &[usize], factor: &T) -> Result<ExtractOutcome<T>> {
    Action::Extract { levels: levels.to_vec(), factor: factor.clone() }.validate(state.len())?;
    let weights = state.weights();
    let a = levels.iter().fold(T::zero(), |acc, &i| acc + weights[i].clone());
    let z_next = state.partition_function() + a * (factor.clone() - T::one());
    let path = Path { branches: vec![], probability: T::one(), logwork: T::one(), probs: Some(state.probs()) };
    let children = split_path(path, levels, factor);
    let mut new_weights = weights;
    for &i in levels {
        new_weights[i] = new_weights[i].clone() * factor.clone();
    }
    let labels: Vec<usize> = state.levels().iter().map(|l| l.label).collect();
    let mut out = ExtractOutcome { taken: None, missed: None, z_next };
    for child in children {
        let taken = *child.branches.last().expect("one branch recorded");
        let branch = Branch {
            eta: child.probability.clone(),
            state: child.probs.map(|p| build_state(&new_weights, &p, &labels)).transpose()?,
            logwork: child.logwork,
        };
        if taken {
            out.taken = Some(branch);
        } else {
            out.missed = Some(branch);
        }
    }
    Ok(out)
}

/// Leading levels (in current order) whose weights add up to exactly `a`.
pub fn prefix_levels<T: Scalar>(state: &DiagonalState<T>, a: &T) -> Result<Vec<usize>> {
    let mut acc = T::zero();
    if acc.near(a) {
        return Ok(vec![]);
    }
    for (i, l) in state.levels().iter().enumerate() {
        acc = acc + l.weight.clone();
        if acc.near(a) {
            return Ok((0..=i).collect());
        }
        if acc > *a {
            break;
        }
    }
    Err(Error::invalid(format!("weight {a} does not end on a level boundary")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome<T> {
    /// `true` where the system was found in the driven levels.
    pub branches: Vec<bool>,
    pub probability: T,
    /// Product of the credited factors; 0 once the system escaped to infinite energy.
    pub logwork: T,
    /// Final conditional state; `None` for escaped paths.
    pub state: Option<DiagonalState<T>>,
}

impl<T: Scalar> PathOutcome<T> {
    pub fn escaped(&self) -> bool {
        self.state.is_none()
    }
}

#[derive(Debug, Clone)]
struct Path<T> {
    branches: Vec<bool>,
    probability: T,
    logwork: T,
    probs: Option<Vec<T>>,
}

fn split_path<T: Scalar>(path: Path<T>, levels: &[usize], factor: &T) -> Vec<Path<T>> {
    let Some(probs) = path.probs else {
        return vec![path];
    };
    let mut inside = vec![false; probs.len()];
    for &i in levels {
        inside[i] = true;
    }
    let eta_in = levels.iter().fold(T::zero(), |acc, &i| acc + probs[i].clone());
    let eta_out = (0..probs.len()).filter(|&i| !inside[i]).fold(T::zero(), |acc, i| acc + probs[i].clone());
    let conditional = |keep_inside: bool, eta: &T| -> Vec<T> {
        probs
            .iter()
            .enumerate()
            .map(|(i, p)| if inside[i] == keep_inside { p.clone() / eta.clone() } else { T::zero() })
            .collect()
    };
    let mut out = Vec::with_capacity(2);
    if !eta_in.near_zero() {
        let mut branches = path.branches.clone();
        branches.push(true);
        let escaped = factor.is_zero();
        out.push(Path {
            branches,
            probability: path.probability.clone() * eta_in.clone(),
            logwork: path.logwork.clone() * factor.clone(),
            probs: if escaped { None } else { Some(conditional(true, &eta_in)) },
        });
    }
    if !eta_out.near_zero() {
        let mut branches = path.branches;
        branches.push(false);
        out.push(Path {
            branches,
            probability: path.probability * eta_out.clone(),
            logwork: path.logwork,
            probs: Some(conditional(false, &eta_out)),
        });
    }
    out
}

fn build_state<T: Scalar>(weights: &[T], probs: &[T], labels: &[usize]) -> Result<DiagonalState<T>> {
    let levels = weights
        .iter()
        .zip(probs)
        .zip(labels)
        .map(|((w, p), &label)| Level { weight: w.clone(), prob: p.clone(), label })
        .collect();
    DiagonalState::from_levels(levels)
}

fn permute<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
    order.iter().map(|&i| v[i].clone()).collect()
}

/// Follows every branch of `strategy` from `state`.
pub fn enumerate_paths<T: Scalar>(state: &DiagonalState<T>, strategy: &Strategy<T>) -> Result<Vec<PathOutcome<T>>> {
    let extracts = strategy.extract_count();
    if extracts > ENUMERATION_CAP {
        return Err(Error::CapExceeded { extracts, limit: ENUMERATION_CAP });
    }
    strategy.validate(state.len())?;
    let mut weights = state.weights();
    let mut labels: Vec<usize> = state.levels().iter().map(|l| l.label).collect();
    let mut paths = vec![Path { branches: vec![], probability: T::one(), logwork: T::one(), probs: Some(state.probs()) }];
    for (step, action) in strategy.actions.iter().enumerate() {
        let context = |e: Error| match e {
            Error::Precondition(m) => Error::Precondition(format!("action {step} ({}): {m}", action.name())),
            Error::Invalid(m) => Error::Invalid(format!("action {step} ({}): {m}", action.name())),
            other => other,
        };
        match action {
            Action::Thermalize { matrix } => {
                matrix.check_thermalization(&weights).map_err(context)?;
                for p in paths.iter_mut() {
                    if let Some(probs) = p.probs.as_mut() {
                        *probs = matrix.apply(probs);
                    }
                }
            }
            Action::Extract { levels, factor } => {
                paths = paths.into_iter().flat_map(|p| split_path(p, levels, factor)).collect();
                for &i in levels {
                    weights[i] = weights[i].clone() * factor.clone();
                }
            }
            Action::Permute { order } => {
                weights = permute(&weights, order);
                labels = permute(&labels, order);
                for p in paths.iter_mut() {
                    if let Some(probs) = p.probs.as_mut() {
                        *probs = permute(probs, order);
                    }
                }
            }
            Action::Shift(spec) => {
                let mut shifted = weights.clone();
                for p in paths.iter_mut() {
                    if let Some(probs) = p.probs.as_mut() {
                        shifted = weights.clone();
                        shift_in_place(&mut shifted, probs, spec).map_err(context)?;
                    }
                }
                if paths.iter().all(|p| p.probs.is_none()) {
                    let mut scratch = vec![T::zero(); weights.len()];
                    shift_in_place(&mut shifted, &mut scratch, spec).map_err(context)?;
                }
                weights = shifted;
            }
            Action::SetEmpty { level, weight } => {
                if paths.iter().any(|p| p.probs.as_ref().is_some_and(|probs| !probs[*level].is_zero())) {
                    return Err(context(Error::precondition(format!("level {level} is occupied on some branch"))));
                }
                weights[*level] = weight.clone();
            }
        }
    }
    paths
        .into_iter()
        .map(|p| {
            let state = p.probs.map(|probs| build_state(&weights, &probs, &labels)).transpose()?;
            Ok(PathOutcome { branches: p.branches, probability: p.probability, logwork: p.logwork, state })
        })
        .collect()
}

/// Weights every live path ends with (they are path-independent).
pub fn final_weights<T: Scalar>(paths: &[PathOutcome<T>]) -> Option<Vec<T>> {
    paths.iter().find_map(|p| p.state.as_ref().map(|s| s.weights()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessStats<T> {
    /// Probability of ending with log-work factor at least the target.
    pub p_s: T,
    /// Success-conditioned final state; `None` when `p_s` is zero.
    pub state: Option<DiagonalState<T>>,
    /// Its rescaled spectrum.
    pub q: Option<StepFunction<T>>,
}

pub fn success_stats<T: Scalar>(paths: &[PathOutcome<T>], target: &T) -> Result<SuccessStats<T>> {
    let winners: Vec<&PathOutcome<T>> =
        paths.iter().filter(|p| p.state.is_some() && p.logwork.at_least(target)).collect();
    let p_s = winners.iter().fold(T::zero(), |acc, p| acc + p.probability.clone());
    if winners.is_empty() || p_s.is_zero() {
        return Ok(SuccessStats { p_s, state: None, q: None });
    }
    let first = winners[0].state.as_ref().expect("winners are live");
    let mut probs = vec![T::zero(); first.len()];
    for p in &winners {
        let s = p.state.as_ref().expect("winners are live");
        for (acc, l) in probs.iter_mut().zip(s.levels()) {
            *acc = acc.clone() + p.probability.clone() * l.prob.clone() / p_s.clone();
        }
    }
    let state = first.with_probs(probs)?;
    let q = gibbs_rescale(&state);
    Ok(SuccessStats { p_s, state: Some(state), q: Some(q) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport<T> {
    pub target: T,
    pub p_s: T,
    /// No successful path: nothing to check.
    pub vacuous: bool,
    /// Smallest `cum(p, l) - P_S cum(q, l target)` over breakpoints `l > 0`.
    pub min_slack: Option<T>,
    pub slack_at: Option<T>,
    /// Relative mixedness of `p` and `q` at risk `1 - P_S`; never below the target.
    pub mixedness: Option<T>,
    pub holds: bool,
}

/// Checks `cum(p, l) >= P_S cum(q, l w)` for all `l`, the inequality every strategy obeys.
///
/// Both sides are piecewise linear in `l`, so breakpoints of `p` and breakpoints of `q`
/// divided by `w` suffice.
pub fn audit_bound<T: Scalar>(state: &DiagonalState<T>, strategy: &Strategy<T>, target: &T) -> Result<AuditReport<T>> {
    let paths = enumerate_paths(state, strategy)?;
    let stats = success_stats(&paths, target)?;
    let (Some(q), true) = (stats.q, !stats.p_s.is_zero()) else {
        return Ok(AuditReport {
            target: target.clone(),
            p_s: stats.p_s,
            vacuous: true,
            min_slack: None,
            slack_at: None,
            mixedness: None,
            holds: true,
        });
    };
    let p = gibbs_rescale(state);
    let (pc, qc) = (p.curve(), q.curve());
    let mut ls: Vec<T> = pc.points().iter().map(|pt| pt.0.clone()).collect();
    if !target.is_zero() {
        ls.extend(qc.points().iter().map(|pt| pt.0.clone() / target.clone()));
    }
    let mut min: Option<(T, T)> = None;
    for l in ls.into_iter().filter(|l| *l > T::zero()) {
        let slack = pc.value_at(&l) - stats.p_s.clone() * qc.value_at(&(l.clone() * target.clone()));
        let better = match &min {
            None => true,
            Some((s, at)) => slack < *s || (slack == *s && l < *at),
        };
        if better {
            min = Some((slack, l));
        }
    }
    let eps = T::one() - stats.p_s.clone();
    let mixedness = relative_mixedness(&p, &q, &eps)?.m;
    let slack_ok = min.as_ref().is_none_or(|(s, _)| !s.is_negative_strict());
    let holds = slack_ok && mixedness.at_least(target);
    let (min_slack, slack_at) = match min {
        Some((s, l)) => (Some(s), Some(l)),
        None => (None, None),
    };
    Ok(AuditReport { target: target.clone(), p_s: stats.p_s, vacuous: false, min_slack, slack_at, mixedness: Some(mixedness), holds })
}
