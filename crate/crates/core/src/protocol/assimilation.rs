//! Zero-work conversion of a state into any state its rescaled spectrum majorizes.
//!
//! The construction works on the rescaled picture one target level at a time, in
//! descending height `h`: it thermalizes the longest prefix of the remaining spectrum whose
//! average height is `h`, merges that prefix into one level and carves the target level
//! out of it. Splitting, merging and carving are isothermal shifts, so no branch ever
//! picks up work, and each step leaves the remainder majorizing the remaining target.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::game::{Action, Matrix};
use crate::scalar::{sum, Scalar};
use crate::states::{gibbs_rescale, DiagonalState};
use crate::stepfn::{majorizes, StepFunction};

use super::shift::{shift_in_place, ShiftSpec};

/// `d_1 + ... + d_floor(c) + frac(c) d_ceil(c)`, and 0 when `c < 1`.
pub fn generalized_sum<T: Scalar>(values: &[T], c: &T) -> Result<T> {
    if c.is_negative_strict() {
        return Err(Error::domain(format!("count must be nonnegative, got {c}")));
    }
    if *c > T::from_usize(values.len()) {
        return Err(Error::domain(format!("count {c} exceeds {} terms", values.len())));
    }
    if *c < T::one() {
        return Ok(T::zero());
    }
    Ok(interpolated_sum(values, c))
}

/// Piecewise-linear interpolation of the partial sums, including `c d_1` for `c < 1`.
fn interpolated_sum<T: Scalar>(values: &[T], c: &T) -> T {
    let whole = c.floor();
    let n = whole.to_f64() as usize;
    let frac = c.clone() - whole;
    let head = sum(&values[..n.min(values.len())]);
    if n < values.len() {
        head + frac * values[n].clone()
    } else {
        head
    }
}

/// Fractional block indices of the assimilation: for target block `k`, the rescaled
/// prefix `[0, b_k]` of the source holds the mass of the first `k` target blocks, and
/// `[0, a_k]` is the longest prefix whose excess over the first `k - 1` target blocks has
/// average height equal to target block `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssimilationPlan<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

pub fn assimilation_indices<T: Scalar>(p: &StepFunction<T>, target: &StepFunction<T>) -> Result<AssimilationPlan<T>> {
    if !p.support().near(&target.support()) {
        return Err(Error::precondition(format!(
            "supports differ: {} versus {}",
            p.support(),
            target.support()
        )));
    }
    if !majorizes(p, target) {
        return Err(Error::precondition("source does not majorize the target"));
    }
    let masses: Vec<T> = p.blocks().iter().map(|b| b.mass()).collect();
    let widths: Vec<T> = p.blocks().iter().map(|b| b.width.clone()).collect();
    let n = masses.len();
    let mass_at = |i: usize| sum(&masses[..i]);
    let width_at = |i: usize| sum(&widths[..i]);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (mut done_mass, mut done_width) = (T::zero(), T::zero());
    for block in target.blocks() {
        let h = block.height.clone();
        let goal = done_mass.clone() + block.mass();
        // b_k: first index where the source has accumulated the target mass
        let i = (1..=n).find(|&i| mass_at(i).at_least(&goal)).unwrap_or(n);
        let short = goal.clone() - mass_at(i - 1);
        let frac = if masses[i - 1].is_zero() { T::zero() } else { short / masses[i - 1].clone() };
        b.push(T::from_usize(i - 1) + frac);
        // a_k: largest root of a concave piecewise-linear function of the index
        let offset = done_mass.clone() - h.clone() * done_width.clone();
        let excess = |i: usize| mass_at(i) - h.clone() * width_at(i) - offset.clone();
        let last = (0..=n)
            .rev()
            .find(|&i| excess(i).at_least(&T::zero()))
            .ok_or_else(|| Error::precondition("no prefix matches the target height"))?;
        let ak = if last == n {
            T::from_usize(n)
        } else {
            let next = &p.blocks()[last];
            let slope = next.width.clone() * (h.clone() - next.height.clone());
            T::from_usize(last) + excess(last) / slope
        };
        a.push(ak);
        done_mass = goal;
        done_width = done_width + block.width.clone();
    }
    if a.iter().zip(&b).any(|(ak, bk)| !ak.at_least(bk)) {
        return Err(Error::precondition("assimilation indices out of order"));
    }
    Ok(AssimilationPlan { a, b })
}

/// Builds a strategy while tracking the deterministic success branch it acts on.
pub(crate) struct Planner<T> {
    pub weights: Vec<T>,
    pub probs: Vec<T>,
    pub actions: Vec<Action<T>>,
    /// Levels that already hold a finished target level.
    done: Vec<bool>,
}

impl<T: Scalar> Planner<T> {
    pub fn new(state: &DiagonalState<T>) -> Self {
        let n = state.len();
        Planner { weights: state.weights(), probs: state.probs(), actions: Vec::new(), done: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_vacant(&self, i: usize) -> bool {
        self.weights[i].is_zero() && self.probs[i].is_zero() && !self.done[i]
    }

    pub fn vacant(&self) -> Result<usize> {
        (0..self.len())
            .find(|&i| self.is_vacant(i))
            .ok_or_else(|| Error::precondition("ran out of empty levels"))
    }

    pub fn mark_done(&mut self, i: usize) {
        self.done[i] = true;
    }

    /// Raises `levels` to infinite energy and keeps the branch that missed them.
    pub fn raise_to_infinity(&mut self, levels: Vec<usize>) -> Result<()> {
        if levels.is_empty() {
            return Ok(());
        }
        let missed = T::one() - sum(levels.iter().map(|&i| &self.probs[i]));
        if missed.near_zero() {
            return Err(Error::precondition("every branch escapes"));
        }
        for &i in &levels {
            self.weights[i] = T::zero();
            self.probs[i] = T::zero();
        }
        for p in self.probs.iter_mut() {
            *p = p.clone() / missed.clone();
        }
        self.actions.push(Action::Extract { levels, factor: T::zero() });
        Ok(())
    }

    /// Scales `levels` by `factor`; they must carry all the probability.
    pub fn extract_all(&mut self, levels: Vec<usize>, factor: T) -> Result<()> {
        if !sum(levels.iter().map(|&i| &self.probs[i])).near(&T::one()) {
            return Err(Error::precondition("extraction would branch"));
        }
        for &i in &levels {
            self.weights[i] = self.weights[i].clone() * factor.clone();
        }
        self.actions.push(Action::Extract { levels, factor });
        Ok(())
    }

    pub fn shift(&mut self, spec: ShiftSpec<T>) -> Result<()> {
        shift_in_place(&mut self.weights, &mut self.probs, &spec)?;
        self.actions.push(Action::Shift(spec));
        Ok(())
    }

    pub fn set_empty(&mut self, level: usize, weight: T) -> Result<()> {
        if !self.probs[level].is_zero() {
            return Err(Error::precondition(format!("level {level} is occupied")));
        }
        self.weights[level] = weight.clone();
        self.actions.push(Action::SetEmpty { level, weight });
        Ok(())
    }

    pub fn thermalize(&mut self, levels: &[usize]) -> Result<()> {
        let matrix = Matrix::gibbs_mix(&self.weights, levels)?;
        self.probs = matrix.apply(&self.probs);
        self.actions.push(Action::Thermalize { matrix });
        Ok(())
    }

    pub fn permute(&mut self, order: Vec<usize>) {
        self.weights = order.iter().map(|&i| self.weights[i].clone()).collect();
        self.probs = order.iter().map(|&i| self.probs[i].clone()).collect();
        self.done = order.iter().map(|&i| self.done[i]).collect();
        self.actions.push(Action::Permute { order });
    }

    pub fn state(&self) -> Result<DiagonalState<T>> {
        DiagonalState::new(self.weights.clone(), self.probs.clone())
    }

    fn height(&self, i: usize) -> T {
        self.probs[i].clone() / self.weights[i].clone()
    }

    /// Unfinished levels of positive weight, descending by rescaled height.
    fn working(&self) -> Vec<usize> {
        let mut levels: Vec<usize> = (0..self.len()).filter(|&i| !self.done[i] && !self.weights[i].is_zero()).collect();
        levels.sort_by(|&a, &b| {
            let lhs = self.probs[a].clone() * self.weights[b].clone();
            let rhs = self.probs[b].clone() * self.weights[a].clone();
            rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal)
        });
        levels
    }

    /// Turns the unfinished part of the current state into the `(weight, prob)` target
    /// levels at zero work. Returns, per target level, the level now holding it.
    ///
    /// Zero-probability levels of positive weight must already be emptied.
    pub fn assimilate(&mut self, target: &[(T, T)]) -> Result<Vec<usize>> {
        if (0..self.len()).any(|i| !self.done[i] && self.probs[i].is_zero() && !self.weights[i].is_zero()) {
            return Err(Error::precondition("zero-probability levels must be emptied first"));
        }
        let have = sum(self.working().iter().map(|&i| &self.weights[i]));
        let want = sum(target.iter().map(|(w, _)| w));
        if !want.at_least(&have) {
            return Err(Error::precondition("source does not majorize the target"));
        }
        if !want.near(&have) {
            let e = self.vacant()?;
            self.set_empty(e, want - have)?;
        }
        let mut order: Vec<usize> = (0..target.len()).collect();
        order.sort_by(|&a, &b| {
            let lhs = target[a].1.clone() * target[b].0.clone();
            let rhs = target[b].1.clone() * target[a].0.clone();
            rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal)
        });
        let mut placed = vec![0; target.len()];
        for t in order {
            let (width, mass) = target[t].clone();
            placed[t] = self.place(width, mass)?;
        }
        Ok(placed)
    }

    fn place(&mut self, width: T, mass: T) -> Result<usize> {
        let h = mass / width.clone();
        let working = self.working();
        let mut prefix = Vec::new();
        let (mut x, mut m) = (T::zero(), T::zero());
        for &l in &working {
            let next = m.clone() + self.probs[l].clone() - h.clone() * (x.clone() + self.weights[l].clone());
            if next.at_least(&T::zero()) {
                prefix.push(l);
                x = x + self.weights[l].clone();
                m = m + self.probs[l].clone();
                continue;
            }
            // the boundary falls inside `l`: keep only the part that brings the average to h
            let part = (m.clone() - h.clone() * x.clone()) / (h.clone() - self.height(l));
            if !part.near_zero() {
                let e = self.vacant()?;
                let a = self.weights[l].clone();
                self.shift(ShiftSpec::new(l, e, (part.clone() - a.clone()) / a))?;
                prefix.push(l);
                x = x + part;
            }
            break;
        }
        if prefix.is_empty() || !x.at_least(&width) {
            return Err(Error::precondition("source does not majorize the target"));
        }
        if prefix.len() > 1 {
            self.thermalize(&prefix)?;
        }
        let head = prefix[0];
        for &k in &prefix[1..] {
            let total = self.weights[head].clone() + self.weights[k].clone();
            self.shift(ShiftSpec::new(head, k, self.weights[k].clone() / total))?;
        }
        if self.weights[head].near(&width) {
            self.mark_done(head);
            return Ok(head);
        }
        let e = self.vacant()?;
        let total = self.weights[head].clone();
        self.shift(ShiftSpec::new(e, head, width / total))?;
        self.mark_done(e);
        Ok(e)
    }
}

/// Actions converting a padded copy of `rho` into `sigma` at zero work.
#[derive(Debug, Clone, PartialEq)]
pub struct Assimilation<T> {
    /// `rho` followed by the empty levels the construction needs.
    pub initial: DiagonalState<T>,
    pub actions: Vec<Action<T>>,
    /// `sigma` followed by empty levels.
    pub state: DiagonalState<T>,
}

/// Empty levels appended to a source of `n_source` levels before assimilating into a
/// target of `n_target` levels.
pub fn assimilation_padding(n_target: usize) -> usize {
    2 * n_target + 1
}

fn padded<T: Scalar>(state: &DiagonalState<T>, extra: usize) -> Result<DiagonalState<T>> {
    let mut weights = state.weights();
    let mut probs = state.probs();
    weights.extend(std::iter::repeat_n(T::zero(), extra));
    probs.extend(std::iter::repeat_n(T::zero(), extra));
    DiagonalState::new(weights, probs)
}

pub fn assimilate<T: Scalar>(rho: &DiagonalState<T>, sigma: &DiagonalState<T>) -> Result<Assimilation<T>> {
    if !majorizes(&gibbs_rescale(rho), &gibbs_rescale(sigma)) {
        return Err(Error::precondition("source does not majorize the target"));
    }
    let initial = padded(rho, assimilation_padding(sigma.len()))?;
    let mut planner = Planner::new(&initial);
    for i in 0..rho.len() {
        if planner.probs[i].is_zero() && !planner.weights[i].is_zero() {
            planner.set_empty(i, T::zero())?;
        }
    }
    let occupied: Vec<usize> = (0..sigma.len()).filter(|&i| !sigma.levels()[i].prob.is_zero()).collect();
    let target: Vec<(T, T)> =
        occupied.iter().map(|&i| (sigma.levels()[i].weight.clone(), sigma.levels()[i].prob.clone())).collect();
    let placed = planner.assimilate(&target)?;
    let mut slot = vec![None; sigma.len()];
    for (&i, &level) in occupied.iter().zip(&placed) {
        slot[i] = Some(level);
    }
    let order = arrange(&mut planner, sigma, slot)?;
    planner.permute(order);
    let state = planner.state()?;
    Ok(Assimilation { initial, actions: planner.actions, state })
}

/// Fills the target's empty levels from vacant levels and returns the permutation that
/// puts target level `i` at position `i`, followed by every other level.
pub(crate) fn arrange<T: Scalar>(
    planner: &mut Planner<T>,
    target: &DiagonalState<T>,
    mut slot: Vec<Option<usize>>,
) -> Result<Vec<usize>> {
    for i in 0..planner.len() {
        if !planner.done[i] && planner.probs[i].is_zero() && !planner.weights[i].is_zero() {
            planner.set_empty(i, T::zero())?;
        }
    }
    for (i, s) in slot.iter_mut().enumerate() {
        if s.is_none() {
            let e = planner.vacant()?;
            let weight = target.levels()[i].weight.clone();
            if !weight.is_zero() {
                planner.set_empty(e, weight)?;
            }
            planner.mark_done(e);
            *s = Some(e);
        }
    }
    let mut order: Vec<usize> = slot.into_iter().flatten().collect();
    let mut used = vec![false; planner.len()];
    for &i in &order {
        used[i] = true;
    }
    order.extend((0..planner.len()).filter(|&i| !used[i]));
    Ok(order)
}
