//! Descending step functions and their cumulative (Lorenz) curves.
//!
//! A [`StepFunction`] is a list of blocks `(width, height)` with nonincreasing heights,
//! living on `(0, support]`. Its cumulative curve is concave and piecewise linear, so every
//! question asked of it here reduces to evaluations at finitely many breakpoints.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{min_of, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Block<T> {
    pub fn new(width: T, height: T) -> Self {
        Block { width, height }
    }

    pub fn mass(&self) -> T {
        self.width.clone() * self.height.clone()
    }
}

/// Result of a generalized inverse that may be vacuous.
#[derive(Debug, Clone, PartialEq)]
pub enum Extent<T> {
    Finite(T),
    /// The requested mass is never exceeded: the constraint it encodes is vacuous.
    Unbounded,
}

impl<T: Scalar> Extent<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Extent::Finite(x) => Some(x),
            Extent::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    blocks: Vec<Block<T>>,
}

impl<T: Scalar> StepFunction<T> {
    /// Canonicalizes `blocks`: zero widths dropped, stable descending sort by height,
    /// adjacent equal heights merged.
    pub fn new(blocks: Vec<Block<T>>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            let (w, h) = (b.width.to_f64(), b.height.to_f64());
            if !w.is_finite() || !h.is_finite() {
                return Err(Error::invalid(format!("block {i}: width and height must be finite")));
            }
            if b.width < T::zero() || b.height < T::zero() {
                return Err(Error::invalid(format!("block {i}: negative width or height")));
            }
        }
        let mut kept: Vec<Block<T>> = blocks.into_iter().filter(|b| !b.width.is_zero()).collect();
        kept.sort_by(|a, b| b.height.partial_cmp(&a.height).unwrap_or(Ordering::Equal));
        let mut merged: Vec<Block<T>> = Vec::with_capacity(kept.len());
        for b in kept {
            match merged.last_mut() {
                Some(last) if last.height == b.height => last.width = last.width.clone() + b.width,
                _ => merged.push(b),
            }
        }
        Ok(StepFunction { blocks: merged })
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::new(pairs.iter().map(|(w, h)| Block::new(w.clone(), h.clone())).collect())
    }

    /// Uniform function of the given support and total mass 1.
    pub fn flat(support: T) -> Result<Self> {
        if support <= T::zero() {
            return Err(Error::invalid("flat step function needs positive support"));
        }
        let height = T::one() / support.clone();
        Self::new(vec![Block::new(support, height)])
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn mass(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + b.mass())
    }

    /// Total width, zero-height tail included.
    pub fn support(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + b.width.clone())
    }

    /// Width of the region where the function is positive.
    pub fn positive_support(&self) -> T {
        self.blocks
            .iter()
            .filter(|b| !b.height.is_zero())
            .fold(T::zero(), |acc, b| acc + b.width.clone())
    }

    pub fn top_height(&self) -> T {
        self.blocks.first().map(|b| b.height.clone()).unwrap_or_else(T::zero)
    }

    /// True when every positive-height block has the same height.
    pub fn is_flat(&self) -> bool {
        self.blocks.iter().filter(|b| !b.height.is_zero()).count() <= 1
    }

    pub fn scaled(&self, factor: &T) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block::new(b.width.clone(), b.height.clone() * factor.clone()))
            .collect();
        StepFunction { blocks }
    }

    /// Right ends of the blocks, in order.
    pub fn block_ends(&self) -> Vec<T> {
        let mut x = T::zero();
        self.blocks
            .iter()
            .map(|b| {
                x = x.clone() + b.width.clone();
                x.clone()
            })
            .collect()
    }

    /// Integral of the function over `(0, l]`.
    pub fn cumulative(&self, l: &T) -> Result<T> {
        if *l < T::zero() {
            return Err(Error::domain(format!("cumulative at negative extent {l}")));
        }
        let mut rest = l.clone();
        let mut acc = T::zero();
        for b in &self.blocks {
            if rest <= T::zero() {
                break;
            }
            let w = min_of(rest.clone(), b.width.clone());
            acc = acc + w.clone() * b.height.clone();
            rest = rest - w;
        }
        Ok(acc)
    }

    /// `sup { x : cumulative(x) <= y }`; unbounded once `y` reaches the total mass.
    pub fn inverse_extent(&self, y: &T) -> Result<Extent<T>> {
        if *y < T::zero() {
            return Err(Error::domain(format!("inverse extent at negative mass {y}")));
        }
        if y.at_least(&self.mass()) {
            return Ok(Extent::Unbounded);
        }
        let mut acc = T::zero();
        let mut x = T::zero();
        for b in &self.blocks {
            let next = acc.clone() + b.mass();
            if next > *y {
                return Ok(Extent::Finite(x + (y.clone() - acc) / b.height.clone()));
            }
            acc = next;
            x = x + b.width.clone();
        }
        Ok(Extent::Unbounded)
    }

    /// `inf { x : cumulative(x) >= y }`; `None` when `y` exceeds the total mass.
    pub fn min_extent(&self, y: &T) -> Option<T> {
        if *y <= T::zero() {
            return Some(T::zero());
        }
        let mass = self.mass();
        let y = if *y > mass && y.near(&mass) { mass } else { y.clone() };
        let mut acc = T::zero();
        let mut x = T::zero();
        for b in &self.blocks {
            if b.height.is_zero() {
                break;
            }
            let next = acc.clone() + b.mass();
            if next >= y {
                return Some(x + (y - acc) / b.height.clone());
            }
            acc = next;
            x = x + b.width.clone();
        }
        // float residue: the target equals the mass up to tolerance
        if y.near(&acc) {
            Some(x)
        } else {
            None
        }
    }

    /// Breakpoints of the cumulative curve, starting at the origin.
    pub fn curve(&self) -> CumulativeCurve<T> {
        let mut points = Vec::with_capacity(self.blocks.len() + 1);
        points.push((T::zero(), T::zero()));
        let (mut x, mut y) = (T::zero(), T::zero());
        for b in &self.blocks {
            x = x + b.width.clone();
            y = y + b.mass();
            points.push((x.clone(), y.clone()));
        }
        let heights = self.blocks.iter().map(|b| b.height.clone()).collect();
        CumulativeCurve { points, heights }
    }

    /// Product construction: one block per pair, widths and heights multiplied.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for a in &self.blocks {
            for b in &other.blocks {
                blocks.push(Block::new(a.width.clone() * b.width.clone(), a.height.clone() * b.height.clone()));
            }
        }
        StepFunction::new(blocks).expect("products of valid blocks are valid")
    }

    /// `n`-fold product, built from occupation-number classes so the block count stays
    /// polynomial in `n`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("tensor power needs n >= 1"));
        }
        let mut blocks = Vec::new();
        let mut counts = vec![0usize; self.blocks.len()];
        classes(&self.blocks, n, 0, &mut counts, &mut blocks);
        StepFunction::new(blocks)
    }

    /// Restriction to `(0, d]` renormalized to mass 1, where `d` is the minimal extent
    /// carrying mass `1 - eps`.
    pub fn truncated(&self, eps: &T) -> Result<Self> {
        check_eps(eps)?;
        let keep = T::one() - eps.clone();
        let d = self
            .min_extent(&keep)
            .ok_or_else(|| Error::domain("mass 1 - eps exceeds the total mass"))?;
        let inside = self.cumulative(&d)?;
        let mut rest = d;
        let mut blocks = Vec::new();
        for b in &self.blocks {
            if rest <= T::zero() {
                break;
            }
            let w = min_of(rest.clone(), b.width.clone());
            blocks.push(Block::new(w.clone(), b.height.clone() / inside.clone()));
            rest = rest - w;
        }
        StepFunction::new(blocks)
    }

    pub(crate) fn check_unit_mass(&self, what: &str) -> Result<()> {
        if self.mass().near(&T::one()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("{what} must have total mass 1, got {}", self.mass())))
        }
    }
}

/// Piecewise-linear concave curve `l -> integral of f over (0, l]`, as its breakpoints.
///
/// Lookups are binary searches, so large spectra (tensor powers) stay cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve<T> {
    points: Vec<(T, T)>,
    heights: Vec<T>,
}

impl<T: Scalar> CumulativeCurve<T> {
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn is_concave(&self) -> bool {
        let slopes: Vec<T> = self
            .points
            .windows(2)
            .map(|w| (w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone()))
            .collect();
        slopes.windows(2).all(|s| s[0].at_least(&s[1]))
    }

    pub fn final_mass(&self) -> T {
        self.points.last().map(|p| p.1.clone()).unwrap_or_else(T::zero)
    }

    /// Value at `x >= 0`.
    pub fn value_at(&self, x: &T) -> T {
        let idx = self.points.partition_point(|p| p.0 <= *x);
        if idx >= self.points.len() {
            return self.final_mass();
        }
        let (x0, y0) = &self.points[idx - 1];
        y0.clone() + (x.clone() - x0.clone()) * self.heights[idx - 1].clone()
    }

    /// `sup { x : value(x) <= y }`.
    pub fn sup_inverse(&self, y: &T) -> Extent<T> {
        if y.at_least(&self.final_mass()) {
            return Extent::Unbounded;
        }
        let idx = self.points.partition_point(|p| p.1 <= *y);
        let (x0, y0) = &self.points[idx - 1];
        Extent::Finite(x0.clone() + (y.clone() - y0.clone()) / self.heights[idx - 1].clone())
    }

    /// `inf { x : value(x) >= y }`; `None` when `y` exceeds the final mass.
    pub fn inf_inverse(&self, y: &T) -> Option<T> {
        if *y <= T::zero() {
            return Some(T::zero());
        }
        let mass = self.final_mass();
        if *y >= mass || y.near(&mass) {
            if *y > mass && !y.near(&mass) {
                return None;
            }
            // first point reaching the full mass
            let idx = self.points.partition_point(|p| !p.1.near(&mass) && p.1 < mass);
            return self.points.get(idx).map(|p| p.0.clone());
        }
        let idx = self.points.partition_point(|p| p.1 < *y);
        let (x0, y0) = &self.points[idx - 1];
        Some(x0.clone() + (y.clone() - y0.clone()) / self.heights[idx - 1].clone())
    }
}

/// The largest `m` with `cum(f, l) / (1 - eps) >= cum(g, l m)` for every `l`, together
/// with the smallest `l` at which it binds.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixedness<T> {
    pub m: T,
    pub binding_l: T,
}

pub(crate) fn check_eps<T: Scalar>(eps: &T) -> Result<()> {
    if *eps < T::zero() || *eps >= T::one() || !eps.to_f64().is_finite() {
        return Err(Error::domain(format!("eps must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

/// Relative mixedness of `f` with respect to `g` at failure probability `eps`.
///
/// The ratio `ginv(F(l)) / l` is monotone between consecutive critical points, so the
/// minimum over `(0, l*]` is found among: block ends of `f`, points where `F` hits a
/// breakpoint mass of `g`, and `l*` itself (the first `l` with `F(l) = 1`).
pub fn relative_mixedness<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>, eps: &T) -> Result<Mixedness<T>> {
    check_eps(eps)?;
    f.check_unit_mass("initial spectrum")?;
    g.check_unit_mass("final spectrum")?;
    if g.top_height().is_zero() {
        return Err(Error::domain("final spectrum has no positive height"));
    }
    let keep = T::one() - eps.clone();
    let fc = f.curve();
    let gc = g.curve();
    let l_star = fc
        .inf_inverse(&keep)
        .ok_or_else(|| Error::domain("initial spectrum cannot reach mass 1 - eps"))?;
    let g_support = g.positive_support();

    let mut critical: Vec<T> =
        fc.points().iter().map(|p| p.0.clone()).filter(|x| *x > T::zero() && *x < l_star).collect();
    for (_, y) in gc.points().iter().skip(1) {
        if *y >= T::one() || y.near(&T::one()) {
            break;
        }
        if let Some(l) = fc.inf_inverse(&(y.clone() * keep.clone())) {
            if l > T::zero() && l < l_star {
                critical.push(l);
            }
        }
    }
    critical.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    critical.dedup();

    let mut best: Option<Mixedness<T>> = None;
    let mut consider = |l: T, ratio: T| match &best {
        Some(b) if ratio.at_least(&b.m) => {}
        _ => best = Some(Mixedness { m: ratio, binding_l: l }),
    };
    for l in critical {
        let target = fc.value_at(&l) / keep.clone();
        let x = match gc.sup_inverse(&target) {
            Extent::Finite(x) => x,
            Extent::Unbounded => g_support.clone(),
        };
        consider(l.clone(), x / l);
    }
    consider(l_star.clone(), g_support / l_star);
    Ok(best.expect("l* is always a candidate"))
}

/// Lorenz dominance `cum(f, x) >= cum(g, x)` for all `x`, checked at all breakpoints.
pub fn majorizes<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> bool {
    let (fc, gc) = (f.curve(), g.curve());
    let check = |x: &T| fc.value_at(x).at_least(&gc.value_at(x));
    fc.points().iter().all(|p| check(&p.0)) && gc.points().iter().all(|p| check(&p.0))
}

/// Half the L1 distance between two step functions.
pub fn trace_distance<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> T {
    let mut cuts = f.block_ends();
    cuts.extend(g.block_ends());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();
    let mut total = T::zero();
    let mut prev = T::zero();
    let (mut fi, mut gi) = (Walker::new(f), Walker::new(g));
    for x in cuts {
        let width = x.clone() - prev.clone();
        if width > T::zero() {
            let diff = fi.height_before(&x) - gi.height_before(&x);
            total = total + diff.abs_val() * width;
        }
        prev = x;
    }
    total / T::from_ratio(2, 1)
}

/// Reads heights left to right for monotonically increasing query points.
struct Walker<'a, T> {
    blocks: &'a [Block<T>],
    index: usize,
    end: T,
}

impl<'a, T: Scalar> Walker<'a, T> {
    fn new(f: &'a StepFunction<T>) -> Self {
        let end = f.blocks.first().map(|b| b.width.clone()).unwrap_or_else(T::zero);
        Walker { blocks: &f.blocks, index: 0, end }
    }

    /// Height on the segment ending at `x`.
    fn height_before(&mut self, x: &T) -> T {
        while self.index < self.blocks.len() && self.end < *x {
            self.index += 1;
            if let Some(b) = self.blocks.get(self.index) {
                self.end = self.end.clone() + b.width.clone();
            }
        }
        self.blocks.get(self.index).map(|b| b.height.clone()).unwrap_or_else(T::zero)
    }
}

/// Appends one block per way of distributing `left` factors over `blocks[at..]`.
fn classes<T: Scalar>(blocks: &[Block<T>], left: usize, at: usize, counts: &mut [usize], out: &mut Vec<Block<T>>) {
    if at + 1 == blocks.len() {
        counts[at] = left;
        let total: usize = counts.iter().sum();
        let mut multiplicity = T::one();
        let mut placed = 0;
        let (mut width, mut height) = (T::one(), T::one());
        for (b, &k) in blocks.iter().zip(counts.iter()) {
            for i in 1..=k {
                placed += 1;
                multiplicity = multiplicity * T::from_usize(placed) / T::from_usize(i);
                width = width * b.width.clone();
                height = height * b.height.clone();
            }
        }
        debug_assert_eq!(placed, total);
        out.push(Block::new(width * multiplicity, height));
        return;
    }
    for k in 0..=left {
        counts[at] = k;
        classes(blocks, left - k, at + 1, counts, out);
    }
}
