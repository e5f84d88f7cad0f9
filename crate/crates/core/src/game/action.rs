use crate::error::{Error, Result};
use crate::protocol::shift::ShiftSpec;
use crate::scalar::Scalar;
use crate::states::check_permutation;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix must be square and non-empty"));
        }
        Ok(Matrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n).map(|i| if i / n == i % n { T::one() } else { T::zero() }).collect();
        Matrix { n, data }
    }

    /// Mixes `levels` to the thermal split of `weights` and leaves the rest alone.
    ///
    /// Entry `(i, j)` for `i, j` in the set is `A_i / A_set`.
    pub fn gibbs_mix(weights: &[T], levels: &[usize]) -> Result<Self> {
        let n = weights.len();
        let mut m = Self::identity(n);
        let total = levels.iter().fold(T::zero(), |acc, &i| acc + weights[i].clone());
        if total.is_zero() {
            return Err(Error::invalid("cannot mix levels of zero total weight"));
        }
        for &j in levels {
            for &i in levels {
                m.data[i * n + j] = weights[i].clone() / total.clone();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self.get(i, j).clone() * v[j].clone()))
            .collect()
    }

    pub fn column_sum(&self, j: usize) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, j).clone())
    }

    pub fn row_sum(&self, i: usize) -> T {
        (0..self.n).fold(T::zero(), |acc, j| acc + self.get(i, j).clone())
    }

    /// Nonnegative entries and unit column sums.
    pub fn is_stochastic(&self) -> bool {
        self.data.iter().all(|x| !x.is_negative_strict()) && (0..self.n).all(|j| self.column_sum(j).near(&T::one()))
    }

    pub fn is_bistochastic(&self) -> bool {
        self.is_stochastic() && (0..self.n).all(|i| self.row_sum(i).near(&T::one()))
    }

    /// Checks that the matrix is a valid thermalization for the given weights.
    pub fn check_thermalization(&self, weights: &[T]) -> Result<()> {
        if self.n != weights.len() {
            return Err(Error::invalid(format!("{}x{} matrix for {} levels", self.n, self.n, weights.len())));
        }
        if !self.is_stochastic() {
            return Err(Error::invalid("thermalization matrix must be column-stochastic"));
        }
        let image = self.apply(weights);
        if image.iter().zip(weights).any(|(a, b)| !a.near(b)) {
            return Err(Error::invalid("thermalization matrix does not fix the Gibbs state"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action<T> {
    /// `prob <- B prob`; weights unchanged.
    Thermalize { matrix: Matrix<T> },
    /// Scale the weights of `levels` by `factor`; the work `kT ln factor` is credited only
    /// when the system occupies one of them. Factor 0 raises the levels to infinite energy.
    Extract { levels: Vec<usize>, factor: T },
    /// Level `i` after the step is level `order[i]` before it. Free.
    Permute { order: Vec<usize> },
    /// Zero-work isothermal shift of the boundary between two levels.
    Shift(ShiftSpec<T>),
    /// Move an unoccupied level to a new weight. Free, and never branches.
    SetEmpty { level: usize, weight: T },
}

impl<T: Scalar> Action<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Thermalize { .. } => "thermalize",
            Action::Extract { .. } => "extract",
            Action::Permute { .. } => "permute",
            Action::Shift(_) => "shift",
            Action::SetEmpty { .. } => "set_empty",
        }
    }

    /// Structural checks that do not depend on the state.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Action::Thermalize { matrix } => {
                if matrix.dim() != n {
                    return Err(Error::invalid(format!("thermalization is {0}x{0} for {n} levels", matrix.dim())));
                }
            }
            Action::Extract { levels, factor } => {
                if *factor < T::zero() {
                    return Err(Error::invalid("extraction factor must be nonnegative"));
                }
                let mut seen = vec![false; n];
                for &i in levels {
                    if i >= n || seen[i] {
                        return Err(Error::invalid(format!("extraction level {i} out of range or repeated")));
                    }
                    seen[i] = true;
                }
            }
            Action::Permute { order } => check_permutation(order, n)?,
            Action::Shift(spec) => {
                if spec.level_j >= n || spec.level_k >= n || spec.level_j == spec.level_k {
                    return Err(Error::invalid("shift needs two distinct levels in range"));
                }
            }
            Action::SetEmpty { level, weight } => {
                if *level >= n {
                    return Err(Error::invalid(format!("level {level} out of range")));
                }
                if *weight < T::zero() {
                    return Err(Error::invalid("weights must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered actions plus the log-work factor a run must reach to count as a success.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy<T> {
    pub actions: Vec<Action<T>>,
    pub target: T,
}

impl<T: Scalar> Strategy<T> {
    pub fn new(actions: Vec<Action<T>>, target: T) -> Self {
        Strategy { actions, target }
    }

    pub fn extract_count(&self) -> usize {
        self.actions.iter().filter(|a| matches!(a, Action::Extract { .. })).count()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.target < T::zero() {
            return Err(Error::invalid("target factor must be nonnegative"));
        }
        for (i, a) in self.actions.iter().enumerate() {
            a.validate(n).map_err(|e| Error::invalid(format!("action {i} ({}): {e}", a.name())))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    #[test]
    fn gibbs_mix_fixes_weights() {
        let w = vec![rat(2, 1), rat(1, 1), rat(0, 1), rat(3, 1)];
        let m = Matrix::<Rational>::gibbs_mix(&w, &[0, 1, 3]).unwrap();
        assert!(m.check_thermalization(&w).is_ok());
        assert_eq!(*m.get(0, 1), rat(1, 3));
        assert_eq!(*m.get(2, 2), rat(1, 1));
    }

    #[test]
    fn rejects_non_gibbs_fixing() {
        let w = vec![rat(2, 1), rat(1, 1)];
        let swap = Matrix::from_rows(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]).unwrap();
        assert!(swap.check_thermalization(&w).is_err());
        assert!(swap.check_thermalization(&[rat(1, 1), rat(1, 1)]).is_ok());
        let bad = Matrix::from_rows(vec![vec![rat(1, 2), rat(0, 1)], vec![rat(1, 3), rat(1, 1)]]).unwrap();
        assert!(!bad.is_stochastic());
    }

    #[test]
    fn validates_actions() {
        let a: Action<Rational> = Action::Extract { levels: vec![0, 0], factor: rat(1, 1) };
        assert!(a.validate(2).is_err());
        let a: Action<Rational> = Action::Permute { order: vec![1, 0] };
        assert!(a.validate(2).is_ok());
        assert!(a.validate(3).is_err());
    }
}
