//! JSON form of a strategy.
//!
//! ```json
//! {"version": 1, "exact": true, "target": "4/3",
//!  "actions": [{"type": "extract", "levels": [0, 1], "factor": "4/3"}]}
//! ```
//!
//! Exact files must write every number as a string so that nothing passes through a float.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::shift::ShiftSpec;
use crate::scalar::{Scalar, WireNum};

use super::action::{Action, Matrix, Strategy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionFile {
    Thermalize { matrix: Vec<Vec<WireNum>> },
    Extract { levels: Vec<usize>, factor: WireNum },
    Permute { order: Vec<usize> },
    Shift { j: usize, k: usize, amount: WireNum },
    SetEmpty { level: usize, weight: WireNum },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub version: u32,
    #[serde(default)]
    pub exact: bool,
    pub target: WireNum,
    pub actions: Vec<ActionFile>,
}

struct Reader {
    exact: bool,
}

impl Reader {
    fn num<T: Scalar>(&self, x: &WireNum, what: &str) -> Result<T> {
        if self.exact && matches!(x, WireNum::Float(_)) {
            return Err(Error::invalid(format!("{what}: exact files need numbers written as strings")));
        }
        x.parse()
    }
}

impl StrategyFile {
    pub fn from_strategy<T: Scalar>(strategy: &Strategy<T>) -> Self {
        let actions = strategy
            .actions
            .iter()
            .map(|a| match a {
                Action::Thermalize { matrix } => ActionFile::Thermalize {
                    matrix: matrix.rows().iter().map(|r| r.iter().map(Scalar::to_wire).collect()).collect(),
                },
                Action::Extract { levels, factor } => {
                    ActionFile::Extract { levels: levels.clone(), factor: factor.to_wire() }
                }
                Action::Permute { order } => ActionFile::Permute { order: order.clone() },
                Action::Shift(s) => ActionFile::Shift { j: s.level_j, k: s.level_k, amount: s.amount.to_wire() },
                Action::SetEmpty { level, weight } => ActionFile::SetEmpty { level: *level, weight: weight.to_wire() },
            })
            .collect();
        StrategyFile {
            version: SCHEMA_VERSION,
            exact: T::MODE == crate::scalar::NumericMode::Exact,
            target: strategy.target.to_wire(),
            actions,
        }
    }

    pub fn to_strategy<T: Scalar>(&self) -> Result<Strategy<T>> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::invalid(format!("unsupported strategy version {}", self.version)));
        }
        let r = Reader { exact: self.exact };
        let actions = self
            .actions
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let what = format!("action {i}");
                Ok(match a {
                    ActionFile::Thermalize { matrix } => Action::Thermalize {
                        matrix: Matrix::from_rows(
                            matrix
                                .iter()
                                .map(|row| row.iter().map(|x| r.num(x, &what)).collect::<Result<Vec<T>>>())
                                .collect::<Result<_>>()?,
                        )?,
                    },
                    ActionFile::Extract { levels, factor } => {
                        Action::Extract { levels: levels.clone(), factor: r.num(factor, &what)? }
                    }
                    ActionFile::Permute { order } => Action::Permute { order: order.clone() },
                    ActionFile::Shift { j, k, amount } => Action::Shift(ShiftSpec::new(*j, *k, r.num(amount, &what)?)),
                    ActionFile::SetEmpty { level, weight } => {
                        Action::SetEmpty { level: *level, weight: r.num(weight, &what)? }
                    }
                })
            })
            .collect::<Result<_>>()?;
        Ok(Strategy::new(actions, r.num(&self.target, "target")?))
    }
}
