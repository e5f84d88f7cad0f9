//! State and strategy files.
//!
//! ```json
//! {"version": 1, "exact": true,
//!  "levels": [{"weight": "1/3"}, {"weight": "1/3"}, {"weight": "1/3"}],
//!  "probs": ["2/3", "1/3", "0"]}
//! ```
//!
//! Levels give either a Gibbs weight or an energy; energies need `kT` and are float only.
//! Exact files write every number as a string.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sst_core::game::{Strategy, StrategyFile};
use sst_core::{DiagonalState, NumericMode, Rational, Scalar, WireNum};

use crate::error::{CliError, CliResult};

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum LevelSpec {
    Weight { weight: WireNum },
    Energy { energy: WireNum },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub version: u32,
    #[serde(default)]
    pub exact: bool,
    #[serde(rename = "kT", default, skip_serializing_if = "Option::is_none")]
    pub kt: Option<WireNum>,
    pub levels: Vec<LevelSpec>,
    pub probs: Vec<WireNum>,
}

/// Numeric back ends the CLI can build states in.
pub trait Backend: Scalar {
    fn from_energies(energies: Vec<f64>, probs: Vec<Self>, kt: f64) -> CliResult<DiagonalState<Self>>;
}

impl Backend for f64 {
    fn from_energies(energies: Vec<f64>, probs: Vec<f64>, kt: f64) -> CliResult<DiagonalState<f64>> {
        Ok(DiagonalState::from_energies(&energies, probs, kt)?)
    }
}

impl Backend for Rational {
    fn from_energies(_: Vec<f64>, _: Vec<Rational>, _: f64) -> CliResult<DiagonalState<Rational>> {
        Err(CliError::input("exact states must give weights, energies only have float weights"))
    }
}

fn wire_num<T: Scalar>(x: &WireNum, exact: bool, field: &str) -> CliResult<T> {
    if exact && matches!(x, WireNum::Float(_)) {
        return Err(CliError::input(format!("{field}: exact files need numbers written as strings")));
    }
    x.parse().map_err(|e| CliError::input(format!("{field}: {e}")))
}

impl StateFile {
    pub fn kt(&self) -> CliResult<Option<f64>> {
        self.kt.as_ref().map(|k| wire_num::<f64>(k, false, "kT")).transpose()
    }

    pub fn to_state<T: Backend>(&self) -> CliResult<DiagonalState<T>> {
        if self.version != STATE_VERSION {
            return Err(CliError::input(format!("unsupported state version {}", self.version)));
        }
        if self.levels.len() != self.probs.len() {
            return Err(CliError::input(format!(
                "levels: {} levels but {} probabilities",
                self.levels.len(),
                self.probs.len()
            )));
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| wire_num(p, self.exact, &format!("probs[{i}]")))
            .collect::<CliResult<Vec<T>>>()?;
        let energies = self.levels.iter().filter(|l| matches!(l, LevelSpec::Energy { .. })).count();
        if energies == 0 {
            let weights = self
                .levels
                .iter()
                .enumerate()
                .map(|(i, l)| match l {
                    LevelSpec::Weight { weight } => wire_num(weight, self.exact, &format!("levels[{i}].weight")),
                    LevelSpec::Energy { .. } => unreachable!("no energy levels"),
                })
                .collect::<CliResult<Vec<T>>>()?;
            return Ok(DiagonalState::new(weights, probs)?);
        }
        if energies != self.levels.len() {
            return Err(CliError::input("levels: give all weights or all energies, not a mix"));
        }
        if self.exact {
            return Err(CliError::input("levels: exact states must give weights"));
        }
        let kt = self.kt()?.ok_or_else(|| CliError::input("kT: required when levels give energies"))?;
        let energies = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| match l {
                LevelSpec::Energy { energy } => wire_num::<f64>(energy, false, &format!("levels[{i}].energy")),
                LevelSpec::Weight { .. } => unreachable!("all levels give energies"),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        T::from_energies(energies, probs, kt)
    }

    /// Energies are kept when the state was built from them.
    pub fn from_state<T: Scalar>(state: &DiagonalState<T>) -> Self {
        let exact = T::MODE == NumericMode::Exact;
        let probs = state.levels().iter().map(|l| l.prob.to_wire()).collect();
        match state.energy_view() {
            Some(view) if !exact => StateFile {
                version: STATE_VERSION,
                exact,
                kt: Some(WireNum::Float(view.kt)),
                levels: view.energies.iter().map(|&e| LevelSpec::Energy { energy: WireNum::Float(e) }).collect(),
                probs,
            },
            _ => StateFile {
                version: STATE_VERSION,
                exact,
                kt: None,
                levels: state.levels().iter().map(|l| LevelSpec::Weight { weight: l.weight.to_wire() }).collect(),
                probs,
            },
        }
    }
}

fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<D> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_owned(), source })
}

pub fn read_state(path: &Path) -> CliResult<StateFile> {
    read_json(path)
}

pub fn read_strategy(path: &Path) -> CliResult<StrategyFile> {
    read_json(path)
}

pub fn to_strategy<T: Scalar>(file: &StrategyFile) -> CliResult<Strategy<T>> {
    Ok(file.to_strategy()?)
}

/// One temperature shared by every input: the flag wins, then the files, then 1.
pub fn resolve_kt(flag: Option<f64>, files: &[&StateFile]) -> CliResult<f64> {
    let mut found: Option<f64> = None;
    for f in files {
        if let Some(kt) = f.kt()? {
            if found.is_some_and(|k| k != kt) {
                return Err(CliError::input("kT: input files disagree on the temperature"));
            }
            found = Some(kt);
        }
    }
    let kt = flag.or(found).unwrap_or(1.0);
    if kt > 0.0 && kt.is_finite() {
        Ok(kt)
    } else {
        Err(CliError::input(format!("kT: must be positive and finite, got {kt}")))
    }
}

pub fn parse_num<T: Scalar>(text: &str, what: &str) -> CliResult<T> {
    T::parse_num(text).map_err(|e| CliError::input(format!("{what}: {e}")))
}
