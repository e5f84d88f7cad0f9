//! Number formatting and unit conversion for reports.
//!
//! Exact values are written as `"p/q"` strings, float values as JSON numbers. Work is
//! `kT ln m`; exact reports also spell it symbolically, e.g. `"ln(4/3)"`.

use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use sst_core::{NumericMode, Scalar, WireNum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    /// Energy at the given temperature: `kT ln m`.
    Nats,
    /// Work divided by `kT ln 2`: `log2 m`.
    Bits,
    /// Work divided by `kT`: `ln m`.
    #[value(name = "kT")]
    Kt,
}

impl Units {
    pub fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
            Units::Kt => "kT",
        }
    }

    /// Converts an energy at temperature `kt` into these units.
    pub fn energy(self, value: f64, kt: f64) -> f64 {
        match self {
            Units::Nats => value,
            Units::Bits => value / (kt * LN_2),
            Units::Kt => value / kt,
        }
    }

    /// Work `kT ln(factor)` in these units.
    pub fn work<T: Scalar>(self, factor: &T, kt: f64) -> f64 {
        self.energy(kt * factor.ln(), kt)
    }

    /// Symbolic work for exact factors; `None` in float mode.
    pub fn work_text<T: Scalar>(self, factor: &T, kt: f64) -> Option<String> {
        if T::MODE != NumericMode::Exact {
            return None;
        }
        if factor.is_zero() {
            return Some("-inf".into());
        }
        if factor.is_one() {
            return Some("0".into());
        }
        Some(match self {
            Units::Nats if kt != 1.0 => format!("{kt}*ln({factor})"),
            Units::Nats | Units::Kt => format!("ln({factor})"),
            Units::Bits => format!("log2({factor})"),
        })
    }

    /// The symbolic form in exact mode, otherwise the number.
    pub fn work_value<T: Scalar>(self, factor: &T, kt: f64) -> Value {
        match self.work_text(factor, kt) {
            Some(text) => Value::String(text),
            None => float(self.work(factor, kt)),
        }
    }
}

/// `"p/q"` in exact mode, a number otherwise.
pub fn num<T: Scalar>(x: &T) -> Value {
    match x.to_wire() {
        WireNum::Text(s) => Value::String(s),
        WireNum::Float(f) => float(f),
    }
}

pub fn opt_num<T: Scalar>(x: Option<&T>) -> Value {
    x.map_or(Value::Null, num)
}

/// Infinite values become the strings `"inf"` and `"-inf"`; JSON has no literal for them.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

/// A number as a CSV field.
pub fn csv_num<T: Scalar>(x: &T) -> String {
    match x.to_wire() {
        WireNum::Text(s) => s,
        WireNum::Float(f) => f.to_string(),
    }
}

pub fn pretty<S: Serialize>(value: &S) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Write { path: path.to_owned(), source })
}

/// Simple CSV builder; fields never contain separators.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv::default();
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.text, "{line}").expect("writing to a string");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
