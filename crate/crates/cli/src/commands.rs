//! Subcommand bodies, generic over the numeric back end.

use std::path::Path;

use serde_json::{json, Value};
use sst_core::game::{audit_bound, monte_carlo, Strategy, StrategyFile};
use sst_core::laws::entropy_energy_check;
use sst_core::protocol::{run_protocol, ProtocolRun, RunMode};
use sst_core::states::{d0_eps, gibbs_rescale, h_max, h_max_eps, shannon_entropy, smooth_support};
use sst_core::workcalc::extractable_work;
use sst_core::{DiagonalState, NumericMode, Scalar};

use crate::error::{CliError, CliResult};
use crate::input::parse_num;
use crate::output::{csv_num, float, num, opt_num, pretty, write_file, Csv, Units};

/// Text for stdout plus an optional side report.
#[derive(Debug, Default)]
pub struct Emit {
    pub stdout: String,
    pub stderr: Option<String>,
}

impl Emit {
    fn json(value: &Value) -> Self {
        Emit { stdout: pretty(value), stderr: None }
    }
}

fn mode<T: Scalar>() -> &'static str {
    match T::MODE {
        NumericMode::Exact => "exact",
        NumericMode::Float => "float",
    }
}

/// `ln(p/q)` names the factor directly; a plain number is a work value in `units`.
pub fn parse_target<T: Scalar>(text: &str, units: Units, kt: f64) -> CliResult<T> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix("ln(").and_then(|s| s.strip_suffix(')')) {
        let factor: T = parse_num(inner, "--target-w")?;
        if factor.is_negative_strict() {
            return Err(CliError::input("--target-w: the factor inside ln() must be positive"));
        }
        return Ok(factor);
    }
    let w: f64 = text.parse().map_err(|_| CliError::input(format!("--target-w: cannot read {text:?}")))?;
    if w == 0.0 {
        return Ok(T::one());
    }
    if T::MODE == NumericMode::Exact {
        return Err(CliError::input("--target-w: exact mode needs the form ln(p/q)"));
    }
    let ln_factor = match units {
        Units::Nats => w / kt,
        Units::Bits => w * std::f64::consts::LN_2,
        Units::Kt => w,
    };
    Ok(T::from_f64(ln_factor.exp())?)
}

pub struct CurveRequest<'a> {
    pub path: &'a Path,
    pub grid: usize,
}

pub fn work<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps: &T,
    kt: f64,
    units: Units,
    curve: Option<CurveRequest<'_>>,
) -> CliResult<Emit> {
    let r = extractable_work(rho, sigma, eps, kt)?;
    let report = json!({
        "mode": mode::<T>(),
        "eps": num(&r.eps),
        "kT": kt,
        "units": units.name(),
        "m": num(&r.m),
        "binding_l": num(&r.binding_l),
        "work": units.work_value(&r.m, kt),
        "work_value": float(units.work(&r.m, kt)),
    });
    if let Some(req) = curve {
        write_file(req.path, &work_curve(rho, sigma, kt, units, req.grid)?)?;
    }
    Ok(Emit::json(&report))
}

/// Long-format CSV: `work` rows are `(eps, W)` with the factor `m`, `lorenz_in` and
/// `lorenz_out` rows are the breakpoints of the two rescaled Lorenz curves.
fn work_curve<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    kt: f64,
    units: Units,
    grid: usize,
) -> CliResult<String> {
    if grid == 0 {
        return Err(CliError::input("--grid: need at least one point"));
    }
    let mut csv = Csv::new(&["series", "x", "y", "factor"]);
    for k in 0..grid {
        let eps = T::from_ratio(k as i64, grid as i64);
        let r = extractable_work(rho, sigma, &eps, kt)?;
        csv.row([
            "work".into(),
            eps.to_f64().to_string(),
            units.work(&r.m, kt).to_string(),
            csv_num(&r.m),
        ]);
    }
    for (series, state) in [("lorenz_in", rho), ("lorenz_out", sigma)] {
        for (l, f) in gibbs_rescale(state).curve().points() {
            csv.row([series.into(), l.to_f64().to_string(), f.to_f64().to_string(), String::new()]);
        }
    }
    Ok(csv.into_string())
}

pub fn entropy<T: Scalar>(state: &DiagonalState<T>, eps: &T) -> CliResult<Emit> {
    let rescaled = gibbs_rescale(state);
    let report = json!({
        "mode": mode::<T>(),
        "eps": num(eps),
        "partition_function": num(&state.partition_function()),
        "shannon_bits": float(shannon_entropy(state)),
        "h_max_bits": float(h_max(&rescaled)),
        "h_max_eps_bits": float(h_max_eps(&rescaled, eps)?),
        "smooth_support": num(&smooth_support(&rescaled, eps)?),
        "d0_eps_bits": float(d0_eps(state, eps)?),
    });
    Ok(Emit::json(&report))
}

/// Per-realization CSV on stdout, summary JSON as the side report.
pub fn simulate<T: Scalar>(
    state: &DiagonalState<T>,
    strategy: &Strategy<T>,
    runs: usize,
    seed: u64,
    kt: f64,
    units: Units,
) -> CliResult<Emit> {
    let report = monte_carlo(state, strategy, kt, runs, seed)?;
    let mut csv = Csv::new(&[
        "index",
        "initial_level",
        "final_level",
        "escaped",
        "success",
        "logwork",
        "work",
        "d_e_sys",
        "d_e_bath",
        "d_w",
        "d_e_extra",
    ]);
    let mut worst_imbalance = 0.0f64;
    for (i, t) in report.traces.iter().enumerate() {
        let final_level =
            if t.escaped { String::new() } else { t.history.last().unwrap_or(&t.initial_level).to_string() };
        let ledger = match &t.ledger {
            Some(l) => {
                worst_imbalance = worst_imbalance.max(l.imbalance().abs());
                [l.d_e_sys, l.d_e_bath, l.d_w, l.d_e_extra].map(|x| units.energy(x, kt).to_string())
            }
            None => Default::default(),
        };
        csv.row(
            [
                i.to_string(),
                t.initial_level.to_string(),
                final_level,
                t.escaped.to_string(),
                t.success.to_string(),
                csv_num(&t.logwork),
                units.energy(t.work, kt).to_string(),
            ]
            .into_iter()
            .chain(ledger),
        );
    }
    let escaped = report.traces.iter().filter(|t| t.escaped).count();
    let summary = json!({
        "mode": mode::<T>(),
        "runs": report.runs,
        "seed": seed,
        "kT": kt,
        "units": units.name(),
        "target": num(&strategy.target),
        "target_work": units.work_value(&strategy.target, kt),
        "successes": report.successes,
        "escaped": escaped,
        "success_rate": report.success_rate,
        "ci95": [report.ci_low, report.ci_high],
        "max_ledger_imbalance": worst_imbalance,
    });
    Ok(Emit { stdout: csv.into_string(), stderr: Some(pretty(&summary)) })
}

pub fn audit<T: Scalar>(state: &DiagonalState<T>, strategy: &Strategy<T>) -> CliResult<Emit> {
    let r = audit_bound(state, strategy, &strategy.target)?;
    let report = json!({
        "mode": mode::<T>(),
        "target": num(&r.target),
        "p_s": num(&r.p_s),
        "vacuous": r.vacuous,
        "min_slack": opt_num(r.min_slack.as_ref()),
        "slack_at": opt_num(r.slack_at.as_ref()),
        "mixedness": opt_num(r.mixedness.as_ref()),
        "holds": r.holds,
    });
    Ok(Emit::json(&report))
}

pub struct ProtocolRequest<'a> {
    pub mode: RunMode,
    pub emit_strategy: Option<&'a Path>,
    pub emit_initial: Option<&'a Path>,
}

pub fn protocol<T: Scalar>(
    rho: &DiagonalState<T>,
    sigma: &DiagonalState<T>,
    eps: &T,
    kt: f64,
    units: Units,
    req: ProtocolRequest<'_>,
) -> CliResult<Emit> {
    let run = run_protocol(rho, sigma, eps, req.mode)?;
    let plan = match &run {
        ProtocolRun::Exact(r) => &r.plan,
        ProtocolRun::MonteCarlo { plan, .. } => plan,
    };
    if let Some(path) = req.emit_strategy {
        write_file(path, &pretty(&StrategyFile::from_strategy(&plan.strategy)))?;
    }
    if let Some(path) = req.emit_initial {
        write_file(path, &pretty(&crate::input::StateFile::from_state(&plan.initial)))?;
    }
    let m = &plan.mixedness.m;
    let mut report = json!({
        "mode": mode::<T>(),
        "eps": num(eps),
        "kT": kt,
        "units": units.name(),
        "m": num(m),
        "work": units.work_value(m, kt),
        "actions": plan.strategy.actions.len(),
        "padding": {
            "source_levels": plan.padding.source_levels,
            "target_levels": plan.padding.target_levels,
            "source_empty": plan.padding.source_empty,
            "target_empty": plan.padding.target_empty,
            "total_levels": plan.padding.total_levels,
        },
    });
    let extra = match &run {
        ProtocolRun::Exact(r) => json!({
            "run": "exact",
            "p_s": num(&r.p_s),
            "success_factor": opt_num(r.success_logwork.as_ref()),
            "reached_target": r.reached_target,
            "catalyst_restored": r.catalyst_restored,
            "audit": {
                "holds": r.audit.holds,
                "min_slack": opt_num(r.audit.min_slack.as_ref()),
            },
        }),
        ProtocolRun::MonteCarlo { report: mc, .. } => {
            let RunMode::MonteCarlo { seed, .. } = req.mode else { unreachable!("Monte Carlo run") };
            json!({
                "run": "monte_carlo",
                "runs": mc.runs,
                "seed": seed,
                "successes": mc.successes,
                "success_rate": mc.success_rate,
                "ci95": [mc.ci_low, mc.ci_high],
            })
        }
    };
    if let (Value::Object(base), Value::Object(more)) = (&mut report, extra) {
        base.extend(more);
    }
    Ok(Emit::json(&report))
}

pub fn laws<T: Scalar>(before: &DiagonalState<T>, after: &DiagonalState<T>, beta: f64, units: Units) -> CliResult<Emit> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CliError::input(format!("--beta: must be positive and finite, got {beta}")));
    }
    let r = entropy_energy_check(before, after, beta)?;
    let kt = 1.0 / beta;
    let report = json!({
        "mode": mode::<T>(),
        "beta": beta,
        "units": units.name(),
        "delta_s_bits": float(r.delta_s),
        "beta_delta_e_bits": float(r.beta_delta_e),
        "m0": num(&r.m0),
        "w0": units.work_value(&r.m0, kt),
        "w0_value": float(units.energy(r.w0, kt)),
        "entropy_holds": r.entropy_holds,
        "majorization_holds": r.majorization_holds,
        "kelvin_risk": r.kelvin_risk,
    });
    Ok(Emit::json(&report))
}
