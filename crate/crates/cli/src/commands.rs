use crate::config::{Settings, UsageError};
use crate::Format;
use ergodelab::grid::geometric;
use ergodelab::lab::{
    appendix_floor_check, averaging_condition_check, counterexample_build, default_delta_schedule, default_t_grid,
    default_upper_limits, direct_rate_check, extra_domain_check, fractional_criterion, hirsch_probe,
    inverse_integral_first, inverse_integral_g1, mean_characterization, Decision, GrowthFunction, IntegralDiagnostic,
    InverseReport, RateVerdict,
};
use ergodelab::models::{Membership, ModelElement, OperatorModel};
use ergodelab::quad::LimitVerdict;
use ergodelab::stieltjes::{CompleteBernsteinFunction, SlowlyVaryingFunction, StieltjesFunction};
use ergodelab::Error;
use serde::Serialize;
use std::fmt::Write as _;

pub enum Failure {
    Usage(String),
    Inconclusive(String),
    Numerical(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::UnknownBuiltin(_)
            | Error::InvalidHint(_)
            | Error::InvalidInterval { .. }
            | Error::PreconditionFailed(_)
            | Error::Unsupported(_)
            | Error::Serialization(_) => Failure::Usage(e.to_string()),
            Error::Inconclusive(m) => Failure::Inconclusive(m),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

const OK: u8 = 0;
const VIOLATION: u8 = 1;
const INCONCLUSIVE: u8 = 2;

type Outcome = Result<(String, u8), Failure>;

pub fn dispatch(command: &str, s: &Settings, format: Option<Format>) -> Outcome {
    let tol = s.tol()?;
    match command {
        "eval" => eval(s, tol, format.unwrap_or(Format::Csv)),
        "direct-rate" => direct_rate(s, tol, format.unwrap_or(Format::Csv)),
        "inverse" => inverse(s, tol, format.unwrap_or(Format::Csv)),
        "hirsch" => hirsch(s, tol, format.unwrap_or(Format::Csv)),
        "extra-domain" => extra_domain(s, tol, format.unwrap_or(Format::Csv)),
        "mean-char" => mean_char(s, tol, format.unwrap_or(Format::Csv)),
        "fractional" => fractional(s, tol, format.unwrap_or(Format::Csv)),
        "averaging" => averaging(s, tol, format.unwrap_or(Format::Csv)),
        "counterexample" => counterexample(s, tol, format.unwrap_or(Format::Json)),
        "appendix" => appendix(s, tol, format.unwrap_or(Format::Csv)),
        "selftest" => selftest(tol, format),
        other => Err(Failure::Usage(format!("unknown command {other}"))),
    }
}

/// `{"schema": 1, "command": ..., "report": ...}`.
fn json<T: Serialize>(command: &str, report: &T) -> Result<String, Failure> {
    let v = serde_json::json!({ "schema": 1, "command": command, "report": report });
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// A Stieltjes function: a builtin reference or an inline JSON triple.
fn stieltjes(text: &str) -> Result<StieltjesFunction, Failure> {
    Ok(if text.trim_start().starts_with('{') {
        StieltjesFunction::from_json(text)?
    } else {
        StieltjesFunction::parse(text)?
    })
}

fn cbf(text: &str) -> Result<CompleteBernsteinFunction, Failure> {
    Ok(if text.trim_start().starts_with('{') {
        CompleteBernsteinFunction::from_json(text)?
    } else {
        CompleteBernsteinFunction::parse(text)?
    })
}

fn model_and_element(s: &Settings) -> Result<(OperatorModel, ModelElement), Failure> {
    let model = OperatorModel::parse(s.get("model").unwrap_or("l1"))?;
    let element = ModelElement::parse(s.require("element")?)?;
    model.check(&element).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((model, element))
}

fn partials_csv(out: &mut String, label: &str, d: &IntegralDiagnostic) {
    for (t, p) in d.upper_limits.iter().zip(&d.partials) {
        let _ = writeln!(out, "{label},{t},{p}");
    }
}

/// Columns `z,value,closed_form`; `closed_form` is empty without one.
fn eval(s: &Settings, tol: f64, format: Format) -> Outcome {
    let lo = s.number("z-min")?.unwrap_or(1e-2);
    let hi = s.number("z-max")?.unwrap_or(1e2);
    let n = s.number("points")?.unwrap_or(41.0);
    if !(lo > 0.0 && hi > lo && n >= 2.0 && n.fract() == 0.0) {
        return Err(Failure::Usage("need 0 < z-min < z-max and an integer points >= 2".into()));
    }
    let zs = geometric(lo, hi, n as usize);
    type Row = (f64, f64, Option<f64>);
    let (name, rows): (String, Vec<Row>) = match (s.get("g"), s.get("f")) {
        (Some(g), None) => {
            let g = stieltjes(g)?;
            let rows = zs.iter().map(|&z| Ok((z, g.eval(z, tol)?, g.closed_form(z)))).collect::<Result<_, Error>>()?;
            (g.name(), rows)
        }
        (None, Some(f)) => {
            let f = cbf(f)?;
            let rows = zs.iter().map(|&z| Ok((z, f.eval(z, tol)?, f.closed_form(z)))).collect::<Result<_, Error>>()?;
            (f.name(), rows)
        }
        _ => return Err(Failure::Usage("eval needs exactly one of --g and --f".into())),
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("z,value,closed_form\n");
            for (z, v, c) in &rows {
                let c = c.map(|c| c.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{z},{v},{c}");
            }
            out
        }
        Format::Json => {
            #[derive(Serialize)]
            struct EvalRow {
                z: f64,
                value: f64,
                closed_form: Option<f64>,
            }
            #[derive(Serialize)]
            struct EvalReport {
                function: String,
                rows: Vec<EvalRow>,
            }
            let rows = rows.into_iter().map(|(z, value, closed_form)| EvalRow { z, value, closed_form }).collect();
            json("eval", &EvalReport { function: name, rows })?
        }
    };
    Ok((text, OK))
}

/// Columns `t,cesaro_norm,bound,ratio`.
fn direct_rate(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let (model, x) = model_and_element(s)?;
    let grid = s.list("t-grid", default_t_grid())?;
    let r = direct_rate_check(&model, &g, &x, &grid, tol)?;
    let code = match r.verdict {
        RateVerdict::AllWithinBound => OK,
        RateVerdict::Violations(_) => VIOLATION,
    };
    let text = match format {
        Format::Csv => r.to_csv(),
        Format::Json => json("direct-rate", &r)?,
    };
    Ok((text, code))
}

fn report_code(reports: &[&InverseReport]) -> u8 {
    if reports.iter().any(|r| !r.consistent) {
        VIOLATION
    } else if reports
        .iter()
        .any(|r| r.membership == Membership::Inconclusive || r.diagnostic.verdict == LimitVerdict::Inconclusive)
    {
        INCONCLUSIVE
    } else {
        OK
    }
}

/// Columns `criterion,T,partial`.
fn inverse(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let (model, x) = model_and_element(s)?;
    let limits = s.list("upper-limits", default_upper_limits())?;
    let which = s.get("criterion").unwrap_or("both");
    let mut reports = Vec::new();
    if matches!(which, "g1" | "both") {
        reports.push(inverse_integral_g1(&model, &g, &x, &limits, tol)?);
    }
    if matches!(which, "first" | "both") {
        reports.push(inverse_integral_first(&model, &g, &x, &limits, tol)?);
    }
    if reports.is_empty() {
        return Err(Failure::Usage(format!("--criterion must be g1, first or both, got `{which}`")));
    }
    let code = report_code(&reports.iter().collect::<Vec<_>>());
    let text = match format {
        Format::Csv => {
            let mut out = String::from("criterion,T,partial\n");
            for r in &reports {
                partials_csv(&mut out, &r.criterion, &r.diagnostic);
            }
            out
        }
        Format::Json => json("inverse", &reports)?,
    };
    Ok((text, code))
}

/// Columns `delta,increment,cumulative`.
fn hirsch(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let (model, x) = model_and_element(s)?;
    let deltas = s.list("deltas", default_delta_schedule())?;
    let r = hirsch_probe(&model, &g, &x, &deltas, tol)?;
    let code = if !r.consistent {
        VIOLATION
    } else if r.decision == Decision::Inconclusive {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("delta,increment,cumulative\n");
            let mut acc = r.initial_norm;
            let _ = writeln!(out, "{},{},{}", r.deltas[0], r.initial_norm, acc);
            for (d, inc) in r.deltas[1..].iter().zip(&r.increments) {
                acc += inc;
                let _ = writeln!(out, "{d},{inc},{acc}");
            }
            out
        }
        Format::Json => json("hirsch", &r)?,
    };
    Ok((text, code))
}

/// Columns `t,decay` with `decay = ‖C_t x‖ g(1/t)`.
fn extra_domain(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let q = cbf(s.require("q")?)?;
    let (model, x) = model_and_element(s)?;
    let grid = s.list("t-grid", default_t_grid())?;
    let r = extra_domain_check(&model, &g, &q, &x, &grid, tol)?;
    let code = if !r.consistent {
        VIOLATION
    } else if !r.hypothesis_certified || r.membership == Membership::Inconclusive {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("t,decay\n");
            for (t, v) in r.decay.grid.iter().zip(&r.decay.values) {
                let _ = writeln!(out, "{t},{v}");
            }
            out
        }
        Format::Json => json("extra-domain", &r)?,
    };
    Ok((text, code))
}

/// Columns `series,x,value`: `cond_i` rows sample `t m(t) ‖C_t x‖`,
/// `cond_ii` rows are partial integrals up to `T`.
fn mean_char(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let (model, x) = model_and_element(s)?;
    let grid = s.list("t-grid", default_t_grid())?;
    let limits = s.list("upper-limits", default_upper_limits())?;
    let r = mean_characterization(&model, &g, &x, &grid, &limits, tol)?;
    let code = if !r.consistent {
        VIOLATION
    } else if r.decision == Decision::Inconclusive {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("series,x,value\n");
            for (t, v) in r.cond_i_series.grid.iter().zip(&r.cond_i_series.values) {
                let _ = writeln!(out, "cond_i,{t},{v}");
            }
            partials_csv(&mut out, "cond_ii", &r.cond_ii);
            out
        }
        Format::Json => json("mean-char", &r)?,
    };
    Ok((text, code))
}

/// Columns `criterion,T,partial`.
fn fractional(s: &Settings, tol: f64, format: Format) -> Outcome {
    let alpha = s.number("alpha")?.ok_or_else(|| Failure::Usage("missing required option --alpha".into()))?;
    let (model, x) = model_and_element(s)?;
    let limits = s.list("upper-limits", default_upper_limits())?;
    let r = fractional_criterion(&model, alpha, &x, &limits, tol)?;
    let code = if !r.consistent {
        VIOLATION
    } else if r.decision == Decision::Inconclusive {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("criterion,T,partial\n");
            partials_csv(&mut out, "fractional", &r.diagnostic);
            out
        }
        Format::Json => json("fractional", &r)?,
    };
    Ok((text, code))
}

/// Columns `t,mainc6,seccond`: the two ratios whose sups estimate the
/// constants.
fn averaging(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let grid = s.list("t-grid", default_delta_schedule())?;
    let r = averaging_condition_check(&g, &grid, tol)?;
    let text = match format {
        Format::Csv => {
            let mut out = String::from("t,mainc6,seccond\n");
            for ((t, a), b) in r.mainc6.trace.grid.iter().zip(&r.mainc6.trace.values).zip(&r.seccond.trace.values) {
                let _ = writeln!(out, "{t},{a},{b}");
            }
            out
        }
        Format::Json => json("averaging", &r)?,
    };
    Ok((text, OK))
}

/// JSON bundle by default; CSV columns `t,estim1,cesaro_rate`.
fn counterexample(s: &Settings, tol: f64, format: Format) -> Outcome {
    let g = stieltjes(s.require("g")?)?;
    let eps = SlowlyVaryingFunction::parse(s.get("eps").unwrap_or("log"))?;
    let alpha = s.number("alpha")?;
    let grid = s.list("t-grid", default_t_grid())?;
    let limits = s.list("upper-limits", default_upper_limits())?;
    let b = counterexample_build(&g, eps, alpha, &grid, &limits, tol)?;
    let disagree = match (&b.epstheorem, &b.membership) {
        (LimitVerdict::Converges(_), Membership::NotMember) => true,
        (LimitVerdict::Diverges, Membership::Member { .. }) => true,
        _ => false,
    };
    let code = if disagree || !b.y_in_l1 {
        VIOLATION
    } else if b.decision == Decision::Inconclusive {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Json => json("counterexample", &b)?,
        Format::Csv => {
            let mut out = String::from("t,estim1,cesaro_rate\n");
            for ((t, e), c) in b.estim1.grid.iter().zip(&b.estim1.values).zip(&b.cesaro_rate.values) {
                let _ = writeln!(out, "{t},{e},{c}");
            }
            out
        }
    };
    Ok((text, code))
}

/// Columns `series,x,value`: `partial` rows are `∫_1^T ‖C_t x‖/φ(t) dt`,
/// `floor` rows are `t ‖C_t x‖`.
fn appendix(s: &Settings, tol: f64, format: Format) -> Outcome {
    let (model, x) = model_and_element(s)?;
    let phi = GrowthFunction::parse(s.get("phi").unwrap_or("log1p"))?;
    let grid = s.list("t-grid", default_t_grid())?;
    let limits = s.list("upper-limits", default_upper_limits())?;
    let r = appendix_floor_check(&model, &x, phi, &limits, &grid, tol)?;
    let code = if !r.consistent || (x.is_nonnegative() && !r.floor_nondecreasing) {
        VIOLATION
    } else if r.status() == "Inconclusive" {
        INCONCLUSIVE
    } else {
        OK
    };
    let text = match format {
        Format::Csv => {
            let mut out = String::from("series,x,value\n");
            partials_csv(&mut out, "partial", &r.diagnostic);
            for (t, v) in r.floor_grid.iter().zip(&r.floor_values) {
                let _ = writeln!(out, "floor,{t},{v}");
            }
            out
        }
        Format::Json => json("appendix", &r)?,
    };
    Ok((text, code))
}

/// Plain text by default.
fn selftest(tol: f64, format: Option<Format>) -> Outcome {
    let r = ergodelab::selftest::run(tol);
    let code = if r.passed() { OK } else { VIOLATION };
    let text = match format {
        Some(Format::Json) => json("selftest", &r)?,
        Some(Format::Csv) => {
            let mut out = String::from("check,passed,detail\n");
            for c in &r.checks {
                let _ = writeln!(out, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
            }
            out
        }
        None => r.to_text(),
    };
    Ok((text, code))
}
