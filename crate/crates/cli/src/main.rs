//! `ergodelab`: run the laboratory's checks from the command line.
//!
//! Exit status: 0 when every asserted contract held, 1 when a violation was
//! found, 2 when a verdict was inconclusive, 64 on usage errors.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{parse_config, Settings, UsageError, TOL_ENV};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "ergodelab", version, about = "Mean ergodic rates on operator models: checks, tables and plot data")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Quadrature tolerance (default 1e-8, or $ERGODELAB_TOL).
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pointwise table of a Stieltjes (--g) or complete Bernstein (--f) function.
    Eval(EvalArgs),
    /// ‖C_t x‖ against 4M‖g(A)x‖/g(1/t) on the t-grid.
    DirectRate(RateArgs),
    /// Integral criteria implying x ∈ dom(g(A)).
    Inverse(InverseArgs),
    /// Limit of ∫_δ^1 (A+s)^{-1}x μ(ds) as δ → 0+.
    Hirsch(HirschArgs),
    /// Extra domain (q∘g)(A) from a 1/g(1/t) rate.
    ExtraDomain(ExtraArgs),
    /// The two-condition characterization through m(t).
    MeanChar(MeanArgs),
    /// x ∈ dom(A^{-α}) through ∫ s^{α-1} C_s x ds.
    Fractional(FractionalArgs),
    /// The averaging conditions on g near 0.
    Averaging(AveragingArgs),
    /// Builds the optimality counterexample for (g, ε).
    Counterexample(CounterexampleArgs),
    /// The 1/t floor and the divergence of ∫ ‖C_t x‖/φ(t) dt.
    Appendix(AppendixArgs),
    /// Runs the full invariant suite.
    Selftest,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long = "z-min")]
    z_min: Option<String>,
    #[arg(long = "z-max")]
    z_max: Option<String>,
    #[arg(long)]
    points: Option<String>,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    /// Comma-separated t values.
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
}

#[derive(Args, Debug)]
struct InverseArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    /// `g1`, `first` or `both`.
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long = "upper-limits")]
    upper_limits: Option<String>,
}

#[derive(Args, Debug)]
struct HirschArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    #[arg(long)]
    deltas: Option<String>,
}

#[derive(Args, Debug)]
struct ExtraArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
}

#[derive(Args, Debug)]
struct MeanArgs {
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    #[arg(long = "upper-limits")]
    upper_limits: Option<String>,
}

#[derive(Args, Debug)]
struct FractionalArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    #[arg(long = "upper-limits")]
    upper_limits: Option<String>,
}

#[derive(Args, Debug)]
struct AveragingArgs {
    #[arg(long)]
    g: Option<String>,
    /// Comma-separated t values, decreasing inside (0, 1).
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    #[arg(long)]
    g: Option<String>,
    /// `log`, `log2` or `qqq`.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    #[arg(long = "upper-limits")]
    upper_limits: Option<String>,
}

#[derive(Args, Debug)]
struct AppendixArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    element: Option<String>,
    /// `log1p`, `log1p2`, `one` or `power:p`.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    #[arg(long = "upper-limits")]
    upper_limits: Option<String>,
}

fn flags(pairs: &[(&str, &Option<String>)]) -> BTreeMap<String, String> {
    pairs.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect()
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::DirectRate(_) => "direct-rate",
            Command::Inverse(_) => "inverse",
            Command::Hirsch(_) => "hirsch",
            Command::ExtraDomain(_) => "extra-domain",
            Command::MeanChar(_) => "mean-char",
            Command::Fractional(_) => "fractional",
            Command::Averaging(_) => "averaging",
            Command::Counterexample(_) => "counterexample",
            Command::Appendix(_) => "appendix",
            Command::Selftest => "selftest",
        }
    }

    fn flags(&self) -> BTreeMap<String, String> {
        match self {
            Command::Eval(a) => {
                flags(&[("g", &a.g), ("f", &a.f), ("z-min", &a.z_min), ("z-max", &a.z_max), ("points", &a.points)])
            }
            Command::DirectRate(a) => {
                flags(&[("g", &a.g), ("model", &a.model), ("element", &a.element), ("t-grid", &a.t_grid)])
            }
            Command::Inverse(a) => flags(&[
                ("g", &a.g),
                ("model", &a.model),
                ("element", &a.element),
                ("criterion", &a.criterion),
                ("upper-limits", &a.upper_limits),
            ]),
            Command::Hirsch(a) => {
                flags(&[("g", &a.g), ("model", &a.model), ("element", &a.element), ("deltas", &a.deltas)])
            }
            Command::ExtraDomain(a) => {
                flags(&[("g", &a.g), ("q", &a.q), ("model", &a.model), ("element", &a.element), ("t-grid", &a.t_grid)])
            }
            Command::MeanChar(a) => flags(&[
                ("g", &a.g),
                ("model", &a.model),
                ("element", &a.element),
                ("t-grid", &a.t_grid),
                ("upper-limits", &a.upper_limits),
            ]),
            Command::Fractional(a) => flags(&[
                ("alpha", &a.alpha),
                ("model", &a.model),
                ("element", &a.element),
                ("upper-limits", &a.upper_limits),
            ]),
            Command::Averaging(a) => flags(&[("g", &a.g), ("t-grid", &a.t_grid)]),
            Command::Counterexample(a) => flags(&[
                ("g", &a.g),
                ("eps", &a.eps),
                ("alpha", &a.alpha),
                ("t-grid", &a.t_grid),
                ("upper-limits", &a.upper_limits),
            ]),
            Command::Appendix(a) => flags(&[
                ("model", &a.model),
                ("element", &a.element),
                ("phi", &a.phi),
                ("t-grid", &a.t_grid),
                ("upper-limits", &a.upper_limits),
            ]),
            Command::Selftest => BTreeMap::new(),
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Output goes to `stdout` (or `--out`); diagnostics to `stderr`.
pub fn run(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code, out)) => {
            let written = match out {
                Some(path) => std::fs::write(&path, &text).map_err(|e| format!("cannot write {path}: {e}")),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return 1;
            }
            code
        }
        Err(commands::Failure::Usage(e)) => {
            let _ = writeln!(stderr, "usage error: {e}");
            EXIT_USAGE
        }
        Err(commands::Failure::Inconclusive(e)) => {
            let _ = writeln!(stderr, "inconclusive: {e}");
            2
        }
        Err(commands::Failure::Numerical(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<(String, u8, Option<String>), commands::Failure> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut f = cli.command.flags();
    if let Some(t) = &cli.tol {
        f.insert("tol".into(), t.clone());
    }
    if let Some(o) = &cli.out {
        f.insert("out".into(), o.clone());
    }
    let settings = Settings::new(f, file, std::env::var(TOL_ENV).ok());
    let format = match (cli.format, settings.get("format")) {
        (Some(f), _) => Some(f),
        (None, Some(text)) => {
            Some(Format::from_str(text, true).map_err(|_| UsageError(format!("unknown format `{text}`")))?)
        }
        (None, None) => None,
    };
    let (text, code) = commands::dispatch(cli.command.name(), &settings, format)?;
    Ok((text, code, settings.get("out").map(str::to_string)))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let code = run(&argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}
