//! The invariant suite behind `ergodelab selftest`.
//!
//! Every check is deterministic; numbers in the report are printed with a
//! fixed number of digits so that two runs produce identical bytes. The run
//! stops at the first failing check.

use crate::error::Result;
use crate::grid::geometric;
use crate::lab::{
    appendix_floor_check, averaging_condition_check, counterexample_build, default_delta_schedule, default_t_grid,
    default_upper_limits, direct_rate_check, hirsch_probe, inverse_integral_first, mean_characterization,
    qucond_identity, Decision, GrowthFunction,
};
use crate::models::{element_registry, ClosedForm, L1Element, Membership, ModelElement, OperatorModel};
use crate::quad::{classify_sequence, integrate, EndpointHint, Interval, LimitVerdict, ProbeOptions};
use crate::stieltjes::{CompleteBernsteinFunction, SlowlyVaryingFunction, StieltjesFunction};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub tol: f64,
    pub checks: Vec<Check>,
    /// Checks that were not run because an earlier one failed.
    pub skipped: usize,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.skipped == 0 && self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "selftest tol={:e}", self.tol);
        for c in &self.checks {
            let _ = writeln!(out, "{} {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(
            out,
            "{} checks, {} passed, {} skipped",
            self.checks.len(),
            self.checks.iter().filter(|c| c.passed).count(),
            self.skipped
        );
        out
    }
}

type CheckFn = fn(f64) -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("quad.singular_endpoint", quad_singular),
    ("quad.infinite_tail", quad_tail),
    ("quad.limit_probe", quad_probe),
    ("measure.admissibility", measure_admissibility),
    ("stieltjes.closed_forms", closed_forms),
    ("stieltjes.duality", duality),
    ("stieltjes.blow_up_at_zero", blow_up),
    ("stieltjes.derivative_bound", derivative_bound),
    ("stieltjes.laplace_bound", laplace_bound),
    ("stieltjes.cbf_average_bound", cbf_average_bound),
    ("stieltjes.exponential_bound", exponential_bound),
    ("stieltjes.slow_variation", slow_variation),
    ("models.semigroup_law", semigroup_law),
    ("models.contraction_and_sandwich", contraction_and_sandwich),
    ("models.floor_monotone", floor_monotone),
    ("models.three_routes", three_routes),
    ("lab.direct_rate", direct_rate),
    ("lab.inverse_consistency", inverse_consistency),
    ("lab.qucond_identity", qucond),
    ("lab.averaging_power", averaging_power),
    ("lab.counterexample", counterexample),
    ("lab.appendix_floor", appendix_floor),
];

/// Runs the suite at quadrature tolerance `tol`, stopping at the first failure.
pub fn run(tol: f64) -> SelftestReport {
    let mut checks = Vec::new();
    for (i, (name, f)) in CHECKS.iter().enumerate() {
        let (passed, detail) = match f(tol) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        checks.push(Check { name: name.to_string(), passed, detail });
        if !passed {
            return SelftestReport { tol, checks, skipped: CHECKS.len() - i - 1 };
        }
    }
    SelftestReport { tol, checks, skipped: 0 }
}

fn stieltjes_builtins() -> Vec<StieltjesFunction> {
    vec![
        StieltjesFunction::power(0.25).expect("valid"),
        StieltjesFunction::power(0.5).expect("valid"),
        StieltjesFunction::power(0.75).expect("valid"),
        StieltjesFunction::log_ratio(),
        StieltjesFunction::log1p_recip(),
    ]
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn quad_singular(tol: f64) -> Result<(bool, String)> {
    let r = integrate(|x| x.powf(-0.5), Interval::new(0.0, 1.0)?, EndpointHint::singular(0.5), tol)?;
    Ok((rel_err(r.value, 2.0) <= 10.0 * tol, format!("value={:.9}", r.value)))
}

fn quad_tail(tol: f64) -> Result<(bool, String)> {
    let r = integrate(|x| 1.0 / (x * x), Interval::from(1.0)?, EndpointHint::tail(2.0), tol)?;
    Ok((rel_err(r.value, 1.0) <= 10.0 * tol, format!("value={:.9}", r.value)))
}

fn quad_probe(_tol: f64) -> Result<(bool, String)> {
    let opts = ProbeOptions::default();
    let harmonic: Vec<f64> = (1..=20).map(|k| (1..=(1usize << k)).map(|j| 1.0 / j as f64).sum()).collect();
    let geometric_sums: Vec<f64> = (1..=20).map(|k| 1.0 - 0.5f64.powi(k)).collect();
    let h = classify_sequence(&harmonic, &opts);
    let g = classify_sequence(&geometric_sums, &opts);
    Ok((
        h == LimitVerdict::Diverges && g.converges(),
        format!("harmonic={h:?} geometric={}", if g.converges() { "Converges" } else { "other" }),
    ))
}

fn measure_admissibility(tol: f64) -> Result<(bool, String)> {
    for g in stieltjes_builtins() {
        g.mu().check_admissible(tol)?;
    }
    Ok((true, "5 builtin measures admissible".into()))
}

fn closed_forms(tol: f64) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for g in stieltjes_builtins() {
        for z in geometric(1e-2, 1e2, 9) {
            worst = worst.max(rel_err(g.eval(z, tol * 1e-2)?, g.closed_form(z).expect("builtin")));
        }
    }
    Ok((worst <= 1e-6, format!("max_rel_err<=1e-6:{}", worst <= 1e-6)))
}

fn duality(tol: f64) -> Result<(bool, String)> {
    let grid = geometric(1e-2, 1e2, 17);
    for g in stieltjes_builtins() {
        let r = g.duality_check(&grid, tol)?;
        if !r.passes(1e-9) {
            return Ok((false, format!("{} violation {:.3e}", g.name(), r.max_violation())));
        }
    }
    Ok((true, "5 functions".into()))
}

fn blow_up(tol: f64) -> Result<(bool, String)> {
    let p = StieltjesFunction::power(0.5)?.limits(tol)?;
    let a = StieltjesFunction::parse("atom:1:1")?.limits(tol)?;
    Ok((
        p.g_at_zero.is_infinite() && (a.g_at_zero - 1.0).abs() < 1e-6,
        format!("power:0.5 -> {}, atom:1:1 -> {:.6}", p.g_at_zero, a.g_at_zero),
    ))
}

fn derivative_bound(tol: f64) -> Result<(bool, String)> {
    for g in stieltjes_builtins() {
        for tau in geometric(1e-3, 1e3, 25) {
            let d = g.derivative(tau, tol * 1e-2)?.abs();
            let v = g.eval(tau, tol * 1e-2)?;
            if d > (v + tol) / tau {
                return Ok((false, format!("{} tau={tau:e}", g.name())));
            }
        }
    }
    Ok((true, "|g'| <= g/tau on 5 x 25 points".into()))
}

fn laplace_bound(tol: f64) -> Result<(bool, String)> {
    for g in stieltjes_builtins() {
        for s in geometric(1e-3, 1e3, 25) {
            if s * g.laplace_density(s, tol * 1e-2)? > g.eval(1.0 / s, tol * 1e-2)? + tol {
                return Ok((false, format!("{} s={s:e}", g.name())));
            }
        }
    }
    Ok((true, "s m(s) <= g(1/s) on 5 x 25 points".into()))
}

fn cbf_average_bound(tol: f64) -> Result<(bool, String)> {
    for g in stieltjes_builtins() {
        let f = g.dual();
        for t in geometric(1e-2, 1e3, 11) {
            let (lhs, rhs) = f.lemma31_gap(t, tol * 1e-2)?;
            if lhs > rhs + tol {
                return Ok((false, format!("{} t={t:e}", f.name())));
            }
        }
    }
    Ok((true, "5 x 11 points".into()))
}

fn exponential_bound(_tol: f64) -> Result<(bool, String)> {
    let ok = (0..=1000).map(|k| k as f64 / 10.0).all(|t| t * (-t).exp() <= 4.0 / ((1.0 + t) * (1.0 + t)));
    Ok((ok, "1001 points on [0, 100]".into()))
}

fn slow_variation(_tol: f64) -> Result<(bool, String)> {
    let ok = SlowlyVaryingFunction::ALL.iter().all(|e| e.check_sampled(1e300).within);
    Ok((ok, "log, log2, qqq".into()))
}

fn semigroup_law(tol: f64) -> Result<(bool, String)> {
    let m = OperatorModel::matrix(vec![0.1, 1.0, 4.0])?;
    let x = ModelElement::Vector(vec![1.0, -1.0, 2.0]);
    let lhs = m.apply_semigroup(1.5, &m.apply_semigroup(0.5, &x)?)?;
    let rhs = m.apply_semigroup(2.0, &x)?;
    let vec_ok = lhs.as_vector().unwrap().iter().zip(rhs.as_vector().unwrap()).all(|(a, b)| rel_err(*a, *b) <= 1e-14);
    let u = ModelElement::L1(L1Element::ramp());
    let l = OperatorModel::L1;
    let a = l.norm(&l.apply_semigroup(1.5, &l.apply_semigroup(0.5, &u)?)?, tol)?;
    let b = l.norm(&l.apply_semigroup(2.0, &u)?, tol)?;
    Ok((vec_ok && rel_err(a, b) <= 10.0 * tol, "matrix and L1".into()))
}

fn contraction_and_sandwich(tol: f64) -> Result<(bool, String)> {
    let l = OperatorModel::L1;
    let c = 1.0 - (-1.0f64).exp();
    let mut n = 0;
    for u in element_registry() {
        let x = ModelElement::L1(u);
        let norm = l.norm(&x, tol)?;
        let slack = 2.0 * tol * norm.max(1.0);
        for t in [1.0, 10.0, 1e3, 1e5] {
            let s = l.snapshot(t, &x, tol)?;
            let nt = s.nt_norm.unwrap_or(f64::NAN);
            let tx = l.norm(&l.apply_semigroup(t, &x)?, tol)?;
            if !(tx <= norm + slack
                && c * nt <= s.cesaro_norm + slack
                && s.cesaro_norm <= nt + slack
                && norm / t <= nt + slack
                && nt <= norm + slack)
            {
                return Ok((false, format!("{} t={t:e}", x.label())));
            }
            n += 1;
        }
    }
    Ok((true, format!("{n} snapshots")))
}

fn floor_monotone(tol: f64) -> Result<(bool, String)> {
    let l = OperatorModel::L1;
    let grid = default_t_grid();
    for u in element_registry() {
        let x = ModelElement::L1(u);
        let mut prev = 0.0f64;
        for &t in &grid {
            let v = t * l.cesaro_norm(t, &x, tol)?;
            if v < prev - 1e-9 * prev.max(1.0) {
                return Ok((false, format!("{} t={t:e}", x.label())));
            }
            prev = v;
        }
    }
    Ok((true, "20 elements x 21 points".into()))
}

fn three_routes(tol: f64) -> Result<(bool, String)> {
    let m = OperatorModel::matrix(vec![0.1, 1.0, 4.0, 10.0])?;
    let x = ModelElement::Vector(vec![1.0, -2.0, 0.5, 3.0]);
    let f = CompleteBernsteinFunction::power(0.5)?;
    let spectral = m.apply_spectral(&ClosedForm::of_cbf(&f).expect("builtin"), &x)?;
    let phillips = m.phillips_apply(&f.levy_triple().expect("stable"), &x, tol * 1e-2)?;
    let resolvent = m.cbf_resolvent_apply(&f, &x, tol * 1e-2)?;
    let s = spectral.as_vector().unwrap();
    let worst = s
        .iter()
        .zip(&phillips)
        .zip(resolvent.as_vector().unwrap())
        .map(|((a, b), c)| rel_err(*a, *b).max(rel_err(*a, *c)))
        .fold(0.0, f64::max);
    Ok((worst <= 1e-6, format!("agree<=1e-6:{}", worst <= 1e-6)))
}

fn direct_rate(tol: f64) -> Result<(bool, String)> {
    let g = StieltjesFunction::power(0.5)?;
    let x = ModelElement::L1(L1Element::window(1.0, 2.0)?);
    let r = direct_rate_check(&OperatorModel::L1, &g, &x, &default_t_grid(), tol)?;
    Ok((r.within_bound(), format!("max_ratio={:.6}", r.max_ratio)))
}

fn inverse_consistency(tol: f64) -> Result<(bool, String)> {
    let m = OperatorModel::L1;
    let g = StieltjesFunction::power(0.5)?;
    let member = ModelElement::L1(L1Element::window(1.0, 2.0)?);
    let outsider = ModelElement::L1(L1Element::power(1.5)?);
    let (limits, deltas) = (default_upper_limits(), default_delta_schedule());
    let a = inverse_integral_first(&m, &g, &member, &limits, tol)?;
    let b = inverse_integral_first(&m, &g, &outsider, &limits, tol)?;
    let c = hirsch_probe(&m, &g, &member, &deltas, tol)?;
    let d = hirsch_probe(&m, &g, &outsider, &deltas, tol)?;
    let e = mean_characterization(&m, &g, &outsider, &default_t_grid(), &limits, tol)?;
    let ok = a.decision == Decision::Member
        && b.decision == Decision::NotMember
        && c.decision == Decision::Member
        && d.decision == Decision::NotMember
        && e.decision == Decision::NotMember;
    Ok((
        ok,
        format!(
            "first {}/{}, hirsch {}/{}",
            a.decision.name(),
            b.decision.name(),
            c.decision.name(),
            d.decision.name()
        ),
    ))
}

fn qucond(tol: f64) -> Result<(bool, String)> {
    let x = ModelElement::L1(L1Element::power(2.0)?);
    for eps in SlowlyVaryingFunction::ALL {
        if !qucond_identity(&OperatorModel::L1, 0.5, eps, &x, &default_t_grid(), tol)?.agree {
            return Ok((false, eps.name().into()));
        }
    }
    Ok((true, "log, log2, qqq".into()))
}

fn averaging_power(tol: f64) -> Result<(bool, String)> {
    let grid: Vec<f64> = (1..=30).map(|k| 2f64.powi(-k)).collect();
    let r = averaging_condition_check(&StieltjesFunction::power(0.5)?, &grid, tol)?;
    Ok((r.mainc6.holds && r.seccond.holds, format!("c_mainc6={:.6}", r.mainc6.c_est)))
}

fn counterexample(tol: f64) -> Result<(bool, String)> {
    let g = StieltjesFunction::power(0.5)?;
    let b =
        counterexample_build(&g, SlowlyVaryingFunction::Log, None, &default_t_grid(), &default_upper_limits(), tol)?;
    Ok((
        b.y_in_l1 && b.estim1_bounded && b.membership == Membership::NotMember,
        format!("alpha={:.2} estim1_sup={:.6} {}", b.alpha, b.estim1_sup, b.membership.name()),
    ))
}

fn appendix_floor(tol: f64) -> Result<(bool, String)> {
    let x = ModelElement::L1(L1Element::power(1.5)?);
    let r = appendix_floor_check(
        &OperatorModel::L1,
        &x,
        GrowthFunction::Log1p,
        &default_upper_limits(),
        &default_t_grid(),
        tol,
    )?;
    Ok((r.status() == "Diverges" && r.floor_nondecreasing, format!("{} ratio={:.3}", r.status(), r.growth_ratio)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_format_marks_failures() {
        let r = SelftestReport {
            tol: 1e-8,
            checks: vec![Check { name: "x".into(), passed: false, detail: "d".into() }],
            skipped: 2,
        };
        assert!(!r.passed());
        assert_eq!(r.to_text(), "selftest tol=1e-8\nFAIL x d\n1 checks, 0 passed, 2 skipped\n");
    }
}
