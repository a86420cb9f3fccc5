use super::{
    check_grid, epstheorem_verdict, g_derivative, g_value, integrate_finite, membership_diagnostic, spectral_of,
    Decision, IntegralDiagnostic, SupTrace,
};
use crate::error::{Error, Result};
use crate::measure::KernelShape;
use crate::models::{ClosedForm, Membership, ModelElement, OperatorModel, SpectralFunction};
use crate::quad::{
    classify_increments, try_integrate, EndpointHint, Interval, LimitVerdict, ProbeOptions, QuadOptions,
};
use crate::stieltjes::{compose, CompleteBernsteinFunction, SlowlyVaryingFunction, StieltjesFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

/// An inverse criterion next to the membership diagnostic it implies (or is
/// equivalent to).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub criterion: String,
    pub diagnostic: IntegralDiagnostic,
    pub membership: Membership,
    /// No contradiction between the criterion and the membership diagnostic.
    pub consistent: bool,
    pub decision: Decision,
}

fn verdict_side(v: &LimitVerdict) -> Option<bool> {
    match v {
        LimitVerdict::Converges(_) => Some(true),
        LimitVerdict::Diverges => Some(false),
        LimitVerdict::Inconclusive => None,
    }
}

fn contradicts(criterion: Option<bool>, membership: &Membership, iff: bool) -> bool {
    match (criterion, membership) {
        (Some(true), Membership::NotMember) => true,
        (Some(false), Membership::Member { .. }) => iff,
        _ => false,
    }
}

fn inverse_report(criterion: &str, diagnostic: IntegralDiagnostic, membership: Membership, iff: bool) -> InverseReport {
    let side = verdict_side(&diagnostic.verdict);
    InverseReport {
        criterion: criterion.into(),
        consistent: !contradicts(side, &membership, iff),
        decision: Decision::agree(side, &membership),
        diagnostic,
        membership,
    }
}

/// Runs `f`, turning the first error seen inside a quadrature callback back
/// into that error instead of a generic non-finite report.
struct ErrorSlot(Mutex<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        ErrorSlot(Mutex::new(None))
    }

    fn catch(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.0.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    }

    fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0.into_inner().unwrap() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

/// Partials of `∫_1^{T_k} |g′(1/t)| ‖C_t x‖ / t² dt`.
pub fn inverse_integral_g1(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    upper_limits: &[f64],
    tol: f64,
) -> Result<InverseReport> {
    model.check(x)?;
    let inner = tol * 1e-2;
    let diagnostic = IntegralDiagnostic::build(upper_limits, 0.0, |a, b| {
        integrate_finite(
            |t| Ok(g_derivative(g, 1.0 / t, inner)?.abs() * model.cesaro_norm(t, x, inner)? / (t * t)),
            a,
            b,
            tol,
        )
    })?;
    let membership = membership_diagnostic(model, spectral_of(g).as_ref(), x, inner)?;
    Ok(inverse_report("g1", diagnostic, membership, false))
}

/// Partials of `∫_1^{T_k} g(1/t) ‖C_t x‖ / t dt`.
pub fn inverse_integral_first(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    upper_limits: &[f64],
    tol: f64,
) -> Result<InverseReport> {
    model.check(x)?;
    let inner = tol * 1e-2;
    let diagnostic = IntegralDiagnostic::build(upper_limits, 0.0, |a, b| {
        integrate_finite(|t| Ok(g_value(g, 1.0 / t, inner)? * model.cesaro_norm(t, x, inner)? / t), a, b, tol)
    })?;
    let membership = membership_diagnostic(model, spectral_of(g).as_ref(), x, inner)?;
    Ok(inverse_report("first", diagnostic, membership, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPowerReport {
    pub alpha: f64,
    /// `‖C_t x‖ g(1/t) log^{1+α}(2 + g(1/t))` on the grid.
    pub trace: SupTrace,
    pub bounded: bool,
    pub membership: Membership,
    pub consistent: bool,
}

/// Samples `‖C_t x‖ g(1/t) log^{1+α}(2 + g(1/t))`; a bounded sup must come
/// with membership in `dom(g(A))`.
pub fn logpower_rate_test(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    alpha: f64,
    t_grid: &[f64],
    tol: f64,
) -> Result<LogPowerReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must lie in (0, 1)")));
    }
    check_grid(t_grid)?;
    let inner = tol * 1e-2;
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let gt = g_value(g, 1.0 / t, inner)?;
            Ok(model.cesaro_norm(t, x, inner)? * gt * (2.0 + gt).ln().powf(1.0 + alpha))
        })
        .collect::<Result<Vec<_>>>()?;
    let trace = SupTrace::new(t_grid.to_vec(), values);
    let bounded = trace.stabilized;
    let membership = membership_diagnostic(model, spectral_of(g).as_ref(), x, inner)?;
    Ok(LogPowerReport { alpha, consistent: !(bounded && membership.is_not_member()), bounded, trace, membership })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HirschReport {
    pub deltas: Vec<f64>,
    /// `‖J(δ_1)‖`.
    pub initial_norm: f64,
    /// `‖J(δ_{k+1}) - J(δ_k)‖`.
    pub increments: Vec<f64>,
    pub verdict: LimitVerdict,
    pub membership: Membership,
    pub consistent: bool,
    pub decision: Decision,
}

/// Probes `lim_{δ→0+} J(δ)`, `J(δ) = ∫_δ^1 (A + s)^{-1} x μ(ds)`, for `g ~ (0, 0, μ)`.
///
/// The resolvent acts by a positive multiplier on both models, so
/// `‖J(δ') - J(δ)‖ = ∫_{(δ', δ]} ‖(A + s)^{-1} x‖ μ(ds)`.
pub fn hirsch_probe(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    deltas: &[f64],
    tol: f64,
) -> Result<HirschReport> {
    require_pure_measure(g)?;
    model.check(x)?;
    if deltas.len() < 6
        || deltas[0] > 1.0
        || deltas.iter().any(|d| !(*d > 0.0))
        || deltas.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::InvalidArgument(
            "δ schedule must decrease from at most 1 towards 0 with at least 6 points".into(),
        ));
    }
    let inner = tol * 1e-2;
    let piece = |lo: f64, hi: f64| -> Result<f64> {
        if g.mu().is_zero() || x.is_zero() {
            return Ok(0.0);
        }
        let slot = ErrorSlot::new();
        let r = g.mu().integrate_kernel_on(
            |s| slot.catch(model.resolvent_norm(s, x, inner)),
            lo,
            hi,
            KernelShape::resolvent(hi),
            &QuadOptions::relative(tol),
        );
        slot.finish(r).map(|q| q.value)
    };
    let initial_norm = if deltas[0] < 1.0 { piece(deltas[0], 1.0)? } else { 0.0 };
    let increments = deltas.par_windows(2).map(|w| piece(w[1], w[0])).collect::<Result<Vec<_>>>()?;
    let total = initial_norm + increments.iter().sum::<f64>();
    let verdict = classify_increments(&increments, total, &ProbeOptions::default());
    let membership = membership_diagnostic(model, spectral_of(g).as_ref(), x, inner)?;
    let side = verdict_side(&verdict);
    Ok(HirschReport {
        deltas: deltas.to_vec(),
        initial_norm,
        increments,
        consistent: !contradicts(side, &membership, true),
        decision: Decision::agree(side, &membership),
        verdict,
        membership,
    })
}

fn require_pure_measure(g: &StieltjesFunction) -> Result<()> {
    if g.a() != 0.0 || g.b() != 0.0 {
        return Err(Error::PreconditionFailed(format!(
            "{} must have the representation (0, 0, μ), got a = {}, b = {}",
            g.name(),
            g.a(),
            g.b()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraDomainReport {
    pub q: String,
    /// Partials of `∫_1^{10^k} q(τ)/τ² dτ`.
    pub q_admissibility: IntegralDiagnostic,
    /// `g(1)`, the lower limit of the final bound.
    pub tau0: f64,
    /// `∫_{g(1)}^∞ q(τ)/τ² dτ`.
    pub q_tail_integral: f64,
    /// `‖C_t x‖ g(1/t)` on the grid.
    pub decay: SupTrace,
    pub hypothesis_certified: bool,
    /// Membership in `dom((q∘g)(A))`.
    pub membership: Membership,
    pub consistent: bool,
}

/// If `‖C_t x‖ = O(1/g(1/t))` and `q` is a complete Bernstein function with
/// `∫_1^∞ q(τ)/τ² dτ < ∞` and `q(0+) = 0`, then `x ∈ dom((q∘g)(A))`.
pub fn extra_domain_check(
    model: &OperatorModel,
    g: &StieltjesFunction,
    q: &CompleteBernsteinFunction,
    x: &ModelElement,
    t_grid: &[f64],
    tol: f64,
) -> Result<ExtraDomainReport> {
    check_grid(t_grid)?;
    model.check(x)?;
    let inner = tol * 1e-2;
    if q.a() != 0.0 {
        return Err(Error::PreconditionFailed(format!("q(0+) = {} is not 0", q.a())));
    }
    let qv = |tau: f64| -> Result<f64> {
        match q.closed_form(tau) {
            Some(v) => Ok(v),
            None => q.eval(tau, inner),
        }
    };
    let q_admissibility = IntegralDiagnostic::build(&crate::grid::powers(10.0, 0..=8), 0.0, |a, b| {
        integrate_finite(|tau| Ok(qv(tau)? / (tau * tau)), a, b, inner)
    })?;
    if !q_admissibility.verdict.converges() {
        return Err(Error::PreconditionFailed(format!(
            "∫_1^∞ q(τ)/τ² dτ is not certified finite for q = {}",
            q.name()
        )));
    }
    let tau0 = g_value(g, 1.0, inner)?;
    let tail_q = (1.0 - q.growth_at_infinity().exponent).clamp(0.05, 1.0);
    let q_tail_integral = try_integrate(
        |tau| Ok(qv(tau)? / (tau * tau)),
        Interval::from(tau0)?,
        EndpointHint::tail(tail_q),
        &QuadOptions::relative(inner),
    )?
    .value;

    let values = t_grid
        .par_iter()
        .map(|&t| Ok(model.cesaro_norm(t, x, inner)? * g_value(g, 1.0 / t, inner)?))
        .collect::<Result<Vec<_>>>()?;
    let decay = SupTrace::new(t_grid.to_vec(), values);
    let hypothesis_certified = decay.stabilized;

    let composition = compose(q, g);
    let growth = composition.growth_at_zero();
    let phi: Box<dyn SpectralFunction> = match (q.builtin(), g.builtin()) {
        (Some(qb), Some(gb)) => {
            Box::new(ClosedForm::new(composition.label(), growth, move |z| qb.closed_form(gb.closed_form(z))))
        }
        _ => Box::new(composition),
    };
    let membership = membership_diagnostic(model, phi.as_ref(), x, inner)?;
    Ok(ExtraDomainReport {
        q: q.name(),
        q_admissibility,
        tau0,
        q_tail_integral,
        consistent: !(hypothesis_certified && !membership.is_member()),
        decay,
        hypothesis_certified,
        membership,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCharReport {
    /// `t m(t) ‖C_t x‖` on the grid.
    pub cond_i_series: SupTrace,
    /// `None` when the sampled sequence neither settles nor clearly fails to.
    pub cond_i: Option<bool>,
    /// Partials of `∫_0^{T_k} s |m′(s)| ‖C_s x‖ ds`.
    pub cond_ii: IntegralDiagnostic,
    pub membership: Membership,
    pub consistent: bool,
    pub decision: Decision,
}

/// `m′(s) = -∫ τ e^{-sτ} μ(dτ)`.
fn m_prime(g: &StieltjesFunction, s: f64, tol: f64) -> Result<f64> {
    if g.mu().is_zero() {
        return Ok(0.0);
    }
    let r = g.mu().integrate_kernel_with(
        |tau| tau * (-s * tau).exp(),
        KernelShape::new(1.0, f64::INFINITY, 1.0 / s),
        &QuadOptions::relative(tol),
    )?;
    Ok(-r.value)
}

/// `x ∈ dom(g(A))` iff `t m(t) C_t x → 0` and `∫_0^t s m′(s) C_s x ds`
/// converges, where `g(z) = ∫_0^∞ e^{-zs} m(s) ds`.
pub fn mean_characterization(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    t_grid: &[f64],
    upper_limits: &[f64],
    tol: f64,
) -> Result<MeanCharReport> {
    require_pure_measure(g)?;
    check_grid(t_grid)?;
    model.check(x)?;
    let inner = tol * 1e-2;

    let values = t_grid
        .par_iter()
        .map(|&t| Ok(t * g.laplace_density(t, inner)? * model.cesaro_norm(t, x, inner)?))
        .collect::<Result<Vec<_>>>()?;
    let cond_i_series = SupTrace::new(t_grid.to_vec(), values);
    let cond_i = tends_to_zero(&cond_i_series);

    let h = |s: f64| -> Result<f64> {
        let c = model.cesaro_norm(s, x, inner)?;
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(s * m_prime(g, s, inner)?.abs() * c)
    };
    // ∫_0^{T_0} h(s) ds in the variable s = T_0 e^{-v}
    let t0 = upper_limits.first().copied().unwrap_or(1.0);
    let initial = if x.is_zero() {
        0.0
    } else {
        integrate_finite(
            |v| {
                let s = t0 * (-v).exp();
                Ok(h(s)? * s)
            },
            0.0,
            LOG_CUT,
            tol,
        )?
    };
    let cond_ii = IntegralDiagnostic::build(upper_limits, initial, |a, b| integrate_finite(h, a, b, tol))?;
    let membership = membership_diagnostic(model, spectral_of(g).as_ref(), x, inner)?;
    let side = match (cond_i, verdict_side(&cond_ii.verdict)) {
        (Some(false), _) => Some(false),
        (Some(true), s) => s,
        (None, _) => None,
    };
    Ok(MeanCharReport {
        cond_i_series,
        cond_i,
        consistent: !contradicts(side, &membership, true),
        decision: Decision::agree(side, &membership),
        cond_ii,
        membership,
    })
}

/// Lower cut, in `-log s`, of integrals over `(0, T_0)`.
const LOG_CUT: f64 = 300.0;

/// Whether the sampled sequence settles at a limit below 5% of its sup.
fn tends_to_zero(trace: &SupTrace) -> Option<bool> {
    if trace.sup <= 0.0 {
        return Some(true);
    }
    match crate::quad::classify_sequence(&trace.values, &ProbeOptions::default()) {
        LimitVerdict::Converges(l) => Some(l.abs() <= 0.05 * trace.sup),
        // a nonnegative sequence cannot run off downwards
        LimitVerdict::Diverges if trace.values.windows(2).last().is_some_and(|w| w[1] < w[0]) => None,
        LimitVerdict::Diverges => Some(false),
        LimitVerdict::Inconclusive => None,
    }
}

/// `x ∈ dom(A^{-α})` iff `lim_{t→∞} ∫_0^t s^{α-1} C_s x ds` exists.
pub fn fractional_criterion(
    model: &OperatorModel,
    alpha: f64,
    x: &ModelElement,
    upper_limits: &[f64],
    tol: f64,
) -> Result<InverseReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must lie in (0, 1)")));
    }
    model.check(x)?;
    let inner = tol * 1e-2;
    let h = |s: f64| -> Result<f64> { Ok(s.powf(alpha - 1.0) * model.cesaro_norm(s, x, inner)?) };
    let t0 = upper_limits.first().copied().unwrap_or(1.0);
    let initial = if x.is_zero() {
        0.0
    } else {
        try_integrate(h, Interval::new(0.0, t0)?, EndpointHint::singular(1.0 - alpha), &QuadOptions::relative(tol))?
            .value
    };
    let diagnostic = IntegralDiagnostic::build(upper_limits, initial, |a, b| integrate_finite(h, a, b, tol))?;
    let g_alpha = StieltjesFunction::power(alpha)?;
    let membership = membership_diagnostic(model, spectral_of(&g_alpha).as_ref(), x, inner)?;
    Ok(inverse_report("fractional", diagnostic, membership, true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QucondReport {
    pub alpha: f64,
    pub eps: String,
    /// `‖C_t x‖ g(1/t) ε(g(1/t))` for `g = z^{-α}`.
    pub qucond: SupTrace,
    /// `‖C_t x‖ g(1/t) ε̃(t)` with `ε̃(τ) = ε(τ^α)`.
    pub qucond1: SupTrace,
    /// `∫ dτ/(τ ε(τ))` and `∫ dτ/(τ ε̃(τ))` from 1.
    pub eps_integral: LimitVerdict,
    pub eps_tilde_integral: LimitVerdict,
    pub agree: bool,
}

/// For `g = z^{-α}` the sup-conditions with `ε` and with `ε̃(τ) = ε(τ^α)`
/// coincide, and the integral conditions differ by the factor `1/α`.
pub fn qucond_identity(
    model: &OperatorModel,
    alpha: f64,
    eps: SlowlyVaryingFunction,
    x: &ModelElement,
    t_grid: &[f64],
    tol: f64,
) -> Result<QucondReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must lie in (0, 1)")));
    }
    check_grid(t_grid)?;
    let inner = tol * 1e-2;
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let c = model.cesaro_norm(t, x, inner)?;
            let gt = t.powf(alpha);
            Ok((c * gt * eps.eval(gt), c * gt * eps.eval_at_log(alpha * t.ln())))
        })
        .collect::<Result<Vec<_>>>()?;
    let qucond = SupTrace::new(t_grid.to_vec(), rows.iter().map(|r| r.0).collect());
    let qucond1 = SupTrace::new(t_grid.to_vec(), rows.iter().map(|r| r.1).collect());
    let (eps_integral, _) = epstheorem_verdict(eps, 0.0, 1.0, tol)?;
    let (eps_tilde_integral, _) = epstheorem_verdict(eps, 0.0, alpha, tol)?;
    let sequences_match = rows.iter().all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()));
    let integrals_match = match (eps_integral, eps_tilde_integral) {
        (LimitVerdict::Converges(a), LimitVerdict::Converges(b)) => (b * alpha - a).abs() <= 1e-4 * a.abs(),
        (LimitVerdict::Diverges, LimitVerdict::Diverges) => true,
        _ => false,
    };
    Ok(QucondReport {
        alpha,
        eps: eps.name().into(),
        agree: sequences_match && qucond.stabilized == qucond1.stabilized && integrals_match,
        qucond,
        qucond1,
        eps_integral,
        eps_tilde_integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{default_delta_schedule, default_t_grid, default_upper_limits};
    use crate::models::L1Element;

    fn l1(u: L1Element) -> ModelElement {
        ModelElement::L1(u)
    }

    fn sqrt_g() -> StieltjesFunction {
        StieltjesFunction::power(0.5).unwrap()
    }

    #[test]
    fn g1_examples() {
        let m = OperatorModel::L1;
        let lim = default_upper_limits();
        let w = inverse_integral_g1(&m, &sqrt_g(), &l1(L1Element::window(1.0, 2.0).unwrap()), &lim, 1e-8).unwrap();
        assert!(w.diagnostic.verdict.converges(), "{w:?}");
        assert!(w.membership.is_member() && w.consistent);
        let p = inverse_integral_g1(&m, &sqrt_g(), &l1(L1Element::power(1.5).unwrap()), &lim, 1e-8).unwrap();
        assert_eq!(p.diagnostic.verdict, LimitVerdict::Diverges, "{p:?}");
        let z = inverse_integral_g1(&m, &sqrt_g(), &l1(L1Element::zero()), &lim, 1e-8).unwrap();
        assert_eq!(z.diagnostic.verdict, LimitVerdict::Converges(0.0));
    }

    #[test]
    fn first_examples() {
        let m = OperatorModel::L1;
        let lim = default_upper_limits();
        let w = inverse_integral_first(&m, &sqrt_g(), &l1(L1Element::window(1.0, 2.0).unwrap()), &lim, 1e-8).unwrap();
        assert!(w.diagnostic.verdict.converges());
        let p = inverse_integral_first(&m, &sqrt_g(), &l1(L1Element::power(1.5).unwrap()), &lim, 1e-8).unwrap();
        assert_eq!(p.diagnostic.verdict, LimitVerdict::Diverges);
        assert_eq!(p.decision, Decision::NotMember);
        for w in p.diagnostic.partials.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn logpower_examples() {
        let m = OperatorModel::L1;
        let r =
            logpower_rate_test(&m, &sqrt_g(), &l1(L1Element::window(1.0, 2.0).unwrap()), 0.5, &default_t_grid(), 1e-8)
                .unwrap();
        assert!(r.bounded && r.membership.is_member());
        let z = logpower_rate_test(&m, &sqrt_g(), &l1(L1Element::zero()), 0.5, &default_t_grid(), 1e-8).unwrap();
        assert_eq!(z.trace.sup, 0.0);
    }

    #[test]
    fn hirsch_examples() {
        let deltas = default_delta_schedule();
        let mm = OperatorModel::matrix(vec![1.0]).unwrap();
        let r = hirsch_probe(&mm, &sqrt_g(), &ModelElement::Vector(vec![1.0]), &deltas, 1e-8).unwrap();
        assert!(r.verdict.converges() && r.decision == Decision::Member);
        let m = OperatorModel::L1;
        let r = hirsch_probe(&m, &sqrt_g(), &l1(L1Element::power(2.0).unwrap()), &deltas, 1e-8).unwrap();
        assert_eq!(r.decision, Decision::Member, "{r:?}");
        let r = hirsch_probe(&m, &sqrt_g(), &l1(L1Element::power(1.5).unwrap()), &deltas, 1e-8).unwrap();
        assert_eq!(r.decision, Decision::NotMember, "{r:?}");
        let shifted = StieltjesFunction::new(1.0, 0.0, sqrt_g().mu().clone()).unwrap();
        assert!(matches!(
            hirsch_probe(&m, &shifted, &l1(L1Element::ramp()), &deltas, 1e-8),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn extra_domain_examples() {
        let m = OperatorModel::L1;
        let q = CompleteBernsteinFunction::power(0.5).unwrap();
        let w = l1(L1Element::window(1.0, 2.0).unwrap());
        let r = extra_domain_check(&m, &sqrt_g(), &q, &w, &default_t_grid(), 1e-8).unwrap();
        assert!(r.hypothesis_certified && r.membership.is_member() && r.consistent);
        assert_eq!(r.tau0, 1.0);
        // ∫_1^∞ τ^{-3/2} dτ
        assert!((r.q_tail_integral - 2.0).abs() < 1e-8);
        let id = CompleteBernsteinFunction::identity();
        assert!(matches!(
            extra_domain_check(&m, &sqrt_g(), &id, &w, &default_t_grid(), 1e-8),
            Err(Error::PreconditionFailed(_))
        ));
        let z = extra_domain_check(&m, &sqrt_g(), &q, &l1(L1Element::zero()), &default_t_grid(), 1e-8).unwrap();
        assert!(z.membership.is_member());
    }

    #[test]
    fn mean_characterization_examples() {
        let m = OperatorModel::L1;
        let (grid, lim) = (default_t_grid(), default_upper_limits());
        let w =
            mean_characterization(&m, &sqrt_g(), &l1(L1Element::window(1.0, 2.0).unwrap()), &grid, &lim, 1e-8).unwrap();
        assert!(w.cond_i == Some(true) && w.cond_ii.verdict.converges(), "{w:?}");
        assert_eq!(w.decision, Decision::Member);
        let p = mean_characterization(&m, &sqrt_g(), &l1(L1Element::power(1.5).unwrap()), &grid, &lim, 1e-8).unwrap();
        assert_eq!(p.cond_ii.verdict, LimitVerdict::Diverges, "{p:?}");
        assert_eq!(p.decision, Decision::NotMember);
        let z = mean_characterization(&m, &sqrt_g(), &l1(L1Element::zero()), &grid, &lim, 1e-8).unwrap();
        assert_eq!(z.cond_i, Some(true));
        assert_eq!(z.cond_ii.verdict, LimitVerdict::Converges(0.0));
    }

    #[test]
    fn m_prime_matches_power_closed_form() {
        // m(s) = s^{γ-1}/Γ(γ) for g = z^{-γ}; at γ = 1/2, m′(s) = -s^{-3/2}/(2√π)
        let g = sqrt_g();
        for s in [0.01f64, 1.0, 30.0] {
            let oracle = -s.powf(-1.5) / (2.0 * std::f64::consts::PI.sqrt());
            let v = m_prime(&g, s, 1e-12).unwrap();
            assert!((v - oracle).abs() <= 1e-9 * oracle.abs(), "{s}: {v} vs {oracle}");
        }
    }

    #[test]
    fn fractional_examples() {
        let m = OperatorModel::L1;
        let lim = default_upper_limits();
        let w = fractional_criterion(&m, 0.5, &l1(L1Element::window(1.0, 2.0).unwrap()), &lim, 1e-8).unwrap();
        assert_eq!(w.decision, Decision::Member, "{w:?}");
        let p = fractional_criterion(&m, 0.5, &l1(L1Element::power(1.5).unwrap()), &lim, 1e-8).unwrap();
        assert_eq!(p.decision, Decision::NotMember, "{p:?}");
        let z = fractional_criterion(&m, 0.5, &l1(L1Element::zero()), &lim, 1e-8).unwrap();
        assert_eq!(z.diagnostic.verdict, LimitVerdict::Converges(0.0));
    }

    #[test]
    fn qucond_identity_holds() {
        let m = OperatorModel::L1;
        for eps in SlowlyVaryingFunction::ALL {
            let r =
                qucond_identity(&m, 0.5, eps, &l1(L1Element::power(2.0).unwrap()), &default_t_grid(), 1e-8).unwrap();
            assert!(r.agree, "{r:?}");
        }
    }
}
