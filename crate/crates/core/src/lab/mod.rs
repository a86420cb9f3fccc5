//! Numerical checks of the direct and inverse mean ergodic theorems with
//! rates on the operator models.
//!
//! "O(·)" hypotheses are certified only in the sampled sense: a running sup
//! over a geometric grid that stops moving. Integral conditions are read off
//! partial integrals on a geometric schedule of upper limits by the limit
//! probe.

mod direct;
mod inverse;
mod optimality;

pub use direct::{direct_rate_check, RateReport, RateRow, RateVerdict};
pub use inverse::{
    extra_domain_check, fractional_criterion, hirsch_probe, inverse_integral_first, inverse_integral_g1,
    logpower_rate_test, mean_characterization, qucond_identity, ExtraDomainReport, HirschReport, InverseReport,
    LogPowerReport, MeanCharReport, QucondReport,
};
pub use optimality::{
    appendix_floor_check, averaging_condition_check, counterexample_build, epstheorem_verdict, find_lemmac1_alpha,
    AppendixReport, AveragingReport, ConditionEstimate, CounterexampleBundle, GrowthFunction,
};

use crate::error::{Error, Result};
use crate::grid::powers;
use crate::models::{
    default_membership_schedule, ClosedForm, Membership, ModelElement, OperatorModel, SpectralFunction,
};
use crate::quad::{
    classify_increments, try_integrate, EndpointHint, Interval, LimitVerdict, ProbeOptions, QuadOptions,
};
use crate::stieltjes::StieltjesFunction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default quadrature tolerance of the lab operations.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Points in the stabilization window of a running sup.
pub const STABLE_WINDOW: usize = 5;

/// Largest relative spread of the running sup over the window.
pub const STABLE_SPREAD: f64 = 0.05;

/// `t = 2^k`, `k = 0..=20`.
pub fn default_t_grid() -> Vec<f64> {
    powers(2.0, 0..=20)
}

/// `δ = 2^{-k}`, `k = 1..=20`.
pub fn default_delta_schedule() -> Vec<f64> {
    powers(2.0, (1..=20).map(|k| -k))
}

/// `T_k = 10^k`, `k = 0..=6`.
pub fn default_upper_limits() -> Vec<f64> {
    powers(10.0, 0..=6)
}

/// Outcome of an "if and only if" check after comparing both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Member,
    NotMember,
    Inconclusive,
}

impl Decision {
    /// Combines a criterion (`Some(true)` for "holds") with the membership
    /// diagnostic; disagreement is reported as `Inconclusive`.
    pub fn agree(criterion: Option<bool>, membership: &Membership) -> Decision {
        match (criterion, membership) {
            (Some(true), Membership::Member { .. }) => Decision::Member,
            (Some(false), Membership::NotMember) => Decision::NotMember,
            _ => Decision::Inconclusive,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Decision::Member => "Member",
            Decision::NotMember => "NotMember",
            Decision::Inconclusive => "Inconclusive",
        }
    }
}

/// A sampled quantity together with its running sup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupTrace {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub sup: f64,
    /// The running sup varies by less than [`STABLE_SPREAD`] over the last
    /// [`STABLE_WINDOW`] grid points.
    pub stabilized: bool,
}

impl SupTrace {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        let running_sup: Vec<f64> = values
            .iter()
            .scan(f64::NEG_INFINITY, |m, v| {
                *m = m.max(*v);
                Some(*m)
            })
            .collect();
        let sup = running_sup.last().copied().unwrap_or(0.0);
        let stabilized = running_sup.len() >= STABLE_WINDOW && sup.is_finite() && {
            let w = &running_sup[running_sup.len() - STABLE_WINDOW..];
            let lo = w[0];
            sup <= 0.0 || (sup - lo) <= STABLE_SPREAD * sup
        };
        SupTrace { grid, values, running_sup, sup, stabilized }
    }
}

/// Partial integrals of a nonnegative integrand along a schedule of upper
/// limits, classified by the limit probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralDiagnostic {
    pub upper_limits: Vec<f64>,
    pub partials: Vec<f64>,
    pub verdict: LimitVerdict,
}

impl IntegralDiagnostic {
    /// `partials[0] = initial`, then `partials[k] = partials[k-1] + piece(T_{k-1}, T_k)`.
    pub(crate) fn build<P>(upper_limits: &[f64], initial: f64, piece: P) -> Result<Self>
    where
        P: Fn(f64, f64) -> Result<f64> + Sync,
    {
        check_schedule(upper_limits)?;
        let pieces = upper_limits.par_windows(2).map(|w| piece(w[0], w[1])).collect::<Result<Vec<_>>>()?;
        let mut partials = Vec::with_capacity(upper_limits.len());
        partials.push(initial);
        for p in &pieces {
            partials.push(partials.last().unwrap() + p);
        }
        let verdict = classify_increments(&pieces, *partials.last().unwrap(), &ProbeOptions::default());
        Ok(IntegralDiagnostic { upper_limits: upper_limits.to_vec(), partials, verdict })
    }

    pub fn zero(upper_limits: &[f64]) -> Self {
        IntegralDiagnostic {
            upper_limits: upper_limits.to_vec(),
            partials: vec![0.0; upper_limits.len()],
            verdict: LimitVerdict::Converges(0.0),
        }
    }

    pub fn increments(&self) -> Vec<f64> {
        self.partials.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn check_schedule(s: &[f64]) -> Result<()> {
    if s.len() < 5 || s.iter().any(|t| !(*t > 0.0 && t.is_finite())) || s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "upper limits must be positive, increasing and have at least 5 points".into(),
        ));
    }
    Ok(())
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be positive and increasing".into()));
    }
    Ok(())
}

/// `∫_a^b h(t) dt` over a finite interval.
pub(crate) fn integrate_finite<H>(h: H, a: f64, b: f64, tol: f64) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    Ok(try_integrate(h, Interval::new(a, b)?, EndpointHint::none(), &QuadOptions::relative(tol))?.value)
}

/// `g` as a spectral function, through its closed form when it has one.
pub fn spectral_of(g: &StieltjesFunction) -> Box<dyn SpectralFunction> {
    match ClosedForm::of_stieltjes(g) {
        Some(c) => Box::new(c),
        None => Box::new(g.clone()),
    }
}

/// `g(z)`, through the closed form when available.
pub(crate) fn g_value(g: &StieltjesFunction, z: f64, tol: f64) -> Result<f64> {
    match g.closed_form(z) {
        Some(v) => Ok(v),
        None => g.eval(z, tol),
    }
}

/// `g′(z)`, through the closed form when available.
pub(crate) fn g_derivative(g: &StieltjesFunction, z: f64, tol: f64) -> Result<f64> {
    match g.closed_derivative(z) {
        Some(v) => Ok(v),
        None => g.derivative(z, tol),
    }
}

/// Membership in `dom(φ(A))` on the default schedule `10^k`, `k ≤ 6`,
/// retried on `10^k`, `k ≤ 12`, when the first pass is inconclusive.
///
/// For unbounded support the log-scale pass
/// ([`OperatorModel::log_scale_membership`]) reaches much further out and
/// takes precedence whenever it is decisive.
pub fn membership_diagnostic(
    model: &OperatorModel,
    phi: &dyn SpectralFunction,
    x: &ModelElement,
    tol: f64,
) -> Result<Membership> {
    let unbounded = x.as_l1().is_some_and(|u| !u.is_zero() && u.support().1.is_infinite());
    if unbounded {
        let deep = model.log_scale_membership(phi, x, tol)?;
        if deep != Membership::Inconclusive {
            return Ok(deep);
        }
    }
    let first = model.membership(phi, x, &default_membership_schedule(), tol)?;
    if first != Membership::Inconclusive {
        return Ok(first);
    }
    model.membership(phi, x, &powers(10.0, 0..=12), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_trace_stabilization() {
        let grid = default_t_grid();
        let decaying: Vec<f64> = grid.iter().map(|t| 1.0 / t).collect();
        assert!(SupTrace::new(grid.clone(), decaying).stabilized);
        let growing: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
        let tr = SupTrace::new(grid.clone(), growing);
        assert!(!tr.stabilized);
        let zeros = vec![0.0; grid.len()];
        let z = SupTrace::new(grid, zeros);
        assert!(z.stabilized && z.sup == 0.0);
    }

    #[test]
    fn default_schedules() {
        assert_eq!(default_t_grid().len(), 21);
        assert_eq!(default_delta_schedule()[0], 0.5);
        assert_eq!(default_delta_schedule().len(), 20);
        assert_eq!(*default_upper_limits().last().unwrap(), 1e6);
    }

    #[test]
    fn decisions_need_both_sides() {
        let m = Membership::Member { graph_norm: 1.0 };
        assert_eq!(Decision::agree(Some(true), &m), Decision::Member);
        assert_eq!(Decision::agree(Some(false), &m), Decision::Inconclusive);
        assert_eq!(Decision::agree(Some(false), &Membership::NotMember), Decision::NotMember);
        assert_eq!(Decision::agree(None, &Membership::NotMember), Decision::Inconclusive);
    }
}
