use super::{
    check_grid, g_derivative, g_value, integrate_finite, membership_diagnostic, spectral_of, Decision,
    IntegralDiagnostic, SupTrace,
};
use crate::error::{Error, Result};
use crate::measure::KernelShape;
use crate::models::{L1Element, Membership, ModelElement, OperatorModel, Tail};
use crate::quad::{classify_increments, LimitVerdict, ProbeOptions, QuadOptions};
use crate::refs::parse_call;
use crate::stieltjes::{SlowlyVaryingFunction, StieltjesFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEstimate {
    pub holds: bool,
    /// Sup of the ratio over the grid.
    pub c_est: f64,
    pub trace: SupTrace,
}

impl ConditionEstimate {
    fn new(grid: Vec<f64>, values: Vec<f64>) -> Self {
        let trace = SupTrace::new(grid, values);
        ConditionEstimate { holds: trace.stabilized, c_est: trace.sup, trace }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub g: String,
    /// `g(0+) = ∞`; the averaging dichotomy is stated for such `g`.
    pub g_unbounded_at_zero: bool,
    /// `(1/t) ∫_0^t g ≤ c g(t)` on `(0, 1)`.
    pub mainc6: ConditionEstimate,
    /// `(1/t) ∫_0^t g + ∫_t^1 g(τ)/τ dτ ≤ c g(t)` on `(0, 1)`.
    pub seccond: ConditionEstimate,
}

/// Estimates the constants of the two averaging conditions on a grid in
/// `(0, 1)`, ordered towards 0.
///
/// Both integrals of `g` are computed against `μ` after Fubini:
/// `∫_0^t g = a t + ∫ log(1 + t/s) μ(ds)` and
/// `∫_t^1 g(τ)/τ dτ = a log(1/t) + b(1/t - 1) + ∫ (log(1 + s/t) - log(1 + s))/s μ(ds)`.
pub fn averaging_condition_check(g: &StieltjesFunction, t_grid: &[f64], tol: f64) -> Result<AveragingReport> {
    if t_grid.len() < 5 || t_grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("grid must decrease inside (0, 1) with at least 5 points".into()));
    }
    let inner = tol * 1e-2;
    // integrability of g near 0, on dyadic pieces
    let pieces = (0..40)
        .into_par_iter()
        .map(|k| {
            let hi = 2f64.powi(-k);
            integrate_finite(|tau| g_value(g, tau, inner), hi / 2.0, hi, inner)
        })
        .collect::<Result<Vec<_>>>()?;
    if !classify_increments(&pieces, pieces.iter().sum(), &ProbeOptions::default()).converges() {
        return Err(Error::Inconclusive(format!("{} is not certified integrable on (0, 1)", g.name())));
    }
    let g_unbounded_at_zero = match g.limits(tol) {
        Ok(l) => l.g_at_zero.is_infinite(),
        Err(_) => g.growth_at_zero().exponent > 0.0 || g.growth_at_zero().logarithmic,
    };

    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let opts = QuadOptions::relative(inner);
            let head = g.a() * t
                + if g.mu().is_zero() {
                    0.0
                } else {
                    g.mu().integrate_kernel_with(|s| (t / s).ln_1p(), KernelShape::new(-0.05, 1.0, t), &opts)?.value
                };
            let tail_kernel = |s: f64| {
                let d =
                    if s > 1.0 { -t.ln() + (t / s).ln_1p() - (1.0 / s).ln_1p() } else { (s / t).ln_1p() - s.ln_1p() };
                d / s
            };
            let tail = g.a() * (-t.ln())
                + g.b() * (1.0 / t - 1.0)
                + if g.mu().is_zero() {
                    0.0
                } else {
                    g.mu().integrate_kernel_with(tail_kernel, KernelShape::new(0.0, 1.0, t), &opts)?.value
                };
            let gt = g_value(g, t, inner)?;
            Ok((head / (t * gt), (head / t + tail) / gt))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragingReport {
        g: g.name(),
        g_unbounded_at_zero,
        mainc6: ConditionEstimate::new(t_grid.to_vec(), rows.iter().map(|r| r.0).collect()),
        seccond: ConditionEstimate::new(t_grid.to_vec(), rows.iter().map(|r| r.1).collect()),
    })
}

/// Candidates tried for the exponent in "`τ^α g(τ)` is increasing on `(0, 1)`".
const ALPHA_LADDER: [f64; 19] =
    [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

fn lemmac1_holds(g: &StieltjesFunction, alpha: f64, tol: f64) -> Result<bool> {
    let grid = crate::grid::geometric(1e-12, 1.0, 241);
    let values = grid.iter().map(|&tau| Ok(tau.powf(alpha) * g_value(g, tau, tol)?)).collect::<Result<Vec<_>>>()?;
    Ok(values.windows(2).all(|w| w[1] > w[0]))
}

/// The smallest `α` on a ladder in `(0, 1)` for which `τ^α g(τ)` increases
/// on a grid in `(0, 1]`.
pub fn find_lemmac1_alpha(g: &StieltjesFunction, tol: f64) -> Result<Option<f64>> {
    for alpha in ALPHA_LADDER {
        if lemmac1_holds(g, alpha, tol)? {
            return Ok(Some(alpha));
        }
    }
    Ok(None)
}

/// Classifies `∫_{v0}^∞ dv / ε(e^{scale·v})`, which is
/// `∫_{e^{v0}}^∞ dτ / (τ ε(τ))` for `scale = 1`, on pieces ending at
/// `v0 + 2^k`. Returns the verdict and the pieces.
pub fn epstheorem_verdict(
    eps: SlowlyVaryingFunction,
    v0: f64,
    scale: f64,
    tol: f64,
) -> Result<(LimitVerdict, Vec<f64>)> {
    let knots: Vec<f64> = std::iter::once(v0).chain((0..=40).map(|k| v0 + 2f64.powi(k))).collect();
    let pieces = knots
        .par_windows(2)
        .map(|w| integrate_finite(|v| Ok(1.0 / eps.eval_at_log(scale * v)), w[0], w[1], tol))
        .collect::<Result<Vec<_>>>()?;
    let total = pieces.iter().sum();
    Ok((classify_increments(&pieces, total, &ProbeOptions::default()), pieces))
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleBundle {
    pub g: String,
    pub eps: String,
    pub alpha: f64,
    #[serde(skip)]
    pub y: ModelElement,
    pub y_label: String,
    pub y_tail: Tail,
    /// Partials of `∫_1^{T_k} y`.
    pub y_integral: IntegralDiagnostic,
    pub y_in_l1: bool,
    /// `N_t(y) g(1/t) ε(g(1/t))` on the grid.
    pub estim1: SupTrace,
    pub estim1_sup: f64,
    pub estim1_bounded: bool,
    /// `‖C_t y‖ g(1/t) ε(g(1/t))` on the grid.
    pub cesaro_rate: SupTrace,
    /// `∫_{g(1)}^∞ dτ/(τ ε(τ))`.
    pub epstheorem: LimitVerdict,
    pub membership: Membership,
    pub decision: Decision,
}

/// Builds `y(s) = -g′(1/s) / (s² g(1/s)² ε(g(1/s)))` on the `L1` model and
/// certifies its properties.
///
/// `alpha` is the exponent in "`τ^α g(τ)` is increasing on `(0, 1)`"; when
/// absent the smallest working value on a ladder is used.
pub fn counterexample_build(
    g: &StieltjesFunction,
    eps: SlowlyVaryingFunction,
    alpha: Option<f64>,
    t_grid: &[f64],
    upper_limits: &[f64],
    tol: f64,
) -> Result<CounterexampleBundle> {
    check_grid(t_grid)?;
    let inner = tol * 1e-2;
    if g.a() != 0.0 || g.b() != 0.0 {
        return Err(Error::PreconditionFailed(format!("{} must have a = b = 0", g.name())));
    }
    let growth = g.growth_at_zero();
    if growth.exponent <= 0.0 && !growth.logarithmic {
        return Err(Error::PreconditionFailed(format!("{} is bounded at 0", g.name())));
    }
    let alpha = match alpha {
        Some(a) if a > 0.0 && a < 1.0 => {
            if !lemmac1_holds(g, a, inner)? {
                return Err(Error::PreconditionFailed(format!("τ^{a} g(τ) is not increasing on (0, 1)")));
            }
            a
        }
        Some(a) => return Err(Error::InvalidArgument(format!("α = {a} must lie in (0, 1)"))),
        None => find_lemmac1_alpha(g, inner)?
            .ok_or_else(|| Error::PreconditionFailed(format!("no α in (0, 1) makes τ^α {}(τ) increasing", g.name())))?,
    };
    let tail = if growth.exponent > 0.0 { Tail::Power(1.0 + growth.exponent) } else { Tail::Log(2.0) };
    let y_label = format!("counterexample:{}:{}", g.name(), eps.name());
    let gy = g.clone();
    let profile = move |s: f64| {
        let z = 1.0 / s;
        let gz = g_value(&gy, z, inner).unwrap_or(f64::NAN);
        let dg = g_derivative(&gy, z, inner).unwrap_or(f64::NAN);
        // grouped so that nothing overflows for s up to e^700
        (-dg / gz / s) / (s * gz * eps.eval(gz))
    };
    let y_el = L1Element::new(y_label.clone(), 1.0, f64::INFINITY, tail, profile)?;
    let y = ModelElement::L1(y_el.clone());
    let model = OperatorModel::L1;

    let y_integral = IntegralDiagnostic::build(upper_limits, 0.0, |a, b| {
        model.weighted_norm_on(|_| Ok(1.0), Default::default(), &y, a, b, inner)
    })?;
    let y_in_l1 = y_integral.verdict.converges() && y_el.is_nonnegative();

    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let gt = g_value(g, 1.0 / t, inner)?;
            let scale = gt * eps.eval(gt);
            let nt = model.nt_norm(t.max(1.0), &y, inner)?;
            Ok((nt * scale, model.cesaro_norm(t, &y, inner)? * scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let estim1 = SupTrace::new(t_grid.to_vec(), rows.iter().map(|r| r.0).collect());
    let cesaro_rate = SupTrace::new(t_grid.to_vec(), rows.iter().map(|r| r.1).collect());

    let (epstheorem, _) = epstheorem_verdict(eps, g_value(g, 1.0, inner)?.ln(), 1.0, inner)?;
    let membership = membership_diagnostic(&model, spectral_of(g).as_ref(), &y, inner)?;
    let side = match epstheorem {
        LimitVerdict::Converges(_) => Some(true),
        LimitVerdict::Diverges => Some(false),
        LimitVerdict::Inconclusive => None,
    };
    Ok(CounterexampleBundle {
        g: g.name(),
        eps: eps.name().into(),
        alpha,
        y,
        y_label,
        y_tail: tail,
        y_integral,
        y_in_l1,
        estim1_sup: estim1.sup,
        estim1_bounded: estim1.stabilized,
        estim1,
        cesaro_rate,
        epstheorem,
        decision: Decision::agree(side, &membership),
        membership,
    })
}

/// A positive increasing function on `[1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthFunction {
    /// `log(1 + t)`.
    Log1p,
    /// `log²(1 + t)`.
    Log1pSquared,
    /// `1`.
    One,
    /// `t^p`, `p > 0`.
    Power(f64),
}

impl GrowthFunction {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        match (name.as_str(), p.as_slice()) {
            ("log1p" | "log", []) => Ok(GrowthFunction::Log1p),
            ("log1p2" | "log2", []) => Ok(GrowthFunction::Log1pSquared),
            ("one" | "constant", []) => Ok(GrowthFunction::One),
            ("identity" | "t", []) => Ok(GrowthFunction::Power(1.0)),
            ("power", [p]) if *p > 0.0 => Ok(GrowthFunction::Power(*p)),
            _ => Err(Error::UnknownBuiltin(text.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            GrowthFunction::Log1p => "log1p".into(),
            GrowthFunction::Log1pSquared => "log1p2".into(),
            GrowthFunction::One => "one".into(),
            GrowthFunction::Power(p) if *p == 1.0 => "identity".into(),
            GrowthFunction::Power(p) => format!("power:{p}"),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GrowthFunction::Log1p => t.ln_1p(),
            GrowthFunction::Log1pSquared => t.ln_1p().powi(2),
            GrowthFunction::One => 1.0,
            GrowthFunction::Power(p) => t.powf(*p),
        }
    }

    /// `∫_1^∞ dt/(t φ(t)) = ∞`.
    pub fn has_divergent_reciprocal_integral(&self) -> bool {
        matches!(self, GrowthFunction::Log1p | GrowthFunction::One)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub phi: String,
    /// `φ` satisfies `∫_1^∞ dt/(t φ(t)) = ∞`; otherwise the check is not applicable.
    pub applicable: bool,
    /// Partials of `∫_1^{T_k} ‖C_t x‖/φ(t) dt`.
    pub diagnostic: IntegralDiagnostic,
    /// Last partial over the partial at `T = 10`.
    pub growth_ratio: f64,
    /// `t ‖C_t x‖` on the grid.
    pub floor_grid: Vec<f64>,
    pub floor_values: Vec<f64>,
    pub floor_nondecreasing: bool,
    pub floor_positive: bool,
    pub consistent: bool,
}

impl AppendixReport {
    pub fn status(&self) -> &'static str {
        if !self.applicable {
            "NotApplicable"
        } else if self.diagnostic.verdict.diverges() {
            "Diverges"
        } else if self.diagnostic.verdict.converges() {
            "Converges"
        } else {
            "Inconclusive"
        }
    }
}

/// A nonzero `x` cannot satisfy `∫_1^∞ ‖C_t x‖/φ(t) dt < ∞` when
/// `∫_1^∞ dt/(tφ(t)) = ∞`; also samples the floor `t ↦ t‖C_t x‖`.
pub fn appendix_floor_check(
    model: &OperatorModel,
    x: &ModelElement,
    phi: GrowthFunction,
    upper_limits: &[f64],
    t_grid: &[f64],
    tol: f64,
) -> Result<AppendixReport> {
    check_grid(t_grid)?;
    let inner = tol * 1e-2;
    let norm = model.norm(x, inner)?;
    if !(norm > tol) {
        return Err(Error::PreconditionFailed(format!("‖x‖ = {norm} must be nonzero")));
    }
    let diagnostic = IntegralDiagnostic::build(upper_limits, 0.0, |a, b| {
        integrate_finite(|t| Ok(model.cesaro_norm(t, x, inner)? / phi.eval(t)), a, b, tol)
    })?;
    let at_ten =
        diagnostic.upper_limits.iter().position(|t| *t >= 10.0).map(|i| diagnostic.partials[i]).unwrap_or(f64::NAN);
    let growth_ratio = diagnostic.partials.last().unwrap() / at_ten;
    let floor_values =
        t_grid.par_iter().map(|&t| Ok(t * model.cesaro_norm(t, x, inner)?)).collect::<Result<Vec<_>>>()?;
    let floor_nondecreasing = floor_values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    let floor_positive = floor_values.first().is_some_and(|v| *v > 0.0);
    let applicable = phi.has_divergent_reciprocal_integral();
    Ok(AppendixReport {
        phi: phi.name(),
        applicable,
        consistent: !applicable || diagnostic.verdict.diverges(),
        diagnostic,
        growth_ratio,
        floor_grid: t_grid.to_vec(),
        floor_values,
        floor_nondecreasing,
        floor_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{default_delta_schedule, default_t_grid, default_upper_limits};
    use crate::models::L1Element;

    #[test]
    fn averaging_power() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let r = averaging_condition_check(&g, &default_delta_schedule(), 1e-8).unwrap();
        assert!(r.mainc6.holds && r.seccond.holds);
        assert!((r.mainc6.c_est - 2.0).abs() < 1e-6, "{}", r.mainc6.c_est);
        // 4 - 2√t at the smallest grid point
        assert!((r.seccond.c_est - (4.0 - 2.0 * 2f64.powf(-10.0))).abs() < 1e-6, "{}", r.seccond.c_est);
    }

    #[test]
    fn averaging_log_ratio() {
        let r = averaging_condition_check(&StieltjesFunction::log_ratio(), &default_delta_schedule(), 1e-8).unwrap();
        assert!(r.mainc6.holds && r.mainc6.c_est <= 2.0, "{:?}", r.mainc6);
        assert!(!r.seccond.holds);
        assert!(r.g_unbounded_at_zero);
    }

    #[test]
    fn averaging_rejects_non_integrable() {
        let r = averaging_condition_check(&StieltjesFunction::reciprocal_log(), &default_delta_schedule(), 1e-8);
        assert!(matches!(r, Err(Error::Inconclusive(_))), "{r:?}");
    }

    #[test]
    fn averaging_bounded_atom() {
        let g = StieltjesFunction::parse("atom:1:1").unwrap();
        let r = averaging_condition_check(&g, &default_delta_schedule(), 1e-8).unwrap();
        assert!(!r.g_unbounded_at_zero);
        assert!(r.mainc6.holds);
        // (1/t) log(1 + t) (1 + t) at t = 1/2
        assert!((r.mainc6.c_est - 3.0 * 1.5f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn lemmac1_alpha_search() {
        assert_eq!(find_lemmac1_alpha(&StieltjesFunction::power(0.5).unwrap(), 1e-10).unwrap(), Some(0.55));
        // α log 2 · 2 ≥ 1 is needed at τ = 1
        assert_eq!(find_lemmac1_alpha(&StieltjesFunction::log1p_recip(), 1e-10).unwrap(), Some(0.75));
    }

    #[test]
    fn epstheorem_dichotomy() {
        use SlowlyVaryingFunction::*;
        assert_eq!(epstheorem_verdict(Log, 0.0, 1.0, 1e-10).unwrap().0, LimitVerdict::Diverges);
        assert!(epstheorem_verdict(LogSquared, 0.0, 1.0, 1e-10).unwrap().0.converges());
        assert_eq!(epstheorem_verdict(LogLogLog, 0.0, 1.0, 1e-10).unwrap().0, LimitVerdict::Diverges);
    }

    #[test]
    fn counterexample_profile_matches_closed_form() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let b = counterexample_build(
            &g,
            SlowlyVaryingFunction::Log,
            None,
            &default_t_grid(),
            &default_upper_limits(),
            1e-8,
        )
        .unwrap();
        let y = b.y.as_l1().unwrap();
        for s in [1.5f64, 10.0, 1e4] {
            let oracle = 1.0 / (2.0 * s.powf(1.5) * (2.0 + s.sqrt()).ln());
            assert!((y.eval(s) - oracle).abs() <= 1e-12 * oracle);
        }
        assert!(b.y_in_l1, "{:?}", b.y_integral);
        assert!(b.estim1_bounded, "{:?}", b.estim1);
        assert_eq!(b.membership, Membership::NotMember);
        assert_eq!(b.decision, Decision::NotMember);
    }

    #[test]
    fn counterexample_requires_lemmac1() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let r = counterexample_build(
            &g,
            SlowlyVaryingFunction::Log,
            Some(0.3),
            &default_t_grid(),
            &default_upper_limits(),
            1e-8,
        );
        assert!(matches!(r, Err(Error::PreconditionFailed(_))));
        let atom = StieltjesFunction::parse("atom:1:1").unwrap();
        let r = counterexample_build(
            &atom,
            SlowlyVaryingFunction::Log,
            None,
            &default_t_grid(),
            &default_upper_limits(),
            1e-8,
        );
        assert!(matches!(r, Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn appendix_examples() {
        let m = OperatorModel::L1;
        let u = ModelElement::L1(L1Element::window(1.0, 2.0).unwrap());
        let (lim, grid) = (default_upper_limits(), default_t_grid());
        let r = appendix_floor_check(&m, &u, GrowthFunction::Log1p, &lim, &grid, 1e-8).unwrap();
        assert!(r.applicable && r.floor_nondecreasing && r.floor_positive);
        let id = appendix_floor_check(&m, &u, GrowthFunction::parse("identity").unwrap(), &lim, &grid, 1e-8).unwrap();
        assert_eq!(id.status(), "NotApplicable");
        assert!(id.consistent);
        let z =
            appendix_floor_check(&m, &ModelElement::L1(L1Element::zero()), GrowthFunction::Log1p, &lim, &grid, 1e-8);
        assert!(matches!(z, Err(Error::PreconditionFailed(_))));
    }
}
