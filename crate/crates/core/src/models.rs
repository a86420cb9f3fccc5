//! Concrete realizations of a sectorial pair `(X, A)`.
//!
//! * The multiplication model on `L1(1, ∞)`: `(Au)(s) = u(s)/s`, so that
//!   `T(t)u = e^{-t/s} u`, `C_t u = (w_t(s)/t) u` with `w_t(s) = s(1 - e^{-t/s})`,
//!   and `φ(A)u = φ(1/s) u`.
//! * A diagonal matrix model with eigenvalues `λ_i > 0` and the `ℓ1` norm.
//!
//! Both semigroups are contractions (`M = 1`). Norm computations on either
//! model reduce to weighted integrals or sums over the spectral variable,
//! see [`OperatorModel::weighted_norm`].

use crate::error::{Error, Result};
use crate::measure::{KernelShape, ScalarFn};
use crate::quad::{
    classify_increments, try_integrate, EndpointHint, Interval, LimitVerdict, ProbeOptions, QuadOptions,
};
use crate::refs::parse_call;
use crate::stieltjes::{CompleteBernsteinFunction, Composition, Growth, LevyTriple, StieltjesFunction};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Tolerance used when a spectral function is evaluated inside another
/// integral.
pub const SPECTRAL_TOL: f64 = 1e-11;

/// Largest `log s` at which an element with a logarithmic tail is evaluated.
const LOG_CUT: f64 = 700.0;

/// Semigroup bound of both models.
pub const SEMIGROUP_BOUND: f64 = 1.0;

/// A scalar function applied through the functional calculus.
pub trait SpectralFunction: Send + Sync {
    fn value(&self, lambda: f64) -> Result<f64>;
    /// `φ(λ) ≲ λ^{-exponent}` as `λ → 0+`.
    fn growth_at_zero(&self) -> Growth;
    fn label(&self) -> String;
}

impl SpectralFunction for StieltjesFunction {
    fn value(&self, lambda: f64) -> Result<f64> {
        self.eval(lambda, SPECTRAL_TOL)
    }

    fn growth_at_zero(&self) -> Growth {
        StieltjesFunction::growth_at_zero(self)
    }

    fn label(&self) -> String {
        self.name()
    }
}

impl SpectralFunction for CompleteBernsteinFunction {
    fn value(&self, lambda: f64) -> Result<f64> {
        self.eval(lambda, SPECTRAL_TOL)
    }

    fn growth_at_zero(&self) -> Growth {
        Growth { exponent: 0.0, logarithmic: false }
    }

    fn label(&self) -> String {
        self.name()
    }
}

impl SpectralFunction for Composition {
    fn value(&self, lambda: f64) -> Result<f64> {
        self.eval(lambda, SPECTRAL_TOL)
    }

    fn growth_at_zero(&self) -> Growth {
        let outer = self.f.growth_at_infinity();
        let inner = self.g.growth_at_zero();
        Growth { exponent: outer.exponent * inner.exponent, logarithmic: outer.logarithmic || inner.logarithmic }
    }

    fn label(&self) -> String {
        format!("{}∘{}", self.f.name(), self.g.name())
    }
}

/// A spectral function given by an explicit formula.
#[derive(Clone)]
pub struct ClosedForm {
    f: ScalarFn,
    growth: Growth,
    label: String,
}

impl ClosedForm {
    pub fn new(label: impl Into<String>, growth: Growth, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClosedForm { f: Arc::new(f), growth, label: label.into() }
    }

    pub fn one() -> Self {
        ClosedForm::new("1", Growth { exponent: 0.0, logarithmic: false }, |_| 1.0)
    }

    /// The builtin closed form of `g`, if it has one.
    pub fn of_stieltjes(g: &StieltjesFunction) -> Option<Self> {
        let b = g.builtin()?;
        Some(ClosedForm::new(g.name(), g.growth_at_zero(), move |z| b.closed_form(z)))
    }

    pub fn of_cbf(f: &CompleteBernsteinFunction) -> Option<Self> {
        let b = f.builtin()?;
        Some(ClosedForm::new(f.name(), Growth { exponent: 0.0, logarithmic: false }, move |z| b.closed_form(z)))
    }
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm").field("label", &self.label).finish()
    }
}

impl SpectralFunction for ClosedForm {
    fn value(&self, lambda: f64) -> Result<f64> {
        Ok((self.f)(lambda))
    }

    fn growth_at_zero(&self) -> Growth {
        self.growth
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Decay of an `L1(1, ∞)` element at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// Vanishes beyond a finite point.
    Compact,
    /// `|u(s)| ≲ s^{-r}` with `r > 1`.
    Power(f64),
    /// `|u(s)| ≲ 1/(s log^p s)` with `p > 1`.
    Log(f64),
}

/// A function on `(1, ∞)` given by a callable profile, supported in
/// `(lower, upper)` and smooth there, with a declared tail envelope.
#[derive(Clone)]
pub struct L1Element {
    profile: ScalarFn,
    lower: f64,
    upper: f64,
    tail: Tail,
    label: String,
}

impl fmt::Debug for L1Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("L1Element")
            .field("label", &self.label)
            .field("support", &(self.lower, self.upper))
            .field("tail", &self.tail)
            .finish()
    }
}

impl L1Element {
    /// Builds an element and checks that its `L1` norm is finite.
    pub fn new(
        label: impl Into<String>,
        lower: f64,
        upper: f64,
        tail: Tail,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lower >= 1.0 && lower.is_finite() && upper > lower) {
            return Err(Error::InvalidArgument(format!("support ({lower}, {upper}) must lie in (1, ∞)")));
        }
        match tail {
            Tail::Compact if upper.is_infinite() => {
                return Err(Error::InvalidArgument("unbounded support needs a power tail".into()))
            }
            Tail::Power(r) | Tail::Log(r) if !(r > 1.0) => {
                return Err(Error::InvalidArgument(format!("tail exponent {r} must exceed 1 for an L1 element")))
            }
            _ => {}
        }
        let el = L1Element { profile: Arc::new(profile), lower, upper, tail, label: label.into() };
        el.weighted(|_| Ok(1.0), Growth::default(), &[], 1e-8)?;
        Ok(el)
    }

    pub fn zero() -> Self {
        L1Element { profile: Arc::new(|_| 0.0), lower: 1.0, upper: 2.0, tail: Tail::Compact, label: "zero".into() }
    }

    /// Indicator of `(a, b)`.
    pub fn window(a: f64, b: f64) -> Result<Self> {
        Self::new(format!("window:{a}:{b}"), a, b, Tail::Compact, |_| 1.0)
    }

    /// `s^{-r}` on `(1, ∞)`.
    pub fn power(r: f64) -> Result<Self> {
        Self::new(format!("power:{r}"), 1.0, f64::INFINITY, Tail::Power(r), move |s| s.powf(-r))
    }

    /// `s - 1` on `(1, 2)`.
    pub fn ramp() -> Self {
        Self::new("ramp", 1.0, 2.0, Tail::Compact, |s| s - 1.0).expect("ramp is integrable")
    }

    /// `e^{1-s}` on `(1, ∞)`.
    pub fn exponential() -> Self {
        Self::new("exp", 1.0, f64::INFINITY, Tail::Power(8.0), |s| (1.0 - s).exp()).expect("exp is integrable")
    }

    /// Parses `window:a:b`, `power:r`, `ramp`, `exp` or `zero`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        match (name.as_str(), p.as_slice()) {
            ("window", [a, b]) => Self::window(*a, *b),
            ("power", [r]) => Self::power(*r),
            ("ramp", []) => Ok(Self::ramp()),
            ("exp", []) => Ok(Self::exponential()),
            ("zero", []) => Ok(Self::zero()),
            ("window" | "power" | "ramp" | "exp" | "zero", _) => {
                Err(Error::InvalidArgument(format!("bad parameters {p:?} for element `{name}`")))
            }
            _ => Err(Error::UnknownBuiltin(name)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn is_zero(&self) -> bool {
        self.label == "zero"
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s > self.lower && s < self.upper {
            (self.profile)(s)
        } else {
            0.0
        }
    }

    /// Samples the sign of the profile on a geometric grid over the support.
    pub fn is_nonnegative(&self) -> bool {
        let hi = if self.upper.is_finite() { self.upper } else { self.lower * 1e6 };
        crate::grid::geometric(self.lower, hi, 401).into_iter().skip(1).all(|s| s >= hi || self.eval(s) >= 0.0)
    }

    /// `m(s) u(s)` for a multiplier `m` with `|m(s)| ≲ s^{growth}` at infinity.
    pub fn multiply(
        &self,
        label: impl Into<String>,
        growth: Growth,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let tail = match self.tail {
            Tail::Compact => Tail::Compact,
            Tail::Power(r) => {
                let r_eff = r - growth.exponent;
                if r_eff <= 1.0 {
                    return Err(Error::DomainViolation(format!(
                        "{} times a factor growing like s^{} is not integrable",
                        self.label, growth.exponent
                    )));
                }
                Tail::Power(r_eff)
            }
            Tail::Log(p) => {
                let p_eff = if growth.logarithmic { p - 1.0 } else { p };
                if growth.exponent > 0.0 || p_eff <= 1.0 {
                    return Err(Error::DomainViolation(format!(
                        "{} times a factor growing like s^{} is not integrable",
                        self.label, growth.exponent
                    )));
                }
                Tail::Log(p_eff)
            }
        };
        let inner = self.profile.clone();
        Ok(L1Element {
            profile: Arc::new(move |s| m(s) * inner(s)),
            lower: self.lower,
            upper: self.upper,
            tail,
            label: label.into(),
        })
    }

    /// `∫ w(s)|u(s)| ds` over the support, for `w ≥ 0` with
    /// `w(s) ≲ s^{growth}` at infinity. `breaks` are scale points of `w`.
    fn weighted<W>(&self, w: W, growth: Growth, breaks: &[f64], tol: f64) -> Result<f64>
    where
        W: Fn(f64) -> Result<f64>,
    {
        self.weighted_on(w, growth, breaks, self.lower, self.upper, tol)
    }

    fn weighted_on<W>(&self, w: W, growth: Growth, breaks: &[f64], lo: f64, hi: f64, tol: f64) -> Result<f64>
    where
        W: Fn(f64) -> Result<f64>,
    {
        if self.is_zero() {
            return Ok(0.0);
        }
        let lo = lo.max(self.lower);
        let hi = hi.min(self.upper);
        if !(hi > lo) {
            return Ok(0.0);
        }
        let f = |s: f64| {
            let u = (self.profile)(s);
            if u == 0.0 {
                return Ok(0.0);
            }
            Ok(w(s)? * u.abs())
        };
        let mut hint = EndpointHint::none();
        if hi.is_infinite() {
            match self.tail {
                Tail::Power(r) => {
                    let mut q = r - growth.exponent - 1.0;
                    if q <= 0.0 {
                        return Err(Error::DomainViolation(format!(
                            "∫ w|u| diverges: {} decays like s^-{r} against weight growth s^{}",
                            self.label, growth.exponent
                        )));
                    }
                    if growth.logarithmic {
                        q *= 0.8;
                    }
                    hint.tail_at_upper = Some(q.min(1.0));
                }
                Tail::Log(p) => {
                    // in v = log s the integrand decays like v^-p
                    let q = if growth.logarithmic { p - 2.0 } else { p - 1.0 };
                    if growth.exponent > 0.0 || q <= 0.0 {
                        return Err(Error::DomainViolation(format!(
                            "∫ w|u| diverges: {} decays like 1/(s log^{p} s) against weight growth s^{}",
                            self.label, growth.exponent
                        )));
                    }
                    let opts =
                        QuadOptions::relative(tol).breakpoints(breaks.iter().filter(|b| **b > 0.0).map(|b| b.ln()));
                    let g = |v: f64| {
                        let s = v.exp();
                        Ok(f(s)? * s)
                    };
                    // e^v stays finite up to the cut; beyond it the envelope v^-(1+q) is
                    // integrated from the value at the cut
                    let v0 = lo.ln();
                    if v0 >= LOG_CUT {
                        return Err(Error::Unsupported(format!("support starting at {lo} is beyond the log cut")));
                    }
                    let body = try_integrate(&g, Interval::new(v0, LOG_CUT)?, EndpointHint::none(), &opts)?.value;
                    return Ok(body + g(LOG_CUT)? * LOG_CUT / q);
                }
                Tail::Compact => unreachable!("unbounded support always carries a tail envelope"),
            }
        }
        // decade points keep the rule from stepping over mass concentrated near `lo`
        let decades = (1..=15).map(|k| lo * 10f64.powi(k)).take_while(|b| *b < hi);
        let opts = QuadOptions::relative(tol).breakpoints(breaks.iter().copied().chain(decades));
        Ok(try_integrate(f, Interval::new(lo, hi)?, hint, &opts)?.value)
    }
}

/// An element of one of the two models.
#[derive(Debug, Clone)]
pub enum ModelElement {
    L1(L1Element),
    Vector(Vec<f64>),
}

impl ModelElement {
    /// Parses an element reference: `vector:1,2` for the matrix model,
    /// otherwise an `L1` element name.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        if name == "vector" {
            if p.is_empty() {
                return Err(Error::InvalidArgument("vector needs coordinates".into()));
            }
            return Ok(ModelElement::Vector(p));
        }
        Ok(ModelElement::L1(L1Element::parse(text)?))
    }

    pub fn label(&self) -> String {
        match self {
            ModelElement::L1(u) => u.label.clone(),
            ModelElement::Vector(v) => {
                format!("vector:{}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ModelElement::L1(u) => u.is_zero(),
            ModelElement::Vector(v) => v.iter().all(|x| *x == 0.0),
        }
    }

    pub fn as_l1(&self) -> Option<&L1Element> {
        match self {
            ModelElement::L1(u) => Some(u),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            ModelElement::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// Whether the element is pointwise nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            ModelElement::L1(u) => u.is_nonnegative(),
            ModelElement::Vector(v) => v.iter().all(|x| *x >= 0.0),
        }
    }
}

/// `‖C_t x‖` together with `N_t(x)` on the `L1` model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSnapshot {
    pub t: f64,
    pub cesaro_norm: f64,
    pub nt_norm: Option<f64>,
}

/// Outcome of a domain-membership diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Membership {
    /// `x ∈ dom(φ(A))`, with the graph norm `‖x‖ + ‖φ(A)x‖`.
    Member {
        graph_norm: f64,
    },
    NotMember,
    Inconclusive,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    pub fn is_not_member(&self) -> bool {
        matches!(self, Membership::NotMember)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Membership::Member { .. } => "Member",
            Membership::NotMember => "NotMember",
            Membership::Inconclusive => "Inconclusive",
        }
    }
}

/// `S_k = 10^k`, `k = 0..=6`.
pub fn default_membership_schedule() -> Vec<f64> {
    crate::grid::powers(10.0, 0..=6)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorModel {
    /// `(Au)(s) = u(s)/s` on `L1(1, ∞)`.
    L1,
    /// `A = diag(λ_i)`, `λ_i > 0`, on `ℓ1`.
    Matrix { eigenvalues: Vec<f64> },
}

impl OperatorModel {
    pub fn matrix(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(format!("eigenvalues {eigenvalues:?} must be positive and finite")));
        }
        Ok(OperatorModel::Matrix { eigenvalues })
    }

    /// Parses `l1` or `matrix:λ1,λ2,…`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        match name.as_str() {
            "l1" if p.is_empty() => Ok(OperatorModel::L1),
            "matrix" => Self::matrix(p),
            _ => Err(Error::InvalidArgument(format!("unknown model `{text}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            OperatorModel::L1 => "l1".into(),
            OperatorModel::Matrix { eigenvalues } => {
                format!("matrix:{}", eigenvalues.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }

    pub fn semigroup_bound(&self) -> f64 {
        SEMIGROUP_BOUND
    }

    /// Checks that `x` lives in this model.
    pub fn check(&self, x: &ModelElement) -> Result<()> {
        match (self, x) {
            (OperatorModel::L1, ModelElement::L1(_)) => Ok(()),
            (OperatorModel::Matrix { eigenvalues }, ModelElement::Vector(v)) if v.len() == eigenvalues.len() => Ok(()),
            (OperatorModel::Matrix { eigenvalues }, ModelElement::Vector(v)) => Err(Error::InvalidArgument(format!(
                "vector of length {} for a {}-dimensional model",
                v.len(),
                eigenvalues.len()
            ))),
            _ => {
                Err(Error::InvalidArgument(format!("element {} does not belong to model {}", x.label(), self.label())))
            }
        }
    }

    /// Applies the multiplier `m(λ)` through the functional calculus.
    fn multiply(
        &self,
        x: &ModelElement,
        label: String,
        growth: Growth,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<ModelElement> {
        self.check(x)?;
        Ok(match (self, x) {
            (OperatorModel::L1, ModelElement::L1(u)) => {
                ModelElement::L1(u.multiply(label, growth, move |s| m(1.0 / s))?)
            }
            (OperatorModel::Matrix { eigenvalues }, ModelElement::Vector(v)) => {
                ModelElement::Vector(eigenvalues.iter().zip(v).map(|(l, x)| m(*l) * x).collect())
            }
            _ => unreachable!("checked above"),
        })
    }

    /// `T(t)x`.
    pub fn apply_semigroup(&self, t: f64, x: &ModelElement) -> Result<ModelElement> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t = {t} must be >= 0")));
        }
        if t == 0.0 {
            self.check(x)?;
            return Ok(x.clone());
        }
        self.multiply(x, format!("T({t}){}", x.label()), Growth::default(), move |l| (-l * t).exp())
    }

    /// `C_t x = (1/t) ∫_0^t T(s)x ds`.
    pub fn cesaro_mean(&self, t: f64, x: &ModelElement) -> Result<ModelElement> {
        check_positive("t", t)?;
        self.multiply(x, format!("C({t}){}", x.label()), Growth::default(), move |l| cesaro_factor(l, t))
    }

    /// `(A + σ)^{-1} x`.
    pub fn resolvent(&self, sigma: f64, x: &ModelElement) -> Result<ModelElement> {
        check_positive("s", sigma)?;
        self.multiply(x, format!("R({sigma}){}", x.label()), Growth::default(), move |l| 1.0 / (l + sigma))
    }

    /// `φ(A)x` by the spectral route: `φ(1/s)u(s)` or `φ(λ_i)x_i`.
    pub fn apply_spectral(
        &self,
        phi: &(impl SpectralFunction + Clone + 'static),
        x: &ModelElement,
    ) -> Result<ModelElement> {
        let p = phi.clone();
        let growth = phi.growth_at_zero();
        self.check(x)?;
        if let ModelElement::Vector(v) = x {
            let OperatorModel::Matrix { eigenvalues } = self else { unreachable!() };
            return Ok(ModelElement::Vector(
                eigenvalues.iter().zip(v).map(|(l, x)| Ok(phi.value(*l)? * x)).collect::<Result<Vec<_>>>()?,
            ));
        }
        self.multiply(x, format!("{}(A){}", phi.label(), x.label()), growth, move |l| p.value(l).unwrap_or(f64::NAN))
    }

    /// `f(A)x = a x + bAx + ∫ (I - T(s))x ν(ds)` on the matrix model.
    pub fn phillips_apply(&self, f: &LevyTriple, x: &ModelElement, tol: f64) -> Result<Vec<f64>> {
        let OperatorModel::Matrix { eigenvalues } = self else {
            return Err(Error::Unsupported("the Phillips route is implemented on the matrix model only".into()));
        };
        self.check(x)?;
        let v = x.as_vector().expect("checked");
        eigenvalues
            .iter()
            .zip(v)
            .map(|(&l, &xi)| {
                let mut out = f.a * xi + f.b * l * xi;
                if !f.nu.is_zero() {
                    let r = f.nu.integrate_kernel_with(
                        |s| -(-l * s).exp_m1(),
                        KernelShape::new(1.0, 0.0, 1.0 / l),
                        &QuadOptions::relative(tol),
                    )?;
                    out += r.value * xi;
                }
                Ok(out)
            })
            .collect()
    }

    /// `f(A)x = a x + bAx + ∫ A(s + A)^{-1}x μ(ds)`.
    pub fn cbf_resolvent_apply(
        &self,
        f: &CompleteBernsteinFunction,
        x: &ModelElement,
        tol: f64,
    ) -> Result<ModelElement> {
        let (a, b, mu) = (f.a(), f.b(), f.mu().clone());
        let symbol = move |l: f64| -> Result<f64> {
            let mut v = a + b * l;
            if !mu.is_zero() {
                v += mu
                    .integrate_kernel_with(|s| l / (s + l), KernelShape::resolvent(l), &QuadOptions::relative(tol))?
                    .value;
            }
            Ok(v)
        };
        self.apply_symbol(x, format!("{}(A)", f.name()), Growth::default(), symbol)
    }

    /// `g(A)x = a x + bA^{-1}x + ∫ (s + A)^{-1}x μ(ds)`.
    pub fn stieltjes_resolvent_apply(&self, g: &StieltjesFunction, x: &ModelElement, tol: f64) -> Result<ModelElement> {
        let (a, b, mu) = (g.a(), g.b(), g.mu().clone());
        let symbol = move |l: f64| -> Result<f64> {
            let mut v = a + b / l;
            if !mu.is_zero() {
                v += mu
                    .integrate_kernel_with(|s| 1.0 / (s + l), KernelShape::resolvent(l), &QuadOptions::relative(tol))?
                    .value;
            }
            Ok(v)
        };
        self.apply_symbol(x, format!("{}(A)", g.name()), g.growth_at_zero(), symbol)
    }

    fn apply_symbol(
        &self,
        x: &ModelElement,
        label: String,
        growth: Growth,
        symbol: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<ModelElement> {
        self.check(x)?;
        match (self, x) {
            (OperatorModel::Matrix { eigenvalues }, ModelElement::Vector(v)) => Ok(ModelElement::Vector(
                eigenvalues.iter().zip(v).map(|(l, xi)| Ok(symbol(*l)? * xi)).collect::<Result<Vec<_>>>()?,
            )),
            _ => self.multiply(x, format!("{label}{}", x.label()), growth, move |l| symbol(l).unwrap_or(f64::NAN)),
        }
    }

    /// `Σ w(λ_i)|x_i|` or `∫ w(1/s)|u(s)| ds` for a nonnegative weight `w`
    /// with `w(λ) ≲ λ^{-growth}` as `λ → 0+`. `breaks` are scale points in
    /// the `s` variable of the `L1` model.
    pub fn weighted_norm<W>(&self, w: W, growth: Growth, x: &ModelElement, breaks: &[f64], tol: f64) -> Result<f64>
    where
        W: Fn(f64) -> Result<f64>,
    {
        self.check(x)?;
        match (self, x) {
            (OperatorModel::L1, ModelElement::L1(u)) => u.weighted(|s| w(1.0 / s), growth, breaks, tol),
            (OperatorModel::Matrix { eigenvalues }, ModelElement::Vector(v)) => {
                let mut acc = 0.0;
                for (l, xi) in eigenvalues.iter().zip(v) {
                    if *xi != 0.0 {
                        acc += w(*l)? * xi.abs();
                    }
                }
                Ok(acc)
            }
            _ => unreachable!("checked above"),
        }
    }

    /// Like [`weighted_norm`](Self::weighted_norm) restricted to `s ∈ (lo, hi)`
    /// on the `L1` model; the matrix model has no such restriction.
    pub fn weighted_norm_on<W>(&self, w: W, growth: Growth, x: &ModelElement, lo: f64, hi: f64, tol: f64) -> Result<f64>
    where
        W: Fn(f64) -> Result<f64>,
    {
        self.check(x)?;
        match (self, x) {
            (OperatorModel::L1, ModelElement::L1(u)) => u.weighted_on(|s| w(1.0 / s), growth, &[], lo, hi, tol),
            _ => self.weighted_norm(w, growth, x, &[], tol),
        }
    }

    /// `‖x‖`.
    pub fn norm(&self, x: &ModelElement, tol: f64) -> Result<f64> {
        self.weighted_norm(|_| Ok(1.0), Growth::default(), x, &[], tol)
    }

    /// `‖C_t x‖`.
    pub fn cesaro_norm(&self, t: f64, x: &ModelElement, tol: f64) -> Result<f64> {
        check_positive("t", t)?;
        self.weighted_norm(|l| Ok(cesaro_factor(l, t)), Growth::default(), x, &[t], tol)
    }

    /// `‖(A + σ)^{-1} x‖`.
    pub fn resolvent_norm(&self, sigma: f64, x: &ModelElement, tol: f64) -> Result<f64> {
        check_positive("s", sigma)?;
        self.weighted_norm(|l| Ok(1.0 / (l + sigma)), Growth::default(), x, &[1.0 / sigma], tol)
    }

    /// `N_t(u) = (1/t) ∫_1^t s|u(s)| ds + ∫_t^∞ |u(s)| ds` on the `L1` model.
    pub fn nt_norm(&self, t: f64, x: &ModelElement, tol: f64) -> Result<f64> {
        let OperatorModel::L1 = self else {
            return Err(Error::Unsupported("N_t is defined on the L1 model".into()));
        };
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("N_t needs t >= 1, got {t}")));
        }
        self.check(x)?;
        let u = x.as_l1().expect("checked");
        let near = u.weighted_on(|s| Ok(s / t), Growth::default(), &[], 1.0, t, tol)?;
        let far = u.weighted_on(|_| Ok(1.0), Growth::default(), &[], t, f64::INFINITY, tol)?;
        Ok(near + far)
    }

    pub fn snapshot(&self, t: f64, x: &ModelElement, tol: f64) -> Result<NormSnapshot> {
        let cesaro_norm = self.cesaro_norm(t, x, tol)?;
        let nt_norm = match self {
            OperatorModel::L1 if t >= 1.0 => Some(self.nt_norm(t, x, tol)?),
            _ => None,
        };
        Ok(NormSnapshot { t, cesaro_norm, nt_norm })
    }

    /// `‖φ(A)x‖`, computed as one integral; `DomainViolation` when the
    /// declared tails show it diverges.
    pub fn spectral_norm(&self, phi: &dyn SpectralFunction, x: &ModelElement, tol: f64) -> Result<f64> {
        self.weighted_norm(|l| Ok(phi.value(l)?.abs()), phi.growth_at_zero(), x, &[1.0], tol)
    }

    /// Classifies `∫_1^{S_k} |φ(1/s)||u(s)| ds` along `schedule` (increasing,
    /// starting at 1). The matrix model is finite dimensional, so every
    /// element is a member there.
    pub fn membership(
        &self,
        phi: &dyn SpectralFunction,
        x: &ModelElement,
        schedule: &[f64],
        tol: f64,
    ) -> Result<Membership> {
        self.check(x)?;
        let norm = self.norm(x, tol)?;
        if let OperatorModel::Matrix { .. } = self {
            let v = self.spectral_norm(phi, x, tol)?;
            return Ok(Membership::Member { graph_norm: norm + v });
        }
        if schedule.len() < 6 || schedule[0] < 1.0 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("membership schedule must increase from >= 1 with >= 6 points".into()));
        }
        let u = x.as_l1().expect("checked");
        if u.is_zero() {
            return Ok(Membership::Member { graph_norm: 0.0 });
        }
        let w = |s: f64| Ok(phi.value(1.0 / s)?.abs());
        let mut pieces = Vec::with_capacity(schedule.len());
        let mut lo = u.lower;
        let mut total = 0.0;
        for &hi in schedule {
            if hi <= lo {
                continue;
            }
            let piece = match u.weighted_on(w, Growth::default(), &[], lo, hi, tol) {
                Ok(v) => v,
                Err(_) => return Ok(Membership::Inconclusive),
            };
            pieces.push(piece);
            total += piece;
            lo = hi;
        }
        if u.upper <= lo {
            return Ok(Membership::Member { graph_norm: norm + total });
        }
        Ok(match classify_increments(&pieces, total, &ProbeOptions::default()) {
            LimitVerdict::Converges(v) => Membership::Member { graph_norm: norm + v },
            LimitVerdict::Diverges => Membership::NotMember,
            LimitVerdict::Inconclusive => Membership::Inconclusive,
        })
    }
}

impl OperatorModel {
    /// Membership read off `∫ |φ(1/s)||u(s)| ds` in the variable `v = log s`
    /// on the knots `v = 2^j`, `j ≤ 8`, i.e. out to `s = e^{256}`.
    ///
    /// Divergences of `log log`-type only show up on this scale; decade
    /// schedules in `s` cannot tell them apart from slow convergence. Elements
    /// with bounded support and the matrix model fall back to
    /// [`membership`](Self::membership) on the default schedule.
    pub fn log_scale_membership(&self, phi: &dyn SpectralFunction, x: &ModelElement, tol: f64) -> Result<Membership> {
        self.check(x)?;
        let u = match x {
            ModelElement::L1(u) if !u.is_zero() && u.upper.is_infinite() => u,
            _ => return self.membership(phi, x, &default_membership_schedule(), tol),
        };
        let v0 = u.lower.ln();
        if v0 >= LOG_SCALE_TOP / 2.0 {
            return Ok(Membership::Inconclusive);
        }
        let knots: Vec<f64> = std::iter::once(v0).chain((0..=8).map(|j| 2f64.powi(j)).filter(|v| *v > v0)).collect();
        let f = |v: f64| -> Result<f64> {
            let s = v.exp();
            let p = (u.profile)(s);
            if p == 0.0 {
                return Ok(0.0);
            }
            Ok(phi.value(1.0 / s)?.abs() * p.abs() * s)
        };
        let mut pieces = Vec::with_capacity(knots.len());
        for w in knots.windows(2) {
            match try_integrate(f, Interval::new(w[0], w[1])?, EndpointHint::none(), &QuadOptions::relative(tol)) {
                Ok(r) if r.value.is_finite() => pieces.push(r.value),
                _ => return Ok(Membership::Inconclusive),
            }
        }
        let total: f64 = pieces.iter().sum();
        Ok(match classify_increments(&pieces, total, &ProbeOptions::default()) {
            LimitVerdict::Converges(v) => Membership::Member { graph_norm: self.norm(x, tol)? + v },
            LimitVerdict::Diverges => Membership::NotMember,
            LimitVerdict::Inconclusive => Membership::Inconclusive,
        })
    }
}

/// Top of the log-scale membership knots, in `v = log s`.
pub const LOG_SCALE_TOP: f64 = 256.0;

/// `(1 - e^{-λt})/(λt)`, the Cesàro multiplier; on the `L1` model with
/// `λ = 1/s` this is `w_t(s)/t`.
pub fn cesaro_factor(lambda: f64, t: f64) -> f64 {
    let x = lambda * t;
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

/// Builtin test elements of the `L1` model.
pub fn element_registry() -> Vec<L1Element> {
    let mut out = Vec::new();
    for (a, b) in [
        (1.0, 2.0),
        (1.0, 1.5),
        (1.0, 4.0),
        (2.0, 5.0),
        (1.0, 10.0),
        (5.0, 6.0),
        (10.0, 20.0),
        (3.0, 100.0),
        (1.0, 1000.0),
    ] {
        out.push(L1Element::window(a, b).expect("registry windows are valid"));
    }
    for r in [1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0] {
        out.push(L1Element::power(r).expect("registry powers are valid"));
    }
    out.push(L1Element::ramp());
    out.push(L1Element::exponential());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2};

    fn el(u: L1Element) -> ModelElement {
        ModelElement::L1(u)
    }

    fn sample(x: &ModelElement, s: f64) -> f64 {
        x.as_l1().unwrap().eval(s)
    }

    #[test]
    fn semigroup_examples() {
        let m = OperatorModel::L1;
        let u = el(L1Element::window(1.0, 2.0).unwrap());
        assert_eq!(sample(&m.apply_semigroup(0.0, &u).unwrap(), 1.5), 1.0);
        let t1 = m.apply_semigroup(1.0, &u).unwrap();
        assert_relative_eq!(sample(&t1, 1.0 + 1e-15), (-1.0f64).exp(), max_relative = 1e-12);
        let mm = OperatorModel::matrix(vec![1.0, 2.0]).unwrap();
        let v = mm.apply_semigroup(LN_2, &ModelElement::Vector(vec![1.0, 1.0])).unwrap();
        let v = v.as_vector().unwrap();
        assert_relative_eq!(v[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(v[1], 0.25, max_relative = 1e-15);
    }

    #[test]
    fn cesaro_examples() {
        let m = OperatorModel::L1;
        let u = el(L1Element::window(1.0, 2.0).unwrap());
        let c = m.cesaro_mean(1.0, &u).unwrap();
        assert_relative_eq!(sample(&c, 1.0 + 1e-15), 1.0 - (-1.0f64).exp(), max_relative = 1e-12);
        let mm = OperatorModel::matrix(vec![1.0]).unwrap();
        let v = mm.cesaro_mean(100.0, &ModelElement::Vector(vec![1.0])).unwrap();
        assert_relative_eq!(v.as_vector().unwrap()[0], (1.0 - (-100.0f64).exp()) / 100.0, max_relative = 1e-15);
        let zero = mm.cesaro_mean(3.0, &ModelElement::Vector(vec![0.0])).unwrap();
        assert_eq!(zero.as_vector().unwrap()[0], 0.0);
        assert_eq!(m.cesaro_norm(3.0, &el(L1Element::zero()), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn resolvent_examples() {
        let m = OperatorModel::L1;
        let u = el(L1Element::window(1.0, 2.0).unwrap());
        assert_relative_eq!(sample(&m.resolvent(1.0, &u).unwrap(), 1.0 + 1e-15), 0.5, max_relative = 1e-12);
        let mm = OperatorModel::matrix(vec![2.0]).unwrap();
        assert_eq!(mm.resolvent(2.0, &ModelElement::Vector(vec![1.0])).unwrap().as_vector().unwrap()[0], 0.25);
    }

    #[test]
    fn resolvent_is_laplace_transform_of_semigroup() {
        let m = OperatorModel::L1;
        let u = el(L1Element::power(1.5).unwrap());
        let sigma = 0.7;
        let r = m.resolvent(sigma, &u).unwrap();
        for s in [1.5, 3.0, 40.0] {
            let oracle = crate::quad::integrate(
                |t| (-sigma * t).exp() * sample(&m.apply_semigroup(t, &u).unwrap(), s),
                Interval::half_line(),
                EndpointHint::tail(1.0),
                1e-10,
            )
            .unwrap()
            .value;
            assert_relative_eq!(sample(&r, s), oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn spectral_examples() {
        let m = OperatorModel::L1;
        let u = el(L1Element::window(1.0, 10.0).unwrap());
        let id = m.apply_spectral(&ClosedForm::one(), &u).unwrap();
        assert_eq!(sample(&id, 3.0), 1.0);
        let g = StieltjesFunction::power(0.5).unwrap();
        let gu = m.apply_spectral(&g, &u).unwrap();
        assert_relative_eq!(sample(&gu, 4.0), 2.0, max_relative = 1e-9);
        let mm = OperatorModel::matrix(vec![4.0]).unwrap();
        let sqrt = CompleteBernsteinFunction::power(0.5).unwrap();
        let v = mm.apply_spectral(&sqrt, &ModelElement::Vector(vec![1.0])).unwrap();
        assert_relative_eq!(v.as_vector().unwrap()[0], 2.0, max_relative = 1e-9);
        let heavy = el(L1Element::power(1.5).unwrap());
        assert!(matches!(m.apply_spectral(&g, &heavy), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn phillips_examples() {
        let mm = OperatorModel::matrix(vec![3.0]).unwrap();
        let x = ModelElement::Vector(vec![1.0]);
        let id = CompleteBernsteinFunction::identity().levy_triple().unwrap();
        assert_eq!(mm.phillips_apply(&id, &x, 1e-10).unwrap(), vec![3.0]);
        let mm4 = OperatorModel::matrix(vec![4.0]).unwrap();
        let sqrt = LevyTriple::stable(0.5).unwrap();
        assert_relative_eq!(mm4.phillips_apply(&sqrt, &x, 1e-10).unwrap()[0], 2.0, max_relative = 1e-8);
        let five = LevyTriple::new(5.0, 0.0, crate::measure::RadonMeasure::zero()).unwrap();
        assert_eq!(mm.phillips_apply(&five, &ModelElement::Vector(vec![2.0]), 1e-10).unwrap(), vec![10.0]);
        assert!(matches!(
            OperatorModel::L1.phillips_apply(&five, &el(L1Element::ramp()), 1e-8),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn resolvent_route_examples() {
        let x = ModelElement::Vector(vec![1.0]);
        let atom =
            CompleteBernsteinFunction::from_builtin(crate::stieltjes::CbfBuiltin::Atom { location: 1.0, mass: 1.0 })
                .unwrap();
        let one = OperatorModel::matrix(vec![1.0]).unwrap();
        assert_relative_eq!(one.cbf_resolvent_apply(&atom, &x, 1e-12).unwrap().as_vector().unwrap()[0], 0.5);
        let four = OperatorModel::matrix(vec![4.0]).unwrap();
        let sqrt = CompleteBernsteinFunction::power(0.5).unwrap();
        assert_relative_eq!(
            four.cbf_resolvent_apply(&sqrt, &x, 1e-10).unwrap().as_vector().unwrap()[0],
            2.0,
            max_relative = 1e-9
        );
        let g = StieltjesFunction::power(0.5).unwrap();
        assert_relative_eq!(
            four.stieltjes_resolvent_apply(&g, &x, 1e-10).unwrap().as_vector().unwrap()[0],
            0.5,
            max_relative = 1e-9
        );
        let two = OperatorModel::matrix(vec![2.0]).unwrap();
        let atom_g =
            StieltjesFunction::from_builtin(crate::stieltjes::StieltjesBuiltin::Atom { location: 2.0, mass: 3.0 })
                .unwrap();
        assert_relative_eq!(two.stieltjes_resolvent_apply(&atom_g, &x, 1e-12).unwrap().as_vector().unwrap()[0], 0.75);
        let zero = ModelElement::Vector(vec![0.0]);
        assert_eq!(four.stieltjes_resolvent_apply(&g, &zero, 1e-10).unwrap().as_vector().unwrap()[0], 0.0);
        assert_eq!(four.cbf_resolvent_apply(&sqrt, &zero, 1e-10).unwrap().as_vector().unwrap()[0], 0.0);
        // the L1 route agrees with the spectral route pointwise
        let u = el(L1Element::window(1.0, 3.0).unwrap());
        let r = OperatorModel::L1.stieltjes_resolvent_apply(&g, &u, 1e-11).unwrap();
        assert_relative_eq!(sample(&r, 2.0), 2f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn norm_examples() {
        let m = OperatorModel::L1;
        let w = el(L1Element::window(1.0, 2.0).unwrap());
        assert_relative_eq!(m.norm(&w, 1e-12).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.nt_norm(2.0, &w, 1e-12).unwrap(), 0.75, max_relative = 1e-12);
        let z = el(L1Element::zero());
        assert_eq!(m.norm(&z, 1e-12).unwrap(), 0.0);
        assert_eq!(m.nt_norm(5.0, &z, 1e-12).unwrap(), 0.0);
        let p = el(L1Element::power(2.0).unwrap());
        assert_relative_eq!(m.norm(&p, 1e-12).unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(m.nt_norm(E, &p, 1e-12).unwrap(), 2.0 / E, max_relative = 1e-10);
        assert!(m.nt_norm(0.5, &p, 1e-8).is_err());
    }

    #[test]
    fn membership_examples() {
        let m = OperatorModel::L1;
        let g = StieltjesFunction::power(0.5).unwrap();
        let sched = default_membership_schedule();
        let w = el(L1Element::window(3.0, 100.0).unwrap());
        assert!(m.membership(&g, &w, &sched, 1e-9).unwrap().is_member());
        let p2 = el(L1Element::power(2.0).unwrap());
        let v = m.membership(&g, &p2, &sched, 1e-9).unwrap();
        let Membership::Member { graph_norm } = v else { panic!("{v:?}") };
        // ‖u‖ + ∫ s^{-3/2} = 1 + 2
        assert!((graph_norm - 3.0).abs() < 0.05, "{graph_norm}");
        let p15 = el(L1Element::power(1.5).unwrap());
        assert_eq!(m.membership(&g, &p15, &sched, 1e-9).unwrap(), Membership::NotMember);
        let mm = OperatorModel::matrix(vec![0.1, 1.0]).unwrap();
        assert!(mm.membership(&g, &ModelElement::Vector(vec![1.0, 1.0]), &sched, 1e-9).unwrap().is_member());
    }

    #[test]
    fn registry_is_well_formed() {
        let reg = element_registry();
        assert_eq!(reg.len(), 20);
        for u in &reg {
            assert!(u.is_nonnegative(), "{}", u.label());
            let again = L1Element::parse(u.label()).unwrap();
            assert_eq!(again.label(), u.label());
        }
        assert!(matches!(L1Element::parse("nope"), Err(Error::UnknownBuiltin(_))));
        assert!(L1Element::power(1.0).is_err());
    }

    #[test]
    fn model_parsing() {
        assert_eq!(OperatorModel::parse("l1").unwrap(), OperatorModel::L1);
        assert_eq!(OperatorModel::parse("matrix:0.1,1,4").unwrap().label(), "matrix:0.1,1,4");
        assert!(OperatorModel::parse("matrix:0,1").is_err());
        assert!(matches!(ModelElement::parse("vector:1,2").unwrap(), ModelElement::Vector(v) if v == vec![1.0, 2.0]));
        let mm = OperatorModel::matrix(vec![1.0]).unwrap();
        assert!(mm.norm(&ModelElement::Vector(vec![1.0, 2.0]), 1e-8).is_err());
        assert!(mm.norm(&el(L1Element::ramp()), 1e-8).is_err());
    }

    #[test]
    fn composition_identity_on_matrices() {
        let mm = OperatorModel::matrix(vec![0.1, 1.0, 4.0, 10.0]).unwrap();
        let x = ModelElement::Vector(vec![1.0, -2.0, 0.5, 3.0]);
        let q = CompleteBernsteinFunction::power(0.5).unwrap();
        let g = StieltjesFunction::power(0.5).unwrap();
        let qg = crate::stieltjes::compose(&q, &g);
        let direct = mm.apply_spectral(&qg, &x).unwrap();
        let gx = mm.apply_spectral(&ClosedForm::of_stieltjes(&g).unwrap(), &x).unwrap();
        // q(g(A)) on the eigenbasis: q applied to the eigenvalues g(λ_i)
        let OperatorModel::Matrix { eigenvalues } = &mm else { unreachable!() };
        for ((d, l), gxi) in direct.as_vector().unwrap().iter().zip(eigenvalues).zip(gx.as_vector().unwrap()) {
            let gl = l.powf(-0.5);
            assert_relative_eq!(*d, gl.sqrt() * gxi / gl, max_relative = 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn semigroup_law(t1 in 0.0f64..5.0, t2 in 0.0f64..5.0, s in 1.0f64..50.0) {
            let m = OperatorModel::L1;
            let u = el(L1Element::power(2.0).unwrap());
            let both = m.apply_semigroup(t1 + t2, &u).unwrap();
            let nested = m.apply_semigroup(t1, &m.apply_semigroup(t2, &u).unwrap()).unwrap();
            let (a, b) = (sample(&both, s), sample(&nested, s));
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }

        #[test]
        fn contraction_and_sandwich(t in 1.0f64..1e5, idx in 0usize..20) {
            let m = OperatorModel::L1;
            let u = el(element_registry()[idx].clone());
            let tol = 1e-10;
            let n = m.norm(&u, tol).unwrap();
            let tu = m.apply_semigroup(t, &u).unwrap();
            prop_assert!(m.norm(&tu, tol).unwrap() <= n * (1.0 + 2.0 * tol));
            let snap = m.snapshot(t, &u, tol).unwrap();
            let nt = snap.nt_norm.unwrap();
            let c = snap.cesaro_norm;
            prop_assert!((1.0 - (-1.0f64).exp()) * nt <= c * (1.0 + 2.0 * tol));
            prop_assert!(c <= nt * (1.0 + 2.0 * tol));
            prop_assert!(n / t <= nt * (1.0 + 2.0 * tol) && nt <= n * (1.0 + 2.0 * tol));
        }

        #[test]
        fn floor_is_monotone(t in 1.0f64..1e4, step in 1.01f64..4.0, idx in 0usize..20) {
            let m = OperatorModel::L1;
            let u = el(element_registry()[idx].clone());
            let a = t * m.cesaro_norm(t, &u, 1e-12).unwrap();
            let b = t * step * m.cesaro_norm(t * step, &u, 1e-12).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-9));
        }
    }
}
