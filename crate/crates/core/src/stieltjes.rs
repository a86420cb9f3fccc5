//! Stieltjes functions `g(z) = a + b/z + ∫ μ(ds)/(z+s)` and complete
//! Bernstein functions `f(z) = a + bz + ∫ z/(z+s) μ(ds)`, carried by their
//! representing triple `(a, b, μ)`.
//!
//! Closed forms exist only for builtins and are used as test oracles; every
//! evaluation goes through the representation.

use crate::error::{Error, Result};
use crate::measure::{DensityHint, DensityKind, KernelShape, MeasureClass, MeasureDoc, RadonMeasure};
use crate::quad::{classify_sequence, LimitVerdict, ProbeOptions, QuadOptions};
use crate::refs::parse_call;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `g(z) ≲ z^{-exponent}` as `z → 0+` (or `f(z) ≲ z^{exponent}` as `z → ∞`
/// for a complete Bernstein function), up to a power of `log` when
/// `logarithmic` is set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Growth {
    pub exponent: f64,
    pub logarithmic: bool,
}

impl Growth {
    const BOUNDED: Growth = Growth { exponent: 0.0, logarithmic: false };

    fn max(self, other: Growth) -> Growth {
        if other.exponent > self.exponent || (other.exponent == self.exponent && other.logarithmic && !self.logarithmic)
        {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StieltjesBuiltin {
    /// `z^{-γ}`, `0 < γ < 1`.
    Power(f64),
    /// `log z / (z - 1)`.
    LogRatio,
    /// `log(1 + 1/z)`.
    Log1pRecip,
    /// `(z - 1)/(z log z)`.
    ReciprocalLog,
    /// `mass/(z + location)`.
    Atom { location: f64, mass: f64 },
}

/// `log z`, through `log1p(z - 1)` near 1 where that is the accurate form.
fn ln_near_one(z: f64) -> f64 {
    let h = z - 1.0;
    if h.abs() < 0.5 {
        h.ln_1p()
    } else {
        z.ln()
    }
}

impl StieltjesBuiltin {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        let bad = || Error::InvalidArgument(format!("bad parameters {p:?} for `{name}`"));
        let b = match (name.as_str(), p.as_slice()) {
            ("power", [g]) => StieltjesBuiltin::Power(*g),
            ("log-ratio", []) => StieltjesBuiltin::LogRatio,
            ("log1p-recip", []) => StieltjesBuiltin::Log1pRecip,
            ("reciprocal-log", []) => StieltjesBuiltin::ReciprocalLog,
            ("atom", [s, m]) => StieltjesBuiltin::Atom { location: *s, mass: *m },
            ("power" | "log-ratio" | "log1p-recip" | "reciprocal-log" | "atom", _) => return Err(bad()),
            _ => return Err(Error::UnknownBuiltin(name)),
        };
        Ok(b)
    }

    pub fn name(&self) -> String {
        match self {
            StieltjesBuiltin::Power(g) => format!("power({g})"),
            StieltjesBuiltin::LogRatio => "log-ratio".into(),
            StieltjesBuiltin::Log1pRecip => "log1p-recip".into(),
            StieltjesBuiltin::ReciprocalLog => "reciprocal-log".into(),
            StieltjesBuiltin::Atom { location, mass } => format!("atom({location},{mass})"),
        }
    }

    pub fn closed_form(&self, z: f64) -> f64 {
        match *self {
            StieltjesBuiltin::Power(g) => z.powf(-g),
            StieltjesBuiltin::LogRatio => {
                let h = z - 1.0;
                if h == 0.0 {
                    1.0
                } else {
                    ln_near_one(z) / h
                }
            }
            StieltjesBuiltin::Log1pRecip => (1.0 / z).ln_1p(),
            StieltjesBuiltin::ReciprocalLog => {
                let u = z - 1.0;
                if u.abs() < 1e-5 {
                    1.0 - u / 2.0 + 5.0 * u * u / 12.0
                } else {
                    u / (z * ln_near_one(z))
                }
            }
            StieltjesBuiltin::Atom { location, mass } => mass / (z + location),
        }
    }

    pub fn closed_derivative(&self, z: f64) -> f64 {
        match *self {
            StieltjesBuiltin::Power(g) => -g * z.powf(-g - 1.0),
            StieltjesBuiltin::LogRatio => {
                let h = z - 1.0;
                if h.abs() < 1e-3 {
                    -0.5 + 2.0 * h / 3.0 - 0.75 * h * h + 0.8 * h * h * h
                } else {
                    (h / z - ln_near_one(z)) / (h * h)
                }
            }
            StieltjesBuiltin::Log1pRecip => -1.0 / (z * (z + 1.0)),
            StieltjesBuiltin::ReciprocalLog => {
                let u = z - 1.0;
                if u.abs() < 1e-3 {
                    -0.5 + 5.0 * u / 6.0
                } else {
                    let l = ln_near_one(z);
                    (l - u) / (z * z * l * l)
                }
            }
            StieltjesBuiltin::Atom { location, mass } => -mass / ((z + location) * (z + location)),
        }
    }

    fn triple(&self) -> Result<(f64, f64, RadonMeasure)> {
        let mu = match *self {
            StieltjesBuiltin::Power(g) => {
                if !(g > 0.0 && g < 1.0) {
                    return Err(Error::InvalidArgument(format!("power exponent {g} must lie in (0, 1)")));
                }
                RadonMeasure::from_density(DensityKind::Power { exponent: g, coefficient: (PI * g).sin() / PI })?
            }
            StieltjesBuiltin::LogRatio => RadonMeasure::from_density(DensityKind::StieltjesLog)?,
            StieltjesBuiltin::Log1pRecip => {
                RadonMeasure::from_density(DensityKind::LebesgueWindow { lower: 0.0, upper: 1.0 })?
            }
            StieltjesBuiltin::ReciprocalLog => RadonMeasure::from_density(DensityKind::ReciprocalLog)?,
            StieltjesBuiltin::Atom { location, mass } => RadonMeasure::atom(location, mass)?,
        };
        Ok((0.0, 0.0, mu))
    }
}

/// Limits read off a Stieltjes function along dyadic schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// `lim_{z→∞} g(z)`.
    pub a: f64,
    /// `lim_{z→0+} z g(z)`.
    pub b: f64,
    /// `g(0+)`, `f64::INFINITY` when `g` blows up.
    pub g_at_zero: f64,
}

/// Threshold above which `g(2^{-k})` is taken as evidence of `g(0+) = ∞`.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

/// Largest violations found by [`StieltjesFunction::duality_check`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualityReport {
    /// `h(z) = z g(z)` below zero.
    pub h_negative: f64,
    /// `h` decreasing between neighbours.
    pub h_decreasing: f64,
    /// `h` below the chord through its neighbours.
    pub h_not_concave: f64,
    /// `1/g` below zero.
    pub reciprocal_negative: f64,
    /// `1/g` decreasing between neighbours.
    pub reciprocal_decreasing: f64,
    /// `(1/g)(z)/z` increasing between neighbours.
    pub reciprocal_ratio_increasing: f64,
}

impl DualityReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.h_negative,
            self.h_decreasing,
            self.h_not_concave,
            self.reciprocal_negative,
            self.reciprocal_decreasing,
            self.reciprocal_ratio_increasing,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

#[derive(Debug, Clone)]
pub struct StieltjesFunction {
    a: f64,
    b: f64,
    mu: RadonMeasure,
    builtin: Option<StieltjesBuiltin>,
}

fn check_coefficients(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("coefficients a={a}, b={b} must be finite and >= 0")));
    }
    Ok(())
}

fn check_stieltjes_class(mu: &RadonMeasure) -> Result<()> {
    if mu.class() != MeasureClass::Stieltjes {
        return Err(Error::InvalidArgument("representing measure must be of Stieltjes class".into()));
    }
    Ok(())
}

fn check_point(z: f64) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidArgument(format!("evaluation point {z} must be positive and finite")));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be > 0")));
    }
    Ok(())
}

impl StieltjesFunction {
    pub fn new(a: f64, b: f64, mu: RadonMeasure) -> Result<Self> {
        check_coefficients(a, b)?;
        check_stieltjes_class(&mu)?;
        Ok(StieltjesFunction { a, b, mu, builtin: None })
    }

    pub fn from_builtin(builtin: StieltjesBuiltin) -> Result<Self> {
        let (a, b, mu) = builtin.triple()?;
        Ok(StieltjesFunction { a, b, mu, builtin: Some(builtin) })
    }

    /// `z^{-γ}`.
    pub fn power(gamma: f64) -> Result<Self> {
        Self::from_builtin(StieltjesBuiltin::Power(gamma))
    }

    /// `log z/(z-1)`.
    pub fn log_ratio() -> Self {
        Self::from_builtin(StieltjesBuiltin::LogRatio).expect("builtin is admissible")
    }

    /// `log(1 + 1/z)`.
    pub fn log1p_recip() -> Self {
        Self::from_builtin(StieltjesBuiltin::Log1pRecip).expect("builtin is admissible")
    }

    /// `(z-1)/(z log z)`.
    pub fn reciprocal_log() -> Self {
        Self::from_builtin(StieltjesBuiltin::ReciprocalLog).expect("builtin is admissible")
    }

    /// Parses a builtin reference such as `power(0.5)`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_builtin(StieltjesBuiltin::parse(text)?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mu(&self) -> &RadonMeasure {
        &self.mu
    }

    pub fn builtin(&self) -> Option<StieltjesBuiltin> {
        self.builtin
    }

    pub fn name(&self) -> String {
        match self.builtin {
            Some(b) => b.name(),
            None => format!("triple(a={}, b={})", self.a, self.b),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.b == 0.0 && self.mu.is_zero()
    }

    pub fn closed_form(&self, z: f64) -> Option<f64> {
        self.builtin.map(|b| b.closed_form(z))
    }

    pub fn closed_derivative(&self, z: f64) -> Option<f64> {
        self.builtin.map(|b| b.closed_derivative(z))
    }

    /// `a + b/z + ∫ μ(ds)/(z+s)`.
    pub fn eval(&self, z: f64, tol: f64) -> Result<f64> {
        check_point(z)?;
        check_tol(tol)?;
        let mut v = self.a + self.b / z;
        if !self.mu.is_zero() {
            let r = self.mu.integrate_kernel_with(
                |s| 1.0 / (z + s),
                KernelShape::resolvent(z),
                &QuadOptions::relative(tol),
            )?;
            v += r.value;
        }
        Ok(v)
    }

    /// `g'(z) = -b/z² - ∫ μ(ds)/(z+s)²`.
    pub fn derivative(&self, z: f64, tol: f64) -> Result<f64> {
        check_point(z)?;
        check_tol(tol)?;
        let mut v = -self.b / (z * z);
        if !self.mu.is_zero() {
            let r = self.mu.integrate_kernel_with(
                |s| 1.0 / ((z + s) * (z + s)),
                KernelShape::new(0.0, 2.0, z),
                &QuadOptions::relative(tol),
            )?;
            v -= r.value;
        }
        Ok(v)
    }

    /// Estimates `a = g(∞)`, `b = lim z g(z)` and `g(0+)` on `z = 2^{±k}`,
    /// `k = 0..=40`.
    pub fn limits(&self, tol: f64) -> Result<Limits> {
        check_tol(tol)?;
        let opts = ProbeOptions::default();
        let up = (0..=40).map(|k| self.eval(2f64.powi(k), tol * 1e-3)).collect::<Result<Vec<_>>>()?;
        let down = (0..=40).map(|k| self.eval(2f64.powi(-k), tol * 1e-3)).collect::<Result<Vec<_>>>()?;
        let zg: Vec<f64> = down.iter().enumerate().map(|(k, g)| g * 2f64.powi(-(k as i32))).collect();

        let a = match classify_sequence(&up, &opts) {
            LimitVerdict::Converges(v) => v.max(0.0),
            _ => return Err(Error::Inconclusive("g(2^k) does not stabilize".into())),
        };
        let b = match classify_sequence(&zg, &opts) {
            LimitVerdict::Converges(v) => v.max(0.0),
            _ => return Err(Error::Inconclusive("2^-k g(2^-k) does not stabilize".into())),
        };
        let g_at_zero = if down.iter().any(|g| *g > BLOW_UP_THRESHOLD) {
            f64::INFINITY
        } else {
            match classify_sequence(&down, &opts) {
                LimitVerdict::Diverges => f64::INFINITY,
                LimitVerdict::Converges(v) => v,
                LimitVerdict::Inconclusive => {
                    return Err(Error::Inconclusive("g(2^-k) neither stabilizes nor grows".into()))
                }
            }
        };
        Ok(Limits { a, b, g_at_zero })
    }

    /// Growth envelope as `z → 0+`.
    pub fn growth_at_zero(&self) -> Growth {
        let mut g = Growth::BOUNDED;
        if self.b > 0.0 {
            g = g.max(Growth { exponent: 1.0, logarithmic: false });
        }
        if let Some(d) = self.mu.density() {
            g = g.max(match d.hint() {
                DensityHint::Power { at_zero, .. } if at_zero > 0.0 => Growth { exponent: at_zero, logarithmic: false },
                DensityHint::Power { at_zero, .. } => Growth { exponent: 0.0, logarithmic: at_zero == 0.0 },
                DensityHint::Support { lower, .. } => Growth { exponent: 0.0, logarithmic: lower == 0.0 },
                DensityHint::Logarithmic | DensityHint::Unknown => Growth { exponent: 1.0, logarithmic: false },
            });
        }
        g
    }

    /// Checks on a grid that `z g(z)` is a complete Bernstein function and
    /// `1/g` behaves like one: positivity, monotonicity, and concavity of
    /// `z g(z)` against chords through grid neighbours.
    pub fn duality_check(&self, grid: &[f64], tol: f64) -> Result<DualityReport> {
        if self.is_trivial() {
            return Err(Error::PreconditionFailed("μ = 0 and b = 0: g is constant".into()));
        }
        if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
            return Err(Error::InvalidArgument("grid must be positive, increasing, with >= 3 points".into()));
        }
        let g = grid.iter().map(|&z| self.eval(z, tol * 1e-3)).collect::<Result<Vec<_>>>()?;
        let h: Vec<f64> = grid.iter().zip(&g).map(|(z, g)| z * g).collect();
        let r: Vec<f64> = g.iter().map(|g| 1.0 / g).collect();
        let rz: Vec<f64> = r.iter().zip(grid).map(|(r, z)| r / z).collect();
        let mut rep = DualityReport::default();
        for i in 0..grid.len() {
            rep.h_negative = rep.h_negative.max(-h[i]);
            rep.reciprocal_negative = rep.reciprocal_negative.max(-r[i]);
            if i + 1 < grid.len() {
                rep.h_decreasing = rep.h_decreasing.max(h[i] - h[i + 1]);
                rep.reciprocal_decreasing = rep.reciprocal_decreasing.max(r[i] - r[i + 1]);
                rep.reciprocal_ratio_increasing = rep.reciprocal_ratio_increasing.max(rz[i + 1] - rz[i]);
            }
            if i + 2 < grid.len() {
                let w = (grid[i + 1] - grid[i]) / (grid[i + 2] - grid[i]);
                let chord = h[i] + w * (h[i + 2] - h[i]);
                rep.h_not_concave = rep.h_not_concave.max(chord - h[i + 1]);
            }
        }
        Ok(rep)
    }

    /// `m(s) = ∫ e^{-sτ} μ(dτ)`, the density of `μ`'s Laplace view, so that
    /// `g(t) = ∫ e^{-ts} m(s) ds` when `a = b = 0`.
    pub fn laplace_density(&self, s: f64, tol: f64) -> Result<f64> {
        if self.a != 0.0 || self.b != 0.0 {
            return Err(Error::PreconditionFailed("laplace_density needs a = b = 0".into()));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("s = {s} must be >= 0")));
        }
        check_tol(tol)?;
        if self.mu.is_zero() {
            return Ok(0.0);
        }
        let shape =
            if s > 0.0 { KernelShape::new(0.0, f64::INFINITY, 1.0 / s) } else { KernelShape::new(0.0, 0.0, 1.0) };
        let r =
            self.mu.integrate_kernel_with(|t| (-s * t).exp(), shape, &QuadOptions::relative(tol)).map_err(
                |e| match e {
                    Error::InvalidHint(m) => Error::DomainViolation(format!("m({s}) is infinite: {m}")),
                    other => other,
                },
            )?;
        Ok(r.value)
    }

    /// `z ↦ z g(z)` as a complete Bernstein function with the same measure.
    pub fn dual(&self) -> CompleteBernsteinFunction {
        CompleteBernsteinFunction { a: self.b, b: self.a, mu: self.mu.clone(), builtin: None }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FunctionDoc {
            builtin: self.builtin.map(|b| b.name()),
            a: self.a,
            b: self.b,
            mu: Some(MeasureDoc::try_from(&self.mu)?),
        })?)
    }

    /// Reads a triple `{"a":…,"b":…,"mu":{…}}` or a builtin shorthand
    /// `{"builtin":"power(0.5)"}`; a builtin entry takes precedence.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FunctionDoc = serde_json::from_str(text)?;
        if let Some(name) = doc.builtin {
            return Self::parse(&name);
        }
        let mu = match doc.mu {
            Some(m) => RadonMeasure::try_from(m)?,
            None => RadonMeasure::zero(),
        };
        Self::new(doc.a, doc.b, mu)
    }
}

/// JSON form shared by Stieltjes and complete Bernstein functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CbfBuiltin {
    /// `z^α`, `0 < α < 1`.
    Power(f64),
    /// `z`.
    Identity,
    /// The constant `a`.
    Constant(f64),
    /// `mass · z/(z + location)`.
    Atom { location: f64, mass: f64 },
}

impl CbfBuiltin {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, p) = parse_call(text)?;
        let bad = || Error::InvalidArgument(format!("bad parameters {p:?} for `{name}`"));
        Ok(match (name.as_str(), p.as_slice()) {
            ("power", [a]) => CbfBuiltin::Power(*a),
            ("sqrt", []) => CbfBuiltin::Power(0.5),
            ("identity", []) => CbfBuiltin::Identity,
            ("constant", [a]) => CbfBuiltin::Constant(*a),
            ("atom", [s, m]) => CbfBuiltin::Atom { location: *s, mass: *m },
            ("power" | "sqrt" | "identity" | "constant" | "atom", _) => return Err(bad()),
            _ => return Err(Error::UnknownBuiltin(name)),
        })
    }

    pub fn name(&self) -> String {
        match self {
            CbfBuiltin::Power(a) => format!("power({a})"),
            CbfBuiltin::Identity => "identity".into(),
            CbfBuiltin::Constant(a) => format!("constant({a})"),
            CbfBuiltin::Atom { location, mass } => format!("atom({location},{mass})"),
        }
    }

    pub fn closed_form(&self, z: f64) -> f64 {
        match *self {
            CbfBuiltin::Power(a) => z.powf(a),
            CbfBuiltin::Identity => z,
            CbfBuiltin::Constant(a) => a,
            CbfBuiltin::Atom { location, mass } => mass * z / (z + location),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompleteBernsteinFunction {
    a: f64,
    b: f64,
    mu: RadonMeasure,
    builtin: Option<CbfBuiltin>,
}

impl CompleteBernsteinFunction {
    pub fn new(a: f64, b: f64, mu: RadonMeasure) -> Result<Self> {
        check_coefficients(a, b)?;
        check_stieltjes_class(&mu)?;
        Ok(CompleteBernsteinFunction { a, b, mu, builtin: None })
    }

    pub fn from_builtin(builtin: CbfBuiltin) -> Result<Self> {
        let (a, b, mu) = match builtin {
            CbfBuiltin::Power(alpha) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidArgument(format!("power exponent {alpha} must lie in (0, 1)")));
                }
                let gamma = 1.0 - alpha;
                let mu = RadonMeasure::from_density(DensityKind::Power {
                    exponent: gamma,
                    coefficient: (PI * gamma).sin() / PI,
                })?;
                (0.0, 0.0, mu)
            }
            CbfBuiltin::Identity => (0.0, 1.0, RadonMeasure::zero()),
            CbfBuiltin::Constant(a) => (a, 0.0, RadonMeasure::zero()),
            CbfBuiltin::Atom { location, mass } => (0.0, 0.0, RadonMeasure::atom(location, mass)?),
        };
        check_coefficients(a, b)?;
        Ok(CompleteBernsteinFunction { a, b, mu, builtin: Some(builtin) })
    }

    /// `z^α`.
    pub fn power(alpha: f64) -> Result<Self> {
        Self::from_builtin(CbfBuiltin::Power(alpha))
    }

    pub fn identity() -> Self {
        Self::from_builtin(CbfBuiltin::Identity).expect("builtin is admissible")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_builtin(CbfBuiltin::parse(text)?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mu(&self) -> &RadonMeasure {
        &self.mu
    }

    pub fn builtin(&self) -> Option<CbfBuiltin> {
        self.builtin
    }

    pub fn name(&self) -> String {
        match self.builtin {
            Some(b) => b.name(),
            None => format!("cbf(a={}, b={})", self.a, self.b),
        }
    }

    pub fn closed_form(&self, z: f64) -> Option<f64> {
        self.builtin.map(|b| b.closed_form(z))
    }

    /// `a + bz + ∫ z/(z+s) μ(ds)`; `f(0) = a`.
    pub fn eval(&self, z: f64, tol: f64) -> Result<f64> {
        check_tol(tol)?;
        if z == 0.0 {
            return Ok(self.a);
        }
        check_point(z)?;
        let mut v = self.a + self.b * z;
        if !self.mu.is_zero() {
            let r = self.mu.integrate_kernel_with(
                |s| z / (z + s),
                KernelShape::resolvent(z),
                &QuadOptions::relative(tol),
            )?;
            v += r.value;
        }
        Ok(v)
    }

    /// Growth envelope as `z → ∞`.
    pub fn growth_at_infinity(&self) -> Growth {
        let mut g = Growth::BOUNDED;
        if self.b > 0.0 {
            return Growth { exponent: 1.0, logarithmic: false };
        }
        if let Some(d) = self.mu.density() {
            g = g.max(match d.hint() {
                DensityHint::Power { at_infinity, .. } if at_infinity < 1.0 => {
                    Growth { exponent: 1.0 - at_infinity, logarithmic: false }
                }
                DensityHint::Power { at_infinity, .. } => Growth { exponent: 0.0, logarithmic: at_infinity == 1.0 },
                DensityHint::Support { .. } => Growth::BOUNDED,
                DensityHint::Logarithmic | DensityHint::Unknown => Growth { exponent: 1.0, logarithmic: false },
            });
        }
        g
    }

    /// `f(z)/z` as a Stieltjes function with the same measure.
    pub fn dual(&self) -> StieltjesFunction {
        StieltjesFunction { a: self.b, b: self.a, mu: self.mu.clone(), builtin: None }
    }

    /// Both sides of `(1/t) ∫ (1 - e^{-st})/s μ(ds) ≤ 2 f(1/t)`.
    pub fn lemma31_gap(&self, t: f64, tol: f64) -> Result<(f64, f64)> {
        if self.a != 0.0 || self.b != 0.0 {
            return Err(Error::PreconditionFailed("the inequality is stated for a = b = 0".into()));
        }
        check_point(t)?;
        check_tol(tol)?;
        let rhs = 2.0 * self.eval(1.0 / t, tol)?;
        if self.mu.is_zero() {
            return Ok((0.0, rhs));
        }
        let integral = self.mu.integrate_kernel_with(
            |s| -(-s * t).exp_m1() / s,
            KernelShape::new(0.0, 1.0, 1.0 / t),
            &QuadOptions::relative(tol),
        )?;
        Ok((integral.value / t, rhs))
    }

    /// The Lévy–Khintchine triple for builtins where it is known.
    pub fn levy_triple(&self) -> Option<LevyTriple> {
        match self.builtin? {
            CbfBuiltin::Power(alpha) => LevyTriple::stable(alpha).ok(),
            CbfBuiltin::Identity => Some(LevyTriple { a: 0.0, b: 1.0, nu: RadonMeasure::zero() }),
            CbfBuiltin::Constant(a) => Some(LevyTriple { a, b: 0.0, nu: RadonMeasure::zero() }),
            CbfBuiltin::Atom { .. } => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FunctionDoc {
            builtin: self.builtin.map(|b| b.name()),
            a: self.a,
            b: self.b,
            mu: Some(MeasureDoc::try_from(&self.mu)?),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FunctionDoc = serde_json::from_str(text)?;
        if let Some(name) = doc.builtin {
            return Self::parse(&name);
        }
        let mu = match doc.mu {
            Some(m) => RadonMeasure::try_from(m)?,
            None => RadonMeasure::zero(),
        };
        Self::new(doc.a, doc.b, mu)
    }
}

/// `f(z) = a + bz + ∫ (1 - e^{-zs}) ν(ds)` with a Lévy measure `ν`.
#[derive(Debug, Clone)]
pub struct LevyTriple {
    pub a: f64,
    pub b: f64,
    pub nu: RadonMeasure,
}

impl LevyTriple {
    pub fn new(a: f64, b: f64, nu: RadonMeasure) -> Result<Self> {
        check_coefficients(a, b)?;
        if nu.class() != MeasureClass::Levy && !nu.is_zero() {
            return Err(Error::InvalidArgument("ν must be a Lévy-class measure".into()));
        }
        Ok(LevyTriple { a, b, nu })
    }

    /// `z^α` with `ν(ds) = α/Γ(1-α) s^{-1-α} ds`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("stable index {alpha} must lie in (0, 1)")));
        }
        let coefficient = alpha / statrs::function::gamma::gamma(1.0 - alpha);
        let nu = RadonMeasure::with_class(
            Vec::new(),
            Some(crate::measure::Density::from_kind(DensityKind::Power { exponent: 1.0 + alpha, coefficient })?),
            MeasureClass::Levy,
        )?;
        Ok(LevyTriple { a: 0.0, b: 0.0, nu })
    }

    pub fn eval(&self, z: f64, tol: f64) -> Result<f64> {
        check_tol(tol)?;
        if z == 0.0 {
            return Ok(self.a);
        }
        check_point(z)?;
        let mut v = self.a + self.b * z;
        if !self.nu.is_zero() {
            let r = self.nu.integrate_kernel_with(
                |s| -(-z * s).exp_m1(),
                KernelShape::new(1.0, 0.0, 1.0 / z),
                &QuadOptions::relative(tol),
            )?;
            v += r.value;
        }
        Ok(v)
    }
}

/// `z ↦ f(g(z))`, evaluated pointwise only.
#[derive(Debug, Clone)]
pub struct Composition {
    pub f: CompleteBernsteinFunction,
    pub g: StieltjesFunction,
}

impl Composition {
    pub fn eval(&self, z: f64, tol: f64) -> Result<f64> {
        self.f.eval(self.g.eval(z, tol)?, tol)
    }
}

pub fn compose(f: &CompleteBernsteinFunction, g: &StieltjesFunction) -> Composition {
    Composition { f: f.clone(), g: g.clone() }
}

/// Slowly varying functions used to build counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlowlyVaryingFunction {
    /// `log(τ + 2)`.
    Log,
    /// `log²(τ + 2)`.
    LogSquared,
    /// `log(τ + 2) · log(log(τ + 3))`.
    LogLogLog,
}

/// Sampled check of `ε(λτ)/ε(τ) → 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowVariationReport {
    /// `(λ, ε(λτ)/ε(τ))` at the top of the grid.
    pub ratios: Vec<(f64, f64)>,
    pub grid_top: f64,
    pub within: bool,
}

impl SlowlyVaryingFunction {
    pub const ALL: [SlowlyVaryingFunction; 3] =
        [SlowlyVaryingFunction::Log, SlowlyVaryingFunction::LogSquared, SlowlyVaryingFunction::LogLogLog];

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "log" => Ok(SlowlyVaryingFunction::Log),
            "log2" | "log-squared" => Ok(SlowlyVaryingFunction::LogSquared),
            "qqq" | "loglog" | "log-loglog" => Ok(SlowlyVaryingFunction::LogLogLog),
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SlowlyVaryingFunction::Log => "log",
            SlowlyVaryingFunction::LogSquared => "log2",
            SlowlyVaryingFunction::LogLogLog => "qqq",
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let l2 = (tau + 2.0).ln();
        match self {
            SlowlyVaryingFunction::Log => l2,
            SlowlyVaryingFunction::LogSquared => l2 * l2,
            SlowlyVaryingFunction::LogLogLog => l2 * (tau + 3.0).ln().ln(),
        }
    }

    /// `ε(e^v)`, accurate for arbitrarily large `v`.
    pub fn eval_at_log(&self, v: f64) -> f64 {
        let log_plus = |c: f64| {
            if v > 0.0 {
                v + (c * (-v).exp()).ln_1p()
            } else {
                (v.exp() + c).ln()
            }
        };
        let l2 = log_plus(2.0);
        match self {
            SlowlyVaryingFunction::Log => l2,
            SlowlyVaryingFunction::LogSquared => l2 * l2,
            SlowlyVaryingFunction::LogLogLog => l2 * log_plus(3.0).ln(),
        }
    }

    /// Samples `ε(λτ)/ε(τ)` for `λ ∈ {2, 5, 10}` on `τ = 10^k` up to `grid_top`
    /// and accepts when the ratios at the top are within 10% of one.
    pub fn check_sampled(&self, grid_top: f64) -> SlowVariationReport {
        let v = grid_top.ln();
        let base = self.eval_at_log(v);
        let ratios: Vec<(f64, f64)> =
            [2.0f64, 5.0, 10.0].iter().map(|&lambda| (lambda, self.eval_at_log(v + lambda.ln()) / base)).collect();
        let within = ratios.iter().all(|(_, r)| (r - 1.0).abs() <= 0.1);
        SlowVariationReport { ratios, grid_top, within }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::geometric;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn g_half() -> StieltjesFunction {
        StieltjesFunction::power(0.5).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_relative_eq!(g_half().eval(4.0, 1e-10).unwrap(), 0.5, max_relative = 1e-10);
        let one = StieltjesFunction::new(1.0, 0.0, RadonMeasure::zero()).unwrap();
        assert_eq!(one.eval(3.7, 1e-10).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(
            StieltjesFunction::log_ratio().eval(e, 1e-10).unwrap(),
            1.0 / (e - 1.0),
            max_relative = 1e-10
        );
    }

    #[test]
    fn derivative_examples() {
        assert_relative_eq!(g_half().derivative(4.0, 1e-10).unwrap(), -0.0625, max_relative = 1e-10);
        let one = StieltjesFunction::new(1.0, 0.0, RadonMeasure::zero()).unwrap();
        assert_eq!(one.derivative(2.0, 1e-10).unwrap(), 0.0);
        let inv = StieltjesFunction::new(0.0, 1.0, RadonMeasure::zero()).unwrap();
        assert_eq!(inv.derivative(2.0, 1e-10).unwrap(), -0.25);
    }

    #[test]
    fn cbf_examples() {
        let f = g_half().dual();
        assert_relative_eq!(f.eval(4.0, 1e-10).unwrap(), 2.0, max_relative = 1e-10);
        let id = CompleteBernsteinFunction::identity();
        assert_eq!(id.eval(3.3, 1e-10).unwrap(), 3.3);
        let c = CompleteBernsteinFunction::new(3.0, 0.0, RadonMeasure::zero()).unwrap();
        assert_eq!(c.eval(10.0, 1e-10).unwrap(), 3.0);
    }

    #[test]
    fn limits_examples() {
        let l = g_half().limits(1e-8).unwrap();
        assert!(l.a.abs() < 1e-8 && l.b.abs() < 1e-8 && l.g_at_zero.is_infinite(), "{l:?}");
        let affine = StieltjesFunction::new(1.0, 2.0, RadonMeasure::zero()).unwrap();
        let l = affine.limits(1e-8).unwrap();
        assert!((l.a - 1.0).abs() < 1e-8 && (l.b - 2.0).abs() < 1e-8 && l.g_at_zero.is_infinite(), "{l:?}");
        let l = StieltjesFunction::log_ratio().limits(1e-8).unwrap();
        assert!(l.a.abs() < 1e-8 && l.b.abs() < 1e-8 && l.g_at_zero.is_infinite(), "{l:?}");
        let l = StieltjesFunction::from_builtin(StieltjesBuiltin::Atom { location: 2.0, mass: 3.0 })
            .unwrap()
            .limits(1e-8)
            .unwrap();
        assert_relative_eq!(l.g_at_zero, 1.5, max_relative = 1e-8);
    }

    #[test]
    fn compose_examples() {
        let g = g_half();
        let h = compose(&CompleteBernsteinFunction::identity(), &g);
        assert_eq!(h.eval(2.5, 1e-10).unwrap(), g.eval(2.5, 1e-10).unwrap());
        let sqrt = CompleteBernsteinFunction::power(0.5).unwrap();
        assert_relative_eq!(compose(&sqrt, &g).eval(16.0, 1e-10).unwrap(), 0.5, max_relative = 1e-9);
        let frac = CompleteBernsteinFunction::from_builtin(CbfBuiltin::Atom { location: 1.0, mass: 1.0 }).unwrap();
        assert_relative_eq!(compose(&frac, &g).eval(1.0, 1e-10).unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn duality_examples() {
        let grid = geometric(1e-2, 1e2, 40);
        for g in [g_half(), StieltjesFunction::log_ratio(), StieltjesFunction::log1p_recip()] {
            let rep = g.duality_check(&grid, 1e-8).unwrap();
            assert!(rep.passes(1e-8), "{}: {rep:?}", g.name());
        }
        let inv = StieltjesFunction::new(0.0, 1.0, RadonMeasure::zero()).unwrap();
        let rep = inv.duality_check(&grid, 1e-8).unwrap();
        assert!(rep.passes(1e-12));
        let constant = StieltjesFunction::new(1.0, 0.0, RadonMeasure::zero()).unwrap();
        assert!(matches!(constant.duality_check(&grid, 1e-8), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn laplace_density_examples() {
        let m1 = g_half().laplace_density(1.0, 1e-10).unwrap();
        assert_relative_eq!(m1, 1.0 / PI.sqrt(), max_relative = 1e-9);
        assert!(m1 <= g_half().eval(1.0, 1e-10).unwrap());
        let atom = StieltjesFunction::from_builtin(StieltjesBuiltin::Atom { location: 1.0, mass: 1.0 }).unwrap();
        assert_relative_eq!(atom.laplace_density(2.0, 1e-12).unwrap(), (-2f64).exp(), max_relative = 1e-12);
        assert_eq!(atom.laplace_density(0.0, 1e-12).unwrap(), 1.0);
        assert!(g_half().laplace_density(0.0, 1e-8).is_err());
    }

    #[test]
    fn laplace_density_reproduces_g() {
        // g(t) = ∫ e^{-ts} m(s) ds with m(s) = s^{-1/2}/√π for g_{1/2}
        let g = g_half();
        for t in [0.5, 1.0, 3.0] {
            let r = crate::quad::integrate(
                |s| (-t * s).exp() * g.laplace_density(s, 1e-12).unwrap(),
                crate::quad::Interval::half_line(),
                crate::quad::EndpointHint::both(0.5, 1.0),
                1e-9,
            )
            .unwrap();
            assert_relative_eq!(r.value, g.eval(t, 1e-10).unwrap(), max_relative = 1e-7);
        }
    }

    #[test]
    fn lemma31_examples() {
        let f = CompleteBernsteinFunction::power(0.5).unwrap();
        let (lhs, rhs) = f.lemma31_gap(1.0, 1e-10).unwrap();
        assert_relative_eq!(rhs, 2.0, max_relative = 1e-9);
        assert!(lhs <= rhs);
        let atom = CompleteBernsteinFunction::from_builtin(CbfBuiltin::Atom { location: 1.0, mass: 1.0 }).unwrap();
        let (lhs, rhs) = atom.lemma31_gap(1e-4, 1e-12).unwrap();
        assert_relative_eq!(lhs, -(-1e-4f64).exp_m1() / 1e-4, max_relative = 1e-12);
        assert_relative_eq!(rhs, 2.0 * 1e4 / (1e4 + 1.0), max_relative = 1e-12);
        assert!(lhs < rhs);
        let zero = CompleteBernsteinFunction::new(0.0, 0.0, RadonMeasure::zero()).unwrap();
        assert_eq!(zero.lemma31_gap(2.0, 1e-8).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn stable_levy_triple_matches_power() {
        for alpha in [0.25, 0.5, 0.75] {
            let lk = LevyTriple::stable(alpha).unwrap();
            for z in [0.1, 1.0, 4.0, 30.0] {
                assert_relative_eq!(lk.eval(z, 1e-10).unwrap(), z.powf(alpha), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn parse_builtins() {
        assert_eq!(
            StieltjesFunction::parse("builtin:power(0.25)").unwrap().builtin(),
            Some(StieltjesBuiltin::Power(0.25))
        );
        assert!(matches!(StieltjesFunction::parse("builtin:invalid"), Err(Error::UnknownBuiltin(_))));
        assert!(StieltjesFunction::parse("power(1.5)").is_err());
        assert_eq!(CompleteBernsteinFunction::parse("sqrt").unwrap().builtin(), Some(CbfBuiltin::Power(0.5)));
    }

    #[test]
    fn json_round_trip() {
        let g = StieltjesFunction::log1p_recip();
        let text = g.to_json().unwrap();
        let back = StieltjesFunction::from_json(&text).unwrap();
        assert_eq!(back.builtin(), g.builtin());
        let triple = StieltjesFunction::from_json(r#"{"a":1,"b":2,"mu":{"atoms":[[1,1]]}}"#).unwrap();
        assert_relative_eq!(triple.eval(1.0, 1e-12).unwrap(), 1.0 + 2.0 + 0.5);
        let short = StieltjesFunction::from_json(r#"{"builtin":"power(0.5)"}"#).unwrap();
        assert_relative_eq!(short.eval(4.0, 1e-10).unwrap(), 0.5, max_relative = 1e-10);
    }

    #[test]
    fn slowly_varying_builtins() {
        for eps in SlowlyVaryingFunction::ALL {
            for tau in [0.0f64, 1.0, 1e3, 1e10] {
                assert_relative_eq!(eps.eval_at_log(f64::ln(tau.max(1e-300))), eps.eval(tau), max_relative = 1e-12);
            }
            assert!(eps.check_sampled(1e30).within, "{eps:?}");
        }
    }

    #[test]
    fn exponential_inequality_on_grid() {
        for i in 0..=10_000 {
            let tau = i as f64 * 0.01;
            assert!(tau * (-tau).exp() <= 4.0 / ((1.0 + tau) * (1.0 + tau)) * (1.0 + 4.0 * f64::EPSILON));
        }
    }

    fn builtins() -> Vec<StieltjesFunction> {
        vec![
            StieltjesFunction::power(0.25).unwrap(),
            g_half(),
            StieltjesFunction::power(0.75).unwrap(),
            StieltjesFunction::log_ratio(),
            StieltjesFunction::log1p_recip(),
            StieltjesFunction::reciprocal_log(),
        ]
    }

    #[test]
    fn builtins_match_closed_forms() {
        for g in builtins() {
            for z in geometric(1e-2, 1e2, 40) {
                let v = g.eval(z, 1e-10).unwrap();
                let c = g.closed_form(z).unwrap();
                assert!((v - c).abs() <= 1e-6 * c, "{} at {z}: {v} vs {c}", g.name());
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in builtins() {
            for z in geometric(1e-2, 1e2, 15) {
                let d = g.derivative(z, 1e-12).unwrap();
                let h = 1e-4 * z;
                let fd = (g.eval(z + h, 1e-13).unwrap() - g.eval(z - h, 1e-13).unwrap()) / (2.0 * h);
                assert!((d - fd).abs() <= (1e-5 * d.abs()).max(1e-8), "{} at {z}: {d} vs {fd}", g.name());
                let cd = g.closed_derivative(z).unwrap();
                assert!((d - cd).abs() <= 1e-6 * cd.abs(), "{} at {z}: {d} vs {cd}", g.name());
                assert!(d <= 0.0);
                assert!(d.abs() <= g.eval(z, 1e-12).unwrap() / z + 1e-10);
            }
        }
    }

    #[test]
    fn dual_cbf_matches_z_times_g() {
        for g in builtins() {
            let f = g.dual();
            for z in geometric(1e-2, 1e2, 9) {
                let lhs = f.eval(z, 1e-10).unwrap();
                let rhs = z * g.eval(z, 1e-10).unwrap();
                assert!((lhs - rhs).abs() <= 2e-10 * rhs.max(1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn composition_with_powers_is_convex_and_decreasing(alpha in 0.1f64..0.9, gamma in 0.1f64..0.9, z0 in 0.05f64..20.0) {
            let h = compose(&CompleteBernsteinFunction::power(alpha).unwrap(), &StieltjesFunction::power(gamma).unwrap());
            let tol = 1e-10;
            let dz = 0.1 * z0;
            let (a, b, c) = (h.eval(z0 - dz, tol).unwrap(), h.eval(z0, tol).unwrap(), h.eval(z0 + dz, tol).unwrap());
            prop_assert!(a > b && b > c);
            prop_assert!(a + c - 2.0 * b >= -1e-8);
        }

        #[test]
        fn stieltjes_is_strictly_decreasing(z in 0.01f64..100.0, step in 0.01f64..1.0) {
            for g in [g_half(), StieltjesFunction::log_ratio()] {
                prop_assert!(g.eval(z, 1e-10).unwrap() > g.eval(z * (1.0 + step), 1e-10).unwrap());
            }
        }
    }
}
