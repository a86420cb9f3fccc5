//! Positive Radon measures on `(0, ∞)`: finitely many atoms plus an optional
//! density, and integration of kernels against them.
//!
//! Two admissibility regimes are supported. A *Stieltjes* measure must satisfy
//! `∫ μ(ds)/(1+s) < ∞`; a *Lévy* measure (the third entry of a
//! Lévy–Khintchine triple) must satisfy `∫ s/(1+s) ν(ds) < ∞`. Measures are
//! checked at construction and are immutable afterwards.

use crate::error::{Error, Result};
use crate::quad::{
    classify_increments, try_integrate, EndpointHint, Interval, LimitVerdict, ProbeOptions, QuadOptions, QuadResult,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Endpoint behaviour of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityHint {
    /// `density(s) ≲ s^{-at_zero}` near 0 and `≲ s^{-at_infinity}` near ∞.
    Power { at_zero: f64, at_infinity: f64 },
    /// Bounded density vanishing outside `(lower, upper)`.
    Support { lower: f64, upper: f64 },
    /// `density(s)·min(s, 1) ~ C |log s|^{-2}` at both ends; integrated in
    /// logarithmic coordinates with the far tails summed in closed form.
    Logarithmic,
    /// Nothing known.
    Unknown,
}

/// Registry of named densities, used for (de)serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    /// `coefficient · s^{-exponent}`.
    Power { exponent: f64, coefficient: f64 },
    /// `1/(1+s)`, the measure of `log z/(z-1)`.
    StieltjesLog,
    /// Lebesgue measure restricted to `(lower, upper)`.
    LebesgueWindow { lower: f64, upper: f64 },
    /// `(1+s)/(s(log²s + π²))`, the measure of `(z-1)/(z log z)`.
    ReciprocalLog,
    /// A caller-supplied closure.
    Custom(String),
}

impl DensityKind {
    pub fn name(&self) -> &str {
        match self {
            DensityKind::Power { .. } => "power",
            DensityKind::StieltjesLog => "stieltjes-log",
            DensityKind::LebesgueWindow { .. } => "lebesgue-window",
            DensityKind::ReciprocalLog => "reciprocal-log",
            DensityKind::Custom(name) => name,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            DensityKind::Power { exponent, coefficient } => vec![*exponent, *coefficient],
            DensityKind::LebesgueWindow { lower, upper } => vec![*lower, *upper],
            _ => Vec::new(),
        }
    }

    /// Looks up a registry entry by name and parameter array.
    pub fn from_registry(name: &str, params: &[f64]) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad parameters {params:?} for density `{name}`"));
        match name {
            "power" => match params {
                [e] => Ok(DensityKind::Power { exponent: *e, coefficient: 1.0 }),
                [e, c] if *c > 0.0 => Ok(DensityKind::Power { exponent: *e, coefficient: *c }),
                _ => Err(bad()),
            },
            "stieltjes-log" if params.is_empty() => Ok(DensityKind::StieltjesLog),
            "lebesgue-window" => match params {
                [a, b] if *a >= 0.0 && b > a => Ok(DensityKind::LebesgueWindow { lower: *a, upper: *b }),
                _ => Err(bad()),
            },
            "reciprocal-log" if params.is_empty() => Ok(DensityKind::ReciprocalLog),
            "stieltjes-log" | "reciprocal-log" => Err(bad()),
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }
}

#[derive(Clone)]
pub struct Density {
    kind: DensityKind,
    hint: DensityHint,
    f: ScalarFn,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density").field("kind", &self.kind).field("hint", &self.hint).finish()
    }
}

impl Density {
    pub fn from_kind(kind: DensityKind) -> Result<Self> {
        let (f, hint): (ScalarFn, DensityHint) = match kind {
            DensityKind::Power { exponent, coefficient } => (
                Arc::new(move |s: f64| coefficient * s.powf(-exponent)),
                DensityHint::Power { at_zero: exponent, at_infinity: exponent },
            ),
            DensityKind::StieltjesLog => {
                (Arc::new(|s: f64| 1.0 / (1.0 + s)), DensityHint::Power { at_zero: 0.0, at_infinity: 1.0 })
            }
            DensityKind::LebesgueWindow { lower, upper } => (
                Arc::new(move |s: f64| if s > lower && s < upper { 1.0 } else { 0.0 }),
                DensityHint::Support { lower, upper },
            ),
            DensityKind::ReciprocalLog => (
                Arc::new(|s: f64| {
                    let l = s.ln();
                    (1.0 + 1.0 / s) / (l * l + PI * PI)
                }),
                DensityHint::Logarithmic,
            ),
            DensityKind::Custom(ref name) => {
                return Err(Error::InvalidArgument(format!(
                    "custom density `{name}` needs a closure; use Density::custom"
                )))
            }
        };
        Ok(Density { kind, hint, f })
    }

    pub fn custom(name: impl Into<String>, hint: DensityHint, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Density { kind: DensityKind::Custom(name.into()), hint, f: Arc::new(f) }
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn hint(&self) -> DensityHint {
        self.hint
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }
}

/// Which integrability condition the measure must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeasureClass {
    /// `∫ μ(ds)/(1+s) < ∞`.
    #[default]
    Stieltjes,
    /// `∫ s/(1+s) ν(ds) < ∞`.
    Levy,
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub finite: bool,
    pub value: f64,
}

/// Shape of an integration kernel: `k(s) ~ s^{order_at_zero}` near 0,
/// `|k(s)| ≲ s^{-decay_at_infinity}` near ∞ (`f64::INFINITY` for exponential
/// decay), with its natural length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelShape {
    pub order_at_zero: f64,
    pub decay_at_infinity: f64,
    pub scale: f64,
}

impl KernelShape {
    /// Bounded near zero, `O(1/s)` at infinity: `1/(z+s)`, `z/(z+s)` and the like.
    pub fn resolvent(scale: f64) -> Self {
        KernelShape { order_at_zero: 0.0, decay_at_infinity: 1.0, scale }
    }

    pub fn new(order_at_zero: f64, decay_at_infinity: f64, scale: f64) -> Self {
        KernelShape { order_at_zero, decay_at_infinity, scale }
    }
}

impl Default for KernelShape {
    fn default() -> Self {
        KernelShape::resolvent(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct RadonMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
    class: MeasureClass,
    admissibility: Option<Admissibility>,
}

impl RadonMeasure {
    /// Builds a Stieltjes-class measure and checks admissibility.
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        Self::with_class(atoms, density, MeasureClass::Stieltjes)
    }

    pub fn with_class(atoms: Vec<(f64, f64)>, density: Option<Density>, class: MeasureClass) -> Result<Self> {
        let mut mu = Self::unchecked(atoms, density, class)?;
        let adm = mu.check_admissible(1e-10).map_err(|e| match e {
            Error::Inconclusive(m) => Error::AdmissibilityViolation(format!("could not be certified: {m}")),
            other => other,
        })?;
        if !adm.finite {
            return Err(Error::AdmissibilityViolation(match class {
                MeasureClass::Stieltjes => "∫ μ(ds)/(1+s) diverges".into(),
                MeasureClass::Levy => "∫ s/(1+s) ν(ds) diverges".into(),
            }));
        }
        mu.admissibility = Some(adm);
        Ok(mu)
    }

    /// Validates atoms only; admissibility is left to [`check_admissible`](Self::check_admissible).
    pub fn unchecked(atoms: Vec<(f64, f64)>, density: Option<Density>, class: MeasureClass) -> Result<Self> {
        for &(s, m) in &atoms {
            if !(s > 0.0 && s.is_finite()) || !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "atom ({s}, {m}) must have positive finite location and mass"
                )));
            }
        }
        Ok(RadonMeasure { atoms, density, class, admissibility: None })
    }

    pub fn zero() -> Self {
        RadonMeasure {
            atoms: Vec::new(),
            density: None,
            class: MeasureClass::Stieltjes,
            admissibility: Some(Admissibility { finite: true, value: 0.0 }),
        }
    }

    pub fn atom(location: f64, mass: f64) -> Result<Self> {
        Self::new(vec![(location, mass)], None)
    }

    pub fn from_density(kind: DensityKind) -> Result<Self> {
        Self::new(Vec::new(), Some(Density::from_kind(kind)?))
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn class(&self) -> MeasureClass {
        self.class
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_none()
    }

    /// Value of the admissibility integral computed at construction.
    pub fn admissibility(&self) -> Option<Admissibility> {
        self.admissibility
    }

    /// Evaluates the admissibility integral of the measure's class.
    ///
    /// Hints decide divergence when they are available; otherwise partial
    /// integrals over `(10^{-k}, 10^k)` are classified.
    pub fn check_admissible(&self, tol: f64) -> Result<Admissibility> {
        let (kernel, shape): (fn(f64) -> f64, KernelShape) = match self.class {
            MeasureClass::Stieltjes => (|s| 1.0 / (1.0 + s), KernelShape::resolvent(1.0)),
            MeasureClass::Levy => (|s| s / (1.0 + s), KernelShape::new(1.0, 0.0, 1.0)),
        };
        let atom_part: f64 = self.atoms.iter().map(|&(s, m)| kernel(s) * m).sum();
        let Some(density) = &self.density else {
            return Ok(Admissibility { finite: true, value: atom_part });
        };
        let opts = QuadOptions::relative(tol);
        if density.hint == DensityHint::Unknown {
            return self.admissible_by_growth(density, kernel, atom_part, &opts);
        }
        match density_integral(density, &kernel, shape, 0.0, f64::INFINITY, &opts) {
            Ok(r) => Ok(Admissibility { finite: true, value: atom_part + r.value }),
            Err(Error::InvalidHint(_)) => Ok(Admissibility { finite: false, value: f64::INFINITY }),
            Err(e) => Err(e),
        }
    }

    fn admissible_by_growth(
        &self,
        density: &Density,
        kernel: fn(f64) -> f64,
        atom_part: f64,
        opts: &QuadOptions,
    ) -> Result<Admissibility> {
        let f = |s: f64| Ok(kernel(s) * density.eval(s));
        let mut increments = Vec::new();
        let mut total = try_integrate(f, Interval::new(0.1, 10.0)?, EndpointHint::none(), opts)?.value;
        for k in 1..=8 {
            let lo = 10f64.powi(-k - 1);
            let hi = 10f64.powi(-k);
            let a = try_integrate(f, Interval::new(lo, hi)?, EndpointHint::none(), opts)?.value;
            let b = try_integrate(f, Interval::new(1.0 / hi, 1.0 / lo)?, EndpointHint::none(), opts)?.value;
            increments.push(a + b);
            total += a + b;
        }
        match classify_increments(&increments, total, &ProbeOptions::default()) {
            LimitVerdict::Converges(v) => Ok(Admissibility { finite: true, value: atom_part + v }),
            LimitVerdict::Diverges => Ok(Admissibility { finite: false, value: f64::INFINITY }),
            LimitVerdict::Inconclusive => {
                Err(Error::Inconclusive("partial admissibility integrals neither stabilize nor grow".into()))
            }
        }
    }

    fn ensure_admissible(&self) -> Result<()> {
        match self.admissibility {
            Some(a) if !a.finite => Err(Error::AdmissibilityViolation("measure failed its admissibility check".into())),
            _ => Ok(()),
        }
    }

    /// `Σ k(s_j) m_j + ∫ k(s) density(s) ds` for a kernel bounded near 0 and
    /// `O(1/s)` at infinity.
    pub fn integrate_kernel<K>(&self, k: K, tol: f64) -> Result<QuadResult>
    where
        K: Fn(f64) -> f64,
    {
        self.integrate_kernel_with(k, KernelShape::default(), &QuadOptions::with_tol(tol))
    }

    pub fn integrate_kernel_with<K>(&self, k: K, shape: KernelShape, opts: &QuadOptions) -> Result<QuadResult>
    where
        K: Fn(f64) -> f64,
    {
        self.integrate_kernel_on(k, 0.0, f64::INFINITY, shape, opts)
    }

    /// Integrates over `(lower, upper]` only.
    pub fn integrate_kernel_on<K>(
        &self,
        k: K,
        lower: f64,
        upper: f64,
        shape: KernelShape,
        opts: &QuadOptions,
    ) -> Result<QuadResult>
    where
        K: Fn(f64) -> f64,
    {
        self.ensure_admissible()?;
        if !(lower >= 0.0) || !(upper > lower) {
            return Err(Error::InvalidInterval { lower, upper });
        }
        let atom_part: f64 = self.atoms.iter().filter(|(s, _)| *s > lower && *s <= upper).map(|&(s, m)| k(s) * m).sum();
        let mut out = QuadResult { value: atom_part, abs_error_estimate: 0.0, subdivisions: 0 };
        if let Some(density) = &self.density {
            let r = density_integral(density, &k, shape, lower, upper, opts)?;
            out.value += r.value;
            out.abs_error_estimate = r.abs_error_estimate;
            out.subdivisions = r.subdivisions;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeasureDoc::try_from(self)?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

const LOG_EDGE: f64 = 700.0;

/// Integrates `k · density` over `(lower, upper)`, choosing hints and
/// coordinates from the density's declared shape.
fn density_integral<K>(
    density: &Density,
    k: &K,
    shape: KernelShape,
    lower: f64,
    upper: f64,
    opts: &QuadOptions,
) -> Result<QuadResult>
where
    K: Fn(f64) -> f64,
{
    let integrand = |s: f64| Ok(k(s) * density.eval(s));
    let mut opts = opts.clone();
    if shape.scale > lower && shape.scale < upper && shape.scale.is_finite() {
        opts.breakpoints.push(shape.scale);
    }
    match density.hint {
        DensityHint::Power { at_zero, at_infinity } => {
            let mut hint = EndpointHint::none();
            if lower == 0.0 {
                let p = at_zero - shape.order_at_zero;
                if p >= 1.0 {
                    return Err(Error::InvalidHint(format!("density·kernel ~ s^-{p} is not integrable at 0")));
                }
                if p > 0.0 {
                    hint.singularity_at_lower = Some(p);
                }
            }
            if upper.is_infinite() {
                let q = if shape.decay_at_infinity.is_infinite() {
                    1.0
                } else {
                    (at_infinity + shape.decay_at_infinity - 1.0).min(1.0)
                };
                if q <= 0.0 {
                    return Err(Error::InvalidHint(format!(
                        "density·kernel decays like s^-{} at ∞, which is not integrable",
                        1.0 + q
                    )));
                }
                hint.tail_at_upper = Some(q);
            }
            try_integrate(integrand, Interval::new(lower, upper)?, hint, &opts)
        }
        DensityHint::Support { lower: a, upper: b } => {
            let lo = lower.max(a);
            let hi = upper.min(b);
            if !(hi > lo) {
                return Ok(QuadResult { value: 0.0, abs_error_estimate: 0.0, subdivisions: 0 });
            }
            try_integrate(integrand, Interval::new(lo, hi)?, EndpointHint::none(), &opts)
        }
        DensityHint::Logarithmic => {
            if upper.is_infinite() && shape.decay_at_infinity < 1.0 {
                return Err(Error::InvalidHint("kernel decays too slowly for a logarithmic density".into()));
            }
            // integrate F(v) = k(e^v) density(e^v) e^v over log s in (lo, hi),
            // cutting at |v| = LOG_EDGE and integrating a fitted tail beyond the cut
            let lo = if lower > 0.0 { lower.ln().max(-LOG_EDGE) } else { -LOG_EDGE };
            let hi = if upper.is_finite() { upper.ln().min(LOG_EDGE) } else { LOG_EDGE };
            if !(hi > lo) {
                return Ok(QuadResult { value: 0.0, abs_error_estimate: 0.0, subdivisions: 0 });
            }
            let big = |v: f64| {
                let s = v.exp();
                k(s) * density.eval(s) * s
            };
            let mut logopts = QuadOptions { breakpoints: Vec::new(), ..opts.clone() };
            let pivot = shape.scale.ln();
            logopts.breakpoints.extend([pivot, pivot - 40.0, pivot + 40.0, 0.0]);
            let r = try_integrate(|x| Ok(big(x + lo)), Interval::new(0.0, hi - lo)?, EndpointHint::none(), &logopts)?;
            let mut value = r.value;
            for edge in [-LOG_EDGE, LOG_EDGE] {
                let outside = (edge < 0.0 && lower == 0.0) || (edge > 0.0 && upper.is_infinite());
                if outside {
                    // fit F(v) ≈ C/v² + D/v⁴ at two points and integrate the fit
                    let inner = 0.8 * edge;
                    let a = big(edge) * edge * edge;
                    let b = big(inner) * inner * inner;
                    let d = (a - b) / (edge.powi(-2) - inner.powi(-2));
                    let c = a - d / (edge * edge);
                    let tail = c / LOG_EDGE + d / (3.0 * LOG_EDGE.powi(3));
                    if tail.is_finite() {
                        value += tail;
                    }
                }
            }
            Ok(QuadResult { value, ..r })
        }
        DensityHint::Unknown => try_integrate(integrand, Interval::new(lower, upper)?, EndpointHint::none(), &opts),
    }
}

impl QuadOptions {
    /// Relative tolerance only, for integrals of nonnegative integrands whose
    /// value may be arbitrarily small.
    pub fn relative(tol: f64) -> Self {
        QuadOptions::tolerances(tol, 1e-300)
    }
}

/// JSON form of a measure: atoms as `[location, mass]` pairs, the density by
/// registry name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityDoc>,
    #[serde(default)]
    pub class: MeasureClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDoc {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl TryFrom<&RadonMeasure> for MeasureDoc {
    type Error = Error;

    fn try_from(mu: &RadonMeasure) -> Result<Self> {
        let density = match &mu.density {
            None => None,
            Some(d) => match d.kind() {
                DensityKind::Custom(name) => {
                    return Err(Error::Serialization(format!("custom density `{name}` has no registry entry")))
                }
                kind => Some(DensityDoc { name: kind.name().to_string(), params: kind.params() }),
            },
        };
        Ok(MeasureDoc { atoms: mu.atoms.iter().map(|&(s, m)| [s, m]).collect(), density, class: mu.class })
    }
}

impl TryFrom<MeasureDoc> for RadonMeasure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let density = match doc.density {
            None => None,
            Some(d) => Some(Density::from_kind(DensityKind::from_registry(&d.name, &d.params)?)?),
        };
        RadonMeasure::with_class(doc.atoms.into_iter().map(|[s, m]| (s, m)).collect(), density, doc.class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn half_power() -> RadonMeasure {
        RadonMeasure::from_density(DensityKind::Power { exponent: 0.5, coefficient: 1.0 / PI }).unwrap()
    }

    #[test]
    fn atom_evaluation() {
        let mu = RadonMeasure::atom(1.0, 2.0).unwrap();
        let r = mu.integrate_kernel(|s| s, 1e-10).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn half_power_density_against_resolvent_kernel() {
        // ∫ s^{-1/2}/(π(4+s)) ds = 4^{-1/2}
        let r = half_power().integrate_kernel(|s| 1.0 / (4.0 + s), 1e-10).unwrap();
        assert_relative_eq!(r.value, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn stieltjes_log_density_squared_kernel() {
        let mu = RadonMeasure::from_density(DensityKind::StieltjesLog).unwrap();
        let r = mu.integrate_kernel(|s| 1.0 / (1.0 + s), 1e-10).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn admissibility_examples() {
        let a = RadonMeasure::atom(1.0, 1.0).unwrap().check_admissible(1e-10).unwrap();
        assert!(a.finite);
        assert_eq!(a.value, 0.5);

        let b = half_power().check_admissible(1e-10).unwrap();
        assert!(b.finite);
        assert_relative_eq!(b.value, 1.0, max_relative = 1e-9);

        let lebesgue = RadonMeasure::unchecked(
            Vec::new(),
            Some(Density::from_kind(DensityKind::Power { exponent: 0.0, coefficient: 1.0 }).unwrap()),
            MeasureClass::Stieltjes,
        )
        .unwrap();
        let c = lebesgue.check_admissible(1e-10).unwrap();
        assert!(!c.finite);
    }

    #[test]
    fn lebesgue_is_rejected_at_construction() {
        let r = RadonMeasure::from_density(DensityKind::Power { exponent: 0.0, coefficient: 1.0 });
        assert!(matches!(r, Err(Error::AdmissibilityViolation(_))));
    }

    #[test]
    fn unchecked_inadmissible_measure_refuses_integration() {
        let mut mu = RadonMeasure::unchecked(
            Vec::new(),
            Some(Density::from_kind(DensityKind::Power { exponent: 0.0, coefficient: 1.0 }).unwrap()),
            MeasureClass::Stieltjes,
        )
        .unwrap();
        mu.admissibility = Some(mu.check_admissible(1e-8).unwrap());
        assert!(matches!(mu.integrate_kernel(|_| 1.0, 1e-8), Err(Error::AdmissibilityViolation(_))));
    }

    #[test]
    fn bad_atoms_rejected() {
        assert!(RadonMeasure::atom(0.0, 1.0).is_err());
        assert!(RadonMeasure::atom(1.0, -1.0).is_err());
    }

    #[test]
    fn unknown_hint_falls_back_to_growth() {
        let ok =
            RadonMeasure::new(Vec::new(), Some(Density::custom("bump", DensityHint::Unknown, |s| (-s).exp()))).unwrap();
        assert_relative_eq!(ok.admissibility().unwrap().value, 0.596_347_362_323_194_1, max_relative = 1e-6);
        let bad = RadonMeasure::new(Vec::new(), Some(Density::custom("flat", DensityHint::Unknown, |_| 1.0)));
        assert!(matches!(bad, Err(Error::AdmissibilityViolation(_))));
    }

    #[test]
    fn levy_class_accepts_stable_density() {
        let nu = RadonMeasure::with_class(
            Vec::new(),
            Some(Density::from_kind(DensityKind::Power { exponent: 1.5, coefficient: 1.0 }).unwrap()),
            MeasureClass::Levy,
        );
        assert!(nu.is_ok());
        let not_stieltjes = RadonMeasure::from_density(DensityKind::Power { exponent: 1.5, coefficient: 1.0 });
        assert!(not_stieltjes.is_err());
    }

    #[test]
    fn reciprocal_log_density_is_admissible() {
        let mu = RadonMeasure::from_density(DensityKind::ReciprocalLog).unwrap();
        // ∫ μ/(1+s) = g(1) = 1 for g(z) = (z-1)/(z log z)
        assert_relative_eq!(mu.admissibility().unwrap().value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn restricted_integration_counts_atoms_once() {
        let mu = RadonMeasure::new(
            vec![(0.5, 1.0), (2.0, 3.0)],
            Some(Density::from_kind(DensityKind::StieltjesLog).unwrap()),
        )
        .unwrap();
        let opts = QuadOptions::relative(1e-12);
        let lo = mu.integrate_kernel_on(|_| 1.0, 0.0, 1.0, KernelShape::default(), &opts).unwrap().value;
        let hi = mu
            .integrate_kernel_on(|s| 1.0 / (1.0 + s), 1.0, f64::INFINITY, KernelShape::default(), &opts)
            .unwrap()
            .value;
        assert_relative_eq!(lo, 1.0 + 2f64.ln(), max_relative = 1e-11);
        assert_relative_eq!(hi, 1.0 + 0.5, max_relative = 1e-11);
    }

    #[test]
    fn json_round_trip() {
        let mu = RadonMeasure::new(
            vec![(1.0, 2.0)],
            Some(Density::from_kind(DensityKind::LebesgueWindow { lower: 0.0, upper: 1.0 }).unwrap()),
        )
        .unwrap();
        let text = mu.to_json().unwrap();
        assert_eq!(
            text,
            r#"{"atoms":[[1.0,2.0]],"density":{"name":"lebesgue-window","params":[0.0,1.0]},"class":"stieltjes"}"#
        );
        let back = RadonMeasure::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        let custom = RadonMeasure::new(
            Vec::new(),
            Some(Density::custom("c", DensityHint::Support { lower: 0.0, upper: 1.0 }, |_| 1.0)),
        )
        .unwrap();
        assert!(matches!(custom.to_json(), Err(Error::Serialization(_))));
        assert!(matches!(
            RadonMeasure::from_json(r#"{"density":{"name":"nope","params":[]}}"#),
            Err(Error::UnknownBuiltin(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn positivity_and_monotonicity(z in 0.01f64..100.0, c in 0.0f64..3.0) {
            let mu = half_power();
            let tol = 1e-9;
            let k1 = |s: f64| 1.0 / (z + s) / (1.0 + c);
            let k2 = |s: f64| 1.0 / (z + s);
            let v1 = mu.integrate_kernel(k1, tol).unwrap().value;
            let v2 = mu.integrate_kernel(k2, tol).unwrap().value;
            prop_assert!(v1 >= -tol);
            prop_assert!(v1 <= v2 + 2.0 * tol);
        }

        #[test]
        fn atom_density_additivity(loc in 0.01f64..50.0, mass in 0.1f64..5.0, z in 0.05f64..20.0) {
            let tol = 1e-9;
            let dens = Density::from_kind(DensityKind::StieltjesLog).unwrap();
            let both = RadonMeasure::new(vec![(loc, mass)], Some(dens.clone())).unwrap();
            let k = |s: f64| 1.0 / (z + s);
            let whole = both.integrate_kernel(k, tol).unwrap().value;
            let atoms = mass / (z + loc);
            let dens_only = RadonMeasure::new(Vec::new(), Some(dens)).unwrap().integrate_kernel(k, tol).unwrap().value;
            prop_assert!((whole - (atoms + dens_only)).abs() <= tol * whole.abs().max(1.0));
        }
    }
}
