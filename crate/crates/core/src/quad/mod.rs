//! Adaptive quadrature for improper integrals on subsets of `(0, ∞)`.
//!
//! The engine is a globally adaptive Gauss–Kronrod (G10/K21) scheme. Before
//! subdivision starts, endpoint behaviour described by an [`EndpointHint`] is
//! removed by a change of variables:
//!
//! * an algebraic singularity `f(s) ~ (s - a)^{-p}` at the lower endpoint is
//!   flattened by `s = a + (b - a) τ^{1/(1-p)}`;
//! * an infinite upper limit is mapped onto `(0, 1)` by `s = c / w`; a tail
//!   `f(s) ~ s^{-1-q}` then becomes a singularity of order `1 - q` at `w = 0`,
//!   which is flattened the same way.
//!
//! Panels are refined in a fixed order (largest error first, ties broken by
//! creation order), so results are bit-reproducible for identical inputs.

mod probe;

pub use probe::{classify_increments, classify_sequence, probe_limit, LimitVerdict, ProbeOptions};

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default relative (and absolute) tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default subdivision budget, counted in panels.
pub const DEFAULT_MAX_PANELS: usize = 10_000;

/// An integration interval `(lower, upper)` with `0 <= lower < upper <= ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) || !lower.is_finite() || !(upper > lower) {
            return Err(Error::InvalidInterval { lower, upper });
        }
        Ok(Interval { lower, upper })
    }

    /// The half line `(0, ∞)`.
    pub fn half_line() -> Self {
        Interval { lower: 0.0, upper: f64::INFINITY }
    }

    /// `(lower, ∞)`.
    pub fn from(lower: f64) -> Result<Self> {
        Self::new(lower, f64::INFINITY)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.upper.is_infinite()
    }
}

/// Declared endpoint behaviour of an integrand.
///
/// `singularity_at_lower = Some(p)` means `|f(s)| ≲ (s - lower)^{-p}` near the
/// lower endpoint, with `p < 1`. `tail_at_upper = Some(q)` means
/// `|f(s)| ≲ s^{-1-q}` as `s → ∞`, with `q > 0`. Overstating the strength of a
/// singularity (larger `p`, smaller `q`) is always safe. At a positive lower
/// endpoint the integrand is still evaluated at `s`, so the singular part
/// closer to `lower` than the spacing of doubles there is not seen.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EndpointHint {
    pub singularity_at_lower: Option<f64>,
    pub tail_at_upper: Option<f64>,
}

impl EndpointHint {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn singular(p: f64) -> Self {
        EndpointHint { singularity_at_lower: Some(p), tail_at_upper: None }
    }

    pub fn tail(q: f64) -> Self {
        EndpointHint { singularity_at_lower: None, tail_at_upper: Some(q) }
    }

    pub fn both(p: f64, q: f64) -> Self {
        EndpointHint { singularity_at_lower: Some(p), tail_at_upper: Some(q) }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.singularity_at_lower {
            if !(p < 1.0) {
                return Err(Error::InvalidHint(format!("singularity exponent {p} must be < 1")));
            }
        }
        if let Some(q) = self.tail_at_upper {
            if !(q > 0.0) {
                return Err(Error::InvalidHint(format!("tail exponent {q} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Interior points where the integrand changes scale or has a kink.
    /// Points outside the open interval are ignored.
    pub breakpoints: Vec<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: DEFAULT_TOL,
            abs_tol: DEFAULT_TOL,
            max_panels: DEFAULT_MAX_PANELS,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadOptions {
    /// Relative and absolute tolerance both set to `tol`.
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { rel_tol: tol, abs_tol: tol, ..Default::default() }
    }

    pub fn tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        QuadOptions { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }
}

/// Integrates `f` over `iv` to `max(tol·|value|, tol)`.
pub fn integrate<F>(f: F, iv: Interval, hint: EndpointHint, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be > 0")));
    }
    integrate_with(f, iv, hint, &QuadOptions::with_tol(tol))
}

pub fn integrate_with<F>(f: F, iv: Interval, hint: EndpointHint, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    try_integrate(|s| Ok(f(s)), iv, hint, opts)
}

/// Like [`integrate_with`] for integrands whose evaluation can fail; the first
/// failure aborts the integration.
pub fn try_integrate<F>(f: F, iv: Interval, hint: EndpointHint, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    hint.validate()?;
    if !(opts.rel_tol >= 0.0) || !(opts.abs_tol >= 0.0) || opts.rel_tol + opts.abs_tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerances must be nonnegative and not both zero".into()));
    }
    let pieces = build_pieces(iv, hint, &opts.breakpoints);
    Engine::new(&f, pieces, opts).run()
}

/// A sub-range of the original interval together with the change of
/// variables used on it. Every piece is integrated over its own `(t0, t1)`.
#[derive(Debug, Clone, Copy)]
enum Map {
    /// `s = t` on `(a, b)`.
    Identity { a: f64, b: f64 },
    /// `s = a + width · t^k` on `t ∈ (0, 1)`.
    Power { a: f64, width: f64, k: f64 },
    /// `s = c / t^k` on `t ∈ (0, 1)`.
    Tail { c: f64, k: f64 },
}

impl Map {
    fn domain(&self) -> (f64, f64) {
        match *self {
            Map::Identity { a, b } => (a, b),
            Map::Power { .. } | Map::Tail { .. } => (0.0, 1.0),
        }
    }

    /// Returns `(s, ds/dt)`, or `None` when the point collapses onto the
    /// singular endpoint in floating point.
    #[inline]
    fn apply(&self, t: f64) -> Option<(f64, f64)> {
        match *self {
            Map::Identity { .. } => Some((t, 1.0)),
            Map::Power { a, width, k } => {
                let tk = t.powf(k);
                if tk == 0.0 {
                    return None;
                }
                let s = a + width * tk;
                if s == a {
                    return None;
                }
                Some((s, width * k * tk / t))
            }
            Map::Tail { c, k } => {
                let tk = t.powf(k);
                let s = c / tk;
                if !s.is_finite() {
                    return None;
                }
                let jac = c * k / (tk * t);
                if !jac.is_finite() {
                    return None;
                }
                Some((s, jac))
            }
        }
    }
}

fn flatten_exponent(p: Option<f64>) -> Option<f64> {
    match p {
        Some(p) if p > 0.0 => Some(1.0 / (1.0 - p)),
        _ => None,
    }
}

fn build_pieces(iv: Interval, hint: EndpointHint, breakpoints: &[f64]) -> Vec<Map> {
    let mut cuts: Vec<f64> =
        breakpoints.iter().copied().filter(|&b| b.is_finite() && b > iv.lower && b < iv.upper).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    if iv.is_unbounded() && cuts.is_empty() {
        if iv.lower == 0.0 {
            cuts.push(1.0);
        } else if hint.singularity_at_lower.is_some_and(|p| p > 0.0) {
            cuts.push(2.0 * iv.lower);
        }
    }

    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(iv.lower);
    nodes.extend(cuts);
    nodes.push(iv.upper);

    let last = nodes.len() - 2;
    let mut pieces = Vec::with_capacity(nodes.len() - 1);
    for i in 0..=last {
        let (a, b) = (nodes[i], nodes[i + 1]);
        if b.is_infinite() {
            // f(c/w) c/w^2 ~ w^{q-1} near w = 0
            let induced = hint.tail_at_upper.map(|q| 1.0 - q);
            let k = flatten_exponent(induced).unwrap_or(1.0);
            pieces.push(Map::Tail { c: a, k });
        } else if i == 0 {
            match flatten_exponent(hint.singularity_at_lower) {
                Some(k) => pieces.push(Map::Power { a, width: b - a, k }),
                None => pieces.push(Map::Identity { a, b }),
            }
        } else {
            pieces.push(Map::Identity { a, b });
        }
    }
    pieces
}

// Gauss–Kronrod 10/21 nodes and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    seq: u64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // max-heap on error; older panels first among equal errors
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Engine<'f, F> {
    f: &'f F,
    pieces: Vec<Map>,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
    seq: u64,
}

impl<'f, F> Engine<'f, F>
where
    F: Fn(f64) -> Result<f64>,
{
    fn new(f: &'f F, pieces: Vec<Map>, opts: &QuadOptions) -> Self {
        Engine { f, pieces, rel_tol: opts.rel_tol, abs_tol: opts.abs_tol, max_panels: opts.max_panels.max(1), seq: 0 }
    }

    #[inline]
    fn eval(&self, piece: usize, t: f64) -> Result<f64> {
        let Some((s, jac)) = self.pieces[piece].apply(t) else {
            return Ok(0.0);
        };
        let v = (self.f)(s)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let out = v * jac;
        if !out.is_finite() {
            return Err(Error::NonFinite { at: s });
        }
        Ok(out)
    }

    fn rule(&mut self, piece: usize, a: f64, b: f64) -> Result<Panel> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = self.eval(piece, center)?;
        let mut resk = fc * WGK[10];
        let mut resg = 0.0;
        let mut resabs = resk.abs();
        let mut fv1 = [0.0; 10];
        let mut fv2 = [0.0; 10];
        for j in 0..10 {
            let dx = half * XGK[j];
            let f1 = self.eval(piece, center - dx)?;
            let f2 = self.eval(piece, center + dx)?;
            fv1[j] = f1;
            fv2[j] = f2;
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let reskh = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - reskh).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
        }
        let value = resk * half;
        let resabs = resabs * half.abs();
        let resasc = resasc * half.abs();
        let mut err = ((resk - resg) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        self.seq += 1;
        Ok(Panel { piece, a, b, value, err, seq: self.seq })
    }

    fn target(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }

    fn run(mut self) -> Result<QuadResult> {
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        for i in 0..self.pieces.len() {
            let (t0, t1) = self.pieces[i].domain();
            let mid = 0.5 * (t0 + t1);
            heap.push(self.rule(i, t0, mid)?);
            heap.push(self.rule(i, mid, t1)?);
        }
        let mut panels = heap.len();
        let mut value: f64 = heap.iter().map(|p| p.value).sum();
        let mut err: f64 = heap.iter().map(|p| p.err).sum();

        loop {
            if err <= self.target(value) {
                // recompute in a fixed order before accepting
                let (v, e) = totals(&heap, &frozen);
                value = v;
                err = e;
                if err <= self.target(value) {
                    return Ok(QuadResult { value, abs_error_estimate: err, subdivisions: panels });
                }
            }
            let Some(worst) = heap.pop() else {
                return Err(Error::NonConvergent { value, abs_error_estimate: err, subdivisions: panels });
            };
            let mid = 0.5 * (worst.a + worst.b);
            let tiny = (worst.b - worst.a).abs()
                <= 64.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
            if tiny || mid <= worst.a || mid >= worst.b {
                frozen.push(worst);
                continue;
            }
            if panels + 1 > self.max_panels {
                heap.push(worst);
                let (v, e) = totals(&heap, &frozen);
                return Err(Error::NonConvergent { value: v, abs_error_estimate: e, subdivisions: panels });
            }
            let left = self.rule(worst.piece, worst.a, mid)?;
            let right = self.rule(worst.piece, mid, worst.b)?;
            value += left.value + right.value - worst.value;
            err += left.err + right.err - worst.err;
            heap.push(left);
            heap.push(right);
            panels += 1;
        }
    }
}

fn totals(heap: &BinaryHeap<Panel>, frozen: &[Panel]) -> (f64, f64) {
    let mut all: Vec<&Panel> = heap.iter().chain(frozen.iter()).collect();
    all.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
    let value = all.iter().map(|p| p.value).sum();
    let err = all.iter().map(|p| p.err).sum();
    (value, err)
}
