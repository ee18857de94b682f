//! Concrete topological systems `(X, phi, d)`: constant-length substitution
//! subshifts, odometers, circle rotations and Morse–Smale interval maps.

mod point;
pub mod sampling;
mod substitution;

use std::cmp::Ordering::{Greater, Less};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{contract, Error, Result};
use crate::mef::OdometerAddress;
use crate::rng::{stream, Purpose};

pub use point::{Point, State, SymbolicPoint, SystemId, DYADIC_ZERO};
pub(crate) use point::{circle_to_f64, f64_to_circle};
pub use substitution::Substitution;

/// Default symmetric radius on which subshift distances are resolved.
pub const DEFAULT_METRIC_RADIUS: usize = 32;
/// Largest distance exponent; keeps Cesàro sums exact in 64.64 fixed point.
pub const MAX_DYADIC_EXPONENT: usize = 63;
/// Default digit depth of odometer points.
pub const DEFAULT_ODOMETER_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Substitution,
    Odometer,
    Rotation,
    MorseSmale,
}

/// Rotation angle: a decimal in `(0, 1)` or the name `"golden"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Value(f64),
    Named(String),
}

/// Text description of a system, as found in `[system]` tables of experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Substitution alphabet, one character per letter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<String>,
    /// Substitution images, `rules[i]` for the i-th alphabet letter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<String>>,
    /// Subshift metric radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<u8>,
    /// Odometer digit depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<Angle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
}

impl SystemConfig {
    fn empty(kind: KindName, name: &str) -> Self {
        SystemConfig {
            kind,
            name: Some(name.to_string()),
            alphabet: None,
            rules: None,
            radius: None,
            base: None,
            depth: None,
            angle: None,
            fixed_points: None,
            steepness: None,
        }
    }

    pub fn substitution(name: &str, alphabet: &str, rules: &[&str]) -> Self {
        SystemConfig {
            alphabet: Some(alphabet.to_string()),
            rules: Some(rules.iter().map(|r| r.to_string()).collect()),
            ..Self::empty(KindName::Substitution, name)
        }
    }

    pub fn thue_morse() -> Self {
        Self::substitution("thue_morse", "01", &["01", "10"])
    }

    pub fn period_doubling() -> Self {
        Self::substitution("period_doubling", "01", &["01", "00"])
    }

    pub fn odometer(base: u8) -> Self {
        SystemConfig {
            base: Some(base),
            ..Self::empty(KindName::Odometer, &format!("odometer{base}"))
        }
    }

    pub fn rotation(angle: Angle) -> Self {
        SystemConfig {
            angle: Some(angle),
            ..Self::empty(KindName::Rotation, "rotation")
        }
    }

    pub fn golden_rotation() -> Self {
        Self::rotation(Angle::Named("golden".into()))
    }

    pub fn morse_smale(fixed_points: Vec<f64>, steepness: f64) -> Self {
        SystemConfig {
            fixed_points: Some(fixed_points),
            steepness: Some(steepness),
            ..Self::empty(KindName::MorseSmale, "morse_smale")
        }
    }

    /// The built-in systems exercised by the axiom suite.
    pub fn builtins() -> Vec<SystemConfig> {
        vec![
            Self::thue_morse(),
            Self::period_doubling(),
            Self::odometer(2),
            Self::golden_rotation(),
            Self::morse_smale(vec![0.0, 0.5, 1.0], 0.5),
        ]
    }

    fn id(&self) -> SystemId {
        let canon = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canon);
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        SystemId(u64::from_le_bytes(bytes))
    }
}

/// `f(x) = x + eps (x - x_{i-1}) (x_i - x)` on each `[x_{i-1}, x_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseSmale {
    fixed_points: Vec<f64>,
    steepness: f64,
}

impl MorseSmale {
    pub fn new(fixed_points: Vec<f64>, steepness: f64) -> Result<Self> {
        if fixed_points.len() < 2 {
            return Err(Error::InvalidSystem("need at least the fixed points 0 and 1".into()));
        }
        if fixed_points[0] != 0.0 || *fixed_points.last().unwrap() != 1.0 {
            return Err(Error::InvalidSystem("fixed points must start at 0 and end at 1".into()));
        }
        if fixed_points.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Less)) {
            return Err(Error::InvalidSystem("fixed points must be strictly increasing".into()));
        }
        let max_gap = fixed_points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if steepness.is_nan() || steepness <= 0.0 || steepness * max_gap >= 1.0 {
            return Err(Error::InvalidSystem(format!(
                "steepness {steepness} must satisfy 0 < eps * max gap < 1"
            )));
        }
        let ms = MorseSmale { fixed_points, steepness };
        // numeric shape check on a grid
        const GRID: usize = 10_000;
        let mut prev = ms.map(0.0);
        for i in 1..=GRID {
            let x = i as f64 / GRID as f64;
            let y = ms.map(x);
            if y.partial_cmp(&prev) != Some(Greater) {
                return Err(Error::InvalidSystem(format!("map not increasing near {x}")));
            }
            let fixed = ms.fixed_points.contains(&x);
            if !fixed && y.partial_cmp(&x) != Some(Greater) {
                return Err(Error::InvalidSystem(format!("f(x) <= x at non-fixed {x}")));
            }
            prev = y;
        }
        Ok(ms)
    }

    pub fn fixed_points(&self) -> &[f64] {
        &self.fixed_points
    }

    pub fn steepness(&self) -> f64 {
        self.steepness
    }

    fn segment(&self, x: f64) -> usize {
        // index i with x in [x_{i-1}, x_i]
        let i = self.fixed_points.partition_point(|&p| p < x);
        i.clamp(1, self.fixed_points.len() - 1)
    }

    pub fn map(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (a, b) = (self.fixed_points[i - 1], self.fixed_points[i]);
        (x + self.steepness * (x - a) * (b - x)).clamp(a, b)
    }

    /// Inverse by bisection on the segment containing `y` (the map preserves segments).
    pub fn inverse(&self, y: f64) -> f64 {
        let i = self.segment(y);
        let (mut lo, mut hi) = (self.fixed_points[i - 1], self.fixed_points[i]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.map(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if self.map(lo) == y {
            lo
        } else {
            hi
        }
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    Substitution { sub: Arc<Substitution>, radius: usize },
    Odometer { base: u8, depth: usize },
    /// Rotation by `alpha / 2^64` of a turn.
    Rotation { alpha: u64 },
    MorseSmale(MorseSmale),
}

/// A validated system. Cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    id: SystemId,
    name: String,
    config: SystemConfig,
    kind: SystemKind,
}

/// Window extents for freshly seeded subshift points: symbols on
/// `[-left, right]` around the origin. Ignored by non-symbolic systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub left: usize,
    pub right: usize,
}

impl Shape {
    pub fn new(left: usize, right: usize) -> Self {
        Shape { left, right }
    }

    /// Grows both sides to at least `r`.
    pub fn covering(self, r: usize) -> Self {
        Shape { left: self.left.max(r), right: self.right.max(r) }
    }

    /// Enough window to read `reach` symbols on both sides after `horizon` shifts.
    pub fn for_horizon(sys: &SystemSpec, horizon: usize, reach: usize) -> Self {
        let r = sys.metric_radius().max(reach);
        Shape { left: r, right: r + horizon }
    }
}

/// How to construct a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSeed {
    /// Two-sided fixed point of a power of the substitution with right half `s^inf(letter)`.
    FixedPoint { letter: char },
    /// `phi^n` applied to another seed.
    ShiftOf { base: Box<PointSeed>, n: usize },
    /// Random point; subshift points are cut from supertiles.
    Random { seed: u64 },
    /// Letterwise bit flip of a binary subshift point.
    Complement { base: Box<PointSeed> },
    Coordinate { x: f64 },
    Address { digits: Vec<u8> },
    /// Window `s^level(word[0]) s^level(word[1]) ...` with coordinate 0 at index `origin`.
    Supertiles { word: String, level: u32, origin: usize },
}

/// A distance together with its resolution: `value <= true distance <= upper`.
/// The two coincide except when subshift windows (or odometer digits) agree
/// on everything that was compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub upper: f64,
}

impl Distance {
    pub fn is_exact(&self) -> bool {
        self.value == self.upper
    }
}

/// Per-step distances along a pair (or tuple) of orbits.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    /// Exponents `e` of distances `2^-e`; [`DYADIC_ZERO`] encodes 0.
    Dyadic(Vec<u8>),
    Real(Vec<f64>),
}

impl Trace {
    pub fn len(&self) -> usize {
        match self {
            Trace::Dyadic(v) => v.len(),
            Trace::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, k: usize) -> f64 {
        match self {
            Trace::Dyadic(v) => dyadic(v[k]),
            Trace::Real(v) => v[k],
        }
    }

    /// Pointwise minimum of two traces of the same kind and length.
    pub fn min_with(&mut self, other: &Trace) {
        match (self, other) {
            // smaller distance = larger exponent; DYADIC_ZERO is the largest
            (Trace::Dyadic(a), Trace::Dyadic(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = (*x).max(*y);
                }
            }
            (Trace::Real(a), Trace::Real(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.min(*y);
                }
            }
            _ => panic!("mixed trace kinds"),
        }
    }

    /// Pointwise maximum.
    pub fn max_with(&mut self, other: &Trace) {
        match (self, other) {
            (Trace::Dyadic(a), Trace::Dyadic(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = (*x).min(*y);
                }
            }
            (Trace::Real(a), Trace::Real(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(*y);
                }
            }
            _ => panic!("mixed trace kinds"),
        }
    }
}

/// `2^-e`, or 0 for [`DYADIC_ZERO`].
pub fn dyadic(e: u8) -> f64 {
    if e == DYADIC_ZERO {
        0.0
    } else {
        (-(e as i32) as f64).exp2()
    }
}

/// Validates a config and builds the system.
pub fn build_system(config: &SystemConfig) -> Result<SystemSpec> {
    let name = config.name.clone().unwrap_or_else(|| {
        serde_json::to_value(config.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    });
    let kind = match config.kind {
        KindName::Substitution => {
            let alphabet: Vec<char> = config
                .alphabet
                .as_deref()
                .ok_or_else(|| Error::Config("substitution needs `alphabet`".into()))?
                .chars()
                .collect();
            let rules = config
                .rules
                .as_ref()
                .ok_or_else(|| Error::Config("substitution needs `rules`".into()))?;
            let rules = rules
                .iter()
                .map(|r| {
                    r.chars()
                        .map(|c| {
                            alphabet.iter().position(|&a| a == c).map(|i| i as u8).ok_or_else(
                                || Error::InvalidSystem(format!("rule uses letter {c:?} outside the alphabet")),
                            )
                        })
                        .collect::<Result<Vec<u8>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let radius = config.radius.unwrap_or(DEFAULT_METRIC_RADIUS);
            if radius == 0 || radius > MAX_DYADIC_EXPONENT {
                return Err(Error::InvalidSystem(format!(
                    "metric radius {radius} out of 1..={MAX_DYADIC_EXPONENT}"
                )));
            }
            SystemKind::Substitution { sub: Arc::new(Substitution::new(alphabet, rules)?), radius }
        }
        KindName::Odometer => {
            let base = config.base.unwrap_or(2);
            if base < 2 {
                return Err(Error::InvalidSystem("odometer base must be at least 2".into()));
            }
            let depth = config.depth.unwrap_or(DEFAULT_ODOMETER_DEPTH);
            if depth == 0 || depth > MAX_DYADIC_EXPONENT + 1 {
                return Err(Error::InvalidSystem(format!(
                    "odometer depth {depth} out of 1..={}",
                    MAX_DYADIC_EXPONENT + 1
                )));
            }
            SystemKind::Odometer { base, depth }
        }
        KindName::Rotation => {
            let alpha = match config.angle.as_ref() {
                Some(Angle::Value(a)) => *a,
                Some(Angle::Named(n)) if n == "golden" => (5f64.sqrt() - 1.0) / 2.0,
                Some(Angle::Named(n)) => {
                    return Err(Error::Config(format!("unknown angle name {n:?}")));
                }
                None => return Err(Error::Config("rotation needs `angle`".into())),
            };
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidSystem(format!("rotation angle {alpha} not in (0,1)")));
            }
            SystemKind::Rotation { alpha: f64_to_circle(alpha) }
        }
        KindName::MorseSmale => {
            let fp = config
                .fixed_points
                .clone()
                .ok_or_else(|| Error::Config("morse_smale needs `fixed_points`".into()))?;
            let eps = config
                .steepness
                .ok_or_else(|| Error::Config("morse_smale needs `steepness`".into()))?;
            SystemKind::MorseSmale(MorseSmale::new(fp, eps)?)
        }
    };
    Ok(SystemSpec { id: config.id(), name, config: config.clone(), kind })
}

impl SystemSpec {
    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn substitution(&self) -> Option<&Substitution> {
        match &self.kind {
            SystemKind::Substitution { sub, .. } => Some(sub),
            _ => None,
        }
    }

    /// Radius on which subshift distances are resolved (0 for other systems).
    pub fn metric_radius(&self) -> usize {
        match &self.kind {
            SystemKind::Substitution { radius, .. } => *radius,
            _ => 0,
        }
    }

    /// Metric values are exact dyadic rationals.
    pub fn is_dyadic(&self) -> bool {
        matches!(self.kind, SystemKind::Substitution { .. } | SystemKind::Odometer { .. })
    }

    /// Minimal systems are eligible for the Auslander–Yorke dichotomy.
    pub fn is_minimal(&self) -> bool {
        !matches!(self.kind, SystemKind::MorseSmale(_))
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            SystemKind::Rotation { .. } => 0.5,
            _ => 1.0,
        }
    }

    pub(crate) fn check(&self, p: &Point) -> Result<()> {
        if p.system != self.id {
            return Err(contract(format!("point belongs to another system than {}", self.name)));
        }
        Ok(())
    }

    pub(crate) fn point(&self, state: State) -> Point {
        Point { system: self.id, state }
    }

    /// Builds a subshift point from an explicit window, origin index and metric radius.
    pub fn symbolic_point(&self, window: Vec<u8>, origin: usize) -> Result<Point> {
        let sub = self
            .substitution()
            .ok_or_else(|| contract("symbolic point requested for a non-subshift"))?;
        if window.iter().any(|&s| s as usize >= sub.alphabet_size()) {
            return Err(contract("window uses symbols outside the alphabet"));
        }
        let radius = self.metric_radius();
        if origin < radius || window.len() < origin + radius + 1 {
            return Err(Error::Horizon {
                needed: radius,
                available: origin.min(window.len().saturating_sub(origin + 1)),
                context: "window must cover the metric radius",
            });
        }
        Ok(self.point(State::Symbolic(SymbolicPoint {
            window: Arc::from(window),
            origin,
            radius,
        })))
    }

    pub fn circle_point(&self, x: f64) -> Result<Point> {
        match self.kind {
            SystemKind::Rotation { .. } if (0.0..1.0).contains(&x) => {
                Ok(self.point(State::Circle(f64_to_circle(x))))
            }
            SystemKind::Rotation { .. } => Err(contract(format!("circle coordinate {x} not in [0,1)"))),
            _ => Err(contract("circle point requested for a non-rotation")),
        }
    }

    pub fn interval_point(&self, x: f64) -> Result<Point> {
        match self.kind {
            SystemKind::MorseSmale(_) if (0.0..=1.0).contains(&x) => Ok(self.point(State::Interval(x))),
            SystemKind::MorseSmale(_) => Err(contract(format!("interval coordinate {x} not in [0,1]"))),
            _ => Err(contract("interval point requested for a non-interval system")),
        }
    }

    pub fn odometer_point(&self, address: OdometerAddress) -> Result<Point> {
        match self.kind {
            SystemKind::Odometer { base, depth } if address.base() == base && address.depth() == depth => {
                Ok(self.point(State::Odometer(address)))
            }
            SystemKind::Odometer { base, depth } => Err(contract(format!(
                "address must have base {base} and depth {depth}"
            ))),
            _ => Err(contract("odometer point requested for a non-odometer")),
        }
    }
}

/// `s^level(letter)` for a substitution system.
pub fn substitution_word(sys: &SystemSpec, letter: char, level: u32) -> Result<Vec<u8>> {
    let sub = sys.substitution().ok_or_else(|| contract("not a substitution system"))?;
    let a = sub.letter(letter)?;
    Ok(sub.supertile(a, level)?.to_vec())
}

/// One step of the dynamics.
pub fn apply(sys: &SystemSpec, p: &Point) -> Result<Point> {
    sys.check(p)?;
    let state = match (&sys.kind, &p.state) {
        (SystemKind::Substitution { .. }, State::Symbolic(s)) => {
            if s.validity() == 0 {
                return Err(Error::Horizon { needed: 1, available: 0, context: "shift" });
            }
            State::Symbolic(SymbolicPoint { window: s.window.clone(), origin: s.origin + 1, radius: s.radius })
        }
        (SystemKind::Rotation { alpha }, State::Circle(x)) => State::Circle(x.wrapping_add(*alpha)),
        (SystemKind::MorseSmale(ms), State::Interval(x)) => State::Interval(ms.map(*x)),
        (SystemKind::Odometer { .. }, State::Odometer(a)) => {
            let mut a = a.clone();
            a.increment();
            State::Odometer(a)
        }
        _ => return Err(contract("point state does not match system kind")),
    };
    Ok(sys.point(state))
}

/// `apply` iterated `n` times.
pub fn apply_n(sys: &SystemSpec, p: &Point, n: usize) -> Result<Point> {
    sys.check(p)?;
    match (&sys.kind, &p.state) {
        (SystemKind::Substitution { .. }, State::Symbolic(s)) => {
            if s.validity() < n {
                return Err(Error::Horizon { needed: n, available: s.validity(), context: "shift" });
            }
            Ok(sys.point(State::Symbolic(SymbolicPoint {
                window: s.window.clone(),
                origin: s.origin + n,
                radius: s.radius,
            })))
        }
        (SystemKind::Rotation { alpha }, State::Circle(x)) => {
            Ok(sys.point(State::Circle(x.wrapping_add(alpha.wrapping_mul(n as u64)))))
        }
        (SystemKind::Odometer { .. }, State::Odometer(a)) => Ok(sys.point(State::Odometer(a.add(n as u128)))),
        _ => {
            let mut cur = p.clone();
            for _ in 0..n {
                cur = apply(sys, &cur)?;
            }
            Ok(cur)
        }
    }
}

/// One step of the inverse dynamics.
pub fn apply_inverse(sys: &SystemSpec, p: &Point) -> Result<Point> {
    sys.check(p)?;
    let state = match (&sys.kind, &p.state) {
        (SystemKind::Substitution { .. }, State::Symbolic(s)) => {
            if s.origin <= s.radius {
                return Err(Error::Horizon { needed: 1, available: 0, context: "inverse shift" });
            }
            State::Symbolic(SymbolicPoint { window: s.window.clone(), origin: s.origin - 1, radius: s.radius })
        }
        (SystemKind::Rotation { alpha }, State::Circle(x)) => State::Circle(x.wrapping_sub(*alpha)),
        (SystemKind::MorseSmale(ms), State::Interval(x)) => State::Interval(ms.inverse(*x)),
        (SystemKind::Odometer { .. }, State::Odometer(a)) => {
            let mut a = a.clone();
            a.decrement();
            State::Odometer(a)
        }
        _ => return Err(contract("point state does not match system kind")),
    };
    Ok(sys.point(state))
}

/// The metric `d` of the system.
///
/// * subshift: `2^-k`, `k` the smallest `|i|` with `p_i != q_i` on the shared radius;
/// * odometer: `2^-n`, `n` the first differing digit;
/// * circle: arc length `min(|x-y|, 1-|x-y|)`;
/// * interval: `|x-y|`.
pub fn metric(sys: &SystemSpec, p: &Point, q: &Point) -> Result<Distance> {
    sys.check(p)?;
    sys.check(q)?;
    match pair_trace(sys, p, q, 1)? {
        Trace::Dyadic(v) => {
            let value = dyadic(v[0]);
            let upper = if v[0] == DYADIC_ZERO {
                match (&p.state, &q.state) {
                    (State::Symbolic(a), State::Symbolic(b)) => dyadic((a.radius.min(b.radius) + 1) as u8),
                    (State::Odometer(a), _) => dyadic(a.depth() as u8),
                    _ => 0.0,
                }
            } else {
                value
            };
            Ok(Distance { value, upper })
        }
        Trace::Real(v) => Ok(Distance { value: v[0], upper: v[0] }),
    }
}

/// Distances `d(phi^k p, phi^k q)` for `k = 0..n`.
pub fn pair_trace(sys: &SystemSpec, p: &Point, q: &Point, n: usize) -> Result<Trace> {
    sys.check(p)?;
    sys.check(q)?;
    match (&sys.kind, &p.state, &q.state) {
        (SystemKind::Substitution { .. }, State::Symbolic(a), State::Symbolic(b)) => symbolic_trace(a, b, n),
        (SystemKind::Odometer { .. }, State::Odometer(a), State::Odometer(b)) => {
            let mut a = a.clone();
            let mut b = b.clone();
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                if k > 0 {
                    a.increment();
                    b.increment();
                }
                out.push(match a.first_difference(&b)? {
                    Some(i) => i as u8,
                    None => DYADIC_ZERO,
                });
            }
            Ok(Trace::Dyadic(out))
        }
        (SystemKind::Rotation { alpha }, State::Circle(x), State::Circle(y)) => {
            let (mut x, mut y) = (*x, *y);
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                if k > 0 {
                    x = x.wrapping_add(*alpha);
                    y = y.wrapping_add(*alpha);
                }
                out.push(circle_distance(x, y));
            }
            Ok(Trace::Real(out))
        }
        (SystemKind::MorseSmale(ms), State::Interval(x), State::Interval(y)) => {
            let (mut x, mut y) = (*x, *y);
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                if k > 0 {
                    x = ms.map(x);
                    y = ms.map(y);
                }
                out.push((x - y).abs());
            }
            Ok(Trace::Real(out))
        }
        _ => Err(contract("point state does not match system kind")),
    }
}

pub(crate) fn circle_distance(x: u64, y: u64) -> f64 {
    let d = x.wrapping_sub(y);
    circle_to_f64(d.min(d.wrapping_neg()))
}

/// Nearest disagreement distance for every time step, in one pass each way.
fn symbolic_trace(a: &SymbolicPoint, b: &SymbolicPoint, n: usize) -> Result<Trace> {
    let r = a.radius.min(b.radius);
    let steps_needed = n.saturating_sub(1);
    for p in [a, b] {
        if p.origin < r {
            return Err(Error::Horizon { needed: r, available: p.origin, context: "left window edge" });
        }
        let avail = p.right_extent().saturating_sub(r);
        if p.right_extent() < r || avail < steps_needed {
            return Err(Error::Horizon { needed: steps_needed, available: avail, context: "forward iterates" });
        }
    }
    // coordinates j in [-r, n-1+r], stored at index j + r
    let len = n + 2 * r;
    let a0 = a.origin - r;
    let b0 = b.origin - r;
    let wa = &a.window[a0..a0 + len];
    let wb = &b.window[b0..b0 + len];
    let none = usize::MAX;
    let mut prev = vec![none; len];
    let mut last = none;
    for i in 0..len {
        if wa[i] != wb[i] {
            last = i;
        }
        prev[i] = last;
    }
    let mut next = none;
    let mut out = vec![DYADIC_ZERO; n];
    for i in (0..len).rev() {
        if wa[i] != wb[i] {
            next = i;
        }
        if i >= r && i - r < n {
            let mut best = usize::MAX;
            if prev[i] != none {
                best = i - prev[i];
            }
            if next != none {
                best = best.min(next - i);
            }
            if best <= r {
                out[i - r] = best as u8;
            }
        }
    }
    Ok(Trace::Dyadic(out))
}

/// Constructs a point from a seed. `shape` sets the window of subshift points.
pub fn seed_point(sys: &SystemSpec, seed: &PointSeed, shape: Shape) -> Result<Point> {
    match seed {
        PointSeed::ShiftOf { base, n } => {
            let p = seed_point(sys, base, Shape { left: shape.left, right: shape.right + n })?;
            apply_n(sys, &p, *n)
        }
        PointSeed::Complement { base } => {
            let p = seed_point(sys, base, shape)?;
            complement(sys, &p)
        }
        PointSeed::FixedPoint { letter } => {
            let sub = sys.substitution().ok_or_else(|| contract("fixed_point needs a substitution"))?;
            let b = sub.letter(*letter)?;
            fixed_point(sys, sub, b, shape)
        }
        PointSeed::Random { seed } => {
            let mut rng = stream(*seed, Purpose::Seed, 0);
            sampling::random_point(sys, shape, &mut rng)
        }
        PointSeed::Coordinate { x } => match sys.kind {
            SystemKind::Rotation { .. } => sys.circle_point(*x),
            SystemKind::MorseSmale(_) => sys.interval_point(*x),
            _ => Err(contract("coordinate seed needs a rotation or interval system")),
        },
        PointSeed::Supertiles { word, level, origin } => {
            let sub = sys.substitution().ok_or_else(|| contract("supertiles seed needs a substitution"))?;
            let letters = sub.parse_word(word)?;
            if !sub.is_legal(&letters) {
                return Err(Error::IllegalWord(format!("{word} is not in the language")));
            }
            sys.symbolic_point(sub.expand_concat(&letters, *level)?, *origin)
        }
        PointSeed::Address { digits } => match sys.kind {
            SystemKind::Odometer { base, depth } => {
                let mut d = digits.clone();
                d.resize(depth, 0);
                sys.odometer_point(OdometerAddress::new(d, base)?)
            }
            _ => Err(contract("address seed needs an odometer system")),
        },
    }
}

/// Letterwise bit flip; defined for flip-symmetric binary substitutions.
pub fn complement(sys: &SystemSpec, p: &Point) -> Result<Point> {
    sys.check(p)?;
    let sub = sys.substitution().ok_or_else(|| contract("complement needs a substitution"))?;
    if !sub.is_flip_symmetric() {
        return Err(Error::IllegalWord("complement leaves the language of this substitution".into()));
    }
    let s = p.as_symbolic().ok_or_else(|| contract("complement needs a symbolic point"))?;
    let window: Vec<u8> = s.window.iter().map(|&c| 1 - c).collect();
    Ok(sys.point(State::Symbolic(SymbolicPoint { window: Arc::from(window), origin: s.origin, radius: s.radius })))
}

fn fixed_point(sys: &SystemSpec, sub: &Substitution, b: u8, shape: Shape) -> Result<Point> {
    let shape = shape.covering(sys.metric_radius());
    let n = sub.alphabet_size();
    let first = |a: u8| sub.image(a)[0];
    let last = |a: u8| *sub.image(a).last().unwrap();
    let iterate = |f: &dyn Fn(u8) -> u8, a: u8, p: usize| (0..p).fold(a, |x, _| f(x));
    for p in 1..=(n * n).max(2) {
        if iterate(&first, b, p) != b {
            continue;
        }
        let left_letter = (0..n as u8).find(|&a| {
            iterate(&last, a, p) == a && sub.legal_pairs().contains(&[a, b])
        });
        if let Some(a) = left_letter {
            let need = shape.left.max(shape.right + 1).max(1);
            let mut level = p as u32;
            while sub.length().pow(level) < need {
                level += p as u32;
            }
            let lt = sub.supertile(a, level)?;
            let rt = sub.supertile(b, level)?;
            let mut window = lt[lt.len() - shape.left..].to_vec();
            window.extend_from_slice(&rt[..=shape.right]);
            return sys.symbolic_point(window, shape.left);
        }
    }
    Err(contract(format!("no two-sided fixed point with right half s^inf({})", sub.alphabet()[b as usize])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm() -> SystemSpec {
        build_system(&SystemConfig::thue_morse()).unwrap()
    }

    #[test]
    fn builds_named_systems() {
        let t = tm();
        assert_eq!(t.substitution().unwrap().length(), 2);
        let bad = SystemConfig::substitution("x", "01", &["00", "11"]);
        assert!(build_system(&bad).is_err());
        let ms = build_system(&SystemConfig::morse_smale(vec![0.0, 0.5, 1.0], 0.5)).unwrap();
        match ms.kind() {
            SystemKind::MorseSmale(m) => assert_eq!(m.fixed_points().len() - 1, 2),
            _ => unreachable!(),
        }
        assert!(build_system(&SystemConfig::morse_smale(vec![0.0, 0.6, 0.5, 1.0], 0.5)).is_err());
        assert!(build_system(&SystemConfig::morse_smale(vec![0.0, 1.0], 1.5)).is_err());
        assert!(build_system(&SystemConfig::rotation(Angle::Value(1.5))).is_err());
    }

    #[test]
    fn substitution_words_by_hand() {
        let t = tm();
        assert_eq!(substitution_word(&t, '0', 2).unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(substitution_word(&t, '1', 2).unwrap(), vec![1, 0, 0, 1]);
        assert_eq!(substitution_word(&t, '1', 0).unwrap(), vec![1]);
        assert!(substitution_word(&t, '2', 1).is_err());
    }

    #[test]
    fn fixed_point_window() {
        let t = tm();
        let p = seed_point(&t, &PointSeed::FixedPoint { letter: '0' }, Shape::new(32, 32)).unwrap();
        let s = p.as_symbolic().unwrap();
        let right: Vec<u8> = (0..16).map(|i| s.at(i).unwrap()).collect();
        assert_eq!(t.substitution().unwrap().render(&right), "0110100110010110");
        let c = seed_point(
            &t,
            &PointSeed::Complement { base: Box::new(PointSeed::FixedPoint { letter: '0' }) },
            Shape::new(32, 32),
        )
        .unwrap();
        let cs = c.as_symbolic().unwrap();
        assert!(s.window().iter().zip(cs.window()).all(|(a, b)| *a == 1 - *b));
        assert_eq!(metric(&t, &p, &c).unwrap().value, 1.0);
        assert_eq!(metric(&t, &p, &p).unwrap(), Distance { value: 0.0, upper: dyadic(33) });
    }

    #[test]
    fn rotation_and_morse_smale_steps() {
        let r = build_system(&SystemConfig::rotation(Angle::Value(0.25))).unwrap();
        let p = r.circle_point(0.5).unwrap();
        assert_eq!(apply(&r, &p).unwrap().coordinate(), Some(0.75));
        let ms = build_system(&SystemConfig::morse_smale(vec![0.0, 0.5, 1.0], 0.5)).unwrap();
        let x1 = ms.interval_point(0.5).unwrap();
        assert_eq!(apply(&ms, &x1).unwrap().coordinate(), Some(0.5));
        let p = ms.interval_point(0.25).unwrap();
        assert_eq!(apply(&ms, &p).unwrap().coordinate(), Some(0.28125));
        let back = apply_inverse(&ms, &apply(&ms, &p).unwrap()).unwrap();
        assert!((back.coordinate().unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn subshift_metric_by_hand() {
        let t = tm();
        // windows on [-6, 6]: agree on radius 3, differ at +4 and -5
        let base: Vec<u8> = vec![0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0];
        let mut other = base.clone();
        other[6 + 4] ^= 1;
        other[6 - 5] ^= 1;
        let mut cfg = SystemConfig::thue_morse();
        cfg.radius = Some(6);
        let t6 = build_system(&cfg).unwrap();
        let p = t6.symbolic_point(base, 6).unwrap();
        let q = t6.symbolic_point(other, 6).unwrap();
        assert_eq!(metric(&t6, &p, &q).unwrap().value, 1.0 / 16.0);
        // foreign point
        let r = t.symbolic_point(vec![0; 65], 32).unwrap();
        assert!(matches!(metric(&t6, &p, &r), Err(Error::Contract(_))));
    }

    #[test]
    fn shift_exhausts_validity() {
        let t = tm();
        let p = seed_point(&t, &PointSeed::FixedPoint { letter: '0' }, Shape::new(32, 33)).unwrap();
        let p = apply(&t, &p).unwrap();
        assert!(matches!(apply(&t, &p), Err(Error::Horizon { .. })));
    }

    #[test]
    fn morse_smale_orbits_converge_to_right_fixed_point() {
        let ms = MorseSmale::new(vec![0.0, 0.3, 0.5, 1.0], 0.8).unwrap();
        for i in 1..1000 {
            let x0 = i as f64 / 1000.0;
            let seg = ms.fixed_points().partition_point(|&p| p < x0);
            let target = ms.fixed_points()[seg];
            let mut x = x0;
            for _ in 0..200 {
                let y = ms.map(x);
                assert!(y >= x);
                x = y;
            }
            assert!((x - target).abs() < 1e-6, "x0={x0} -> {x}, target {target}");
        }
    }
}
