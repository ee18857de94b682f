use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mef::OdometerAddress;

/// Identifies the system a point belongs to (digest of the system config).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemId(pub u64);

/// Sentinel exponent for a dyadic distance of exactly zero.
pub const DYADIC_ZERO: u8 = u8::MAX;

/// A state of a concrete system together with the system it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub(crate) system: SystemId,
    pub(crate) state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Symbolic(SymbolicPoint),
    /// Circle coordinate in units of 2^-64 of a full turn.
    Circle(u64),
    Interval(f64),
    Odometer(OdometerAddress),
}

impl Point {
    pub fn system(&self) -> SystemId {
        self.system
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match &self.state {
            State::Symbolic(s) => Some(s),
            _ => None,
        }
    }

    /// Circle coordinate in `[0, 1)` or interval coordinate in `[0, 1]`.
    pub fn coordinate(&self) -> Option<f64> {
        match &self.state {
            State::Circle(u) => Some(circle_to_f64(*u)),
            State::Interval(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<&OdometerAddress> {
        match &self.state {
            State::Odometer(a) => Some(a),
            _ => None,
        }
    }

    /// Remaining forward-iterate budget; unbounded for non-symbolic states.
    pub fn validity(&self) -> usize {
        match &self.state {
            State::Symbolic(s) => s.validity(),
            _ => usize::MAX,
        }
    }
}

/// A finite two-sided window of a subshift point.
///
/// `window[origin]` is coordinate 0. Distances are read on `[-radius, radius]`,
/// so the point can be shifted forward `validity()` times before the right
/// edge of that range leaves the window.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicPoint {
    pub(crate) window: Arc<[u8]>,
    pub(crate) origin: usize,
    pub(crate) radius: usize,
}

impl SymbolicPoint {
    pub fn window(&self) -> &[u8] {
        &self.window
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn left_extent(&self) -> usize {
        self.origin
    }

    pub fn right_extent(&self) -> usize {
        self.window.len() - 1 - self.origin
    }

    pub fn validity(&self) -> usize {
        self.right_extent().saturating_sub(self.radius)
    }

    /// Symbol at coordinate `i`, if inside the window.
    pub fn at(&self, i: isize) -> Option<u8> {
        let idx = self.origin as isize + i;
        if idx < 0 {
            return None;
        }
        self.window.get(idx as usize).copied()
    }

    /// Symbols on `[-r, r]`, if the window covers them.
    pub fn central(&self, r: usize) -> Option<&[u8]> {
        if self.origin < r || self.right_extent() < r {
            return None;
        }
        Some(&self.window[self.origin - r..=self.origin + r])
    }

    /// Symbols on coordinates `[from, to]` (inclusive), if covered.
    pub fn range(&self, from: isize, to: isize) -> Option<&[u8]> {
        let a = self.origin as isize + from;
        let b = self.origin as isize + to;
        if a < 0 || b < a || b as usize >= self.window.len() {
            return None;
        }
        Some(&self.window[a as usize..=b as usize])
    }
}

pub(crate) fn circle_to_f64(u: u64) -> f64 {
    u as f64 / 18_446_744_073_709_551_616.0
}

pub(crate) fn f64_to_circle(x: f64) -> u64 {
    let frac = x - x.floor();
    (frac * 18_446_744_073_709_551_616.0) as u64
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.state {
            State::Symbolic(s) => {
                let r = s.radius.min(16);
                let w: String = s
                    .central(r)
                    .unwrap_or(&[])
                    .iter()
                    .map(|&c| char::from(b'0' + c))
                    .collect();
                write!(f, "sym[r={r}]{w}")
            }
            State::Circle(u) => write!(f, "circle:{}", circle_to_f64(*u)),
            State::Interval(x) => write!(f, "interval:{x}"),
            State::Odometer(a) => write!(f, "odometer:{}", a.render()),
        }
    }
}
