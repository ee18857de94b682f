use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A base-`q` address truncated to `digits.len()` digits, least significant first.
///
/// `digits[0]` is the coarsest coordinate: it says where a point sits inside its
/// level-1 block, `digits[1]` where that block sits inside its level-2 block, and
/// so on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OdometerAddress {
    digits: Vec<u8>,
    base: u8,
}

impl OdometerAddress {
    pub fn new(digits: Vec<u8>, base: u8) -> Result<Self> {
        if base < 2 {
            return Err(Error::Contract(format!("odometer base {base} < 2")));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= base) {
            return Err(Error::Contract(format!("digit {d} out of range for base {base}")));
        }
        Ok(OdometerAddress { digits, base })
    }

    pub fn zero(base: u8, depth: usize) -> Self {
        OdometerAddress { digits: vec![0; depth], base }
    }

    /// The address of the integer `value` modulo `base^depth`.
    pub fn from_value(mut value: u128, base: u8, depth: usize) -> Self {
        let mut digits = Vec::with_capacity(depth);
        for _ in 0..depth {
            digits.push((value % base as u128) as u8);
            value /= base as u128;
        }
        OdometerAddress { digits, base }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// Integer value `sum digit_n * base^n`; `None` if it does not fit in `u128`.
    pub fn value(&self) -> Option<u128> {
        let mut v: u128 = 0;
        for &d in self.digits.iter().rev() {
            v = v.checked_mul(self.base as u128)?.checked_add(d as u128)?;
        }
        Some(v)
    }

    /// The first `depth` digits.
    pub fn truncate(&self, depth: usize) -> Self {
        OdometerAddress {
            digits: self.digits[..depth.min(self.digits.len())].to_vec(),
            base: self.base,
        }
    }

    /// Adds `n` with carry; overflow past the last digit wraps.
    pub fn add(&self, mut n: u128) -> Self {
        let b = self.base as u128;
        let mut digits = self.digits.clone();
        let mut carry = 0u128;
        for d in digits.iter_mut() {
            if n == 0 && carry == 0 {
                break;
            }
            let s = *d as u128 + n % b + carry;
            *d = (s % b) as u8;
            carry = s / b;
            n /= b;
        }
        OdometerAddress { digits, base: self.base }
    }

    /// Adds one in place; cheaper than [`add`](Self::add) in orbit loops.
    pub fn increment(&mut self) {
        for d in self.digits.iter_mut() {
            if *d + 1 < self.base {
                *d += 1;
                return;
            }
            *d = 0;
        }
    }

    /// Subtracts one in place, wrapping below zero.
    pub fn decrement(&mut self) {
        for d in self.digits.iter_mut() {
            if *d > 0 {
                *d -= 1;
                return;
            }
            *d = self.base - 1;
        }
    }

    /// Index of the first differing digit; `None` when all digits agree.
    pub fn first_difference(&self, other: &Self) -> Result<Option<usize>> {
        if self.base != other.base || self.depth() != other.depth() {
            return Err(Error::Contract(format!(
                "odometer mismatch: base {} depth {} vs base {} depth {}",
                self.base,
                self.depth(),
                other.base,
                other.depth()
            )));
        }
        Ok(self.digits.iter().zip(&other.digits).position(|(a, b)| a != b))
    }

    pub fn render(&self) -> String {
        self.digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
    }
}
