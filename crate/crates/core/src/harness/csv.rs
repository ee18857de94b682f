//! CSV rendering. Every file starts with `# schema: <name>.v1`, uses LF line
//! endings, `.` decimals, and shortest round-trip floats. Distances, which
//! are dyadic rationals, are written as exact decimal expansions.

use std::fmt::Write;

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        let mut buf = format!("# schema: {schema}.v1\n");
        buf.push_str(&header.join(","));
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Full decimal expansion of a finite `f64` (every finite double is a dyadic rational).
pub fn exact(x: f64) -> String {
    if !x.is_finite() {
        return float(x);
    }
    if x == 0.0 {
        return "0".into();
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) =
        if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
    while mant & 1 == 0 {
        mant >>= 1;
        exp += 1;
    }
    // little-endian base-10^9 limbs
    let mut limbs: Vec<u64> = vec![mant % 1_000_000_000, mant / 1_000_000_000];
    let mul = |limbs: &mut Vec<u64>, k: u64| {
        let mut carry = 0u64;
        for l in limbs.iter_mut() {
            let v = *l * k + carry;
            *l = v % 1_000_000_000;
            carry = v / 1_000_000_000;
        }
        while carry > 0 {
            limbs.push(carry % 1_000_000_000);
            carry /= 1_000_000_000;
        }
    };
    // value = mant * 2^exp = mant * 5^(-exp) / 10^(-exp) for exp < 0
    let scale = if exp >= 0 {
        for _ in 0..exp {
            mul(&mut limbs, 2);
        }
        0
    } else {
        for _ in 0..-exp {
            mul(&mut limbs, 5);
        }
        (-exp) as usize
    };
    while limbs.len() > 1 && *limbs.last().unwrap() == 0 {
        limbs.pop();
    }
    let mut digits = limbs.last().unwrap().to_string();
    for l in limbs.iter().rev().skip(1) {
        write!(digits, "{l:09}").unwrap();
    }
    if scale > 0 {
        if digits.len() <= scale {
            digits = "0".repeat(scale + 1 - digits.len()) + &digits;
        }
        digits.insert(digits.len() - scale, '.');
    }
    if neg {
        digits.insert(0, '-');
    }
    digits
}
