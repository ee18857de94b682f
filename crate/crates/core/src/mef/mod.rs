//! The factor map onto the odometer for constant-length substitution subshifts,
//! fibre enumeration and multiplicity estimation.

mod odometer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::rng::{stream, Purpose};
use crate::systems::{Distance, Point, State, Substitution, SystemKind, SystemSpec};

pub use odometer::OdometerAddress;

/// `odometer_add`: base-q addition with carry, truncated to the address depth.
pub fn odometer_add(a: &OdometerAddress, n: u128) -> OdometerAddress {
    a.add(n)
}

/// `2^-n` for the first differing digit `n`; 0 with upper bound `2^-K` when all `K` digits agree.
pub fn odometer_metric(a: &OdometerAddress, b: &OdometerAddress) -> Result<Distance> {
    Ok(match a.first_difference(b)? {
        Some(n) => {
            let v = (-(n as f64)).exp2();
            Distance { value: v, upper: v }
        }
        None => Distance { value: 0.0, upper: (-(a.depth() as f64)).exp2() },
    })
}

/// One desubstitution step of a word with a marked origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Desubstitution {
    /// Position of coordinate 0 inside its block.
    pub offset: usize,
    /// Decoded complete blocks.
    pub quotient: Vec<u8>,
    /// Index in `quotient` of the block containing coordinate 0.
    pub origin: usize,
}

/// Finds the unique block alignment of `word` and decodes it.
pub fn desubstitute(sub: &Substitution, word: &[u8], origin: usize) -> Result<Desubstitution> {
    if origin >= word.len() {
        return Err(contract("origin outside the word"));
    }
    let q = sub.length();
    let offsets = sub.parse_offsets(word);
    let r0 = match offsets.as_slice() {
        [r] => *r,
        [] => return Err(Error::IllegalWord(format!("{} admits no block alignment", sub.render(word)))),
        many => {
            return Err(Error::Recognizability(format!(
                "{} symbols admit {} block alignments",
                word.len(),
                many.len()
            )))
        }
    };
    let offset = (r0 + origin) % q;
    let first = (q - r0) % q;
    let block_start = origin - offset;
    if block_start < first || block_start + q > word.len() {
        return Err(Error::Horizon {
            needed: q,
            available: word.len(),
            context: "block containing the origin is incomplete",
        });
    }
    let quotient: Vec<u8> = word[first..]
        .chunks_exact(q)
        .map(|b| sub.decode_block(b).expect("alignment verified"))
        .collect();
    Ok(Desubstitution { offset, quotient, origin: (block_start - first) / q })
}

fn substitution_of(sys: &SystemSpec) -> Result<&Substitution> {
    sys.substitution()
        .ok_or_else(|| Error::Unsupported(format!("{} is not a substitution subshift", sys.name())))
}

/// Odometer address of `p` to depth `K`, read from the central window of radius `R(K)`.
pub fn address(sys: &SystemSpec, p: &Point, depth: usize) -> Result<OdometerAddress> {
    sys.check(p)?;
    match (sys.kind(), p.state()) {
        (SystemKind::Odometer { .. }, State::Odometer(a)) => Ok(a.truncate(depth)),
        (SystemKind::Substitution { sub, .. }, State::Symbolic(s)) => {
            let radius = sub.address_radius(depth);
            let word = s.central(radius).ok_or(Error::Horizon {
                needed: radius,
                available: s.left_extent().min(s.right_extent()),
                context: "address window",
            })?;
            let mut cur = word.to_vec();
            let mut origin = radius;
            let mut digits = Vec::with_capacity(depth);
            for _ in 0..depth {
                let d = desubstitute(sub, &cur, origin)?;
                digits.push(d.offset as u8);
                cur = d.quotient;
                origin = d.origin;
            }
            OdometerAddress::new(digits, sub.length() as u8)
        }
        _ => Err(Error::Unsupported(format!("{} has no odometer factor", sys.name()))),
    }
}

/// Central words of radius `w` found over one truncated odometer address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibreReport {
    pub address: OdometerAddress,
    pub words: Vec<String>,
    pub cardinality: usize,
}

impl fmt::Display for FibreReport {
    /// `address d0,d1,...` / `cardinality N` / one word per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "address {}", self.address.render())?;
        writeln!(f, "cardinality {}", self.cardinality)?;
        for w in &self.words {
            writeln!(f, "{w}")?;
        }
        Ok(())
    }
}

impl FibreReport {
    /// Inverse of the `Display` format.
    pub fn parse(text: &str, base: u8) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |what: &str| Error::Config(format!("fibre record: {what}"));
        let addr = lines
            .next()
            .and_then(|l| l.strip_prefix("address "))
            .ok_or_else(|| bad("missing address line"))?;
        let digits = if addr.is_empty() {
            Vec::new()
        } else {
            addr.split(',')
                .map(|d| d.trim().parse::<u8>().map_err(|_| bad("bad digit")))
                .collect::<Result<Vec<_>>>()?
        };
        let cardinality = lines
            .next()
            .and_then(|l| l.strip_prefix("cardinality "))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| bad("missing cardinality line"))?;
        let words: Vec<String> = lines.map(str::to_string).collect();
        if words.len() != cardinality {
            return Err(bad("cardinality does not match the word count"));
        }
        Ok(FibreReport { address: OdometerAddress::new(digits, base)?, words, cardinality })
    }
}

/// All radius-`w` central words at positions `value(a) mod q^K` of the legal
/// supertile pairs `s^K(b) s^K(c)`.
pub fn fibre(sys: &SystemSpec, a: &OdometerAddress, w: usize) -> Result<FibreReport> {
    match sys.kind() {
        SystemKind::Odometer { .. } | SystemKind::Rotation { .. } => {
            // identity factor: a single point over every address
            return Ok(FibreReport { address: a.clone(), words: vec![a.render()], cardinality: 1 });
        }
        SystemKind::MorseSmale(_) => return Err(Error::Unsupported("no odometer factor".into())),
        SystemKind::Substitution { .. } => {}
    }
    let sub = substitution_of(sys)?;
    if a.base() as usize != sub.length() {
        return Err(contract(format!("address base {} but substitution length {}", a.base(), sub.length())));
    }
    let k = a.depth() as u32;
    let big_q = (sub.length() as u128).checked_pow(k).filter(|&v| v <= 1 << 26);
    let big_q = match big_q {
        Some(v) if v as usize > 2 * w => v as usize,
        _ => {
            return Err(Error::Horizon {
                needed: 2 * w + 1,
                available: big_q.unwrap_or(0) as usize,
                context: "fibre depth too small for the word radius",
            })
        }
    };
    let v = a.value().expect("depth bounded") as usize;
    let centre = if v >= w { v } else { big_q + v };
    let mut words = BTreeSet::new();
    for pair in sub.legal_pairs() {
        let text = crate::systems::sampling::cut(sub, pair, k, centre - w, centre + w + 1)?;
        words.insert(sub.render(&text));
    }
    let words: Vec<String> = words.into_iter().collect();
    Ok(FibreReport { address: a.clone(), cardinality: words.len(), words })
}

/// Mode and histogram of fibre cardinalities over uniformly drawn addresses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub mode: usize,
    /// cardinality -> count
    pub histogram: BTreeMap<usize, usize>,
    pub samples: usize,
    /// Every sampled word set was closed under the bit flip (flip-symmetric systems only).
    pub complement_closed: Option<bool>,
    pub reports: Vec<FibreReport>,
}

impl Multiplicity {
    /// Tallies already computed fibres. Panics on an empty list.
    pub fn from_reports(sys: &SystemSpec, reports: Vec<FibreReport>) -> Self {
        let mut histogram = BTreeMap::new();
        for r in &reports {
            *histogram.entry(r.cardinality).or_insert(0) += 1;
        }
        // ties go to the smaller cardinality
        let mode = histogram.iter().max_by_key(|(k, c)| (**c, std::cmp::Reverse(**k))).map(|(k, _)| *k).unwrap();
        let complement_closed = sys.substitution().filter(|s| s.is_flip_symmetric()).map(|_| {
            reports.iter().all(|r| {
                let set: BTreeSet<&str> = r.words.iter().map(String::as_str).collect();
                r.words.iter().all(|w| set.contains(flip(w).as_str()))
            })
        });
        Multiplicity { mode, histogram, samples: reports.len(), complement_closed, reports }
    }

    pub fn fraction(&self, cardinality: usize) -> f64 {
        *self.histogram.get(&cardinality).unwrap_or(&0) as f64 / self.samples as f64
    }
}

/// Draws `samples` depth-`K` addresses and tallies fibre cardinalities at word radius `w`.
pub fn multiplicity_estimate(
    sys: &SystemSpec,
    depth: usize,
    w: usize,
    samples: usize,
    seed: u64,
) -> Result<Multiplicity> {
    if samples == 0 {
        return Err(contract("samples must be at least 1"));
    }
    let base = match sys.kind() {
        SystemKind::Substitution { sub, .. } => sub.length() as u8,
        SystemKind::Odometer { base, .. } => *base,
        // rotation as a factor of itself: digits are only labels
        SystemKind::Rotation { .. } => 2,
        SystemKind::MorseSmale(_) => return Err(Error::Unsupported("no odometer factor".into())),
    };
    let reports = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, Purpose::Fibre, i as u64);
            let digits = (0..depth).map(|_| rng.random_range(0..base)).collect();
            fibre(sys, &OdometerAddress::new(digits, base)?, w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Multiplicity::from_reports(sys, reports))
}

fn flip(w: &str) -> String {
    w.chars().map(|c| if c == '0' { '1' } else if c == '1' { '0' } else { c }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{apply_n, build_system, seed_point, PointSeed, Shape, SystemConfig};

    fn tm() -> SystemSpec {
        build_system(&SystemConfig::thue_morse()).unwrap()
    }

    #[test]
    fn desubstitute_by_hand() {
        let t = tm();
        let sub = t.substitution().unwrap();
        let d = desubstitute(sub, &[0, 1, 1, 0], 0).unwrap();
        assert_eq!((d.offset, d.quotient.clone(), d.origin), (0, vec![0, 1], 0));
        let d = desubstitute(sub, &[0, 1, 1, 0, 1, 0], 3).unwrap();
        assert_eq!((d.offset, d.origin), (1, 1));
        assert!(matches!(desubstitute(sub, &[0, 0, 0, 0], 0), Err(Error::IllegalWord(_))));
        assert!(matches!(desubstitute(sub, &[0, 1, 0], 1), Err(Error::Recognizability(_))));
    }

    #[test]
    fn shifted_fixed_point_quotient() {
        let t = tm();
        let sub = t.substitution().unwrap();
        let shape = Shape::new(64, 64);
        let fp = seed_point(&t, &PointSeed::FixedPoint { letter: '0' }, shape).unwrap();
        let s = fp.as_symbolic().unwrap();
        let d0 = desubstitute(sub, s.window(), s.origin()).unwrap();
        assert_eq!(d0.offset, 0);
        let right: Vec<u8> = d0.quotient[d0.origin..d0.origin + 16].to_vec();
        assert_eq!(sub.render(&right), "0110100110010110");
        let sh = apply_n(&t, &fp, 1).unwrap();
        let s1 = sh.as_symbolic().unwrap();
        let d1 = desubstitute(sub, s1.window(), s1.origin()).unwrap();
        assert_eq!(d1.offset, 1);
        assert_eq!(d1.quotient[d1.origin..d1.origin + 16], right[..]);
    }

    #[test]
    fn addresses_of_fixed_point_orbit() {
        let t = tm();
        let r = t.substitution().unwrap().address_radius(3);
        let fp = seed_point(&t, &PointSeed::FixedPoint { letter: '0' }, Shape::new(r.max(32), r.max(32) + 8)).unwrap();
        assert_eq!(address(&t, &fp, 3).unwrap().digits(), &[0, 0, 0]);
        assert_eq!(address(&t, &apply_n(&t, &fp, 1).unwrap(), 3).unwrap().digits(), &[1, 0, 0]);
        assert_eq!(address(&t, &apply_n(&t, &fp, 5).unwrap(), 3).unwrap().digits(), &[1, 0, 1]);
        let small = seed_point(&t, &PointSeed::FixedPoint { letter: '0' }, Shape::new(40, 40)).unwrap();
        assert!(matches!(address(&t, &small, 8), Err(Error::Horizon { .. })));
    }

    #[test]
    fn odometer_metric_by_hand() {
        let a = |d: &[u8]| OdometerAddress::new(d.to_vec(), 2).unwrap();
        assert_eq!(odometer_metric(&a(&[0, 1, 0]), &a(&[1, 1, 0])).unwrap().value, 1.0);
        assert_eq!(odometer_metric(&a(&[0, 1]), &a(&[0, 0])).unwrap().value, 0.5);
        let z = odometer_metric(&a(&[1, 1]), &a(&[1, 1])).unwrap();
        assert_eq!((z.value, z.upper), (0.0, 0.25));
    }

    #[test]
    fn fibre_report_round_trip() {
        let t = tm();
        let a = OdometerAddress::from_value(1234, 2, 12);
        let rep = fibre(&t, &a, 8).unwrap();
        assert_eq!(rep.cardinality, 2);
        let text = rep.to_string();
        assert!(text.starts_with("address 0,1,0,0,1,0,1,1,0,0,1,0\ncardinality 2\n"));
        assert_eq!(FibreReport::parse(&text, 2).unwrap(), rep);
        let odo = build_system(&SystemConfig::odometer(2)).unwrap();
        assert_eq!(fibre(&odo, &a, 8).unwrap().cardinality, 1);
        assert!(matches!(fibre(&t, &OdometerAddress::zero(2, 4), 8), Err(Error::Horizon { .. })));
    }
}
