//! Random points, cylinder points and ball neighbours.
//!
//! Subshift points are always cut out of concatenated supertiles
//! `s^L(a) s^L(b) s^L(c)` with `abc` legal, so every window is a legal word.

use std::sync::Arc;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use super::{Point, Shape, State, Substitution, SymbolicPoint, SystemKind, SystemSpec};
use crate::error::{contract, Error, Result};
use crate::mef::OdometerAddress;

/// Attempts per ball sample before a subshift ball is reported empty.
const BALL_TRIES: usize = 16;

/// Symbols `[from, to)` of `s^level(letters[0]) s^level(letters[1]) ...`.
pub(crate) fn cut(sub: &Substitution, letters: &[u8], level: u32, from: usize, to: usize) -> Result<Vec<u8>> {
    let q = sub.length().pow(level);
    let mut out = Vec::with_capacity(to - from);
    for (i, &a) in letters.iter().enumerate() {
        let (lo, hi) = (i * q, (i + 1) * q);
        if hi <= from || lo >= to {
            continue;
        }
        let tile = sub.supertile(a, level)?;
        out.extend_from_slice(&tile[from.max(lo) - lo..to.min(hi) - lo]);
    }
    if out.len() != to - from {
        return Err(contract("cut outside the supertile concatenation"));
    }
    Ok(out)
}

fn symbolic(sys: &SystemSpec, window: Vec<u8>, origin: usize) -> Point {
    sys.point(State::Symbolic(SymbolicPoint {
        window: Arc::from(window),
        origin,
        radius: sys.metric_radius(),
    }))
}

fn shape_level(sub: &Substitution, shape: Shape, extra: usize) -> u32 {
    sub.level_for(shape.left.max(shape.right + 1).max(extra).max(1))
}

fn pick<'a, T>(items: &'a [T], rng: &mut ChaCha8Rng) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// A random point. Subshift points sit at a uniform position of the middle
/// supertile of a random legal triple.
pub fn random_point(sys: &SystemSpec, shape: Shape, rng: &mut ChaCha8Rng) -> Result<Point> {
    match sys.kind() {
        SystemKind::Substitution { sub, .. } => {
            let shape = shape.covering(sys.metric_radius());
            let level = shape_level(sub, shape, 0);
            let q = sub.length().pow(level);
            let triple = *pick(sub.legal_triples(), rng);
            let c = q + rng.random_range(0..q);
            let window = cut(sub, &triple, level, c - shape.left, c + shape.right + 1)?;
            Ok(symbolic(sys, window, shape.left))
        }
        SystemKind::Odometer { base, depth } => {
            let digits = (0..*depth).map(|_| rng.random_range(0..*base)).collect();
            sys.odometer_point(OdometerAddress::new(digits, *base)?)
        }
        SystemKind::Rotation { .. } => Ok(sys.point(State::Circle(rng.random::<u64>()))),
        SystemKind::MorseSmale(_) => Ok(sys.point(State::Interval(rng.random::<f64>()))),
    }
}

/// A random point whose odometer address starts with `prefix`.
pub fn random_point_in_cylinder(
    sys: &SystemSpec,
    shape: Shape,
    prefix: &[u8],
    rng: &mut ChaCha8Rng,
) -> Result<Point> {
    match sys.kind() {
        SystemKind::Substitution { sub, .. } => {
            let qb = sub.length();
            if prefix.iter().any(|&d| d as usize >= qb) {
                return Err(contract("prefix digit out of range"));
            }
            let shape = shape.covering(sys.metric_radius());
            let n = prefix.len() as u32;
            let level = shape_level(sub, shape, 0).max(n);
            let q = qb.pow(level);
            let v: usize = prefix.iter().rev().fold(0, |acc, &d| acc * qb + d as usize);
            let j = rng.random_range(0..qb.pow(level - n));
            let triple = *pick(sub.legal_triples(), rng);
            let c = q + j * qb.pow(n) + v;
            let window = cut(sub, &triple, level, c - shape.left, c + shape.right + 1)?;
            Ok(symbolic(sys, window, shape.left))
        }
        SystemKind::Odometer { base, depth } => {
            if prefix.len() > *depth {
                return Err(contract("prefix deeper than the odometer"));
            }
            let mut digits = prefix.to_vec();
            digits.extend((prefix.len()..*depth).map(|_| rng.random_range(0..*base)));
            sys.odometer_point(OdometerAddress::new(digits, *base)?)
        }
        _ => Err(Error::Unsupported(format!("{} has no odometer factor", sys.name()))),
    }
}

/// A random point of the ball `B(center, 2^-r)`.
///
/// Subshift neighbours agree with `center` on `[-r, r]`; they are found as
/// occurrences of that word in random supertile triples. `Ok(None)` means no
/// occurrence turned up.
pub fn ball_point(
    sys: &SystemSpec,
    center: &Point,
    r: usize,
    shape: Shape,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Point>> {
    sys.check(center)?;
    match (sys.kind(), center.state()) {
        (SystemKind::Substitution { sub, .. }, State::Symbolic(s)) => {
            let word = s.central(r).ok_or(Error::Horizon {
                needed: r,
                available: s.left_extent().min(s.right_extent()),
                context: "ball centre window",
            })?;
            let shape = shape.covering(r.max(sys.metric_radius()));
            let level = shape_level(sub, shape, 8 * word.len());
            let q = sub.length().pow(level);
            for _ in 0..BALL_TRIES {
                let triple = *pick(sub.legal_triples(), rng);
                let text = cut(sub, &triple, level, q - r, 2 * q + r)?;
                let hits: Vec<usize> = text
                    .windows(word.len())
                    .enumerate()
                    .filter(|(_, f)| *f == word)
                    .map(|(i, _)| q + i)
                    .collect();
                if hits.is_empty() {
                    continue;
                }
                let c = *pick(&hits, rng);
                let window = cut(sub, &triple, level, c - shape.left, c + shape.right + 1)?;
                return Ok(Some(symbolic(sys, window, shape.left)));
            }
            Ok(None)
        }
        (SystemKind::Odometer { base, depth }, State::Odometer(a)) => {
            let keep = (r + 1).min(*depth);
            let mut digits = a.digits()[..keep].to_vec();
            digits.extend((keep..*depth).map(|_| rng.random_range(0..*base)));
            Ok(Some(sys.odometer_point(OdometerAddress::new(digits, *base)?)?))
        }
        (SystemKind::Rotation { .. }, State::Circle(x)) => {
            if r >= 64 {
                return Ok(Some(center.clone()));
            }
            if r == 0 {
                return Ok(Some(sys.point(State::Circle(rng.random::<u64>()))));
            }
            let span = 1u64 << (64 - r);
            // offset in (-delta, delta), as a two's-complement turn fraction
            let off = rng.random_range(1..2 * span as u128) as u64;
            let y = x.wrapping_add(off).wrapping_sub(span);
            Ok(Some(sys.point(State::Circle(y))))
        }
        (SystemKind::MorseSmale(_), State::Interval(x)) => {
            let delta = (-(r as f64)).exp2();
            for _ in 0..64 {
                let y = x + delta * (2.0 * rng.random::<f64>() - 1.0);
                if (0.0..=1.0).contains(&y) {
                    return Ok(Some(sys.point(State::Interval(y))));
                }
            }
            Ok(Some(center.clone()))
        }
        _ => Err(contract("point state does not match system kind")),
    }
}

/// `m` subshift points agreeing with `center` on `[-r, r]` whose futures split
/// as early as the language allows: the central word is placed as close as
/// possible to the end of a supertile `s^L(b)`, followed by the distinct
/// continuations `s^L(c)`, reused cyclically.
///
/// Returns `Ok(None)` for non-subshift systems or when the word has no
/// occurrence with at least two continuations.
pub fn boundary_family(
    sys: &SystemSpec,
    center: &Point,
    r: usize,
    m: usize,
    shape: Shape,
) -> Result<Option<Vec<Point>>> {
    sys.check(center)?;
    let (sub, s) = match (sys.kind(), center.state()) {
        (SystemKind::Substitution { sub, .. }, State::Symbolic(s)) => (sub, s),
        _ => return Ok(None),
    };
    let word = s.central(r).ok_or(Error::Horizon {
        needed: r,
        available: s.left_extent().min(s.right_extent()),
        context: "boundary family centre window",
    })?;
    boundary_family_for_word(sys, sub, word, r, m, shape)
}

fn boundary_family_for_word(
    sys: &SystemSpec,
    sub: &Substitution,
    word: &[u8],
    r: usize,
    m: usize,
    shape: Shape,
) -> Result<Option<Vec<Point>>> {
    let shape = shape.covering(r.max(sys.metric_radius()));
    let level = shape_level(sub, shape, 8 * word.len());
    let q = sub.length().pow(level);
    let mut best: Option<(usize, [u8; 2], Vec<u8>)> = None;
    for &[a, b] in sub.legal_pairs() {
        let conts: Vec<u8> = sub
            .legal_triples()
            .iter()
            .filter(|t| t[0] == a && t[1] == b)
            .map(|t| t[2])
            .collect();
        if conts.len() < 2 {
            continue;
        }
        let text = cut(sub, &[a, b], level, q - r, 2 * q)?;
        // centres c in [q, 2q - r - 1]; the latest one
        let Some(i) = text.windows(word.len()).rposition(|f| f == word) else { continue };
        let c = q + i;
        if best.as_ref().is_none_or(|(bc, _, bconts)| c > *bc || (c == *bc && conts.len() > bconts.len())) {
            best = Some((c, [a, b], conts));
        }
    }
    let Some((c, [a, b], conts)) = best else { return Ok(None) };
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let triple = [a, b, conts[i % conts.len()]];
        let window = cut(sub, &triple, level, c - shape.left, c + shape.right + 1)?;
        out.push(symbolic(sys, window, shape.left));
    }
    Ok(Some(out))
}

/// The legal point that agrees with `x` on `[-r, r]` and first disagrees with
/// it as close to the origin as possible (within the metric radius). Searches
/// every occurrence of the central word in the middle supertile of every
/// legal triple; ties go to the first occurrence found.
pub fn nearest_distinct(sys: &SystemSpec, x: &Point, r: usize, shape: Shape) -> Result<Option<Point>> {
    sys.check(x)?;
    let (sub, s) = match (sys.kind(), x.state()) {
        (SystemKind::Substitution { sub, .. }, State::Symbolic(s)) => (sub, s),
        _ => return Err(contract("nearest_distinct needs a subshift point")),
    };
    let rad = s.radius();
    if r >= rad {
        return Ok(None);
    }
    let reference = s.central(rad).ok_or(Error::Horizon {
        needed: rad,
        available: s.left_extent().min(s.right_extent()),
        context: "reference window",
    })?;
    let word = &reference[rad - r..=rad + r];
    let shape = shape.covering(rad);
    let level = shape_level(sub, shape, 8 * reference.len());
    let q = sub.length().pow(level);
    // (first disagreement, triple, centre)
    let mut best: Option<(usize, [u8; 3], usize)> = None;
    for triple in sub.legal_triples() {
        let text = cut(sub, triple, level, q - rad, 2 * q + rad)?;
        for (i, f) in text.windows(reference.len()).enumerate() {
            if f[rad - r..=rad + r] != *word {
                continue;
            }
            let k = (r + 1..=rad).find(|&k| f[rad + k] != reference[rad + k] || f[rad - k] != reference[rad - k]);
            if let Some(k) = k {
                if best.as_ref().is_none_or(|(bk, _, _)| k < *bk) {
                    best = Some((k, *triple, q + i));
                }
            }
        }
        if best.as_ref().is_some_and(|(k, _, _)| *k == r + 1) {
            break;
        }
    }
    let Some((_, triple, c)) = best else { return Ok(None) };
    let window = cut(sub, &triple, level, c - shape.left, c + shape.right + 1)?;
    Ok(Some(symbolic(sys, window, shape.left)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::systems::{build_system, metric, SystemConfig};

    #[test]
    fn random_windows_are_legal() {
        let tm = build_system(&SystemConfig::thue_morse()).unwrap();
        let sub = tm.substitution().unwrap();
        let words: std::collections::BTreeSet<Vec<u8>> = sub
            .expand(&[0, 1], 5)
            .windows(8)
            .chain(sub.expand(&[1, 0], 5).windows(8))
            .chain(sub.expand(&[0, 0], 5).windows(8))
            .chain(sub.expand(&[1, 1], 5).windows(8))
            .map(|w| w.to_vec())
            .collect();
        let mut rng = stream(3, Purpose::Axioms, 0);
        for _ in 0..200 {
            let p = random_point(&tm, Shape::new(40, 90), &mut rng).unwrap();
            let s = p.as_symbolic().unwrap();
            assert_eq!(s.window().len(), 131);
            assert!(s.window().windows(8).all(|w| words.contains(w)));
        }
    }

    #[test]
    fn ball_points_stay_in_ball() {
        let tm = build_system(&SystemConfig::thue_morse()).unwrap();
        let mut rng = stream(4, Purpose::Axioms, 0);
        let x = random_point(&tm, Shape::new(64, 64), &mut rng).unwrap();
        for r in [0usize, 3, 10, 40] {
            let y = ball_point(&tm, &x, r, Shape::new(64, 64), &mut rng).unwrap().unwrap();
            assert!(metric(&tm, &x, &y).unwrap().value < (-(r as f64)).exp2());
        }
        let rot = build_system(&SystemConfig::golden_rotation()).unwrap();
        let x = rot.circle_point(0.999).unwrap();
        for r in [1usize, 5, 20] {
            let y = ball_point(&rot, &x, r, Shape::new(0, 0), &mut rng).unwrap().unwrap();
            assert!(metric(&rot, &x, &y).unwrap().value < (-(r as f64)).exp2());
        }
    }

    #[test]
    fn boundary_family_splits_after_the_word() {
        let tm = build_system(&SystemConfig::thue_morse()).unwrap();
        let mut rng = stream(5, Purpose::Axioms, 0);
        let x = random_point(&tm, Shape::new(64, 64), &mut rng).unwrap();
        let fam = boundary_family(&tm, &x, 8, 2, Shape::new(40, 600)).unwrap().unwrap();
        assert!(metric(&tm, &x, &fam[0]).unwrap().value < 1.0 / 256.0);
        assert!(metric(&tm, &x, &fam[1]).unwrap().value < 1.0 / 256.0);
        let a = fam[0].as_symbolic().unwrap();
        let b = fam[1].as_symbolic().unwrap();
        let differ = a.window().iter().zip(b.window()).filter(|(u, v)| u != v).count();
        assert!(differ > 0);
    }

    #[test]
    fn cylinder_points_have_the_prefix() {
        let tm = build_system(&SystemConfig::thue_morse()).unwrap();
        let mut rng = stream(6, Purpose::Axioms, 0);
        let prefix = [1u8, 0, 1, 1];
        for _ in 0..20 {
            let p = random_point_in_cylinder(&tm, Shape::new(200, 200), &prefix, &mut rng).unwrap();
            let a = crate::mef::address(&tm, &p, 4).unwrap();
            assert_eq!(a.digits(), &prefix);
        }
    }
}
