//! Empirical classifiers: pointwise mean equicontinuity, mean sensitivity,
//! the dichotomy for minimal systems, factor mean equicontinuity moduli and
//! the continuity probe for the Besicovitch m-distance.
//!
//! Distances are passed as exponents: `delta_exp = n` stands for `delta = 2^-n`.

use rayon::prelude::*;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::multidist::{besicovitch_estimate, Tuple};
use crate::rng::{stream, substream, Purpose};
use crate::systems::sampling::{
    ball_point, boundary_family, nearest_distinct, random_point, random_point_in_cylinder,
};
use crate::systems::{complement, metric, Point, Shape, State, SystemKind, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    EquicontinuityPoint,
    SensitivePoint,
    MeanEquicontinuous,
    MeanSensitive,
    Inconclusive,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::EquicontinuityPoint => "equicontinuity_point",
            Outcome::SensitivePoint => "sensitive_point",
            Outcome::MeanEquicontinuous => "mean_equicontinuous",
            Outcome::MeanSensitive => "mean_sensitive",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

/// The largest estimate seen at one radius. `worst` is `None` when every ball sample came up empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub delta_exp: usize,
    pub worst: Option<f64>,
    pub samples: usize,
    pub empty: usize,
}

/// A tuple together with its estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub delta_exp: usize,
    pub estimate: f64,
    pub rendered: Vec<String>,
    #[serde(skip)]
    pub points: Vec<Point>,
}

impl Witness {
    fn new(delta_exp: usize, estimate: f64, points: Vec<Point>) -> Self {
        Witness { delta_exp, estimate, rendered: points.iter().map(Point::to_string).collect(), points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub m: usize,
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub epsilon: Option<f64>,
    /// Strictly decreasing deltas (increasing exponents).
    pub evidence: Vec<Evidence>,
    pub witness: Option<Witness>,
    pub params: SamplingParams,
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(contract(format!("m must be at least 2, got {m}")));
    }
    Ok(())
}

fn check_grid(delta_exps: &[usize]) -> Result<()> {
    if delta_exps.is_empty() || delta_exps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract("delta grid must be non-empty and strictly decreasing"));
    }
    Ok(())
}

/// Window needed by points sampled in `2^-r` balls and followed for `horizon` steps.
pub fn sample_shape(sys: &SystemSpec, horizon: usize, r: usize) -> Shape {
    Shape::for_horizon(sys, horizon, r)
}

struct Sample {
    estimate: f64,
    points: Vec<Point>,
}

fn best(samples: impl IntoIterator<Item = Sample>) -> Option<Sample> {
    samples.into_iter().fold(None, |acc: Option<Sample>, s| match acc {
        Some(a) if a.estimate >= s.estimate => Some(a),
        _ => Some(s),
    })
}

fn estimate(sys: &SystemSpec, points: Vec<Point>, horizon: usize) -> Result<Sample> {
    let t = Tuple::new(sys, points)?;
    let e = besicovitch_estimate(sys, &t, horizon)?;
    Ok(Sample { estimate: e.value, points: t.into_points() })
}

/// Tests whether `x` is a mean `eps`-m-equicontinuity point: for each
/// `delta = 2^-n` in the grid, estimates `D̄_m(x, x_2, ..., x_m)` for `samples`
/// neighbour tuples drawn from the ball and records the worst.
#[allow(clippy::too_many_arguments)]
pub fn equicontinuity_point_test(
    sys: &SystemSpec,
    x: &Point,
    m: usize,
    eps: f64,
    delta_exps: &[usize],
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<Verdict> {
    check_m(m)?;
    check_grid(delta_exps)?;
    sys.check(x)?;
    let params = SamplingParams { m, samples, horizon, seed };
    let jobs: Vec<(usize, usize)> =
        (0..delta_exps.len()).flat_map(|d| (0..samples).map(move |j| (d, j))).collect();
    let results = jobs
        .par_iter()
        .map(|&(d, j)| -> Result<Option<Sample>> {
            let r = delta_exps[d];
            let mut rng = substream(seed, Purpose::EquicontinuityBall, d as u64, j as u64);
            let shape = sample_shape(sys, horizon, 0);
            let mut pts = vec![x.clone()];
            for _ in 1..m {
                match ball_point(sys, x, r, shape, &mut rng)? {
                    Some(p) => pts.push(p),
                    None => return Ok(None),
                }
            }
            estimate(sys, pts, horizon).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut evidence = Vec::with_capacity(delta_exps.len());
    let mut last_best = None;
    let mut chunks = results.into_iter();
    for &r in delta_exps {
        let chunk: Vec<Option<Sample>> = chunks.by_ref().take(samples).collect();
        let empty = chunk.iter().filter(|s| s.is_none()).count();
        let b = best(chunk.into_iter().flatten());
        evidence.push(Evidence { delta_exp: r, worst: b.as_ref().map(|s| s.estimate), samples, empty });
        last_best = b.map(|s| (r, s));
    }
    let finest = evidence.last().and_then(|e| e.worst);
    let outcome = match finest {
        Some(w) if w < eps => Outcome::EquicontinuityPoint,
        Some(_) if evidence.iter().all(|e| e.worst.is_some_and(|w| w >= eps)) => Outcome::SensitivePoint,
        _ => Outcome::Inconclusive,
    };
    let witness = last_best.map(|(r, s)| Witness::new(r, s.estimate, s.points));
    Ok(Verdict { outcome, epsilon: Some(eps), evidence, witness, params })
}

/// Searches the balls `B(b, 2^-delta_exp)` around each base point for
/// m-tuples with large `D̄_m`. Succeeds with the largest `eps` in the grid
/// that every ball reaches. Candidates per ball: the boundary family (for
/// subshifts) and `samples` random tuples from the ball; with `samples = 0`
/// only the constant tuple is tried.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_search(
    sys: &SystemSpec,
    m: usize,
    eps_grid: &[f64],
    delta_exp: usize,
    base_points: &[Point],
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<Verdict> {
    check_m(m)?;
    if base_points.is_empty() {
        return Err(contract("sensitivity search needs base points"));
    }
    let params = SamplingParams { m, samples, horizon, seed };
    let shape = sample_shape(sys, horizon, 0);
    let per_ball = base_points
        .par_iter()
        .enumerate()
        .map(|(i, b)| -> Result<Option<Sample>> {
            if samples == 0 {
                return estimate(sys, vec![b.clone(); m], horizon).map(Some);
            }
            let mut found = Vec::new();
            if let Some(fam) = boundary_family(sys, b, delta_exp, m, shape)? {
                found.push(estimate(sys, fam, horizon)?);
            }
            for j in 0..samples {
                let mut rng = substream(seed, Purpose::SensitivityBall, i as u64, j as u64);
                let mut pts = Vec::with_capacity(m);
                for _ in 0..m {
                    if let Some(p) = ball_point(sys, b, delta_exp, shape, &mut rng)? {
                        pts.push(p);
                    }
                }
                if pts.len() == m {
                    found.push(estimate(sys, pts, horizon)?);
                }
            }
            Ok(best(found))
        })
        .collect::<Result<Vec<_>>>()?;

    let empty = per_ball.iter().filter(|b| b.is_none()).count();
    let weakest = if empty == 0 {
        per_ball.iter().flatten().map(|s| s.estimate).reduce(f64::min)
    } else {
        None
    };
    let evidence = vec![Evidence { delta_exp, worst: weakest, samples: base_points.len(), empty }];
    let common = weakest.and_then(|w| {
        eps_grid.iter().copied().filter(|&e| e > 0.0 && w >= e).reduce(f64::max)
    });
    let strongest = best(per_ball.into_iter().flatten());
    let (outcome, epsilon) = match common {
        Some(e) => (Outcome::MeanSensitive, Some(e)),
        None => (Outcome::Inconclusive, None),
    };
    let witness = strongest.map(|s| Witness::new(delta_exp, s.estimate, s.points));
    Ok(Verdict { outcome, epsilon, evidence, witness, params })
}

/// Parameters of [`dichotomy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    pub eps_grid: Vec<f64>,
    pub delta_exps: Vec<usize>,
    pub base_points: usize,
    pub samples: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Random base points, with windows large enough for every radius in the grid.
pub fn base_points(sys: &SystemSpec, count: usize, horizon: usize, reach: usize, seed: u64) -> Result<Vec<Point>> {
    let shape = sample_shape(sys, horizon, reach);
    (0..count)
        .map(|i| random_point(sys, shape, &mut stream(seed, Purpose::BasePoint, i as u64)))
        .collect()
}

/// Mean m-equicontinuous or mean m-sensitive, for minimal systems.
///
/// The sensitivity search runs first, at the finest delta. If it fails, every
/// base point must be an equicontinuity point at the smallest eps of the grid
/// (and therefore at all larger ones).
pub fn dichotomy(sys: &SystemSpec, m: usize, p: &DichotomyParams) -> Result<Verdict> {
    check_m(m)?;
    check_grid(&p.delta_exps)?;
    if !sys.is_minimal() {
        return Err(Error::Unsupported(format!("{} is not minimal; the dichotomy does not apply", sys.name())));
    }
    if p.eps_grid.is_empty() {
        return Err(contract("eps grid must be non-empty"));
    }
    let finest = *p.delta_exps.last().unwrap();
    let bases = base_points(sys, p.base_points, p.horizon, finest, p.seed)?;
    let sens = sensitivity_search(sys, m, &p.eps_grid, finest, &bases, p.samples, p.horizon, p.seed)?;
    if sens.outcome == Outcome::MeanSensitive {
        return Ok(sens);
    }
    let eps = p.eps_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let mut evidence: Vec<Evidence> = p
        .delta_exps
        .iter()
        .map(|&d| Evidence { delta_exp: d, worst: Some(0.0), samples: 0, empty: 0 })
        .collect();
    let mut all_pass = true;
    let mut witness: Option<Witness> = None;
    for (i, b) in bases.iter().enumerate() {
        let v = equicontinuity_point_test(
            sys,
            b,
            m,
            eps,
            &p.delta_exps,
            p.samples,
            p.horizon,
            p.seed.wrapping_add(i as u64 + 1),
        )?;
        all_pass &= v.outcome == Outcome::EquicontinuityPoint;
        for (acc, e) in evidence.iter_mut().zip(&v.evidence) {
            acc.samples += e.samples;
            acc.empty += e.empty;
            acc.worst = match (acc.worst, e.worst) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        if let Some(w) = v.witness {
            if witness.as_ref().is_none_or(|cur| w.estimate > cur.estimate) {
                witness = Some(w);
            }
        }
    }
    let params = SamplingParams { m, samples: p.samples, horizon: p.horizon, seed: p.seed };
    let (outcome, epsilon) = if all_pass && p.samples > 0 {
        (Outcome::MeanEquicontinuous, Some(eps))
    } else {
        (Outcome::Inconclusive, None)
    };
    Ok(Verdict { outcome, epsilon, evidence, witness, params })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub delta_exp: usize,
    pub sup_estimate: f64,
    pub samples: usize,
}

/// Empirical modulus `delta -> sup D̄_m` over tuples that are `delta`-close in the factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub m: usize,
    pub horizon: usize,
    pub rows: Vec<ModulusRow>,
}

impl ModulusTable {
    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_estimate <= w[0].sup_estimate)
    }
}

/// For each `delta = 2^-n`, draws `samples` m-tuples whose factor images are
/// within `delta` of each other (addresses agreeing on digits `0..=n`,
/// positions otherwise random) and records the largest `D̄_m` estimate.
/// Flip-symmetric substitutions also contribute the tuple `(x, x̄, ...)`.
pub fn factor_mean_test(
    sys: &SystemSpec,
    m: usize,
    delta_exps: &[usize],
    samples: usize,
    horizon: usize,
    depth: usize,
    seed: u64,
) -> Result<ModulusTable> {
    check_m(m)?;
    check_grid(delta_exps)?;
    if samples == 0 {
        return Err(contract("samples must be at least 1"));
    }
    if delta_exps.iter().any(|&n| n >= depth) {
        return Err(Error::Horizon {
            needed: delta_exps.last().unwrap() + 1,
            available: depth,
            context: "address depth must exceed every delta exponent",
        });
    }
    let base = match sys.kind() {
        SystemKind::Substitution { sub, .. } => sub.length() as u8,
        SystemKind::Odometer { base, .. } => *base,
        SystemKind::Rotation { .. } => 2,
        SystemKind::MorseSmale(_) => return Err(Error::Unsupported("no odometer factor".into())),
    };
    let flip = sys.substitution().is_some_and(|s| s.is_flip_symmetric());
    let shape = sample_shape(sys, horizon, 0);
    let rows = delta_exps
        .iter()
        .enumerate()
        .map(|(d, &n)| -> Result<ModulusRow> {
            let extra = usize::from(flip);
            let sup = (0..samples + extra)
                .into_par_iter()
                .map(|j| -> Result<f64> {
                    let mut rng = substream(seed, Purpose::Modulus, d as u64, j as u64);
                    let pts = if let SystemKind::Rotation { .. } = sys.kind() {
                        let x = random_point(sys, shape, &mut rng)?;
                        let mut pts = vec![x.clone()];
                        for _ in 1..m {
                            pts.push(ball_point(sys, &x, n + 1, shape, &mut rng)?.expect("circle balls are never empty"));
                        }
                        pts
                    } else {
                        let prefix: Vec<u8> = (0..=n).map(|_| rng.random_range(0..base)).collect();
                        let mut pts = (0..m)
                            .map(|_| random_point_in_cylinder(sys, shape, &prefix, &mut rng))
                            .collect::<Result<Vec<_>>>()?;
                        if j == samples {
                            pts[1] = complement(sys, &pts[0])?;
                        }
                        pts
                    };
                    Ok(estimate(sys, pts, horizon)?.estimate)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(ModulusRow { delta_exp: n, sup_estimate: sup, samples: samples + extra })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModulusTable { m, horizon, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    /// `None` for the anchor row `x = x_2`.
    pub step: Option<usize>,
    pub distance: f64,
    pub estimate: f64,
}

/// Moves the first entry of `(x_2, x_2, x_3, ..., x_m)` towards `x_2` through
/// points at distance about `2^-(j+1)`, `j` in `steps`, and returns
/// `(d(x, x_2), D̄_m(x, x_2, ..., x_m))`, starting with the anchor itself.
///
/// Subshift approach points agree with `x_2` on `[-j, j]` and disagree with it
/// as close to the origin as the language allows; if no legal point disagrees
/// within the metric radius, a random ball point is used instead (seeded).
pub fn dbar_continuity_probe(
    sys: &SystemSpec,
    m: usize,
    anchor: &Tuple,
    steps: &[usize],
    horizon: usize,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    check_m(m)?;
    if anchor.m() != m {
        return Err(contract(format!("anchor has {} points, expected m = {m}", anchor.m())));
    }
    let x2 = &anchor.points()[1];
    if anchor.points()[0] != *x2 {
        return Err(contract("anchor must start with two equal points"));
    }
    let at = |x: Point| -> Result<ProbeRow> {
        let mut pts = anchor.points().to_vec();
        let distance = metric(sys, &x, x2)?.value;
        pts[0] = x;
        let e = besicovitch_estimate(sys, &Tuple::new(sys, pts)?, horizon)?;
        Ok(ProbeRow { step: None, distance, estimate: e.value })
    };
    let mut rows = vec![at(x2.clone())?];
    let shape = sample_shape(sys, horizon, 0);
    let more = steps
        .par_iter()
        .map(|&j| -> Result<ProbeRow> {
            let x = approach_point(sys, x2, j, shape, seed)?;
            Ok(ProbeRow { step: Some(j), ..at(x)? })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.extend(more);
    Ok(rows)
}

fn approach_point(sys: &SystemSpec, x2: &Point, j: usize, shape: Shape, seed: u64) -> Result<Point> {
    match (sys.kind(), x2.state()) {
        (SystemKind::Substitution { .. }, State::Symbolic(_)) => {
            if let Some(x) = nearest_distinct(sys, x2, j, shape)? {
                return Ok(x);
            }
            let mut rng = stream(seed, Purpose::Probe, j as u64);
            ball_point(sys, x2, j, shape, &mut rng)?
                .ok_or_else(|| Error::IllegalWord(format!("no approach point at radius {j}")))
        }
        (SystemKind::Rotation { .. }, State::Circle(x)) => {
            let step = if j >= 64 { 0 } else { 1u64 << (64 - j) };
            Ok(sys.point(State::Circle(x.wrapping_add(step))))
        }
        (SystemKind::MorseSmale(_), State::Interval(x)) => {
            let d = (-(j as f64)).exp2();
            let y = if x + d <= 1.0 { x + d } else { x - d };
            sys.interval_point(y)
        }
        (SystemKind::Odometer { base, .. }, State::Odometer(a)) => {
            let mut digits = a.digits().to_vec();
            if j < digits.len() {
                digits[j] = (digits[j] + 1) % base;
            }
            sys.odometer_point(crate::mef::OdometerAddress::new(digits, *base)?)
        }
        _ => Err(contract("point state does not match system kind")),
    }
}

/// Smallest estimate among probe rows with `0 < distance <= max_distance`.
pub fn probe_gap(rows: &[ProbeRow], max_distance: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.distance > 0.0 && r.distance <= max_distance)
        .map(|r| r.estimate)
        .reduce(f64::min)
}
