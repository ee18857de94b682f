//! Multidistances on tuples of points and the Besicovitch m-distance estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::mef::{address, odometer_metric};
use crate::systems::{metric, pair_trace, Point, SystemId, SystemSpec, Trace};

/// An ordered tuple of `m >= 2` points of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    points: Vec<Point>,
    system: SystemId,
}

impl Tuple {
    pub fn new(sys: &SystemSpec, points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(contract(format!("tuple needs m >= 2 points, got {}", points.len())));
        }
        for p in &points {
            sys.check(p)?;
        }
        Ok(Tuple { points, system: sys.id() })
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn system(&self) -> SystemId {
        self.system
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// The tuple with its points reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.m()];
        if perm.len() != self.m() || perm.iter().any(|&i| i >= self.m() || std::mem::replace(&mut seen[i], true)) {
            return Err(contract("not a permutation of the tuple slots"));
        }
        Ok(Tuple { points: perm.iter().map(|&i| self.points[i].clone()).collect(), system: self.system })
    }

    /// The tuple extended by one more point.
    pub fn push(&self, sys: &SystemSpec, z: Point) -> Result<Self> {
        let mut points = self.points.clone();
        points.push(z);
        Tuple::new(sys, points)
    }

    fn check(&self, sys: &SystemSpec) -> Result<()> {
        if self.system != sys.id() {
            return Err(contract(format!("tuple belongs to another system than {}", sys.name())));
        }
        Ok(())
    }
}

fn pairwise(sys: &SystemSpec, t: &Tuple) -> Result<Vec<f64>> {
    t.check(sys)?;
    let p = t.points();
    let mut out = Vec::with_capacity(p.len() * (p.len() - 1) / 2);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            out.push(metric(sys, &p[i], &p[j])?.value);
        }
    }
    Ok(out)
}

/// `D_m`: the smallest pairwise distance.
pub fn dm_min(sys: &SystemSpec, t: &Tuple) -> Result<f64> {
    Ok(pairwise(sys, t)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// `D_m^max`: the largest pairwise distance.
pub fn dm_max(sys: &SystemSpec, t: &Tuple) -> Result<f64> {
    Ok(pairwise(sys, t)?.into_iter().fold(0.0, f64::max))
}

/// `D_{Y,m}^max`: the largest pairwise odometer distance of the depth-`K` addresses.
pub fn dm_max_factor(sys: &SystemSpec, t: &Tuple, depth: usize) -> Result<f64> {
    t.check(sys)?;
    let addrs = t.points().iter().map(|p| address(sys, p, depth)).collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    for i in 0..addrs.len() {
        for j in i + 1..addrs.len() {
            best = best.max(odometer_metric(&addrs[i], &addrs[j])?.value);
        }
    }
    Ok(best)
}

/// `x[i -> z]` with a zero-based slot `i`.
pub fn replace(sys: &SystemSpec, t: &Tuple, i: usize, z: Point) -> Result<Tuple> {
    t.check(sys)?;
    sys.check(&z)?;
    if i >= t.m() {
        return Err(contract(format!("slot {i} out of range for m = {}", t.m())));
    }
    let mut points = t.points.clone();
    points[i] = z;
    Ok(Tuple { points, system: t.system })
}

/// A symmetric, positive semi-definite function of tuples.
pub trait Multidistance: Sync {
    fn system(&self) -> &SystemSpec;
    fn eval(&self, t: &Tuple) -> Result<f64>;
}

pub struct MinDistance<'a>(pub &'a SystemSpec);
pub struct MaxDistance<'a>(pub &'a SystemSpec);

/// The windowed Besicovitch estimate at a fixed horizon.
pub struct FixedHorizonBesicovitch<'a> {
    pub sys: &'a SystemSpec,
    pub horizon: usize,
}

impl Multidistance for MinDistance<'_> {
    fn system(&self) -> &SystemSpec {
        self.0
    }
    fn eval(&self, t: &Tuple) -> Result<f64> {
        dm_min(self.0, t)
    }
}

impl Multidistance for MaxDistance<'_> {
    fn system(&self) -> &SystemSpec {
        self.0
    }
    fn eval(&self, t: &Tuple) -> Result<f64> {
        dm_max(self.0, t)
    }
}

impl Multidistance for FixedHorizonBesicovitch<'_> {
    fn system(&self) -> &SystemSpec {
        self.sys
    }
    fn eval(&self, t: &Tuple) -> Result<f64> {
        Ok(besicovitch_estimate(self.sys, t, self.horizon)?.value)
    }
}

/// `sum_i dist(x[i -> z]) - dist(x)`; nonnegative for a multidistance.
pub fn polygon_margin(dist: &dyn Multidistance, t: &Tuple, z: &Point) -> Result<f64> {
    let sys = dist.system();
    let mut total = 0.0;
    for i in 0..t.m() {
        total += dist.eval(&replace(sys, t, i, z.clone())?)?;
    }
    Ok(total - dist.eval(t)?)
}

/// Windowed-limsup estimate of `D̄_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesEstimate {
    pub value: f64,
    pub horizon: usize,
    /// `(n, A_n)` on the geometric grid over `[ceil(h/2), h]`.
    pub window: Vec<(usize, f64)>,
    pub converged: bool,
    pub bracket: (f64, f64),
}

/// Ratio of the geometric grid of averaging lengths.
pub const WINDOW_RATIO: f64 = 1.1;
/// Relative spread below which a window counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.05;

/// Averaging lengths `ceil(h/2) = n_0 < n_1 < ... < n_last = h`, `n_{i+1} = ceil(1.1 n_i)`.
pub fn window_grid(horizon: usize) -> Vec<usize> {
    let mut n = horizon.div_ceil(2);
    let mut grid = vec![n];
    while n < horizon {
        n = ((n as f64 * WINDOW_RATIO).ceil() as usize).max(n + 1).min(horizon);
        grid.push(n);
    }
    grid
}

/// `D_m(phi^k x_1, ..., phi^k x_m)` for `k = 0..n`.
pub fn dm_trace(sys: &SystemSpec, t: &Tuple, n: usize) -> Result<Trace> {
    t.check(sys)?;
    let p = t.points();
    let mut acc: Option<Trace> = None;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let tr = pair_trace(sys, &p[i], &p[j], n)?;
            match acc.as_mut() {
                None => acc = Some(tr),
                Some(a) => a.min_with(&tr),
            }
        }
    }
    Ok(acc.expect("m >= 2"))
}

/// Cesàro averages `A_n` at the requested lengths (increasing, each `<= trace.len()`).
pub fn cesaro_averages(trace: &Trace, lengths: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(lengths.len());
    match trace {
        Trace::Dyadic(v) => {
            // exact: 2^-e in units of 2^-64, e <= 63
            let mut sum: u128 = 0;
            let mut k = 0;
            for &n in lengths {
                while k < n {
                    if v[k] != crate::systems::DYADIC_ZERO {
                        sum += 1u128 << (64 - v[k] as u32);
                    }
                    k += 1;
                }
                out.push(sum as f64 / 18_446_744_073_709_551_616.0 / n as f64);
            }
        }
        Trace::Real(v) => {
            let mut sum = 0.0;
            let mut k = 0;
            for &n in lengths {
                while k < n {
                    sum += v[k];
                    k += 1;
                }
                out.push(sum / n as f64);
            }
        }
    }
    out
}

/// Estimates `D̄_m^phi(t)` as the largest Cesàro average over the window
/// `[ceil(h/2), h]`. Deterministic; errors rather than truncating when a
/// subshift window does not support `horizon` iterates.
pub fn besicovitch_estimate(sys: &SystemSpec, t: &Tuple, horizon: usize) -> Result<BesEstimate> {
    if horizon < 2 {
        return Err(contract("horizon must be at least 2"));
    }
    let trace = dm_trace(sys, t, horizon)?;
    Ok(estimate_from_trace(&trace, horizon))
}

pub(crate) fn estimate_from_trace(trace: &Trace, horizon: usize) -> BesEstimate {
    let grid = window_grid(horizon);
    let values = cesaro_averages(trace, &grid);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    BesEstimate {
        value: hi,
        horizon,
        window: grid.into_iter().zip(values).collect(),
        converged: hi - lo <= CONVERGENCE_TOLERANCE * hi,
        bracket: (lo, hi),
    }
}

/// [`besicovitch_estimate`] over many tuples in parallel; output order follows input order.
pub fn besicovitch_batch(sys: &SystemSpec, tuples: &[Tuple], horizon: usize) -> Vec<Result<BesEstimate>> {
    tuples.par_iter().map(|t| besicovitch_estimate(sys, t, horizon)).collect()
}
