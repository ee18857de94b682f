//! Seeded axiom suite: multidistance symmetry, positive semi-definiteness,
//! the polygon inequality, a continuity bound for `D_m`, factor-map
//! equivariance and isometry of the odometer translation.

use rand::seq::SliceRandom;
use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::mef::{address, odometer_metric, OdometerAddress};
use crate::multidist::{
    dm_min, replace, FixedHorizonBesicovitch, MaxDistance, MinDistance, Multidistance, Tuple,
};
use crate::rng::{substream, Purpose};
use crate::systems::sampling::{ball_point, random_point};
use crate::systems::{apply, metric, Point, Shape, SystemKind, SystemSpec};

/// Margins for the exact evaluators and for windowed estimates.
pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const ESTIMATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomRow {
    pub system: String,
    pub check: &'static str,
    pub m: Option<usize>,
    pub cases: usize,
    /// Worst observed value of the check's statistic; see [`run_system`].
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct AxiomParams {
    pub tuples: usize,
    pub ms: Vec<usize>,
    pub horizon: usize,
    pub equivariance_points: usize,
    pub equivariance_depth: usize,
    pub odometer_exhaustive_depth: usize,
    pub seed: u64,
}

struct Case {
    asym: f64,
    psd: f64,
    margin_min: f64,
    margin_max: f64,
    margin_bes: f64,
    continuity: f64,
}

fn random_tuple(sys: &SystemSpec, m: usize, shape: Shape, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<Point>> {
    let first = random_point(sys, shape, rng)?;
    let mut pts = vec![first.clone()];
    while pts.len() < m {
        let near = if rng.random::<bool>() {
            let r = rng.random_range(1..12);
            ball_point(sys, &first, r, shape, rng)?
        } else {
            None
        };
        pts.push(match near {
            Some(p) => p,
            None => random_point(sys, shape, rng)?,
        });
    }
    Ok(pts)
}

fn case(sys: &SystemSpec, m: usize, horizon: usize, shape: Shape, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Case> {
    let pts = random_tuple(sys, m, shape, rng)?;
    let z = random_tuple(sys, 1, shape, rng)?.pop().unwrap();
    let t = Tuple::new(sys, pts.clone())?;
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let p = t.permuted(&perm)?;
    let constant = Tuple::new(sys, vec![pts[0].clone(); m])?;

    let min = MinDistance(sys);
    let max = MaxDistance(sys);
    let bes = FixedHorizonBesicovitch { sys, horizon };
    let evals: [&dyn Multidistance; 3] = [&min, &max, &bes];
    let mut asym = 0.0f64;
    let mut psd = 0.0f64;
    let mut margins = [0.0; 3];
    for (k, d) in evals.iter().enumerate() {
        let v = d.eval(&t)?;
        asym = asym.max((v - d.eval(&p)?).abs());
        psd = psd.max((-v).max(0.0)).max(d.eval(&constant)?.abs());
        let mut total = 0.0;
        for i in 0..m {
            total += d.eval(&replace(sys, &t, i, z.clone())?)?;
        }
        margins[k] = total - v;
    }
    let moved = replace(sys, &t, 0, z.clone())?;
    let continuity = (dm_min(sys, &t)? - dm_min(sys, &moved)?).abs() - metric(sys, &pts[0], &z)?.value;
    Ok(Case {
        asym,
        psd,
        margin_min: margins[0],
        margin_max: margins[1],
        margin_bes: margins[2],
        continuity,
    })
}

/// Rows for one system. `worst` is the largest asymmetry for `symmetry`, the
/// largest of `-D(t)` and `D(x,...,x)` for `psd`, the smallest polygon margin
/// for `polygon_*`, the largest excess of `|D_m(t) - D_m(t')|` over the moved
/// point's displacement for `uniform_continuity`, and the number of
/// mismatches for `equivariance` and `odometer_invariance`.
pub fn run_system(sys: &SystemSpec, p: &AxiomParams, sys_index: usize) -> Result<Vec<AxiomRow>> {
    let name = sys.name().to_string();
    let shape = Shape::for_horizon(sys, p.horizon, 12);
    let mut rows = Vec::new();
    let ms: &[usize] = if p.tuples == 0 { &[] } else { &p.ms };
    for &m in ms {
        let outer = (sys_index as u64) << 8 | m as u64;
        let cases = (0..p.tuples)
            .into_par_iter()
            .map(|i| case(sys, m, p.horizon, shape, &mut substream(p.seed, Purpose::Axioms, outer, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let fold_max = |f: fn(&Case) -> f64| cases.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let fold_min = |f: fn(&Case) -> f64| cases.iter().map(f).fold(f64::INFINITY, f64::min);
        let n = cases.len();
        let mut push = |check, worst: f64, pass: bool| {
            rows.push(AxiomRow { system: name.clone(), check, m: Some(m), cases: n, worst, pass })
        };
        let asym = fold_max(|c| c.asym);
        push("symmetry", asym, asym == 0.0);
        let psd = fold_max(|c| c.psd);
        push("psd", psd, psd == 0.0);
        let w = fold_min(|c| c.margin_min);
        push("polygon_min", w, w >= -EXACT_TOLERANCE);
        let w = fold_min(|c| c.margin_max);
        push("polygon_max", w, w >= -EXACT_TOLERANCE);
        let w = fold_min(|c| c.margin_bes);
        push("polygon_bes", w, w >= -ESTIMATE_TOLERANCE);
        let w = fold_max(|c| c.continuity);
        push("uniform_continuity", w, w <= EXACT_TOLERANCE);
    }

    let base = match sys.kind() {
        SystemKind::Substitution { sub, .. } => Some(sub.length() as u8),
        SystemKind::Odometer { base, .. } => Some(*base),
        _ => None,
    };
    let Some(base) = base else { return Ok(rows) };

    if p.equivariance_points > 0 {
        let k = p.equivariance_depth;
        let reach = sys.substitution().map_or(0, |s| s.address_radius(k) + 1);
        let shape = Shape::for_horizon(sys, 1, reach);
        let outer = (sys_index as u64) << 8 | 0xff;
        let bad = (0..p.equivariance_points)
            .into_par_iter()
            .map(|i| -> Result<usize> {
                let x = random_point(sys, shape, &mut substream(p.seed, Purpose::Axioms, outer, i as u64))?;
                let lhs = address(sys, &apply(sys, &x)?, k)?;
                let rhs = address(sys, &x, k)?.add(1);
                Ok(usize::from(lhs != rhs))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        rows.push(AxiomRow {
            system: name.clone(),
            check: "equivariance",
            m: None,
            cases: p.equivariance_points,
            worst: bad as f64,
            pass: bad == 0,
        });
    }

    if p.odometer_exhaustive_depth > 0 {
        let k = p.odometer_exhaustive_depth;
        let count = (base as u128).pow(k as u32);
        let addrs: Vec<OdometerAddress> = (0..count).map(|v| OdometerAddress::from_value(v, base, k)).collect();
        let bad = addrs
            .par_iter()
            .map(|a| -> Result<usize> {
                let a1 = a.add(1);
                let mut bad = 0;
                for b in &addrs {
                    if odometer_metric(a, b)? != odometer_metric(&a1, &b.add(1))? {
                        bad += 1;
                    }
                }
                Ok(bad)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        rows.push(AxiomRow {
            system: name,
            check: "odometer_invariance",
            m: None,
            cases: addrs.len() * addrs.len(),
            worst: bad as f64,
            pass: bad == 0,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_system, SystemConfig};

    #[test]
    fn small_suite_passes_on_every_builtin() {
        let p = AxiomParams {
            tuples: 40,
            ms: vec![2, 3],
            horizon: 32,
            equivariance_points: 20,
            equivariance_depth: 4,
            odometer_exhaustive_depth: 3,
            seed: 9,
        };
        for (i, cfg) in SystemConfig::builtins().iter().enumerate() {
            let sys = build_system(cfg).unwrap();
            let rows = run_system(&sys, &p, i).unwrap();
            assert!(rows.len() >= 12);
            for r in rows {
                assert!(r.pass, "{r:?}");
            }
        }
    }
}
