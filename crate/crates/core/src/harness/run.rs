use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::axioms::{run_system, AxiomParams, AxiomRow};
use super::config::{ClassifyMode, ExperimentConfig, Task};
use super::csv::{exact, float, opt, opt_float, Csv};
use crate::classify::{
    dbar_continuity_probe, dichotomy, equicontinuity_point_test, factor_mean_test, probe_gap,
    sample_shape, sensitivity_search, DichotomyParams, ModulusTable, Outcome, ProbeRow, Verdict,
};
use crate::error::{Error, Result};
use crate::mef::{fibre, multiplicity_estimate, FibreReport, Multiplicity, OdometerAddress};
use crate::multidist::{besicovitch_estimate, BesEstimate, Tuple};
use crate::systems::{build_system, seed_point, Shape, SystemConfig, SystemKind, SystemSpec};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Payload {
    Bes { system: String, points: Vec<String>, estimate: BesEstimate },
    Classify { system: String, mode: ClassifyMode, verdict: Verdict },
    Fibre { system: String, multiplicity: Multiplicity },
    FibreAddress { system: String, report: FibreReport },
    Modulus { system: String, table: ModulusTable },
    Probe { system: String, m: usize, rows: Vec<ProbeRow>, gap: Option<f64>, gap_distance_exp: Option<usize> },
    Axioms { rows: Vec<AxiomRow> },
}

impl Payload {
    /// 0 on success, 2 for an inconclusive verdict, 1 for a failed axiom check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Payload::Classify { verdict, .. } if verdict.outcome == Outcome::Inconclusive => 2,
            Payload::Axioms { rows } if rows.iter().any(|r| !r.pass) => 1,
            _ => 0,
        }
    }

    /// The file written to the output path: CSV for every task except a single fibre.
    pub fn render(&self) -> String {
        match self {
            Payload::Bes { system, points, estimate: e } => {
                let mut c = Csv::new("bes", &["system", "m", "horizon", "value", "lo", "hi", "converged"]);
                c.row(&[
                    system.clone(),
                    points.len().to_string(),
                    e.horizon.to_string(),
                    float(e.value),
                    float(e.bracket.0),
                    float(e.bracket.1),
                    e.converged.to_string(),
                ]);
                c.finish()
            }
            Payload::Classify { system, mode, verdict: v } => {
                let mut c = Csv::new(
                    "classify",
                    &["system", "m", "mode", "outcome", "epsilon", "delta_exp", "worst", "samples", "empty"],
                );
                let mode = serde_json::to_value(mode).unwrap();
                for e in &v.evidence {
                    c.row(&[
                        system.clone(),
                        v.params.m.to_string(),
                        mode.as_str().unwrap().to_string(),
                        v.outcome.name().to_string(),
                        opt_float(v.epsilon),
                        e.delta_exp.to_string(),
                        opt_float(e.worst),
                        e.samples.to_string(),
                        e.empty.to_string(),
                    ]);
                }
                c.finish()
            }
            Payload::Fibre { multiplicity: mu, .. } => {
                let mut c = Csv::new("fibre", &["cardinality", "count", "is_mode"]);
                for (k, n) in &mu.histogram {
                    c.row(&[k.to_string(), n.to_string(), (*k == mu.mode).to_string()]);
                }
                c.finish()
            }
            Payload::FibreAddress { report, .. } => report.to_string(),
            Payload::Modulus { table, .. } => {
                let mut c = Csv::new("modulus", &["delta_exp", "sup_estimate", "samples"]);
                for r in &table.rows {
                    c.row(&[r.delta_exp.to_string(), float(r.sup_estimate), r.samples.to_string()]);
                }
                c.finish()
            }
            Payload::Probe { rows, .. } => {
                let mut c = Csv::new("probe", &["step", "distance", "estimate"]);
                for r in rows {
                    c.row(&[opt(r.step), exact(r.distance), float(r.estimate)]);
                }
                c.finish()
            }
            Payload::Axioms { rows } => {
                let mut c = Csv::new("axioms", &["system", "check", "m", "cases", "worst", "result"]);
                for r in rows {
                    c.row(&[
                        r.system.clone(),
                        r.check.to_string(),
                        opt(r.m),
                        r.cases.to_string(),
                        float(r.worst),
                        if r.pass { "pass" } else { "fail" }.to_string(),
                    ]);
                }
                c.finish()
            }
        }
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        match self {
            Payload::Bes { system, estimate: e, .. } => format!(
                "{system}: D_bar ~ {} at horizon {} (window [{}, {}], converged: {})",
                e.value, e.horizon, e.bracket.0, e.bracket.1, e.converged
            ),
            Payload::Classify { system, verdict: v, .. } => {
                let mut s = format!("{system}, m = {}: {}", v.params.m, v.outcome.name());
                if let Some(eps) = v.epsilon {
                    s.push_str(&format!(" at epsilon {eps}"));
                }
                if let Some(w) = &v.witness {
                    s.push_str(&format!("\nwitness (delta 2^-{}): estimate {}", w.delta_exp, w.estimate));
                    for p in &w.rendered {
                        s.push_str(&format!("\n  {p}"));
                    }
                }
                s
            }
            Payload::Fibre { system, multiplicity: mu } => {
                let mut s = format!("{system}: mode {} over {} addresses, histogram {:?}", mu.mode, mu.samples, mu.histogram);
                if let Some(c) = mu.complement_closed {
                    s.push_str(&format!(", complement closed: {c}"));
                }
                s
            }
            Payload::FibreAddress { system, report } => {
                format!("{system}: fibre over {} has {} words", report.address.render(), report.cardinality)
            }
            Payload::Modulus { system, table } => format!(
                "{system}, m = {}: sup estimates {:?}, nonincreasing: {}",
                table.m,
                table.rows.iter().map(|r| r.sup_estimate).collect::<Vec<_>>(),
                table.is_nonincreasing()
            ),
            Payload::Probe { system, m, gap, gap_distance_exp, .. } => match (gap, gap_distance_exp) {
                (Some(g), Some(e)) => format!("{system}, m = {m}: gap {g} at distances <= 2^-{e}"),
                (None, Some(e)) => format!("{system}, m = {m}: no probe rows at distances <= 2^-{e}"),
                _ => format!("{system}, m = {m}: probe complete"),
            },
            Payload::Axioms { rows } => {
                let failed: Vec<String> = rows
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| format!("{}/{}/{}", r.system, r.check, opt(r.m)))
                    .collect();
                if failed.is_empty() {
                    format!("{} checks: all pass", rows.len())
                } else {
                    format!("{} checks, failed: {}", rows.len(), failed.join(" "))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time: f64,
    pub payload: Payload,
}

fn seeds(sys: &SystemSpec, cfg: &ExperimentConfig, shape: Shape) -> Result<Vec<crate::systems::Point>> {
    cfg.points.iter().map(|s| seed_point(sys, s, shape)).collect()
}

fn factor_base(sys: &SystemSpec) -> Result<u8> {
    match sys.kind() {
        SystemKind::Substitution { sub, .. } => Ok(sub.length() as u8),
        SystemKind::Odometer { base, .. } => Ok(*base),
        SystemKind::Rotation { .. } => Ok(2),
        SystemKind::MorseSmale(_) => Err(Error::Unsupported(format!("{} has no odometer factor", sys.name()))),
    }
}

/// Computes the task payload. Pure: no files are touched.
pub fn execute(cfg: &ExperimentConfig) -> Result<Payload> {
    cfg.validate()?;
    if cfg.task == Task::Axioms {
        let systems = match &cfg.system {
            Some(s) => vec![s.clone()],
            None => SystemConfig::builtins(),
        };
        let params = AxiomParams {
            tuples: cfg.need(cfg.tuples, "tuples")?,
            ms: cfg.ms.clone(),
            horizon: cfg.need(cfg.horizon, "horizon")?,
            equivariance_points: cfg.equivariance_points.unwrap_or(0),
            equivariance_depth: cfg.equivariance_depth.unwrap_or(8),
            odometer_exhaustive_depth: cfg.odometer_exhaustive_depth.unwrap_or(0),
            seed: cfg.seed,
        };
        let mut rows = Vec::new();
        for (i, s) in systems.iter().enumerate() {
            rows.extend(run_system(&build_system(s)?, &params, i)?);
        }
        return Ok(Payload::Axioms { rows });
    }

    let sys = build_system(cfg.system()?)?;
    let system = sys.name().to_string();
    match cfg.task {
        Task::Bes => {
            let h = cfg.need(cfg.horizon, "horizon")?;
            let pts = seeds(&sys, cfg, Shape::for_horizon(&sys, h, 0))?;
            let points = pts.iter().map(|p| p.to_string()).collect();
            let estimate = besicovitch_estimate(&sys, &Tuple::new(&sys, pts)?, h)?;
            Ok(Payload::Bes { system, points, estimate })
        }
        Task::Classify => {
            let m = cfg.need(cfg.m, "m")?;
            let h = cfg.need(cfg.horizon, "horizon")?;
            let samples = cfg.need(cfg.samples, "samples")?;
            let mode = cfg.need(cfg.mode, "mode")?;
            let finest = *cfg.delta_exps.last().unwrap();
            let verdict = match mode {
                ClassifyMode::Point => {
                    let x = seed_point(&sys, &cfg.points[0], sample_shape(&sys, h, finest))?;
                    equicontinuity_point_test(&sys, &x, m, cfg.eps_grid[0], &cfg.delta_exps, samples, h, cfg.seed)?
                }
                ClassifyMode::Search => {
                    let count = cfg.need(cfg.base_points, "base_points")?;
                    let bases = crate::classify::base_points(&sys, count, h, finest, cfg.seed)?;
                    sensitivity_search(&sys, m, &cfg.eps_grid, finest, &bases, samples, h, cfg.seed)?
                }
                ClassifyMode::Dichotomy => dichotomy(
                    &sys,
                    m,
                    &DichotomyParams {
                        eps_grid: cfg.eps_grid.clone(),
                        delta_exps: cfg.delta_exps.clone(),
                        base_points: cfg.need(cfg.base_points, "base_points")?,
                        samples,
                        horizon: h,
                        seed: cfg.seed,
                    },
                )?,
            };
            Ok(Payload::Classify { system, mode, verdict })
        }
        Task::Fibre => {
            let w = cfg.need(cfg.word_radius, "word_radius")?;
            let base = factor_base(&sys)?;
            if let Some(digits) = &cfg.address {
                let report = fibre(&sys, &OdometerAddress::new(digits.clone(), base)?, w)?;
                return Ok(Payload::FibreAddress { system, report });
            }
            let depth = cfg.need(cfg.depth, "depth")?;
            let multiplicity = if cfg.exhaustive {
                let count = (base as u128)
                    .checked_pow(depth as u32)
                    .filter(|&c| c <= 1 << 20)
                    .ok_or_else(|| Error::Config(format!("exhaustive fibre enumeration at depth {depth} is too large")))?;
                use rayon::prelude::*;
                let reports = (0..count)
                    .into_par_iter()
                    .map(|v| fibre(&sys, &OdometerAddress::from_value(v, base, depth), w))
                    .collect::<Result<Vec<_>>>()?;
                Multiplicity::from_reports(&sys, reports)
            } else {
                multiplicity_estimate(&sys, depth, w, cfg.need(cfg.samples, "samples")?, cfg.seed)?
            };
            Ok(Payload::Fibre { system, multiplicity })
        }
        Task::Modulus => {
            let table = factor_mean_test(
                &sys,
                cfg.need(cfg.m, "m")?,
                &cfg.delta_exps,
                cfg.need(cfg.samples, "samples")?,
                cfg.need(cfg.horizon, "horizon")?,
                cfg.need(cfg.depth, "depth")?,
                cfg.seed,
            )?;
            Ok(Payload::Modulus { system, table })
        }
        Task::Probe => {
            let m = cfg.need(cfg.m, "m")?;
            let h = cfg.need(cfg.horizon, "horizon")?;
            let rest = seeds(&sys, cfg, sample_shape(&sys, h, 0))?;
            let mut pts = vec![rest[0].clone()];
            pts.extend(rest);
            let anchor = Tuple::new(&sys, pts)?;
            let rows = dbar_continuity_probe(&sys, m, &anchor, &cfg.steps, h, cfg.seed)?;
            let gap = cfg.gap_distance_exp.and_then(|e| probe_gap(&rows, (-(e as f64)).exp2()));
            Ok(Payload::Probe { system, m, rows, gap, gap_distance_exp: cfg.gap_distance_exp })
        }
        Task::Axioms => unreachable!(),
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// The JSON record lives next to the output: `out.csv` -> `out.csv.json`.
pub fn record_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Executes the task and, when the config names an output path, writes the
/// rendered output and the JSON record atomically.
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let payload = execute(cfg)?;
    let record = RunRecord {
        config_hash: cfg.hash(),
        version: VERSION,
        wall_time: start.elapsed().as_secs_f64(),
        payload,
    };
    if let Some(out) = &cfg.output {
        let out = Path::new(out);
        write_atomic(out, record.payload.render().as_bytes())?;
        let json = serde_json::to_vec_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&record_path(out), &json)?;
    }
    Ok(record)
}
