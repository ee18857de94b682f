//! Acceptance gate: one PASS/FAIL line per criterion, then a single assertion.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mequi::classify::Outcome;
use mequi::harness::{execute, Constants, ExperimentConfig, Payload};
use mequi::multidist::{besicovitch_estimate, Tuple};
use mequi::systems::{build_system, SystemConfig};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(rel: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn run(rel: &str) -> Result<Payload, String> {
    execute(&load(rel)).map_err(|e| format!("{rel}: {e}"))
}

fn constants() -> Result<Constants, String> {
    Constants::load(&configs().join("constants.toml")).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_axioms() -> Check {
    let cfg = load("experiments/axioms.toml");
    ensure(cfg.tuples == Some(10_000) && cfg.ms == [2, 3, 4] && cfg.system.is_none(), || {
        "config must run 10^4 tuples, m in {2,3,4}, every built-in system".into()
    })?;
    let Payload::Axioms { rows } = execute(&cfg).map_err(|e| e.to_string())? else { unreachable!() };
    let systems = SystemConfig::builtins().len();
    ensure(rows.len() == systems * 3 * 6, || format!("{} rows", rows.len()))?;
    for r in &rows {
        let ok = match r.check {
            "symmetry" | "psd" => r.worst == 0.0,
            "polygon_min" | "polygon_max" => r.worst >= -1e-12,
            "uniform_continuity" => r.worst <= 1e-12,
            "polygon_bes" => r.worst >= -1e-9,
            other => return Err(format!("unexpected check {other}")),
        };
        ensure(ok && r.pass && r.cases == 10_000, || format!("{}/{}/m={:?}: worst {}", r.system, r.check, r.m, r.worst))?;
    }
    let worst_bes = rows.iter().filter(|r| r.check == "polygon_bes").map(|r| r.worst).fold(f64::INFINITY, f64::min);
    Ok(format!("{} checks over {systems} systems, worst D_bar polygon margin {worst_bes:e}", rows.len()))
}

fn c2_rotation() -> Check {
    let Payload::Bes { estimate, .. } = run("experiments/rotation_bes.toml")? else { unreachable!() };
    ensure(estimate.horizon == 100_000, || "horizon must be 10^5".into())?;
    ensure((estimate.value - 0.25).abs() <= 1e-12, || format!("value {}", estimate.value))?;
    Ok(format!("value {}", estimate.value))
}

fn c3_tm_fibre() -> Check {
    let cfg = load("experiments/tm_fibre.toml");
    ensure(cfg.depth == Some(12) && cfg.samples == Some(200), || "depth 12 and 200 samples required".into())?;
    let Payload::Fibre { multiplicity: mu, .. } = execute(&cfg).map_err(|e| e.to_string())? else { unreachable!() };
    ensure(mu.mode == 2, || format!("mode {}", mu.mode))?;
    ensure(mu.fraction(2) >= 0.95, || format!("fraction {}", mu.fraction(2)))?;
    ensure(mu.complement_closed == Some(true), || "fibre not closed under complement".into())?;
    Ok(format!("mode 2, histogram {:?}, complement closed", mu.histogram))
}

fn c4_modulus() -> Check {
    let Payload::Modulus { table, .. } = run("oracles/tm_modulus_m3.toml")? else { unreachable!() };
    let col: Vec<f64> = table.rows.iter().map(|r| r.sup_estimate).collect();
    let exps: Vec<usize> = table.rows.iter().map(|r| r.delta_exp).collect();
    ensure(table.m == 3 && table.horizon == 1 << 16 && exps == [4, 5, 6, 7, 8, 9, 10], || "grid mismatch".into())?;
    ensure(table.is_nonincreasing(), || format!("not nonincreasing: {col:?}"))?;
    ensure(col[col.len() - 1] < col[0] / 2.0, || format!("last not below half the first: {col:?}"))?;
    let pinned = constants()?;
    let pinned = pinned.values("tm_modulus_m3").map_err(|e| e.to_string())?;
    ensure(pinned.len() == col.len() && col.iter().zip(pinned).all(|(a, b)| (a - b).abs() <= 1e-9), || {
        format!("{col:?} differs from pinned {pinned:?}")
    })?;
    Ok(format!("sup column {:.3e} .. {:.3e}, matches pinned table", col[0], col[col.len() - 1]))
}

fn c5_dichotomy() -> Check {
    let eps2 = constants()?.value("tm_eps2_star").map_err(|e| e.to_string())?;
    let cfg = load("experiments/tm_dichotomy_m2.toml");
    let Payload::Classify { verdict, .. } = execute(&cfg).map_err(|e| e.to_string())? else { unreachable!() };
    ensure(verdict.outcome == Outcome::MeanSensitive, || format!("TM m=2: {:?}", verdict.outcome))?;
    let w = verdict.witness.as_ref().ok_or("TM m=2: no witness")?;
    let tm = build_system(cfg.system.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let t = Tuple::new(&tm, w.points.clone()).map_err(|e| e.to_string())?;
    let again = besicovitch_estimate(&tm, &t, cfg.horizon.unwrap()).map_err(|e| e.to_string())?.value;
    ensure(again >= eps2 - 1e-9, || format!("witness re-estimate {again} below eps2* {eps2}"))?;

    let Payload::Classify { verdict: v3, .. } = run("experiments/tm_dichotomy_m3.toml")? else { unreachable!() };
    ensure(v3.outcome == Outcome::MeanEquicontinuous, || format!("TM m=3: {:?}", v3.outcome))?;
    let Payload::Classify { verdict: vr, .. } = run("experiments/rotation_dichotomy_m2.toml")? else { unreachable!() };
    ensure(vr.outcome == Outcome::MeanEquicontinuous, || format!("rotation m=2: {:?}", vr.outcome))?;
    Ok(format!("TM m=2 sensitive (witness {again:.6} >= eps2* {eps2:.6}), TM m=3 and rotation m=2 equicontinuous"))
}

fn c6_morse_smale() -> Check {
    let Payload::Classify { verdict: v2, .. } = run("experiments/morse_smale_point_m2.toml")? else { unreachable!() };
    ensure(v2.outcome == Outcome::SensitivePoint, || format!("m=2: {:?}", v2.outcome))?;
    for e in &v2.evidence {
        let delta = (-(e.delta_exp as f64)).exp2();
        let worst = e.worst.ok_or("m=2: empty ball")?;
        ensure(worst >= 0.5 - delta - 1e-6, || format!("m=2 at 2^-{}: worst {worst}", e.delta_exp))?;
    }
    let cfg3 = load("experiments/morse_smale_point_m3.toml");
    ensure(cfg3.eps_grid == [0.05], || "m=3 must test eps = 0.05".into())?;
    let Payload::Classify { verdict: v3, .. } = execute(&cfg3).map_err(|e| e.to_string())? else { unreachable!() };
    ensure(v3.outcome == Outcome::EquicontinuityPoint, || format!("m=3: {:?}", v3.outcome))?;
    Ok("m=2 sensitive point, m=3 equicontinuity point at eps 0.05".into())
}

fn c7_equivariance() -> Check {
    let cfg = load("experiments/equivariance.toml");
    let Payload::Axioms { rows } = execute(&cfg).map_err(|e| e.to_string())? else { unreachable!() };
    let eq = rows.iter().find(|r| r.check == "equivariance").ok_or("no equivariance row")?;
    let od = rows.iter().find(|r| r.check == "odometer_invariance").ok_or("no odometer row")?;
    ensure(cfg.equivariance_depth == Some(8) && eq.cases == 1000 && eq.worst == 0.0, || format!("{eq:?}"))?;
    ensure(od.cases == 64 * 64 && od.worst == 0.0, || format!("{od:?}"))?;
    Ok("1000 points at depth 8 and all 4096 depth-6 pairs exact".into())
}

fn c8_probe() -> Check {
    let g = constants()?.value("tm_probe_gap").map_err(|e| e.to_string())?;
    ensure(g > 0.0, || "pinned gap not positive".into())?;
    let Payload::Probe { rows, .. } = run("oracles/tm_probe_gap.toml")? else { unreachable!() };
    let near = mequi::classify::probe_gap(&rows, 2f64.powi(-10)).ok_or("no TM probe rows within 2^-10")?;
    ensure(near >= g - 1e-9, || format!("TM gap {near} below pinned {g}"))?;
    let Payload::Probe { rows: rot, .. } = run("experiments/rotation_probe.toml")? else { unreachable!() };
    for r in &rot {
        ensure(r.estimate <= 3.0 * r.distance, || format!("rotation: {} > 3 * {}", r.estimate, r.distance))?;
    }
    Ok(format!("TM gap {near:.6} >= g* {g:.6} within 2^-10; rotation within 3 x distance"))
}

/// Every config behind criteria 1 to 8.
const CONFIGS: [&str; 11] = [
    "experiments/axioms.toml",
    "experiments/rotation_bes.toml",
    "experiments/tm_fibre.toml",
    "oracles/tm_modulus_m3.toml",
    "experiments/tm_dichotomy_m2.toml",
    "experiments/tm_dichotomy_m3.toml",
    "experiments/rotation_dichotomy_m2.toml",
    "experiments/morse_smale_point_m2.toml",
    "experiments/morse_smale_point_m3.toml",
    "experiments/equivariance.toml",
    "oracles/tm_probe_gap.toml",
];

fn c9_determinism() -> Check {
    let mut bytes = 0;
    for rel in CONFIGS.iter().chain(["experiments/rotation_probe.toml"].iter()) {
        let cfg = load(rel);
        let render = |threads: usize| -> Result<String, String> {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| execute(&cfg)).map(|p| p.render()).map_err(|e| format!("{rel}: {e}"))
        };
        let a = render(1)?;
        let b = render(8)?;
        let c = render(8)?;
        ensure(a == b && b == c, || format!("{rel}: output differs between runs or thread counts"))?;
        bytes += a.len();
    }
    Ok(format!("{} configs byte-identical over 1 and 8 threads ({bytes} bytes)", CONFIGS.len() + 1))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        (1, "multidistance axiom suite", Duration::from_secs(30), c1_axioms),
        (2, "rotation isometry", Duration::from_secs(1), c2_rotation),
        (3, "TM fibre structure", Duration::from_secs(60), c3_tm_fibre),
        (4, "TM m=3 modulus sweep", Duration::from_secs(180), c4_modulus),
        (5, "dichotomy verdicts", Duration::from_secs(180), c5_dichotomy),
        (6, "Morse-Smale interior fixed point", Duration::from_secs(30), c6_morse_smale),
        (7, "equivariance and odometer exactness", Duration::from_secs(10), c7_equivariance),
        (8, "continuity probe", Duration::from_secs(120), c8_probe),
        (9, "determinism", Duration::from_secs(600), c9_determinism),
    ];
    let mut failed = Vec::new();
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= limit {
                Ok(detail)
            } else {
                Err(format!("took {took:.1?}, limit {limit:?}"))
            }
        });
        match &result {
            Ok(detail) => println!("criterion {n} PASS [{took:.2?}] {name}: {detail}"),
            Err(why) => {
                println!("criterion {n} FAIL [{took:.2?}] {name}: {why}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
