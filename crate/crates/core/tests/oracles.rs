//! Pinned regression constants, each re-derived here without the library's
//! sampling or estimator code, and compared against a fresh run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use mequi::harness::pin::{extract, Constants};
use mequi::harness::{execute, ExperimentConfig};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn constants() -> Constants {
    Constants::load(&configs().join("constants.toml")).unwrap()
}

fn rerun(name: &str) -> (Option<f64>, Vec<f64>) {
    let c = constants();
    let pinned = &c.oracle[name];
    let cfg = ExperimentConfig::load(&configs().join(&pinned.config)).unwrap();
    assert_eq!(cfg.hash(), pinned.config_hash, "{name}: config changed since pinning");
    extract(name, &execute(&cfg).unwrap()).unwrap()
}

fn thue_morse(n: u64) -> u8 {
    (n.count_ones() % 2) as u8
}

/// Two-sided TM fixed point with `x_{-j} = t_{j-1}`.
fn tm_two_sided(i: i64) -> u8 {
    if i >= 0 {
        thue_morse(i as u64)
    } else {
        thue_morse((-i - 1) as u64)
    }
}

fn grid(h: usize) -> Vec<usize> {
    let mut n = h.div_ceil(2);
    let mut g = vec![n];
    while n < h {
        n = ((n as f64 * 1.1).ceil() as usize).max(n + 1).min(h);
        g.push(n);
    }
    g
}

/// Largest Cesàro average of `d(sigma^n x, sigma^n y)` over the window, radius-32 dyadic metric.
fn windowed_limsup(x: impl Fn(i64) -> u8, y: impl Fn(i64) -> u8, h: usize) -> f64 {
    let r = 32i64;
    let dist = |n: i64| -> f64 {
        (0..=r)
            .find(|&k| x(n + k) != y(n + k) || x(n - k) != y(n - k))
            .map_or(0.0, |k| 0.5f64.powi(k as i32))
    };
    let mut sum = 0.0;
    let mut k = 0;
    let mut best: f64 = 0.0;
    for n in grid(h) {
        while k < n {
            sum += dist(k as i64);
            k += 1;
        }
        best = best.max(sum / n as f64);
    }
    best
}

#[test]
fn tm_dbar2_shift() {
    let h = 1 << 18;
    let oracle = windowed_limsup(tm_two_sided, |i| tm_two_sided(i + 1), h);
    let pinned = constants().value("tm_dbar2_shift").unwrap();
    assert!((pinned - oracle).abs() <= 1e-12, "pinned {pinned}, direct summation {oracle}");
    assert_eq!(rerun("tm_dbar2_shift").0, Some(pinned));
}

#[test]
fn tm_eps2_star() {
    // s^14(0) s^14(0) against s^14(0) s^14(1), both viewed from 256 cells before the seam
    let q = 1i64 << 14;
    let origin = q - 256;
    let tiles = |second: u8| {
        move |i: i64| {
            let p = origin + i;
            if p < q { thue_morse(p as u64) } else { thue_morse((p - q) as u64) ^ second }
        }
    };
    let (left, right) = (tiles(0), tiles(1));
    let h = 8192;
    let oracle = windowed_limsup(left, right, h);
    // closed form: 256 steps before the seam contribute 1 - 2^-32, every later step 1
    let closed = ((h - 256) as f64 + 1.0 - 2f64.powi(-32)) / h as f64;
    assert!((oracle - closed).abs() <= 1e-15, "{oracle} vs {closed}");
    let pinned = constants().value("tm_eps2_star").unwrap();
    assert!((pinned - oracle).abs() <= 1e-12, "pinned {pinned}, direct {oracle}");
    assert_eq!(rerun("tm_eps2_star").0, Some(pinned));
}

#[test]
fn tm_exceptional_fibre() {
    // all four 2-letter words are legal; s^K(b) = TM prefix, flipped for b = 1
    let (q, w) = (1u64 << 10, 32u64);
    let mut words = BTreeSet::new();
    for b in 0..2u8 {
        for c in 0..2u8 {
            let word: Vec<u8> = (q - w..q + w + 1)
                .map(|p| if p < q { thue_morse(p) ^ b } else { thue_morse(p - q) ^ c })
                .collect();
            words.insert(word);
        }
    }
    let pinned = constants().value("tm_exceptional_fibre").unwrap();
    assert_eq!(pinned, words.len() as f64);
    assert_eq!(rerun("tm_exceptional_fibre").0, Some(pinned));
}

fn pd_supertile(a: u8, k: u32) -> Vec<u8> {
    let mut w = vec![a];
    for _ in 0..k {
        w = w.iter().flat_map(|&x| if x == 0 { [0, 1] } else { [0, 0] }).collect();
    }
    w
}

#[test]
fn pd_multiplicity() {
    let (k, w) = (10u32, 32usize);
    let q = 1usize << k;
    let tiles = [pd_supertile(0, k), pd_supertile(1, k)];
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..q {
        let centre = if v >= w { v } else { q + v };
        let mut words = BTreeSet::new();
        for (b, c) in [(0, 0), (0, 1), (1, 0)] {
            let cat: Vec<u8> = tiles[b].iter().chain(&tiles[c]).copied().collect();
            words.insert(cat[centre - w..=centre + w].to_vec());
        }
        *hist.entry(words.len()).or_default() += 1;
    }
    let mode = *hist.iter().max_by_key(|(k, n)| (**n, std::cmp::Reverse(**k))).unwrap().0;
    let pinned = constants().value("pd_multiplicity").unwrap();
    assert_eq!(pinned, mode as f64, "exhaustive histogram {hist:?}");
    assert_eq!(rerun("pd_multiplicity").0, Some(pinned));
}

#[test]
fn tm_modulus_m3() {
    let c = constants();
    let pinned = c.values("tm_modulus_m3").unwrap();
    let (_, fresh) = rerun("tm_modulus_m3");
    assert_eq!(fresh.len(), pinned.len());
    for (a, b) in fresh.iter().zip(pinned) {
        assert!((a - b).abs() <= 1e-9, "{fresh:?} vs {pinned:?}");
    }
}

#[test]
fn tm_probe_gap() {
    let pinned = constants().value("tm_probe_gap").unwrap();
    assert!(pinned > 0.0);
    let fresh = rerun("tm_probe_gap").0.unwrap();
    assert!((fresh - pinned).abs() <= 1e-9);
}

#[test]
fn pinning_is_byte_deterministic() {
    let path = configs().join("pin.toml");
    let a = mequi::harness::pin_constants(&path).unwrap().render();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| mequi::harness::pin_constants(&path)).unwrap().render();
    assert_eq!(a, b);
    assert_eq!(a, std::fs::read_to_string(configs().join("constants.toml")).unwrap());
}
