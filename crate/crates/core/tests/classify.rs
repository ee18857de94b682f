use mequi::classify::{dichotomy, equicontinuity_point_test, DichotomyParams, Outcome};
use mequi::mef::multiplicity_estimate;
use mequi::multidist::{besicovitch_estimate, Tuple};
use mequi::systems::{build_system, SystemConfig};

#[test]
fn multiplicity_mode_is_stable_in_depth() {
    for (cfg, expected) in [(SystemConfig::thue_morse(), 2), (SystemConfig::period_doubling(), 1)] {
        let sys = build_system(&cfg).unwrap();
        let modes: Vec<usize> =
            [8, 10, 12].iter().map(|&k| multiplicity_estimate(&sys, k, 32, 150, 21).unwrap().mode).collect();
        assert_eq!(modes, [expected; 3], "{}", sys.name());
    }
}

/// A sensitive verdict's witness must reproduce an estimate of at least the reported epsilon.
#[test]
fn sensitive_verdicts_are_backed_by_their_witness() {
    let tm = build_system(&SystemConfig::thue_morse()).unwrap();
    for seed in 0..4 {
        let p = DichotomyParams {
            eps_grid: vec![0.25, 0.5],
            delta_exps: vec![4, 6],
            base_points: 4,
            samples: 4,
            horizon: 2048,
            seed,
        };
        let v = dichotomy(&tm, 2, &p).unwrap();
        assert_eq!(v.outcome, Outcome::MeanSensitive);
        let w = v.witness.unwrap();
        let again = besicovitch_estimate(&tm, &Tuple::new(&tm, w.points).unwrap(), p.horizon).unwrap().value;
        assert_eq!(again, w.estimate);
        assert!(again >= v.epsilon.unwrap());
        assert!(v.evidence.iter().all(|e| e.worst.unwrap() >= v.epsilon.unwrap()));
    }
}

#[test]
fn equicontinuity_verdicts_respect_epsilon() {
    let ms = build_system(&SystemConfig::morse_smale(vec![0.0, 0.5, 1.0], 0.5)).unwrap();
    for x in [0.1, 0.3, 0.75] {
        let p = ms.interval_point(x).unwrap();
        let v = equicontinuity_point_test(&ms, &p, 2, 0.1, &[6, 8, 10], 8, 4096, 5).unwrap();
        let finest = v.evidence.last().unwrap().worst.unwrap();
        match v.outcome {
            Outcome::EquicontinuityPoint => assert!(finest < 0.1),
            Outcome::SensitivePoint => assert!(v.evidence.iter().all(|e| e.worst.unwrap() >= 0.1)),
            Outcome::Inconclusive => {}
            other => panic!("pointwise test returned {other:?}"),
        }
        // points off the fixed points are attracted to a single fixed point
        assert_eq!(v.outcome, Outcome::EquicontinuityPoint, "x = {x}");
    }
}
