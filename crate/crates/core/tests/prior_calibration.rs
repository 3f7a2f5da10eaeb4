//! Simulation-based calibration of the dynamic sampler at the size of the
//! synthetic calibration criterion. About 15 minutes on one core:
//! `cargo test --test prior_calibration -- --ignored --nocapture`.

use plrank::dynamic_model::{DynamicConfig, SimulationConfig};
use plrank::oracle::calibration::{run_prior_calibration, PriorCalibrationSpec};
use plrank::{ChainConfig, GammaPrior};

fn histogram(ranks: &[f64]) -> [usize; 10] {
    let mut h = [0; 10];
    for r in ranks {
        h[((r * 10.0) as usize).min(9)] += 1;
    }
    h
}

#[test]
#[ignore]
fn intervals_cover_truth_drawn_from_the_prior() {
    let spec = PriorCalibrationSpec {
        replications: 100,
        simulation: SimulationConfig {
            epochs: 30,
            lists_per_epoch: 1,
            list_len: 10,
            tau: 1.0,
        },
        alpha_prior: GammaPrior { shape: 4.0, rate: 2.0 },
        phi_prior: GammaPrior { shape: 2.0, rate: 0.04 },
        chain: ChainConfig::short(20_000, 10_000),
        dynamic: DynamicConfig {
            first_appearance_filter: false,
            ..DynamicConfig::default()
        },
        level: 0.95,
    };
    let r = run_prior_calibration(&spec, 777).unwrap();
    let (ha, hp) = (histogram(&r.alpha_ranks), histogram(&r.phi_ranks));
    println!(
        "alpha covered {}/100, phi covered {}/100; rank deciles alpha {ha:?} phi {hp:?}",
        r.alpha_covered, r.phi_covered
    );
    assert!(r.alpha_covered >= 90 && r.phi_covered >= 90);
    // Rank deciles against uniform: chi-square with 9 degrees of freedom, 0.1% level.
    for h in [ha, hp] {
        let chi2: f64 = h.iter().map(|&n| (n as f64 - 10.0).powi(2) / 10.0).sum();
        assert!(chi2 < 27.88, "{h:?}");
    }
}
