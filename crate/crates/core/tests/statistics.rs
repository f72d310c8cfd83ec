use std::f64::consts::FRAC_PI_2;

use wvdirect::analysis::analyze_campaign;
use wvdirect::fit::fit_sinusoid;
use wvdirect::qcore::{wrap_angle, Direction};
use wvdirect::sim::{expected_rate, run_campaign, sample_scan, ExperimentConfig};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[test]
fn poisson_moments() {
    let base = ExperimentConfig::strong_preset();
    let phi = 0.7;
    let n = 10_000;
    for d in [Direction::XPlus, Direction::ZMinus] {
        let lambda = expected_rate(&base, d, phi, base.chi_grid[3]) * base.time_per_point;
        let draws: Vec<f64> = (0..n)
            .map(|seed| {
                let cfg = ExperimentConfig {
                    rng_seed: seed,
                    ..base.clone()
                };
                sample_scan(&cfg, d, phi).unwrap().counts[3]
            })
            .collect();
        let (m, sd) = mean_sd(&draws);
        let nf = n as f64;
        let se_mean = (lambda / nf).sqrt();
        let se_var = ((lambda + 2.0 * lambda * lambda) / nf).sqrt();
        assert!(
            (m - lambda).abs() < 4.0 * se_mean,
            "{d}: mean {m} vs {lambda}"
        );
        assert!(
            (sd * sd - lambda).abs() < 4.0 * se_var,
            "{d}: var {} vs {lambda}",
            sd * sd
        );
        assert!(draws.iter().all(|c| c.fract() == 0.0 && *c >= 0.0));
    }
}

fn amplitude_relative_se(time: f64) -> f64 {
    let base = ExperimentConfig {
        time_per_point: time,
        ..ExperimentConfig::strong_preset()
    };
    let amps: Vec<f64> = (0..400)
        .map(|seed| {
            let cfg = ExperimentConfig {
                rng_seed: 1000 + seed,
                ..base.clone()
            };
            fit_sinusoid(&sample_scan(&cfg, Direction::ZPlus, 0.4).unwrap())
                .unwrap()
                .amplitude
        })
        .collect();
    let (m, sd) = mean_sd(&amps);
    sd / m
}

/// Relative standard error scales as 1/√t.
#[test]
fn longer_counting_shrinks_errors() {
    let t = 100.0;
    let base = amplitude_relative_se(t);
    let doubled = amplitude_relative_se(2.0 * t) / base;
    let quadrupled = amplitude_relative_se(4.0 * t) / base;
    assert!(
        (doubled / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.2,
        "2t ratio {doubled}"
    );
    assert!(
        (quadrupled / 0.5 - 1.0).abs() < 0.2,
        "4t ratio {quadrupled}"
    );
}

/// Reported one-sigma errors on ν, θ, φ match ensemble spreads.
#[test]
fn state_sigmas_match_ensemble() {
    for alpha_deg in [15.0f64, 90.0] {
        let base = ExperimentConfig {
            alpha: alpha_deg.to_radians(),
            phi_grid: vec![FRAC_PI_2],
            time_per_point: 200.0,
            ..ExperimentConfig::strong_preset()
        };
        let mut cols: [Vec<f64>; 3] = Default::default();
        let mut reported = [0.0; 3];
        let n = 1500;
        for seed in 0..n {
            let cfg = ExperimentConfig {
                rng_seed: 90_000 + seed,
                ..base.clone()
            };
            let est = analyze_campaign(&run_campaign(&cfg).unwrap()).unwrap();
            let s = &est.points[0].state;
            cols[0].push(s.nu);
            cols[1].push(s.theta_m);
            cols[2].push(FRAC_PI_2 + wrap_angle(s.phi_m - FRAC_PI_2));
            for (r, v) in reported
                .iter_mut()
                .zip([s.sigma_nu, s.sigma_theta, s.sigma_phi])
            {
                *r += v * v;
            }
        }
        for (k, name) in ["nu", "theta", "phi"].into_iter().enumerate() {
            let (m, sd) = mean_sd(&cols[k]);
            let rep = (reported[k] / n as f64).sqrt();
            assert!(
                (rep / sd - 1.0).abs() < 0.15,
                "alpha {alpha_deg}: {name} reported {rep} vs spread {sd}"
            );
            let truth = [1.0, FRAC_PI_2, FRAC_PI_2][k];
            assert!(
                (m - truth).abs() < 4.0 * sd / (n as f64).sqrt() + 0.1 * sd,
                "alpha {alpha_deg}: {name} mean {m}"
            );
        }
    }
}

#[test]
fn noiseless_scans_are_exact_expectations() {
    let cfg = ExperimentConfig {
        noise: wvdirect::sim::NoiseModel::Noiseless,
        ..ExperimentConfig::weak_preset()
    };
    let scan = sample_scan(&cfg, Direction::YMinus, -1.1).unwrap();
    for (chi, n) in scan.chi.iter().zip(&scan.counts) {
        assert_eq!(
            *n,
            expected_rate(&cfg, Direction::YMinus, -1.1, *chi) * cfg.time_per_point
        );
    }
}
