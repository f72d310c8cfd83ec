//! Virtual interferometer: Poisson-noisy fringe scans for the six spin
//! analysis directions, background runs and a contrast calibration scan.
//!
//! Every random draw comes from its own ChaCha substream keyed by what the
//! draw *is* (regime strength, preselected phase, direction, phase-shifter
//! setting), never by loop position. Changing a grid therefore leaves all
//! other points untouched, and parallel generation reproduces serial output.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{closed_form_fringes, pipeline_intensities};
use crate::qcore::Direction;

const DEG: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    #[default]
    Poisson,
    /// Counts equal their expectation; reported uncertainties vanish.
    Noiseless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Coupling strength, radians.
    pub alpha: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub phi_grid: Vec<f64>,
    pub chi_grid: Vec<f64>,
    /// Seconds per phase-shifter point.
    pub time_per_point: f64,
    /// Counts/s at unit intensity.
    pub peak_rate: f64,
    /// Counts/s.
    pub background_rate: f64,
    pub contrast: f64,
    pub rng_seed: u64,
    pub regime_label: String,
    #[serde(default)]
    pub noise: NoiseModel,
}

fn default_theta() -> f64 {
    FRAC_PI_2
}

/// 13 points over [−150°, +150°].
pub fn default_phi_grid() -> Vec<f64> {
    (0..13).map(|k| (-150.0 + 25.0 * k as f64) * DEG).collect()
}

/// `n` equally spaced points over [0, 2π).
pub fn uniform_chi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

impl ExperimentConfig {
    fn preset(label: &str, alpha_deg: f64, time_per_point: f64) -> Self {
        Self {
            alpha: alpha_deg * DEG,
            theta: FRAC_PI_2,
            phi_grid: default_phi_grid(),
            chi_grid: uniform_chi_grid(16),
            time_per_point,
            peak_rate: 5.0,
            background_rate: 0.5,
            contrast: 0.75,
            rng_seed: 1,
            regime_label: label.to_string(),
            noise: NoiseModel::Poisson,
        }
    }

    /// α = 15°, 540 s per point.
    pub fn weak_preset() -> Self {
        Self::preset("weak", 15.0, 540.0)
    }

    /// α = 90°, 290 s per point.
    pub fn strong_preset() -> Self {
        Self::preset("strong", 90.0, 290.0)
    }

    /// Collects every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha.is_finite() && self.alpha > -PI && self.alpha <= PI) {
            bad.push(format!("alpha: {} not in (-pi, pi]", self.alpha));
        }
        if !(self.theta.is_finite() && (0.0..=PI).contains(&self.theta)) {
            bad.push(format!("theta: {} not in [0, pi]", self.theta));
        }
        if self.phi_grid.is_empty() {
            bad.push("phi_grid: must be non-empty".into());
        }
        if self.phi_grid.iter().any(|v| !v.is_finite()) {
            bad.push("phi_grid: contains non-finite values".into());
        }
        if self.chi_grid.is_empty() {
            bad.push("chi_grid: must be non-empty".into());
        }
        if self.chi_grid.iter().any(|v| !v.is_finite()) {
            bad.push("chi_grid: contains non-finite values".into());
        }
        if !(self.time_per_point.is_finite() && self.time_per_point > 0.0) {
            bad.push(format!(
                "time_per_point: {} must be > 0",
                self.time_per_point
            ));
        }
        if !(self.peak_rate.is_finite() && self.peak_rate > 0.0) {
            bad.push(format!("peak_rate: {} must be > 0", self.peak_rate));
        }
        if !(self.background_rate.is_finite() && self.background_rate >= 0.0) {
            bad.push(format!(
                "background_rate: {} must be >= 0",
                self.background_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            bad.push(format!("contrast: {} not in [0, 1]", self.contrast));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad))
        }
    }

    /// Seconds spent on the background run accompanying each scan.
    pub fn background_time(&self) -> f64 {
        self.time_per_point * self.chi_grid.len() as f64
    }
}

/// Noisy estimate of the background rate for one scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundEstimate {
    /// Counts/s.
    pub rate: f64,
    /// Counts/s.
    pub sigma: f64,
    pub counts: f64,
    pub time_s: f64,
}

impl BackgroundEstimate {
    pub fn from_counts(counts: f64, time_s: f64, noise: NoiseModel) -> Self {
        let sigma = match noise {
            NoiseModel::Poisson => counts.max(1.0).sqrt() / time_s,
            NoiseModel::Noiseless => 0.0,
        };
        Self {
            rate: counts / time_s,
            sigma,
            counts,
            time_s,
        }
    }
}

/// One interferogram: counts against phase-shifter setting χ.
///
/// `direction` is `None` for the spin-analysis-free calibration scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub direction: Option<Direction>,
    pub phi: f64,
    pub alpha: f64,
    pub chi: Vec<f64>,
    /// Integer-valued under Poisson noise; exact expectations when noiseless.
    pub counts: Vec<f64>,
    pub time_per_point: f64,
    pub background: BackgroundEstimate,
    pub noise: NoiseModel,
}

impl FringeScan {
    pub fn channel_label(&self) -> &'static str {
        channel_label(self.direction)
    }
}

pub fn channel_label(direction: Option<Direction>) -> &'static str {
    direction.map_or(CALIBRATION_LABEL, Direction::label)
}

pub const CALIBRATION_LABEL: &str = "cal";

/// The six scans recorded at one preselected phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub phi: f64,
    pub alpha: f64,
    pub regime_label: String,
    pub scans: Vec<FringeScan>,
}

impl DirectionSet {
    pub fn scan(&self, d: Direction) -> Option<&FringeScan> {
        self.scans.iter().find(|s| s.direction == Some(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: ExperimentConfig,
    pub points: Vec<DirectionSet>,
    pub calibration: FringeScan,
}

/// Mean detected rate (counts/s) including background.
pub fn expected_rate(config: &ExperimentConfig, direction: Direction, phi: f64, chi: f64) -> f64 {
    let intensity = if (config.theta - FRAC_PI_2).abs() < 1e-15 {
        closed_form_fringes(phi, chi, config.alpha, config.contrast).get(direction)
    } else {
        pipeline_intensities(config.theta, phi + chi, config.alpha, config.contrast)
            .map(|i| i.get(direction))
            .unwrap_or(0.0)
    };
    config.background_rate + config.peak_rate * intensity.max(0.0)
}

/// Mean rate of the calibration interferogram: no coupling, no spin analysis,
/// balanced empty interferometer.
pub fn calibration_rate(config: &ExperimentConfig, chi: f64) -> f64 {
    config.background_rate + config.peak_rate * (1.0 + config.contrast * chi.cos()) / 2.0
}

// Substream tags.
const TAG_SCAN: u64 = 0x5343_414e;
const TAG_BACKGROUND: u64 = 0x4247_4e44;
const TAG_CALIBRATION: u64 = 0x4341_4c49;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |h, p| splitmix64(h ^ p))
}

fn substream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(parts));
    rng
}

fn draw(mean: f64, noise: NoiseModel, rng: &mut ChaCha8Rng) -> f64 {
    match noise {
        NoiseModel::Noiseless => mean,
        NoiseModel::Poisson if mean <= 0.0 => 0.0,
        NoiseModel::Poisson => Poisson::new(mean)
            .expect("finite positive Poisson mean")
            .sample(rng),
    }
}

fn direction_code(d: Option<Direction>) -> u64 {
    d.map_or(6, |d| d.index() as u64)
}

fn sample_background(config: &ExperimentConfig, parts: &[u64]) -> BackgroundEstimate {
    let time = config.background_time();
    let mut rng = substream(config.rng_seed, parts);
    let counts = draw(config.background_rate * time, config.noise, &mut rng);
    BackgroundEstimate::from_counts(counts, time, config.noise)
}

fn check_scan_config(config: &ExperimentConfig) -> Result<()> {
    config.validate()
}

/// Draws one interferogram for `direction` at preselected phase `phi`.
pub fn sample_scan(
    config: &ExperimentConfig,
    direction: Direction,
    phi: f64,
) -> Result<FringeScan> {
    check_scan_config(config)?;
    Ok(sample_scan_unchecked(config, direction, phi))
}

fn sample_scan_unchecked(config: &ExperimentConfig, direction: Direction, phi: f64) -> FringeScan {
    let key = [
        config.alpha.to_bits(),
        phi.to_bits(),
        direction_code(Some(direction)),
    ];
    let counts = config
        .chi_grid
        .iter()
        .map(|&chi| {
            let mut rng = substream(
                config.rng_seed,
                &[TAG_SCAN, key[0], key[1], key[2], chi.to_bits()],
            );
            let mean = expected_rate(config, direction, phi, chi) * config.time_per_point;
            draw(mean, config.noise, &mut rng)
        })
        .collect();
    let background = sample_background(config, &[TAG_BACKGROUND, key[0], key[1], key[2]]);
    FringeScan {
        direction: Some(direction),
        phi,
        alpha: config.alpha,
        chi: config.chi_grid.clone(),
        counts,
        time_per_point: config.time_per_point,
        background,
        noise: config.noise,
    }
}

/// The six analysis directions at one preselected phase.
pub fn run_direction_set(config: &ExperimentConfig, phi: f64) -> Result<DirectionSet> {
    check_scan_config(config)?;
    Ok(direction_set_unchecked(config, phi))
}

fn direction_set_unchecked(config: &ExperimentConfig, phi: f64) -> DirectionSet {
    DirectionSet {
        phi,
        alpha: config.alpha,
        regime_label: config.regime_label.clone(),
        scans: Direction::ALL
            .into_iter()
            .map(|d| sample_scan_unchecked(config, d, phi))
            .collect(),
    }
}

/// Spin-analysis-free interferogram at zero coupling whose fitted
/// visibility estimates the interferometer contrast.
pub fn calibration_scan(config: &ExperimentConfig) -> Result<FringeScan> {
    check_scan_config(config)?;
    Ok(calibration_unchecked(config))
}

fn calibration_unchecked(config: &ExperimentConfig) -> FringeScan {
    let counts = config
        .chi_grid
        .iter()
        .map(|&chi| {
            let mut rng = substream(config.rng_seed, &[TAG_CALIBRATION, chi.to_bits()]);
            draw(
                calibration_rate(config, chi) * config.time_per_point,
                config.noise,
                &mut rng,
            )
        })
        .collect();
    let background = sample_background(config, &[TAG_BACKGROUND, TAG_CALIBRATION]);
    FringeScan {
        direction: None,
        phi: 0.0,
        alpha: 0.0,
        chi: config.chi_grid.clone(),
        counts,
        time_per_point: config.time_per_point,
        background,
        noise: config.noise,
    }
}

/// Full raw dataset: six scans for every φ on the grid plus calibration.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignResult> {
    run_campaign_with(config, true)
}

pub fn run_campaign_with(config: &ExperimentConfig, parallel: bool) -> Result<CampaignResult> {
    check_scan_config(config)?;
    let points = if parallel {
        config
            .phi_grid
            .par_iter()
            .map(|&phi| direction_set_unchecked(config, phi))
            .collect()
    } else {
        config
            .phi_grid
            .iter()
            .map(|&phi| direction_set_unchecked(config, phi))
            .collect()
    };
    Ok(CampaignResult {
        config: config.clone(),
        points,
        calibration: calibration_unchecked(config),
    })
}
