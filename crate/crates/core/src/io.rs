//! On-disk campaign layout.
//!
//! ```text
//! <dir>/config.json          full ExperimentConfig
//! <dir>/scans/phiNN_<d>.csv  one file per (φ index, direction), d ∈ xp xm yp ym zp zm
//! <dir>/scans/calibration.csv
//! <dir>/backgrounds.csv      background run per scan
//! <dir>/estimates.json       written by extraction
//! <dir>/manifest.json        written by the CLI
//! ```
//!
//! Floats are written in shortest round-trip form so a campaign read back
//! from disk is bit-identical to the one generated.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::CampaignEstimates;
use crate::error::{Error, Result};
use crate::qcore::Direction;
use crate::sim::{
    channel_label, BackgroundEstimate, CampaignResult, DirectionSet, ExperimentConfig, FringeScan,
};

pub const CONFIG_JSON: &str = "config.json";
pub const SCANS_DIR: &str = "scans";
pub const CALIBRATION_CSV: &str = "calibration.csv";
pub const BACKGROUNDS_CSV: &str = "backgrounds.csv";
pub const ESTIMATES_JSON: &str = "estimates.json";
pub const MANIFEST_JSON: &str = "manifest.json";

const SCAN_HEADER: [&str; 7] = [
    "chi_rad",
    "counts",
    "time_s",
    "direction",
    "phi_rad",
    "alpha_rad",
    "seed",
];
const BACKGROUND_HEADER: [&str; 4] = ["phi_rad", "direction", "counts", "time_s"];

fn file_code(d: Direction) -> &'static str {
    match d {
        Direction::XPlus => "xp",
        Direction::XMinus => "xm",
        Direction::YPlus => "yp",
        Direction::YMinus => "ym",
        Direction::ZPlus => "zp",
        Direction::ZMinus => "zm",
    }
}

pub fn scan_file_name(phi_index: usize, direction: Direction) -> String {
    format!("phi{phi_index:02}_{}.csv", file_code(direction))
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_scan(path: &Path, scan: &FringeScan, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCAN_HEADER)?;
    for (chi, n) in scan.chi.iter().zip(&scan.counts) {
        w.write_record([
            chi.to_string(),
            n.to_string(),
            scan.time_per_point.to_string(),
            scan.channel_label().to_string(),
            scan.phi.to_string(),
            scan.alpha.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes config, per-scan CSVs and background runs. Existing scan files
/// from an earlier run are replaced.
pub fn write_campaign(dir: &Path, campaign: &CampaignResult) -> Result<()> {
    let scans = dir.join(SCANS_DIR);
    if scans.exists() {
        fs::remove_dir_all(&scans)?;
    }
    fs::create_dir_all(&scans)?;
    write_json(&dir.join(CONFIG_JSON), &campaign.config)?;
    let seed = campaign.config.rng_seed;

    let mut bg = csv::Writer::from_path(dir.join(BACKGROUNDS_CSV))?;
    bg.write_record(BACKGROUND_HEADER)?;
    let mut bg_row = |scan: &FringeScan| {
        bg.write_record([
            scan.phi.to_string(),
            scan.channel_label().to_string(),
            scan.background.counts.to_string(),
            scan.background.time_s.to_string(),
        ])
    };
    for (k, set) in campaign.points.iter().enumerate() {
        for scan in &set.scans {
            let d = scan.direction.ok_or_else(|| {
                Error::Malformed("calibration scan inside a direction set".into())
            })?;
            write_scan(&scans.join(scan_file_name(k, d)), scan, seed)?;
            bg_row(scan)?;
        }
    }
    write_scan(&scans.join(CALIBRATION_CSV), &campaign.calibration, seed)?;
    bg_row(&campaign.calibration)?;
    bg.flush()?;
    Ok(())
}

struct RawScan {
    chi: Vec<f64>,
    counts: Vec<f64>,
    time_s: f64,
    label: String,
    phi: f64,
    alpha: f64,
}

fn parse_f64(s: &str, what: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("{}: bad {what} value {s:?}", path.display())))
}

fn read_scan(path: &Path) -> Result<RawScan> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SCAN_HEADER {
        return Err(Error::Malformed(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut raw = RawScan {
        chi: Vec::new(),
        counts: Vec::new(),
        time_s: 0.0,
        label: String::new(),
        phi: 0.0,
        alpha: 0.0,
    };
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let time_s = parse_f64(&rec[2], "time_s", path)?;
        let phi = parse_f64(&rec[4], "phi_rad", path)?;
        let alpha = parse_f64(&rec[5], "alpha_rad", path)?;
        if k == 0 {
            raw.time_s = time_s;
            raw.label = rec[3].to_string();
            raw.phi = phi;
            raw.alpha = alpha;
        } else if time_s != raw.time_s
            || rec[3] != raw.label
            || phi != raw.phi
            || alpha != raw.alpha
        {
            return Err(Error::Malformed(format!(
                "{}: row {} disagrees with the first row on time, direction, phi or alpha",
                path.display(),
                k + 1
            )));
        }
        raw.chi.push(parse_f64(&rec[0], "chi_rad", path)?);
        raw.counts.push(parse_f64(&rec[1], "counts", path)?);
    }
    if raw.chi.is_empty() {
        return Err(Error::Malformed(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(raw)
}

type BackgroundKey = (u64, String);

fn read_backgrounds(path: &Path) -> Result<Vec<(BackgroundKey, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != BACKGROUND_HEADER {
        return Err(Error::Malformed(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let phi = parse_f64(&rec[0], "phi_rad", path)?;
        out.push((
            (phi.to_bits(), rec[1].to_string()),
            parse_f64(&rec[2], "counts", path)?,
            parse_f64(&rec[3], "time_s", path)?,
        ));
    }
    Ok(out)
}

/// Reads a campaign written by [`write_campaign`]. Absent direction files
/// are tolerated here; analysis reports them by name.
pub fn read_campaign(dir: &Path) -> Result<CampaignResult> {
    let config = read_config(&dir.join(CONFIG_JSON))?;
    let backgrounds = read_backgrounds(&dir.join(BACKGROUNDS_CSV))?;
    let scans = dir.join(SCANS_DIR);

    let to_scan = |raw: RawScan, direction: Option<Direction>, path: &Path| -> Result<FringeScan> {
        if raw.label != channel_label(direction) {
            return Err(Error::Malformed(format!(
                "{}: direction column says {:?}, expected {:?}",
                path.display(),
                raw.label,
                channel_label(direction)
            )));
        }
        let key = (raw.phi.to_bits(), raw.label.clone());
        let (_, counts, time_s) = backgrounds
            .iter()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| Error::Malformed(format!("no background run for {}", path.display())))?;
        Ok(FringeScan {
            direction,
            phi: raw.phi,
            alpha: raw.alpha,
            chi: raw.chi,
            counts: raw.counts,
            time_per_point: raw.time_s,
            background: BackgroundEstimate::from_counts(*counts, *time_s, config.noise),
            noise: config.noise,
        })
    };

    let mut points = Vec::with_capacity(config.phi_grid.len());
    for (k, &phi) in config.phi_grid.iter().enumerate() {
        let mut set = DirectionSet {
            phi,
            alpha: config.alpha,
            regime_label: config.regime_label.clone(),
            scans: Vec::new(),
        };
        for d in Direction::ALL {
            let path = scans.join(scan_file_name(k, d));
            if !path.exists() {
                continue;
            }
            let raw = read_scan(&path)?;
            if raw.phi != phi {
                return Err(Error::Malformed(format!(
                    "{}: phi_rad {} does not match grid value {phi}",
                    path.display(),
                    raw.phi
                )));
            }
            set.scans.push(to_scan(raw, Some(d), &path)?);
        }
        points.push(set);
    }
    let cal_path = scans.join(CALIBRATION_CSV);
    let calibration = to_scan(read_scan(&cal_path)?, None, &cal_path)?;
    Ok(CampaignResult {
        config,
        points,
        calibration,
    })
}

pub fn write_estimates(dir: &Path, est: &CampaignEstimates) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(ESTIMATES_JSON);
    write_json(&path, est)?;
    Ok(path)
}

pub fn read_estimates(dir: &Path) -> Result<CampaignEstimates> {
    read_json(&dir.join(ESTIMATES_JSON))
}
