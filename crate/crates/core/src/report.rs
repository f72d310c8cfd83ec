//! Precision and accuracy over a φ sweep, the weak-versus-strong comparison
//! table, and CSV/JSON emission for external plotting.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::CampaignEstimates;
use crate::error::{Error, Result};
use crate::fit::fit_sinusoid;
use crate::qcore::wrap_angle;
use crate::sim::CampaignResult;

/// σ̄ = √(mean σᵢ²)
pub fn precision_rms(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("precision_rms needs at least one sigma"));
    }
    Ok((sigmas.iter().map(|s| s * s).sum::<f64>() / sigmas.len() as f64).sqrt())
}

/// Δ̄ = √(mean (tᵢ − mᵢ)²)
pub fn accuracy_rms(measured: &[f64], theory: &[f64]) -> Result<f64> {
    rms_diff(measured, theory, |d| d)
}

/// Δ̄ with differences taken on the circle, wrapped onto (−π, π].
pub fn accuracy_rms_circular(measured: &[f64], theory: &[f64]) -> Result<f64> {
    rms_diff(measured, theory, wrap_angle)
}

fn rms_diff(measured: &[f64], theory: &[f64], diff: impl Fn(f64) -> f64) -> Result<f64> {
    if measured.len() != theory.len() {
        return Err(Error::LengthMismatch {
            left: measured.len(),
            right: theory.len(),
        });
    }
    if measured.is_empty() {
        return Err(Error::EmptyInput("accuracy_rms needs at least one point"));
    }
    let sum: f64 = measured
        .iter()
        .zip(theory)
        .map(|(m, t)| diff(t - m).powi(2))
        .sum();
    Ok((sum / measured.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub precision: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMetrics {
    pub nu: Metric,
    pub theta: Metric,
    pub phi: Metric,
    pub time_per_point_s: f64,
    pub alpha_rad: f64,
    /// Auxiliary: the independently measured |w| against its prediction.
    pub modulus: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regimes {
    pub weak: RegimeMetrics,
    pub strong: RegimeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair<T> {
    pub weak: T,
    pub strong: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: Pair<u64>,
    pub config_hash: Pair<String>,
    /// Preselected phases, radians.
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub regimes: Regimes,
    /// Cells where strong does not beat weak, as `"<metric>.<parameter>"`.
    pub flags: Vec<String>,
    pub meta: ReportMeta,
}

impl ComparisonReport {
    pub fn strong_wins_everywhere(&self) -> bool {
        self.flags.is_empty()
    }

    /// `(parameter, weak, strong)` for the three state parameters.
    pub fn rows(&self) -> [(&'static str, Metric, Metric); 3] {
        let (w, s) = (&self.regimes.weak, &self.regimes.strong);
        [
            ("nu", w.nu, s.nu),
            ("theta", w.theta, s.theta),
            ("phi", w.phi, s.phi),
        ]
    }

    /// Plain-text 12-cell table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("           precision            accuracy\n");
        out.push_str("param      weak      strong     weak      strong\n");
        for (name, w, s) in self.rows() {
            out.push_str(&format!(
                "{name:<8} {:>9.4} {:>9.4}  {:>9.4} {:>9.4}\n",
                w.precision, s.precision, w.accuracy, s.accuracy
            ));
        }
        out
    }
}

fn regime_metrics(est: &CampaignEstimates) -> Result<RegimeMetrics> {
    let pts = &est.points;
    let col = |f: &dyn Fn(&crate::analysis::PointEstimate) -> f64| {
        pts.iter().map(f).collect::<Vec<f64>>()
    };
    let metric_lin = |m: Vec<f64>, t: Vec<f64>, s: Vec<f64>| -> Result<Metric> {
        Ok(Metric {
            precision: precision_rms(&s)?,
            accuracy: accuracy_rms(&m, &t)?,
        })
    };
    let theory_modulus = col(&|p| p.theory.weak_value_re.hypot(p.theory.weak_value_im));
    Ok(RegimeMetrics {
        nu: metric_lin(
            col(&|p| p.state.nu),
            col(&|p| p.theory.nu),
            col(&|p| p.state.sigma_nu),
        )?,
        theta: metric_lin(
            col(&|p| p.state.theta_m),
            col(&|p| p.theory.theta),
            col(&|p| p.state.sigma_theta),
        )?,
        phi: Metric {
            precision: precision_rms(&col(&|p| p.state.sigma_phi))?,
            accuracy: accuracy_rms_circular(&col(&|p| p.state.phi_m), &col(&|p| p.theory.phi))?,
        },
        time_per_point_s: est.time_per_point_s,
        alpha_rad: est.alpha,
        modulus: metric_lin(
            col(&|p| p.weak_value.modulus),
            theory_modulus,
            col(&|p| p.weak_value.sigma_modulus),
        )?,
    })
}

/// Fills the weak/strong table and flags every cell where strong ≥ weak.
pub fn build_comparison(
    weak: &CampaignEstimates,
    strong: &CampaignEstimates,
) -> Result<ComparisonReport> {
    if weak.points.len() != strong.points.len() {
        return Err(Error::GridMismatch(format!(
            "{} weak points vs {} strong points",
            weak.points.len(),
            strong.points.len()
        )));
    }
    for (w, s) in weak.points.iter().zip(&strong.points) {
        if (w.phi_true - s.phi_true).abs() > 1e-12 || (w.theta_true - s.theta_true).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "weak point (theta {}, phi {}) vs strong point (theta {}, phi {})",
                w.theta_true, w.phi_true, s.theta_true, s.phi_true
            )));
        }
    }
    let regimes = Regimes {
        weak: regime_metrics(weak)?,
        strong: regime_metrics(strong)?,
    };
    let mut flags = Vec::new();
    let pairs = [
        ("nu", regimes.weak.nu, regimes.strong.nu),
        ("theta", regimes.weak.theta, regimes.strong.theta),
        ("phi", regimes.weak.phi, regimes.strong.phi),
    ];
    for (name, w, s) in pairs {
        if s.precision >= w.precision {
            flags.push(format!("precision.{name}"));
        }
    }
    for (name, w, s) in pairs {
        if s.accuracy >= w.accuracy {
            flags.push(format!("accuracy.{name}"));
        }
    }
    Ok(ComparisonReport {
        regimes,
        flags,
        meta: ReportMeta {
            seed: Pair {
                weak: weak.seed,
                strong: strong.seed,
            },
            config_hash: Pair {
                weak: weak.config_hash.clone(),
                strong: strong.config_hash.clone(),
            },
            grid: weak.points.iter().map(|p| p.phi_true).collect(),
        },
    })
}

pub const REPORT_JSON: &str = "report.json";
pub const TABLE_CSV: &str = "table.csv";
pub const STATE_CSV: &str = "state_points.csv";
pub const FRINGES_CSV: &str = "fringes.csv";

fn write_lines(path: &Path, header_comment: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# {header_comment}")?;
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()?;
    Ok(())
}

/// Writes the comparison (JSON and CSV), per-φ state points with theory
/// curves, and background-subtracted fringe data with fitted curves.
pub fn emit_outputs(
    report: &ComparisonReport,
    estimates: [&CampaignEstimates; 2],
    campaigns: [&CampaignResult; 2],
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join(REPORT_JSON),
        serde_json::to_string_pretty(report)?,
    )?;

    let rows: Vec<String> = report
        .rows()
        .iter()
        .map(|(name, w, s)| {
            format!(
                "{name},{},{},{},{},{},{}",
                w.precision,
                s.precision,
                w.accuracy,
                s.accuracy,
                w.precision / s.precision,
                w.accuracy / s.accuracy
            )
        })
        .collect();
    write_lines(
        &out_dir.join(TABLE_CSV),
        "precision = RMS of one-sigma errors, accuracy = RMS deviation from theory; nu dimensionless, theta and phi in radians; ratios are weak/strong",
        "parameter,weak_precision,strong_precision,weak_accuracy,strong_accuracy,precision_ratio,accuracy_ratio",
        &rows,
    )?;

    let regimes = ["weak", "strong"];
    let mut rows = Vec::new();
    for (label, est) in regimes.iter().zip(estimates) {
        for (param, pick) in [
            (
                "nu",
                (|p: &crate::analysis::PointEstimate| (p.state.nu, p.state.sigma_nu, p.theory.nu))
                    as fn(&_) -> _,
            ),
            ("theta", |p| {
                (p.state.theta_m, p.state.sigma_theta, p.theory.theta)
            }),
            ("phi", |p| (p.state.phi_m, p.state.sigma_phi, p.theory.phi)),
        ] {
            for p in &est.points {
                let (m, s, t) = pick(p);
                rows.push(format!("{label},{param},{},{m},{s},{t}", p.phi_true));
            }
        }
    }
    write_lines(
        &out_dir.join(STATE_CSV),
        "one row per regime, parameter and preselected phase; phi_true_rad in radians; nu dimensionless; theta and phi values in radians; sigma is one standard deviation",
        "regime,parameter,phi_true_rad,measured,sigma,theory",
        &rows,
    )?;

    let mut rows = Vec::new();
    for (label, camp) in regimes.iter().zip(campaigns) {
        for set in &camp.points {
            for scan in &set.scans {
                let fit = fit_sinusoid(scan)?;
                let t = scan.time_per_point;
                for (chi, n) in scan.chi.iter().zip(&scan.counts) {
                    rows.push(format!(
                        "{label},{},{},{chi},{},{},{}",
                        set.phi,
                        scan.channel_label(),
                        n / t - scan.background.rate,
                        n.max(1.0).sqrt() / t,
                        fit.model(*chi)
                    ));
                }
            }
        }
    }
    write_lines(
        &out_dir.join(FRINGES_CSV),
        "background-subtracted fringes; angles in radians; rate, sigma and fit in counts/s",
        "regime,phi_rad,direction,chi_rad,rate_per_s,sigma_per_s,fit_per_s",
        &rows,
    )?;
    Ok(())
}
