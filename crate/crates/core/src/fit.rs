//! Weighted linear least-squares fit of unit-frequency fringes
//! `rate(χ) = A + P cos χ + Q sin χ = A + B cos(χ + δ)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::wrap_angle;
use crate::sim::{FringeScan, NoiseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// A, counts/s.
    pub offset: f64,
    /// B = √(P² + Q²), counts/s.
    pub amplitude: f64,
    /// δ = atan2(−Q, P) in (−π, π].
    pub phase: f64,
    /// P = B cos δ.
    pub p: f64,
    /// Q = −B sin δ.
    pub q: f64,
    /// Covariance over (A, P, Q).
    pub covariance: [[f64; 3]; 3],
    pub reduced_chi2: f64,
    pub n_points: usize,
}

impl FringeFit {
    pub fn model(&self, chi: f64) -> f64 {
        self.offset + self.p * chi.cos() + self.q * chi.sin()
    }
}

/// Largest circular gap between sampled phases must not exceed π.
fn check_span(chi: &[f64]) -> Result<()> {
    let mut ang: Vec<f64> = chi.iter().map(|c| c.rem_euclid(TAU)).collect();
    ang.sort_by(f64::total_cmp);
    ang.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if ang.len() < 3 {
        return Err(Error::DegenerateDesign(format!(
            "{} distinct phase settings; need at least 3",
            ang.len()
        )));
    }
    let wrap_gap = ang[0] + TAU - ang[ang.len() - 1];
    let max_gap = ang.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max);
    if TAU - max_gap < PI - 1e-12 {
        return Err(Error::DegenerateDesign(format!(
            "phase settings span {:.3} rad, less than half a period",
            TAU - max_gap
        )));
    }
    Ok(())
}

/// Fits rates with known per-point variances (weights 1/variance).
pub fn fit_rates(chi: &[f64], rates: &[f64], variances: &[f64]) -> Result<FringeFit> {
    if chi.len() != rates.len() || chi.len() != variances.len() {
        return Err(Error::LengthMismatch {
            left: chi.len(),
            right: rates.len().min(variances.len()),
        });
    }
    if chi.len() < 4 {
        return Err(Error::DegenerateDesign(format!(
            "{} points; need at least 4",
            chi.len()
        )));
    }
    check_span(chi)?;

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for ((&c, &y), &var) in chi.iter().zip(rates).zip(variances) {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Domain(format!(
                "point variance {var} must be positive"
            )));
        }
        let x = Vector3::new(1.0, c.cos(), c.sin());
        let w = 1.0 / var;
        normal += w * x * x.transpose();
        rhs += w * y * x;
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::DegenerateDesign("normal matrix is not positive definite".into()))?;
    let beta = chol.solve(&rhs);
    let cov = chol.inverse();

    let chi2: f64 = chi
        .iter()
        .zip(rates)
        .zip(variances)
        .map(|((&c, &y), &var)| {
            let r = y - (beta[0] + beta[1] * c.cos() + beta[2] * c.sin());
            r * r / var
        })
        .sum();

    let (a, p, q) = (beta[0], beta[1], beta[2]);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            // symmetrize against round-off
            *v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
        }
    }
    Ok(FringeFit {
        offset: a,
        amplitude: p.hypot(q),
        phase: wrap_angle((-q).atan2(p)),
        p,
        q,
        covariance,
        reduced_chi2: if chi.len() > 3 {
            chi2 / (chi.len() - 3) as f64
        } else {
            f64::NAN
        },
        n_points: chi.len(),
    })
}

/// Background-subtracted Poisson-weighted fit of a scan.
///
/// Point variances are `max(counts, 1)/t²`. The background estimate is a
/// single offset shared by every point, so its variance enters the offset
/// variance once. Noiseless scans report zero covariance.
pub fn fit_sinusoid(scan: &FringeScan) -> Result<FringeFit> {
    if scan.counts.len() != scan.chi.len() {
        return Err(Error::LengthMismatch {
            left: scan.chi.len(),
            right: scan.counts.len(),
        });
    }
    if scan.counts.len() < 4 {
        return Err(Error::DegenerateDesign(format!(
            "{} points; need at least 4",
            scan.counts.len()
        )));
    }
    if scan.counts.iter().all(|&n| n == 0.0) {
        return Err(Error::AllZeroCounts);
    }
    let t = scan.time_per_point;
    let rates: Vec<f64> = scan
        .counts
        .iter()
        .map(|n| n / t - scan.background.rate)
        .collect();
    let variances: Vec<f64> = scan.counts.iter().map(|n| n.max(1.0) / (t * t)).collect();
    let mut fit = fit_rates(&scan.chi, &rates, &variances)?;
    match scan.noise {
        NoiseModel::Poisson => fit.covariance[0][0] += scan.background.sigma.powi(2),
        NoiseModel::Noiseless => fit.covariance = [[0.0; 3]; 3],
    }
    Ok(fit)
}

/// Model value at χ = 0, i.e. A + P, with its standard deviation.
pub fn intensity_at_zero(fit: &FringeFit) -> (f64, f64) {
    let c = &fit.covariance;
    let var = c[0][0] + c[1][1] + 2.0 * c[0][1];
    (fit.offset + fit.p, var.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub value: f64,
    pub sigma: f64,
    /// Raw ratio exceeded 1 and was clamped.
    pub clamped: bool,
}

/// Ĉ = B/A clamped to [0, 1], with first-order uncertainty.
pub fn fitted_visibility(fit: &FringeFit) -> Result<Visibility> {
    let a = fit.offset;
    if a.is_nan() || a <= 0.0 {
        return Err(Error::NonPositiveOffset(a));
    }
    let b = fit.amplitude;
    let c = &fit.covariance;
    let var = if b > 0.0 {
        let g = [-b / (a * a), fit.p / (b * a), fit.q / (b * a)];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += g[i] * c[i][j] * g[j];
            }
        }
        v
    } else {
        // gradient direction undefined at B = 0; use the mean P/Q variance
        (c[1][1] + c[2][2]) / (2.0 * a * a)
    };
    let raw = b / a;
    Ok(Visibility {
        value: raw.min(1.0),
        sigma: var.max(0.0).sqrt(),
        clamped: raw > 1.0,
    })
}
