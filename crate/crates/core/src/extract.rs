//! Inversion of the six χ = 0 intensities into the weak value of the path
//! Pauli operator, contrast correction, state reconstruction from the
//! projector weak values, and first-order uncertainty propagation.
//!
//! With `k = ½ cot(α/2)`:
//!
//! ```text
//! Re w = k (I_y+ − I_y−) / I_x+
//! Im w = k (I_z+ − I_z−) / I_x+
//! |w|  = 2k √(I_x− / I_x+)
//! ```
//!
//! These hold for every α in (0, π]; no small-coupling expansion is used.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FringeFit;
use crate::protocol::{projector_weak_values, IntensitySet};
use crate::qcore::{wrap_angle, Direction};

/// Smallest coupling strength accepted by the extraction (1°).
pub const DEFAULT_ALPHA_MIN: f64 = PI / 180.0;
/// Below this calibrated contrast the correction is refused.
pub const MIN_CONTRAST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
    /// Measured independently from the x± channel.
    pub modulus: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub sigma_modulus: f64,
}

impl WeakValue {
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStateEstimate {
    pub nu: f64,
    pub theta_m: f64,
    pub phi_m: f64,
    pub sigma_nu: f64,
    pub sigma_theta: f64,
    pub sigma_phi: f64,
    /// Real and non-negative.
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

/// Intensities with their standard deviations (any common unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredIntensities {
    pub values: IntensitySet,
    pub sigmas: IntensitySet,
}

fn half_cot(alpha: f64, alpha_min: f64) -> Result<f64> {
    if !(alpha > alpha_min && alpha <= PI) {
        return Err(Error::StrengthOutOfRange {
            alpha_deg: alpha.to_degrees(),
            min_deg: alpha_min.to_degrees(),
        });
    }
    Ok(0.5 / (alpha / 2.0).tan())
}

/// Weak value from intensities; uncertainties are left at zero.
pub fn extract_weak_value(i: &IntensitySet, alpha: f64) -> Result<WeakValue> {
    extract_weak_value_with(i, alpha, DEFAULT_ALPHA_MIN)
}

pub fn extract_weak_value_with(i: &IntensitySet, alpha: f64, alpha_min: f64) -> Result<WeakValue> {
    if i.ix_plus.is_nan() || i.ix_plus <= 0.0 {
        return Err(Error::NormalizationVanishes(i.ix_plus));
    }
    let k = half_cot(alpha, alpha_min)?;
    Ok(WeakValue {
        re: k * (i.iy_plus - i.iy_minus) / i.ix_plus,
        im: k * (i.iz_plus - i.iz_minus) / i.ix_plus,
        // background subtraction can push I_x− slightly negative
        modulus: 2.0 * k * (i.ix_minus.max(0.0) / i.ix_plus).sqrt(),
        sigma_re: 0.0,
        sigma_im: 0.0,
        sigma_modulus: 0.0,
    })
}

/// Rescales the interference part of each intensity by 1/ĉ.
///
/// `offsets` are the χ-averaged fringe means (the incoherent part); the
/// corrected value is `offset + (I − offset)/ĉ`, which leaves every fringe
/// mean unchanged.
pub fn contrast_correct(
    at_zero: &IntensitySet,
    offsets: &IntensitySet,
    c_hat: f64,
) -> Result<IntensitySet> {
    if !(MIN_CONTRAST..=1.0).contains(&c_hat) {
        return Err(Error::ContrastTooLow(c_hat));
    }
    Ok(IntensitySet::from_fn(|d| {
        let mean = offsets.get(d);
        mean + (at_zero.get(d) - mean) / c_hat
    }))
}

/// Contrast-corrected fringe value at χ = 0, `A + P/ĉ`, with its standard
/// deviation from the fit covariance and the uncertainty of ĉ.
pub fn corrected_intensity(fit: &FringeFit, c_hat: f64, sigma_c: f64) -> Result<(f64, f64)> {
    if !(MIN_CONTRAST..=1.0).contains(&c_hat) {
        return Err(Error::ContrastTooLow(c_hat));
    }
    let c = &fit.covariance;
    let var = c[0][0]
        + c[1][1] / (c_hat * c_hat)
        + 2.0 * c[0][1] / c_hat
        + (fit.p / (c_hat * c_hat)).powi(2) * sigma_c * sigma_c;
    Ok((fit.offset + fit.p / c_hat, var.max(0.0).sqrt()))
}

/// How the complex weak value entering the reconstruction is formed from
/// the three measured channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// w = re + i·im; the modulus channel is only a cross-check.
    #[default]
    Components,
    /// Direction of w from (re, im), length from the measured modulus.
    /// Falls back to the components when re = im = 0.
    Modulus,
}

impl Fusion {
    pub fn apply(self, wv: &WeakValue) -> (f64, f64) {
        let r = wv.re.hypot(wv.im);
        match self {
            Fusion::Modulus if r > 0.0 => (wv.re * wv.modulus / r, wv.im * wv.modulus / r),
            _ => (wv.re, wv.im),
        }
    }

    /// ∂(re′, im′)/∂(re, im, modulus) for the fused value.
    pub fn jacobian(self, wv: &WeakValue) -> [[f64; 3]; 2] {
        let (x, y, m) = (wv.re, wv.im, wv.modulus);
        let r = x.hypot(y);
        match self {
            Fusion::Modulus if r > 0.0 => {
                let r3 = r * r * r;
                [
                    [m * y * y / r3, -m * x * y / r3, x / r],
                    [-m * x * y / r3, m * x * x / r3, y / r],
                ]
            }
            _ => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }
}

impl std::str::FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "components" => Ok(Fusion::Components),
            "modulus" => Ok(Fusion::Modulus),
            other => Err(Error::Domain(format!(
                "unknown fusion {other:?}; expected components or modulus"
            ))),
        }
    }
}

/// Normalized path state from the projector weak values (1 ± w)/2.
///
/// The global phase is fixed by making `c_plus` real and non-negative, and
/// `phi_m = arg(c−) − arg(c+)` follows the `e^{iφ}` placement on |P_z;−⟩
/// of the preselected state.
pub fn reconstruct_state(wv: &WeakValue) -> Result<PathStateEstimate> {
    reconstruct_state_with(wv, Fusion::Components)
}

pub fn reconstruct_state_with(wv: &WeakValue, fusion: Fusion) -> Result<PathStateEstimate> {
    let (re, im) = fusion.apply(wv);
    let w = Complex64::new(re, im);
    let (pi_plus, pi_minus) = projector_weak_values(w);
    if !(w.re.is_finite() && w.im.is_finite())
        || (pi_plus.norm() < 1e-12 && pi_minus.norm() < 1e-12)
    {
        return Err(Error::DegenerateState);
    }
    let nu = 1.0 / (pi_plus.norm_sqr() + pi_minus.norm_sqr()).sqrt();
    let (cp, cm) = (nu * pi_plus, nu * pi_minus);
    let cos_theta = (cp.norm_sqr() - cm.norm_sqr()).clamp(-1.0, 1.0);
    let phi_m = if cp.norm() > 0.0 && cm.norm() > 0.0 {
        wrap_angle(cm.arg() - cp.arg())
    } else {
        0.0
    };
    let unphase = Complex64::from_polar(1.0, -cp.arg());
    Ok(PathStateEstimate {
        nu,
        theta_m: cos_theta.acos(),
        phi_m,
        sigma_nu: 0.0,
        sigma_theta: 0.0,
        sigma_phi: 0.0,
        c_plus: Complex64::new(cp.norm(), 0.0),
        c_minus: cm * unphase,
    })
}

/// ∂(re, im, modulus)/∂(I_x+, I_x−, I_y+, I_y−, I_z+, I_z−).
pub fn weak_value_jacobian(i: &IntensitySet, alpha: f64) -> Result<[[f64; 6]; 3]> {
    let wv = extract_weak_value(i, alpha)?;
    let k = half_cot(alpha, DEFAULT_ALPHA_MIN)?;
    let n = i.ix_plus;
    let mut jac = [[0.0; 6]; 3];
    let (xp, xm, yp, ym, zp, zm) = (
        Direction::XPlus.index(),
        Direction::XMinus.index(),
        Direction::YPlus.index(),
        Direction::YMinus.index(),
        Direction::ZPlus.index(),
        Direction::ZMinus.index(),
    );
    jac[0][yp] = k / n;
    jac[0][ym] = -k / n;
    jac[0][xp] = -wv.re / n;
    jac[1][zp] = k / n;
    jac[1][zm] = -k / n;
    jac[1][xp] = -wv.im / n;
    if i.ix_minus > 0.0 {
        jac[2][xm] = wv.modulus / (2.0 * i.ix_minus);
        jac[2][xp] = -wv.modulus / (2.0 * n);
    }
    Ok(jac)
}

/// ∂(ν, θ, φ)/∂(re, im) from the closed forms
/// ν = √(2/(1+|w|²)), cos θ = 2 Re w/(1+|w|²),
/// φ = arg(1 − w) − arg(1 + w).
pub fn state_jacobian(re: f64, im: f64) -> [[f64; 2]; 3] {
    let (x, y) = (re, im);
    let d = 1.0 + x * x + y * y;
    let dnu = -std::f64::consts::SQRT_2 * d.powf(-1.5);
    let u = 2.0 * x / d;
    let du_dx = 2.0 * (1.0 - x * x + y * y) / (d * d);
    let du_dy = -4.0 * x * y / (d * d);
    let root = (1.0 - u * u).max(0.0).sqrt().max(1e-12);
    let m_minus = (1.0 - x).powi(2) + y * y;
    let m_plus = (1.0 + x).powi(2) + y * y;
    [
        [dnu * x, dnu * y],
        [-du_dx / root, -du_dy / root],
        [
            -y / m_minus + y / m_plus,
            -(1.0 - x) / m_minus - (1.0 + x) / m_plus,
        ],
    ]
}

/// First-order propagation of six independent intensity uncertainties
/// through the weak-value extraction and the state reconstruction.
pub fn propagate_errors(
    m: &MeasuredIntensities,
    alpha: f64,
) -> Result<(WeakValue, PathStateEstimate)> {
    propagate_errors_with(m, alpha, Fusion::Components)
}

pub fn propagate_errors_with(
    m: &MeasuredIntensities,
    alpha: f64,
    fusion: Fusion,
) -> Result<(WeakValue, PathStateEstimate)> {
    let mut wv = extract_weak_value(&m.values, alpha)?;
    let jw = weak_value_jacobian(&m.values, alpha)?;
    let s = m.sigmas.to_array();
    let var_of = |row: &[f64; 6]| {
        row.iter()
            .zip(&s)
            .map(|(g, s)| (g * s).powi(2))
            .sum::<f64>()
    };
    wv.sigma_re = var_of(&jw[0]).sqrt();
    wv.sigma_im = var_of(&jw[1]).sqrt();
    wv.sigma_modulus = if m.values.ix_minus > 0.0 {
        var_of(&jw[2]).sqrt()
    } else {
        // derivative diverges at I_x− = 0; report the one-sigma upper excursion
        2.0 * half_cot(alpha, DEFAULT_ALPHA_MIN)? * (m.sigmas.ix_minus / m.values.ix_plus).sqrt()
    };

    let mut est = reconstruct_state_with(&wv, fusion)?;
    let (re, im) = fusion.apply(&wv);
    let js = state_jacobian(re, im);
    let jf = fusion.jacobian(&wv);
    // ∂(re′, im′)/∂I
    let jwf: [[f64; 6]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|k| (0..3).map(|c| jf[r][c] * jw[c][k]).sum()));
    let mut sig = [0.0; 3];
    for (out, row) in sig.iter_mut().zip(&js) {
        // chain rule straight to the intensities keeps channel correlations
        let total: [f64; 6] = std::array::from_fn(|k| row[0] * jwf[0][k] + row[1] * jwf[1][k]);
        *out = var_of(&total).sqrt();
    }
    est.sigma_nu = sig[0];
    est.sigma_theta = sig[1];
    est.sigma_phi = sig[2];
    Ok((wv, est))
}
