//! Analytic ground truth for the measurement scheme: the weak value of the
//! path Pauli operator, the noiseless six-intensity pipeline, closed-form
//! fringes for a balanced beamsplitter, and the field-to-strength mapping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    apply, coupling_unitary, make_path_state, make_spin_x_plus, postselect_path, spin_probability,
    tensor, wrap_angle, Direction, TwoLevelState,
};

/// Default guard on |⟨P_f|P_i⟩| for the weak-value quotient.
pub const DEFAULT_EPS_OVERLAP: f64 = 1e-9;

/// Neutron magnetic moment (J/T), CODATA 2018.
pub const NEUTRON_MAGNETIC_MOMENT: f64 = -9.662_365_1e-27;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// The six postselected spin intensities, one per analysis direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensitySet {
    pub ix_plus: f64,
    pub ix_minus: f64,
    pub iy_plus: f64,
    pub iy_minus: f64,
    pub iz_plus: f64,
    pub iz_minus: f64,
}

impl IntensitySet {
    pub fn from_fn(mut f: impl FnMut(Direction) -> f64) -> Self {
        Self {
            ix_plus: f(Direction::XPlus),
            ix_minus: f(Direction::XMinus),
            iy_plus: f(Direction::YPlus),
            iy_minus: f(Direction::YMinus),
            iz_plus: f(Direction::ZPlus),
            iz_minus: f(Direction::ZMinus),
        }
    }

    pub fn get(&self, d: Direction) -> f64 {
        match d {
            Direction::XPlus => self.ix_plus,
            Direction::XMinus => self.ix_minus,
            Direction::YPlus => self.iy_plus,
            Direction::YMinus => self.iy_minus,
            Direction::ZPlus => self.iz_plus,
            Direction::ZMinus => self.iz_minus,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        Direction::ALL.map(|d| self.get(d))
    }

    pub fn max_abs_diff(&self, other: &IntensitySet) -> f64 {
        Direction::ALL
            .into_iter()
            .map(|d| (self.get(d) - other.get(d)).abs())
            .fold(0.0, f64::max)
    }
}

/// Inputs of the spin-rotation angle α = −2μB_zτ/ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// Tesla.
    pub b_z: f64,
    /// Transit time through the field region, seconds.
    pub tau: f64,
    /// J/T.
    pub mu: f64,
    /// J·s.
    pub hbar: f64,
}

impl FieldParams {
    pub fn neutron(b_z: f64, tau: f64) -> Self {
        Self {
            b_z,
            tau,
            mu: NEUTRON_MAGNETIC_MOMENT,
            hbar: HBAR,
        }
    }
}

/// ⟨P_f|σz|P_i⟩ / ⟨P_f|P_i⟩ with the default overlap guard.
pub fn weak_value_sigma_z(p_initial: &TwoLevelState, p_final: &TwoLevelState) -> Result<Complex64> {
    weak_value_sigma_z_with(p_initial, p_final, DEFAULT_EPS_OVERLAP)
}

pub fn weak_value_sigma_z_with(
    p_initial: &TwoLevelState,
    p_final: &TwoLevelState,
    eps_overlap: f64,
) -> Result<Complex64> {
    let overlap = p_final.inner(p_initial);
    if overlap.norm() <= eps_overlap {
        return Err(Error::SingularPostselection {
            overlap: overlap.norm(),
            epsilon: eps_overlap,
        });
    }
    Ok(p_final.inner(&p_initial.sigma_z()) / overlap)
}

/// Weak values of the path projectors Π_{z±} = (1 ± σz)/2.
pub fn projector_weak_values(sigma_wv: Complex64) -> (Complex64, Complex64) {
    let plus = (1.0 + sigma_wv) / 2.0;
    (plus, 1.0 - plus)
}

/// Noiseless intensities from the full state pipeline: prepare, couple,
/// postselect the path on |P_x;+⟩, analyze the spin along ±x, ±y, ±z.
pub fn ideal_intensities(theta: f64, phi: f64, alpha: f64) -> Result<IntensitySet> {
    pipeline_intensities(theta, phi, alpha, 1.0)
}

/// Same pipeline with the path-interference cross term scaled by `contrast`.
///
/// The postselected amplitude for a direction is the sum of one
/// contribution per path; `contrast` multiplies only their interference term.
pub fn pipeline_intensities(
    theta: f64,
    phi: f64,
    alpha: f64,
    contrast: f64,
) -> Result<IntensitySet> {
    let path = make_path_state(theta, phi)?;
    let psi = apply(
        &coupling_unitary(alpha),
        &tensor(&make_spin_x_plus(), &path),
    );
    if contrast == 1.0 {
        let spin = postselect_path(&psi, &TwoLevelState::x_plus());
        return Ok(IntensitySet::from_fn(|d| spin_probability(&spin, d)));
    }
    let fin = TwoLevelState::x_plus();
    let f = [fin.c_plus.conj(), fin.c_minus.conj()];
    Ok(IntensitySet::from_fn(|d| {
        let e = d.eigenstate();
        let arm =
            |p: usize| f[p] * (e.c_plus.conj() * psi.amp(0, p) + e.c_minus.conj() * psi.amp(1, p));
        let (u, v) = (arm(0), arm(1));
        u.norm_sqr() + v.norm_sqr() + 2.0 * contrast * (u.conj() * v).re
    }))
}

/// Closed-form fringes for a balanced path state (θ = π/2) with the
/// phase-shifter setting `chi` added to the preselected phase.
pub fn closed_form_fringes(phi: f64, chi: f64, alpha: f64, contrast: f64) -> IntensitySet {
    let total = phi + chi;
    let cos_t = total.cos();
    let (s2, c2) = {
        let (s, c) = (alpha / 2.0).sin_cos();
        (s * s, c * c)
    };
    IntensitySet {
        ix_plus: c2 * (1.0 + contrast * cos_t) / 2.0,
        ix_minus: s2 * (1.0 - contrast * cos_t) / 2.0,
        iy_plus: (1.0 + contrast * alpha.cos() * cos_t) / 4.0,
        iy_minus: (1.0 + contrast * alpha.cos() * cos_t) / 4.0,
        iz_plus: (1.0 + contrast * (total + alpha).cos()) / 4.0,
        iz_minus: (1.0 + contrast * (total - alpha).cos()) / 4.0,
    }
}

/// α = −2μB_zτ/ħ wrapped onto (−π, π].
pub fn alpha_from_field(fp: &FieldParams) -> f64 {
    wrap_angle(-2.0 * fp.mu * fp.b_z * fp.tau / fp.hbar)
}

/// |⟨P_x;+|P_i⟩|²
pub fn postselection_probability(theta: f64, phi: f64) -> Result<f64> {
    let path = make_path_state(theta, phi)?;
    Ok(TwoLevelState::x_plus().inner(&path).norm_sqr())
}
