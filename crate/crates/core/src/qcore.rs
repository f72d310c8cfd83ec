//! Two-qubit state algebra for the spin (meter) and path (system) degrees of freedom.
//!
//! Composite amplitudes are ordered spin ⊗ path in the z-eigenbases of both
//! subsystems: `(s+,p+), (s+,p−), (s−,p+), (s−,p−)`, i.e. index `2*s + p`
//! with `+ ↦ 0` and `− ↦ 1`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maps an angle onto the canonical interval (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Amplitude pair of a single two-level system in its z-basis.
///
/// Constructors return normalized states. Postselection produces
/// sub-normalized pairs whose squared norm is the survival probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl TwoLevelState {
    pub const fn from_amplitudes(c_plus: Complex64, c_minus: Complex64) -> Self {
        Self { c_plus, c_minus }
    }

    pub fn z_plus() -> Self {
        Self::from_amplitudes(ONE, ZERO)
    }

    pub fn z_minus() -> Self {
        Self::from_amplitudes(ZERO, ONE)
    }

    pub fn x_plus() -> Self {
        Self::from_amplitudes(
            Complex64::from(FRAC_1_SQRT_2),
            Complex64::from(FRAC_1_SQRT_2),
        )
    }

    pub fn x_minus() -> Self {
        Self::from_amplitudes(
            Complex64::from(FRAC_1_SQRT_2),
            Complex64::from(-FRAC_1_SQRT_2),
        )
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &TwoLevelState) -> Complex64 {
        self.c_plus.conj() * other.c_plus + self.c_minus.conj() * other.c_minus
    }

    /// Returns `(⟨σz⟩-weighted ket) = σz|self⟩`.
    pub fn sigma_z(&self) -> Self {
        Self::from_amplitudes(self.c_plus, -self.c_minus)
    }
}

/// `cos(θ/2)|P_z;+⟩ + e^{iφ} sin(θ/2)|P_z;−⟩`.
///
/// `phi` is wrapped onto (−π, π] before use; `theta` must lie in [0, π].
pub fn make_path_state(theta: f64, phi: f64) -> Result<TwoLevelState> {
    if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    if !phi.is_finite() {
        return Err(Error::Domain(format!("phi = {phi} is not finite")));
    }
    let phi = wrap_angle(phi);
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(TwoLevelState::from_amplitudes(
        Complex64::from(c),
        Complex64::from_polar(s, phi),
    ))
}

/// Meter state |S_x;+⟩.
pub fn make_spin_x_plus() -> TwoLevelState {
    TwoLevelState::x_plus()
}

/// Spin analysis directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "x-")]
    XMinus,
    #[serde(rename = "y+")]
    YPlus,
    #[serde(rename = "y-")]
    YMinus,
    #[serde(rename = "z+")]
    ZPlus,
    #[serde(rename = "z-")]
    ZMinus,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::XPlus,
        Direction::XMinus,
        Direction::YPlus,
        Direction::YMinus,
        Direction::ZPlus,
        Direction::ZMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Direction::XPlus => "x+",
            Direction::XMinus => "x-",
            Direction::YPlus => "y+",
            Direction::YMinus => "y-",
            Direction::ZPlus => "z+",
            Direction::ZMinus => "z-",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.label() == s.trim())
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Eigenstate |S_j;±⟩ in the z-basis.
    pub fn eigenstate(self) -> TwoLevelState {
        let h = Complex64::from(FRAC_1_SQRT_2);
        match self {
            Direction::XPlus => TwoLevelState::from_amplitudes(h, h),
            Direction::XMinus => TwoLevelState::from_amplitudes(h, -h),
            Direction::YPlus => TwoLevelState::from_amplitudes(h, I * h),
            Direction::YMinus => TwoLevelState::from_amplitudes(h, -I * h),
            Direction::ZPlus => TwoLevelState::z_plus(),
            Direction::ZMinus => TwoLevelState::z_minus(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Four amplitudes of the spin ⊗ path system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeState {
    pub amps: [Complex64; 4],
}

impl CompositeState {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude for spin index `s` and path index `p` (0 = +, 1 = −).
    pub fn amp(&self, s: usize, p: usize) -> Complex64 {
        self.amps[2 * s + p]
    }
}

/// Product state spin ⊗ path.
pub fn tensor(spin: &TwoLevelState, path: &TwoLevelState) -> CompositeState {
    let s = [spin.c_plus, spin.c_minus];
    let p = [path.c_plus, path.c_minus];
    let mut amps = [ZERO; 4];
    for (si, sa) in s.iter().enumerate() {
        for (pi, pa) in p.iter().enumerate() {
            amps[2 * si + pi] = sa * pa;
        }
    }
    CompositeState { amps }
}

/// Dense 4×4 operator on the composite space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator4 {
    pub m: [[Complex64; 4]; 4],
}

impl Operator4 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m }
    }

    /// σz ⊗ σz, diagonal (+1, −1, −1, +1).
    pub fn zz() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::from(parity(i));
        }
        Self { m }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[j][i].conj();
            }
        }
        Self { m }
    }

    pub fn matmul(&self, rhs: &Operator4) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Self { m }
    }

    pub fn max_abs_diff(&self, other: &Operator4) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Operator4::identity())
            <= tol
    }
}

fn parity(i: usize) -> f64 {
    // spin bit xor path bit
    if ((i >> 1) ^ (i & 1)) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// exp(−iα σz⊗σz / 2) = cos(α/2)·1 − i sin(α/2)·σz⊗σz.
pub fn coupling_unitary(alpha: f64) -> Operator4 {
    let (s, c) = (alpha / 2.0).sin_cos();
    let id = Operator4::identity();
    let zz = Operator4::zz();
    Operator4 {
        m: std::array::from_fn(|i| std::array::from_fn(|j| c * id.m[i][j] - I * s * zz.m[i][j])),
    }
}

pub fn apply(op: &Operator4, state: &CompositeState) -> CompositeState {
    let mut amps = [ZERO; 4];
    for (i, a) in amps.iter_mut().enumerate() {
        *a = (0..4).map(|k| op.m[i][k] * state.amps[k]).sum();
    }
    CompositeState { amps }
}

/// Projects the path onto `path_final` and returns the remaining spin
/// amplitudes ⟨P_f|ψ⟩. The squared norm is the postselection probability.
pub fn postselect_path(state: &CompositeState, path_final: &TwoLevelState) -> TwoLevelState {
    let f = [path_final.c_plus.conj(), path_final.c_minus.conj()];
    let spin = |s: usize| f[0] * state.amp(s, 0) + f[1] * state.amp(s, 1);
    TwoLevelState::from_amplitudes(spin(0), spin(1))
}

/// |⟨S_j;±|spin⟩|²
pub fn spin_probability(spin: &TwoLevelState, direction: Direction) -> f64 {
    direction.eigenstate().inner(spin).norm_sqr()
}

#[cfg(test)]
// example values are printed to a few digits on purpose
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn path_state_examples() {
        let s = make_path_state(0.0, 1.234).unwrap();
        assert!(close(s.c_plus, ONE, TOL) && close(s.c_minus, ZERO, TOL));

        let s = make_path_state(PI / 2.0, 0.0).unwrap();
        assert!(close(s.c_plus, c(FRAC_1_SQRT_2, 0.0), TOL));
        assert!(close(s.c_minus, c(FRAC_1_SQRT_2, 0.0), TOL));

        let s = make_path_state(PI / 2.0, PI / 2.0).unwrap();
        assert!(close(s.c_plus, c(0.70710678, 0.0), 1e-8));
        assert!(close(s.c_minus, c(0.0, 0.70710678), 1e-8));
    }

    #[test]
    fn path_state_domain() {
        assert!(matches!(make_path_state(-0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            make_path_state(PI + 1e-9, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            make_path_state(1.0, f64::NAN),
            Err(Error::Domain(_))
        ));
        // phi is wrapped, not rejected
        let a = make_path_state(1.0, 0.5 + 4.0 * PI).unwrap();
        let b = make_path_state(1.0, 0.5).unwrap();
        assert!(close(a.c_minus, b.c_minus, 1e-12));
    }

    #[test]
    fn wrap_angle_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn spin_x_plus() {
        let s = make_spin_x_plus();
        assert!(close(s.c_plus, c(0.70711, 0.0), 1e-5));
        assert!(close(s.c_minus, c(0.70711, 0.0), 1e-5));
        assert!((s.norm_sqr() - 1.0).abs() < TOL);
        assert!((spin_probability(&s, Direction::ZPlus) - 0.5).abs() < TOL);
    }

    #[test]
    fn tensor_examples() {
        let t = tensor(&TwoLevelState::z_plus(), &TwoLevelState::z_plus());
        assert_eq!(t.amps, [ONE, ZERO, ZERO, ZERO]);

        let t = tensor(&make_spin_x_plus(), &TwoLevelState::x_plus());
        assert!(t.amps.iter().all(|a| close(*a, c(0.5, 0.0), TOL)));

        let t = tensor(
            &make_spin_x_plus(),
            &make_path_state(PI / 2.0, PI / 2.0).unwrap(),
        );
        let want = [c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, 0.5)];
        for (a, w) in t.amps.iter().zip(want) {
            assert!(close(*a, w, TOL));
        }
        assert!((t.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn coupling_unitary_examples() {
        assert!(coupling_unitary(0.0).max_abs_diff(&Operator4::identity()) < TOL);

        let u = coupling_unitary(PI);
        let mut want = Operator4::zz();
        for row in want.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= -I;
            }
        }
        assert!(u.max_abs_diff(&want) < TOL);

        let u = coupling_unitary(PI / 2.0);
        let d = [
            Complex64::from_polar(1.0, -PI / 4.0),
            Complex64::from_polar(1.0, PI / 4.0),
            Complex64::from_polar(1.0, PI / 4.0),
            Complex64::from_polar(1.0, -PI / 4.0),
        ];
        for (i, row) in u.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let w = if i == j { d[i] } else { ZERO };
                assert!(close(*v, w, TOL));
            }
        }
    }

    #[test]
    fn apply_examples() {
        let psi = tensor(&make_spin_x_plus(), &make_path_state(1.1, -0.4).unwrap());
        assert_eq!(apply(&Operator4::identity(), &psi), psi);

        let alpha = 0.7;
        let psi = tensor(&make_spin_x_plus(), &TwoLevelState::z_plus());
        let out = apply(&coupling_unitary(alpha), &psi);
        let want = [
            Complex64::from_polar(FRAC_1_SQRT_2, -alpha / 2.0),
            ZERO,
            Complex64::from_polar(FRAC_1_SQRT_2, alpha / 2.0),
            ZERO,
        ];
        for (a, w) in out.amps.iter().zip(want) {
            assert!(close(*a, w, TOL));
        }
    }

    #[test]
    fn postselect_examples() {
        let psi = tensor(&make_spin_x_plus(), &TwoLevelState::x_plus());
        let s = postselect_path(&psi, &TwoLevelState::x_plus());
        assert!(close(s.c_plus, c(FRAC_1_SQRT_2, 0.0), TOL));
        assert!((s.norm_sqr() - 1.0).abs() < TOL);

        let psi = tensor(&make_spin_x_plus(), &TwoLevelState::x_minus());
        let s = postselect_path(&psi, &TwoLevelState::x_plus());
        assert!(s.norm_sqr() < TOL);

        let psi = tensor(
            &make_spin_x_plus(),
            &make_path_state(PI / 2.0, PI / 2.0).unwrap(),
        );
        let s = postselect_path(&psi, &TwoLevelState::x_plus());
        assert!((s.norm_sqr() - 0.5).abs() < TOL);
    }

    #[test]
    fn spin_probability_examples() {
        let s = make_spin_x_plus();
        assert!((spin_probability(&s, Direction::XPlus) - 1.0).abs() < TOL);
        assert!((spin_probability(&s, Direction::ZPlus) - 0.5).abs() < TOL);
        assert!((spin_probability(&s, Direction::YMinus) - 0.5).abs() < TOL);
    }

    #[test]
    fn direction_labels_round_trip() {
        for d in Direction::ALL {
            assert_eq!(Direction::parse(d.label()), Some(d));
            assert_eq!(Direction::ALL[d.index()], d);
        }
        assert_eq!(Direction::parse("w+"), None);
    }

    fn arb_spin() -> impl Strategy<Value = TwoLevelState> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(a, b, c2, d)| TwoLevelState::from_amplitudes(c(a, b), c(c2, d)))
    }

    proptest! {
        #[test]
        fn unitarity(alpha in -PI..PI) {
            prop_assert!(coupling_unitary(alpha).is_unitary(TOL));
        }

        #[test]
        fn composition(a1 in -PI..PI, a2 in -PI..PI) {
            let lhs = coupling_unitary(a1).matmul(&coupling_unitary(a2));
            prop_assert!(lhs.max_abs_diff(&coupling_unitary(a1 + a2)) < TOL);
        }

        #[test]
        fn completeness(s in arb_spin()) {
            for pair in Direction::ALL.chunks(2) {
                let total = spin_probability(&s, pair[0]) + spin_probability(&s, pair[1]);
                prop_assert!((total - s.norm_sqr()).abs() < TOL * (1.0 + s.norm_sqr()));
            }
        }

        #[test]
        fn postselection_bound(
            theta in 0.0..PI, phi in -PI..PI, alpha in -PI..PI,
            tf in 0.0..PI, pf in -PI..PI,
        ) {
            let psi = apply(
                &coupling_unitary(alpha),
                &tensor(&make_spin_x_plus(), &make_path_state(theta, phi).unwrap()),
            );
            prop_assert!((psi.norm_sqr() - 1.0).abs() < TOL);
            let out = postselect_path(&psi, &make_path_state(tf, pf).unwrap());
            prop_assert!(out.norm_sqr() <= psi.norm_sqr() + TOL);
        }

        #[test]
        fn constructor_normalized(theta in 0.0..=PI, phi in -10.0..10.0f64) {
            let s = make_path_state(theta, phi).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < TOL);
        }
    }
}
