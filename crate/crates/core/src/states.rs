//! Parametrised pure states: the general spin-½ and spin-1 states, the two
//! entangled two-fermion families ξ and χ, the Bell states, and raw
//! coefficient input.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{c, real, CVector, ComplexAmplitude};

/// Norm tolerance for a vector to count as normalised.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on Σ|cᵢ|² for user-supplied coefficients.
pub const COEFF_NORM_TOL: f64 = 1e-8;
/// Slack allowed on parameter ranges, so that decimal renderings of π/2
/// and friends are accepted. In-slack values are clamped.
pub const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("parameter {name} = {value} is outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("coefficients are not normalized (sum |c|^2 = {norm_sqr:.12})")]
    NotNormalized { norm_sqr: f64 },
    #[error("expected {expected} coefficients, got {found}")]
    WrongLength { expected: &'static str, found: usize },
}

/// Checks `value` against [0, hi] (closed) or [0, hi) (half-open). Values
/// inside the slack band around a closed end are clamped onto it.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    hi: f64,
    closed: bool,
    range: &'static str,
) -> Result<f64, StateError> {
    let above = if closed { value > hi + RANGE_SLACK } else { value >= hi };
    if !value.is_finite() || value < -RANGE_SLACK || above {
        return Err(StateError::ParamOutOfRange { name, value, range });
    }
    Ok(value.clamp(0.0, hi))
}

pub(crate) fn check_polar(name: &'static str, v: f64) -> Result<f64, StateError> {
    check_range(name, v, FRAC_PI_2, true, "[0, pi/2]")
}

pub(crate) fn check_angle(name: &'static str, v: f64) -> Result<f64, StateError> {
    check_range(name, v, TAU, false, "[0, 2pi)")
}

fn phase(angle: f64) -> ComplexAmplitude {
    c(angle.cos(), angle.sin())
}

/// A normalised pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wraps `v`, requiring |‖v‖² − 1| ≤ [`NORM_TOL`] and finite entries.
    pub fn new(v: CVector) -> Result<Self, StateError> {
        let norm_sqr = v.norm_sqr();
        if !v.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(Self(v))
    }

    /// Accepts coefficients whose Σ|cᵢ|² is within [`COEFF_NORM_TOL`] of 1
    /// and rescales them to unit norm.
    pub fn from_coefficients(coeffs: Vec<ComplexAmplitude>) -> Result<Self, StateError> {
        if !(2..=4).contains(&coeffs.len()) {
            return Err(StateError::WrongLength {
                expected: "2, 3 or 4",
                found: coeffs.len(),
            });
        }
        let v = CVector::new(coeffs);
        let norm_sqr = v.norm_sqr();
        if !v.is_finite() || (norm_sqr - 1.0).abs() > COEFF_NORM_TOL {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(Self(v.scale(real(1.0 / norm_sqr.sqrt()))))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    /// e^{iφ}|ψ⟩.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self(self.0.scale(phase(phi)))
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.0.inner(&other.0).norm_sqr()
    }
}

/// Spin-½ parameters: θ_α ∈ [0, π/2], ν ∈ [0, 2π), φ ∈ [0, 2π) (global phase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfParams {
    pub theta_alpha: f64,
    pub nu: f64,
    pub phi: f64,
}

impl HalfParams {
    pub fn new(theta_alpha: f64, nu: f64, phi: f64) -> Self {
        Self { theta_alpha, nu, phi }
    }
}

/// Entangled family parameters: θ_AB ∈ [0, 2π), α ∈ [0, 2π) (global phase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntangledParams {
    pub theta_ab: f64,
    pub alpha: f64,
}

impl EntangledParams {
    pub fn new(theta_ab: f64, alpha: f64) -> Self {
        Self { theta_ab, alpha }
    }
}

/// Spin-1 parameters: θ_α, θ_β ∈ [0, π/2]; φ_x, φ_y, φ_z ∈ [0, 2π).
/// φ_y is a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneParams {
    pub theta_alpha: f64,
    pub theta_beta: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub phi_z: f64,
}

/// e^{iφ}(e^{iν} cos θ_α, sin θ_α)ᵀ.
pub fn half_state(p: HalfParams) -> Result<StateVector, StateError> {
    let theta = check_polar("theta_alpha", p.theta_alpha)?;
    let nu = check_angle("nu", p.nu)?;
    let phi = check_angle("phi", p.phi)?;
    let g = phase(phi);
    let v = CVector::new(vec![g * phase(nu) * theta.cos(), g * theta.sin()]);
    StateVector::new(v)
}

/// ξ = e^{iα}(cos θ_AB |+−⟩ − sin θ_AB |−+⟩).
pub fn xi_state(p: EntangledParams) -> Result<StateVector, StateError> {
    let theta = check_angle("theta_ab", p.theta_ab)?;
    let g = phase(check_angle("alpha", p.alpha)?);
    let z = real(0.0);
    StateVector::new(CVector::new(vec![z, g * theta.cos(), g * (-theta.sin()), z]))
}

/// χ = e^{iα}(cos θ_AB |++⟩ − sin θ_AB |−−⟩).
pub fn chi_state(p: EntangledParams) -> Result<StateVector, StateError> {
    let theta = check_angle("theta_ab", p.theta_ab)?;
    let g = phase(check_angle("alpha", p.alpha)?);
    let z = real(0.0);
    StateVector::new(CVector::new(vec![g * theta.cos(), z, z, g * (-theta.sin())]))
}

/// e^{iφ_y}(cos θ_α cos θ_β e^{iφ_x}, sin θ_α, cos θ_α sin θ_β e^{iφ_z})ᵀ.
pub fn one_state(p: OneParams) -> Result<StateVector, StateError> {
    let ta = check_polar("theta_alpha", p.theta_alpha)?;
    let tb = check_polar("theta_beta", p.theta_beta)?;
    let px = check_angle("phi_x", p.phi_x)?;
    let py = check_angle("phi_y", p.phi_y)?;
    let pz = check_angle("phi_z", p.phi_z)?;
    let g = phase(py);
    StateVector::new(CVector::new(vec![
        g * phase(px) * (ta.cos() * tb.cos()),
        g * ta.sin(),
        g * phase(pz) * (ta.cos() * tb.sin()),
    ]))
}

/// (c₊₊, c₊₋, c₋₊, c₋₋)ᵀ, requiring Σ|cᵢ|² = 1 within [`COEFF_NORM_TOL`].
pub fn general_two_fermion(coeffs: [ComplexAmplitude; 4]) -> Result<StateVector, StateError> {
    StateVector::from_coefficients(coeffs.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiMinus,
        BellState::PsiPlus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "psi+" | "psi-plus" => Ok(BellState::PsiPlus),
            "psi-" | "psi-minus" => Ok(BellState::PsiMinus),
            "phi+" | "phi-plus" => Ok(BellState::PhiPlus),
            "phi-" | "phi-minus" => Ok(BellState::PhiMinus),
            other => Err(format!("unknown Bell state '{other}'")),
        }
    }
}

pub fn bell_state(which: BellState) -> StateVector {
    let h = FRAC_1_SQRT_2;
    let v = match which {
        BellState::PsiPlus => [0.0, h, h, 0.0],
        BellState::PsiMinus => [0.0, h, -h, 0.0],
        BellState::PhiPlus => [h, 0.0, 0.0, h],
        BellState::PhiMinus => [h, 0.0, 0.0, -h],
    };
    StateVector::new(CVector::from_real(&v)).expect("Bell states are normalized")
}
