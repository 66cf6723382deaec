//! Spin operator sets for the three systems in scope and a checker for the
//! angular-momentum algebra. Units are ħ = 1 throughout.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::linalg::{c, commutator, kron, real, CMatrix};

/// Residual bound for the operator algebra checks.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinSystem {
    /// One spin-½ particle, M = 2.
    Half,
    /// One massive spin-1 particle, M = 3.
    One,
    /// Two spin-½ fermions, M = 4.
    TwoFermion,
}

impl SpinSystem {
    pub const ALL: [SpinSystem; 3] = [SpinSystem::Half, SpinSystem::One, SpinSystem::TwoFermion];

    pub fn dim(self) -> usize {
        match self {
            SpinSystem::Half => 2,
            SpinSystem::One => 3,
            SpinSystem::TwoFermion => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpinSystem::Half => "half",
            SpinSystem::One => "one",
            SpinSystem::TwoFermion => "two-fermion",
        }
    }
}

impl fmt::Display for SpinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpinSystem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "half" => Ok(SpinSystem::Half),
            "one" => Ok(SpinSystem::One),
            "two-fermion" => Ok(SpinSystem::TwoFermion),
            other => Err(format!("unknown spin system '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[[real(0.0), c(0.0, -1.0)], [c(0.0, 1.0), real(0.0)]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diag(&[1.0, -1.0])
}

/// S_x, S_y, S_z and S² for one system.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub system: SpinSystem,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s2: CMatrix,
}

impl SpinOperatorSet {
    /// Assembles a set from arbitrary matrices without validating them.
    /// Used to feed hand-built (including deliberately broken) operators to
    /// the checkers.
    pub fn from_parts(system: SpinSystem, sx: CMatrix, sy: CMatrix, sz: CMatrix, s2: CMatrix) -> Self {
        Self { system, sx, sy, sz, s2 }
    }

    pub fn component(&self, axis: Axis) -> &CMatrix {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }

    /// S_x² + S_y² + S_z².
    pub fn sum_of_squares(&self) -> CMatrix {
        let sq = |m: &CMatrix| m * m;
        &(&sq(&self.sx) + &sq(&self.sy)) + &sq(&self.sz)
    }
}

/// Builds the operator set for `system`.
///
/// Spin-½ uses S_a = σ_a/2. Spin-1 uses the standard 3×3 matrices with the
/// 1/√2 prefactor on S_x and S_y. Two fermions use S_a = σ_a/2 ⊗ I + I ⊗ σ_a/2.
/// S² is formed as the sum of squares in every case.
pub fn build_operators(system: SpinSystem) -> SpinOperatorSet {
    let (sx, sy, sz) = match system {
        SpinSystem::Half => (
            pauli_x().scale(real(0.5)),
            pauli_y().scale(real(0.5)),
            pauli_z().scale(real(0.5)),
        ),
        SpinSystem::One => {
            let r = FRAC_1_SQRT_2;
            let i = |x: f64| c(0.0, x);
            let z = real(0.0);
            (
                CMatrix::from_real_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]).scale(real(r)),
                CMatrix::from_rows(&[[z, i(-1.0), z], [i(1.0), z, i(-1.0)], [z, i(1.0), z]]).scale(real(r)),
                CMatrix::diag(&[1.0, 0.0, -1.0]),
            )
        }
        SpinSystem::TwoFermion => {
            let id = CMatrix::identity(2);
            let coupled = |p: CMatrix| {
                let half = p.scale(real(0.5));
                &kron(&half, &id) + &kron(&id, &half)
            };
            (coupled(pauli_x()), coupled(pauli_y()), coupled(pauli_z()))
        }
    };
    let mut set = SpinOperatorSet::from_parts(system, sx, sy, sz, CMatrix::zeros(0, 0));
    set.s2 = set.sum_of_squares();
    set
}

/// Residuals of the spin algebra for one operator set.
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub system: SpinSystem,
    /// ‖[S_x,S_y] − iS_z‖, ‖[S_y,S_z] − iS_x‖, ‖[S_z,S_x] − iS_y‖ (max-norm).
    pub cyclic_residuals: [f64; 3],
    /// ‖[S², S_a]‖ for a = x, y, z.
    pub casimir_residuals: [f64; 3],
    pub tolerance: f64,
    pub passed: bool,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.cyclic_residuals
            .iter()
            .chain(&self.casimir_residuals)
            .copied()
            .fold(0.0, f64::max)
    }
}

pub fn check_commutations(ops: &SpinOperatorSet) -> AlgebraReport {
    let i = c(0.0, 1.0);
    let cyclic = |a: &CMatrix, b: &CMatrix, cm: &CMatrix| commutator(a, b).max_abs_diff(&cm.scale(i));
    let cyclic_residuals = [
        cyclic(&ops.sx, &ops.sy, &ops.sz),
        cyclic(&ops.sy, &ops.sz, &ops.sx),
        cyclic(&ops.sz, &ops.sx, &ops.sy),
    ];
    let casimir_residuals = [
        commutator(&ops.s2, &ops.sx).max_abs(),
        commutator(&ops.s2, &ops.sy).max_abs(),
        commutator(&ops.s2, &ops.sz).max_abs(),
    ];
    let passed = cyclic_residuals
        .iter()
        .chain(&casimir_residuals)
        .all(|&r| r <= ALGEBRA_TOL);
    AlgebraReport {
        system: ops.system,
        cyclic_residuals,
        casimir_residuals,
        tolerance: ALGEBRA_TOL,
        passed,
    }
}
