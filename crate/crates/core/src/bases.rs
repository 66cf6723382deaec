//! Measurement bases along x, y and z.
//!
//! A basis for axis `a` is a unitary matrix whose columns are simultaneous
//! eigenvectors of (S_a, S²). Columns are ordered by S_a eigenvalue
//! descending, ties broken by S² eigenvalue descending, and each column's
//! global phase is fixed so that its first nonzero component is real and
//! positive.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::linalg::{c, hermitian_eigen, real, CMatrix, CVector, LinalgError};
use crate::operators::{build_operators, Axis, SpinOperatorSet, SpinSystem};

/// Two eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Magnitude below which a component is skipped when fixing column phase.
pub const PHASE_PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("columns {first} and {second} share the eigenvalue pair (S_a = {sa}, S^2 = {s2})")]
    DegeneracyUnresolved {
        first: usize,
        second: usize,
        sa: f64,
        s2: f64,
    },
}

#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    pub axis: Axis,
    pub system: SpinSystem,
    /// Eigenvector columns.
    pub columns: CMatrix,
    pub sa_eigenvalues: Vec<f64>,
    pub s2_eigenvalues: Vec<f64>,
}

impl MeasurementBasis {
    pub fn dim(&self) -> usize {
        self.columns.cols()
    }

    /// Coordinates of `psi` in this basis, B†ψ.
    pub fn coordinates(&self, psi: &CVector) -> Result<CVector, LinalgError> {
        self.columns.adjoint().matvec(psi)
    }

    /// Same basis with column `j` multiplied by e^{i·phases[j]}.
    pub fn with_column_phases(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.dim());
        let mut out = self.clone();
        for (j, &phi) in phases.iter().enumerate() {
            let col = self.columns.column(j).scale(c(phi.cos(), phi.sin()));
            out.columns.set_column(j, &col);
        }
        out
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.columns.unitarity_deviation()
    }

    /// Largest of ‖S_a bⱼ − λⱼ bⱼ‖ and ‖S² bⱼ − μⱼ bⱼ‖ over columns.
    pub fn eigen_residual(&self, ops: &SpinOperatorSet) -> f64 {
        let sa = ops.component(self.axis);
        let mut worst = 0.0_f64;
        for j in 0..self.dim() {
            let b = self.columns.column(j);
            let r1 = sa
                .matvec(&b)
                .map(|v| v.max_abs_diff(&b.scale(real(self.sa_eigenvalues[j]))))
                .unwrap_or(f64::INFINITY);
            let r2 = ops
                .s2
                .matvec(&b)
                .map(|v| v.max_abs_diff(&b.scale(real(self.s2_eigenvalues[j]))))
                .unwrap_or(f64::INFINITY);
            worst = worst.max(r1).max(r2);
        }
        worst
    }
}

/// Rayleigh quotient ⟨v|A|v⟩ for a unit vector.
fn expectation(a: &CMatrix, v: &CVector) -> f64 {
    v.inner(&a.matvec(v).expect("basis dimension matches operator")).re
}

fn fix_phase(v: &CVector) -> CVector {
    match v.iter().find(|z| z.norm() > PHASE_PIVOT_TOL) {
        Some(pivot) => v.scale(pivot.conj() / pivot.norm()),
        None => v.clone(),
    }
}

/// Simultaneous eigenbasis of (S_axis, S²).
///
/// S_axis is diagonalised first; inside each degenerate eigenspace the
/// restriction of S² is diagonalised to split it.
pub fn build_basis(ops: &SpinOperatorSet, axis: Axis) -> Result<MeasurementBasis, BasisError> {
    let sa = ops.component(axis);
    let eig = hermitian_eigen(sa)?;
    let n = eig.values.len();

    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eig.values[start] - eig.values[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        let block: Vec<CVector> = (start..end).map(|j| eig.vectors.column(j)).collect();
        if block.len() == 1 {
            columns.extend(block);
        } else {
            // restriction Q† S² Q of S² to the degenerate eigenspace
            let q = CMatrix::from_columns(&block);
            let restricted = &(&q.adjoint() * &ops.s2) * &q;
            let inner = hermitian_eigen(&restricted)?;
            let rotated = &q * &inner.vectors;
            columns.extend(rotated.columns());
        }
        start = end;
    }

    let columns: Vec<CVector> = columns.iter().map(fix_phase).collect();
    let sa_eigenvalues: Vec<f64> = columns.iter().map(|v| expectation(sa, v)).collect();
    let s2_eigenvalues: Vec<f64> = columns.iter().map(|v| expectation(&ops.s2, v)).collect();

    for i in 0..n {
        for j in (i + 1)..n {
            if (sa_eigenvalues[i] - sa_eigenvalues[j]).abs() <= DEGENERACY_TOL
                && (s2_eigenvalues[i] - s2_eigenvalues[j]).abs() <= DEGENERACY_TOL
            {
                return Err(BasisError::DegeneracyUnresolved {
                    first: i,
                    second: j,
                    sa: sa_eigenvalues[i],
                    s2: s2_eigenvalues[i],
                });
            }
        }
    }

    Ok(MeasurementBasis {
        axis,
        system: ops.system,
        columns: CMatrix::from_columns(&columns),
        sa_eigenvalues,
        s2_eigenvalues,
    })
}

/// Hard-coded basis matrices written out by hand for each system, for cross-checking
/// [`build_basis`]. The z bases of the single-particle systems are the
/// identity. Eigenvalue labels are computed from the operators.
pub fn reference_basis(system: SpinSystem, axis: Axis) -> MeasurementBasis {
    let r2 = std::f64::consts::SQRT_2;
    let h = FRAC_1_SQRT_2;
    let z = real(0.0);
    let i = |x: f64| c(0.0, x);
    let columns = match (system, axis) {
        (SpinSystem::Half, Axis::X) => CMatrix::from_real_rows(&[[h, h], [h, -h]]),
        (SpinSystem::Half, Axis::Y) => CMatrix::from_rows(&[[i(-h), i(h)], [real(h), real(h)]]),
        (SpinSystem::Half, Axis::Z) => CMatrix::identity(2),
        (SpinSystem::One, Axis::X) => {
            CMatrix::from_real_rows(&[[1.0, r2, 1.0], [r2, 0.0, -r2], [1.0, -r2, 1.0]]).scale(real(0.5))
        }
        (SpinSystem::One, Axis::Y) => CMatrix::from_rows(&[
            [real(-1.0), real(r2), real(-1.0)],
            [i(-r2), z, i(r2)],
            [real(1.0), real(r2), real(1.0)],
        ])
        .scale(real(0.5)),
        (SpinSystem::One, Axis::Z) => CMatrix::identity(3),
        (SpinSystem::TwoFermion, Axis::X) => CMatrix::from_real_rows(&[
            [1.0, r2, 0.0, -1.0],
            [1.0, 0.0, r2, 1.0],
            [1.0, 0.0, -r2, 1.0],
            [1.0, -r2, 0.0, -1.0],
        ])
        .scale(real(0.5)),
        (SpinSystem::TwoFermion, Axis::Y) => CMatrix::from_rows(&[
            [i(-1.0), real(r2), z, i(1.0)],
            [real(1.0), z, real(r2), real(1.0)],
            [real(1.0), z, real(-r2), real(1.0)],
            [i(1.0), real(r2), z, i(-1.0)],
        ])
        .scale(real(0.5)),
        (SpinSystem::TwoFermion, Axis::Z) => CMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, h, h, 0.0],
            [0.0, h, -h, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
    };
    let ops = build_operators(system);
    let cols = columns.columns();
    MeasurementBasis {
        axis,
        system,
        sa_eigenvalues: cols.iter().map(|v| expectation(ops.component(axis), v)).collect(),
        s2_eigenvalues: cols.iter().map(|v| expectation(&ops.s2, v)).collect(),
        columns,
    }
}

/// The x, y and z bases of one system.
#[derive(Debug, Clone)]
pub struct AxisBases {
    pub system: SpinSystem,
    pub x: MeasurementBasis,
    pub y: MeasurementBasis,
    pub z: MeasurementBasis,
}

impl AxisBases {
    pub fn build(system: SpinSystem) -> Result<Self, BasisError> {
        Self::from_operators(&build_operators(system))
    }

    pub fn from_operators(ops: &SpinOperatorSet) -> Result<Self, BasisError> {
        Ok(Self {
            system: ops.system,
            x: build_basis(ops, Axis::X)?,
            y: build_basis(ops, Axis::Y)?,
            z: build_basis(ops, Axis::Z)?,
        })
    }

    pub fn reference(system: SpinSystem) -> Self {
        Self {
            system,
            x: reference_basis(system, Axis::X),
            y: reference_basis(system, Axis::Y),
            z: reference_basis(system, Axis::Z),
        }
    }

    pub fn get(&self, axis: Axis) -> &MeasurementBasis {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &MeasurementBasis> {
        [&self.x, &self.y, &self.z].into_iter()
    }
}
