//! Self-check suite behind the `verify` subcommand.
//!
//! Each check reports the worst residual it saw against a fixed tolerance.
//! The operator sets are injectable so that a broken operator can be shown
//! to fail the suite.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bases::{reference_basis, AxisBases};
use crate::entropy::{
    closed_form_chi, closed_form_half, closed_form_xi, probabilities, product_entropy, spin_entropy,
    von_neumann_traced, xlnx,
};
use crate::linalg::{c, hermitian_eigen, CVector};
use crate::operators::{build_operators, check_commutations, Axis, SpinOperatorSet, SpinSystem, ALGEBRA_TOL};
use crate::states::{
    bell_state, chi_state, half_state, one_state, xi_state, BellState, EntangledParams, HalfParams, OneParams,
    StateVector,
};

const SEED: u64 = 0x5eed_5eed;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual: f64::INFINITY,
            tolerance,
            passed: false,
        }
    }
}

/// Uniform entries in the unit square, normalised.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v = CVector::new(
            (0..dim)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        let n = v.norm();
        if n > 1e-3 {
            return StateVector::new(v.scale(c(1.0 / n, 0.0))).expect("normalized by construction");
        }
    }
}

fn algebra_checks(ops: &SpinOperatorSet, out: &mut Vec<CheckOutcome>) {
    let sys = ops.system;
    let report = check_commutations(ops);
    let cyclic = report.cyclic_residuals.iter().copied().fold(0.0, f64::max);
    let casimir = report.casimir_residuals.iter().copied().fold(0.0, f64::max);
    out.push(CheckOutcome::new(
        format!("{sys}: [S_a,S_b] = iS_c"),
        cyclic,
        ALGEBRA_TOL,
    ));
    out.push(CheckOutcome::new(format!("{sys}: [S^2,S_a] = 0"), casimir, ALGEBRA_TOL));
    out.push(CheckOutcome::new(
        format!("{sys}: S^2 = Sx^2 + Sy^2 + Sz^2"),
        ops.sum_of_squares().max_abs_diff(&ops.s2),
        1e-12,
    ));
    let hermitian = [&ops.sx, &ops.sy, &ops.sz, &ops.s2]
        .iter()
        .map(|m| m.hermitian_deviation())
        .fold(0.0, f64::max);
    out.push(CheckOutcome::new(
        format!("{sys}: operators Hermitian"),
        hermitian,
        1e-12,
    ));
    let trace = Axis::ALL
        .iter()
        .map(|&a| ops.component(a).trace().norm())
        .fold(0.0, f64::max);
    out.push(CheckOutcome::new(format!("{sys}: tr S_a = 0"), trace, 1e-12));

    let want: &[f64] = match sys {
        SpinSystem::Half => &[0.5, -0.5],
        SpinSystem::One => &[1.0, 0.0, -1.0],
        SpinSystem::TwoFermion => &[1.0, 0.0, 0.0, -1.0],
    };
    match hermitian_eigen(&ops.sz) {
        Ok(e) if e.values.len() == want.len() => {
            let r = e
                .values
                .iter()
                .zip(want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            out.push(CheckOutcome::new(format!("{sys}: spectrum of S_z"), r, 1e-10));
        }
        _ => out.push(CheckOutcome::failed(format!("{sys}: spectrum of S_z"), 1e-10)),
    }
}

fn basis_checks(ops: &SpinOperatorSet, bases: Option<&AxisBases>, out: &mut Vec<CheckOutcome>) {
    let sys = ops.system;
    let Some(bases) = bases else {
        out.push(CheckOutcome::failed(format!("{sys}: build x/y/z bases"), 0.0));
        return;
    };
    let unitarity = bases.iter().map(|b| b.unitarity_deviation()).fold(0.0, f64::max);
    out.push(CheckOutcome::new(format!("{sys}: bases unitary"), unitarity, 1e-10));
    let eigen = bases.iter().map(|b| b.eigen_residual(ops)).fold(0.0, f64::max);
    out.push(CheckOutcome::new(
        format!("{sys}: bases diagonalize (S_a, S^2)"),
        eigen,
        1e-9,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ sys.dim() as u64);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let psi = random_state(sys.dim(), &mut rng);
        for axis in Axis::ALL {
            let built = probabilities(&psi, bases.get(axis));
            let expected = probabilities(&psi, &reference_basis(sys, axis));
            match (built, expected) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in a.probs().iter().zip(b.probs()) {
                        worst = worst.max((x - y).abs());
                    }
                }
                _ => worst = f64::INFINITY,
            }
        }
    }
    out.push(CheckOutcome::new(
        format!("{sys}: probabilities match reference bases"),
        worst,
        1e-9,
    ));
}

fn entropy_checks(bases_for: impl Fn(SpinSystem) -> Option<AxisBases>, out: &mut Vec<CheckOutcome>) {
    let (Some(b2), Some(b3), Some(b4)) = (
        bases_for(SpinSystem::Half),
        bases_for(SpinSystem::One),
        bases_for(SpinSystem::TwoFermion),
    ) else {
        out.push(CheckOutcome::failed("entropy checks (bases unavailable)", 0.0));
        return;
    };
    let total = |psi: &StateVector, b: &AxisBases| spin_entropy(psi, b).map(|r| r.total).unwrap_or(f64::NAN);
    let gap = |a: f64, b: f64| {
        if a.is_nan() || b.is_nan() {
            f64::INFINITY
        } else {
            (a - b).abs()
        }
    };

    let mut worst = 0.0_f64;
    let n = 50;
    for i in 0..=n {
        for j in 0..n {
            let (t, nu) = (FRAC_PI_2 * i as f64 / n as f64, TAU * j as f64 / n as f64);
            let psi = half_state(HalfParams::new(t, nu, 0.0)).expect("grid in range");
            worst = worst.max(gap(closed_form_half(t, nu).unwrap_or(f64::NAN), total(&psi, &b2)));
        }
    }
    out.push(CheckOutcome::new("half: closed form = direct", worst, 1e-9));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut wx, mut wc) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let p = EntangledParams::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
        let xi = xi_state(p).expect("in range");
        let chi = chi_state(p).expect("in range");
        wx = wx.max(gap(closed_form_xi(p.theta_ab).unwrap_or(f64::NAN), total(&xi, &b4)));
        wc = wc.max(gap(closed_form_chi(p.theta_ab).unwrap_or(f64::NAN), total(&chi, &b4)));
    }
    out.push(CheckOutcome::new("xi: closed form = direct", wx, 1e-9));
    out.push(CheckOutcome::new("chi: closed form = direct", wc, 1e-9));

    let mut phase = 0.0_f64;
    let mut factor = 0.0_f64;
    for dim_bases in [&b2, &b3, &b4] {
        for _ in 0..100 {
            let psi = random_state(dim_bases.system.dim(), &mut rng);
            let base = total(&psi, dim_bases);
            let rotated = total(&psi.with_global_phase(rng.gen_range(0.0..TAU)), dim_bases);
            let phases: Vec<f64> = (0..psi.dim()).map(|_| rng.gen_range(0.0..TAU)).collect();
            let rephased = AxisBases {
                system: dim_bases.system,
                x: dim_bases.x.with_column_phases(&phases),
                y: dim_bases.y.with_column_phases(&phases),
                z: dim_bases.z.with_column_phases(&phases),
            };
            phase = phase.max(gap(base, rotated)).max(gap(base, total(&psi, &rephased)));
            if let Ok(r) = spin_entropy(&psi, dim_bases) {
                factor = factor.max((product_entropy(&r.px, &r.py, &r.pz) - r.additive_total()).abs());
            } else {
                factor = f64::INFINITY;
            }
        }
    }
    out.push(CheckOutcome::new(
        "entropy invariant under global and basis phases",
        phase,
        1e-12,
    ));
    out.push(CheckOutcome::new("triple sum = sum of axis entropies", factor, 1e-10));

    let one = |ta: f64, tb: f64, px: f64, pz: f64| {
        one_state(OneParams {
            theta_alpha: ta,
            theta_beta: tb,
            phi_x: px,
            phi_y: 0.0,
            phi_z: pz,
        })
        .expect("in range")
    };
    let half_min = half_state(HalfParams::new(FRAC_PI_4, 0.0, 0.0)).expect("in range");
    out.push(CheckOutcome::new(
        "half: S at (pi/4, 0) = 2 ln 2",
        gap(total(&half_min, &b2), 2.0 * LN_2),
        1e-9,
    ));
    out.push(CheckOutcome::new(
        "one: S at theta_alpha = pi/2 is 2 ln 2",
        gap(total(&one(FRAC_PI_2, 0.0, 0.0, 0.0), &b3), 2.0 * LN_2),
        1e-9,
    ));
    out.push(CheckOutcome::new(
        "one: S at (0, pi/4, pi/4, pi/4) is 2 ln 2",
        gap(total(&one(0.0, FRAC_PI_4, FRAC_PI_4, FRAC_PI_4), &b3), 2.0 * LN_2),
        1e-9,
    ));
    out.push(CheckOutcome::new(
        "one: S at |up> is 3 ln 2",
        gap(total(&one(0.0, 0.0, 0.0, 0.0), &b3), 3.0 * LN_2),
        1e-9,
    ));

    let mut bell = 0.0_f64;
    for which in BellState::ALL {
        let want = if which == BellState::PsiMinus { 0.0 } else { 2.0 * LN_2 };
        let psi = bell_state(which);
        bell = bell.max(gap(total(&psi, &b4), want));
        bell = bell.max(gap(von_neumann_traced(&psi).unwrap_or(f64::NAN), LN_2));
    }
    out.push(CheckOutcome::new(
        "Bell states: spin and von Neumann entropies",
        bell,
        1e-9,
    ));

    let mut vn = 0.0_f64;
    for i in 0..1000 {
        let t = TAU * i as f64 / 1000.0;
        let (c2, s2) = (t.cos().powi(2), t.sin().powi(2));
        let psi = xi_state(EntangledParams::new(t, 0.0)).expect("in range");
        vn = vn.max(gap(von_neumann_traced(&psi).unwrap_or(f64::NAN), -xlnx(c2) - xlnx(s2)));
    }
    out.push(CheckOutcome::new(
        "xi: traced von Neumann = -c^2 ln c^2 - s^2 ln s^2",
        vn,
        1e-9,
    ));
}

/// Runs every check against the given operator sets. Systems without a
/// supplied set use the standard operators.
pub fn run_checks(operator_sets: &[SpinOperatorSet]) -> Vec<CheckOutcome> {
    let ops_for = |sys: SpinSystem| {
        operator_sets
            .iter()
            .find(|o| o.system == sys)
            .cloned()
            .unwrap_or_else(|| build_operators(sys))
    };
    let mut out = Vec::new();
    for sys in SpinSystem::ALL {
        let ops = ops_for(sys);
        algebra_checks(&ops, &mut out);
        let bases = AxisBases::from_operators(&ops).ok();
        basis_checks(&ops, bases.as_ref(), &mut out);
    }
    entropy_checks(|sys| AxisBases::from_operators(&ops_for(sys)).ok(), &mut out);
    out
}

/// Runs the suite on the standard operators.
pub fn run_default_checks() -> Vec<CheckOutcome> {
    run_checks(&[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    #[test]
    fn default_suite_passes() {
        let results = run_default_checks();
        for r in &results {
            assert!(r.passed, "{r:?}");
        }
        assert!(results.len() > 30);
    }

    #[test]
    fn corrupted_sx_fails_the_suite() {
        let mut ops = build_operators(SpinSystem::TwoFermion);
        ops.sx[(0, 1)] = real(0.7);
        ops.sx[(1, 0)] = real(0.7);
        let results = run_checks(&[ops]);
        let commutator = results
            .iter()
            .find(|r| r.name == "two-fermion: [S_a,S_b] = iS_c")
            .unwrap();
        assert!(!commutator.passed);
        assert!(commutator.residual > 0.1);
    }
}
