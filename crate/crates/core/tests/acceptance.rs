//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with
//! `cargo test -p spin-entropy --test acceptance`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spin_entropy::cli::{bell_table, run};
use spin_entropy::entropy::{product_entropy, xlnx};
use spin_entropy::optimize::{find_extrema, Family};
use spin_entropy::verify::random_state;
use spin_entropy::{
    build_operators, check_commutations, chi_state, closed_form_chi, closed_form_half, closed_form_xi, half_state,
    one_state, probabilities, reference_basis, sample_estimate, spin_entropy, von_neumann_traced, xi_state, Axis,
    AxisBases, EntangledParams, HalfParams, OneParams, SpinSystem,
};

const ALGEBRA_TOL: f64 = 1e-12;
const MIN_VALUE_TOL: f64 = 1e-6;
const MINIMIZER_TOL: f64 = 1e-3;
const ANCHOR_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-9;
const VON_NEUMANN_TOL: f64 = 1e-9;
const BASIS_TOL: f64 = 1e-9;
const PHASE_TOL: f64 = 1e-12;
const FACTORIZATION_TOL: f64 = 1e-10;
const SAMPLER_TOL: f64 = 0.02;

const HALF_GRID: usize = 200;
const RANDOM_ANGLES: usize = 10_000;
const VN_GRID: usize = 1000;
const BASIS_STATES: usize = 1000;
const INVARIANCE_CASES: usize = 1000;
const SHOTS: u64 = 100_000;

const TWO_LN2: f64 = 2.0 * LN_2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ac1_operator_algebra() -> Outcome {
    let mut worst: f64 = 0.0;
    for system in SpinSystem::ALL {
        let report = check_commutations(&build_operators(system));
        worst = worst.max(report.max_residual());
    }
    ensure(
        worst <= ALGEBRA_TOL,
        format!("max residual {worst:.2e} (tol {ALGEBRA_TOL:.0e})"),
    )
}

fn ac2_half_minimum() -> Outcome {
    let results = find_extrema(Family::Half, 25, 10, 1e-8).map_err(err)?;
    let best = results.first().ok_or("no results")?.value;
    if (best - TWO_LN2).abs() > MIN_VALUE_TOL {
        return Err(format!("minimum {best:.10} vs 2 ln 2"));
    }
    let minima: Vec<&[f64]> = results
        .iter()
        .filter(|r| (r.value - TWO_LN2).abs() <= MIN_VALUE_TOL)
        .map(|r| r.params.as_slice())
        .collect();
    let near = |target: &[f64]| minima.iter().any(|p| Family::Half.distance(p, target) <= MINIMIZER_TOL);
    let targets = [
        ("(pi/4, 0)", near(&[FRAC_PI_4, 0.0])),
        ("(pi/4, pi/2)", near(&[FRAC_PI_4, FRAC_PI_2])),
    ];
    let pole = minima.iter().any(|p| p[0].abs() <= MINIMIZER_TOL);
    let missing: Vec<&str> = targets
        .iter()
        .filter(|(_, hit)| !hit)
        .map(|(n, _)| *n)
        .chain((!pole).then_some("theta_alpha = 0"))
        .collect();
    ensure(
        missing.is_empty(),
        format!("minimum {best:.10}, {} minimizers; missing: {missing:?}", minima.len()),
    )
}

fn ac3_spin_one() -> Outcome {
    let results = find_extrema(Family::One, 9, 20, 1e-8).map_err(err)?;
    let best = results.first().ok_or("no results")?.value;
    let bases = AxisBases::build(SpinSystem::One).map_err(err)?;
    let eval = |p: OneParams| -> Result<f64, String> {
        Ok(spin_entropy(&one_state(p).map_err(err)?, &bases).map_err(err)?.total)
    };
    let right = eval(OneParams {
        theta_alpha: FRAC_PI_2,
        theta_beta: 0.0,
        phi_x: 0.0,
        phi_y: 0.0,
        phi_z: 0.0,
    })?;
    let up = eval(OneParams {
        theta_alpha: 0.0,
        theta_beta: 0.0,
        phi_x: 0.0,
        phi_y: 0.0,
        phi_z: 0.0,
    })?;
    let local = results.iter().any(|r| (r.value - 3.0 * LN_2).abs() <= MIN_VALUE_TOL);
    ensure(
        (best - TWO_LN2).abs() <= MIN_VALUE_TOL
            && (right - TWO_LN2).abs() <= ANCHOR_TOL
            && (up - 3.0 * LN_2).abs() <= ANCHOR_TOL
            && local,
        format!(
            "minimum {best:.10}, theta_alpha = pi/2 -> {right:.12}, |up> -> {up:.12}, 3 ln 2 stationary value found: {local}"
        ),
    )
}

fn ac4_xi_anchors() -> Outcome {
    let bases = AxisBases::build(SpinSystem::TwoFermion).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (theta, expected) in [(FRAC_PI_4, 0.0), (3.0 * FRAC_PI_4, TWO_LN2), (FRAC_PI_2, 4.0 * LN_2)] {
        let closed = closed_form_xi(theta).map_err(err)?;
        let direct = spin_entropy(&xi_state(EntangledParams::new(theta, 0.0)).map_err(err)?, &bases)
            .map_err(err)?
            .total;
        worst = worst.max((closed - expected).abs()).max((direct - expected).abs());
    }
    ensure(
        worst <= ANCHOR_TOL,
        format!("max deviation {worst:.2e} (tol {ANCHOR_TOL:.0e})"),
    )
}

fn ac5_closed_forms() -> Outcome {
    let half = AxisBases::build(SpinSystem::Half).map_err(err)?;
    let two = AxisBases::build(SpinSystem::TwoFermion).map_err(err)?;
    let mut worst_half: f64 = 0.0;
    for i in 0..HALF_GRID {
        for j in 0..HALF_GRID {
            let theta = FRAC_PI_2 * i as f64 / (HALF_GRID - 1) as f64;
            let nu = TAU * j as f64 / HALF_GRID as f64;
            let direct = spin_entropy(&half_state(HalfParams::new(theta, nu, 0.0)).map_err(err)?, &half)
                .map_err(err)?
                .total;
            worst_half = worst_half.max((direct - closed_form_half(theta, nu).map_err(err)?).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_pair: f64 = 0.0;
    for _ in 0..RANDOM_ANGLES {
        let p = EntangledParams::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
        let xi = spin_entropy(&xi_state(p).map_err(err)?, &two).map_err(err)?.total;
        let chi = spin_entropy(&chi_state(p).map_err(err)?, &two).map_err(err)?.total;
        worst_pair = worst_pair
            .max((xi - closed_form_xi(p.theta_ab).map_err(err)?).abs())
            .max((chi - closed_form_chi(p.theta_ab).map_err(err)?).abs());
    }
    ensure(
        worst_half.max(worst_pair) <= CLOSED_FORM_TOL,
        format!("spin-1/2 grid {worst_half:.2e}, xi/chi {worst_pair:.2e} (tol {CLOSED_FORM_TOL:.0e})"),
    )
}

fn ac6_von_neumann() -> Outcome {
    let mut worst: f64 = 0.0;
    let (mut best_theta, mut best_value) = (0.0, f64::NEG_INFINITY);
    for i in 0..VN_GRID {
        let theta = TAU * i as f64 / VN_GRID as f64;
        let s = von_neumann_traced(&xi_state(EntangledParams::new(theta, 0.0)).map_err(err)?).map_err(err)?;
        let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
        worst = worst.max((s - (-xlnx(c2) - xlnx(s2))).abs());
        if theta <= FRAC_PI_2 && s > best_value {
            (best_theta, best_value) = (theta, s);
        }
    }
    let spacing = TAU / VN_GRID as f64;
    let zeros = [0.0, FRAC_PI_2]
        .iter()
        .map(|&t| von_neumann_traced(&xi_state(EntangledParams::new(t, 0.0))?))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let zero_dev = zeros.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    ensure(
        worst <= VON_NEUMANN_TOL
            && (best_theta - FRAC_PI_4).abs() <= spacing
            && (best_value - LN_2).abs() <= VON_NEUMANN_TOL
            && zero_dev <= VON_NEUMANN_TOL,
        format!("formula {worst:.2e}; max {best_value:.12} at {best_theta:.6}; endpoints {zero_dev:.2e}"),
    )
}

fn ac7_bell() -> Outcome {
    let rows = bell_table().map_err(err)?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let expected = if r.state == "psi-" { 0.0 } else { TWO_LN2 };
        worst = worst
            .max((r.spin_entropy - expected).abs())
            .max((r.von_neumann - LN_2).abs());
    }
    // Φ± against the χ closed form at θ_AB = π/4
    let chi = closed_form_chi(FRAC_PI_4).map_err(err)?;
    for r in rows.iter().filter(|r| r.state.starts_with("phi")) {
        worst = worst.max((r.spin_entropy - chi).abs());
    }
    ensure(
        rows.len() == 4 && worst <= ANCHOR_TOL,
        format!("max deviation {worst:.2e} over {} states", rows.len()),
    )
}

fn ac8_basis_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for system in SpinSystem::ALL {
        let built = AxisBases::build(system).map_err(err)?;
        for axis in Axis::ALL {
            let reference = reference_basis(system, axis);
            for _ in 0..BASIS_STATES {
                let psi = random_state(system.dim(), &mut rng);
                let a = probabilities(&psi, built.get(axis)).map_err(err)?;
                let b = probabilities(&psi, &reference).map_err(err)?;
                for (x, y) in a.probs().iter().zip(b.probs()) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    ensure(
        worst <= BASIS_TOL,
        format!("max deviation {worst:.2e} (tol {BASIS_TOL:.0e})"),
    )
}

fn ac9_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_phase, mut worst_split): (f64, f64) = (0.0, 0.0);
    for system in SpinSystem::ALL {
        let bases = AxisBases::build(system).map_err(err)?;
        for _ in 0..INVARIANCE_CASES {
            let psi = random_state(system.dim(), &mut rng);
            let base = spin_entropy(&psi, &bases).map_err(err)?;
            let rotated = spin_entropy(&psi.with_global_phase(rng.gen_range(0.0..TAU)), &bases).map_err(err)?;
            let mut phased = bases.clone();
            for axis in Axis::ALL {
                let phases: Vec<f64> = (0..system.dim()).map(|_| rng.gen_range(-PI..PI)).collect();
                let b = bases.get(axis).with_column_phases(&phases);
                match axis {
                    Axis::X => phased.x = b,
                    Axis::Y => phased.y = b,
                    Axis::Z => phased.z = b,
                }
            }
            let column = spin_entropy(&psi, &phased).map_err(err)?;
            worst_phase = worst_phase
                .max((base.total - rotated.total).abs())
                .max((base.total - column.total).abs());
            let triple = product_entropy(&base.px, &base.py, &base.pz);
            worst_split = worst_split.max((triple - base.additive_total()).abs());
        }
    }
    ensure(
        worst_phase <= PHASE_TOL && worst_split <= FACTORIZATION_TOL,
        format!(
            "phase {worst_phase:.2e} (tol {PHASE_TOL:.0e}), triple sum {worst_split:.2e} (tol {FACTORIZATION_TOL:.0e})"
        ),
    )
}

fn ac10_sampler() -> Outcome {
    let bases = AxisBases::build(SpinSystem::Half).map_err(err)?;
    let psi = half_state(HalfParams::new(FRAC_PI_4, 0.0, 0.0)).map_err(err)?;
    let first = sample_estimate(&psi, &bases, SHOTS, 42).map_err(err)?;
    let second = sample_estimate(&psi, &bases, SHOTS, 42).map_err(err)?;
    let identical = first.total.to_bits() == second.total.to_bits() && first == second;

    let argv = [
        "spin-entropy",
        "sample",
        "--system",
        "half",
        "--theta-alpha",
        "0.7853981633974483",
        "--shots",
        "100000",
        "--seed",
        "42",
    ];
    let cli_output = || {
        let (mut out, mut errs) = (Vec::new(), Vec::new());
        let code = run(argv, &mut out, &mut errs);
        (code, out)
    };
    let (code_a, out_a) = cli_output();
    let (code_b, out_b) = cli_output();
    let cli_identical = code_a == 0 && code_b == 0 && out_a == out_b && !out_a.is_empty();

    let deviation = (first.total - TWO_LN2).abs();
    ensure(
        deviation <= SAMPLER_TOL && identical && cli_identical,
        format!(
            "estimate {:.6} (|diff| {deviation:.2e}, tol {SAMPLER_TOL}); identical runs: library {identical}, cli {cli_identical}",
            first.total
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1", "operator algebra residuals", ac1_operator_algebra),
        ("AC2", "spin-1/2 minimum 2 ln 2 and its minimizers", ac2_half_minimum),
        ("AC3", "spin-1 minimum 2 ln 2 and anchor values", ac3_spin_one),
        ("AC4", "xi entropy anchors", ac4_xi_anchors),
        ("AC5", "closed forms agree with direct evaluation", ac5_closed_forms),
        ("AC6", "traced von Neumann entropy of xi", ac6_von_neumann),
        ("AC7", "Bell state table", ac7_bell),
        (
            "AC8",
            "constructed bases agree with reference bases",
            ac8_basis_cross_check,
        ),
        ("AC9", "phase invariance and axis additivity", ac9_invariance),
        ("AC10", "sampler accuracy and determinism", ac10_sampler),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (id, title, check) in criteria {
        let t = Instant::now();
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{id:<5} {status}  {title}: {detail} [{:.2}s]",
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
