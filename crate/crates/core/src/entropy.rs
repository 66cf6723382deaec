//! Measurement distributions and entropies.
//!
//! The spin-entropy of a pure state is the Shannon entropy (in nats) of the
//! product distribution P(i,j,k) = P_x(i)·P_y(j)·P_z(k), where P_a is the
//! outcome distribution of measuring the state in the axis-`a` basis. By
//! factorisation it equals the sum of the three per-axis entropies; both
//! routes are computed and required to agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bases::{AxisBases, MeasurementBasis};
use crate::linalg::{hermitian_eigen, partial_trace_first, partial_trace_second, LinalgError};
use crate::states::{check_angle, check_polar, StateError, StateVector};

/// Entries below −NEGATIVE_ABORT_TOL indicate an upstream bug.
pub const NEGATIVE_ABORT_TOL: f64 = 1e-9;
/// Allowed |Σp − 1| for a distribution.
pub const SUM_TOL: f64 = 1e-9;
/// Required agreement of the triple-sum and per-axis-sum routes.
pub const FACTORIZATION_TOL: f64 = 1e-10;
/// Required agreement of the two reduced-state entropies of a pure state.
pub const REDUCED_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("dimension mismatch: state has {state} components, basis has {basis}")]
    DimensionMismatch { state: usize, basis: usize },
    #[error("probability entry {index} = {value:.3e} is negative")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum:.12}, not 1")]
    NotNormalized { sum: f64 },
    #[error("triple-sum entropy {triple} disagrees with per-axis sum {additive}")]
    FactorizationMismatch { triple: f64, additive: f64 },
    #[error("reduced-state entropies disagree: {first} vs {second}")]
    ReducedStateMismatch { first: f64, second: f64 },
    #[error("von Neumann entropy of the traced state needs a two-particle state, got dimension {0}")]
    NotTwoParticle(usize),
    #[error("shots must be at least 1")]
    NoShots,
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// x ln x with 0 ln 0 = 0.
#[inline]
pub fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// A discrete outcome distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityDistribution {
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    /// Cleans up roundoff: negative entries down to −1e-9 are set to zero
    /// and the vector is renormalised by its sum. More negative entries, or
    /// a sum further than 1e-9 from one, are errors.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self, EntropyError> {
        let mut probs = raw;
        for (index, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NEGATIVE_ABORT_TOL {
                return Err(EntropyError::NegativeProbability { index, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(EntropyError::NotNormalized { sum });
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// −Σ pᵢ ln pᵢ in nats.
    pub fn shannon_entropy(&self) -> f64 {
        shannon_entropy(&self.probs)
    }
}

/// −Σ pᵢ ln pᵢ with 0·ln 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}

/// Entropy of the product distribution P_x(i)·P_y(j)·P_z(k), summed over
/// all M³ outcome triples.
pub fn product_entropy(
    px: &ProbabilityDistribution,
    py: &ProbabilityDistribution,
    pz: &ProbabilityDistribution,
) -> f64 {
    let mut s = 0.0;
    for &a in px.probs() {
        for &b in py.probs() {
            for &c in pz.probs() {
                s -= xlnx(a * b * c);
            }
        }
    }
    s
}

/// P(i) = |(B†ψ)ᵢ|².
pub fn probabilities(psi: &StateVector, basis: &MeasurementBasis) -> Result<ProbabilityDistribution, EntropyError> {
    if psi.dim() != basis.dim() {
        return Err(EntropyError::DimensionMismatch {
            state: psi.dim(),
            basis: basis.dim(),
        });
    }
    let amps = basis.coordinates(psi.vector())?;
    ProbabilityDistribution::from_raw(amps.iter().map(|z| z.norm_sqr()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub px: ProbabilityDistribution,
    pub py: ProbabilityDistribution,
    pub pz: ProbabilityDistribution,
    pub s_x: f64,
    pub s_y: f64,
    pub s_z: f64,
    pub total: f64,
}

impl EntropyReport {
    fn from_distributions(
        px: ProbabilityDistribution,
        py: ProbabilityDistribution,
        pz: ProbabilityDistribution,
    ) -> Result<Self, EntropyError> {
        let (s_x, s_y, s_z) = (px.shannon_entropy(), py.shannon_entropy(), pz.shannon_entropy());
        let triple = product_entropy(&px, &py, &pz);
        let additive = s_x + s_y + s_z;
        if (triple - additive).abs() > FACTORIZATION_TOL {
            return Err(EntropyError::FactorizationMismatch { triple, additive });
        }
        Ok(Self {
            px,
            py,
            pz,
            s_x,
            s_y,
            s_z,
            total: triple,
        })
    }

    pub fn additive_total(&self) -> f64 {
        self.s_x + self.s_y + self.s_z
    }
}

/// Spin-entropy of `psi` with respect to the three axis bases.
pub fn spin_entropy(psi: &StateVector, bases: &AxisBases) -> Result<EntropyReport, EntropyError> {
    EntropyReport::from_distributions(
        probabilities(psi, &bases.x)?,
        probabilities(psi, &bases.y)?,
        probabilities(psi, &bases.z)?,
    )
}

/// Closed-form spin-½ entropy with P_x^± = (1 ± sin 2θ cos ν)/2,
/// P_y^± = (1 ± sin 2θ sin ν)/2, P_z = (cos²θ, sin²θ).
pub fn closed_form_half(theta_alpha: f64, nu: f64) -> Result<f64, EntropyError> {
    let theta = check_polar("theta_alpha", theta_alpha)?;
    let nu = check_angle("nu", nu)?;
    let s2t = (2.0 * theta).sin();
    let (cx, cy) = (s2t * nu.cos(), s2t * nu.sin());
    let pairs = [
        ((1.0 + cx) / 2.0, (1.0 - cx) / 2.0),
        ((1.0 + cy) / 2.0, (1.0 - cy) / 2.0),
        (theta.cos().powi(2), theta.sin().powi(2)),
    ];
    Ok(-pairs.iter().map(|&(p, q)| xlnx(p) + xlnx(q)).sum::<f64>())
}

/// S_ξ(θ) = (4 − s) ln 2 − (3/2)[(1−s)ln(1−s) + (1+s)ln(1+s)], s = sin 2θ.
pub fn closed_form_xi(theta_ab: f64) -> Result<f64, EntropyError> {
    let theta = check_angle("theta_ab", theta_ab)?;
    let s = (2.0 * theta).sin();
    let ln2 = std::f64::consts::LN_2;
    Ok((4.0 - s) * ln2 - 1.5 * (xlnx(1.0 - s) + xlnx(1.0 + s)))
}

/// S_χ(θ) = 3 ln 2 − cos²θ ln cos²θ − sin²θ ln sin²θ
///          − [(1−s)ln(1−s) + (1+s)ln(1+s)], s = sin 2θ.
pub fn closed_form_chi(theta_ab: f64) -> Result<f64, EntropyError> {
    let theta = check_angle("theta_ab", theta_ab)?;
    let s = (2.0 * theta).sin();
    let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
    let ln2 = std::f64::consts::LN_2;
    Ok(3.0 * ln2 - xlnx(c2) - xlnx(s2) - (xlnx(1.0 - s) + xlnx(1.0 + s)))
}

/// Entropies of the two single-particle reduced states of a two-fermion
/// pure state: (tracing out the second, tracing out the first).
pub fn reduced_entropies(psi: &StateVector) -> Result<(f64, f64), EntropyError> {
    if psi.dim() != 4 {
        return Err(EntropyError::NotTwoParticle(psi.dim()));
    }
    let rho = psi.vector().projector();
    let lambda_entropy = |m| -> Result<f64, EntropyError> {
        let e = hermitian_eigen(&m)?;
        Ok(-e.values.iter().map(|&l| xlnx(l.max(0.0))).sum::<f64>())
    };
    Ok((
        lambda_entropy(partial_trace_second(&rho)?)?,
        lambda_entropy(partial_trace_first(&rho)?)?,
    ))
}

/// von Neumann entropy −Σλ ln λ of one particle after tracing out the
/// other. Both reductions are computed and required to agree.
pub fn von_neumann_traced(psi: &StateVector) -> Result<f64, EntropyError> {
    let (first, second) = reduced_entropies(psi)?;
    if (first - second).abs() > REDUCED_AGREEMENT_TOL {
        return Err(EntropyError::ReducedStateMismatch { first, second });
    }
    Ok(first)
}

/// Draws `shots` outcomes from `p` by inverse CDF and returns the counts.
pub fn sample_counts<R: Rng + ?Sized>(p: &ProbabilityDistribution, shots: u64, rng: &mut R) -> Vec<u64> {
    let mut cdf: Vec<f64> = p
        .probs()
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Empirical frequencies of a count vector.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&k| k as f64 / n as f64).collect()
}

/// Plug-in estimate of the spin-entropy from simulated measurements:
/// `shots` outcomes per axis (x, then y, then z) drawn from one ChaCha8
/// stream seeded with `seed`. No bias correction is applied.
pub fn sample_estimate(
    psi: &StateVector,
    bases: &AxisBases,
    shots: u64,
    seed: u64,
) -> Result<EntropyReport, EntropyError> {
    if shots == 0 {
        return Err(EntropyError::NoShots);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut empirical = Vec::with_capacity(3);
    for basis in bases.iter() {
        let p = probabilities(psi, basis)?;
        let counts = sample_counts(&p, shots, &mut rng);
        empirical.push(ProbabilityDistribution::from_raw(frequencies(&counts))?);
    }
    let pz = empirical.pop().expect("three axes");
    let py = empirical.pop().expect("three axes");
    let px = empirical.pop().expect("three axes");
    EntropyReport::from_distributions(px, py, pz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SpinSystem;
    use crate::states::{half_state, one_state, xi_state, EntangledParams, HalfParams, OneParams};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, LN_2, PI};

    fn half(t: f64, n: f64) -> StateVector {
        half_state(HalfParams::new(t, n, 0.0)).unwrap()
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        assert!((shannon_entropy(&[0.5, 0.5]) - LN_2).abs() < 1e-15);
        assert!((shannon_entropy(&[0.25, 0.5, 0.25]) - 1.5 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn distribution_hygiene() {
        let p = ProbabilityDistribution::from_raw(vec![-5e-13, 1.0]).unwrap();
        assert_eq!(p.probs(), &[0.0, 1.0]);
        assert!(matches!(
            ProbabilityDistribution::from_raw(vec![-1e-8, 1.0]),
            Err(EntropyError::NegativeProbability { index: 0, .. })
        ));
        assert!(matches!(
            ProbabilityDistribution::from_raw(vec![0.5, 0.6]),
            Err(EntropyError::NotNormalized { .. })
        ));
        let p = ProbabilityDistribution::from_raw(vec![0.5, 0.5 + 1e-10]).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probabilities_examples() {
        let b = AxisBases::build(SpinSystem::Half).unwrap();
        let up = half(0.0, 0.0);
        assert_eq!(probabilities(&up, &b.z).unwrap().probs(), &[1.0, 0.0]);
        let px = probabilities(&up, &b.x).unwrap();
        assert!((px.probs()[0] - 0.5).abs() < 1e-15 && (px.probs()[1] - 0.5).abs() < 1e-15);

        let b1 = AxisBases::build(SpinSystem::One).unwrap();
        let mid = one_state(OneParams {
            theta_alpha: FRAC_PI_2,
            theta_beta: 0.0,
            phi_x: 0.0,
            phi_y: 0.0,
            phi_z: 0.0,
        })
        .unwrap();
        // B_x columns (1,√2,1)/2, (√2,0,−√2)/2, (1,−√2,1)/2 against (0,1,0)
        let px = probabilities(&mid, &b1.x).unwrap();
        for (got, want) in px.probs().iter().zip([0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }

        assert!(matches!(
            probabilities(&up, &b1.x),
            Err(EntropyError::DimensionMismatch { state: 2, basis: 3 })
        ));
    }

    #[test]
    fn spin_entropy_anchor_values() {
        let bh = AxisBases::build(SpinSystem::Half).unwrap();
        let r = spin_entropy(&half(FRAC_PI_4, 0.0), &bh).unwrap();
        assert!((r.total - 2.0 * LN_2).abs() < 1e-12);

        let b4 = AxisBases::build(SpinSystem::TwoFermion).unwrap();
        let r = spin_entropy(&xi_state(EntangledParams::new(FRAC_PI_4, 0.0)).unwrap(), &b4).unwrap();
        assert!(r.total.abs() < 1e-12);

        let b3 = AxisBases::build(SpinSystem::One).unwrap();
        let up = one_state(OneParams {
            theta_alpha: 0.0,
            theta_beta: 0.0,
            phi_x: 0.0,
            phi_y: 0.0,
            phi_z: 0.0,
        })
        .unwrap();
        let r = spin_entropy(&up, &b3).unwrap();
        assert!((r.total - 3.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn closed_form_half_examples() {
        assert!((closed_form_half(FRAC_PI_4, 0.0).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        for nu in [0.0, 0.7, 2.0, 5.9] {
            assert!((closed_form_half(0.0, nu).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        }
        // hand evaluation: P_x = P_y = (1 ± 1/√2)/2, P_z = (½, ½)
        let p = (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0;
        let want = -2.0 * (xlnx(p) + xlnx(1.0 - p)) + LN_2;
        let got = closed_form_half(FRAC_PI_4, FRAC_PI_4).unwrap();
        assert!((got - want).abs() < 1e-14);
        assert!((got - 1.526_138_2).abs() < 1e-7);
        let direct = spin_entropy(
            &half(FRAC_PI_4, FRAC_PI_4),
            &AxisBases::build(SpinSystem::Half).unwrap(),
        )
        .unwrap();
        assert!((direct.total - got).abs() < 1e-12);
        assert!(closed_form_half(1.7, 0.0).is_err());
    }

    #[test]
    fn closed_form_entangled_examples() {
        assert!(closed_form_xi(FRAC_PI_4).unwrap().abs() < 1e-12);
        assert!((closed_form_xi(3.0 * FRAC_PI_4).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!((closed_form_xi(FRAC_PI_2).unwrap() - 4.0 * LN_2).abs() < 1e-12);
        assert!((closed_form_chi(FRAC_PI_4).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!(closed_form_xi(2.0 * PI).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        let xi = |t| xi_state(EntangledParams::new(t, 0.0)).unwrap();
        assert!((von_neumann_traced(&xi(FRAC_PI_4)).unwrap() - LN_2).abs() < 1e-12);
        assert!(von_neumann_traced(&xi(0.0)).unwrap().abs() < 1e-15);
        let want = -(0.75f64 * 0.75f64.ln()) - 0.25 * 0.25f64.ln();
        assert!((von_neumann_traced(&xi(FRAC_PI_6)).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.562335).abs() < 1e-6);
        assert!(matches!(
            von_neumann_traced(&half(0.1, 0.1)),
            Err(EntropyError::NotTwoParticle(2))
        ));
    }

    #[test]
    fn sampler_degenerate_axis_is_exact() {
        let bases = AxisBases::build(SpinSystem::Half).unwrap();
        let r = sample_estimate(&half(0.0, 0.0), &bases, 1_000_000, 1).unwrap();
        assert_eq!(r.s_z, 0.0);
        assert_eq!(r.pz.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn sampler_is_deterministic_and_close() {
        let bases = AxisBases::build(SpinSystem::Half).unwrap();
        let psi = half(FRAC_PI_4, 0.0);
        let a = sample_estimate(&psi, &bases, 1_000_000, 7).unwrap();
        let b = sample_estimate(&psi, &bases, 1_000_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.total - 2.0 * LN_2).abs() < 0.01);
        let c = sample_estimate(&psi, &bases, 1_000, 8).unwrap();
        assert_ne!(c, sample_estimate(&psi, &bases, 1_000, 9).unwrap());
        assert!(matches!(
            sample_estimate(&psi, &bases, 0, 1),
            Err(EntropyError::NoShots)
        ));
    }
}
