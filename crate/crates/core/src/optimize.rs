//! Derivative-free minimisation over the state families.
//!
//! [`NelderMead`] is a plain simplex minimiser (reflection 1, expansion 2,
//! contraction ½, shrink ½) with an optional projection hook for box
//! constraints. [`find_extrema`] scans a deterministic grid over a family's
//! parameter box, refines a spread-out set of the best grid points with
//! Nelder–Mead and clusters the results.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bases::AxisBases;
use crate::entropy::spin_entropy;
use crate::operators::SpinSystem;
use crate::states::{chi_state, half_state, one_state, xi_state, EntangledParams, HalfParams, OneParams, StateVector};

pub const REFLECTION: f64 = 1.0;
pub const EXPANSION: f64 = 2.0;
pub const CONTRACTION: f64 = 0.5;
pub const SHRINK: f64 = 0.5;

/// Results closer than this in value may share a cluster.
pub const CLUSTER_VALUE_TOL: f64 = 1e-4;
/// ... and closer than this in wrapped parameter distance (max-norm).
pub const CLUSTER_PARAM_TOL: f64 = 1e-3;
/// Minimum infidelity 1 − |⟨a|b⟩|² between the states of two seeds.
pub const SEED_SEPARATION: f64 = 0.05;
/// Slack when comparing a grid value against its lattice neighbours.
const LATTICE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("objective returned {value} at {at:?}")]
    NonFiniteObjective { at: Vec<f64>, value: f64 },
    #[error("starting point is empty")]
    EmptyStart,
    #[error("max_iter must be at least 1")]
    NoIterations,
    #[error("grid_per_dim must be at least 3, got {0}")]
    GridTooCoarse(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// In-place map of a trial point back into the feasible box.
pub type Projection = dyn Fn(&mut [f64]) + Sync;

/// Nelder–Mead configuration.
pub struct NelderMead<'a> {
    pub tol_x: f64,
    pub tol_f: f64,
    pub max_iter: usize,
    /// Per-coordinate offsets of the initial simplex vertices. A single
    /// entry is broadcast to every coordinate.
    pub initial_step: Vec<f64>,
    pub projection: Option<&'a Projection>,
}

impl Default for NelderMead<'_> {
    fn default() -> Self {
        Self {
            tol_x: 1e-8,
            tol_f: 1e-8,
            max_iter: 10_000,
            initial_step: vec![0.1],
            projection: None,
        }
    }
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

impl NelderMead<'_> {
    fn project(&self, x: &mut [f64]) {
        if let Some(p) = self.projection {
            p(x);
        }
    }

    fn step(&self, k: usize) -> f64 {
        if self.initial_step.len() == 1 {
            self.initial_step[0]
        } else {
            self.initial_step[k]
        }
    }

    pub fn minimize<F>(&self, objective: F, x0: &[f64]) -> Result<OptResult, OptError>
    where
        F: Fn(&[f64]) -> f64,
    {
        if x0.is_empty() {
            return Err(OptError::EmptyStart);
        }
        if self.max_iter == 0 {
            return Err(OptError::NoIterations);
        }
        let n = x0.len();
        let eval = |x: Vec<f64>| -> Result<Vertex, OptError> {
            let f = objective(&x);
            if f.is_finite() {
                Ok(Vertex { x, f })
            } else {
                Err(OptError::NonFiniteObjective { at: x, value: f })
            }
        };

        let mut start = x0.to_vec();
        self.project(&mut start);
        let mut simplex = vec![eval(start.clone())?];
        for k in 0..n {
            let mut v = start.clone();
            v[k] += self.step(k);
            self.project(&mut v);
            if v[k] == start[k] {
                // pinned by the projection; step the other way
                v[k] = start[k] - self.step(k);
                self.project(&mut v);
            }
            simplex.push(eval(v)?);
        }

        let mut iterations = 0;
        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
            if self.has_converged(&simplex) {
                converged = true;
                break;
            }
            if iterations == self.max_iter {
                break;
            }
            iterations += 1;

            let best = simplex[0].f;
            let second_worst = simplex[n - 1].f;
            let worst = simplex[n].f;
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|v| v.x[k]).sum::<f64>() / n as f64)
                .collect();
            let toward = |from: &[f64], coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid.iter().zip(from).map(|(c, x)| c + coef * (x - c)).collect();
                self.project(&mut p);
                p
            };

            let reflected = eval(toward(&simplex[n].x, -REFLECTION))?;
            if reflected.f < best {
                let expanded = eval(toward(&reflected.x, EXPANSION))?;
                simplex[n] = if expanded.f < reflected.f { expanded } else { reflected };
                continue;
            }
            if reflected.f < second_worst {
                simplex[n] = reflected;
                continue;
            }
            let contracted = if reflected.f < worst {
                let outside = eval(toward(&reflected.x, CONTRACTION))?;
                (outside.f <= reflected.f).then_some(outside)
            } else {
                let inside = eval(toward(&simplex[n].x, CONTRACTION))?;
                (inside.f < worst).then_some(inside)
            };
            match contracted {
                Some(v) => simplex[n] = v,
                None => {
                    let anchor = simplex[0].x.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let mut p: Vec<f64> = anchor.iter().zip(&v.x).map(|(a, x)| a + SHRINK * (x - a)).collect();
                        self.project(&mut p);
                        *v = eval(p)?;
                    }
                }
            }
        }

        let best = simplex.swap_remove(0);
        Ok(OptResult {
            params: best.x,
            value: best.f,
            converged,
            iterations,
        })
    }

    fn has_converged(&self, simplex: &[Vertex]) -> bool {
        let best = &simplex[0];
        let spread = simplex[simplex.len() - 1].f - best.f;
        let diameter = simplex
            .iter()
            .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        diameter <= self.tol_x && spread <= self.tol_f
    }
}

/// Minimises `objective` from `x0` with the default initial simplex.
pub fn nelder_mead<F>(objective: F, x0: &[f64], tol_x: f64, tol_f: f64, max_iter: usize) -> Result<OptResult, OptError>
where
    F: Fn(&[f64]) -> f64,
{
    NelderMead {
        tol_x,
        tol_f,
        max_iter,
        ..NelderMead::default()
    }
    .minimize(objective, x0)
}

/// One coordinate of a family's parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub name: &'static str,
    pub hi: f64,
    /// Periodic coordinates live on [0, hi) and wrap; the others are the
    /// closed interval [0, hi].
    pub periodic: bool,
}

impl Coordinate {
    const fn polar(name: &'static str) -> Self {
        Self {
            name,
            hi: FRAC_PI_2,
            periodic: false,
        }
    }

    const fn angle(name: &'static str) -> Self {
        Self {
            name,
            hi: TAU,
            periodic: true,
        }
    }

    pub fn normalize(&self, x: f64) -> f64 {
        if self.periodic {
            let w = x.rem_euclid(self.hi);
            // rem_euclid can round up to exactly hi
            if w >= self.hi {
                0.0
            } else {
                w
            }
        } else {
            x.clamp(0.0, self.hi)
        }
    }

    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.periodic {
            let d = d.rem_euclid(self.hi);
            d.min(self.hi - d)
        } else {
            d
        }
    }

    fn grid(&self, n: usize) -> Vec<f64> {
        if self.periodic {
            (0..n).map(|i| self.hi * i as f64 / n as f64).collect()
        } else {
            (0..n).map(|i| self.hi * i as f64 / (n - 1) as f64).collect()
        }
    }

    fn spacing(&self, n: usize) -> f64 {
        if self.periodic {
            self.hi / n as f64
        } else {
            self.hi / (n - 1) as f64
        }
    }
}

/// State families searched by [`find_extrema`]. Global phases are fixed to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// (θ_α, ν) of the spin-½ state.
    Half,
    /// (θ_α, θ_β, φ_x, φ_z) of the spin-1 state, φ_y = 0.
    One,
    /// θ_AB of ξ.
    Xi,
    /// θ_AB of χ.
    Chi,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Half => "half",
            Family::One => "one",
            Family::Xi => "xi",
            Family::Chi => "chi",
        }
    }

    pub fn system(self) -> SpinSystem {
        match self {
            Family::Half => SpinSystem::Half,
            Family::One => SpinSystem::One,
            Family::Xi | Family::Chi => SpinSystem::TwoFermion,
        }
    }

    pub fn coordinates(self) -> &'static [Coordinate] {
        const HALF: [Coordinate; 2] = [Coordinate::polar("theta_alpha"), Coordinate::angle("nu")];
        const ONE: [Coordinate; 4] = [
            Coordinate::polar("theta_alpha"),
            Coordinate::polar("theta_beta"),
            Coordinate::angle("phi_x"),
            Coordinate::angle("phi_z"),
        ];
        const ENTANGLED: [Coordinate; 1] = [Coordinate::angle("theta_ab")];
        match self {
            Family::Half => &HALF,
            Family::One => &ONE,
            Family::Xi | Family::Chi => &ENTANGLED,
        }
    }

    /// Maps every coordinate into its box (wrap or clamp).
    pub fn normalize(self, params: &[f64]) -> Vec<f64> {
        self.coordinates()
            .iter()
            .zip(params)
            .map(|(c, &x)| c.normalize(x))
            .collect()
    }

    /// Normalised parameters with equivalent states mapped to one
    /// representative: ξ and χ at θ_AB + π equal −1 times the state at θ_AB,
    /// so θ_AB is reported in [0, π).
    pub fn canonical(self, params: &[f64]) -> Vec<f64> {
        let mut p = self.normalize(params);
        if matches!(self, Family::Xi | Family::Chi) {
            p[0] = p[0].rem_euclid(PI);
            if PI - p[0] < 1e-12 {
                p[0] = 0.0;
            }
        }
        p
    }

    /// Max-norm distance with periodic coordinates compared modulo 2π.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        self.coordinates()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(c, (&x, &y))| c.distance(x, y))
            .fold(0.0, f64::max)
    }

    /// The state at `params` (normalised into the box first).
    pub fn state(self, params: &[f64]) -> StateVector {
        let p = self.normalize(params);
        let state = match self {
            Family::Half => half_state(HalfParams::new(p[0], p[1], 0.0)),
            Family::One => one_state(OneParams {
                theta_alpha: p[0],
                theta_beta: p[1],
                phi_x: p[2],
                phi_y: 0.0,
                phi_z: p[3],
            }),
            Family::Xi => xi_state(EntangledParams::new(p[0], 0.0)),
            Family::Chi => chi_state(EntangledParams::new(p[0], 0.0)),
        };
        state.expect("normalized parameters are in range")
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "half" => Ok(Family::Half),
            "one" => Ok(Family::One),
            "xi" => Ok(Family::Xi),
            "chi" => Ok(Family::Chi),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

/// Spin-entropy of a family member, evaluated directly.
pub struct FamilyObjective {
    family: Family,
    bases: AxisBases,
}

impl FamilyObjective {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            bases: AxisBases::build(family.system()).expect("bases exist for every system"),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        spin_entropy(&self.family.state(params), &self.bases)
            .map(|r| r.total)
            .unwrap_or(f64::NAN)
    }
}

/// Indices of grid points whose value is no larger than that of any lattice
/// neighbour (±1 step per coordinate, wrapping periodic ones).
fn lattice_minima(family: Family, grid: &[(Vec<f64>, f64)], n: usize) -> Vec<usize> {
    let coords = family.coordinates();
    let dims = coords.len();
    let strides: Vec<usize> = (0..dims).map(|k| n.pow((dims - 1 - k) as u32)).collect();
    (0..grid.len())
        .filter(|&idx| {
            let v = grid[idx].1;
            coords.iter().enumerate().all(|(k, c)| {
                let i = (idx / strides[k]) % n;
                let mut neighbours = Vec::with_capacity(2);
                if c.periodic {
                    neighbours.extend([(i + 1) % n, (i + n - 1) % n]);
                } else {
                    if i + 1 < n {
                        neighbours.push(i + 1);
                    }
                    if i > 0 {
                        neighbours.push(i - 1);
                    }
                }
                neighbours
                    .into_iter()
                    .all(|j| v <= grid[idx - i * strides[k] + j * strides[k]].1 + LATTICE_TIE_TOL)
            })
        })
        .collect()
}

/// Picks up to `count` seeds: lattice minima first, then the remaining grid
/// points, each group in ascending value order. A point is skipped when its
/// state is within [`SEED_SEPARATION`] infidelity of a seed already picked,
/// so degenerate parametrisations (every ν at θ_α = 0, say) contribute once.
fn select_seeds(family: Family, grid: &[(Vec<f64>, f64)], n: usize, count: usize) -> Vec<Vec<f64>> {
    let by_value = |a: &usize, b: &usize| grid[*a].1.total_cmp(&grid[*b].1).then(a.cmp(b));
    let mut minima = lattice_minima(family, grid, n);
    minima.sort_by(by_value);
    let mut rest: Vec<usize> = (0..grid.len()).collect();
    rest.sort_by(by_value);

    let mut seeds: Vec<(Vec<f64>, StateVector)> = Vec::with_capacity(count);
    for idx in minima.into_iter().chain(rest) {
        if seeds.len() == count {
            break;
        }
        let params = &grid[idx].0;
        let state = family.state(params);
        if seeds.iter().all(|(_, s)| 1.0 - s.fidelity(&state) >= SEED_SEPARATION) {
            seeds.push((params.clone(), state));
        }
    }
    seeds.into_iter().map(|(p, _)| p).collect()
}

fn grid_points(family: Family, n: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = family.coordinates().iter().map(|c| c.grid(n)).collect();
    let total = n.pow(axes.len() as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; axes.len()];
            for k in (0..axes.len()).rev() {
                p[k] = axes[k][idx % n];
                idx /= n;
            }
            p
        })
        .collect()
}

/// Grid scan plus Nelder–Mead multistart over `family`.
///
/// Returns one representative per cluster (value within 1e-4 and wrapped
/// parameter distance within 1e-3), sorted by value. The pipeline has no
/// randomness: repeated calls return identical results.
pub fn find_extrema(
    family: Family,
    grid_per_dim: usize,
    refine_starts: usize,
    tol: f64,
) -> Result<Vec<OptResult>, OptError> {
    if grid_per_dim < 3 {
        return Err(OptError::GridTooCoarse(grid_per_dim));
    }
    let objective = FamilyObjective::new(family);
    let grid: Vec<(Vec<f64>, f64)> = grid_points(family, grid_per_dim)
        .into_par_iter()
        .map(|p| {
            let v = objective.eval(&p);
            (p, v)
        })
        .collect();
    if let Some((at, value)) = grid.iter().find(|(_, v)| !v.is_finite()) {
        return Err(OptError::NonFiniteObjective {
            at: at.clone(),
            value: *value,
        });
    }

    let seeds = select_seeds(family, &grid, grid_per_dim, refine_starts);
    let coords = family.coordinates();
    let clamp_closed = |x: &mut [f64]| {
        for (c, v) in coords.iter().zip(x.iter_mut()) {
            if !c.periodic {
                *v = v.clamp(0.0, c.hi);
            }
        }
    };
    let optimizer = NelderMead {
        tol_x: tol,
        tol_f: tol,
        max_iter: 20_000,
        initial_step: coords.iter().map(|c| 0.5 * c.spacing(grid_per_dim)).collect(),
        projection: Some(&clamp_closed),
    };

    let mut refined: Vec<OptResult> = seeds
        .par_iter()
        .map(|seed| {
            optimizer.minimize(|x| objective.eval(x), seed).map(|mut r| {
                r.params = family.canonical(&r.params);
                r
            })
        })
        .collect::<Result<_, _>>()?;

    refined.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| {
            a.params
                .iter()
                .zip(&b.params)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut clusters: Vec<OptResult> = Vec::new();
    for r in refined {
        let duplicate = clusters.iter().any(|c| {
            (c.value - r.value).abs() <= CLUSTER_VALUE_TOL && family.distance(&c.params, &r.params) <= CLUSTER_PARAM_TOL
        });
        if !duplicate {
            clusters.push(r);
        }
    }
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::closed_form_half;
    use crate::linalg::CVector;
    use std::f64::consts::{FRAC_PI_4, LN_2};

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], 1e-10, 1e-12, 10_000).unwrap();
        assert!(r.converged);
        assert!((r.params[0] - 1.0).abs() < 1e-8 && (r.params[1] + 2.0).abs() < 1e-8);
        assert!(r.value < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], 1e-10, 1e-14, 20_000).unwrap();
        assert!((r.params[0] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn closed_form_half_minimum() {
        let f = |x: &[f64]| closed_form_half(x[0].clamp(0.0, FRAC_PI_2), x[1].rem_euclid(TAU)).unwrap();
        let r = nelder_mead(f, &[0.5, 0.5], 1e-10, 1e-12, 10_000).unwrap();
        assert!((r.value - 2.0 * LN_2).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let f = |x: &[f64]| if x[0] > 0.05 { f64::NAN } else { x[0] * x[0] };
        assert!(matches!(
            nelder_mead(f, &[0.0], 1e-8, 1e-8, 100),
            Err(OptError::NonFiniteObjective { .. })
        ));
        assert!(matches!(
            nelder_mead(|_| 0.0, &[], 1e-8, 1e-8, 10),
            Err(OptError::EmptyStart)
        ));
        assert!(matches!(
            nelder_mead(|_| 0.0, &[1.0], 1e-8, 1e-8, 0),
            Err(OptError::NoIterations)
        ));
    }

    #[test]
    fn max_iter_stops_without_convergence() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2);
        let r = nelder_mead(f, &[0.0], 1e-12, 1e-12, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn projection_keeps_points_in_the_box() {
        let clamp = |x: &mut [f64]| x[0] = x[0].clamp(0.0, 1.0);
        let nm = NelderMead {
            projection: Some(&clamp),
            ..NelderMead::default()
        };
        let r = nm.minimize(|x| -x[0], &[1.0]).unwrap();
        assert_eq!(r.params[0], 1.0);
    }

    #[test]
    fn coordinate_wrapping() {
        let c = Coordinate::angle("phi");
        assert!((c.distance(0.001, TAU - 0.001) - 0.002).abs() < 1e-12);
        assert!((c.normalize(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        let p = Coordinate::polar("theta");
        assert_eq!(p.normalize(2.0), FRAC_PI_2);
        assert_eq!(p.distance(0.0, 1.0), 1.0);
    }

    #[test]
    fn half_extrema() {
        let found = find_extrema(Family::Half, 25, 10, 1e-8).unwrap();
        let best = found[0].value;
        assert!((best - 2.0 * LN_2).abs() < 1e-6);
        let near = |theta: f64, nu: Option<f64>| {
            found.iter().any(|r| {
                (r.value - 2.0 * LN_2).abs() < 1e-6
                    && (r.params[0] - theta).abs() < 1e-3
                    && nu.is_none_or(|n| Family::Half.coordinates()[1].distance(r.params[1], n) < 1e-3)
            })
        };
        assert!(near(FRAC_PI_4, Some(0.0)), "{found:?}");
        assert!(near(FRAC_PI_4, Some(FRAC_PI_2)), "{found:?}");
        assert!(near(0.0, None), "{found:?}");
        for r in &found {
            assert!(r.value >= 2.0 * LN_2 - 1e-6);
        }
    }

    #[test]
    fn xi_extrema() {
        let found = find_extrema(Family::Xi, 101, 5, 1e-8).unwrap();
        assert!(found[0].value.abs() < 1e-6);
        let c = Family::Xi.coordinates()[0];
        let at = |theta: f64, value: f64| {
            found
                .iter()
                .any(|r| (r.value - value).abs() < 1e-6 && c.distance(r.params[0], theta) < 1e-3)
        };
        assert!(at(FRAC_PI_4, 0.0), "{found:?}");
        assert!(at(3.0 * FRAC_PI_4, 2.0 * LN_2), "{found:?}");
    }

    #[test]
    fn one_extrema_include_up_state() {
        let found = find_extrema(Family::One, 9, 20, 1e-8).unwrap();
        assert!((found[0].value - 2.0 * LN_2).abs() < 1e-6);
        let up = StateVector::new(CVector::basis(3, 0)).unwrap();
        assert!(
            found
                .iter()
                .any(|r| (r.value - 3.0 * LN_2).abs() < 1e-6 && Family::One.state(&r.params).fidelity(&up) > 1.0 - 1e-9),
            "{found:?}"
        );
        for r in &found {
            assert!(r.value >= -1e-9 && r.value <= 3.0 * 3f64.ln() + 1e-9);
        }
    }

    #[test]
    fn entangled_parameters_reported_modulo_pi() {
        assert!((Family::Xi.canonical(&[5.0 * FRAC_PI_4])[0] - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(Family::Chi.canonical(&[PI - 1e-14])[0], 0.0);
        assert_eq!(Family::Half.canonical(&[0.3, 4.0]), vec![0.3, 4.0]);
    }

    #[test]
    fn deterministic_reruns() {
        let a = find_extrema(Family::Chi, 41, 4, 1e-8).unwrap();
        let b = find_extrema(Family::Chi, 41, 4, 1e-8).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            find_extrema(Family::Chi, 2, 4, 1e-8),
            Err(OptError::GridTooCoarse(2))
        ));
    }
}
