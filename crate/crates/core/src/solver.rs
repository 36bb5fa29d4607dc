//! Phase design: find interior phases of a symmetric pi-pulse train that
//! nullify a chosen set of expansion coefficients of `U11`.
//!
//! Each coefficient contributes its real and imaginary parts to the
//! residual. Roots are found with a Levenberg-Marquardt iteration whose
//! Jacobian comes from the same truncated-series machinery: the phase being
//! differentiated is lifted into one extra first-order variable.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, canonicalize, CanonicalPhases};
use crate::error::{Error, Result};
use crate::expansion::{expand_u11, jet_propagator_with_phases, model_vars};
use crate::jets::TruncatedSeries;
use crate::model::{ErrorModel, Errors};
use crate::profiler::{level, scan, GridSpec};
use crate::su2::{anagram_phases, probability_at, CompositeSequence};

/// Residual norm below which a converged root is reported.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Tolerance for tabulated phases, which are rounded to `1e-4 pi`.
pub const PRINTED_PHASE_TOLERANCE: f64 = 2e-2;

/// Roots closer than this (max-norm over phases, radians) are duplicates.
pub const DEDUP_DISTANCE: f64 = 1e-6;

/// Level used for the broadness score.
pub const BROADNESS_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangePolicy {
    /// All phases in `[0, 2pi)`.
    ZeroTwoPi,
    /// All phases in `(-pi, pi]`.
    SymmetricPi,
    /// Either of the two ranges.
    #[default]
    Either,
}

impl RangePolicy {
    pub fn accepts(self, c: &CanonicalPhases) -> bool {
        match self {
            RangePolicy::ZeroTwoPi => c.in_zero_two_pi,
            RangePolicy::SymmetricPi => c.in_symmetric_pi,
            RangePolicy::Either => c.in_zero_two_pi || c.in_symmetric_pi,
        }
    }
}

impl std::str::FromStr for RangePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-two-pi" | "zero_two_pi" | "0,2pi" => Ok(RangePolicy::ZeroTwoPi),
            "symmetric-pi" | "symmetric_pi" | "-pi,pi" => Ok(RangePolicy::SymmetricPi),
            "either" => Ok(RangePolicy::Either),
            other => Err(Error::InvalidProblem(format!("unknown range policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullificationProblem {
    pub n_pulses: usize,
    pub model: ErrorModel,
    /// Coefficient multi-indices to nullify, in `(alpha, epsilon[, delta])` order.
    pub targets: Vec<Vec<usize>>,
    #[serde(default)]
    pub range_policy: RangePolicy,
}

impl NullificationProblem {
    pub fn new(n_pulses: usize, model: ErrorModel, targets: Vec<Vec<usize>>) -> Result<Self> {
        let p = NullificationProblem {
            n_pulses,
            model,
            targets,
            range_policy: RangePolicy::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_range_policy(mut self, policy: RangePolicy) -> Self {
        self.range_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses < 3 || self.n_pulses.is_multiple_of(2) {
            return Err(Error::InvalidLength(self.n_pulses));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidProblem("no targets".into()));
        }
        if self.targets.len() > self.unknowns() {
            return Err(Error::InvalidProblem(format!(
                "{} targets but only {} free phases",
                self.targets.len(),
                self.unknowns()
            )));
        }
        let vars = model_vars(self.model);
        if let Some(t) = self.targets.iter().find(|t| t.len() != vars) {
            return Err(Error::InvalidProblem(format!(
                "target {t:?} does not have {vars} indices for the {} model",
                self.model
            )));
        }
        Ok(())
    }

    /// Number of free interior phases.
    pub fn unknowns(&self) -> usize {
        self.n_pulses / 2
    }

    /// Smallest caps covering every target.
    pub fn caps(&self) -> Vec<usize> {
        (0..model_vars(self.model))
            .map(|v| self.targets.iter().map(|t| t[v]).max().unwrap_or(0))
            .collect()
    }

    pub fn sequence(&self, interior: &[f64]) -> Result<CompositeSequence> {
        CompositeSequence::anagram(format!("N{}", self.n_pulses), interior)
    }
}

/// Default targets for triple-model problems: first order in `alpha` and in
/// `delta`. This is a heuristic; no target set is known for such designs.
/// Pure `epsilon` orders are left out because `U11` vanishes identically at
/// `alpha = delta = 0` for an odd train of pi pulses.
pub fn heuristic_triple_targets() -> Vec<Vec<usize>> {
    vec![vec![1, 0, 0], vec![0, 0, 1]]
}

/// Real and imaginary parts of every target coefficient at the given
/// interior phases (radians).
pub fn residual(interior: &[f64], problem: &NullificationProblem) -> Result<Vec<f64>> {
    if interior.len() != problem.unknowns() {
        return Err(Error::DimensionMismatch {
            expected: problem.unknowns(),
            got: interior.len(),
        });
    }
    let table = expand_u11(&problem.sequence(interior)?, problem.model, &problem.caps())?;
    let mut out = Vec::with_capacity(2 * problem.targets.len());
    for t in &problem.targets {
        let c = table.get(t)?;
        out.push(c.re);
        out.push(c.im);
    }
    Ok(out)
}

/// Residual and its Jacobian with respect to the interior phases.
pub fn residual_and_jacobian(interior: &[f64], problem: &NullificationProblem) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = problem.unknowns();
    if interior.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: interior.len(),
        });
    }
    let seq = problem.sequence(interior)?;
    let mut caps = problem.caps();
    caps.push(1);
    let extra = caps.len() - 1;
    let full = anagram_phases(interior);
    let slot = |pos: usize| -> Option<usize> {
        let mirror = pos.min(full.len() - 1 - pos);
        mirror.checked_sub(1)
    };

    let rows = 2 * problem.targets.len();
    let mut jac = DMatrix::zeros(rows, n);
    let mut res = vec![0.0; rows];
    for col in 0..n {
        let phases: Vec<TruncatedSeries> = full
            .iter()
            .enumerate()
            .map(|(pos, &phi)| {
                if slot(pos) == Some(col) {
                    TruncatedSeries::lift_variable(&caps, extra, phi)
                } else {
                    Ok(TruncatedSeries::constant(&caps, Complex64::new(phi, 0.0)))
                }
            })
            .collect::<Result<_>>()?;
        let jet = jet_propagator_with_phases(&seq, problem.model, &caps, &phases)?;
        for (i, t) in problem.targets.iter().enumerate() {
            let mut idx = t.clone();
            idx.push(1);
            let d = jet.a.coefficient(&idx)?;
            jac[(2 * i, col)] = d.re;
            jac[(2 * i + 1, col)] = d.im;
            if col == 0 {
                idx[extra] = 0;
                let c = jet.a.coefficient(&idx)?;
                res[2 * i] = c.re;
                res[2 * i + 1] = c.im;
            }
        }
    }
    Ok((res, jac))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLimits {
    pub max_iterations: usize,
    /// Stop once the residual norm falls below this.
    pub target_residual: f64,
}

impl Default for IterationLimits {
    fn default() -> Self {
        IterationLimits {
            max_iterations: 200,
            target_residual: 1e-14,
        }
    }
}

/// Levenberg-Marquardt from one starting point. Returns the final phases
/// and residual norm whether or not the iteration converged.
pub fn refine(start: &[f64], problem: &NullificationProblem, limits: &IterationLimits) -> Result<(Vec<f64>, f64)> {
    let n = start.len();
    let mut x = start.to_vec();
    let (mut r, mut jac) = residual_and_jacobian(&x, problem)?;
    let mut r_norm = norm(&r);
    let mut damping = 1e-3;
    for _ in 0..limits.max_iterations {
        if r_norm < limits.target_residual || !r_norm.is_finite() {
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let scale = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        while damping < 1e12 {
            let lhs = &jtj + DMatrix::identity(n, n) * (damping * scale);
            let Some(step) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr = residual(&trial, problem)?;
            let tn = norm(&tr);
            if tn < r_norm {
                let tiny = step.norm() < 1e-16 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
                x = trial;
                damping = (damping / 5.0).max(1e-15);
                accepted = true;
                let (nr, nj) = residual_and_jacobian(&x, problem)?;
                r = nr;
                jac = nj;
                r_norm = norm(&r);
                if tiny {
                    return Ok((x, r_norm));
                }
                break;
            }
            damping *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, r_norm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub multistart: usize,
    pub rng_seed: u64,
    /// Explicit starting points (interior phases in units of pi). When set
    /// they replace the random seeds.
    #[serde(default)]
    pub seeds: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub limits: IterationLimits,
    /// Rank roots by the area of their high-fidelity region.
    #[serde(default = "yes")]
    pub score_broadness: bool,
    /// Points per axis of the grid used for the broadness score.
    #[serde(default = "default_broadness_points")]
    pub broadness_points: usize,
}

fn yes() -> bool {
    true
}

fn default_broadness_points() -> usize {
    201
}

impl SolveOptions {
    pub fn new(multistart: usize, rng_seed: u64) -> Self {
        SolveOptions {
            multistart,
            rng_seed,
            seeds: None,
            limits: IterationLimits::default(),
            score_broadness: true,
            broadness_points: default_broadness_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Full phase list in units of pi.
    pub phases_pi: Vec<f64>,
    pub residual_norm: f64,
    pub in_range: bool,
    pub in_zero_two_pi: bool,
    pub in_symmetric_pi: bool,
    /// Fraction of the default grid above `1 - 1e-4`, when scored.
    pub broadness: Option<f64>,
    /// Index of the first starting point that reached this root.
    pub seed_index: usize,
}

impl Solution {
    /// Interior phases in radians.
    pub fn interior(&self) -> Vec<f64> {
        let n = self.phases_pi.len() / 2;
        self.phases_pi[1..=n].iter().map(|p| p * PI).collect()
    }

    pub fn interior_pi(&self) -> Vec<f64> {
        let n = self.phases_pi.len() / 2;
        self.phases_pi[1..=n].to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged_seeds: usize,
    pub failed_seeds: usize,
    /// Smallest residual norm among non-converged seeds.
    pub best_failed_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub problem: NullificationProblem,
    pub rng_seed: u64,
    pub seed_count: usize,
    pub solutions: Vec<Solution>,
    pub diagnostics: Diagnostics,
}

impl SolutionSet {
    pub fn in_range(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(|s| s.in_range)
    }

    /// First solution whose interior phases lie within `tol_pi` (units of pi)
    /// of `interior_pi`.
    pub fn find_near(&self, interior_pi: &[f64], tol_pi: f64) -> Option<&Solution> {
        self.solutions.iter().find(|s| {
            let own = s.interior_pi();
            own.len() == interior_pi.len() && own.iter().zip(interior_pi).all(|(a, b)| (a - b).abs() <= tol_pi)
        })
    }
}

/// Uniform starting points in `(-pi, pi]^n`.
pub fn random_seeds(n: usize, count: usize, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| (0..n).map(|_| PI - 2.0 * PI * rng.random::<f64>()).collect())
        .collect()
}

/// Multi-start root search. Converged roots are canonicalized (sign flip
/// only, never reduced modulo `2pi`), deduplicated, flagged against the
/// range policy and ranked by broadness.
pub fn solve(problem: &NullificationProblem, options: &SolveOptions) -> Result<SolutionSet> {
    problem.validate()?;
    let n = problem.unknowns();
    let starts: Vec<Vec<f64>> = match &options.seeds {
        Some(seeds) => {
            if let Some(bad) = seeds.iter().find(|s| s.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: bad.len(),
                });
            }
            seeds.iter().map(|s| s.iter().map(|p| p * PI).collect()).collect()
        }
        None => {
            if options.multistart == 0 {
                return Err(Error::InvalidProblem("multistart must be at least 1".into()));
            }
            random_seeds(n, options.multistart, options.rng_seed)
        }
    };

    let outcomes: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| refine(s, problem, &options.limits))
        .collect::<Result<_>>()?;

    let mut roots: Vec<Solution> = Vec::new();
    let mut failed = 0;
    let mut best_failed: Option<f64> = None;
    for (seed_index, (x, r)) in outcomes.into_iter().enumerate() {
        if r.is_nan() || r >= ROOT_TOLERANCE {
            failed += 1;
            if r.is_finite() {
                best_failed = Some(best_failed.map_or(r, |b: f64| b.min(r)));
            }
            continue;
        }
        let canon = canonicalize(&anagram_phases(&x));
        let phases_pi: Vec<f64> = canon.phases.iter().map(|p| p / PI).collect();
        let duplicate = roots.iter_mut().find(|s| {
            s.phases_pi
                .iter()
                .zip(&phases_pi)
                .all(|(a, b)| (a - b).abs() * PI < DEDUP_DISTANCE)
        });
        match duplicate {
            Some(existing) => {
                if r < existing.residual_norm {
                    existing.residual_norm = r;
                    existing.phases_pi = phases_pi;
                }
            }
            None => roots.push(Solution {
                phases_pi,
                residual_norm: r,
                in_range: problem.range_policy.accepts(&canon),
                in_zero_two_pi: canon.in_zero_two_pi,
                in_symmetric_pi: canon.in_symmetric_pi,
                broadness: None,
                seed_index,
            }),
        }
    }

    if options.score_broadness {
        let spec = GridSpec::default_for(problem.model).with_points(options.broadness_points);
        let scores: Vec<f64> = roots
            .par_iter()
            .map(|s| {
                let seq = problem.sequence(&s.interior())?;
                Ok(scan(&seq, problem.model, &spec)?.fraction_above(level(BROADNESS_ORDER)))
            })
            .collect::<Result<_>>()?;
        for (s, b) in roots.iter_mut().zip(scores) {
            s.broadness = Some(b);
        }
    }
    // Every kept root already meets ROOT_TOLERANCE, so residuals are treated
    // as tied and broadness decides; seed order breaks remaining ties.
    roots.sort_by(|a, b| {
        let (ba, bb) = (a.broadness.unwrap_or(0.0), b.broadness.unwrap_or(0.0));
        bb.total_cmp(&ba).then(a.seed_index.cmp(&b.seed_index))
    });

    Ok(SolutionSet {
        problem: problem.clone(),
        rng_seed: options.rng_seed,
        seed_count: starts.len(),
        diagnostics: Diagnostics {
            converged_seeds: starts.len() - failed,
            failed_seeds: failed,
            best_failed_residual: best_failed,
        },
        solutions: roots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub model: ErrorModel,
    pub targets: Vec<Vec<usize>>,
    /// `|c|` for each target at the tabulated phases.
    pub magnitudes: Vec<f64>,
    pub probability_at_origin: f64,
    /// All magnitudes below the tolerance and `p = 1` at the origin.
    pub pass: bool,
    /// Largest phase shift (units of pi) to the exact root polished from the
    /// tabulated phases.
    pub root_distance_pi: Option<f64>,
    /// One unit in the last tabulated decimal (units of pi).
    pub printed_unit_pi: f64,
    /// The exact root lies within one printed unit of the tabulated phases.
    pub rounding_consistent: Option<bool>,
    /// `true` when no nullified set is known and only the origin was checked.
    pub profile_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogReport {
    pub tolerance: f64,
    pub rows: Vec<VerifyRow>,
}

impl CatalogReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn all_rounding_consistent(&self) -> bool {
        self.rows.iter().all(|r| r.rounding_consistent != Some(false))
    }

    pub fn row(&self, name: &str) -> Option<&VerifyRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Number of decimals the phases were printed with, capped at 6 for values
/// such as `2/3` that are stored exactly.
fn printed_decimals(phases_pi: &[f64]) -> i32 {
    (0..6)
        .find(|&d| {
            let scale = 10f64.powi(d);
            phases_pi.iter().all(|p| ((p * scale).round() - p * scale).abs() < 1e-9)
        })
        .unwrap_or(6)
}

/// Evaluates the nullified coefficients of one catalog entry and polishes
/// its phases to the nearest exact root.
pub fn verify_entry(entry: &catalog::NamedSequence) -> Result<VerifyRow> {
    let seq = entry.to_sequence()?;
    let p0 = probability_at(&seq, entry.model, &Errors::ZERO);
    let unit = 10f64.powi(-printed_decimals(&entry.phases_pi));
    let (magnitudes, root_distance_pi) = if entry.nullified.is_empty() {
        (Vec::new(), None)
    } else {
        let problem = NullificationProblem::new(entry.len(), entry.model, entry.nullified.clone())?;
        let interior = entry.interior_phases();
        let r = residual(&interior, &problem)?;
        let magnitudes = r.chunks(2).map(|c| c[0].hypot(c[1])).collect();
        let (root, rn) = refine(&interior, &problem, &IterationLimits::default())?;
        let distance = (rn < ROOT_TOLERANCE).then(|| {
            root.iter()
                .zip(&interior)
                .map(|(a, b)| (a - b).abs() / PI)
                .fold(0.0, f64::max)
        });
        (magnitudes, Some(distance.unwrap_or(f64::INFINITY)))
    };
    let pass = (p0 - 1.0).abs() < 1e-12 && magnitudes.iter().all(|&m| m < PRINTED_PHASE_TOLERANCE);
    Ok(VerifyRow {
        name: entry.name.clone(),
        model: entry.model,
        targets: entry.nullified.clone(),
        profile_only: entry.nullified.is_empty(),
        magnitudes,
        probability_at_origin: p0,
        pass,
        rounding_consistent: root_distance_pi.map(|d| d <= unit + 1e-9),
        root_distance_pi: root_distance_pi.map(|d| if d.is_finite() { d } else { f64::NAN }),
        printed_unit_pi: unit,
    })
}

/// Verifies every catalog entry against its nullified set.
pub fn verify_catalog() -> Result<CatalogReport> {
    let rows = catalog::entries().par_iter().map(verify_entry).collect::<Result<_>>()?;
    Ok(CatalogReport {
        tolerance: PRINTED_PHASE_TOLERANCE,
        rows,
    })
}
