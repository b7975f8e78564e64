//! Empirical probes of how solutions move when the data move.
//!
//! Three properties are probed near a reference data set `ā` with pairwise
//! distinct points:
//!
//! - the optimal value `v(a)` is locally Lipschitz,
//! - the global solution map `F(a)` is locally upper Lipschitz,
//! - the local solution map has the Aubin property at a nontrivial local
//!   solution `x̄`.
//!
//! Distances on data are the sum over points of Euclidean norms; distances on
//! centroid systems are the sum over slots. Each probe reports the largest
//! observed ratio as its Lipschitz estimate and re-checks every trial
//! against it.
//!
//! Every trial draws from its own ChaCha stream `(seed, trial)`, so results
//! do not depend on evaluation order.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_nontrivial_local, Verdict};
use crate::clustering::kmeans;
use crate::error::{Error, Result};
use crate::model::{CentroidSystem, ClusterPartition, DataSet};
use crate::objective::{barycenter, objective_f_unchecked};
use crate::oracle::{candidate_from_partition, global_solve};

pub const PERTURB_RETRIES: usize = 100;

/// Pairs closer than this (sum norm) are skipped to avoid 0/0.
pub const MIN_PAIR_DISTANCE: f64 = 1e-12;

const DATA_NORM: &str = "sum over points of Euclidean norms";

/// `0.01` times the smallest distance between two data points.
pub fn default_delta(data: &DataSet) -> f64 {
    0.01 * data.min_pairwise_distance()
}

/// Random data set `a'` with `0 < |a' - a| < delta`, points kept pairwise
/// distinct.
pub fn perturb(data: &DataSet, delta: f64, seed: u64) -> Result<DataSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_with(data, delta, &mut rng)
}

fn perturb_with<R: Rng>(data: &DataSet, delta: f64, rng: &mut R) -> Result<DataSet> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perturbation radius must be positive, got {delta}"
        )));
    }
    let n = data.n();
    for _ in 0..PERTURB_RETRIES {
        let dir: Vec<f64> = (0..data.coords().len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let len: f64 = dir
            .chunks_exact(n)
            .map(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt())
            .sum();
        let radius = delta * rng.random::<f64>();
        if len == 0.0 || radius == 0.0 {
            continue;
        }
        let coords = data
            .coords()
            .iter()
            .zip(&dir)
            .map(|(a, d)| a + d * radius / len)
            .collect();
        let moved = data.with_coords(coords);
        if moved.pairwise_distinct() {
            return Ok(moved);
        }
    }
    Err(Error::PerturbationRefused {
        retries: PERTURB_RETRIES,
    })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Smallest sum-norm distance between `x` and `y` over slot permutations.
pub fn permutation_distance(x: &CentroidSystem, y: &CentroidSystem) -> f64 {
    (0..x.k())
        .permutations(x.k())
        .map(|perm| x.permuted(&perm).sum_norm_distance(y))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    ValueLipschitz,
    GlobalUpperLipschitz,
    AubinLocal,
}

/// The pair of data sets realizing the largest ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeDetails {
    ValueLipschitz {
        /// Partitions producing the global solutions at the reference data.
        optimal_partitions: Vec<ClusterPartition>,
        /// Trials where `v(a)` differed from the minimum of the objective
        /// over the optimal partitions' barycenter systems.
        candidate_formula_mismatches: usize,
    },
    GlobalUpperLipschitz {
        reference_solutions: Vec<CentroidSystem>,
        /// For each reference solution, how many perturbed global solutions
        /// were closest to it.
        nearest_reference_counts: Vec<usize>,
        /// Trials where the perturbed problem still had several global
        /// solutions.
        multi_solution_trials: usize,
    },
    AubinLocal {
        reference: CentroidSystem,
        eps: f64,
        attractive_slots: Vec<usize>,
        /// Constructed systems (two per trial) that certified as nontrivial
        /// local solutions.
        certified: usize,
        constructed: usize,
        /// Trials where a constructed system left the ball `B(x̄, eps)`.
        outside_neighborhood: usize,
        /// Trials where k-means started at `x̄` on the perturbed data
        /// reproduced the constructed system.
        kmeans_agreements: usize,
        failures: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbeReport {
    pub probe_kind: ProbeKind,
    pub data_norm: String,
    pub trials: usize,
    pub delta: f64,
    /// Empirical Lipschitz constant.
    pub max_ratio: f64,
    pub violations: usize,
    pub skipped_pairs: usize,
    pub worst_case: Option<WorstCase>,
    pub details: ProbeDetails,
    #[serde(skip)]
    pub ratios: Vec<f64>,
}

struct RatioLog {
    ratios: Vec<f64>,
    /// (ratio, bound check input: numerator, denominator)
    pairs: Vec<(f64, f64)>,
    worst: Option<WorstCase>,
    skipped: usize,
}

impl RatioLog {
    fn new() -> Self {
        Self {
            ratios: Vec::new(),
            pairs: Vec::new(),
            worst: None,
            skipped: 0,
        }
    }

    fn record(&mut self, numerator: f64, denominator: f64, first: &DataSet, second: &DataSet) {
        if denominator < MIN_PAIR_DISTANCE {
            self.skipped += 1;
            return;
        }
        let ratio = numerator / denominator;
        if self.worst.as_ref().is_none_or(|w| ratio > w.ratio) {
            self.worst = Some(WorstCase {
                first: first.to_rows(),
                second: second.to_rows(),
                ratio,
            });
        }
        self.ratios.push(ratio);
        self.pairs.push((numerator, denominator));
    }

    fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Bound `numerator <= L * denominator` re-checked at the estimate.
    fn violations(&self, lipschitz: f64) -> usize {
        self.pairs
            .iter()
            .filter(|(num, den)| *num > lipschitz * den * (1.0 + 1e-12))
            .count()
    }
}

fn require_distinct(data: &DataSet) -> Result<()> {
    match data.duplicate_pair() {
        Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
        None => Ok(()),
    }
}

/// Samples pairs `(a, a')` within `delta` of `data0` and measures
/// `|v(a) - v(a')| / |a - a'|`.
///
/// Also checks that near `data0` the optimal value is attained on the
/// barycenter systems of the reference optimal partitions.
pub fn probe_value_lipschitz(
    data0: &DataSet,
    k: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<StabilityProbeReport> {
    require_distinct(data0)?;
    let reference = global_solve(data0, k, budget)?;
    let omega1 = reference.partition_of_each.clone();
    let tol = 1e-12 * data0.scale() * data0.scale();

    let mut log = RatioLog::new();
    let mut mismatches = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = perturb_with(data0, delta, &mut rng)?;
        let b = perturb_with(data0, delta, &mut rng)?;
        let va = global_solve(&a, k, budget)?.optimal_value;
        let vb = global_solve(&b, k, budget)?.optimal_value;
        for (data, v) in [(&a, va), (&b, vb)] {
            let formula = omega1
                .iter()
                .map(|w| candidate_from_partition(data, w).map(|x| objective_f_unchecked(data, &x)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if (formula - v).abs() > tol {
                mismatches += 1;
            }
        }
        log.record((va - vb).abs(), a.distance_to(&b)?, &a, &b);
    }

    let max_ratio = log.max_ratio();
    Ok(StabilityProbeReport {
        probe_kind: ProbeKind::ValueLipschitz,
        data_norm: DATA_NORM.into(),
        trials,
        delta,
        max_ratio,
        violations: log.violations(max_ratio),
        skipped_pairs: log.skipped,
        worst_case: log.worst,
        details: ProbeDetails::ValueLipschitz {
            optimal_partitions: omega1,
            candidate_formula_mismatches: mismatches,
        },
        ratios: log.ratios,
    })
}

/// Samples `a` within `delta` of `data0` and measures how far `F(a)` lies
/// from `F(data0)` relative to `|a - data0|`.
pub fn probe_global_upper_lipschitz(
    data0: &DataSet,
    k: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<StabilityProbeReport> {
    require_distinct(data0)?;
    let reference = global_solve(data0, k, budget)?.global_solutions;

    let mut log = RatioLog::new();
    let mut nearest_counts = vec![0; reference.len()];
    let mut multi = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = perturb_with(data0, delta, &mut rng)?;
        let solutions = global_solve(&a, k, budget)?.global_solutions;
        if solutions.len() > 1 {
            multi += 1;
        }
        let shift = a.distance_to(data0)?;
        for x in &solutions {
            let (nearest, gap) = reference
                .iter()
                .map(|y| permutation_distance(x, y))
                .enumerate()
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .expect("reference set is nonempty");
            nearest_counts[nearest] += 1;
            log.record(gap, shift, &a, data0);
        }
    }

    let max_ratio = log.max_ratio();
    Ok(StabilityProbeReport {
        probe_kind: ProbeKind::GlobalUpperLipschitz,
        data_norm: DATA_NORM.into(),
        trials,
        delta,
        max_ratio,
        violations: log.violations(max_ratio),
        skipped_pairs: log.skipped,
        worst_case: log.worst,
        details: ProbeDetails::GlobalUpperLipschitz {
            reference_solutions: reference,
            nearest_reference_counts: nearest_counts,
            multi_solution_trials: multi,
        },
        ratios: log.ratios,
    })
}

/// Local solution near `xbar` at data `a`: attractive slots move to the
/// barycenter of their reference attraction set, idle slots stay put.
pub fn track_local_solution(
    data: &DataSet,
    xbar: &CentroidSystem,
    attraction: &[Vec<usize>],
) -> Result<CentroidSystem> {
    let mut x = xbar.clone();
    for (j, set) in attraction.iter().enumerate() {
        if !set.is_empty() {
            x.centroid_mut(j).copy_from_slice(&barycenter(data, set)?);
        }
    }
    Ok(x)
}

/// Samples pairs `(a, ã)` within `delta1` of `data0`, builds local solutions
/// `x ∈ F1(a)` and `x̃ ∈ F1(ã)` near `xbar` by tracking its attraction sets,
/// certifies both, and measures `|x - x̃| / |a - ã|`.
pub fn probe_aubin_local(
    data0: &DataSet,
    xbar: &CentroidSystem,
    delta1: f64,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityProbeReport> {
    require_distinct(data0)?;
    let base = certify_nontrivial_local(data0, xbar)?;
    if base.verdict != Verdict::NontrivialLocal {
        return Err(Error::NotCertified {
            verdict: base.verdict.to_string(),
        });
    }
    let attraction = base.attraction_sets.clone();
    let attractive_slots: Vec<usize> = attraction
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(j, _)| j)
        .collect();
    let threshold = data0.tie_threshold();

    let mut log = RatioLog::new();
    let mut certified = 0;
    let mut constructed = 0;
    let mut outside = 0;
    let mut kmeans_agreements = 0;
    let mut failures = Vec::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let a = perturb_with(data0, delta1, &mut rng)?;
        let b = perturb_with(data0, delta1, &mut rng)?;
        let x = track_local_solution(&a, xbar, &attraction)?;
        let y = track_local_solution(&b, xbar, &attraction)?;

        let mut trial_ok = true;
        for (data, sys) in [(&a, &x), (&b, &y)] {
            constructed += 1;
            let report = certify_nontrivial_local(data, sys)?;
            if report.verdict == Verdict::NontrivialLocal {
                certified += 1;
            } else {
                trial_ok = false;
                failures.push(format!(
                    "trial {t}: constructed system {:?} certified as {} (singleton witness {:?}, barycenter witness {:?}, exclusion witness {:?})",
                    sys.to_rows(),
                    report.verdict,
                    report.singleton_witness,
                    report.barycenter_witness,
                    report.exclusion_witness
                ));
            }
        }
        if x.sum_norm_distance(xbar) >= eps || y.sum_norm_distance(xbar) >= eps {
            outside += 1;
        }
        let (refit, _) = kmeans(&a, xbar, 0.0, 100)?;
        if refit.max_abs_diff(&x) <= threshold {
            kmeans_agreements += 1;
        }
        if trial_ok {
            log.record(x.sum_norm_distance(&y), a.distance_to(&b)?, &a, &b);
        }
    }

    let max_ratio = log.max_ratio();
    let cert_failures = trials - log.pairs.len() - log.skipped;
    Ok(StabilityProbeReport {
        probe_kind: ProbeKind::AubinLocal,
        data_norm: DATA_NORM.into(),
        trials,
        delta: delta1,
        max_ratio,
        violations: log.violations(max_ratio) + cert_failures,
        skipped_pairs: log.skipped,
        worst_case: log.worst,
        details: ProbeDetails::AubinLocal {
            reference: xbar.clone(),
            eps,
            attractive_slots,
            certified,
            constructed,
            outside_neighborhood: outside,
            kmeans_agreements,
            failures,
        },
        ratios: log.ratios,
    })
}

/// `(max - min) / max` of a set of estimates; zero when all are zero.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}
