//! Exact solving on small instances by enumerating partitions.
//!
//! With pairwise distinct data every global solution has nonempty clusters
//! and each of its centroids is the barycenter of its cluster, so the global
//! solutions are among the barycenter systems `x_ω(a)` of the partitions `ω`
//! of the points into exactly `k` nonempty blocks. There are `S(m, k)`
//! (Stirling number of the second kind) of them, which is why every
//! enumeration is guarded by a budget.

use serde::{Deserialize, Serialize};

use crate::certify::{
    canonical_cmp, canonical_order, certify_nontrivial_local, equal_modulo_permutation,
    CertificationReport, Verdict,
};
use crate::dc::attraction_sets;
use crate::error::{Error, Result};
use crate::model::{dist, CentroidSystem, ClusterPartition, DataSet};
use crate::objective::{barycenter, objective_f_unchecked};

/// Default cap on the number of partitions the oracle will enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// `S(m, k)`, saturating at `u128::MAX`.
pub fn stirling2(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    // row[j] = S(i, j)
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=m {
        for j in (1..=k.min(i)).rev() {
            row[j] = (j as u128)
                .saturating_mul(row[j])
                .saturating_add(row[j - 1]);
        }
        row[0] = 0;
    }
    row[k]
}

/// Refuses when `S(m, k)` exceeds `budget`.
pub fn check_budget(m: usize, k: usize, budget: u64) -> Result<u128> {
    let count = stirling2(m, k);
    if count > budget as u128 {
        let count = if count == u128::MAX {
            format!(">= {count}")
        } else {
            count.to_string()
        };
        return Err(Error::BudgetExceeded {
            m,
            k,
            count,
            budget,
        });
    }
    Ok(count)
}

/// Partitions of `{0, ..., m-1}` into exactly `k` nonempty blocks.
///
/// Walks restricted growth strings in lexicographic order, so blocks are
/// ordered by their smallest element and each partition appears once.
#[derive(Debug, Clone)]
pub struct Partitions {
    labels: Vec<usize>,
    /// `prefix_max[i]` = max of `labels[..=i]`.
    prefix_max: Vec<usize>,
    k: usize,
    started: bool,
    done: bool,
}

impl Partitions {
    fn new(m: usize, k: usize) -> Self {
        let mut it = Self {
            labels: vec![0; m],
            prefix_max: vec![0; m],
            k,
            started: false,
            done: k == 0 || k > m,
        };
        if !it.done {
            it.fill_from(1);
        }
        it
    }

    /// Smallest valid completion of `labels[..start]`: zeros, then the block
    /// labels still missing, packed at the end.
    fn fill_from(&mut self, start: usize) {
        let m = self.labels.len();
        for i in start..m {
            let prev = self.prefix_max[i - 1];
            let missing = self.k - 1 - prev;
            let remaining = m - i;
            let label = if remaining <= missing { prev + 1 } else { 0 };
            self.labels[i] = label;
            self.prefix_max[i] = prev.max(label);
        }
    }

    fn advance(&mut self) -> bool {
        let m = self.labels.len();
        for i in (1..m).rev() {
            let prev = self.prefix_max[i - 1];
            let next = self.labels[i] + 1;
            if next > prev + 1 || next >= self.k {
                continue;
            }
            // Blocks still needed after position i must fit in the tail.
            let max_here = prev.max(next);
            if self.k - 1 - max_here > m - 1 - i {
                continue;
            }
            self.labels[i] = next;
            self.prefix_max[i] = max_here;
            self.fill_from(i + 1);
            return true;
        }
        false
    }

    fn current(&self) -> ClusterPartition {
        let mut sets = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            sets[l].push(i);
        }
        ClusterPartition::from_sorted_unchecked(sets)
    }
}

impl Iterator for Partitions {
    type Item = ClusterPartition;

    fn next(&mut self) -> Option<ClusterPartition> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current())
    }
}

/// Enumerates the `S(m, k)` partitions after checking the budget.
pub fn enumerate_partitions(m: usize, k: usize, budget: u64) -> Result<Partitions> {
    if k == 0 || k > m {
        return Err(Error::InvalidInput(format!(
            "partitions need 1 <= k <= m, got m = {m}, k = {k}"
        )));
    }
    check_budget(m, k, budget)?;
    Ok(Partitions::new(m, k))
}

/// `x_ω(a)`: slot `j` is the barycenter of block `j`.
pub fn candidate_from_partition(data: &DataSet, part: &ClusterPartition) -> Result<CentroidSystem> {
    let mut coords = Vec::with_capacity(part.k() * data.n());
    for set in part.sets() {
        if set.is_empty() {
            return Err(Error::InvalidPartition(
                "candidate systems need nonempty blocks".into(),
            ));
        }
        coords.extend(barycenter(data, set)?);
    }
    Ok(CentroidSystem::from_flat(coords, part.k(), data.n()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSolveResult {
    pub optimal_value: f64,
    /// Canonicalized and deduplicated modulo permutation.
    pub global_solutions: Vec<CentroidSystem>,
    pub candidates_evaluated: u64,
    /// Partition whose barycenters produced each solution, in the slot
    /// order of the canonicalized solution.
    pub partition_of_each: Vec<ClusterPartition>,
}

fn require_solvable(data: &DataSet, k: usize, budget: u64) -> Result<()> {
    if k == 0 || k > data.m() {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= m = {}, got {k}",
            data.m()
        )));
    }
    if let Some((first, second)) = data.duplicate_pair() {
        return Err(Error::DuplicatePoints { first, second });
    }
    check_budget(data.m(), k, budget)?;
    Ok(())
}

/// Optimal value and all global solutions by exhaustive enumeration.
pub fn global_solve(data: &DataSet, k: usize, budget: u64) -> Result<GlobalSolveResult> {
    require_solvable(data, k, budget)?;
    let tol = 1e-12 * data.scale() * data.scale();

    let mut scored: Vec<(f64, CentroidSystem, ClusterPartition)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut evaluated = 0u64;
    for part in Partitions::new(data.m(), k) {
        evaluated += 1;
        let x = candidate_from_partition(data, &part)?;
        let value = objective_f_unchecked(data, &x);
        if value <= best + tol {
            if value < best {
                best = value;
                scored.retain(|(v, ..)| *v <= best + tol);
            }
            scored.push((value, x, part));
        }
    }

    let threshold = data.tie_threshold();
    let mut solutions: Vec<(CentroidSystem, ClusterPartition)> = Vec::new();
    for (_, x, part) in scored {
        if solutions
            .iter()
            .any(|(y, _)| equal_modulo_permutation(&x, y, threshold))
        {
            continue;
        }
        let order = canonical_order(&x);
        let part = ClusterPartition::from_sorted_unchecked(
            order.iter().map(|&j| part.set(j).to_vec()).collect(),
        );
        solutions.push((x.permuted(&order), part));
    }
    solutions.sort_by(|a, b| canonical_cmp(&a.0, &b.0));
    let (global_solutions, partition_of_each) = solutions.into_iter().unzip();

    Ok(GlobalSolveResult {
        optimal_value: best,
        global_solutions,
        candidates_evaluated: evaluated,
        partition_of_each,
    })
}

/// A closed ball `B(a_p, radius)` of the exclusion region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionBall {
    pub point: usize,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Union of the balls `B(a_p, |a_p - x_q|)` over `p ∈ I(q)`, listed per
/// data point. An idle centroid keeps `x` locally optimal iff it lies
/// strictly outside all of them.
pub fn exclusion_region(data: &DataSet, x: &CentroidSystem) -> Result<Vec<ExclusionBall>> {
    data.check_dim(x)?;
    let sets = attraction_sets(data, x)?;
    let mut balls = Vec::new();
    for (q, set) in sets.iter().enumerate() {
        for &p in set {
            balls.push(ExclusionBall {
                point: p,
                center: data.point(p).to_vec(),
                radius: dist(data.point(p), x.centroid(q)),
            });
        }
    }
    balls.sort_by_key(|b| b.point);
    Ok(balls)
}

/// A family of nontrivial local solutions: a `core` system whose centroids
/// are all attractive, plus `free_slots` centroids placed anywhere strictly
/// outside the exclusion balls and pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSolutionFamily {
    pub core: CentroidSystem,
    pub free_slots: usize,
    pub exclusion_balls: Vec<ExclusionBall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreLocalSolution {
    pub centroids: CentroidSystem,
    pub partition: ClusterPartition,
    pub report: CertificationReport,
}

/// Every nontrivial local solution with `k` attractive centroids, found by
/// certifying each partition candidate. Canonicalized and deduplicated.
pub fn enumerate_core_local_solutions(
    data: &DataSet,
    k: usize,
    budget: u64,
) -> Result<Vec<CoreLocalSolution>> {
    require_solvable(data, k, budget)?;
    let threshold = data.tie_threshold();
    let mut found: Vec<CoreLocalSolution> = Vec::new();
    for part in Partitions::new(data.m(), k) {
        let x = candidate_from_partition(data, &part)?;
        let order = canonical_order(&x);
        let x = x.permuted(&order);
        let report = certify_nontrivial_local(data, &x)?;
        if report.verdict != Verdict::NontrivialLocal {
            continue;
        }
        if found
            .iter()
            .any(|s| equal_modulo_permutation(&s.centroids, &x, threshold))
        {
            continue;
        }
        let partition = ClusterPartition::from_sorted_unchecked(
            order.iter().map(|&j| part.set(j).to_vec()).collect(),
        );
        found.push(CoreLocalSolution {
            centroids: x,
            partition,
            report,
        });
    }
    found.sort_by(|a, b| canonical_cmp(&a.centroids, &b.centroids));
    Ok(found)
}

/// Families of nontrivial local solutions with `1..k` attractive centroids.
///
/// For `k' < k` attractive slots, the family is a core local solution of the
/// `k'`-clustering problem with `k - k'` idle centroids constrained to the
/// complement of its exclusion region.
pub fn local_solution_families(
    data: &DataSet,
    k: usize,
    budget: u64,
) -> Result<Vec<LocalSolutionFamily>> {
    require_solvable(data, k, budget)?;
    let mut families = Vec::new();
    for used in 1..k {
        for core in enumerate_core_local_solutions(data, used, budget)? {
            families.push(LocalSolutionFamily {
                exclusion_balls: exclusion_region(data, &core.centroids)?,
                core: core.centroids,
                free_slots: k - used,
            });
        }
    }
    Ok(families)
}
