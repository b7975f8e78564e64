//! Natural clustering and the k-means iteration.
//!
//! Ties go to the lowest centroid index: cluster `A^1` takes every point
//! attracted by `x^1`, `A^2` takes what `x^2` attracts among the rest, and
//! so on. Centroids whose cluster comes out empty are left where they are.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dc::nearest_unchecked;
use crate::error::{Error, Result};
use crate::model::{dist, Assignment, CentroidSystem, ClusterPartition, DataSet};
use crate::objective::{barycenter, objective_f_unchecked};

pub const DEFAULT_MAX_ITER: usize = 1000;

/// Each point goes to the lowest-index centroid among its nearest ones.
pub fn natural_clustering(data: &DataSet, x: &CentroidSystem) -> Result<ClusterPartition> {
    data.check_dim(x)?;
    Ok(natural_unchecked(data, x))
}

fn natural_unchecked(data: &DataSet, x: &CentroidSystem) -> ClusterPartition {
    let mut sets = vec![Vec::new(); x.k()];
    for i in 0..data.m() {
        sets[nearest_unchecked(data, x, i)[0]].push(i);
    }
    ClusterPartition::from_sorted_unchecked(sets)
}

/// Incident matrix with `alpha_ij = 1` iff `i ∈ I(j)`.
pub fn assignment_from_partition(
    part: &ClusterPartition,
    m: usize,
    k: usize,
) -> Result<Assignment> {
    if part.k() != k {
        return Err(Error::InvalidPartition(format!(
            "partition has {} sets, expected {k}",
            part.k()
        )));
    }
    if !part.covers(m) {
        return Err(Error::InvalidPartition(format!(
            "sets do not cover {{0, ..., {}}} disjointly",
            m.saturating_sub(1)
        )));
    }
    let mut labels = vec![0; m];
    for (j, set) in part.sets().iter().enumerate() {
        for &i in set {
            labels[i] = j;
        }
    }
    Assignment::from_labels(&labels, k)
}

/// One pass of the iteration: the clusters formed from the incoming
/// centroids and the centroids after the barycenter update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub centroids: CentroidSystem,
    pub clusters: ClusterPartition,
    pub objective: f64,
    pub max_centroid_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations_used: usize,
}

/// Runs k-means from `init` until every updated centroid moves by at most
/// `epsilon`, or `max_iter` passes have been made.
pub fn kmeans(
    data: &DataSet,
    init: &CentroidSystem,
    epsilon: f64,
    max_iter: usize,
) -> Result<(CentroidSystem, KMeansTrace)> {
    data.check_dim(init)?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be positive".into()));
    }
    if init.k() > data.m() {
        return Err(Error::InvalidInput(format!(
            "k = {} exceeds the number of points m = {}",
            init.k(),
            data.m()
        )));
    }

    let mut x = init.clone();
    let mut iterations = Vec::new();
    let mut converged = false;
    while iterations.len() < max_iter {
        let clusters = natural_unchecked(data, &x);
        let mut shift = 0.0_f64;
        let mut next = x.clone();
        for (j, set) in clusters.sets().iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let b = barycenter(data, set)?;
            shift = shift.max(dist(&b, x.centroid(j)));
            next.centroid_mut(j).copy_from_slice(&b);
        }
        x = next;
        iterations.push(IterationRecord {
            objective: objective_f_unchecked(data, &x),
            centroids: x.clone(),
            clusters,
            max_centroid_shift: shift,
        });
        if shift <= epsilon {
            converged = true;
            break;
        }
    }
    let iterations_used = iterations.len();
    Ok((
        x,
        KMeansTrace {
            iterations,
            converged,
            iterations_used,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// The first `k` data points.
    FirstK,
    /// `k` distinct data points drawn without replacement.
    RandomPoints {
        seed: u64,
    },
    Explicit(CentroidSystem),
}

pub fn initial_centroids(
    data: &DataSet,
    k: usize,
    strategy: &InitStrategy,
) -> Result<CentroidSystem> {
    if k == 0 || k > data.m() {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= m = {}, got {k}",
            data.m()
        )));
    }
    match strategy {
        InitStrategy::FirstK => Ok(pick(data, 0..k)),
        InitStrategy::RandomPoints { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(pick(data, sample(&mut rng, data.m(), k).into_iter()))
        }
        InitStrategy::Explicit(x) => {
            data.check_dim(x)?;
            if x.k() != k {
                return Err(Error::InvalidInput(format!(
                    "explicit system has {} centroids, expected k = {k}",
                    x.k()
                )));
            }
            Ok(x.clone())
        }
    }
}

fn pick(data: &DataSet, idx: impl Iterator<Item = usize>) -> CentroidSystem {
    let coords: Vec<f64> = idx.flat_map(|i| data.point(i).to_vec()).collect();
    let k = coords.len() / data.n();
    CentroidSystem::from_flat(coords, k, data.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{objective_f, objective_psi};

    fn tri() -> DataSet {
        DataSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn sys(rows: &[[f64; 2]]) -> CentroidSystem {
        CentroidSystem::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn natural_clustering_examples() {
        let data = tri();
        let p = natural_clustering(&data, &sys(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(p.sets(), &[vec![0, 2], vec![1]]);
        let p = natural_clustering(&data, &sys(&[[0.25, 0.75], [2.0, 3.0]])).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1, 2], vec![]]);
        // (0.5, 0.5) and (-0.5, -0.5) are equidistant from the origin.
        let p = natural_clustering(&data, &sys(&[[0.5, 0.5], [-0.5, -0.5]])).unwrap();
        assert_eq!(p.sets(), &[vec![0, 1, 2], vec![]]);
    }

    #[test]
    fn assignment_from_partition_examples() {
        let part = ClusterPartition::new(vec![vec![0, 2], vec![1]]).unwrap();
        let a = assignment_from_partition(&part, 3, 2).unwrap();
        assert_eq!(a.rows(), vec![vec![1, 0], vec![0, 1], vec![1, 0]]);

        let part = ClusterPartition::new(vec![vec![0, 1, 2]]).unwrap();
        let a = assignment_from_partition(&part, 3, 1).unwrap();
        assert_eq!(a.rows(), vec![vec![1], vec![1], vec![1]]);

        let part = ClusterPartition::new(vec![vec![0], vec![1]]).unwrap();
        assert!(assignment_from_partition(&part, 3, 2).is_err());
    }

    #[test]
    fn natural_assignment_recovers_f() {
        let data = tri();
        let x = sys(&[[0.1, 0.7], [0.9, -0.2]]);
        let part = natural_clustering(&data, &x).unwrap();
        let alpha = assignment_from_partition(&part, 3, 2).unwrap();
        let psi = objective_psi(&data, &x, &alpha).unwrap();
        assert!((psi - objective_f(&data, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn kmeans_run_a() {
        let (x, trace) = kmeans(&tri(), &sys(&[[0.0, 0.0], [1.0, 0.0]]), 0.0, 1000).unwrap();
        assert_eq!(x, sys(&[[0.0, 0.5], [1.0, 0.0]]));
        assert!(trace.converged);
        assert_eq!(trace.iterations_used, 2);
        assert!((trace.iterations.last().unwrap().objective - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kmeans_keeps_centroids_of_empty_clusters() {
        let (x, trace) = kmeans(&tri(), &sys(&[[0.25, 0.75], [2.0, 3.0]]), 0.0, 1000).unwrap();
        assert_eq!(x.centroid(1), &[2.0, 3.0]);
        assert!((x.centroid(0)[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(trace.converged);
        assert!((objective_f(&tri(), &x).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn kmeans_fixed_point_in_one_pass() {
        let init = sys(&[[0.0, 0.0], [0.5, 0.5]]);
        let (x, trace) = kmeans(&tri(), &init, 0.0, 1000).unwrap();
        assert_eq!(x, init);
        assert_eq!(trace.iterations_used, 1);
    }

    #[test]
    fn kmeans_tied_point_goes_to_lowest_index() {
        let init = sys(&[[1.0 / 3.0, 1.0 / 3.0], [1.0 + 5f64.sqrt() / 3.0, 0.0]]);
        let (x, trace) = kmeans(&tri(), &init, 0.0, 1000).unwrap();
        assert_eq!(x, init);
        assert_eq!(
            trace.iterations[0].clusters.sets(),
            &[vec![0, 1, 2], vec![]]
        );
        assert!((trace.iterations[0].objective - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn kmeans_reports_non_convergence() {
        let data = DataSet::new((0..20).map(|i| vec![(i * i) as f64, i as f64]).collect()).unwrap();
        let init = initial_centroids(&data, 3, &InitStrategy::FirstK).unwrap();
        let (_, trace) = kmeans(&data, &init, 0.0, 1).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations_used, 1);
        assert!(kmeans(&data, &init, -1.0, 10).is_err());
        assert!(kmeans(&data, &init, 0.0, 0).is_err());
    }

    #[test]
    fn init_strategies() {
        let data = tri();
        let x = initial_centroids(&data, 2, &InitStrategy::FirstK).unwrap();
        assert_eq!(x, sys(&[[0.0, 0.0], [1.0, 0.0]]));

        let a = initial_centroids(&data, 2, &InitStrategy::RandomPoints { seed: 7 }).unwrap();
        let b = initial_centroids(&data, 2, &InitStrategy::RandomPoints { seed: 7 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.centroid(0), a.centroid(1));

        let e = sys(&[[9.0, 9.0], [8.0, 8.0]]);
        assert_eq!(
            initial_centroids(&data, 2, &InitStrategy::Explicit(e.clone())).unwrap(),
            e
        );
        assert!(initial_centroids(&data, 4, &InitStrategy::FirstK).is_err());
        assert!(initial_centroids(&data, 3, &InitStrategy::Explicit(e)).is_err());
    }
}
