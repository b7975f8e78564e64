//! DC decomposition `f = f1 - f2`, nearest-centroid index sets and the
//! subdifferential test `∂f2(x) ⊆ ∂f1(x)`.
//!
//! `f1` is smooth, so the inclusion holds exactly when every `∂φ_i(x)` is a
//! singleton, where `φ_i(x) = max_j sum_{q != j} |a_i - x_q|^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist, sq_dist, CentroidSystem, DataSet};
use crate::objective::data_barycenter;

/// `f1(x) = (1/m) sum_i sum_j |a_i - x_j|^2`.
pub fn f1(data: &DataSet, x: &CentroidSystem) -> Result<f64> {
    data.check_dim(x)?;
    let total: f64 = data
        .points()
        .map(|a| x.centroids().map(|c| sq_dist(a, c)).sum::<f64>())
        .sum();
    Ok(total / data.m() as f64)
}

/// `f2(x) = (1/m) sum_i max_j sum_{q != j} |a_i - x_q|^2`; zero when `k = 1`.
pub fn f2(data: &DataSet, x: &CentroidSystem) -> Result<f64> {
    data.check_dim(x)?;
    let mut total = 0.0;
    for a in data.points() {
        let d: Vec<f64> = x.centroids().map(|c| sq_dist(a, c)).collect();
        let best = (0..d.len())
            .map(|j| {
                d.iter()
                    .enumerate()
                    .filter(|&(q, _)| q != j)
                    .map(|(_, v)| v)
                    .sum::<f64>()
            })
            .fold(0.0_f64, f64::max);
        total += best;
    }
    Ok(total / data.m() as f64)
}

/// `∇f1(x) = 2 (x_1 - a_0, ..., x_k - a_0)`, flattened slot-major.
pub fn grad_f1(data: &DataSet, x: &CentroidSystem) -> Result<Vec<f64>> {
    data.check_dim(x)?;
    let a0 = data_barycenter(data);
    Ok(x.centroids()
        .flat_map(|c| c.iter().zip(&a0).map(|(p, q)| 2.0 * (p - q)))
        .collect())
}

/// `J_i(x)`: slots whose distance to `a_i` is within `eps_tie * scale` of
/// the minimum. Never empty; sorted ascending.
pub fn nearest_index_set(data: &DataSet, x: &CentroidSystem, i: usize) -> Result<Vec<usize>> {
    data.check_dim(x)?;
    data.check_index(i)?;
    Ok(nearest_unchecked(data, x, i))
}

pub(crate) fn nearest_unchecked(data: &DataSet, x: &CentroidSystem, i: usize) -> Vec<usize> {
    let a = data.point(i);
    let d: Vec<f64> = x.centroids().map(|c| dist(a, c)).collect();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = min + data.tie_threshold();
    d.iter()
        .enumerate()
        .filter(|&(_, &v)| v <= cutoff)
        .map(|(j, _)| j)
        .collect()
}

/// Attraction set `I(j) = { i : j ∈ J_i(x) }`; may be empty.
pub fn attraction_set(data: &DataSet, x: &CentroidSystem, j: usize) -> Result<Vec<usize>> {
    data.check_dim(x)?;
    if j >= x.k() {
        return Err(Error::IndexOutOfRange {
            index: j,
            size: x.k(),
        });
    }
    Ok((0..data.m())
        .filter(|&i| nearest_unchecked(data, x, i).contains(&j))
        .collect())
}

/// All attraction sets at once. Sets overlap exactly at tied points.
pub fn attraction_sets(data: &DataSet, x: &CentroidSystem) -> Result<Vec<Vec<usize>>> {
    data.check_dim(x)?;
    let mut sets = vec![Vec::new(); x.k()];
    for i in 0..data.m() {
        for j in nearest_unchecked(data, x, i) {
            sets[j].push(i);
        }
    }
    Ok(sets)
}

/// Generators of `∂φ_i(x)`: one vector `2(x̃^j - ã^{i,j})` in `R^{n x k}` per
/// `j ∈ J_i(x)`. Slot `j` of the generator is zero, every other slot `q`
/// holds `2(x_q - a_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffGenerators {
    pub point: usize,
    pub nearest: Vec<usize>,
    pub generators: Vec<Vec<f64>>,
}

impl SubdiffGenerators {
    /// Pairwise sum-norm comparison of the generators against `threshold`.
    pub fn is_singleton(&self, n: usize, threshold: f64) -> bool {
        let g = &self.generators;
        (0..g.len()).all(|p| (p + 1..g.len()).all(|q| sum_norm(&g[p], &g[q], n) <= threshold))
    }
}

fn sum_norm(u: &[f64], v: &[f64], n: usize) -> f64 {
    u.chunks_exact(n)
        .zip(v.chunks_exact(n))
        .map(|(a, b)| dist(a, b))
        .sum()
}

pub fn subdiff_phi(data: &DataSet, x: &CentroidSystem, i: usize) -> Result<SubdiffGenerators> {
    data.check_dim(x)?;
    data.check_index(i)?;
    Ok(subdiff_unchecked(data, x, i))
}

fn subdiff_unchecked(data: &DataSet, x: &CentroidSystem, i: usize) -> SubdiffGenerators {
    let a = data.point(i);
    let nearest = nearest_unchecked(data, x, i);
    let generators = nearest
        .iter()
        .map(|&j| {
            x.centroids()
                .enumerate()
                .flat_map(|(q, c)| {
                    c.iter()
                        .zip(a)
                        .map(move |(cv, av)| if q == j { 0.0 } else { 2.0 * (cv - av) })
                })
                .collect()
        })
        .collect();
    SubdiffGenerators {
        point: i,
        nearest,
        generators,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcCheck {
    pub holds: bool,
    /// Lowest data index whose `∂φ_i(x)` is not a singleton.
    pub witness: Option<usize>,
}

/// Necessary DC optimality condition `∂f2(x) ⊆ ∂f1(x)`.
pub fn dc_optimality_check(data: &DataSet, x: &CentroidSystem) -> Result<DcCheck> {
    data.check_dim(x)?;
    let threshold = data.tie_threshold();
    let witness =
        (0..data.m()).find(|&i| !subdiff_unchecked(data, x, i).is_singleton(x.n(), threshold));
    Ok(DcCheck {
        holds: witness.is_none(),
        witness,
    })
}
