//! The clustering objective in its two formulations.

use crate::error::{Error, Result};
use crate::model::{sq_dist, Assignment, CentroidSystem, DataSet};

/// `f(x) = (1/m) sum_i min_j |a_i - x_j|^2`.
pub fn objective_f(data: &DataSet, x: &CentroidSystem) -> Result<f64> {
    data.check_dim(x)?;
    Ok(objective_f_unchecked(data, x))
}

pub(crate) fn objective_f_unchecked(data: &DataSet, x: &CentroidSystem) -> f64 {
    let total: f64 = data
        .points()
        .map(|a| {
            x.centroids()
                .map(|c| sq_dist(a, c))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / data.m() as f64
}

/// `psi(x, alpha) = (1/m) sum_i sum_j alpha_ij |a_i - x_j|^2`.
pub fn objective_psi(data: &DataSet, x: &CentroidSystem, alpha: &Assignment) -> Result<f64> {
    data.check_dim(x)?;
    if alpha.m() != data.m() || alpha.k() != x.k() {
        return Err(Error::InvalidInput(format!(
            "assignment is {}x{}, expected {}x{}",
            alpha.m(),
            alpha.k(),
            data.m(),
            x.k()
        )));
    }
    let total: f64 = data
        .points()
        .enumerate()
        .map(|(i, a)| sq_dist(a, x.centroid(alpha.label(i))))
        .sum();
    Ok(total / data.m() as f64)
}

/// Arithmetic mean of the points indexed by `idx`.
pub fn barycenter(data: &DataSet, idx: &[usize]) -> Result<Vec<f64>> {
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let mut sum = vec![0.0; data.n()];
    for &i in idx {
        data.check_index(i)?;
        for (s, c) in sum.iter_mut().zip(data.point(i)) {
            *s += c;
        }
    }
    let count = idx.len() as f64;
    sum.iter_mut().for_each(|s| *s /= count);
    Ok(sum)
}

/// Barycenter `a^0` of the whole data set.
pub fn data_barycenter(data: &DataSet) -> Vec<f64> {
    let all: Vec<usize> = (0..data.m()).collect();
    barycenter(data, &all).expect("data set is nonempty")
}
