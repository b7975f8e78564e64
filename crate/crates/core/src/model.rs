//! Domain types: data sets, centroid systems, assignments and partitions.
//!
//! Points and centroids are stored row-major in flat buffers. All indices in
//! the public API are zero-based.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPS_TIE: f64 = 1e-9;
pub const DEFAULT_EPS_BARY: f64 = 1e-9;

/// Relative tolerances. Absolute thresholds are `eps * scale` with
/// `scale = 1 + max_i |a_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Distance ties and vector equality.
    pub eps_tie: f64,
    /// Barycenter residuals at attractive centroids.
    pub eps_bary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_tie: DEFAULT_EPS_TIE,
            eps_bary: DEFAULT_EPS_BARY,
        }
    }
}

/// A finite set of `m` points in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    coords: Vec<f64>,
    m: usize,
    n: usize,
    scale: f64,
    tol: Tolerances,
    duplicate: Option<(usize, usize)>,
}

impl DataSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerances(points, Tolerances::default())
    }

    pub fn with_tolerances(points: Vec<Vec<f64>>, tol: Tolerances) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::InvalidInput("data set has no points".into()));
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::InvalidInput("points have no coordinates".into()));
        }
        if !(tol.eps_tie >= 0.0 && tol.eps_bary >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be nonnegative".into()));
        }
        let mut coords = Vec::with_capacity(m * n);
        for (i, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(Error::Parse {
                    row: i,
                    reason: format!("expected {n} coordinates, found {}", p.len()),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse {
                    row: i,
                    reason: "non-finite coordinate".into(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self::from_flat(coords, m, n, tol))
    }

    fn from_flat(coords: Vec<f64>, m: usize, n: usize, tol: Tolerances) -> Self {
        let scale = 1.0 + coords.chunks_exact(n).map(norm).fold(0.0_f64, f64::max);
        let mut data = Self {
            coords,
            m,
            n,
            scale,
            tol,
            duplicate: None,
        };
        let threshold = tol.eps_tie * scale;
        'outer: for i in 0..m {
            for i2 in i + 1..m {
                if dist(data.point(i), data.point(i2)) <= threshold {
                    data.duplicate = Some((i, i2));
                    break 'outer;
                }
            }
        }
        data
    }

    /// Same tolerances, new coordinates (used by perturbation).
    pub(crate) fn with_coords(&self, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), self.m * self.n);
        Self::from_flat(coords, self.m, self.n, self.tol)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// `1 + max_i |a_i|`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Absolute tie threshold `eps_tie * scale`.
    pub fn tie_threshold(&self) -> f64 {
        self.tol.eps_tie * self.scale
    }

    pub fn pairwise_distinct(&self) -> bool {
        self.duplicate.is_none()
    }

    /// First pair of coinciding points, if any.
    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        self.duplicate
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.m {
            for i2 in i + 1..self.m {
                best = best.min(dist(self.point(i), self.point(i2)));
            }
        }
        best
    }

    /// Sum norm `sum_i |a_i - b_i|` on `R^{n x m}`.
    pub fn distance_to(&self, other: &DataSet) -> Result<f64> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.m * self.n,
                found: other.m * other.n,
            });
        }
        Ok(self
            .points()
            .zip(other.points())
            .map(|(a, b)| dist(a, b))
            .sum())
    }

    /// Multiply every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        self.with_coords(self.coords.iter().map(|v| v * c).collect())
    }

    pub(crate) fn check_dim(&self, x: &CentroidSystem) -> Result<()> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.n(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.m {
            return Err(Error::IndexOutOfRange {
                index: i,
                size: self.m,
            });
        }
        Ok(())
    }
}

/// A candidate solution `x = (x^1, ..., x^k)`, each `x^j` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct CentroidSystem {
    coords: Vec<f64>,
    k: usize,
    n: usize,
}

impl CentroidSystem {
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self> {
        let k = centroids.len();
        if k == 0 {
            return Err(Error::InvalidInput("centroid system is empty".into()));
        }
        let n = centroids[0].len();
        if n == 0 {
            return Err(Error::InvalidInput("centroids have no coordinates".into()));
        }
        let mut coords = Vec::with_capacity(k * n);
        for c in &centroids {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite centroid coordinate".into()));
            }
            coords.extend_from_slice(c);
        }
        Ok(Self { coords, k, n })
    }

    pub(crate) fn from_flat(coords: Vec<f64>, k: usize, n: usize) -> Self {
        debug_assert_eq!(coords.len(), k * n);
        Self { coords, k, n }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.coords[j * self.n..(j + 1) * self.n]
    }

    pub fn centroid_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.coords[j * self.n..(j + 1) * self.n]
    }

    pub fn centroids(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.centroids().map(<[f64]>::to_vec).collect()
    }

    /// Slots reordered so that slot `j` of the result is slot `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &j in order {
            coords.extend_from_slice(self.centroid(j));
        }
        Self::from_flat(coords, self.k, self.n)
    }

    /// Sum norm `sum_j |x^j - y^j|` on `R^{n x k}`, slot by slot.
    pub fn sum_norm_distance(&self, other: &CentroidSystem) -> f64 {
        self.centroids()
            .zip(other.centroids())
            .map(|(a, b)| dist(a, b))
            .sum()
    }

    /// Largest coordinate-wise deviation.
    pub fn max_abs_diff(&self, other: &CentroidSystem) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<CentroidSystem> for Vec<Vec<f64>> {
    fn from(x: CentroidSystem) -> Self {
        x.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CentroidSystem {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        CentroidSystem::new(rows)
    }
}

/// The `m x k` incident matrix of the mixed-integer formulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    alpha: Vec<u8>,
    m: usize,
    k: usize,
}

impl Assignment {
    /// Rows must hold exactly one `1` and otherwise `0`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidInput("assignment has no rows".into()));
        }
        let k = rows[0].len();
        let mut alpha = Vec::with_capacity(m * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidAssignment {
                    row: i,
                    reason: format!("has {} entries, expected {k}", row.len()),
                });
            }
            let mut ones = 0;
            for &v in row {
                if v == 1.0 {
                    ones += 1;
                    alpha.push(1);
                } else if v == 0.0 {
                    alpha.push(0);
                } else {
                    return Err(Error::InvalidAssignment {
                        row: i,
                        reason: format!("has non-binary entry {v}"),
                    });
                }
            }
            if ones != 1 {
                return Err(Error::InvalidAssignment {
                    row: i,
                    reason: format!("sums to {ones}, expected 1"),
                });
            }
        }
        Ok(Self { alpha, m, k })
    }

    /// Assignment sending point `i` to cluster `labels[i]`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        let m = labels.len();
        let mut alpha = vec![0u8; m * k];
        for (i, &j) in labels.iter().enumerate() {
            if j >= k {
                return Err(Error::InvalidAssignment {
                    row: i,
                    reason: format!("label {j} out of range for k = {k}"),
                });
            }
            alpha[i * k + j] = 1;
        }
        Ok(Self { alpha, m, k })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.alpha[i * self.k + j]
    }

    /// The unique cluster of point `i`.
    pub fn label(&self, i: usize) -> usize {
        self.alpha[i * self.k..(i + 1) * self.k]
            .iter()
            .position(|&v| v == 1)
            .expect("validated row")
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.alpha
            .chunks_exact(self.k)
            .map(<[u8]>::to_vec)
            .collect()
    }
}

/// Per-slot index sets `I(j)`. Sets are sorted; any of them may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterPartition {
    sets: Vec<Vec<usize>>,
}

impl ClusterPartition {
    /// Sorts each set; rejects overlapping sets.
    pub fn new(mut sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for set in &mut sets {
            set.sort_unstable();
            for &i in set.iter() {
                if !seen.insert(i) {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} appears in more than one set"
                    )));
                }
            }
        }
        Ok(Self { sets })
    }

    pub(crate) fn from_sorted_unchecked(sets: Vec<Vec<usize>>) -> Self {
        Self { sets }
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, j: usize) -> &[usize] {
        &self.sets[j]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn into_sets(self) -> Vec<Vec<usize>> {
        self.sets
    }

    /// Disjoint sets whose union is `{0, ..., m-1}`.
    pub fn covers(&self, m: usize) -> bool {
        let mut hit = vec![false; m];
        for &i in self.sets.iter().flatten() {
            if i >= m || hit[i] {
                return false;
            }
            hit[i] = true;
        }
        hit.into_iter().all(|h| h)
    }

    /// A partition in the strict sense: covering, disjoint, all sets nonempty.
    pub fn is_full_partition(&self, m: usize) -> bool {
        self.covers(m) && self.sets.iter().all(|s| !s.is_empty())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Lexicographic order on coordinate vectors.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}
