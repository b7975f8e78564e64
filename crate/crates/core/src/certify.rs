//! Certification of nontrivial local solutions.
//!
//! A centroid system with pairwise distinct components is a local minimizer
//! of `f` exactly when
//!
//! 1. every data point has a unique nearest centroid (`|J_i(x)| = 1`),
//! 2. every attractive centroid is the barycenter of its attraction set, and
//! 3. every non-attractive centroid lies strictly outside each closed ball
//!    `B(a_p, |a_p - x_q|)` with `p ∈ I(q)`.
//!
//! The same predicate is used to accept (sufficiency) and to reject
//! (necessity). Systems with coinciding components are not decided.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dc::{attraction_sets, nearest_unchecked};
use crate::error::Result;
use crate::model::{dist, lex_cmp, CentroidSystem, DataSet};
use crate::objective::{barycenter, objective_f_unchecked};
use crate::oracle::{global_solve, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NontrivialLocal,
    Global,
    LocalNonGlobal,
    NotLocal,
    TrivialIndeterminate,
}

impl Verdict {
    /// True for every verdict that asserts local optimality.
    pub fn is_local(self) -> bool {
        matches!(
            self,
            Verdict::NontrivialLocal | Verdict::Global | Verdict::LocalNonGlobal
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::NontrivialLocal => "NontrivialLocal",
            Verdict::Global => "Global",
            Verdict::LocalNonGlobal => "LocalNonGlobal",
            Verdict::NotLocal => "NotLocal",
            Verdict::TrivialIndeterminate => "TrivialIndeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterResidual {
    pub slot: usize,
    pub residual: f64,
}

/// `|a_p - x_j| - |a_p - x_q|` for an empty-attraction slot `j` and `p ∈ I(q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionMargin {
    pub slot: usize,
    pub point: usize,
    pub owner: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub verdict: Verdict,
    pub objective: f64,
    pub c1_holds: bool,
    pub c1_witness: Option<(usize, usize)>,
    pub singleton_ji: bool,
    pub singleton_witness: Option<usize>,
    pub barycenter_ok: bool,
    pub barycenter_residuals: Vec<BarycenterResidual>,
    pub barycenter_witness: Option<usize>,
    pub exclusion_ok: bool,
    pub exclusion_margins: Vec<ExclusionMargin>,
    pub exclusion_witness: Option<ExclusionMargin>,
    pub attraction_sets: Vec<Vec<usize>>,
    /// Smallest gap among the strict inequalities of the certificate: the
    /// nearest vs. second-nearest distance of every point and the pairwise
    /// centroid distances. `None` when there are none (k = 1).
    pub slack: Option<f64>,
    pub optimal_value: Option<f64>,
    pub optimal_value_gap: Option<f64>,
    pub warnings: Vec<String>,
}

impl CertificationReport {
    /// Perturbation radius (sum norm on centroids) inside which the
    /// certificate's strict inequalities survive.
    pub fn safe_radius(&self) -> Option<f64> {
        self.slack.map(|s| 0.5 * s)
    }
}

/// Lowest-index pair of centroids closer than `eps_tie * scale`.
fn c1_violation(data: &DataSet, x: &CentroidSystem) -> Option<(usize, usize)> {
    let threshold = data.tie_threshold();
    for j1 in 0..x.k() {
        for j2 in j1 + 1..x.k() {
            if dist(x.centroid(j1), x.centroid(j2)) <= threshold {
                return Some((j1, j2));
            }
        }
    }
    None
}

/// Condition (C1): the components of `x` are pairwise distinct.
pub fn check_c1(data: &DataSet, x: &CentroidSystem) -> bool {
    c1_violation(data, x).is_none()
}

/// Checks the local-optimality characterization at `x`.
pub fn certify_nontrivial_local(data: &DataSet, x: &CentroidSystem) -> Result<CertificationReport> {
    data.check_dim(x)?;
    let tie = data.tie_threshold();
    let bary_tol = data.tolerances().eps_bary * data.scale();

    let c1_witness = c1_violation(data, x);
    let c1_holds = c1_witness.is_none();

    let singleton_witness = (0..data.m()).find(|&i| nearest_unchecked(data, x, i).len() > 1);
    let singleton_ji = singleton_witness.is_none();

    let sets = attraction_sets(data, x)?;

    let mut barycenter_residuals = Vec::new();
    for (j, set) in sets.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let b = barycenter(data, set)?;
        barycenter_residuals.push(BarycenterResidual {
            slot: j,
            residual: dist(&b, x.centroid(j)),
        });
    }
    let barycenter_witness = barycenter_residuals
        .iter()
        .find(|r| r.residual.is_nan() || r.residual > bary_tol)
        .map(|r| r.slot);
    let barycenter_ok = barycenter_witness.is_none();

    let mut exclusion_margins = Vec::new();
    for (j, set) in sets.iter().enumerate() {
        if !set.is_empty() {
            continue;
        }
        for (q, owned) in sets.iter().enumerate() {
            for &p in owned {
                let a = data.point(p);
                exclusion_margins.push(ExclusionMargin {
                    slot: j,
                    point: p,
                    owner: q,
                    margin: dist(a, x.centroid(j)) - dist(a, x.centroid(q)),
                });
            }
        }
    }
    let exclusion_witness = exclusion_margins
        .iter()
        .find(|e| e.margin.is_nan() || e.margin <= tie)
        .cloned();
    let exclusion_ok = exclusion_witness.is_none();

    let verdict = if !c1_holds {
        Verdict::TrivialIndeterminate
    } else if singleton_ji && barycenter_ok && exclusion_ok {
        Verdict::NontrivialLocal
    } else {
        Verdict::NotLocal
    };

    let mut warnings = Vec::new();
    if let Some((i1, i2)) = data.duplicate_pair() {
        warnings.push(format!(
            "data points {i1} and {i2} coincide; the structure results assume pairwise distinct data"
        ));
    }

    Ok(CertificationReport {
        verdict,
        objective: objective_f_unchecked(data, x),
        c1_holds,
        c1_witness,
        singleton_ji,
        singleton_witness,
        barycenter_ok,
        barycenter_residuals,
        barycenter_witness,
        exclusion_ok,
        exclusion_margins,
        exclusion_witness,
        attraction_sets: sets,
        slack: certificate_slack(data, x),
        optimal_value: None,
        optimal_value_gap: None,
        warnings,
    })
}

fn certificate_slack(data: &DataSet, x: &CentroidSystem) -> Option<f64> {
    let mut slack = f64::INFINITY;
    if x.k() > 1 {
        for a in data.points() {
            let mut d: Vec<f64> = x.centroids().map(|c| dist(a, c)).collect();
            d.sort_by(f64::total_cmp);
            slack = slack.min(d[1] - d[0]);
        }
        for j1 in 0..x.k() {
            for j2 in j1 + 1..x.k() {
                slack = slack.min(dist(x.centroid(j1), x.centroid(j2)));
            }
        }
    }
    slack.is_finite().then_some(slack)
}

/// Certifies `x` and, when `run_oracle` is set, compares `f(x)` with the
/// exact optimal value to separate global from local-nonglobal solutions.
///
/// If the oracle refuses (budget, duplicated data) the local verdict is kept
/// and the refusal is recorded in `warnings`.
pub fn classify(
    data: &DataSet,
    x: &CentroidSystem,
    run_oracle: bool,
) -> Result<CertificationReport> {
    classify_with_budget(data, x, run_oracle, DEFAULT_BUDGET)
}

pub fn classify_with_budget(
    data: &DataSet,
    x: &CentroidSystem,
    run_oracle: bool,
    budget: u64,
) -> Result<CertificationReport> {
    let mut report = certify_nontrivial_local(data, x)?;
    if !run_oracle {
        return Ok(report);
    }
    if x.k() > data.m() {
        report.warnings.push(format!(
            "oracle skipped: k = {} exceeds m = {}",
            x.k(),
            data.m()
        ));
        return Ok(report);
    }
    match global_solve(data, x.k(), budget) {
        Ok(global) => {
            let v = global.optimal_value;
            let gap = report.objective - v;
            report.optimal_value = Some(v);
            report.optimal_value_gap = Some(gap);
            if report.verdict == Verdict::NontrivialLocal {
                let tol = 1e-9 * data.scale() * data.scale();
                report.verdict = if gap <= tol {
                    Verdict::Global
                } else {
                    Verdict::LocalNonGlobal
                };
            }
        }
        Err(e) if e.is_refusal() => report.warnings.push(format!("oracle refused: {e}")),
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Slot order that sorts the centroids lexicographically.
pub fn canonical_order(x: &CentroidSystem) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.k()).collect();
    order.sort_by(|&p, &q| lex_cmp(x.centroid(p), x.centroid(q)).then(p.cmp(&q)));
    order
}

/// Representative of `x` modulo slot permutations.
pub fn canonicalize(x: &CentroidSystem) -> CentroidSystem {
    x.permuted(&canonical_order(x))
}

/// Canonical forms agree coordinate-wise within `threshold`.
pub fn equal_modulo_permutation(x: &CentroidSystem, y: &CentroidSystem, threshold: f64) -> bool {
    if x.k() != y.k() || x.n() != y.n() {
        return false;
    }
    canonicalize(x).max_abs_diff(&canonicalize(y)) <= threshold
}

pub(crate) fn canonical_cmp(x: &CentroidSystem, y: &CentroidSystem) -> Ordering {
    lex_cmp(x.coords(), y.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::objective_f;

    fn tri() -> DataSet {
        DataSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn sys(rows: &[[f64; 2]]) -> CentroidSystem {
        CentroidSystem::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    const THIRD: f64 = 1.0 / 3.0;

    #[test]
    fn c1_examples() {
        let data = tri();
        assert!(check_c1(&data, &sys(&[[0.0, 0.5], [1.0, 0.0]])));
        assert!(!check_c1(&data, &sys(&[[1.0, 1.0], [1.0, 1.0]])));
        let half = data.tie_threshold() / 2.0;
        assert!(!check_c1(&data, &sys(&[[0.0, 0.0], [0.0, half]])));
        let twice = data.tie_threshold() * 2.0;
        assert!(check_c1(&data, &sys(&[[0.0, 0.0], [0.0, twice]])));
    }

    #[test]
    fn local_nonglobal_system_certifies() {
        let r = certify_nontrivial_local(&tri(), &sys(&[[0.5, 0.5], [0.0, 0.0]])).unwrap();
        assert_eq!(r.verdict, Verdict::NontrivialLocal);
        assert_eq!(r.attraction_sets, vec![vec![1, 2], vec![0]]);
        assert!(r.exclusion_margins.is_empty());
        assert!(r.barycenter_residuals.iter().all(|b| b.residual < 1e-15));
    }

    #[test]
    fn tie_at_a_point_is_not_local() {
        let x = sys(&[[THIRD, THIRD], [1.0 + 5f64.sqrt() / 3.0, 0.0]]);
        let r = certify_nontrivial_local(&tri(), &x).unwrap();
        assert_eq!(r.verdict, Verdict::NotLocal);
        assert!(!r.singleton_ji);
        assert_eq!(r.singleton_witness, Some(1));
    }

    #[test]
    fn far_away_idle_centroid_is_local() {
        let r = certify_nontrivial_local(&tri(), &sys(&[[THIRD, THIRD], [5.0, 5.0]])).unwrap();
        assert_eq!(r.verdict, Verdict::NontrivialLocal);
        assert_eq!(r.exclusion_margins.len(), 3);
        assert!(r
            .exclusion_margins
            .iter()
            .all(|e| e.slot == 1 && e.owner == 0));
    }

    #[test]
    fn idle_centroid_inside_a_ball_is_not_local() {
        // Strictly inside B(a_1, |a_1 - x_1|): the idle centroid would attract a_1.
        let r = certify_nontrivial_local(&tri(), &sys(&[[THIRD, THIRD], [-0.1, -0.1]])).unwrap();
        assert_eq!(r.verdict, Verdict::NotLocal);
    }

    #[test]
    fn off_barycenter_is_not_local() {
        let r = certify_nontrivial_local(&tri(), &sys(&[[0.0, 0.6], [1.0, 0.0]])).unwrap();
        assert_eq!(r.verdict, Verdict::NotLocal);
        assert!(r.singleton_ji);
        assert_eq!(r.barycenter_witness, Some(0));
    }

    #[test]
    fn coinciding_components_are_indeterminate() {
        let r = certify_nontrivial_local(&tri(), &sys(&[[THIRD, THIRD], [THIRD, THIRD]])).unwrap();
        assert_eq!(r.verdict, Verdict::TrivialIndeterminate);
        assert_eq!(r.c1_witness, Some((0, 1)));
    }

    #[test]
    fn duplicated_data_is_flagged() {
        let data = DataSet::new(vec![vec![0.0], vec![0.0], vec![1.0]]).unwrap();
        let x = CentroidSystem::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let r = certify_nontrivial_local(&data, &x).unwrap();
        assert_eq!(r.verdict, Verdict::NontrivialLocal);
        assert_eq!(r.warnings.len(), 1);
        let r = classify(&data, &x, true).unwrap();
        assert_eq!(r.verdict, Verdict::NontrivialLocal);
        assert!(r.warnings.iter().any(|w| w.starts_with("oracle refused")));
    }

    #[test]
    fn classify_examples() {
        let data = tri();
        let r = classify(&data, &sys(&[[0.0, 0.5], [1.0, 0.0]]), true).unwrap();
        assert_eq!(r.verdict, Verdict::Global);

        let r = classify(&data, &sys(&[[0.5, 0.5], [0.0, 0.0]]), true).unwrap();
        assert_eq!(r.verdict, Verdict::LocalNonGlobal);
        assert!((r.optimal_value_gap.unwrap() - 1.0 / 6.0).abs() < 1e-9);

        let x = sys(&[[THIRD, THIRD], [1.0 + 5f64.sqrt() / 3.0, 0.0]]);
        assert_eq!(
            classify(&data, &x, true).unwrap().verdict,
            Verdict::NotLocal
        );
        assert_eq!(
            classify(&data, &x, false).unwrap().verdict,
            Verdict::NotLocal
        );
    }

    #[test]
    fn classify_over_budget_keeps_local_verdict() {
        let data = tri();
        let r = classify_with_budget(&data, &sys(&[[0.0, 0.5], [1.0, 0.0]]), true, 1).unwrap();
        assert_eq!(r.verdict, Verdict::NontrivialLocal);
        assert!(r.optimal_value.is_none());
        assert!(r.warnings.iter().any(|w| w.contains("budget")));
    }

    #[test]
    fn canonical_form() {
        let x = sys(&[[1.0, 0.0], [0.0, 0.5]]);
        let c = canonicalize(&x);
        assert_eq!(c, sys(&[[0.0, 0.5], [1.0, 0.0]]));
        assert_eq!(canonicalize(&c), c);
        assert_eq!(
            objective_f(&tri(), &x).unwrap(),
            objective_f(&tri(), &c).unwrap()
        );
        assert!(equal_modulo_permutation(&x, &c, 0.0));
        assert!(!equal_modulo_permutation(
            &x,
            &sys(&[[1.0, 0.0], [0.0, 0.6]]),
            1e-9
        ));
    }

    #[test]
    fn slack_bounds_the_sampling_radius() {
        let r = certify_nontrivial_local(&tri(), &sys(&[[0.0, 0.5], [1.0, 0.0]])).unwrap();
        // a_1 sits at 0.5 from x_1 and 1 from x_2; a_3 at 0.5 and sqrt(2).
        let slack = r.slack.unwrap();
        assert!((slack - 0.5).abs() < 1e-12);
        let single = certify_nontrivial_local(&tri(), &sys(&[[THIRD, THIRD]])).unwrap();
        assert_eq!(single.slack, None);
    }
}
