//! Minimum sum-of-squares clustering.
//!
//! Exact k-means with lowest-index tie breaking, certification of nontrivial
//! local solutions, exact global solving by partition enumeration, the DC
//! optimality check, and empirical stability probes.
//!
//! Indices of data points and centroid slots are zero-based throughout.

pub mod certify;
pub mod cli;
pub mod clustering;
pub mod dc;
pub mod error;
pub mod io;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod stability;

pub use certify::{certify_nontrivial_local, classify, CertificationReport, Verdict};
pub use clustering::{kmeans, natural_clustering, InitStrategy, KMeansTrace};
pub use error::{Error, Result};
pub use model::{Assignment, CentroidSystem, ClusterPartition, DataSet, Tolerances};
pub use objective::{barycenter, objective_f, objective_psi};
pub use oracle::{global_solve, GlobalSolveResult};
