//! Command-line surface.
//!
//! Exit statuses: 0 success, 2 input error, 3 refusal (enumeration budget,
//! duplicated data, perturbation or certification guards).

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{canonical_order, canonicalize, classify_with_budget};
use crate::clustering::{
    initial_centroids, kmeans, natural_clustering, InitStrategy, DEFAULT_MAX_ITER,
};
use crate::dc::{dc_optimality_check, f1, f2, subdiff_phi};
use crate::error::{Error, Result};
use crate::io::{read_dataset, render_report};
use crate::model::{
    CentroidSystem, ClusterPartition, DataSet, Tolerances, DEFAULT_EPS_BARY, DEFAULT_EPS_TIE,
};
use crate::objective::objective_f;
use crate::oracle::{
    enumerate_core_local_solutions, global_solve, local_solution_families, DEFAULT_BUDGET,
};
use crate::stability::{
    default_delta, probe_aubin_local, probe_global_upper_lipschitz, probe_value_lipschitz,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Kmeans,
    Certify,
    Global,
    DcCheck,
    LocalEnum,
    Stability,
}

impl Subcommand {
    fn name(self) -> &'static str {
        match self {
            Subcommand::Kmeans => "kmeans",
            Subcommand::Certify => "certify",
            Subcommand::Global => "global",
            Subcommand::DcCheck => "dc-check",
            Subcommand::LocalEnum => "local-enum",
            Subcommand::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    FirstK,
    RandomPoints,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeChoice {
    Value,
    Upper,
    Aubin,
    All,
}

/// Minimum sum-of-squares clustering: k-means, certification, exact global
/// solving and stability probes.
#[derive(Debug, Clone, Parser)]
#[command(name = "mssc", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub subcommand: Subcommand,

    /// CSV file with one point per row.
    #[arg(long = "input")]
    pub input_path: PathBuf,

    /// Number of centroids; inferred from --centroids when omitted.
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,

    /// Defaults to `explicit` when --centroids is given, else `first-k`.
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,

    /// Centroid system, e.g. "0,0.5;1,0".
    #[arg(long = "centroids", allow_hyphen_values = true)]
    pub explicit_centroids: Option<String>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Perturbation radius; defaults to 0.01 times the smallest distance
    /// between data points.
    #[arg(long)]
    pub delta: Option<f64>,

    #[arg(long, default_value_t = 200)]
    pub trials: usize,

    #[arg(long, default_value_t = DEFAULT_EPS_TIE)]
    pub eps_tie: f64,

    #[arg(long, default_value_t = DEFAULT_EPS_BARY)]
    pub eps_bary: f64,

    /// Write the report here instead of standard output.
    #[arg(long = "output")]
    pub output_path: Option<PathBuf>,

    /// Maximum number of partitions the exact solver may enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,

    #[arg(long, value_enum, default_value_t = ProbeChoice::All)]
    pub probe: ProbeChoice,

    /// Neighborhood radius around the reference system for the Aubin probe.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,

    /// Skip the exact solver when certifying.
    #[arg(long)]
    pub no_oracle: bool,

    /// Also list families with idle centroids.
    #[arg(long)]
    pub families: bool,
}

/// Parses "x1,y1;x2,y2;..." into a centroid system.
pub fn parse_centroids(text: &str) -> Result<CentroidSystem> {
    let rows = text
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidInput(format!("bad centroid coordinate {v:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    CentroidSystem::new(rows)
}

impl RunConfig {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            eps_tie: self.eps_tie,
            eps_bary: self.eps_bary,
        }
    }

    fn centroids(&self) -> Result<Option<CentroidSystem>> {
        let Some(text) = &self.explicit_centroids else {
            return Ok(None);
        };
        let x = parse_centroids(text)?;
        if let Some(k) = self.k {
            if k != x.k() {
                return Err(Error::InvalidInput(format!(
                    "--k {k} disagrees with {} centroids given",
                    x.k()
                )));
            }
        }
        Ok(Some(x))
    }

    fn required_centroids(&self) -> Result<CentroidSystem> {
        self.centroids()?.ok_or_else(|| {
            Error::InvalidInput(format!("{} needs --centroids", self.subcommand.name()))
        })
    }

    fn required_k(&self) -> Result<usize> {
        match (self.k, self.centroids()?) {
            (Some(k), _) => Ok(k),
            (None, Some(x)) => Ok(x.k()),
            (None, None) => Err(Error::InvalidInput(format!(
                "{} needs --k",
                self.subcommand.name()
            ))),
        }
    }
}

/// Runs the configured command and returns the rendered JSON report.
pub fn execute(config: &RunConfig) -> Result<String> {
    let data = read_dataset(&config.input_path, config.tolerances())?;
    let name = config.subcommand.name();
    match config.subcommand {
        Subcommand::Kmeans => render_report(name, &run_kmeans(config, &data)?),
        Subcommand::Certify => {
            let x = canonicalize(&config.required_centroids()?);
            let report = classify_with_budget(&data, &x, !config.no_oracle, config.budget)?;
            render_report(name, &json!({ "centroids": x, "certification": report }))
        }
        Subcommand::Global => render_report(
            name,
            &global_solve(&data, config.required_k()?, config.budget)?,
        ),
        Subcommand::DcCheck => render_report(name, &run_dc_check(config, &data)?),
        Subcommand::LocalEnum => render_report(name, &run_local_enum(config, &data)?),
        Subcommand::Stability => render_report(name, &run_stability(config, &data)?),
    }
}

#[derive(Serialize)]
struct KMeansOutput {
    initial_centroids: CentroidSystem,
    final_centroids: CentroidSystem,
    final_partition: ClusterPartition,
    objective: f64,
    converged: bool,
    iterations_used: usize,
    trace: Vec<Value>,
}

fn run_kmeans(config: &RunConfig, data: &DataSet) -> Result<KMeansOutput> {
    let k = config.required_k()?;
    let explicit = config.centroids()?;
    let init_kind = config.init.unwrap_or(if explicit.is_some() {
        InitKind::Explicit
    } else {
        InitKind::FirstK
    });
    let strategy = match init_kind {
        InitKind::FirstK => InitStrategy::FirstK,
        InitKind::RandomPoints => InitStrategy::RandomPoints { seed: config.seed },
        InitKind::Explicit => InitStrategy::Explicit(
            explicit
                .ok_or_else(|| Error::InvalidInput("--init explicit needs --centroids".into()))?,
        ),
    };
    let init = initial_centroids(data, k, &strategy)?;
    let (x, trace) = kmeans(data, &init, config.epsilon, config.max_iter)?;

    // Every system in the output uses the slot order that canonicalizes the
    // final centroids, so slots can be followed through the trace.
    let order = canonical_order(&x);
    let relabel = |p: &ClusterPartition| {
        ClusterPartition::from_sorted_unchecked(order.iter().map(|&j| p.set(j).to_vec()).collect())
    };
    let final_x = x.permuted(&order);
    let trace_out = trace
        .iterations
        .iter()
        .map(|it| {
            json!({
                "centroids": it.centroids.permuted(&order),
                "clusters": relabel(&it.clusters),
                "objective": it.objective,
                "max_centroid_shift": it.max_centroid_shift,
            })
        })
        .collect();
    Ok(KMeansOutput {
        initial_centroids: init.permuted(&order),
        final_partition: natural_clustering(data, &final_x)?,
        objective: objective_f(data, &final_x)?,
        final_centroids: final_x,
        converged: trace.converged,
        iterations_used: trace.iterations_used,
        trace: trace_out,
    })
}

fn run_dc_check(config: &RunConfig, data: &DataSet) -> Result<Value> {
    let x = canonicalize(&config.required_centroids()?);
    let check = dc_optimality_check(data, &x)?;
    let witness_generators = match check.witness {
        Some(i) => Some(subdiff_phi(data, &x, i)?),
        None => None,
    };
    Ok(json!({
        "centroids": x,
        "f1": f1(data, &x)?,
        "f2": f2(data, &x)?,
        "objective": objective_f(data, &x)?,
        "holds": check.holds,
        "witness": check.witness,
        "witness_generators": witness_generators,
    }))
}

fn run_local_enum(config: &RunConfig, data: &DataSet) -> Result<Value> {
    let k = config.required_k()?;
    let core = enumerate_core_local_solutions(data, k, config.budget)?;
    let families = if config.families {
        Some(local_solution_families(data, k, config.budget)?)
    } else {
        None
    };
    Ok(json!({
        "k": k,
        "core_solutions": core,
        "families": families,
    }))
}

fn run_stability(config: &RunConfig, data: &DataSet) -> Result<Value> {
    let k = config.required_k()?;
    let delta = config.delta.unwrap_or_else(|| default_delta(data));
    let (trials, seed, budget) = (config.trials, config.seed, config.budget);
    let mut probes = Vec::new();
    let want = |p: ProbeChoice| config.probe == p || config.probe == ProbeChoice::All;
    if want(ProbeChoice::Value) {
        probes.push(probe_value_lipschitz(data, k, delta, trials, seed, budget)?);
    }
    if want(ProbeChoice::Upper) {
        probes.push(probe_global_upper_lipschitz(
            data, k, delta, trials, seed, budget,
        )?);
    }
    if want(ProbeChoice::Aubin) {
        let xbar = match config.centroids()? {
            Some(x) => canonicalize(&x),
            None => global_solve(data, k, budget)?
                .global_solutions
                .swap_remove(0),
        };
        probes.push(probe_aubin_local(
            data, &xbar, delta, config.eps, trials, seed,
        )?);
    }
    Ok(json!({ "probes": probes }))
}

/// Runs `config`, writes the report and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = execute(config).and_then(|text| {
        match &config.output_path {
            Some(p) => std::fs::write(p, text)?,
            None => print!("{text}"),
        }
        Ok(())
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mssc: {e}");
            if e.is_refusal() {
                EXIT_REFUSED
            } else {
                EXIT_INPUT
            }
        }
    }
}
