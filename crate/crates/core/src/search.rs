//! Seeded multistart ascent and the catalog of critical points it finds.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::critical::{
    classify_with, ClassifyOptions, CriticalPointRecord, DEFAULT_STATIONARY_TOL,
};
use crate::error::Result;
use crate::manifold::{maximize_entropy, Objective, OptimizerConfig, RunReport, Termination};
use crate::matrix::{
    canonical_fingerprint, haar_random_orthogonal, CanonicalFingerprint, FINGERPRINT_QUANTUM,
};

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Start seed of run `index` under `master_seed`.
pub fn run_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub iterations: usize,
    pub final_entropy: f64,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Objective never dropped by more than rounding noise between accepted
    /// iterates.
    pub monotone: bool,
    pub max_defect: f64,
}

impl RunSummary {
    fn from_report(index: usize, report: &RunReport) -> Self {
        let monotone = report
            .trace
            .windows(2)
            .all(|w| w[1] >= w[0] - crate::manifold::objective_noise_floor(w[0]));
        Self {
            index,
            seed: report.start_seed.unwrap_or_default(),
            iterations: report.iterations,
            final_entropy: report.final_entropy,
            final_objective: report.final_objective,
            final_grad_norm: report.final_grad_norm,
            converged: report.converged,
            termination: report.termination,
            monotone,
            max_defect: report.max_defect,
        }
    }
}

/// One distinct critical point, up to signed permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub record: CriticalPointRecord,
    /// Converged runs that ended on this point.
    pub hits: usize,
    /// Lowest run index among them; its endpoint is `record.matrix`.
    pub first_run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub config: OptimizerConfig,
    pub runs: Vec<RunSummary>,
    /// Sorted by objective, descending.
    pub points: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn best(&self) -> Option<&CatalogEntry> {
        self.points.first()
    }

    pub fn converged_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.converged).count()
    }

    pub fn stalled_runs(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.termination == Termination::Stalled)
            .count()
    }
}

/// Runs `config.restarts` ascents from Haar-random starts and catalogs the
/// distinct converged endpoints.
///
/// Run `i` starts from `haar_random_orthogonal(n, run_seed(master_seed, i))`.
/// Runs execute in parallel, but every run is sequential internally and the
/// merge is keyed on run index and fingerprint, so the catalog does not
/// depend on scheduling.
pub fn multistart_search(config: &OptimizerConfig) -> Result<Catalog> {
    config.validate()?;
    let objective = Objective::for_alpha(config.alpha)?;

    let reports: Vec<RunReport> = (0..config.restarts)
        .into_par_iter()
        .map(|i| -> Result<RunReport> {
            let seed = run_seed(config.master_seed, i as u64);
            let start = haar_random_orthogonal(config.n, seed)?;
            let mut report = maximize_entropy(&start, config)?;
            report.start_seed = Some(seed);
            Ok(report)
        })
        .collect::<Result<_>>()?;

    let runs: Vec<RunSummary> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| RunSummary::from_report(i, r))
        .collect();

    let mut groups: BTreeMap<CanonicalFingerprint, Vec<usize>> = BTreeMap::new();
    for (i, report) in reports.iter().enumerate().filter(|(_, r)| r.converged) {
        let fp = canonical_fingerprint(report.final_matrix.matrix(), FINGERPRINT_QUANTUM)?;
        groups.entry(fp).or_default().push(i);
    }

    let options = ClassifyOptions {
        grad_tol: DEFAULT_STATIONARY_TOL.max(config.grad_tol),
        ..ClassifyOptions::default()
    };
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut points: Vec<CatalogEntry> = groups
        .par_iter()
        .map(|members| -> Result<CatalogEntry> {
            let first_run = members[0];
            let record = classify_with(&objective, &reports[first_run].final_matrix, &options)?;
            Ok(CatalogEntry {
                record,
                hits: members.len(),
                first_run,
            })
        })
        .collect::<Result<_>>()?;
    // Stable: ties keep fingerprint order.
    points.sort_by(|a, b| b.record.objective.total_cmp(&a.record.objective));

    Ok(Catalog {
        config: config.clone(),
        runs,
        points,
    })
}
