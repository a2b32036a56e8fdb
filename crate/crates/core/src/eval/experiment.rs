use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_matrix, measure, ExperimentConfig, Metrics};
use crate::error::{Error, Result};
use crate::graph::generate;
use crate::protect::Mode;

pub const CSV_HEADER: &str = "network,variant,size,flow_entries,group_fwd_entries,distinct_groups,\
primary_ratio,backup_avg,backup_min,backup_max,crankback_avg,crankback_max";

/// Metrics of every variant for one generated topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub size: usize,
    pub run: usize,
    pub seed: u64,
    pub links: usize,
    pub variants: Vec<VariantResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Mode,
    pub metrics: Metrics,
    /// Time to build (and optimize) the matrix.
    pub build_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRun {
    pub size: usize,
    pub run: usize,
    pub seed: u64,
    pub reason: String,
}

/// Mean metrics over the completed runs of one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub network: String,
    pub variant: Mode,
    pub size: usize,
    pub runs: usize,
    pub metrics: Metrics,
    pub build_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub skipped: Vec<SkippedRun>,
    pub aggregate: Vec<AggregateRow>,
}

/// Seed of every `(size, run)`: one ChaCha stream per size, one draw per run.
fn run_seeds(base: u64, size: usize, runs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(size as u64);
    (0..runs).map(|_| rng.gen()).collect()
}

fn one_run(
    cfg: &ExperimentConfig,
    size: usize,
    run: usize,
    seed: u64,
) -> Result<RunRecord, SkippedRun> {
    let skip = |e: Error| SkippedRun {
        size,
        run,
        seed,
        reason: e.to_string(),
    };
    let mut t = generate(cfg.network, size, seed, cfg.retries).map_err(skip)?;
    if cfg.unweighted {
        t = t.with_unit_weights();
    }
    let mut variants = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let start = Instant::now();
        let fw = build_matrix(&t, variant, cfg.optimize).map_err(skip)?;
        let build_ms = start.elapsed().as_secs_f64() * 1e3;
        let metrics = measure(&fw, &t).map_err(skip)?;
        variants.push(VariantResult {
            variant,
            metrics,
            build_ms,
        });
    }
    Ok(RunRecord {
        size,
        run,
        seed,
        links: t.link_count(),
        variants,
    })
}

fn mean_metrics(ms: &[&Metrics]) -> Metrics {
    let k = ms.len().max(1) as f64;
    let avg = |f: fn(&Metrics) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / k;
    Metrics {
        flow_entries: avg(|m| m.flow_entries),
        group_fwd_entries: avg(|m| m.group_fwd_entries),
        distinct_groups: avg(|m| m.distinct_groups),
        primary_ratio: avg(|m| m.primary_ratio),
        backup_avg: avg(|m| m.backup_avg),
        backup_min: avg(|m| m.backup_min),
        backup_max: avg(|m| m.backup_max),
        crankback_avg: avg(|m| m.crankback_avg),
        crankback_max: avg(|m| m.crankback_max),
        base_entries: avg(|m| m.base_entries),
        additional_entries: avg(|m| m.additional_entries),
        uncovered_pairs: avg(|m| m.uncovered_pairs),
        uncovered_cases: avg(|m| m.uncovered_cases),
        loops: avg(|m| m.loops),
    }
}

/// Generates `runs` topologies per size, builds and measures every variant, and averages per
/// size. Runs execute in parallel; results depend only on the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&size| {
            run_seeds(cfg.seed, size, cfg.runs)
                .into_iter()
                .enumerate()
                .map(move |(run, seed)| (size, run, seed))
        })
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(size, run, seed)| one_run(cfg, size, run, seed))
            .collect::<Vec<_>>()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(rec) => runs.push(rec),
            Err(s) => skipped.push(s),
        }
    }
    let mut aggregate = Vec::new();
    for &size in &cfg.sizes {
        let of_size: Vec<&RunRecord> = runs.iter().filter(|r| r.size == size).collect();
        if of_size.is_empty() {
            continue;
        }
        for (i, &variant) in cfg.variants.iter().enumerate() {
            let ms: Vec<&Metrics> = of_size.iter().map(|r| &r.variants[i].metrics).collect();
            let build_ms =
                of_size.iter().map(|r| r.variants[i].build_ms).sum::<f64>() / of_size.len() as f64;
            aggregate.push(AggregateRow {
                network: cfg.network.name().to_string(),
                variant,
                size,
                runs: of_size.len(),
                metrics: mean_metrics(&ms),
                build_ms,
            });
        }
    }
    Ok(Report {
        config: cfg.clone(),
        runs,
        skipped,
        aggregate,
    })
}

fn csv_line(out: &mut String, network: &str, variant: Mode, size: usize, m: &Metrics) {
    let _ = writeln!(
        out,
        "{network},{variant},{size},{:.3},{:.3},{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        m.flow_entries,
        m.group_fwd_entries,
        m.distinct_groups,
        m.primary_ratio,
        m.backup_avg,
        m.backup_min,
        m.backup_max,
        m.crankback_avg,
        m.crankback_max
    );
}

impl Report {
    /// Aggregate rows under the fixed header.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for row in &self.aggregate {
            csv_line(&mut out, &row.network, row.variant, row.size, &row.metrics);
        }
        out
    }

    /// One row per run and variant, same columns.
    pub fn runs_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.runs {
            for v in &r.variants {
                csv_line(
                    &mut out,
                    self.config.network.name(),
                    v.variant,
                    r.size,
                    &v.metrics,
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn row(&self, variant: Mode, size: usize) -> Option<&AggregateRow> {
        self.aggregate
            .iter()
            .find(|r| r.variant == variant && r.size == size)
    }
}
