use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use detour_core::dataplane::simulate;
use detour_core::eval::{build_matrix, run_experiment, ExperimentConfig};
use detour_core::graph::{self, FailureScenario, GeneratorKind, DEFAULT_RETRIES};
use detour_core::protect::{ForwardingMatrix, Mode};

#[derive(Parser)]
#[command(
    name = "detour",
    version,
    about = "Failure-disjoint forwarding rules and their evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-connected random topology.
    Generate {
        /// erdos-renyi (er), lattice or waxman
        #[arg(long)]
        kind: GeneratorKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RETRIES)]
        retries: usize,
    },
    /// Compute a forwarding matrix for a topology file.
    Compute {
        #[arg(long)]
        topology: PathBuf,
        /// shortest-path, per-link, per-node, hybrid, disjoint-link or disjoint-node
        #[arg(long)]
        variant: Mode,
        /// JSON output; the sorted text dump goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_optimize: bool,
        /// Use hop counts instead of link weights.
        #[arg(long)]
        unweighted: bool,
    },
    /// Forward one packet through a matrix under a failure and print the trace.
    Simulate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        /// none, link:U-V or node:V
        #[arg(long, default_value = "none")]
        scenario: FailureScenario,
        #[arg(long)]
        src: usize,
        #[arg(long)]
        dst: usize,
        #[arg(long)]
        unweighted: bool,
    },
    /// Run the evaluation and write aggregate rows as CSV.
    Evaluate {
        /// key = value file, applied before the flags below
        #[arg(long)]
        config: Option<PathBuf>,
        /// desk or full
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        network: Option<String>,
        /// comma separated, e.g. 9,16,25
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// comma separated variant names
        #[arg(long)]
        variants: Option<String>,
        #[arg(long)]
        no_optimize: bool,
        #[arg(long)]
        unweighted: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// CSV output; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full report with per-run rows, extra counts and timings.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, unweighted: bool) -> Result<graph::Topology> {
    let t = graph::load_topology(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(if unweighted { t.with_unit_weights() } else { t })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            kind,
            n,
            seed,
            out,
            retries,
        } => {
            let t = graph::generate(kind, n, seed, retries)?;
            graph::save_topology(&t, &out)?;
            eprintln!(
                "{} nodes, {} links -> {}",
                t.node_count(),
                t.link_count(),
                out.display()
            );
        }
        Command::Compute {
            topology,
            variant,
            out,
            no_optimize,
            unweighted,
        } => {
            let t = load(&topology, unweighted)?;
            let fw = build_matrix(&t, variant, !no_optimize)?;
            eprintln!(
                "{}: {} flow entries, {} to groups, {} groups, {} uncovered, {} spf runs",
                variant,
                fw.len(),
                fw.group_forwarding_entries(),
                fw.distinct_groups(),
                fw.report.uncovered.len(),
                fw.report.spf_runs
            );
            match out {
                Some(path) => fw.save(&path)?,
                None => print!("{}", fw.to_text()),
            }
        }
        Command::Simulate {
            topology,
            matrix,
            scenario,
            src,
            dst,
            unweighted,
        } => {
            let t = load(&topology, unweighted)?;
            let fw = ForwardingMatrix::load(&matrix)
                .with_context(|| format!("loading {}", matrix.display()))?;
            fw.validate(&t)?;
            print!("{}", simulate(&fw, &t, scenario, src, dst)?.dump());
        }
        Command::Evaluate {
            config,
            preset,
            network,
            sizes,
            runs,
            seed,
            variants,
            no_optimize,
            unweighted,
            threads,
            out,
            json,
        } => {
            let mut cfg = match &config {
                Some(p) => {
                    ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?
                }
                None => ExperimentConfig::default(),
            };
            let flags = [
                ("preset", preset),
                ("network", network),
                ("sizes", sizes),
                ("runs", runs.map(|r| r.to_string())),
                ("seed", seed.map(|s| s.to_string())),
                ("variants", variants),
                ("threads", threads.map(|t| t.to_string())),
            ];
            for (key, value) in flags {
                if let Some(v) = value {
                    cfg.set(key, &v)?;
                }
            }
            if no_optimize {
                cfg.optimize = false;
            }
            if unweighted {
                cfg.unweighted = true;
            }
            let report = run_experiment(&cfg)?;
            for s in &report.skipped {
                eprintln!(
                    "skipped size {} run {} (seed {}): {}",
                    s.size, s.run, s.seed, s.reason
                );
            }
            if report.aggregate.is_empty() {
                bail!("no run completed");
            }
            match out {
                Some(path) => std::fs::write(&path, report.to_csv())?,
                None => print!("{}", report.to_csv()),
            }
            if let Some(path) = json {
                std::fs::write(&path, report.to_json()?)?;
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
