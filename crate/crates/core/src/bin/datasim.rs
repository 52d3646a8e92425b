use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use datasim::data::load_csv_set;
use datasim::method::{default_methods, EvalCache, MethodSpec};
use datasim::oracles::verify_suite;
use datasim::pesr::{compute_records, gap_to_best, write_gaps, write_plots, write_records};
use datasim::runner::{bench_runtime, load_run, run, write_bench, RunManifest, RunOptions};
use datasim::simgen::{expand_grid, parse_scenario};

#[derive(Parser)]
#[command(name = "datasim", version, about = "Similarity statistics for categorical datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two or more CSV files with one method.
    Compare {
        files: Vec<PathBuf>,
        /// Method id such as fr, fr:5mst-u, c2st-knn, cm or otdd; `all` runs the default list.
        #[arg(long, default_value = "all")]
        method: String,
        /// Graph for edge-count methods, e.g. 1nn-u, 5mst-u, 5nn-a.
        #[arg(long)]
        graph: Option<String>,
        /// Distance: hamming or euclidean.
        #[arg(long)]
        metric: Option<String>,
        /// The last column of every file is a 0/1 target.
        #[arg(long)]
        target: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print one JSON object per method.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario grid and write the statistic table.
    Simulate {
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the repetitions of every scenario.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides the master seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Comma-separated method ids; default list when omitted.
        #[arg(long)]
        methods: Option<String>,
        /// Seconds per evaluation; 0 disables the watchdog.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long)]
        quiet: bool,
    },
    /// Compute PESR tables from a finished run directory.
    Pesr {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Gap-to-best table; defaults to gaps.csv next to the PESR table.
        #[arg(long)]
        gaps: Option<PathBuf>,
        /// Write SVG line plots into DIR/plots.
        #[arg(long)]
        plots: bool,
    },
    /// Time each method on the first repetition of a scenario.
    Bench {
        scenario: PathBuf,
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, default_value_t = 10)]
        min_reps: usize,
        #[arg(long, default_value_t = 1.0)]
        min_seconds: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the production code against brute-force references.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

fn parse_methods(list: Option<&str>) -> anyhow::Result<Vec<MethodSpec>> {
    match list {
        None => Ok(default_methods()),
        Some(s) => s
            .split(',')
            .map(|m| MethodSpec::parse(m.trim()).with_context(|| format!("method '{m}'")))
            .collect(),
    }
}

fn compare(
    files: &[PathBuf],
    method: &str,
    graph: Option<&str>,
    metric: Option<&str>,
    target: bool,
    seed: u64,
    json: bool,
) -> anyhow::Result<()> {
    if files.len() < 2 {
        bail!("compare needs at least two files");
    }
    let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let (data, _) = load_csv_set(&paths, target)?;
    let mut methods = if method == "all" {
        default_methods()
            .into_iter()
            .filter(|m| (!m.two_sample_only() || data.len() == 2) && (!m.needs_target() || target))
            .collect()
    } else {
        let id = match graph {
            Some(g) if !method.contains(':') => format!("{method}:{g}"),
            _ => method.to_string(),
        };
        vec![MethodSpec::parse(&id)?]
    };
    if let Some(m) = metric {
        let metric = datasim::distances::Metric::parse(m)?;
        for spec in &mut methods {
            spec.metric = metric;
        }
    }
    let cache = EvalCache::new();
    for m in methods {
        let o = m.evaluate(&data, &cache, seed);
        if json {
            let mut v = serde_json::to_value(&o)?;
            v["method"] = serde_json::Value::String(m.id());
            println!("{v}");
        } else {
            let fmt = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.6}"));
            let mut line = format!(
                "{:<20} statistic={} p={} status={}",
                m.id(),
                fmt(o.statistic),
                fmt(o.p_value),
                o.status.label()
            );
            if !o.flags.is_empty() {
                line.push_str(&format!(" flags={}", o.flags.join(";")));
            }
            println!("{line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Compare { files, method, graph, metric, target, seed, json } => {
            compare(&files, &method, graph.as_deref(), metric.as_deref(), target, seed, json)
        }
        Command::Simulate { grid, out, reps, seed, jobs, methods, timeout, quiet } => (|| {
            let text = std::fs::read_to_string(&grid).with_context(|| format!("reading {}", grid.display()))?;
            let mut scenarios = expand_grid(&text)?;
            if scenarios.is_empty() {
                bail!("the grid has no valid scenario");
            }
            for s in &mut scenarios {
                if let Some(r) = reps {
                    s.reps = r;
                }
                if let Some(x) = seed {
                    s.seed = x;
                }
            }
            let methods = parse_methods(methods.as_deref())?;
            let manifest = RunManifest::with_nulls(scenarios, &methods)?;
            let options = RunOptions {
                jobs,
                timeout: (timeout > 0.0).then(|| Duration::from_secs_f64(timeout)),
                progress: !quiet,
            };
            let s = run(&manifest, &out, &options)?;
            println!(
                "{} triples ({} resumed, {} computed, {} failures) -> {}",
                s.triples,
                s.resumed,
                s.computed,
                s.failures,
                out.join(datasim::runner::STATISTICS).display()
            );
            Ok(())
        })(),
        Command::Pesr { dir, out, gaps, plots } => (|| {
            let (manifest, rows) = load_run(&dir)?;
            let records = compute_records(&manifest, &rows)?;
            let out = out.unwrap_or_else(|| dir.join("pesr.csv"));
            write_records(&records, &out)?;
            let gaps = gaps.unwrap_or_else(|| out.with_file_name("gaps.csv"));
            write_gaps(&gap_to_best(&records), &gaps)?;
            println!("{} records -> {}, gaps -> {}", records.len(), out.display(), gaps.display());
            if plots {
                let files = write_plots(&records, &dir.join("plots"))?;
                println!("{} plots -> {}", files.len(), dir.join("plots").display());
            }
            Ok(())
        })(),
        Command::Bench { scenario, methods, min_reps, min_seconds, out } => (|| {
            let spec = parse_scenario(&std::fs::read_to_string(&scenario)?)?;
            let methods = parse_methods(methods.as_deref())?;
            let rows = bench_runtime(&methods, &spec, min_reps, Duration::from_secs_f64(min_seconds))?;
            for r in &rows {
                println!(
                    "{:<20} calls={:<8} median={:.3e}s q05={:.3e}s q95={:.3e}s status={}",
                    r.method, r.calls, r.median_s, r.q05_s, r.q95_s, r.status
                );
            }
            if let Some(path) = out {
                write_bench(&rows, &path)?;
            }
            Ok(())
        })(),
        Command::Verify { seed, instances } => {
            let checks = verify_suite(seed, instances);
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                Err(anyhow::anyhow!("{failed} checks failed"))
            } else {
                Ok(())
            }
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
