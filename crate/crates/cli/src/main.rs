//! `xlwalk`: generate graphs and data, run simulations, sweeps and presets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use xlwalk_core::datahub::gen_synthetic;
use xlwalk_core::experiment::{
    preset, read_logs, run_series, summarize, sweep_series, write_outputs, ExperimentConfig, Preset,
    Series, PRESET_NAMES,
};
use xlwalk_core::topology::{default_rgg_radius, gen_connected_caveman, gen_rgg};
use xlwalk_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "xlwalk", version, about = "Simulator for model-carrying random walkers on device graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GraphKind {
    Caveman,
    Rgg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a topology and write it as JSON.
    GenGraph {
        /// Graph family.
        #[arg(long, value_enum)]
        kind: GraphKind,
        /// Number of cliques (caveman only).
        #[arg(long, default_value_t = 8)]
        cliques: usize,
        /// Number of nodes.
        #[arg(long)]
        nodes: usize,
        /// Connection radius (rgg only); defaults to an expected degree of six.
        #[arg(long)]
        radius: Option<f64>,
        /// Resampling attempts before giving up on a connected rgg.
        #[arg(long, default_value_t = 1000)]
        max_retries: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic Gaussian-mixture dataset.
    GenData {
        /// Number of classes.
        #[arg(long, default_value_t = 10)]
        classes: usize,
        /// Feature dimension.
        #[arg(long, default_value_t = 32)]
        dims: usize,
        /// Samples per class.
        #[arg(long, default_value_t = 500)]
        per_class: usize,
        /// Fraction of each class held out for validation.
        #[arg(long, default_value_t = 0.2)]
        val_frac: f64,
        /// Distance of the class means from the origin.
        #[arg(long, default_value_t = 3.0)]
        sep: f64,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; writes `<stem>.json` and `<stem>.bin`.
        #[arg(long)]
        out: PathBuf,
        /// File stem.
        #[arg(long, default_value = "data")]
        stem: String,
    },
    /// Run one experiment config.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Seed; overrides the seeds listed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a config once per value of one parameter.
    Sweep {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary, e.g. walker_count, alpha, attraction_strength.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Number of seeds per value.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the canned scenarios.
    Preset {
        /// Scenario name.
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        /// Number of seeds per series.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (required unless --show-config).
        #[arg(long, required_unless_present = "show_config")]
        out: Option<PathBuf>,
        /// Print the scenario's configs as JSON and exit.
        #[arg(long)]
        show_config: bool,
    },
    /// Recompute metrics.csv and summary.csv from an events.jsonl.
    Report {
        /// Directory holding events.jsonl.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::File {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, body).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run_and_write(series: &[Series], seeds: &[u64], out: &Path) -> Result<()> {
    let logs = run_series(series, seeds)?;
    let summary = write_outputs(out, series, &logs)?;
    print!("{}", summary.summary_csv());
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenGraph {
            kind,
            cliques,
            nodes,
            radius,
            max_retries,
            seed,
            out,
        } => {
            let g = match kind {
                GraphKind::Caveman => gen_connected_caveman(cliques, nodes, seed)?,
                GraphKind::Rgg => gen_rgg(
                    nodes,
                    radius.unwrap_or_else(|| default_rgg_radius(nodes)),
                    seed,
                    max_retries,
                )?,
            };
            let json = serde_json::to_string(&g.to_json())? + "\n";
            match out {
                Some(p) => write_file(&p, &json),
                None => {
                    print!("{json}");
                    Ok(())
                }
            }
        }
        Command::GenData {
            classes,
            dims,
            per_class,
            val_frac,
            sep,
            seed,
            out,
            stem,
        } => {
            let ds = gen_synthetic(classes, dims, per_class, val_frac, sep, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::File {
                path: out.clone(),
                source: e,
            })?;
            ds.save(&out, &stem)
        }
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seeds = match (seed, cfg.seeds.is_empty()) {
                (Some(s), _) => vec![s],
                (None, true) => vec![0],
                (None, false) => cfg.seeds.clone(),
            };
            let name = if cfg.name.is_empty() { "run".to_string() } else { cfg.name.clone() };
            let series = [Series {
                name,
                value: None,
                config: cfg,
            }];
            run_and_write(&series, &seeds, &out)
        }
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let series = sweep_series(&cfg, &axis, &values)?;
            run_and_write(&series, &Preset::seeds(seed, seeds), &out)
        }
        Command::Preset {
            name,
            seeds,
            seed,
            out,
            show_config,
        } => {
            let p = preset(&name)?;
            if show_config {
                println!("{}", serde_json::to_string_pretty(&p.series)?);
                return Ok(());
            }
            let out = out.ok_or_else(|| Error::Config("--out is required".into()))?;
            run_and_write(&p.series, &Preset::seeds(seed, seeds), &out)
        }
        Command::Report { input, out } => {
            let logs = read_logs(&input.join("events.jsonl"))?;
            let summary = summarize(&logs)?;
            let out = out.unwrap_or(input);
            std::fs::create_dir_all(&out).map_err(|e| Error::File {
                path: out.clone(),
                source: e,
            })?;
            summary.write(&out)?;
            print!("{}", summary.summary_csv());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report())
                .unwrap_or_else(|_| format!("{{\"error\":\"internal\",\"message\":{:?}}}", e.to_string()));
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
