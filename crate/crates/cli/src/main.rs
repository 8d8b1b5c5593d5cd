use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gsi_cli::config::{load_config, parse_methods, ResolvedConfig};
use gsi_cli::inspect::inspect_path;
use gsi_cli::runner::{prepare_data, run_experiment};
use gsi_core::data::write_ground_truth;
use gsi_core::observe::write_observations;

#[derive(Parser)]
#[command(
    name = "gsi",
    version,
    about = "One-bit graph signal imputation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the configured methods, writing CSV artifacts.
    Run(RunArgs),
    /// Resolve defaults, check the config and print it as JSON.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the graph and train/test data of one seed to files.
    GenData(RunArgs),
    /// Print a summary of a data, checkpoint, IDX or edge-list file.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single run seed; overrides `seeds`.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of proposed,gain,gd; overrides `methods`.
    #[arg(long)]
    methods: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ResolvedConfig> {
        let mut resolved = load_config(&self.config)?;
        let cfg = &mut resolved.config;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(list) = &self.methods {
            cfg.methods = parse_methods(list)?;
        }
        cfg.validate()?;
        Ok(resolved)
    }
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let resolved = args.resolve()?;
    let report = run_experiment(&resolved.config, &resolved.defaulted)?;
    print!(
        "{}",
        fs::read_to_string(report.output_dir.join("summary.csv"))?
    );
    if report.all_succeeded() {
        Ok(ExitCode::SUCCESS)
    } else {
        for o in report.outcomes.iter().filter(|o| !o.succeeded()) {
            eprintln!(
                "seed {} {}: {}",
                o.seed,
                o.method,
                o.failure.as_deref().unwrap_or("failed")
            );
        }
        Ok(ExitCode::FAILURE)
    }
}

fn validate(config: &Path) -> Result<ExitCode> {
    let resolved = load_config(config)?;
    println!("{}", serde_json::to_string_pretty(&resolved.config)?);
    for key in &resolved.defaulted {
        eprintln!("default applied: {key}");
    }
    Ok(ExitCode::SUCCESS)
}

fn gen_data(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.resolve()?.config;
    let seed = cfg.seeds[0];
    let data = prepare_data(&cfg, seed)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    data.graph
        .write_edge_list(BufWriter::new(File::create(dir.join("graph.txt"))?))?;
    for (name, set) in [("train", &data.train), ("test", &data.test)] {
        write_observations(
            BufWriter::new(File::create(dir.join(format!("{name}.gsob")))?),
            &set.observations,
        )?;
        if let Some(signals) = &set.signals {
            write_ground_truth(
                BufWriter::new(File::create(dir.join(format!("{name}.gsgt")))?),
                signals.view(),
            )?;
        }
    }
    fs::write(
        dir.join("normalization.json"),
        serde_json::to_string_pretty(&data.train.normalization)? + "\n",
    )?;
    println!(
        "wrote seed {seed}: {} nodes, {} train and {} test realizations to {}",
        data.n_nodes(),
        data.train.len(),
        data.test.len(),
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(config),
        Command::GenData(args) => gen_data(args),
        Command::Inspect { path } => inspect_path(path).map(|s| {
            print!("{s}");
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
