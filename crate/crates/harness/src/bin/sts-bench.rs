use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stagger_harness::diagnostics::{run_diagnostics, DiagnoseConfig};
use stagger_harness::io::{read_traces, svg_chart, write_diagnostics, write_scores, write_traces};
use stagger_harness::runner::check_traces;
use stagger_harness::sweep::{ablation_config, sweep_config};
use stagger_harness::{rank_scores, run_experiment, ExperimentConfig, HarnessError, RunTrace, ScoreTable};

#[derive(Parser)]
#[command(
    name = "sts-bench",
    version,
    about = "Benchmark harness for stagger Thompson sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Outputs {
    /// Write the per-round trace CSV here.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Write the score CSV here instead of standard output.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Write one SVG chart per function into this directory.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key=value config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Score previously written trace files together.
    Score {
        #[arg(required = true, value_name = "TRACES")]
        files: Vec<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Compare samplers of the maximizer distribution on the sphere.
    Diagnose {
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        rounds: usize,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated sampler names.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "sts,pss,ts-1000,ts-10000,sobol-baseline"
        )]
        samplers: Vec<String>,
        /// Write the diagnostics CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the stagger sampler and its ablations on a config's functions.
    Ablate {
        config: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Sweep the number of refinement iterations of the stagger sampler.
    SweepM {
        config: PathBuf,
        /// Comma-separated iteration counts.
        #[arg(long, value_delimiter = ',', default_value = "0,3,10,30,100")]
        m: Vec<usize>,
        #[command(flatten)]
        out: Outputs,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn emit_scores(out: &Outputs, table: &ScoreTable) -> Result<(), HarnessError> {
    match &out.scores {
        Some(p) => write_scores(create(p)?, table),
        None => write_scores(io::stdout().lock(), table),
    }
}

fn emit_traces_and_charts(out: &Outputs, traces: &[RunTrace]) -> Result<(), HarnessError> {
    if let Some(p) = &out.traces {
        write_traces(create(p)?, traces)?;
    }
    if let Some(dir) = &out.svg_dir {
        std::fs::create_dir_all(dir)?;
        let mut functions: Vec<&str> = Vec::new();
        for t in traces {
            if !functions.contains(&t.function.as_str()) {
                functions.push(&t.function);
            }
        }
        for f in functions {
            let mut file = create(&dir.join(format!("{f}.svg")))?;
            file.write_all(svg_chart(traces, f).as_bytes())?;
            file.flush()?;
        }
    }
    Ok(())
}

fn finish(out: &Outputs, traces: &[RunTrace]) -> Result<(), HarnessError> {
    emit_traces_and_charts(out, traces)?;
    check_traces(traces)?;
    let methods = traces
        .iter()
        .map(|t| t.method.as_str())
        .collect::<std::collections::HashSet<_>>();
    if methods.len() >= 2 {
        emit_scores(out, &rank_scores(traces)?)?;
    }
    Ok(())
}

fn as_input_error(e: HarnessError) -> HarnessError {
    match e {
        HarnessError::Config(_) => e,
        other => HarnessError::Config(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            finish(&out, &run_experiment(&cfg)?)
        }
        Command::Score { files, out } => {
            let mut all = Vec::new();
            for path in &files {
                let file = File::open(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                all.extend(read_traces(file).map_err(as_input_error)?);
            }
            let table = rank_scores(&all).map_err(as_input_error)?;
            emit_traces_and_charts(&out, &all)?;
            emit_scores(&out, &table)
        }
        Command::Diagnose {
            dim,
            rounds,
            seeds,
            seed,
            samplers,
            out,
        } => {
            if dim == 0 || rounds == 0 {
                return Err(HarnessError::Config("dim and rounds must be at least 1".into()));
            }
            let runs = run_diagnostics(&DiagnoseConfig {
                num_dim: dim,
                num_rounds: rounds,
                seeds,
                seed,
                samplers,
            })?;
            match out {
                Some(p) => write_diagnostics(create(&p)?, &runs),
                None => write_diagnostics(io::stdout().lock(), &runs),
            }
        }
        Command::Ablate { config, out } => {
            let cfg = ablation_config(&ExperimentConfig::from_file(&config)?)?;
            finish(&out, &run_experiment(&cfg)?)
        }
        Command::SweepM { config, m, out } => {
            let (cfg, _) = sweep_config(&ExperimentConfig::from_file(&config)?, &m)?;
            finish(&out, &run_experiment(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sts-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
