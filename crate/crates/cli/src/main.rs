//! `reverbkit` — room impulse response generation, acoustic analysis,
//! reverberant mixture construction, curriculum scheduling, and separation
//! metrics, as subcommands with reproducible seeded runs.

mod commands;
mod record;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analyze, evalcmd, gen, mixcmd, plancmd};

#[derive(Parser)]
#[command(
    name = "reverbkit",
    version,
    about = "Room impulse response simulation and dataset construction toolkit",
    propagate_version = true
)]
struct Cli {
    /// Worker threads. Defaults to the REVERBKIT_THREADS environment
    /// variable, then to all available cores. Outputs never depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one impulse response for a scene config
    GenRir(gen::GenRirArgs),
    /// Build and execute an absorption-sweep generation plan
    Sweep(gen::SweepArgs),
    /// Estimate T60 / DRR / energy for impulse responses
    Analyze(analyze::AnalyzeArgs),
    /// Annotate a pool of RIRs with T60 and sort ascending
    SortPool(analyze::SortPoolArgs),
    /// Histogram the T60 values of an annotated pool
    HistT60(analyze::HistArgs),
    /// Build two-speaker reverberant mixtures
    Mix(mixcmd::MixArgs),
    /// Print the epoch -> available-RIR-count frontier table
    Curriculum(plancmd::CurriculumArgs),
    /// Validate and emit a multi-stage training plan
    Plan(plancmd::PlanArgs),
    /// Score separated estimates against references
    Eval(evalcmd::EvalArgs),
    /// Export an STFT magnitude matrix as CSV and/or PNG
    Spectrogram(analyze::SpectrogramArgs),
}

fn init_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let from_env = std::env::var("REVERBKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::GenRir(args) => gen::gen_rir(args),
        Command::Sweep(args) => gen::sweep(args),
        Command::Analyze(args) => analyze::analyze(args),
        Command::SortPool(args) => analyze::sort_pool(args),
        Command::HistT60(args) => analyze::hist_t60(args),
        Command::Mix(args) => mixcmd::mix(args),
        Command::Curriculum(args) => plancmd::curriculum(args),
        Command::Plan(args) => plancmd::plan(args),
        Command::Eval(args) => evalcmd::eval(args),
        Command::Spectrogram(args) => analyze::spectrogram(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = record::exit_code_for(&err);
            eprintln!("{}", record::error_line(&err, code));
            ExitCode::from(code)
        }
    }
}
