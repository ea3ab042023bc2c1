use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbsa::{ErrorKind, SbsaError};

mod commands;

#[derive(Parser)]
#[command(name = "sbsa", version, about = "Scattering-based analysis of arterial pressure signals")]
struct Cli {
    /// Run configuration (TOML). Command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for reports and plot data.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct InputArgs {
    /// Signal CSV: `time,value` rows, or one value per row with --rate.
    pub input: PathBuf,
    /// 0-based column holding time in seconds.
    #[arg(long)]
    pub time_col: Option<usize>,
    /// 0-based column holding the signal.
    #[arg(long)]
    pub value_col: Option<usize>,
    /// Sample rate in Hz; implies a file without a time column unless --time-col is given.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ChiArgs {
    /// Analyze at this χ instead of selecting one.
    #[arg(long, conflicts_with_all = ["target_n", "mse_tol"])]
    pub chi: Option<f64>,
    /// Select the smallest χ with this many bound states.
    #[arg(long, conflicts_with = "mse_tol")]
    pub target_n: Option<usize>,
    /// Select the first χ reaching this relative squared error.
    #[arg(long)]
    pub mse_tol: Option<f64>,
    /// Eigenvalues in the systolic share.
    #[arg(long)]
    pub n_s: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Bound states of a signal at a given or selected χ.
    Decompose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        chi: ChiArgs,
    },
    /// Soliton reconstruction with its systolic and diastolic parts.
    Reconstruct {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        chi: ChiArgs,
    },
    /// First and second invariants, spectral and direct.
    Invariants {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        chi: ChiArgs,
    },
    /// Beat-by-beat indices of a pressure recording.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        chi: ChiArgs,
        /// Foot sample indices, one per row; replaces foot detection.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Regression of the next pulse interval on a beat index.
    Brs {
        /// Per-beat table written by `pipeline`.
        beats: PathBuf,
        #[arg(long, value_enum)]
        predictor: Option<PredictorArg>,
    },
    /// Mean ± SEM and Wilcoxon signed-rank test per column of two paired tables.
    Compare {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
    },
    /// Synthetic signals. Without a subcommand, the soliton options apply.
    #[command(args_conflicts_with_subcommands = true)]
    Synth {
        #[command(subcommand)]
        kind: Option<SynthKind>,
        #[command(flatten)]
        soliton: SolitonArgs,
    },
}

#[derive(Subcommand)]
pub enum SynthKind {
    /// Exact multi-soliton well from its scattering data.
    Soliton(SolitonArgs),
    /// Arterial pressure recording of synthetic beats.
    Abp {
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 250.0)]
        rate: f64,
        #[arg(long, default_value_t = 850.0)]
        mean_pi_ms: f64,
        /// Drive each pulse interval from the previous beat's |λ₁| with this slope (ms·s²).
        #[arg(long, allow_hyphen_values = true)]
        couple_slope: Option<f64>,
        /// Standard deviation of the coupled interval noise, ms.
        #[arg(long, default_value_t = 3.0)]
        noise_ms: f64,
        /// Seed (default: from the configuration).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write the true foot indices here.
        #[arg(long)]
        feet: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Debug)]
pub struct SolitonArgs {
    /// Comma-separated, strictly descending.
    #[arg(long, value_delimiter = ',')]
    pub kappas: Vec<f64>,
    /// Comma-separated norming constants, or `auto` to center every soliton at 0.
    #[arg(long, default_value = "auto")]
    pub norming: String,
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    pub t_min: f64,
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Output CSV (default: <out>/synth.csv).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictorArg {
    Lambda1,
    Sbp,
    Pp,
    All,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SbsaError>().map(SbsaError::kind) {
        Some(ErrorKind::Numeric) => 3,
        Some(ErrorKind::InsufficientData) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let ctx = match commands::Context::new(cli.config.as_deref(), cli.out.as_deref()) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let result = match cli.command {
        Command::Decompose { input, chi } => commands::decompose(&ctx, &input, &chi),
        Command::Reconstruct { input, chi } => commands::reconstruct(&ctx, &input, &chi),
        Command::Invariants { input, chi } => commands::invariants(&ctx, &input, &chi),
        Command::Pipeline {
            input,
            chi,
            annotations,
        } => commands::pipeline(&ctx, &input, &chi, annotations.as_deref()),
        Command::Brs { beats, predictor } => commands::brs(&ctx, &beats, predictor),
        Command::Compare { before, after } => commands::compare(&ctx, &before, &after),
        Command::Synth { kind, soliton } => {
            commands::synth(&ctx, kind.unwrap_or(SynthKind::Soliton(soliton)))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
