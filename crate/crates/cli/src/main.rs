mod commands;
mod input;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Asymptotic arbitrage and market free lunch analysis on sequences of
/// finite markets.
#[derive(Parser, Debug)]
#[command(name = "ftaplab", version)]
pub struct Cli {
    #[command(flatten)]
    pub out: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write `report.txt` / `report.csv` here instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Young functions and Orlicz norms.
    #[command(subcommand)]
    Orlicz(OrliczCmd),
    /// Single finite markets.
    #[command(subcommand)]
    Market(MarketCmd),
    /// Expected utility maximisation and its dual.
    #[command(subcommand)]
    Utility(UtilityCmd),
    /// Market families.
    #[command(subcommand)]
    Seq(SeqCmd),
    /// Print a built-in family as JSON.
    #[command(subcommand)]
    Example(ExampleCmd),
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    /// Atom probabilities; uniform over the vector length when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub probs: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum OrliczCmd {
    /// Complementary function, optionally evaluated at points.
    Conj {
        #[arg(long = "F")]
        young: String,
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
    },
    /// Luxemburg norm of a vector.
    Norm {
        #[arg(long = "F")]
        young: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        f: Vec<f64>,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Gauge of the polar of the Orlicz unit ball.
    Gauge {
        #[arg(long = "F")]
        young: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        g: Vec<f64>,
        #[command(flatten)]
        space: SpaceArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum MarketCmd {
    /// Find an equivalent martingale measure.
    Emm { market: PathBuf },
    /// No-arbitrage check with certificate.
    Na { market: PathBuf },
    /// Superreplication membership of a claim.
    #[command(name = "inC")]
    InC {
        market: PathBuf,
        /// Claim per leaf.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        f: Vec<f64>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct UtilityArgs {
    pub market: PathBuf,
    /// Endowment: numbers per leaf, or leaf ids whose indicator is used.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub w: Vec<String>,
    #[arg(long = "F", default_value = "power:2")]
    pub young: String,
    /// Belief density dR/dP per leaf; P when omitted.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum UtilityCmd {
    /// Primal value sup over C of E_R[u(f - w)].
    Sup(UtilityArgs),
    /// Dual value, minimising measure and multiplier.
    Dual(UtilityArgs),
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    /// Family file; standard input when omitted or `-`.
    pub family: Option<PathBuf>,
    /// Override the prefix length.
    #[arg(long)]
    pub prefix: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum SeqCmd {
    /// Contiguity profile of a measure sequence against the reference measures.
    Contiguity {
        #[command(flatten)]
        family: FamilyArgs,
        /// Measure sequence JSON; the reference measures when omitted.
        #[arg(long)]
        measures: Option<PathBuf>,
        /// Levels of the eps grid 2^-1 .. 2^-J.
        #[arg(long, default_value_t = 6)]
        levels: usize,
    },
    /// Asymptotic arbitrage detectors.
    Detect {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1.0)]
        c_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        l_scale: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 15)]
        enum_limit: usize,
    },
    /// Worst-case market free lunch values per market.
    Namfl {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Young functions; the default grid when omitted.
        #[arg(long = "F")]
        young: Vec<String>,
        /// Values at or above `-delta` count as a free lunch signal.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Belief sequence JSON; reference measures when omitted.
        #[arg(long)]
        beliefs: Option<PathBuf>,
    },
    /// Separation of the superreplication cone from large claims.
    Nafl {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long = "F", default_value = "power:2")]
        young: String,
    },
    /// Bicontiguous martingale measure construction.
    Build {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long = "F")]
        young: Vec<String>,
        #[arg(long)]
        beliefs: Option<PathBuf>,
        /// Write the constructed measure sequence as JSON.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExampleCmd {
    /// One-period market with a single arbitrage-carrying atom.
    #[command(name = "klein")]
    IsolatedArbitrage {
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        prefix: usize,
    },
    /// Additive binomial tree, identical for every n.
    Binomial {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        up: f64,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        down: f64,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        prefix: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FTAPLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match commands::run(&cli) {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            commands::Exit::Input.into()
        }
    }
}
