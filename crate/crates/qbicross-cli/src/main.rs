//! `qbicross`: run Hopf, bicrossproduct and pairing checks, flows and induced
//! representations on catalog entries or spec files.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or input error,
//! 3 a flow or evaluation left its domain.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbicross::report::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "qbicross",
    version,
    about = "Bicrossproduct quantum algebras: checks, flows and induced representations"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Catalog name, spec file path, or a file name under $BICROSS_DATA_DIR.
    #[arg(long, global = true, default_value = "galilei-kappa")]
    pub algebra: String,
    /// Monomial degree D for axiom checks.
    #[arg(long, global = true, default_value_t = 4)]
    pub degree: u32,
    /// Parameter order Z.
    #[arg(long, global = true, default_value_t = 8)]
    pub zorder: u32,
    /// Series order N for flows and induced representations.
    #[arg(long, global = true, default_value_t = 8)]
    pub order: u32,
    /// Numeric value of z (algebras with a direct parameter).
    #[arg(long, global = true, default_value_t = 0.3)]
    pub z: f64,
    /// Numeric value of κ (algebras with an inverse parameter).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compare {
    Closed,
    None,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hopf axioms on all monomials of degree ≤ D.
    CheckHopf {
        /// Check the dual function algebra of a catalog entry.
        #[arg(long)]
        dual: bool,
    },
    /// Compatibility conditions, reconstruction and star structure of bicross data.
    CheckBicross,
    /// Pairing table and pairing axioms of a catalog entry.
    CheckPairing,
    /// Integrate the K-generator flow numerically from a point.
    Flow {
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Flow time(s), comma separated.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, value_enum, default_value_t = Compare::None)]
        compare: Compare,
        /// RK4 step size.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Write the trajectory to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Number of trajectory rows in the CSV.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Check first integrals of the K-flow.
    Integral {
        /// Additional candidate integral over the L-coordinates.
        #[arg(long = "expr")]
        exprs: Vec<String>,
        /// Also check the known non-conserved variant (expected to fail).
        #[arg(long)]
        printed: bool,
    },
    /// Induced representation at a character, with its representation check.
    Induce {
        #[arg(long, allow_hyphen_values = true)]
        character: String,
        /// Print the K-action matrix and the multiplication series.
        #[arg(long)]
        dump: bool,
        /// Highest monomial degree used by the relation check.
        #[arg(long, default_value_t = 4)]
        pmax: u32,
    },
    /// Local representation e^{sK} ⊢ l = e^{sc}·Φˢ(l).
    LocalRep {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, allow_hyphen_values = true)]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
    },
    /// Intertwiner check between the representations induced at l and at Φˢ(l).
    Equiv {
        #[arg(long, allow_hyphen_values = true)]
        l: String,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        /// Identify with this point instead of Φˢ(l) (negative control).
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        /// Test functions on L (default: the coordinates and registered integrals).
        #[arg(long = "lambda")]
        lambdas: Vec<String>,
        /// Flow-time grid for the evaluation, comma separated.
        #[arg(long, default_value = "0,0.1,0.2,0.3")]
        grid: String,
    },
    /// Fixed points, flow displacement and integral values on sample points.
    Strata {
        /// Points separated by `;`, coordinates by `,` (default: the catalog grid).
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Print spec files, or write them into a directory.
    Dump {
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Why a run did not complete normally.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
}

impl From<qbicross::Error> for Failure {
    fn from(e: qbicross::Error) -> Self {
        if e.is_domain() {
            Failure::Domain(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub fn config(cli: &Cli) -> RunConfig {
    let c = &cli.common;
    let name = match &cli.command {
        Command::CheckHopf { .. } => "check-hopf",
        Command::CheckBicross => "check-bicross",
        Command::CheckPairing => "check-pairing",
        Command::Flow { .. } => "flow",
        Command::Integral { .. } => "integral",
        Command::Induce { .. } => "induce",
        Command::LocalRep { .. } => "local-rep",
        Command::Equiv { .. } => "equiv",
        Command::Strata { .. } => "strata",
        Command::Dump { .. } => "dump",
    };
    RunConfig {
        subcommand: name.into(),
        algebra: c.algebra.clone(),
        degree: c.degree,
        zorder: c.zorder,
        series_order: c.order,
        z: c.z,
        kappa: c.kappa,
        step: match &cli.command {
            Command::Flow { step, .. } => *step,
            _ => RunConfig::default().step,
        },
        format: match c.format {
            Format::Text => "text".into(),
            Format::Json => "json".into(),
        },
        output: c.output.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match commands::run(&cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("domain error: {msg}");
            ExitCode::from(3)
        }
    }
}
