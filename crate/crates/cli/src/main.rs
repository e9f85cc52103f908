//! `ordbound`: analyses of finite lattice-normed models from JSON inputs.
//!
//! Exit codes: 0 success, 1 a check or the self-test failed, 2 invalid input,
//! 3 a size cap was exceeded, 4 the solver hit its iteration limit.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ordbound", version, about = "Order-boundedness, zonotopes, mixings and compact extensions on finite models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an extension and run the structure-theorem cross-check.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Localization levels for the Egoroff step.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.05", value_parser = positive)]
        delta: Vec<f64>,
        /// Largest group closure to enumerate.
        #[arg(long, default_value_t = ordbound::mps::DEFAULT_GROUP_CAP)]
        cap: usize,
    },
    /// Defect tables and uniform total order-boundedness of a finite set.
    Tob {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Distances from a finite set to the zonotope of the given generators.
    Zonotope {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
    /// Cyclic-compactness witnesses for a finite set.
    Cyclic {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Ball radius; defaults to the input's `radius`, then to the set's sup-norm.
        #[arg(long, value_parser = positive)]
        radius: Option<f64>,
    },
    /// Defect table of the sequence-space counterexample.
    Counterexample {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.05", value_parser = positive)]
        delta: Vec<f64>,
    },
    /// Randomized property suite over every module.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Replace the extension sample with a deliberately broken one.
        #[arg(long)]
        inject_fault: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    /// Comma-separated accuracy levels.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01", value_parser = positive)]
    eps: Vec<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

/// Echoed verbatim in every report.
#[derive(Serialize, Debug, Clone)]
pub(crate) struct RunConfig {
    pub command: &'static str,
    pub input: Option<String>,
    pub tol: f64,
    pub eps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject_fault: Option<bool>,
    pub format: Format,
}

impl RunConfig {
    fn new(command: &'static str, input: Option<&PathBuf>, common: &Common, default: Format) -> Self {
        Self {
            command,
            input: input.map(|p| p.display().to_string()),
            tol: common.tol,
            eps: common.eps.clone(),
            delta: None,
            cap: None,
            max_iter: None,
            radius: None,
            n: None,
            seed: None,
            instances: None,
            inject_fault: None,
            format: common.format.unwrap_or(default),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, result) = match &cli.command {
        Command::Analyze { input, common, delta, cap } => {
            let mut cfg = RunConfig::new("analyze", Some(input), common, Format::Text);
            cfg.delta = Some(delta.clone());
            cfg.cap = Some(*cap);
            let r = commands::analyze(&cfg, input);
            (cfg, r)
        }
        Command::Tob { input, common } => {
            let cfg = RunConfig::new("tob", Some(input), common, Format::Text);
            let r = commands::tob(&cfg, input);
            (cfg, r)
        }
        Command::Zonotope { input, common, max_iter } => {
            let mut cfg = RunConfig::new("zonotope", Some(input), common, Format::Text);
            cfg.max_iter = Some(*max_iter);
            let r = commands::zonotope(&cfg, input);
            (cfg, r)
        }
        Command::Cyclic { input, common, radius } => {
            let mut cfg = RunConfig::new("cyclic", Some(input), common, Format::Text);
            cfg.radius = *radius;
            let r = commands::cyclic(&cfg, input);
            (cfg, r)
        }
        Command::Counterexample { n, common, delta } => {
            let mut cfg = RunConfig::new("counterexample", None, common, Format::Csv);
            cfg.n = Some(*n);
            cfg.delta = Some(delta.clone());
            let r = commands::counterexample(&cfg);
            (cfg, r)
        }
        Command::Selftest { seed, instances, inject_fault, common } => {
            let mut cfg = RunConfig::new("selftest", None, common, Format::Text);
            cfg.seed = Some(*seed);
            cfg.instances = Some(*instances);
            cfg.inject_fault = Some(*inject_fault);
            let r = commands::selftest(&cfg);
            (cfg, r)
        }
    };
    match result {
        Ok(out) => {
            print!("{}", render::emit(&cfg, &out));
            ExitCode::from(out.code)
        }
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            if let Some(report) = &fail.report {
                print!("{}", render::emit(&cfg, report));
            }
            ExitCode::from(fail.code)
        }
    }
}
