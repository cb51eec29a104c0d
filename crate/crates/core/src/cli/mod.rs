//! Command-line front end.

mod config;
mod output;
mod suites;

pub use config::{parse_config, CutoffConfig, GridConfig, OutputConfig, Particle, RunConfig, Units, DEFAULT_TOLERANCES};
pub use output::{checks_table, fmt_num, CheckRow, Table};
pub use suites::{run_suite, Suite, SuiteReport, KERNEL_ORACLE_NODES, VERIFY_SAMPLES};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPINQED_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spinqed", version, about = "Second-order spin-field energies and their checks")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the configuration and the environment.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random states and eigensolver start blocks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the 3×3 kernel at one displacement.
    Kernel {
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
        at: Vec<f64>,
    },
    /// Bottom of the spectrum of A_M.
    E2,
    /// Field-energy identities on random states.
    Verify,
    /// Classical magnet energy for given orientations.
    Classical {
        /// CSV with one `sx,sy,sz` row per particle.
        #[arg(long)]
        orientations: PathBuf,
    },
    /// Small-coupling fit of the truncated-model ground energy.
    FockFit {
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
    },
    /// Ground multiplicity of the truncated model against A_1.
    Multiplicity {
        #[arg(long, value_delimiter = ',', required = true)]
        g: Vec<f64>,
    },
}

/// Reads `sx,sy,sz` rows; a non-numeric first line is taken as a header.
pub fn parse_orientations(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 3 => {
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("orientations line {}: not a unit vector (norm {n})", i + 1)));
                }
                out.push([v[0], v[1], v[2]]);
            }
            Err(_) if out.is_empty() && i == 0 => continue,
            _ => return Err(Error::Config(format!("orientations line {}: expected three numbers", i + 1))),
        }
    }
    Ok(out)
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spinqed-out"))
}

fn manifest(cli: &Cli, cfg: &RunConfig, suite: &Suite, report: Option<&SuiteReport>, error: Option<&Error>, artifacts: &[String]) -> String {
    let value = json!({
        "tool": "spinqed",
        "version": env!("CARGO_PKG_VERSION"),
        "suite": suite.name(),
        "seed": cli.seed,
        "threads": cli.threads,
        "config": cfg,
        "grids": cfg.grids,
        "n_max": cfg.grids.n_max,
        "tolerances": cfg.tolerances,
        "arguments": report.map(|r| r.arguments.clone()),
        "checks": report.map(|r| r.checks.clone()),
        "details": report.map(|r| r.details.clone()),
        "error": error.map(|e| e.to_string()),
        "artifacts": artifacts,
    });
    serde_json::to_string_pretty(&value).expect("json") + "\n"
}

fn execute(cli: &Cli, cfg: &RunConfig, suite: &Suite, dir: &Path) -> Result<i32> {
    std::fs::create_dir_all(dir)?;
    let stem = suite.name().replace('-', "_");
    let manifest_name = format!("{stem}_manifest.json");
    match run_suite(cfg, suite, cli.seed) {
        Ok(report) => {
            let mut artifacts = Vec::new();
            for (name, contents) in &report.files {
                output::write_file(dir, name, contents)?;
                artifacts.push(name.clone());
            }
            let checks_name = format!("{stem}_checks.csv");
            output::write_file(dir, &checks_name, &checks_table(&report.checks).to_csv())?;
            artifacts.push(checks_name);
            artifacts.push(manifest_name.clone());
            output::write_file(dir, &manifest_name, &manifest(cli, cfg, suite, Some(&report), None, &artifacts))?;
            for m in &report.messages {
                println!("{m}");
            }
            for c in &report.checks {
                println!("{}", c.summary());
            }
            let passed = report.checks.iter().filter(|c| c.pass).count();
            println!("{}: {passed}/{} checks passed", suite.name(), report.checks.len());
            Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
        }
        Err(e) => {
            let artifacts = vec![manifest_name.clone()];
            output::write_file(dir, &manifest_name, &manifest(cli, cfg, suite, None, Some(&e), &artifacts))?;
            println!("FAIL {}: {e}", suite.name());
            Ok(EXIT_FAIL)
        }
    }
}

fn prepare(cli: &Cli) -> Result<(RunConfig, Suite)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config FILE is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let suite = match &cli.command {
        Command::Kernel { at } => Suite::Kernel { at: [at[0], at[1], at[2]] },
        Command::E2 => Suite::E2,
        Command::Verify => Suite::Verify,
        Command::Classical { orientations } => {
            let text = std::fs::read_to_string(orientations)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", orientations.display())))?;
            Suite::Classical { orientations: parse_orientations(&text)? }
        }
        Command::FockFit { scales } => Suite::FockFit { scales: scales.clone() },
        Command::Multiplicity { g } => Suite::Multiplicity { g: g.clone() },
    };
    Ok((cfg, suite))
}

/// Runs the program on `args` and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let (cfg, suite) = match prepare(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let dir = output_dir(&cli, &cfg);
    let run = || execute(&cli, &cfg, &suite, &dir);
    let result = match cli.threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: cannot start {n} threads: {e}");
                return EXIT_USAGE;
            }
        },
        Some(_) => {
            eprintln!("error: --threads must be positive");
            return EXIT_USAGE;
        }
        None => run(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}
