use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlperi_cli::config::ExperimentConfig;
use nlperi_cli::experiments;
use nlperi_cli::{init_threads, CliError, Result};

#[derive(Parser)]
#[command(name = "nlperi", version, about = "Experiments for coupled nonlocal operators on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (ϖI + 𝕃)u = F and write u, D^s u, Υ^s u and the convergence log.
    Solve(Common),
    /// Refinement table of ‖Υ^s u‖_p for rough coefficients.
    Meyers(Common),
    /// Bessel-norm ratios over the seeded field family.
    Characterize(Common),
    /// g-function identity and pointwise domination ratios.
    Gfunction(Common),
    /// Run the identity checks; `--check NAME` selects one group.
    Verify(Common),
    /// q = 2 Korn bounds over random Helmholtz mixtures.
    Korn(Common),
    /// Finite-horizon symbols against the local limit.
    LocalLimit(Common),
    /// Print the default configuration as TOML.
    Defaults,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated exponents.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    check: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.s {
            cfg.s = v;
        }
        if let Some(v) = &self.p {
            cfg.p_list = v.clone();
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (name, common) = match &cli.command {
        Command::Defaults => {
            print!("{}", ExperimentConfig::default().to_toml());
            return Ok(true);
        }
        Command::Solve(c) => ("solve", c),
        Command::Meyers(c) => ("meyers", c),
        Command::Characterize(c) => ("characterize", c),
        Command::Gfunction(c) => ("gfunction", c),
        Command::Verify(c) => ("verify", c),
        Command::Korn(c) => ("korn", c),
        Command::LocalLimit(c) => ("local-limit", c),
    };
    if common.check.is_some() && name != "verify" {
        return Err(CliError::Config("--check applies to verify only".into()));
    }
    let mut cfg = common.config()?;
    cfg.experiment = name.to_string();
    let out = cfg.output.dir.clone();
    let report = experiments::run(name, &cfg, Some(&out), common.check.as_deref())?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("report: {}", out.join(format!("{}{name}.json", cfg.output.prefix)).display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
