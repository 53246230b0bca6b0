use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memsched::config::ExperimentConfig;
use memsched::experiment::{self, SimulateOptions};
use memsched::Error;

#[derive(Parser)]
#[command(name = "memsched", version, about = "Downlink scheduling over unprobed Markov ON/OFF channels")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<u64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Worker threads for replications (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulator and write summary.json and series.csv.
    Simulate {
        /// Also write a per-slot trace.csv for the first replication.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep the inner and outer capacity bounds into sweep.csv.
    Region {
        /// File with one direction vector per line.
        #[arg(long)]
        directions: Option<PathBuf>,
    },
    /// Convert between per-round selection and time-fraction weights.
    ConvertWeights {
        /// JSON file `{"kind": ..., "weights": {"bitstring": w}}`.
        input: PathBuf,
    },
    /// Run the oracle suite; exit 0 only if every check passes.
    Verify {
        /// Shorter horizons and looser slack.
        #[arg(long)]
        quick: bool,
    },
    /// Inspect configuration.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the default config as TOML.
    ShowDefaults,
    /// Validate the config given with --config.
    Check,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
        cfg.burn_in = cfg.burn_in.min(h / 10);
    }
    if let Some(r) = cli.replications {
        cfg.replications = r;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = load(cli)?;
    let out = cfg.output.dir.clone();
    match &cli.command {
        Command::Simulate { trace } => {
            let res = experiment::cmd_simulate(&cfg, &SimulateOptions { out_dir: out, trace: *trace })?;
            for (n, th) in res.summary.mean_throughput.iter().enumerate() {
                println!("channel {}: throughput {th:.5}", n + 1);
            }
            println!("sum throughput {:.5}", res.summary.mean_sum_throughput);
            for f in &res.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Region { directions } => {
            let res = experiment::cmd_region(&cfg, directions.as_deref(), &out)?;
            for w in &res.warnings {
                log::warn!("{w}");
                eprintln!("warning: {w}");
            }
            if let Some(g) = res.summary.memory_gain {
                println!("memory gain (c_N - c_1)/c_1 = {:.2}%", 100.0 * g);
            }
            println!("wrote {} directions to {}", res.rows.len(), out.join("sweep.csv").display());
        }
        Command::ConvertWeights { input } => {
            let res = experiment::cmd_convert_weights(&cfg, input, &out)?;
            println!("{}", serde_json::to_string_pretty(&res)?);
        }
        Command::Verify { quick } => {
            let verdicts = experiment::cmd_verify(&cfg, *quick, &out)?;
            let failed: Vec<_> = verdicts.iter().filter(|v| !v.pass).collect();
            for v in &verdicts {
                println!("{} {} (statistic {:.6e}, bound {:.6e})", if v.pass { "PASS" } else { "FAIL" }, v.experiment, v.statistic, v.bound);
            }
            if !failed.is_empty() {
                eprintln!("{} check(s) failed:", failed.len());
                for v in failed {
                    eprintln!("  {}", v.experiment);
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Config { action: ConfigAction::ShowDefaults } => print!("{}", ExperimentConfig::default().to_toml()?),
        Command::Config { action: ConfigAction::Check } => {
            cfg.validate()?;
            println!("config ok");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                _ if e.is_validation() => 2,
                Error::BeliefFloor { .. }
                | Error::DwellAccounting { .. }
                | Error::UnreachableBelief { .. }
                | Error::DominanceViolated { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
