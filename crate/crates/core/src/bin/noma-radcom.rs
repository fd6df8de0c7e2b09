use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noma_radcom::benchmarks::Scheme;
use noma_radcom::harness::{
    emit_beampattern, run_ideal_pattern, run_single, run_sweep, ExperimentConfig, SweepVariable,
};
use noma_radcom::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "noma-radcom", version, about = "NOMA-aided joint radar and multicast-unicast beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radar-only beampattern design.
    IdealPattern(Common),
    /// All selected schemes on one channel realization.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Realization index.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Monte-Carlo sweep.
    Sweep(Common),
    /// Beampatterns of all selected schemes on one realization.
    Beampattern {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct Common {
    /// Flat TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_antennas: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_b_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_p_db: Option<f64>,
    #[arg(long)]
    rate_multicast_min: Option<f64>,
    /// Comma-separated subset of noma, tdma, cbf_no_sic, radar_only.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// gamma_b_db, gamma_p_db or n_antennas.
    #[arg(long)]
    sweep_variable: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sweep_values: Option<Vec<f64>>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.output_dir {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.n_antennas {
            c.n_antennas = v;
        }
        if let Some(v) = self.gamma_b_db {
            c.gamma_b_db = v;
        }
        if let Some(v) = self.gamma_p_db {
            c.gamma_p_db = v;
        }
        if let Some(v) = self.rate_multicast_min {
            c.rate_multicast_min = v;
        }
        if let Some(list) = &self.schemes {
            c.schemes = list
                .iter()
                .map(|s| Scheme::parse(s.trim()).ok_or_else(|| Error::Config(format!("unknown scheme {s:?}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.sweep_variable {
            let var: SweepVariable = serde_json::from_value(serde_json::Value::String(v.clone()))
                .map_err(|_| Error::Config(format!("unknown sweep variable {v:?}")))?;
            c.sweep_variable = Some(var);
        }
        if let Some(v) = &self.sweep_values {
            c.sweep_values = v.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::IdealPattern(common) => {
            let config = common.load()?;
            let sol = run_ideal_pattern(&config)?;
            println!("delta_star {:e} delta0 {:e}", sol.delta_star, sol.delta0);
            println!("wrote {}", config.output_dir.display());
        }
        Command::Solve { common, trial } => {
            let config = common.load()?;
            let run = run_single(&config, trial)?;
            let mut any = false;
            for (scheme, rep) in &run.reports {
                match rep {
                    Ok(r) => {
                        any |= r.status() == noma_radcom::noma::RunStatus::Converged;
                        println!(
                            "{scheme}: {:?} unicast {:?} multicast {:?} mismatch {:?}",
                            r.status(),
                            r.unicast(),
                            r.multicast(),
                            r.mismatch_ratio()
                        );
                    }
                    Err(e) => println!("{scheme}: error: {e}"),
                }
            }
            if !any && !run.reports.is_empty() {
                return Ok(ExitCode::from(EXIT_ALL_FAILED));
            }
        }
        Command::Sweep(common) => {
            let config = common.load()?;
            let res = run_sweep(&config)?;
            for s in &res.summary {
                println!(
                    "{:?} {}: converged {}/{} unicast {:?}",
                    s.sweep_value, s.scheme, s.converged, s.trials, s.mean_unicast
                );
            }
            if res.all_failed() {
                return Ok(ExitCode::from(EXIT_ALL_FAILED));
            }
        }
        Command::Beampattern { common, trial } => {
            let config = common.load()?;
            let export = emit_beampattern(&config, trial)?;
            for c in &export.columns {
                println!("{}: mismatch ratio {:e}", c.scheme, c.mismatch_ratio);
            }
            for (s, note) in &export.omitted {
                println!("{s}: omitted ({note})");
            }
            if export.columns.iter().all(|c| c.scheme == Scheme::RadarOnly) && !export.omitted.is_empty() {
                return Ok(ExitCode::from(EXIT_ALL_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
