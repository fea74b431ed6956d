use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdkr::analysis::{scaling_regression, FitReport};
use qdkr::config::RunConfig;
use qdkr::experiment::{self, PointStatus, SweepGrid};
use qdkr::quantum::{KickStrength, RESONANT_HALF_SIZE};
use qdkr::Error;

/// Quantum double kicked rotor simulations and their analysis.
#[derive(Parser)]
#[command(name = "qdkr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write E(t) as CSV.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run and fit a grid of h̃, K and potentials.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated h̃ values.
        #[arg(long, value_delimiter = ',')]
        tildes: Vec<f64>,
        /// Comma-separated kick strengths.
        #[arg(long, value_delimiter = ',')]
        kicks: Vec<f64>,
        /// Comma-separated potential names.
        #[arg(long, value_delimiter = ',')]
        potentials: Vec<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Phase-space orbits of the pseudoclassical map.
    Portrait {
        #[command(flatten)]
        config: ConfigArgs,
        /// Seeds as `theta:p; theta:p`; empty uses the default set.
        #[arg(long, default_value = "")]
        seeds: String,
        /// Comma-separated potentials; one file per potential.
        #[arg(long, value_delimiter = ',')]
        potentials: Vec<String>,
    },
    /// Fit existing energy-series CSV files.
    Fit {
        files: Vec<PathBuf>,
        /// Append one row per file to this results CSV.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Regress t_c, t_s, E_s against h̃ over a sweep results CSV.
        #[arg(long)]
        scaling: Option<PathBuf>,
    },
    /// Test that U is the identity at ħ = 2π, h̃ = 0.
    CheckAntiresonance {
        #[arg(long, default_value = "va")]
        potential: String,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        vertices: Option<String>,
        #[arg(long = "K", default_value_t = KickStrength::DEFAULT.value())]
        kick: f64,
        #[arg(long, default_value_t = RESONANT_HALF_SIZE)]
        grid: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Flags mirroring the configuration keys; they override the file.
#[derive(Args)]
struct ConfigArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    vertices: Option<String>,
    #[arg(long = "K")]
    kick: Option<String>,
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    tilde: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> qdkr::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("engine", &self.engine),
            ("potential", &self.potential),
            ("g", &self.g),
            ("vertices", &self.vertices),
            ("K", &self.kick),
            ("M", &self.m),
            ("N", &self.n),
            ("tilde", &self.tilde),
            ("steps", &self.steps),
            ("stride", &self.stride),
            ("ensemble", &self.ensemble),
            ("sampling", &self.sampling),
            ("grid", &self.grid),
            ("seed", &self.seed),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{item}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_numerical_guard() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn dispatch(command: Command) -> qdkr::Result<ExitCode> {
    match command {
        Command::Run { config } => {
            let cfg = config.resolve()?;
            let out = experiment::run(&cfg)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if let Some(drift) = out.max_norm_drift {
                println!("max norm drift {drift:.3e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            tildes,
            kicks,
            potentials,
            jobs,
        } => {
            let cfg = config.resolve()?;
            let grid = SweepGrid {
                tilde: tildes,
                kick: kicks,
                potential: potentials,
            };
            let outcome = experiment::sweep(&cfg, &grid, &cfg.output, jobs)?;
            for p in &outcome.points {
                let status = match &p.status {
                    PointStatus::Done => "done".to_string(),
                    PointStatus::Skipped => "skipped".to_string(),
                    PointStatus::Failed(msg) => format!("failed: {msg}"),
                };
                println!(
                    "{} potential={} K={} tilde={} {status}",
                    p.hash, p.config.potential, p.config.kick, p.config.tilde
                );
            }
            println!("wrote {}", outcome.results.display());
            if outcome.failures() > 0 {
                eprintln!(
                    "{} of {} points failed",
                    outcome.failures(),
                    outcome.points.len()
                );
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Portrait {
            config,
            seeds,
            potentials,
        } => {
            let mut cfg = config.resolve()?;
            let seeds = experiment::parse_seeds(&seeds)?;
            let names = if potentials.is_empty() {
                vec![cfg.potential.clone()]
            } else {
                potentials
            };
            let dir = cfg.output.clone();
            for name in names {
                cfg.potential = name;
                cfg.validate()?;
                let orbits = experiment::portrait(&cfg, &seeds)?;
                let path = dir.join(format!("portrait-{}.csv", cfg.potential.replace(':', "")));
                experiment::write_portrait(&cfg, &orbits, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            files,
            results,
            scaling,
        } => {
            if files.is_empty() && scaling.is_none() {
                return Err(Error::Config("fit needs series files or --scaling".into()));
            }
            let mut rows = Vec::new();
            for path in &files {
                let report = experiment::fit(path)?;
                println!("# {}", path.display());
                print!("{}", report.to_text());
                rows.push(report.to_csv_row());
            }
            if let Some(path) = results {
                append_rows(&path, &rows)?;
            }
            if let Some(path) = scaling {
                let reports = experiment::read_sweep_results(&path)?;
                let s = scaling_regression(&reports)?;
                for (name, slope) in [("t_c", s.t_c), ("t_s", s.t_s), ("E_s", s.e_s)] {
                    match slope {
                        Some(v) => println!(
                            "slope_{name} = {:.4} ± {:.4} ({} points)",
                            v.slope, v.se, v.points
                        ),
                        None => println!("slope_{name} = "),
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckAntiresonance {
            potential,
            g,
            vertices,
            kick,
            grid,
            trials,
            seed,
        } => {
            let mut cfg = RunConfig {
                potential,
                g,
                vertices,
                ..Default::default()
            };
            cfg.grid = Some(grid);
            cfg.tilde = 0.0;
            cfg.validate()?;
            let spec = cfg.potential_spec()?;
            let report = experiment::check_antiresonance(
                &spec,
                KickStrength::new(kick)?,
                grid,
                trials,
                seed,
            )?;
            println!("potential = {}", spec.name());
            println!("trials = {}", report.trials);
            println!("max_distance = {:e}", report.max_distance);
            println!("min_distance = {:e}", report.min_distance);
            println!("identity = {}", report.is_identity());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn append_rows(path: &Path, rows: &[String]) -> qdkr::Result<()> {
    let fresh = !path.exists();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(f, "{}", FitReport::csv_header())?;
    }
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}
