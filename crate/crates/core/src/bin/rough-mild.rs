use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rough_mild::config::RunConfig;
use rough_mild::fbm_noise::{check_summability, noise_field, NoiseSpec, QRule};
use rough_mild::heat_app::{
    check_conditions, solve_linear_heat, solve_nonlinear_heat, NonlinearRun, ScalarNonlinearity,
};
use rough_mild::holder_paths::{self, SampledPath};
use rough_mild::mild_convolution::{
    convolve, grid_convolution, level_study, rate_table, separable_driver, write_rate_csv,
    DyadicConvolutionConfig, SampledDriver,
};
use rough_mild::scale_space::{eigenvalue, ScaleIndex, SpectralElement};
use rough_mild::young::scalar_rate_study;
use rough_mild::{Error, Result};

#[derive(Parser)]
#[command(name = "rough-mild", version, about = "Mild solutions of heat equations driven by rough paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a fractional noise field and write it as a path CSV.
    NoiseGen {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        modes: usize,
        /// Number of time steps (a power of two).
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        seed: u64,
        /// `const` or `pow:a`.
        #[arg(long, default_value = "const", conflicts_with = "q_file")]
        q_rule: String,
        /// One coefficient per line.
        #[arg(long)]
        q_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convolve a driver path with the heat semigroup.
    Convolve {
        #[arg(long)]
        driver: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        max_level: u32,
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rates: Option<PathBuf>,
    },
    /// Additive heat equation from zero initial data.
    SolveLinear {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heat equation with a pointwise nonlinear coefficient.
    SolveNonlinear {
        #[arg(long)]
        spec: PathBuf,
        /// `sin`, `tanh` or `poly:c0,c1,c2`.
        #[arg(long, default_value = "sin")]
        sigma: String,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Convergence table for the dyadic or the Young scheme.
    RateStudy {
        #[arg(long, value_enum)]
        which: Which,
        /// Inclusive range `a..b`.
        #[arg(long, default_value = "4..14")]
        levels: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print admissibility verdicts; exit status 0 iff admissible.
    Check {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "nonlinear")]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Dyadic,
    Young,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Linear,
    Nonlinear,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_levels(s: &str) -> Result<std::ops::RangeInclusive<u32>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("levels `{s}`: expected a..b")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("level `{v}`: {e}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b || b > 24 {
        return Err(Error::InvalidConfig(format!("levels must satisfy a ≤ b ≤ 24, got {a}..{b}")));
    }
    Ok(a..=b)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::NoiseGen {
            hurst,
            mu,
            modes,
            steps,
            horizon,
            seed,
            q_rule,
            q_file,
            out,
        } => {
            let q_rule = match q_file {
                Some(f) => QRule::from_file(&f)?,
                None => QRule::parse(&q_rule)?,
            };
            let summability = check_summability(&q_rule, modes, mu);
            log::info!("Σ(q_n/n^μ)²: {:?}", summability.verdict);
            let spec = NoiseSpec {
                hurst,
                q_rule,
                mu,
                n_modes: modes,
                time_steps: steps,
                horizon,
                seed,
            };
            // the file does not record a scale; readers declare it
            noise_field(&spec, ScaleIndex(0.0))?.write_csv(create(&out)?)?;
        }
        Command::Convolve {
            driver,
            alpha,
            gamma,
            delta,
            kappa,
            beta,
            max_level,
            tol,
            out,
            rates,
        } => {
            let cfg = match beta {
                Some(b) => DyadicConvolutionConfig::with_beta(alpha, gamma, delta, b, kappa, max_level, tol)?,
                None => DyadicConvolutionConfig::new(alpha, gamma, delta, kappa, max_level, tol)?,
            };
            let x = SampledPath::read_csv(BufReader::new(File::open(&driver)?), ScaleIndex(-alpha))?;
            grid_convolution(&x, ScaleIndex(delta))?.write_csv(create(&out)?)?;
            if let Some(rates) = rates {
                let result = convolve(&SampledDriver::new(&x)?, x.horizon(), &cfg)?;
                log::info!("levels used {}, stop {:?}", result.levels_used, result.stop);
                let hx = holder_paths::holder_seminorm(&x, gamma, x.scale())?.seminorm;
                let rows = rate_table(&result.level_increments, x.horizon(), hx, &cfg);
                write_rate_csv(&rows, create(&rates)?)?;
            }
        }
        Command::SolveLinear { spec, out } => {
            let cfg = RunConfig::load(&spec)?;
            let report = solve_linear_heat(&cfg.noise, &cfg.budget)?;
            log::info!("H_κ(Y; ℬ_δ) = {}", report.holder_kappa);
            report.solution.write_csv(create(&out)?)?;
        }
        Command::SolveNonlinear {
            spec,
            sigma,
            horizon,
            out,
            meta,
        } => {
            let cfg = RunConfig::load(&spec)?;
            let run = NonlinearRun {
                sigma: ScalarNonlinearity::parse(&sigma)?,
                initial: cfg.initial_state()?,
                grid_intervals: cfg.grid_intervals(),
                horizon,
                solver: cfg.solver_config(),
            };
            let report = solve_nonlinear_heat(&cfg.noise, &cfg.budget, &run)?;
            if report.exploded {
                log::warn!("solution stopped at t = {}", report.final_time);
            }
            report.solution.write_csv(create(&out)?)?;
            if let Some(meta) = meta {
                report.write_meta(create(&meta)?)?;
            }
        }
        Command::RateStudy { which, levels, out } => {
            let levels = parse_levels(&levels)?;
            let rows = match which {
                Which::Dyadic => {
                    // X(t) = t^0.9 (e₁ + e₃) in ℬ_{-0.1}
                    let cfg = DyadicConvolutionConfig::with_beta(0.1, 0.9, 0.2, 0.45, 0.3, *levels.end() + 1, 1e-300)?;
                    let profile = SpectralElement::new(vec![1.0, 0.0, 1.0])?;
                    let holder = (eigenvalue(1).powf(-0.2) + eigenvalue(3).powf(-0.2)).sqrt();
                    let x = separable_driver(profile, ScaleIndex(-0.1), |t: f64| t.powf(0.9));
                    level_study(&x, 1.0, holder, &cfg, levels)?
                }
                Which::Young => scalar_rate_study(levels)?,
            };
            write_rate_csv(&rows, create(&out)?)?;
        }
        Command::Check { spec, mode } => {
            let cfg = RunConfig::load(&spec)?;
            let report = check_conditions(&cfg.budget);
            println!("{report}");
            let ok = report.run_admissible()
                && match mode {
                    Mode::Linear => report.linear_admissible(),
                    Mode::Nonlinear => report.nonlinear_admissible(),
                };
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
