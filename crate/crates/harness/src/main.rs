use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use infdim_core::diagnostics::ess;
use infdim_core::models::{HyperPrior, LatticePriorConfig, LgcpConfig, LogisticPriorConfig};
use infdim_harness::config::{load_compare_config, load_config, DataSource, ModelSpec, SynthesisSpec};
use infdim_harness::dataset::{write_dataset, write_field};
use infdim_harness::model::synthesize;
use infdim_harness::output::{acf_csv, read_trace};
use infdim_harness::{run_comparison, run_experiment, HarnessError, Result};

#[derive(Parser)]
#[command(name = "infdim", version, about = "Adaptive function-space MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `run.output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one base experiment under several kernels and tabulate ESS.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset and the field it was drawn from.
    Simulate {
        #[arg(long, value_enum)]
        model: SimModel,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Experiment config supplying the model hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// ESS and ACF of every column of a trace file.
    Diagnose {
        #[arg(long)]
        trace: PathBuf,
        /// Drop rows with `iter` at or below this value.
        #[arg(long, default_value_t = 0)]
        burn_in: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
        lags: Vec<usize>,
        /// Write `acf.csv` and `ess.csv` here instead of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimModel {
    Logistic,
    BinomialLattice,
    Lgcp,
}

impl SimModel {
    fn name(self) -> &'static str {
        match self {
            SimModel::Logistic => "logistic",
            SimModel::BinomialLattice => "binomial_lattice",
            SimModel::Lgcp => "lgcp",
        }
    }

    /// Desk-scale defaults: 200 points in the plane, a 32×32 lattice.
    fn default_spec(self, s: SynthesisSpec) -> ModelSpec {
        match self {
            SimModel::Logistic => ModelSpec::Logistic {
                prior: LogisticPriorConfig { kernel_variance: 1.0, lengthscale: 1.0, jitter: None, truncation: None },
                data: DataSource::Synthesis(SynthesisSpec { n_points: Some(200), input_dim: Some(2), ..s }),
            },
            SimModel::BinomialLattice => ModelSpec::BinomialLattice {
                prior: LatticePriorConfig { n1: 32, n2: 32, kappa: 0.3, sigma: 1.0, precision_exponent: 2.0 },
                data: DataSource::Synthesis(SynthesisSpec { obs_fraction: Some(0.5), ..s }),
            },
            SimModel::Lgcp => ModelSpec::Lgcp {
                params: LgcpConfig {
                    n1: 32,
                    n2: 32,
                    cell_area: 1.0,
                    cell_size: 1000.0,
                    sigma: 1.0,
                    tau: 10f64.exp(),
                    hyper_prior: HyperPrior::default(),
                },
                data: DataSource::Synthesis(s),
            },
        }
    }
}

fn out_dir(config: &Path, explicit: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    explicit.or(configured).unwrap_or_else(|| {
        let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}_out"))
    })
}

fn simulate(model: SimModel, seed: u64, out: &Path, config: Option<&Path>) -> Result<()> {
    let seeds = SynthesisSpec {
        true_field_seed: seed,
        obs_seed: seed.wrapping_add(1),
        n_points: None,
        input_dim: None,
        obs_fraction: None,
        trials_mean: None,
    };
    let spec = match config {
        None => model.default_spec(seeds),
        Some(path) => {
            let cfg = load_config(path)?;
            let keep = |d: &DataSource| match d {
                DataSource::Synthesis(s) => {
                    SynthesisSpec { true_field_seed: seed, obs_seed: seed.wrapping_add(1), ..s.clone() }
                }
                DataSource::Path(_) => match model.default_spec(seeds.clone()) {
                    ModelSpec::Logistic { data: DataSource::Synthesis(s), .. }
                    | ModelSpec::BinomialLattice { data: DataSource::Synthesis(s), .. }
                    | ModelSpec::Lgcp { data: DataSource::Synthesis(s), .. } => s,
                    _ => unreachable!("default specs synthesise"),
                },
            };
            match cfg.model {
                ModelSpec::Logistic { prior, data } if model == SimModel::Logistic => {
                    ModelSpec::Logistic { prior, data: DataSource::Synthesis(keep(&data)) }
                }
                ModelSpec::BinomialLattice { prior, data } if model == SimModel::BinomialLattice => {
                    ModelSpec::BinomialLattice { prior, data: DataSource::Synthesis(keep(&data)) }
                }
                ModelSpec::Lgcp { params, data } if model == SimModel::Lgcp => {
                    ModelSpec::Lgcp { params, data: DataSource::Synthesis(keep(&data)) }
                }
                other => {
                    return Err(HarnessError::invalid(format!(
                        "--model {} does not match the config's {} model",
                        model.name(),
                        other.kind_name()
                    )))
                }
            }
        }
    };
    let (data, field) = synthesize(&spec)?.expect("synthesis spec");
    write_dataset(out, &data)?;
    let stem = out.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
    let field_path = out.with_file_name(format!("{stem}_field.csv"));
    write_field(&field_path, &field)?;
    let (rows, cols) = data.dims();
    println!("wrote {} ({rows} rows, dimension {cols}) and {}", out.display(), field_path.display());
    Ok(())
}

fn diagnose(trace: &Path, burn_in: u64, lags: &[usize], out: Option<&Path>) -> Result<()> {
    let columns = read_trace(trace, burn_in)?;
    let n = columns.values.first().map_or(0, Vec::len);
    if lags.is_empty() || lags.iter().any(|&l| l == 0 || l >= n) {
        return Err(HarnessError::invalid(format!("lags must be positive and below the {n} retained rows")));
    }
    let acf = acf_csv(&columns, lags)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["coord", "ess", "ess_per_row"])?;
    for (name, col) in columns.names.iter().zip(&columns.values) {
        let e = ess(col)?.ess;
        w.write_record([name.clone(), e.to_string(), (e / n as f64).to_string()])?;
    }
    let ess_table = w.into_inner().map_err(|e| HarnessError::invalid(e.to_string()))?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            for (name, bytes) in [("acf.csv", &acf), ("ess.csv", &ess_table)] {
                let p = dir.join(name);
                std::fs::write(&p, bytes).map_err(|e| HarnessError::io(&p, e))?;
            }
        }
        None => {
            print!("{}", String::from_utf8_lossy(&ess_table));
            println!();
            print!("{}", String::from_utf8_lossy(&acf));
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = load_config(&config)?;
            cfg.run.output_dir = Some(out_dir(&config, out, cfg.run.output_dir.take()));
            let r = run_experiment(&cfg)?;
            let s = &r.summary;
            println!(
                "{}: acceptance {:.3}, final beta {:.4}, min ESS {:.1}, median ESS {:.1}, {:.2}s",
                s.kernel, s.acceptance_rate, s.final_beta, s.ess.min_ess, s.ess.median_ess, r.wall_seconds
            );
            if let Some(p) = &r.paths {
                println!("results in {}", p.summary.parent().unwrap_or(Path::new(".")).display());
            }
        }
        Command::Compare { config, out } => {
            let mut cfg = load_compare_config(&config)?;
            cfg.base.run.output_dir = Some(out_dir(&config, out, cfg.base.run.output_dir.take()));
            let cmp = run_comparison(&cfg)?;
            print!("{}", cmp.to_text());
        }
        Command::Simulate { model, seed, out, config } => simulate(model, seed, &out, config.as_deref())?,
        Command::Diagnose { trace, burn_in, lags, out } => diagnose(&trace, burn_in, &lags, out.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
