use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qcausal::berkson::{
    berkson_bound, physc_distribution, read_mixture_csv, reduce_to_two_terms, write_two_term_csv, FacultyPreset,
};
use qcausal::causal::{build_scenario, ChoiJson, ScenarioId};
use qcausal::pipeline::{classify_counts, run_pipeline, CountWitnessOptions, NoiseModel, RunSpec, DEFAULT_RESAMPLES};
use qcausal::tomography::{
    expected_counts, fit_causal_map, sample_counts, CountData, CountTable, FitConfig, DEFAULT_RUNS, TABLE_SIZE,
};
use qcausal::witness::{classify, Thresholds};

mod error;

use error::CliError;

#[derive(Parser)]
#[command(name = "qcausal", version, about = "Causal maps, causal-structure witnesses and tomography for two-qubit scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the causal Choi state of an example scenario.
    Scenario {
        #[arg(value_enum)]
        id: ScenarioName,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full analysis on simulated counts.
    Pipeline {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimulationArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a causal map from a count table or from simulated counts.
    Fit {
        /// Count table CSV; otherwise counts are simulated from --scenario.
        #[arg(long, conflicts_with = "scenario")]
        counts: Option<PathBuf>,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioName>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[command(flatten)]
        sim: SimulationArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Also write the simulated count table here.
        #[arg(long)]
        save_counts: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the witnesses of a Choi state, a scenario or a count table.
    Witness {
        #[arg(long, value_enum, group = "source")]
        scenario: Option<ScenarioName>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Choi state JSON as written by `scenario` or `fit`.
        #[arg(long, group = "source")]
        choi: Option<PathBuf>,
        /// Count table CSV; error bars come from a Poisson bootstrap.
        #[arg(long, group = "source")]
        counts: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical Berkson quantities.
    Berkson {
        #[command(subcommand)]
        command: BerksonCommand,
    },
}

#[derive(Subcommand)]
enum BerksonCommand {
    /// Largest conditional mutual information a classical mixture can induce.
    Bound {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Conditional mutual information of a preset distribution.
    Mi {
        #[arg(long, value_enum)]
        preset: Preset,
    },
    /// Reduce a mixture CSV to one cause-effect and one common-cause term.
    Reduce {
        #[arg(long)]
        spec: PathBuf,
        /// Where to write the two-term mixture CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioName {
    Probc,
    Physc,
    Probq,
    Coh,
    Epsmix,
}

impl ScenarioName {
    fn resolve(self, eps: f64) -> Result<ScenarioId, CliError> {
        Ok(match self {
            ScenarioName::Probc => ScenarioId::ProbC,
            ScenarioName::Physc => ScenarioId::PhysC,
            ScenarioName::Probq => ScenarioId::ProbQ,
            ScenarioName::Coh => ScenarioId::Coh,
            ScenarioName::Epsmix => ScenarioId::epsilon_mix(eps)?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Physc,
    Comprehensive,
    Specialized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    None,
    Poisson,
}

impl From<Noise> for NoiseModel {
    fn from(n: Noise) -> Self {
        match n {
            Noise::None => NoiseModel::None,
            Noise::Poisson => NoiseModel::Poisson,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioName,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
}

#[derive(Args)]
struct SimulationArgs {
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Noise::Poisson)]
    noise: Noise,
}

#[derive(Args)]
struct FitArgs {
    /// Weight of the no-retrocausation penalty.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl FitArgs {
    fn config(&self, seed: u64) -> FitConfig {
        let defaults = FitConfig::default();
        FitConfig {
            lambda: self.lambda.unwrap_or(defaults.lambda),
            restarts: self.restarts.unwrap_or(defaults.restarts),
            max_iterations: self.max_iterations.unwrap_or(defaults.max_iterations),
            seed,
            ..defaults
        }
    }
}

#[derive(Serialize)]
struct BoundReport {
    n: usize,
    bound_bits: f64,
}

#[derive(Serialize)]
struct MiReport {
    preset: &'static str,
    conditional_mutual_information_bits: f64,
    bound_bits: f64,
    exceeds_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    skill_covariance_given_hired: Option<f64>,
}

#[derive(Serialize)]
struct ReduceReport {
    input_terms: usize,
    cause_effect_weight: String,
    common_cause_weight: String,
    equivalent: bool,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w).map_err(|e| CliError::io(path, e))?;
            log::info!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}

fn read_counts(path: &Path) -> Result<CountTable, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(CountTable::read_csv(BufReader::new(file))?)
}

/// Simulated data: Poisson counts, or the expected counts themselves.
fn simulate(id: ScenarioId, sim: &SimulationArgs) -> Result<Box<dyn CountData>, CliError> {
    let expected = expected_counts(&build_scenario(id)?, sim.runs)?;
    Ok(match sim.noise {
        Noise::Poisson => Box::new(sample_counts(&expected, sim.seed)),
        Noise::None => Box::new(expected),
    })
}

fn rounded_table(data: &dyn CountData) -> Result<CountTable, CliError> {
    let counts = (0..TABLE_SIZE).map(|k| data.value(k).round() as u64).collect::<Vec<_>>();
    let total = counts.iter().sum();
    Ok(CountTable::new(counts, total)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scenario { id, eps, out } => {
            let tau = build_scenario(id.resolve(eps)?)?;
            emit(&tau.to_json(), out.as_deref())
        }
        Command::Pipeline { scenario, sim, fit, resamples, out } => {
            let spec = RunSpec {
                scenario: scenario.scenario.resolve(scenario.eps)?,
                n_runs: sim.runs,
                seed: sim.seed,
                noise: sim.noise.into(),
                fit: fit.config(sim.seed),
                resamples,
                thresholds: Thresholds::default(),
            };
            let report = run_pipeline(&spec)?;
            log::info!("{}: label {} fidelity {:.4}", spec.scenario, report.fitted.label, report.fidelity);
            emit(&report, out.as_deref())?;
            if report.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged)
            }
        }
        Command::Fit { counts, scenario, eps, sim, fit, save_counts, out } => {
            let data: Box<dyn CountData> = match (counts, scenario) {
                (Some(path), _) => Box::new(read_counts(&path)?),
                (None, Some(name)) => simulate(name.resolve(eps)?, &sim)?,
                (None, None) => return Err(CliError::Usage("either --counts or --scenario is required".into())),
            };
            if let Some(path) = save_counts {
                let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
                rounded_table(data.as_ref())?.write_csv(BufWriter::new(file))?;
            }
            let result = fit_causal_map(data.as_ref(), &fit.config(sim.seed))?;
            emit(&result.report(), out.as_deref())?;
            if result.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged)
            }
        }
        Command::Witness { scenario, eps, choi, counts, resamples, seed, fit, out } => {
            let report = match (scenario, choi, counts) {
                (Some(name), _, _) => classify(&build_scenario(name.resolve(eps)?)?, Thresholds::default())?,
                (_, Some(path), _) => {
                    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
                    let json: ChoiJson = serde_json::from_reader(BufReader::new(file))?;
                    classify(&json.to_causal_estimate()?, Thresholds::default())?
                }
                (_, _, Some(path)) => {
                    let table = read_counts(&path)?;
                    let opts = CountWitnessOptions {
                        fit: fit.config(seed),
                        resamples,
                        seed,
                        ..CountWitnessOptions::default()
                    };
                    classify_counts(&table, Some(&table), &opts)?
                }
                _ => return Err(CliError::Usage("one of --scenario, --choi or --counts is required".into())),
            };
            emit(&report, out.as_deref())
        }
        Command::Berkson { command } => berkson(command),
    }
}

fn berkson(command: BerksonCommand) -> Result<(), CliError> {
    match command {
        BerksonCommand::Bound { n } => emit(&BoundReport { n, bound_bits: berkson_bound(n)? }, None),
        BerksonCommand::Mi { preset } => {
            let bound = berkson_bound(2)?;
            let (name, mi, covariance) = match preset {
                Preset::Physc => ("physc", physc_distribution().conditional_mutual_information("c", "d", "b", 0)?, None),
                Preset::Comprehensive | Preset::Specialized => {
                    let (name, faculty) = match preset {
                        Preset::Comprehensive => ("comprehensive", FacultyPreset::Comprehensive),
                        _ => ("specialized", FacultyPreset::Specialized),
                    };
                    let mi =
                        faculty.distribution()?.conditional_mutual_information("skill_a", "skill_b", "hired", 1)?;
                    (name, mi, Some(faculty.skill_covariance_given_hired()?))
                }
            };
            emit(
                &MiReport {
                    preset: name,
                    conditional_mutual_information_bits: mi,
                    bound_bits: bound,
                    exceeds_bound: mi > bound,
                    skill_covariance_given_hired: covariance,
                },
                None,
            )
        }
        BerksonCommand::Reduce { spec, out } => {
            let file = File::open(&spec).map_err(|e| CliError::io(&spec, e))?;
            let mixture = read_mixture_csv(BufReader::new(file))?;
            let reduced = reduce_to_two_terms(&mixture)?;
            let equivalent = reduced.induced()? == mixture.induced();
            if let Some(path) = &out {
                let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                write_two_term_csv(&reduced, BufWriter::new(file))?;
            }
            emit(
                &ReduceReport {
                    input_terms: mixture.terms().len(),
                    cause_effect_weight: reduced.cause_effect_weight.to_string(),
                    common_cause_weight: reduced.common_cause_weight.to_string(),
                    equivalent,
                },
                None,
            )?;
            if equivalent {
                Ok(())
            } else {
                Err(CliError::Numerical("reduced mixture induces a different P(cb|d)".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
