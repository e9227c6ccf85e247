use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pnrsim::fock::{DensityMatrixJson, FockDensityMatrix};
use pnrsim::pipeline::{
    emit_table1, emit_table2, labelled_events, read_json, reconstruct, run_calibration_bench, run_experiment,
    write_atomic, write_events, write_json, write_waveforms, ExperimentId, PipelineConfig, PipelineError, RunReport,
};
use pnrsim::stategen::{generate_conditional, generate_onoff, HeraldedState, LossBudget};
use pnrsim::tomo::{sample_quadratures, wigner, wigner_origin, QuadratureDataset, TomoError, WignerGrid};

/// Heralded photon-subtraction simulator with optically sampled SNSPD readout.
#[derive(Debug, Parser)]
#[command(name = "pnrsim", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML config file or preset name (paper-exp1, paper-exp2, paper-exp3, paper-calib).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Multiplies sample and event counts.
    #[arg(long, global = true, value_name = "FLOAT")]
    scale: Option<f64>,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the heralded signal state as JSON.
    GenerateState {
        /// Idler count to condition on.
        #[arg(long, default_value_t = 1, conflicts_with = "on_off")]
        herald: usize,
        /// Condition on any click instead of an exact count.
        #[arg(long)]
        on_off: bool,
    },
    /// Sample homodyne quadratures from a density-matrix JSON file.
    SampleHomodyne {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
        /// Samples per phase; defaults to the config.
        #[arg(long)]
        n_per_phase: Option<usize>,
    },
    /// Maximum-likelihood reconstruction from a quadrature CSV.
    Tomography {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Bootstrap resamples; defaults to the config.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Wigner function of a density-matrix JSON file on the configured grid.
    Wigner {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
    },
    /// Example SNSPD traces and a labelled event record.
    SimulateWaveforms {
        /// Traces per photon number.
        #[arg(long, default_value_t = 20)]
        traces: usize,
    },
    /// Timing calibration bench: conversion factor, jitter and resolution.
    Calibrate,
    /// Full generation, sampling and tomography run.
    RunExperiment {
        #[arg(value_enum)]
        id: ExperimentArg,
    },
    /// Photon-number and loss-budget tables from finished runs under --out.
    Report,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Exp1,
    #[value(name = "exp2-onoff")]
    Exp2Onoff,
    #[value(name = "exp2-pnrd")]
    Exp2Pnrd,
    Exp3,
    /// All four, each from its own preset unless --config is given.
    All,
}

impl ExperimentArg {
    fn ids(self) -> Vec<ExperimentId> {
        match self {
            Self::Exp1 => vec![ExperimentId::Exp1],
            Self::Exp2Onoff => vec![ExperimentId::Exp2OnOff],
            Self::Exp2Pnrd => vec![ExperimentId::Exp2Pnrd],
            Self::Exp3 => vec![ExperimentId::Exp3],
            Self::All => ExperimentId::ALL.to_vec(),
        }
    }
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<TomoError> for Failure {
    fn from(e: TomoError) -> Self {
        match e {
            TomoError::InsufficientPhases(_) | TomoError::MissingPhase(_) | TomoError::InvalidInput(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl GlobalArgs {
    fn config(&self, default_preset: &str) -> CliResult<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::preset(default_preset)?,
        };
        if let Some(seed) = self.seed {
            config.seeds.master = seed;
        }
        if let Some(scale) = self.scale {
            config = config.scaled(scale)?;
        }
        Ok(config)
    }

    fn out_dir(&self, config: &PipelineConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| config.output_dir.clone())
    }
}

fn read_state(path: &Path) -> CliResult<FockDensityMatrix> {
    let json: DensityMatrixJson = read_json(path)?;
    FockDensityMatrix::from_json(&json).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> CliResult<QuadratureDataset> {
    let file = std::fs::File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    QuadratureDataset::read_csv(std::io::BufReader::new(file)).map_err(Failure::from)
}

fn print_report(report: &RunReport) {
    if let Some(t) = &report.tomography {
        println!(
            "{}: W(0,0) = {:.4}{}  P(1) = {:.4}  squeezing {:.2}/{:.2} dB  herald p = {:.3e}",
            report.experiment,
            t.w00,
            t.w00_sigma.map(|s| format!(" ± {s:.4}")).unwrap_or_default(),
            t.photon_numbers[1],
            t.squeeze_db,
            t.antisqueeze_db,
            t.herald_probability,
        );
        if !t.mle_converged {
            eprintln!("warning: {} reconstruction stopped at the iteration cap", report.experiment);
        }
        if t.bootstrap_underpowered {
            eprintln!("warning: {} bootstrap uses only {} resamples", report.experiment, t.bootstrap_resamples);
        }
    }
    if let Some(c) = &report.calibration {
        println!(
            "calib: conversion {:.3e} V/s  jitter {:.2} ps  resolution {:.2} ps",
            c.conversion_factor,
            c.jitter_fwhm * 1e12,
            c.resolution_fwhm * 1e12
        );
    }
    if let Some(t) = report.wall_time {
        eprintln!("{} finished in {:.1} s", report.experiment, t.as_secs_f64());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match cli.command {
        Command::GenerateState { herald, on_off } => {
            let config = g.config("paper-exp1")?;
            let gen = config.generation.resolve()?;
            let state: HeraldedState = if on_off { generate_onoff(&gen) } else { generate_conditional(&gen, herald) }
                .map_err(|e| {
                Failure::from(PipelineError::StateGen { context: "generate-state".into(), source: e })
            })?;
            let path = g.out_dir(&config).join("heralded_state.json");
            write_json(&path, &state)?;
            println!("herald probability {:.4e}; wrote {}", state.herald_probability, path.display());
        }
        Command::SampleHomodyne { state, n_per_phase } => {
            let config = g.config("paper-exp1")?;
            let rho = read_state(&state)?;
            let n = n_per_phase.unwrap_or(config.tomo.n_per_phase);
            let data = sample_quadratures(&rho, &config.tomo.phases, n, config.seeds.master)?;
            let path = g.out_dir(&config).join("dataset.csv");
            write_atomic(&path, |w| data.write_csv(w).map_err(std::io::Error::other))?;
            println!("wrote {} records to {}", data.len(), path.display());
        }
        Command::Tomography { data, bootstrap: resamples } => {
            let config = g.config("paper-exp1")?;
            let raw = read_dataset(&data)?;
            let resamples = resamples.unwrap_or_else(|| config.bootstrap_resamples());
            let (result, _) = reconstruct(&raw, &config.tomo, resamples, config.seeds.master)?;
            let path = g.out_dir(&config).join("tomography.json");
            write_json(&path, &result)?;
            println!(
                "W(0,0) = {:.5}  {} iterations, log-likelihood {:.6e}; wrote {}",
                wigner_origin(&result.rho),
                result.iterations,
                result.log_likelihood,
                path.display()
            );
            if !result.converged {
                return Err(Failure::Numerical(format!(
                    "no convergence in {} iterations; best iterate written",
                    result.iterations
                )));
            }
        }
        Command::Wigner { state } => {
            let config = g.config("paper-exp1")?;
            let rho = read_state(&state)?;
            let axis = WignerGrid::symmetric_axis(config.tomo.wigner_half_width, config.tomo.wigner_step);
            let grid = wigner(&rho, &axis, &axis);
            let path = g.out_dir(&config).join("wigner.csv");
            write_atomic(&path, |w| grid.write_csv(w).map_err(std::io::Error::other))?;
            println!("W(0,0) = {:.5}; wrote {}", wigner_origin(&rho), path.display());
        }
        Command::SimulateWaveforms { traces } => {
            let config = g.config("paper-calib")?;
            let out = g.out_dir(&config);
            write_waveforms(&config, traces, &out.join("waveforms.csv"))?;
            let (_, events) = labelled_events(&config)?;
            write_events(&out.join("events.csv"), &events)?;
            let bench = &config.bench;
            println!(
                "wrote {} events and {} traces to {}",
                events.len(),
                traces * bench.photon_probs.len(),
                out.display()
            );
        }
        Command::Calibrate => {
            let config = g.config("paper-calib")?;
            let report = run_calibration_bench(&config, &g.out_dir(&config))?;
            print_report(&report);
        }
        Command::RunExperiment { id } => {
            let ids = id.ids();
            let all = ids.len() > 1;
            let mut reports = Vec::new();
            for id in ids {
                let config = g.config(id.default_preset())?;
                let out = if all {
                    g.out.clone().unwrap_or_else(|| PathBuf::from("out")).join(id.as_str())
                } else {
                    g.out_dir(&config)
                };
                let report = run_experiment(id, &config, &out)?;
                print_report(&report);
                reports.push(report);
            }
            if all {
                let out = g.out.clone().unwrap_or_else(|| PathBuf::from("out"));
                emit_table1(&reports, &out.join("table1.csv"))?;
                emit_table2(&LossBudget::MEASURED, &out.join("table2.csv"))?;
            }
        }
        Command::Report => {
            let out = g.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let mut reports = Vec::new();
            for id in ExperimentId::ALL {
                let path = out.join(id.as_str()).join("report.json");
                if path.exists() {
                    reports.push(read_json::<RunReport>(&path)?);
                }
            }
            emit_table1(&reports, &out.join("table1.csv"))?;
            emit_table2(&LossBudget::MEASURED, &out.join("table2.csv"))?;
            for r in &reports {
                print_report(r);
            }
            println!("wrote {} and {}", out.join("table1.csv").display(), out.join("table2.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
