use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::calib::CalibrationSummary;
use super::{write_atomic, write_json, PipelineConfig, PipelineError, Result, TomoSection};
use crate::fock::{apply_loss, photon_number_distribution, squeezed_vacuum, FockDensityMatrix, LossChannel};
use crate::seed::{derive, streams};
use crate::stategen::{generate_conditional, generate_onoff, GenerationConfig, HeraldLabel, HeraldedState};
use crate::tomo::{
    bootstrap, mle_reconstruct, mle_reconstruct_from, sample_quadratures, squeezing_levels, wigner, wigner_at,
    wigner_origin, BootstrapResult, QuadratureDataset, TomoError, TomographyResult, WignerGrid,
};

/// Photon numbers `0..TABLE_ROWS` are reported.
pub const TABLE_ROWS: usize = 7;

/// Off-origin Wigner values reported for comparison with the two-photon data.
const PROBES: [(f64, f64); 2] = [(0.0, -0.92), (0.0, 0.90)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "exp1")]
    Exp1,
    #[serde(rename = "exp2-onoff")]
    Exp2OnOff,
    #[serde(rename = "exp2-pnrd")]
    Exp2Pnrd,
    #[serde(rename = "exp3")]
    Exp3,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [Self::Exp1, Self::Exp2OnOff, Self::Exp2Pnrd, Self::Exp3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exp1 => "exp1",
            Self::Exp2OnOff => "exp2-onoff",
            Self::Exp2Pnrd => "exp2-pnrd",
            Self::Exp3 => "exp3",
        }
    }

    pub fn default_preset(&self) -> &'static str {
        match self {
            Self::Exp1 => "paper-exp1",
            Self::Exp2OnOff | Self::Exp2Pnrd => "paper-exp2",
            Self::Exp3 => "paper-exp3",
        }
    }

    pub fn herald(&self) -> HeraldLabel {
        match self {
            Self::Exp1 | Self::Exp2Pnrd => HeraldLabel::Count(1),
            Self::Exp2OnOff => HeraldLabel::OnOff,
            Self::Exp3 => HeraldLabel::Count(2),
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerPoint {
    pub x: f64,
    pub p: f64,
    pub w: f64,
}

/// Headline numbers of one tomography run. Values come from the emitted
/// files: herald data from `heralded_state.json`, squeezing from
/// `squeezing_dataset.csv`, everything else from `tomography.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographySummary {
    pub generation: GenerationConfig,
    pub herald_label: HeraldLabel,
    /// Per-pulse probability of the heralding outcome.
    pub herald_probability: f64,
    pub squeeze_db: f64,
    pub antisqueeze_db: f64,
    pub n_per_phase: usize,
    pub w00: f64,
    pub w00_sigma: Option<f64>,
    /// `P(n)` for `n = 0..TABLE_ROWS`.
    pub photon_numbers: Vec<f64>,
    pub photon_number_sigmas: Option<Vec<f64>>,
    /// Most negative Wigner value on the `x = 0` line of the emitted grid.
    pub p_axis_min: WignerPoint,
    pub probes: Vec<WignerPoint>,
    pub model_w00: f64,
    pub model_photon_numbers: Vec<f64>,
    pub trace_distance_to_model: f64,
    pub log_likelihood: f64,
    pub mle_iterations: usize,
    pub mle_converged: bool,
    pub bootstrap_resamples: usize,
    pub bootstrap_underpowered: bool,
    pub bootstrap_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSummary>,
    /// Artifact name → path relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
    /// Not written to `report.json`, which must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Option<Duration>,
}

fn stategen_err(id: ExperimentId) -> impl Fn(crate::stategen::StateGenError) -> PipelineError {
    move |source| PipelineError::StateGen { context: format!("{id}: state generation"), source }
}

fn tomo_err(context: String) -> impl Fn(TomoError) -> PipelineError {
    move |source| PipelineError::Tomo { context: context.clone(), source }
}

/// Best iterate even when the iteration cap was hit; the flag travels in the result.
fn accept_best(
    res: std::result::Result<TomographyResult, TomoError>,
) -> std::result::Result<TomographyResult, TomoError> {
    match res {
        Err(TomoError::NonConvergence { best }) => Ok(*best),
        other => other,
    }
}

fn write_dataset(path: &Path, data: &QuadratureDataset) -> Result<()> {
    write_atomic(path, |w| data.write_csv(w).map_err(std::io::Error::other))
}

fn write_wigner(path: &Path, grid: &WignerGrid) -> Result<()> {
    write_atomic(path, |w| grid.write_csv(w).map_err(std::io::Error::other))
}

/// State seen by the homodyne detector without heralding: squeezed vacuum
/// after the tap and the whole signal-side loss.
fn unconditioned_signal(g: &GenerationConfig) -> Result<FockDensityMatrix> {
    let pure = squeezed_vacuum(g.squeezing_r, g.cutoff)?.state.normalized()?.to_density_matrix();
    let loss = LossChannel::new(g.signal_efficiency * (1.0 - g.tap_ratio))?;
    Ok(apply_loss(&pure, &loss).rotated(FRAC_PI_2))
}

/// `[W(0,0), P(0), …, P(TABLE_ROWS−1)]`.
pub fn estimates(rho: &FockDensityMatrix) -> Vec<f64> {
    let p = photon_number_distribution(rho);
    std::iter::once(wigner_origin(rho)).chain((0..TABLE_ROWS).map(|n| p.get(n).copied().unwrap_or(0.0))).collect()
}

pub fn estimate_names() -> Vec<String> {
    std::iter::once("w00".to_string()).chain((0..TABLE_ROWS).map(|n| format!("p{n}"))).collect()
}

/// MLE on shot-noise-normalized data followed by a warm-started bootstrap of
/// [`estimates`]. A reconstruction that hits the iteration cap is returned
/// with `converged == false`.
pub fn reconstruct(
    data: &QuadratureDataset,
    tomo: &TomoSection,
    resamples: usize,
    seed: u64,
) -> std::result::Result<(TomographyResult, Option<BootstrapResult>), TomoError> {
    let binning = tomo.binning();
    let stop = tomo.stop_rule();
    let normalized = data.normalized_to_shot_noise()?;
    let mut result = accept_best(mle_reconstruct(&normalized, tomo.cutoff, &binning, &stop))?;
    if resamples == 0 {
        return Ok((result, None));
    }
    let warm = result.rho.clone();
    let b = bootstrap(data, resamples, seed, |replica| {
        let replica = replica.normalized_to_shot_noise()?;
        let r = accept_best(mle_reconstruct_from(&replica, &warm, &binning, &stop))?;
        Ok(estimates(&r.rho))
    })?;
    result.bootstrap_sigmas = estimate_names().into_iter().zip(b.sigmas.iter().copied()).collect();
    Ok((result, Some(b)))
}

/// Generates the heralded state, samples homodyne data, reconstructs it,
/// and writes every artifact into `out_dir`.
pub fn run_experiment(id: ExperimentId, config: &PipelineConfig, out_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let gen = config.generation.resolve()?;
    let tomo = &config.tomo;
    let seed = config.seeds.master;
    let mut artifacts = BTreeMap::new();
    let mut artifact = |key: &str, name: &str| {
        artifacts.insert(key.to_string(), name.to_string());
        out_dir.join(name)
    };

    write_atomic(&artifact("config", "config.toml"), |w| w.write_all(config.to_toml_string().as_bytes()))?;

    let state: HeraldedState = match id.herald() {
        HeraldLabel::Count(n) => generate_conditional(&gen, n),
        HeraldLabel::OnOff => generate_onoff(&gen),
    }
    .map_err(stategen_err(id))?;
    write_json(&artifact("heralded_state", "heralded_state.json"), &state)?;

    let unconditioned = unconditioned_signal(&gen)?;
    let squeeze_data = sample_quadratures(
        &unconditioned,
        &[0.0, 90.0],
        tomo.n_per_phase.max(2),
        derive(seed, streams::SQUEEZING_CHECK, 0),
    )
    .map_err(tomo_err(format!("{id}: squeezing check")))?;
    write_dataset(&artifact("squeezing_dataset", "squeezing_dataset.csv"), &squeeze_data)?;
    let levels = squeezing_levels(&squeeze_data).map_err(tomo_err(format!("{id}: squeezing check")))?;

    let data = sample_quadratures(&state.rho, &tomo.phases, tomo.n_per_phase, seed)
        .map_err(tomo_err(format!("{id}: homodyne sampling")))?;
    write_dataset(&artifact("dataset", "dataset.csv"), &data)?;

    let (result, boot) =
        reconstruct(&data, tomo, config.bootstrap_resamples(), seed).map_err(tomo_err(format!("{id}: tomography")))?;
    let resamples = boot.as_ref().map_or(0, |b| b.n_resamples);
    if boot.is_some() {
        write_atomic(&artifact("bootstrap", "bootstrap.csv"), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["quantity", "sigma"])?;
            for (name, sigma) in &result.bootstrap_sigmas {
                csv.write_record([name.as_str(), &sigma.to_string()])?;
            }
            csv.flush()
        })?;
    }
    write_json(&artifact("tomography", "tomography.json"), &result)?;

    let axis = WignerGrid::symmetric_axis(tomo.wigner_half_width, tomo.wigner_step);
    let grid = wigner(&result.rho, &axis, &axis);
    write_wigner(&artifact("wigner", "wigner.csv"), &grid)?;
    let p_axis_min = grid
        .p_axis_cut()
        .expect("symmetric axis contains x = 0")
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, w)| WignerPoint { x: 0.0, p, w })
        .expect("non-empty axis");

    let est = estimates(&result.rho);
    let model_est = estimates(&state.rho);
    let sigmas = boot.as_ref().map(|b| b.sigmas.clone());
    let summary = TomographySummary {
        generation: gen,
        herald_label: state.herald_label,
        herald_probability: state.herald_probability,
        squeeze_db: levels.squeeze_db,
        antisqueeze_db: levels.antisqueeze_db,
        n_per_phase: tomo.n_per_phase,
        w00: est[0],
        w00_sigma: sigmas.as_ref().map(|s| s[0]),
        photon_numbers: est[1..].to_vec(),
        photon_number_sigmas: sigmas.as_ref().map(|s| s[1..].to_vec()),
        p_axis_min,
        probes: PROBES.iter().map(|&(x, p)| WignerPoint { x, p, w: wigner_at(&result.rho, x, p) }).collect(),
        model_w00: model_est[0],
        model_photon_numbers: model_est[1..].to_vec(),
        trace_distance_to_model: result.rho.trace_distance(&state.rho),
        log_likelihood: result.log_likelihood,
        mle_iterations: result.iterations,
        mle_converged: result.converged,
        bootstrap_resamples: resamples,
        bootstrap_underpowered: boot.as_ref().is_some_and(|b| b.underpowered),
        bootstrap_degenerate: boot.as_ref().is_some_and(|b| b.degenerate),
    };
    artifacts.insert("report".into(), "report.json".into());
    let report = RunReport {
        experiment: id.to_string(),
        seed,
        scale: config.scale,
        tomography: Some(summary),
        calibration: None,
        artifacts,
        wall_time: None,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(RunReport { wall_time: Some(start.elapsed()), ..report })
}
