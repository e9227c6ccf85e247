use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::experiment::RunReport;
use super::{write_atomic, write_json, PipelineConfig, PipelineError, Result};
use crate::sampling::{
    default_thresholds, draw_photon_numbers, run_bench, simulate_events, synthesize_pulse_with, EventRecord,
    SamplingError, TraceWindow,
};
use crate::seed::{derive, streams, task_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub events: usize,
    /// Seconds.
    pub delay: f64,
    pub median_shift_volts: f64,
    /// V/s.
    pub conversion_factor: f64,
    /// Seconds FWHM.
    pub jitter_fwhm: f64,
    /// Seconds FWHM of the blocked-signal histogram.
    pub resolution_fwhm: f64,
    pub injected_jitter_fwhm: f64,
    /// Class thresholds on the balanced output, volts.
    pub thresholds: Vec<f64>,
    /// Fraction of labelled events whose class differs from the photon number.
    pub misclassified_fraction: f64,
}

fn sampling_err(context: &'static str) -> impl Fn(SamplingError) -> PipelineError {
    move |source| PipelineError::Sampling { context: context.to_string(), source }
}

pub fn write_events(path: &Path, events: &[EventRecord]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for e in events {
            csv.serialize(e)?;
        }
        csv.flush()
    })
}

/// Class thresholds and a labelled event record drawn from the configured
/// photon-number mix with no RF delay.
pub fn labelled_events(config: &PipelineConfig) -> Result<(Vec<f64>, Vec<EventRecord>)> {
    let bench = &config.bench;
    let seed = config.seeds.master;
    let thresholds = default_thresholds(&config.pulse, &config.sampler, bench.sample_time, bench.photon_probs.len())
        .map_err(sampling_err("class thresholds"))?;
    let photons = draw_photon_numbers(&bench.photon_probs, bench.events, seed);
    let events = simulate_events(
        &config.pulse,
        &config.sampler,
        bench,
        &photons,
        0.0,
        &thresholds,
        seed,
        streams::EVENTS_CLASSES,
    )
    .map_err(sampling_err("labelled events"))?;
    Ok((thresholds, events))
}

/// Runs the timing bench and a labelled mixed-photon-number event run.
pub fn run_calibration_bench(config: &PipelineConfig, out_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let seed = config.seeds.master;
    let bench = &config.bench;
    let result = run_bench(&config.pulse, &config.sampler, bench, seed).map_err(sampling_err("calibration bench"))?;

    let (thresholds, events) = labelled_events(config)?;
    let wrong = events.iter().filter(|e| e.class + 1 != e.n_true).count();

    let mut artifacts = BTreeMap::new();
    for (key, name, hist) in [
        ("histogram_no_delay", "histogram_no_delay.json", &result.no_delay),
        ("histogram_delay", "histogram_delay.json", &result.with_delay),
        ("histogram_blocked", "histogram_blocked.json", &result.blocked),
    ] {
        write_json(&out_dir.join(name), hist)?;
        artifacts.insert(key.to_string(), name.to_string());
    }
    write_events(&out_dir.join("events.csv"), &events)?;
    artifacts.insert("events".into(), "events.csv".into());
    write_atomic(&out_dir.join("config.toml"), |w| w.write_all(config.to_toml_string().as_bytes()))?;
    artifacts.insert("config".into(), "config.toml".into());
    artifacts.insert("report".into(), "report.json".into());

    let shift = result.with_delay.median().map_err(sampling_err("median"))?
        - result.no_delay.median().map_err(sampling_err("median"))?;
    let report = RunReport {
        experiment: "calib".into(),
        seed,
        scale: config.scale,
        tomography: None,
        calibration: Some(CalibrationSummary {
            events: bench.events,
            delay: bench.delay,
            median_shift_volts: shift,
            conversion_factor: result.conversion_factor,
            jitter_fwhm: result.jitter_fwhm,
            resolution_fwhm: result.resolution_fwhm,
            injected_jitter_fwhm: config.pulse.jitter_fwhm,
            thresholds,
            misclassified_fraction: wrong as f64 / events.len() as f64,
        }),
        artifacts,
        wall_time: None,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(RunReport { wall_time: Some(start.elapsed()), ..report })
}

/// Overlaid example waveforms, `per_class` traces for each photon number in
/// the bench mix, on a 1 ns window at 1 ps: CSV `trace,n,t_s,v`.
pub fn write_waveforms(config: &PipelineConfig, per_class: usize, path: &Path) -> Result<()> {
    let window = TraceWindow { t0: -200e-12, dt: 1e-12, len: 1001 };
    let mut rows = Vec::new();
    let mut index = 0u64;
    for n in 1..=config.bench.photon_probs.len() {
        for _ in 0..per_class {
            let mut rng = task_rng(derive(config.seeds.master, 100, n as u64), streams::EVENTS_CLASSES, index);
            let trace =
                synthesize_pulse_with(&config.pulse, n, &window, &mut rng).map_err(sampling_err("waveforms"))?;
            rows.push((index, n, trace));
            index += 1;
        }
    }
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["trace", "n", "t_s", "v"])?;
        for (i, n, trace) in &rows {
            for (k, v) in trace.samples.iter().enumerate() {
                csv.write_record([i.to_string(), n.to_string(), trace.time(k).to_string(), v.to_string()])?;
            }
        }
        csv.flush()
    })
}
