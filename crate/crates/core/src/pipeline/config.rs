use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::fock::{GENERATION_CUTOFF, TOMOGRAPHY_CUTOFF};
use crate::sampling::{BenchConfig, PulseModel, SamplerModel};
use crate::stategen::{GenerationConfig, ObservedSqueezing, DEFAULT_DARK_COUNT_PROB};
use crate::tomo::{Binning, StopRule, LAB_PHASES_DEG};

const PRESETS: [(&str, &str); 4] = [
    ("paper-exp1", include_str!("../../presets/paper-exp1.toml")),
    ("paper-exp2", include_str!("../../presets/paper-exp2.toml")),
    ("paper-exp3", include_str!("../../presets/paper-exp3.toml")),
    ("paper-calib", include_str!("../../presets/paper-calib.toml")),
];

/// Source parameters. Either `observed` squeezing levels (decomposed
/// against the loss budget) or an explicit `squeezing_r` with both
/// efficiencies must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub tap_ratio: f64,
    pub dark_count_prob: f64,
    pub cutoff: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<ObservedSqueezing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezing_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idler_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_efficiency: Option<f64>,
}

impl Default for GenerationSection {
    fn default() -> Self {
        Self {
            tap_ratio: 0.02,
            dark_count_prob: DEFAULT_DARK_COUNT_PROB,
            cutoff: GENERATION_CUTOFF,
            observed: Some(ObservedSqueezing {
                squeeze_db: 1.27,
                antisqueeze_db: 1.49,
                idler_chain_efficiency: crate::stategen::LossBudget::MEASURED.idler_efficiency(),
                signal_chain_efficiency: crate::stategen::LossBudget::MEASURED.signal_chain_efficiency(),
            }),
            squeezing_r: None,
            idler_efficiency: None,
            signal_efficiency: None,
        }
    }
}

impl GenerationSection {
    pub fn resolve(&self) -> Result<GenerationConfig> {
        let config = match (self.squeezing_r, &self.observed) {
            (Some(r), _) => GenerationConfig {
                squeezing_r: r,
                tap_ratio: self.tap_ratio,
                idler_efficiency: self.idler_efficiency.unwrap_or(1.0),
                signal_efficiency: self.signal_efficiency.unwrap_or(1.0),
                dark_count_prob: self.dark_count_prob,
                cutoff: self.cutoff,
            },
            (None, Some(obs)) => {
                if self.idler_efficiency.is_some() || self.signal_efficiency.is_some() {
                    return Err(PipelineError::Config(
                        "efficiencies are derived from `observed`; give squeezing_r to set them".into(),
                    ));
                }
                GenerationConfig::from_observed(obs, self.tap_ratio, self.dark_count_prob, self.cutoff)
                    .map_err(|e| PipelineError::Config(e.to_string()))?
            }
            (None, None) => {
                return Err(PipelineError::Config("generation needs either `observed` levels or `squeezing_r`".into()))
            }
        };
        config.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomoSection {
    pub cutoff: usize,
    pub bins: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub max_iter: usize,
    pub ll_tol: f64,
    pub n_per_phase: usize,
    pub phases: Vec<f64>,
    /// Bootstrap resamples at full scale; 0 disables the bootstrap.
    pub bootstrap: usize,
    /// Resamples used when `--scale` shrinks the run.
    pub bootstrap_scaled: usize,
    pub wigner_half_width: f64,
    pub wigner_step: f64,
}

impl Default for TomoSection {
    fn default() -> Self {
        let binning = Binning::default();
        let stop = StopRule::default();
        Self {
            cutoff: TOMOGRAPHY_CUTOFF,
            bins: binning.bins,
            bin_lo: binning.lo,
            bin_hi: binning.hi,
            max_iter: stop.max_iter,
            ll_tol: stop.ll_tol,
            n_per_phase: 100_000,
            phases: LAB_PHASES_DEG.to_vec(),
            bootstrap: 100,
            bootstrap_scaled: 20,
            wigner_half_width: 5.0,
            wigner_step: 0.05,
        }
    }
}

impl TomoSection {
    pub fn binning(&self) -> Binning {
        Binning { bins: self.bins, lo: self.bin_lo, hi: self.bin_hi }
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule { max_iter: self.max_iter, ll_tol: self.ll_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { master: 20240607 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub generation: GenerationSection,
    pub sampler: SamplerModel,
    pub pulse: PulseModel,
    pub bench: BenchConfig,
    pub tomo: TomoSection,
    pub seeds: Seeds,
    pub output_dir: PathBuf,
    /// Sample-count multiplier applied by [`PipelineConfig::scaled`].
    #[serde(skip, default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            generation: GenerationSection::default(),
            sampler: SamplerModel::default(),
            pulse: PulseModel::default(),
            bench: BenchConfig::default(),
            tomo: TomoSection::default(),
            seeds: Seeds::default(),
            output_dir: PathBuf::from("out"),
            scale: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(name, _)| *name)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| PipelineError::Config(format!("unknown preset {name:?}")))?;
        Self::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; a bare preset name is accepted too.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            if let Some(name) = path.to_str().filter(|s| PRESETS.iter().any(|(n, _)| n == s)) {
                return Self::preset(name);
            }
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let config_err = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        self.generation.resolve()?;
        self.sampler.validate().map_err(|e| config_err(&e))?;
        self.pulse.validate().map_err(|e| config_err(&e))?;
        let t = &self.tomo;
        if t.cutoff < 1 || t.cutoff > self.generation.cutoff {
            return Err(PipelineError::Config(format!(
                "tomo.cutoff {} must lie in 1..={}",
                t.cutoff, self.generation.cutoff
            )));
        }
        if t.bins < 2 || !(t.bin_hi > t.bin_lo) {
            return Err(PipelineError::Config("tomo binning needs ≥ 2 bins and bin_hi > bin_lo".into()));
        }
        if t.n_per_phase == 0 || t.max_iter == 0 || !(t.ll_tol > 0.0) {
            return Err(PipelineError::Config("tomo n_per_phase, max_iter and ll_tol must be positive".into()));
        }
        let mut distinct = t.phases.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(PipelineError::Config("tomo.phases needs at least two distinct phases".into()));
        }
        if !(t.wigner_step > 0.0 && t.wigner_half_width > 0.0) {
            return Err(PipelineError::Config("Wigner grid step and half width must be positive".into()));
        }
        let b = &self.bench;
        if b.events == 0 || b.bins < 2 || !(b.delay > 0.0) || !(b.trace_dt > 0.0) || !(b.trace_margin > 0.0) {
            return Err(PipelineError::Config(
                "bench events, bins, delay, trace_dt and trace_margin must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Shrinks sample counts by `scale` (at least one sample each) and
    /// switches to the reduced bootstrap when `scale < 1`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PipelineError::Config(format!("scale {scale} must be positive")));
        }
        let mut out = self.clone();
        let shrink = |n: usize| ((n as f64 * scale).round() as usize).max(1);
        out.tomo.n_per_phase = shrink(self.tomo.n_per_phase);
        out.bench.events = shrink(self.bench.events);
        out.scale = scale;
        Ok(out)
    }

    pub fn bootstrap_resamples(&self) -> usize {
        if self.scale < 1.0 {
            self.tomo.bootstrap_scaled.min(self.tomo.bootstrap)
        } else {
            self.tomo.bootstrap
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PipelineConfig::preset_names() {
            let c = PipelineConfig::preset(name).unwrap();
            assert_eq!(c.tomo.phases.len(), 8, "{name}");
        }
        let exp2 = PipelineConfig::preset("paper-exp2").unwrap();
        assert_eq!(exp2.tomo.n_per_phase, 800_000);
        assert_eq!(exp2.generation.tap_ratio, 0.16);
        assert!(PipelineConfig::preset("nope").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = PipelineConfig::preset("paper-exp1").unwrap();
        let back = PipelineConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml_str("[generation]\ntap_ratio = 0.7\n").is_err());
        assert!(PipelineConfig::from_toml_str("[tomo]\nphases = [0.0]\n").is_err());
        assert!(PipelineConfig::from_toml_str("[tomo]\nunknown = 1\n").is_err());
        assert!(PipelineConfig::from_toml_str("[generation]\nsqueezing_r = 0.3\nidler_efficiency = 1.2\n").is_err());
        assert!(PipelineConfig::from_toml_str("").is_ok());
    }

    #[test]
    fn explicit_squeezing() {
        let c = PipelineConfig::from_toml_str("[generation]\nsqueezing_r = 0.3\ntap_ratio = 0.1\n").unwrap();
        let g = c.generation.resolve().unwrap();
        assert_eq!((g.squeezing_r, g.idler_efficiency, g.signal_efficiency), (0.3, 1.0, 1.0));
    }

    #[test]
    fn scaling() {
        let c = PipelineConfig::preset("paper-exp1").unwrap();
        let s = c.scaled(0.1).unwrap();
        assert_eq!(s.tomo.n_per_phase, 10_000);
        assert_eq!(s.bootstrap_resamples(), 20);
        assert_eq!(c.bootstrap_resamples(), 100);
        assert_eq!(c.scaled(1e-9).unwrap().tomo.n_per_phase, 1);
        assert!(c.scaled(0.0).is_err());
    }
}
