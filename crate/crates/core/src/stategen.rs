//! Heralded photon subtraction: squeezer → tap beamsplitter → idler photon
//! counting → signal loss.
//!
//! The squeezer phase is fixed so that the anti-squeezed quadrature lies at
//! homodyne phase 0° and the squeezed one at 90°. Concretely the generated
//! state is `S(r)|0⟩` rotated by a quarter turn; every phase-insensitive
//! quantity (photon statistics, heralding rates, `W(0,0)`) is unaffected.
//!
//! Loss before the tap is not modelled as a separate stage: a uniform pure
//! loss commutes with the beamsplitter, so it is absorbed into both
//! `idler_efficiency` and `signal_efficiency` (see [`GenerationConfig::from_observed`]).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{
    apply_loss, beamsplitter, binomial, squeezed_vacuum, DensityMatrixJson, FockDensityMatrix, FockError, FockVector,
    LossChannel, TwoModeFockState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateGenError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("herald {label} is impossible (probability {probability:.3e})")]
    HeraldImpossible { label: HeraldLabel, probability: f64 },
    #[error("no squeezing model fits: {0}")]
    NoSolution(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type Result<T> = std::result::Result<T, StateGenError>;

/// Herald probabilities below this are treated as impossible.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-15;

/// Idler dark-count probability per pulse: 1 cps of residual stray counts at
/// a 5 MHz repetition rate.
pub const DEFAULT_DARK_COUNT_PROB: f64 = 1.0 / 5.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub squeezing_r: f64,
    /// Fraction of the squeezed beam sent to the idler detector.
    pub tap_ratio: f64,
    pub idler_efficiency: f64,
    pub signal_efficiency: f64,
    /// Probability per pulse that the idler record gains one spurious count.
    pub dark_count_prob: f64,
    pub cutoff: usize,
}

impl GenerationConfig {
    /// No loss, no dark counts.
    pub fn lossless(squeezing_r: f64, tap_ratio: f64, cutoff: usize) -> Self {
        Self { squeezing_r, tap_ratio, idler_efficiency: 1.0, signal_efficiency: 1.0, dark_count_prob: 0.0, cutoff }
    }

    /// Builds a config whose unconditioned signal reproduces the observed
    /// squeezing levels at the homodyne detector.
    ///
    /// The fitted efficiency is the whole path seen by the homodyne
    /// detector: `η_fit = (1 − tap) · η_pre · signal_chain`. The remainder
    /// `η_pre` sits before the tap and therefore also acts on the idler. If
    /// the chain alone is already lossier than the fit allows, `η_pre` is
    /// pinned at 1 and the signal efficiency is taken from the fit.
    pub fn from_observed(
        observed: &ObservedSqueezing,
        tap_ratio: f64,
        dark_count_prob: f64,
        cutoff: usize,
    ) -> Result<Self> {
        let fit = fit_r_to_observed(observed.squeeze_db, observed.antisqueeze_db, cutoff)?;
        if !(0.0..0.5).contains(&tap_ratio) {
            return Err(StateGenError::InvalidConfig(format!("tap ratio {tap_ratio} outside [0, 0.5)")));
        }
        let seen_by_hd = fit.efficiency / (1.0 - tap_ratio);
        let pre_tap = (seen_by_hd / observed.signal_chain_efficiency).min(1.0);
        let config = Self {
            squeezing_r: fit.r,
            tap_ratio,
            idler_efficiency: observed.idler_chain_efficiency * pre_tap,
            signal_efficiency: (seen_by_hd).min(1.0),
            dark_count_prob,
            cutoff,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(StateGenError::InvalidConfig(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("idler_efficiency", self.idler_efficiency)?;
        unit("signal_efficiency", self.signal_efficiency)?;
        if !(0.0..0.5).contains(&self.tap_ratio) {
            return Err(StateGenError::InvalidConfig(format!("tap_ratio = {} outside [0, 0.5)", self.tap_ratio)));
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(StateGenError::InvalidConfig(format!(
                "dark_count_prob = {} outside [0, 1)",
                self.dark_count_prob
            )));
        }
        if self.cutoff < 2 {
            return Err(StateGenError::InvalidConfig(format!("cutoff {} < 2", self.cutoff)));
        }
        if !self.squeezing_r.is_finite() {
            return Err(StateGenError::InvalidConfig("squeezing_r is not finite".into()));
        }
        Ok(())
    }
}

/// Squeezing and anti-squeezing measured on the unconditioned signal, plus
/// the detector-side efficiency chains they are decomposed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedSqueezing {
    pub squeeze_db: f64,
    pub antisqueeze_db: f64,
    #[serde(default = "default_idler_chain")]
    pub idler_chain_efficiency: f64,
    #[serde(default = "default_signal_chain")]
    pub signal_chain_efficiency: f64,
}

fn default_idler_chain() -> f64 {
    LossBudget::MEASURED.idler_efficiency()
}

fn default_signal_chain() -> f64 {
    LossBudget::MEASURED.signal_chain_efficiency()
}

/// Measured loss budget of the generation and verification setup, as
/// fractional losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub wg_opa: f64,
    pub hd_inefficiency: f64,
    pub spatial_mode_mismatch: f64,
    pub temporal_mode_mismatch: f64,
    pub propagation: f64,
    /// Electronic noise, counted as an equivalent loss.
    pub circuit_noise: f64,
    pub snspd_inefficiency: f64,
    /// Upper bound on dark and fake counts.
    pub snspd_dark_and_fake: f64,
    pub idler_fiber_coupling: f64,
}

impl LossBudget {
    pub const MEASURED: LossBudget = LossBudget {
        wg_opa: 0.05,
        hd_inefficiency: 0.04,
        spatial_mode_mismatch: 0.08,
        temporal_mode_mismatch: 0.04,
        propagation: 0.05,
        circuit_noise: 0.035,
        snspd_inefficiency: 0.40,
        snspd_dark_and_fake: 0.01,
        idler_fiber_coupling: 0.15,
    };

    /// Fiber coupling and detector efficiency on the idler arm.
    pub fn idler_efficiency(&self) -> f64 {
        (1.0 - self.idler_fiber_coupling) * (1.0 - self.snspd_inefficiency)
    }

    /// Homodyne-side losses after the tap.
    pub fn signal_chain_efficiency(&self) -> f64 {
        (1.0 - self.hd_inefficiency)
            * (1.0 - self.spatial_mode_mismatch)
            * (1.0 - self.temporal_mode_mismatch)
            * (1.0 - self.propagation)
            * (1.0 - self.circuit_noise)
    }

    /// `(element, loss %)` rows in table order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("WG OPA", self.wg_opa * 100.0),
            ("Inefficiency of HD", self.hd_inefficiency * 100.0),
            ("Spatial mode mismatch", self.spatial_mode_mismatch * 100.0),
            ("Temporal mode mismatch", self.temporal_mode_mismatch * 100.0),
            ("Propagation loss", self.propagation * 100.0),
            ("Circuit noise", self.circuit_noise * 100.0),
            ("Inefficiency of SNSPD", self.snspd_inefficiency * 100.0),
            ("Dark and fake count contributions of SNSPD", self.snspd_dark_and_fake * 100.0),
            ("Fiber coupling loss for Idler", self.idler_fiber_coupling * 100.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldLabel {
    Count(usize),
    OnOff,
}

impl std::fmt::Display for HeraldLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HeraldLabel::Count(n) => write!(f, "n={n}"),
            HeraldLabel::OnOff => write!(f, "on-off"),
        }
    }
}

// JSON: a bare integer for photon counts, the string "on-off" otherwise
impl Serialize for HeraldLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            HeraldLabel::Count(n) => s.serialize_u64(*n as u64),
            HeraldLabel::OnOff => s.serialize_str("on-off"),
        }
    }
}

impl<'de> Deserialize<'de> for HeraldLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Flag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(HeraldLabel::Count(n)),
            Raw::Flag(s) if s == "on-off" => Ok(HeraldLabel::OnOff),
            Raw::Flag(s) => Err(serde::de::Error::custom(format!("unknown herald label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedState {
    pub rho: FockDensityMatrix,
    /// Per-pulse probability of the herald outcome.
    pub herald_probability: f64,
    pub herald_label: HeraldLabel,
}

#[derive(Serialize, Deserialize)]
struct HeraldedStateJson {
    #[serde(flatten)]
    rho: DensityMatrixJson,
    herald_probability: f64,
    herald_label: HeraldLabel,
}

impl Serialize for HeraldedState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HeraldedStateJson {
            rho: self.rho.to_json(),
            herald_probability: self.herald_probability,
            herald_label: self.herald_label,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeraldedState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = HeraldedStateJson::deserialize(d)?;
        Ok(HeraldedState {
            rho: FockDensityMatrix::from_json(&raw.rho).map_err(serde::de::Error::custom)?,
            herald_probability: raw.herald_probability,
            herald_label: raw.herald_label,
        })
    }
}

/// Conditional signal states for every idler record of one configuration.
///
/// Holds the unnormalized signal operators `ρ_k = Tr_idler[Π_k |ψ⟩⟨ψ|]` for
/// each number `k` of photons the idler detector registers, before dark
/// counts and before signal loss.
struct IdlerRecords {
    config: GenerationConfig,
    detected: Vec<FockDensityMatrix>,
}

impl IdlerRecords {
    fn new(config: &GenerationConfig) -> Result<Self> {
        config.validate()?;
        let c = config.cutoff;
        let squeezed = squeezed_vacuum(config.squeezing_r, c)?.state.normalized()?.rotated(FRAC_PI_2);
        let input = TwoModeFockState::product(&squeezed, &FockVector::vacuum(c))?;
        // total photon number of the input never exceeds the cutoff
        let split = beamsplitter(&input, 1.0 - config.tap_ratio)?.state;

        let eta = config.idler_efficiency;
        let zero = FockDensityMatrix::vacuum(c).scaled(0.0);
        let mut detected = vec![zero; c + 1];
        for m in 0..=c {
            let v = FockVector::new(split.signal_given_idler(m))?;
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let proj = FockDensityMatrix::pure(&v);
            for (k, slot) in detected.iter_mut().enumerate().take(m + 1) {
                let w = binomial(m, k) * eta.powi(k as i32) * (1.0 - eta).powi((m - k) as i32);
                if w > 0.0 {
                    slot.add_assign(&proj.scaled(w));
                }
            }
        }
        Ok(Self { config: *config, detected })
    }

    /// Unnormalized signal operator for a recorded count of `n`, including
    /// one possible dark count. Valid for `n = 0..=cutoff+1`.
    fn recorded(&self, n: usize) -> FockDensityMatrix {
        let d = self.config.dark_count_prob;
        let c = self.config.cutoff;
        let mut out = FockDensityMatrix::vacuum(c).scaled(0.0);
        if n <= c {
            out.add_assign(&self.detected[n].scaled(1.0 - d));
        }
        if n >= 1 && d > 0.0 {
            out.add_assign(&self.detected[n - 1].scaled(d));
        }
        out
    }

    fn conditional(&self, n: usize) -> Result<HeraldedState> {
        let unnorm = self.recorded(n);
        let probability = unnorm.trace();
        if probability < MIN_HERALD_PROBABILITY {
            return Err(StateGenError::HeraldImpossible { label: HeraldLabel::Count(n), probability });
        }
        let rho = apply_loss(&unnorm.normalized()?, &LossChannel::new(self.config.signal_efficiency)?);
        Ok(HeraldedState { rho, herald_probability: probability, herald_label: HeraldLabel::Count(n) })
    }
}

/// State heralded by the idler detector reporting exactly `herald_n` counts.
pub fn generate_conditional(config: &GenerationConfig, herald_n: usize) -> Result<HeraldedState> {
    if herald_n > config.cutoff {
        return Err(StateGenError::InvalidConfig(format!("herald {herald_n} exceeds cutoff {}", config.cutoff)));
    }
    IdlerRecords::new(config)?.conditional(herald_n)
}

/// State heralded by any click: the herald-probability-weighted mixture of
/// all `herald_n ≥ 1` outcomes.
pub fn generate_onoff(config: &GenerationConfig) -> Result<HeraldedState> {
    let records = IdlerRecords::new(config)?;
    let mut mixture = FockDensityMatrix::vacuum(config.cutoff).scaled(0.0);
    let mut total = 0.0;
    for n in 1..=config.cutoff + 1 {
        match records.conditional(n) {
            Ok(state) => {
                mixture.add_assign(&state.rho.scaled(state.herald_probability));
                total += state.herald_probability;
            }
            Err(StateGenError::HeraldImpossible { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if total < MIN_HERALD_PROBABILITY {
        return Err(StateGenError::HeraldImpossible { label: HeraldLabel::OnOff, probability: total });
    }
    Ok(HeraldedState { rho: mixture.scaled(1.0 / total), herald_probability: total, herald_label: HeraldLabel::OnOff })
}

/// Probability of each recorded idler count `0..=cutoff+1`.
pub fn herald_distribution(config: &GenerationConfig) -> Result<Vec<f64>> {
    let records = IdlerRecords::new(config)?;
    Ok((0..=config.cutoff + 1).map(|n| records.recorded(n).trace()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingFit {
    pub r: f64,
    /// Effective efficiency between the squeezer and the homodyne detector.
    pub efficiency: f64,
}

impl SqueezingFit {
    /// Model variances `(squeezed, anti-squeezed)` in vacuum units of 1/2.
    pub fn variances(&self) -> (f64, f64) {
        let eta = self.efficiency;
        let r = self.r;
        (eta * (-2.0 * r).exp() / 2.0 + (1.0 - eta) / 2.0, eta * (2.0 * r).exp() / 2.0 + (1.0 - eta) / 2.0)
    }
}

/// Solves `Var_sq = η e^{−2r}/2 + (1−η)/2`, `Var_anti = η e^{2r}/2 + (1−η)/2`
/// for `(r, η)`.
///
/// Eliminating `η` gives `e^{2r} = (A − 1)/(1 − S)` with `S`, `A` the
/// variances relative to shot noise, so the pair has a closed form.
pub fn fit_r_to_observed(squeeze_db: f64, antisqueeze_db: f64, cutoff: usize) -> Result<SqueezingFit> {
    if !(squeeze_db > 0.0) {
        return Err(StateGenError::NoSolution(format!("squeezing {squeeze_db} dB must be positive")));
    }
    if !(antisqueeze_db >= squeeze_db) {
        return Err(StateGenError::NoSolution(format!(
            "anti-squeezing {antisqueeze_db} dB below squeezing {squeeze_db} dB"
        )));
    }
    let s = 10f64.powf(-squeeze_db / 10.0);
    let a = 10f64.powf(antisqueeze_db / 10.0);
    let gain = (a - 1.0) / (1.0 - s);
    let r = 0.5 * gain.ln();
    let efficiency = ((a - 1.0) / (gain - 1.0)).min(1.0);
    let fit = SqueezingFit { r, efficiency };

    let (vs, va) = fit.variances();
    let residual = (2.0 * vs - s).abs().max((2.0 * va - a).abs());
    if residual > 1e-10 {
        return Err(StateGenError::NoSolution(format!("residual {residual:.3e} after solve")));
    }
    squeezed_vacuum(r, cutoff)?;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::photon_number_distribution;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn w00(rho: &FockDensityMatrix) -> f64 {
        photon_number_distribution(rho).iter().enumerate().map(|(n, p)| if n % 2 == 0 { *p } else { -*p }).sum::<f64>()
            / PI
    }

    /// Bisection on `(A−1)/(1−S) = e^{2r}` rewritten as
    /// `η(r) (e^{2r} − 1) = A − 1` with `η(r) = (1 − S)/(1 − e^{−2r})`.
    fn bisection_oracle(squeeze_db: f64, antisqueeze_db: f64) -> (f64, f64) {
        let s = 10f64.powf(-squeeze_db / 10.0);
        let a = 10f64.powf(antisqueeze_db / 10.0);
        let eta_of = |r: f64| (1.0 - s) / (1.0 - (-2.0 * r).exp());
        let f = |r: f64| eta_of(r) * ((2.0 * r).exp() - 1.0) - (a - 1.0);
        let (mut lo, mut hi) = (1e-9, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        (r, eta_of(r))
    }

    #[test]
    fn symmetric_levels_are_lossless() {
        let fit = fit_r_to_observed(1.27, 1.27, 30).unwrap();
        assert_abs_diff_eq!(fit.r, 10f64.powf(1.27 / 20.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r, 0.1462, epsilon = 1e-4);
        assert_abs_diff_eq!(fit.efficiency, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fits_match_bisection() {
        // frozen from the bisection oracle
        let cases = [(1.27, 1.49, 0.239_427_538, 0.666_349_756), (2.93, 4.46, 0.647_810_501, 0.675_599_516)];
        for (sq, anti, r_frozen, eta_frozen) in cases {
            let (r_or, eta_or) = bisection_oracle(sq, anti);
            let fit = fit_r_to_observed(sq, anti, 30).unwrap();
            assert_abs_diff_eq!(fit.r, r_or, epsilon = 1e-10);
            assert_abs_diff_eq!(fit.efficiency, eta_or, epsilon = 1e-10);
            assert_abs_diff_eq!(fit.r, r_frozen, epsilon = 1e-8);
            assert_abs_diff_eq!(fit.efficiency, eta_frozen, epsilon = 1e-8);
        }
    }

    #[test]
    fn unphysical_levels_have_no_solution() {
        assert!(matches!(fit_r_to_observed(1.5, 1.2, 30), Err(StateGenError::NoSolution(_))));
        assert!(matches!(fit_r_to_observed(0.0, 1.2, 30), Err(StateGenError::NoSolution(_))));
    }

    #[test]
    fn vacuum_cannot_herald() {
        let cfg = GenerationConfig::lossless(0.0, 0.05, 10);
        assert!(matches!(generate_conditional(&cfg, 1), Err(StateGenError::HeraldImpossible { .. })));
        assert!(matches!(generate_onoff(&cfg), Err(StateGenError::HeraldImpossible { .. })));
    }

    #[test]
    fn weak_squeezing_heralds_single_photon() {
        let mut last = 0.0;
        for &r in &[0.2, 0.05, 0.01] {
            let st = generate_conditional(&GenerationConfig::lossless(r, 0.05, 20), 1).unwrap();
            let p1 = photon_number_distribution(&st.rho)[1];
            assert!(p1 > last);
            last = p1;
        }
        assert!(last > 0.999);
    }

    #[test]
    fn parity_law() {
        for &r in &[0.1, 0.3, 0.5] {
            for n in 1..=3 {
                let mut cfg = GenerationConfig::lossless(r, 0.1, 30);
                cfg.idler_efficiency = 0.7;
                let st = generate_conditional(&cfg, n).unwrap();
                let sign = w00(&st.rho).signum();
                assert_eq!(sign, if n % 2 == 0 { 1.0 } else { -1.0 }, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn herald_probabilities_are_complete() {
        let cfg = GenerationConfig {
            squeezing_r: 0.6,
            tap_ratio: 0.16,
            idler_efficiency: 0.51,
            signal_efficiency: 0.8,
            dark_count_prob: 1e-3,
            cutoff: 30,
        };
        let dist = herald_distribution(&cfg).unwrap();
        assert_abs_diff_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn idler_loss_lowers_herald_rate() {
        for n in 1..=3 {
            let mut prev = f64::INFINITY;
            for &eta in &[1.0, 0.8, 0.5, 0.2] {
                let mut cfg = GenerationConfig::lossless(0.4, 0.1, 30);
                cfg.idler_efficiency = eta;
                let p = generate_conditional(&cfg, n).unwrap().herald_probability;
                assert!(p < prev, "n={n} eta={eta}");
                prev = p;
            }
        }
    }

    #[test]
    fn onoff_is_weighted_mixture_of_counts() {
        let cfg = GenerationConfig {
            squeezing_r: 0.3,
            tap_ratio: 0.2,
            idler_efficiency: 0.6,
            signal_efficiency: 0.9,
            dark_count_prob: 0.0,
            cutoff: 12,
        };
        let onoff = generate_onoff(&cfg).unwrap();
        // independent route: click POVM 1 − Π_0 on the idler
        let dist = herald_distribution(&cfg).unwrap();
        assert_abs_diff_eq!(onoff.herald_probability, 1.0 - dist[0], epsilon = 1e-12);
        let mut mix = FockDensityMatrix::vacuum(12).scaled(0.0);
        for n in 1..=12 {
            let Ok(st) = generate_conditional(&cfg, n) else { continue };
            mix.add_assign(&st.rho.scaled(st.herald_probability / onoff.herald_probability));
        }
        let diff = (mix.entries() - onoff.rho.entries()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn weak_pump_onoff_approaches_single_count() {
        // two-click events scale with both the pair rate and the tap
        let distance = |r: f64, tap: f64| {
            let cfg = GenerationConfig::lossless(r, tap, 20);
            let onoff = generate_onoff(&cfg).unwrap();
            let one = generate_conditional(&cfg, 1).unwrap();
            onoff.rho.trace_distance(&one.rho)
        };
        let (strong, weak) = (distance(0.3, 0.1), distance(0.03, 0.001));
        assert!(weak < strong / 50.0);
        assert!(weak < 1e-3);
    }

    #[test]
    fn dark_counts_herald_vacuum() {
        let mut cfg = GenerationConfig::lossless(0.0, 0.05, 10);
        cfg.dark_count_prob = 1e-3;
        let st = generate_conditional(&cfg, 1).unwrap();
        assert_abs_diff_eq!(st.herald_probability, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(photon_number_distribution(&st.rho)[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn experiment_one_origin_value() {
        let observed = ObservedSqueezing {
            squeeze_db: 1.27,
            antisqueeze_db: 1.49,
            idler_chain_efficiency: LossBudget::MEASURED.idler_efficiency(),
            signal_chain_efficiency: LossBudget::MEASURED.signal_chain_efficiency(),
        };
        let cfg = GenerationConfig::from_observed(&observed, 0.02, DEFAULT_DARK_COUNT_PROB, 30).unwrap();
        let st = generate_conditional(&cfg, 1).unwrap();
        let w = w00(&st.rho);
        assert!((w - (-0.108)).abs() <= 0.03, "W(0,0) = {w}");
        // the unconditioned signal reproduces the observed levels
        let seen = cfg.signal_efficiency * (1.0 - cfg.tap_ratio);
        let fit = SqueezingFit { r: cfg.squeezing_r, efficiency: seen };
        let (vs, va) = fit.variances();
        assert_abs_diff_eq!(-10.0 * (2.0 * vs).log10(), 1.27, epsilon = 1e-9);
        assert_abs_diff_eq!(10.0 * (2.0 * va).log10(), 1.49, epsilon = 1e-9);
    }

    #[test]
    fn loss_budget_grouping() {
        let b = LossBudget::MEASURED;
        assert_abs_diff_eq!(b.idler_efficiency(), 0.51, epsilon = 1e-12);
        assert_abs_diff_eq!(b.signal_chain_efficiency(), 0.96 * 0.92 * 0.96 * 0.95 * 0.965, epsilon = 1e-12);
        assert_eq!(b.rows().len(), 9);
    }

    #[test]
    fn heralded_state_json_round_trip() {
        let st = generate_conditional(&GenerationConfig::lossless(0.2, 0.1, 10), 2).unwrap();
        let text = serde_json::to_string(&st).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["herald_label"], 2);
        assert!(v["re"].is_array() && v["im"].is_array() && v["cutoff"] == 10);
        let back: HeraldedState = serde_json::from_str(&text).unwrap();
        assert_eq!(back.herald_label, HeraldLabel::Count(2));
        let onoff = serde_json::to_string(&HeraldLabel::OnOff).unwrap();
        assert_eq!(onoff, "\"on-off\"");
    }
}
