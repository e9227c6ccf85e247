use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Result, TomoError};

/// One homodyne sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub phase_deg: f64,
    pub x: f64,
}

/// All samples taken at one local-oscillator phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBlock {
    pub phase_deg: f64,
    pub xs: Vec<f64>,
}

/// Homodyne samples grouped by phase, plus shot-noise samples taken with the
/// pump blocked.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadratureDataset {
    pub blocks: Vec<PhaseBlock>,
    pub shot_noise: Vec<f64>,
    /// Seed the data was drawn with, when simulated.
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    phase_deg: f64,
    x: f64,
    is_shot_noise: u8,
}

impl QuadratureDataset {
    /// Groups records by exact phase value, keeping first-appearance order.
    pub fn from_records(records: impl IntoIterator<Item = QuadratureRecord>, shot_noise: Vec<f64>) -> Self {
        let mut blocks: Vec<PhaseBlock> = Vec::new();
        for rec in records {
            match blocks.iter_mut().find(|b| b.phase_deg == rec.phase_deg) {
                Some(b) => b.xs.push(rec.x),
                None => blocks.push(PhaseBlock { phase_deg: rec.phase_deg, xs: vec![rec.x] }),
            }
        }
        Self { blocks, shot_noise, seed: None }
    }

    pub fn records(&self) -> impl Iterator<Item = QuadratureRecord> + '_ {
        self.blocks.iter().flat_map(|b| b.xs.iter().map(move |&x| QuadratureRecord { phase_deg: b.phase_deg, x }))
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.xs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phases(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.phase_deg).collect()
    }

    pub fn counts_per_phase(&self) -> Vec<(f64, usize)> {
        self.blocks.iter().map(|b| (b.phase_deg, b.xs.len())).collect()
    }

    pub fn block(&self, phase_deg: f64) -> Option<&PhaseBlock> {
        self.blocks.iter().find(|b| (b.phase_deg - phase_deg).abs() < 1e-9)
    }

    /// Rescales every quadrature so the shot-noise variance becomes exactly 1/2.
    pub fn normalized_to_shot_noise(&self) -> Result<Self> {
        if self.shot_noise.len() < 2 {
            return Err(TomoError::MissingShotNoise);
        }
        let var = sample_variance(&self.shot_noise);
        if !(var > 0.0) {
            return Err(TomoError::InvalidInput("shot-noise variance is zero".into()));
        }
        let scale = (0.5 / var).sqrt();
        Ok(Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| PhaseBlock { phase_deg: b.phase_deg, xs: b.xs.iter().map(|x| x * scale).collect() })
                .collect(),
            shot_noise: self.shot_noise.iter().map(|x| x * scale).collect(),
            seed: self.seed,
        })
    }

    /// CSV with header `phase_deg,x,is_shot_noise`; shot-noise rows carry phase 0.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for rec in self.records() {
            w.serialize(CsvRow { phase_deg: rec.phase_deg, x: rec.x, is_shot_noise: 0 })?;
        }
        for &x in &self.shot_noise {
            w.serialize(CsvRow { phase_deg: 0.0, x, is_shot_noise: 1 })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        let mut shot = Vec::new();
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| TomoError::InvalidInput(e.to_string()))?;
            if !row.x.is_finite() || !row.phase_deg.is_finite() {
                return Err(TomoError::InvalidInput("non-finite value in dataset".into()));
            }
            match row.is_shot_noise {
                0 => records.push(QuadratureRecord { phase_deg: row.phase_deg, x: row.x }),
                1 => shot.push(row.x),
                other => return Err(TomoError::InvalidInput(format!("is_shot_noise must be 0 or 1, got {other}"))),
            }
        }
        Ok(Self::from_records(records, shot))
    }
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}
