//! Published curve parameters bundled with the crate.
//!
//! `fixtures/published_params.json` holds one record per (model, task, channel)
//! with coefficients exactly as printed. No validity range was published for
//! these rows, so `validity_range` is `null` throughout.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{AbgParams, BitScalingParams};

pub const PUBLISHED_PARAMS_JSON: &str = include_str!("../fixtures/published_params.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Reconstruction,
    Inference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Abg,
    BitScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub model: String,
    pub task: Task,
    pub metric: String,
    pub channel: String,
    pub kind: CurveKind,
    pub params: serde_json::Value,
    pub reported_sse: Option<f64>,
    pub validity_range: Option<[f64; 2]>,
}

impl ParamRecord {
    pub fn abg(&self) -> Result<AbgParams> {
        match self.kind {
            CurveKind::Abg => Ok(serde_json::from_value(self.params.clone())?),
            CurveKind::BitScaling => Err(Error::Config(format!(
                "record `{}` holds bit-scaling coefficients",
                self.model
            ))),
        }
    }

    pub fn bit_scaling(&self) -> Result<BitScalingParams> {
        match self.kind {
            CurveKind::BitScaling => Ok(serde_json::from_value(self.params.clone())?),
            CurveKind::Abg => Err(Error::Config(format!(
                "record `{}` holds ABG coefficients",
                self.model
            ))),
        }
    }

    /// Coefficients in `[ceiling, scale, depth, shape]` order.
    pub fn coefficients(&self) -> Result<[f64; 4]> {
        use crate::fit::FourParamCurve;
        match self.kind {
            CurveKind::Abg => Ok(self.abg()?.coefficients()),
            CurveKind::BitScaling => Ok(self.bit_scaling()?.coefficients()),
        }
    }
}

#[derive(Deserialize)]
struct FixtureFile {
    records: Vec<ParamRecord>,
}

pub fn published_records() -> Vec<ParamRecord> {
    serde_json::from_str::<FixtureFile>(PUBLISHED_PARAMS_JSON)
        .expect("bundled fixture parses")
        .records
}

fn find(model: &str, task: Task, kind: CurveKind) -> Option<ParamRecord> {
    published_records()
        .into_iter()
        .find(|r| r.kind == kind && r.task == task && r.model.eq_ignore_ascii_case(model))
}

/// ABG coefficients of a published row, e.g. `("Swin Transformer", Reconstruction)`.
pub fn abg_row(model: &str, task: Task) -> Option<AbgParams> {
    find(model, task, CurveKind::Abg).and_then(|r| r.abg().ok())
}

pub fn bit_scaling_row(model: &str, task: Task) -> Option<BitScalingParams> {
    find(model, task, CurveKind::BitScaling).and_then(|r| r.bit_scaling().ok())
}

/// SHA-256 of the bundled fixture file, hex encoded.
pub fn fixture_digest() -> String {
    Sha256::digest(PUBLISHED_PARAMS_JSON.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rows_parse() {
        let records = published_records();
        assert_eq!(records.len(), 10);
        for r in &records {
            r.coefficients().unwrap();
            assert!(r.validity_range.is_none());
        }
        assert_eq!(records.iter().filter(|r| r.kind == CurveKind::Abg).count(), 5);
    }

    #[test]
    fn lookup_by_name() {
        let swin = abg_row("swin transformer", Task::Reconstruction).unwrap();
        assert_eq!(swin, AbgParams::new(0.97, 1.91, 1.36, 1.79).unwrap());
        let inference = bit_scaling_row("CNN", Task::Inference).unwrap();
        assert_eq!(inference, BitScalingParams::new(0.88, 0.69, 0.20, 4.50).unwrap());
        assert!(abg_row("ResNet", Task::Reconstruction).is_none());
    }

    #[test]
    fn digest_is_stable_hex() {
        let d = fixture_digest();
        assert_eq!(d.len(), 64);
        assert_eq!(d, fixture_digest());
    }
}
