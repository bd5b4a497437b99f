use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::encode::EncodedTrajectory;
use super::model::SfcModel;
use super::SfcError;

/// One reference inference exported alongside a weight file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    /// `seq_len` rows of 8 channels.
    pub input: Vec<Vec<f64>>,
    pub props: Vec<f64>,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl GoldenVector {
    pub fn encoded(&self) -> Result<EncodedTrajectory, SfcError> {
        let rows = self.input.len();
        let cols = self.input.first().map_or(0, Vec::len);
        if self.input.iter().any(|r| r.len() != cols) {
            return Err(SfcError::Metadata("ragged golden input".into()));
        }
        let flat: Vec<f64> = self.input.iter().flatten().copied().collect();
        let matrix = Array2::from_shape_vec((rows, cols), flat).expect("rectangular");
        Ok(EncodedTrajectory { matrix, props: Array1::from(self.props.clone()) })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub vectors: Vec<GoldenVector>,
}

impl GoldenFile {
    pub fn load(path: &Path) -> Result<Self, SfcError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), SfcError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// Largest |runtime - expected| probability over the file.
pub fn max_parity_error(m: &SfcModel, goldens: &GoldenFile) -> Result<f64, SfcError> {
    let mut worst = 0.0f64;
    for g in &goldens.vectors {
        let p = m.forward(&g.encoded()?)?;
        worst = worst.max((p - g.probability).abs());
    }
    Ok(worst)
}
