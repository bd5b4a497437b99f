//! Spill-free classifier runtime: trajectory encoding, transformer encoder
//! inference, and the weight and golden-vector file formats.

mod encode;
mod golden;
mod model;
mod weights;

use thiserror::Error;

pub use encode::{encode, resample, EncodedTrajectory, IN_DIM, N_PROPS};
pub use golden::{max_parity_error, GoldenFile, GoldenVector};
pub use model::{sinusoidal_table, ForwardTrace, LayerNorm, Linear, EncoderLayer, SfcConfig, SfcModel};
pub use weights::{load_weights, read_weights, save_weights, write_weights, MAGIC, VERSION};

#[derive(Debug, Error)]
pub enum SfcError {
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported weight file version {0}")]
    VersionUnsupported(u32),
    #[error("invalid model metadata: {0}")]
    Metadata(String),
    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("weight file ended early")]
    TruncatedFile,
    #[error("unexpected tensor {0:?}")]
    UnexpectedTensor(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
