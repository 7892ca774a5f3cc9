//! Portable model checkpoints.
//!
//! A checkpoint is a JSON document tagged `cure-ckpt` holding one or more
//! named networks (an RND model stores `target` and `predictor`; a UAN model
//! stores `trunk`, `amb_head`, `success_head`). Weight and bias buffers are
//! base64-encoded little-endian 64-bit floats in row-major order, so a save
//! and load round trip is bit-exact.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::nn::{Activation, DenseLayer, Matrix, MlpParams};

pub const CHECKPOINT_FORMAT: &str = "cure-ckpt";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rnd,
    Uan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBlob {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// base64, little-endian f64, row-major `(out_dim x in_dim)`.
    pub weights: String,
    /// base64, little-endian f64, length `out_dim`.
    pub bias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedNet {
    pub name: String,
    pub layers: Vec<LayerBlob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub input_dim: usize,
    pub epochs_trained: u64,
    /// Training-set A_sim statistics; populated for trained RND models.
    pub a_sim_mean: Option<f64>,
    pub a_sim_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model_kind: ModelKind,
    pub nets: Vec<NamedNet>,
    pub meta: CheckpointMeta,
}

fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_f64s(encoded: &str, expected_len: usize, what: &str) -> Result<Vec<f64>, DataError> {
    let bytes = B64
        .decode(encoded)
        .map_err(|e| DataError::Checkpoint(format!("{what}: bad base64: {e}")))?;
    if bytes.len() != expected_len * 8 {
        return Err(DataError::Checkpoint(format!(
            "{what}: buffer holds {} bytes, expected {} ({} f64s)",
            bytes.len(),
            expected_len * 8,
            expected_len
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

impl LayerBlob {
    pub fn from_layer(layer: &DenseLayer) -> Self {
        Self {
            in_dim: layer.in_dim(),
            out_dim: layer.out_dim(),
            activation: layer.activation,
            weights: encode_f64s(layer.weight.data()),
            bias: encode_f64s(&layer.bias),
        }
    }

    pub fn to_layer(&self) -> Result<DenseLayer, DataError> {
        let weights = decode_f64s(&self.weights, self.in_dim * self.out_dim, "weights")?;
        let bias = decode_f64s(&self.bias, self.out_dim, "bias")?;
        let weight = Matrix::from_vec(self.out_dim, self.in_dim, weights)
            .map_err(|e| DataError::Checkpoint(e.to_string()))?;
        Ok(DenseLayer {
            weight,
            bias,
            activation: self.activation,
        })
    }
}

impl NamedNet {
    pub fn from_params(name: &str, params: &MlpParams) -> Self {
        Self {
            name: name.to_string(),
            layers: params.layers().iter().map(LayerBlob::from_layer).collect(),
        }
    }

    pub fn to_params(&self) -> Result<MlpParams, DataError> {
        let layers: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|b| b.to_layer())
            .collect::<Result<_, _>>()?;
        let input_dim = layers
            .first()
            .map(|l| l.in_dim())
            .ok_or_else(|| DataError::Checkpoint(format!("net {:?} has no layers", self.name)))?;
        MlpParams::from_layers(input_dim, layers)
            .map_err(|e| DataError::Checkpoint(format!("net {:?}: {e}", self.name)))
    }
}

impl Checkpoint {
    pub fn new(model_kind: ModelKind, nets: Vec<NamedNet>, meta: CheckpointMeta) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model_kind,
            nets,
            meta,
        }
    }

    pub fn net(&self, name: &str) -> Result<&NamedNet, DataError> {
        self.nets
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| DataError::Checkpoint(format!("missing net section {name:?}")))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| DataError::Checkpoint(e.to_string()))?;
    std::fs::write(path, json).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| DataError::Checkpoint(format!("parse failed: {e}")))?;
    if ckpt.format != CHECKPOINT_FORMAT {
        return Err(DataError::Checkpoint(format!(
            "bad format tag {:?}, expected {CHECKPOINT_FORMAT:?}",
            ckpt.format
        )));
    }
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(DataError::Checkpoint(format!(
            "unsupported version {}, expected {CHECKPOINT_VERSION}",
            ckpt.version
        )));
    }
    // Decode every buffer up front so shape problems surface at load time.
    for net in &ckpt.nets {
        net.to_params()?;
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, LayerSpec, MlpSpec};

    fn sample_params() -> MlpParams {
        let spec = MlpSpec::new(
            3,
            vec![
                LayerSpec::new(5, Activation::Relu),
                LayerSpec::new(2, Activation::Identity),
            ],
        )
        .unwrap();
        init_params(&spec, 17)
    }

    fn sample_checkpoint() -> Checkpoint {
        Checkpoint::new(
            ModelKind::Rnd,
            vec![
                NamedNet::from_params("target", &sample_params()),
                NamedNet::from_params("predictor", &sample_params()),
            ],
            CheckpointMeta {
                seed: 17,
                input_dim: 3,
                epochs_trained: 0,
                a_sim_mean: Some(0.25),
                a_sim_max: Some(1.5),
            },
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt.json");
        let ckpt = sample_checkpoint();
        save_checkpoint(&ckpt, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(ckpt, back);
        let params = ckpt.net("target").unwrap().to_params().unwrap();
        let params_back = back.net("target").unwrap().to_params().unwrap();
        assert_eq!(params, params_back);
    }

    #[test]
    fn bad_version_and_format_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt.json");

        let mut ckpt = sample_checkpoint();
        ckpt.version = 999;
        save_checkpoint(&ckpt, &path).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("unsupported version"));

        let mut ckpt = sample_checkpoint();
        ckpt.format = "not-a-ckpt".into();
        save_checkpoint(&ckpt, &path).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("bad format tag"));
    }

    #[test]
    fn truncated_buffer_is_a_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt.json");
        let mut ckpt = sample_checkpoint();
        let blob = &mut ckpt.nets[0].layers[0].weights;
        *blob = blob[..blob.len() - 12].to_string();
        save_checkpoint(&ckpt, &path).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("bytes") || msg.contains("base64"),
            "unexpected message: {msg}"
        );
    }
}
