//! The uncertainty assessment network: a shared trunk with two sigmoid
//! heads producing the task-clarity score `a_amb_hat` and the expected
//! success rate `p_hat`.
//!
//! Convention: higher `a_amb_hat` means more ambiguity (1 = ambiguity
//! present), matching the hard LLM verdict.
//!
//! Training minimizes, per record,
//! `bce(a_amb_hat, ambiguous) + [ambiguous == 0] * bce(p_hat, success)`:
//! the success term exists only for unambiguous records, so flipping the
//! success label of an ambiguous record cannot change any gradient.
//! Unambiguous records with no logged outcome skip the success term and are
//! counted in a warning tally instead of failing the run.

use thiserror::Error;

use crate::data::{
    Checkpoint, CheckpointMeta, DataError, Dataset, ModelKind, NamedNet, Split, TaskRecord,
};
use crate::nn::{
    adam_step, backward_accumulate, bce_loss, forward, forward_output, init_params, AdamConfig,
    AdamState, Activation, DenseLayer, LayerSpec, Matrix, MlpGrads, MlpParams, MlpSpec, NnError,
};
use crate::rng::{Pcg32, SplitMix64};

/// Trunk width (two relu layers).
pub const UAN_HIDDEN: usize = 256;

/// Inference outputs are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` so both
/// heads stay strictly inside (0, 1) even when a sigmoid saturates in f64.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum UanError {
    #[error("train split is empty")]
    EmptyTrainSplit,
    #[error("embedding dimension {got} does not match model input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UanTrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for UanTrainOptions {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 32,
            lr: 1e-3,
        }
    }
}

/// Loss history plus the tally of unambiguous records that had no outcome
/// to train the success head on.
#[derive(Debug, Clone, PartialEq)]
pub struct UanTrainReport {
    pub loss_history: Vec<f64>,
    pub skipped_missing_success: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UanModel {
    trunk: MlpParams,
    amb_head: MlpParams,
    success_head: MlpParams,
    seed: u64,
    epochs_trained: u64,
    shuffle_seed: u64,
}

fn zero_head() -> MlpParams {
    MlpParams::from_layers(
        UAN_HIDDEN,
        vec![DenseLayer {
            weight: Matrix::zeros(1, UAN_HIDDEN),
            bias: vec![0.0],
            activation: Activation::Sigmoid,
        }],
    )
    .expect("head shape is static")
}

impl UanModel {
    /// Deterministic init: the trunk is seeded from a SplitMix64 chain on
    /// `seed`; both heads start at zero so the untrained model answers
    /// (0.5, 0.5) for every input.
    pub fn new(input_dim: usize, seed: u64) -> Result<Self, UanError> {
        let trunk_spec = MlpSpec::new(
            input_dim,
            vec![
                LayerSpec::new(UAN_HIDDEN, Activation::Relu),
                LayerSpec::new(UAN_HIDDEN, Activation::Relu),
            ],
        )?;
        let mut seeds = SplitMix64::new(seed);
        let trunk = init_params(&trunk_spec, seeds.next_u64());
        let shuffle_seed = seeds.next_u64();
        Ok(Self {
            trunk,
            amb_head: zero_head(),
            success_head: zero_head(),
            seed,
            epochs_trained: 0,
            shuffle_seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epochs_trained(&self) -> u64 {
        self.epochs_trained
    }

    /// Pure forward pass: `(a_amb_hat, p_hat)`, both in the open interval
    /// (0, 1).
    pub fn infer(&self, t: &[f64]) -> Result<(f64, f64), UanError> {
        if t.len() != self.input_dim() {
            return Err(UanError::DimensionMismatch {
                expected: self.input_dim(),
                got: t.len(),
            });
        }
        let h = forward_output(&self.trunk, t)?;
        let a = forward_output(&self.amb_head, &h)?[0];
        let p = forward_output(&self.success_head, &h)?[0];
        Ok((clamp_prob(a), clamp_prob(p)))
    }

    /// Trains trunk and heads jointly on the train split. Returns the
    /// running dataset-mean loss per epoch and the skip tally.
    pub fn train(
        &mut self,
        dataset: &Dataset,
        opts: &UanTrainOptions,
    ) -> Result<UanTrainReport, UanError> {
        let train: Vec<&TaskRecord> = dataset.iter_split(Split::Train).collect();
        if train.is_empty() {
            return Err(UanError::EmptyTrainSplit);
        }
        if dataset.dim() != self.input_dim() {
            return Err(UanError::DimensionMismatch {
                expected: self.input_dim(),
                got: dataset.dim(),
            });
        }
        let skipped_missing_success = train
            .iter()
            .filter(|r| r.ambiguous == 0 && r.success.is_none())
            .count();
        if opts.epochs == 0 {
            return Ok(UanTrainReport {
                loss_history: Vec::new(),
                skipped_missing_success,
            });
        }
        let batch_size = opts.batch_size.max(1);

        let mut shuffle_rng = Pcg32::new(self.shuffle_seed);
        let cfg = AdamConfig::with_lr(opts.lr);
        let mut adam_trunk = AdamState::new(&self.trunk, cfg);
        let mut adam_amb = AdamState::new(&self.amb_head, cfg);
        let mut adam_success = AdamState::new(&self.success_head, cfg);
        let mut g_trunk = MlpGrads::zeros_like(&self.trunk);
        let mut g_amb = MlpGrads::zeros_like(&self.amb_head);
        let mut g_success = MlpGrads::zeros_like(&self.success_head);
        let mut indices: Vec<usize> = (0..train.len()).collect();
        let mut history = Vec::with_capacity(opts.epochs);

        for _ in 0..opts.epochs {
            shuffle_rng.shuffle(&mut indices);
            let mut epoch_loss = 0.0;
            for batch in indices.chunks(batch_size) {
                g_trunk.fill(0.0);
                g_amb.fill(0.0);
                g_success.fill(0.0);
                let inv_b = 1.0 / batch.len() as f64;
                for &i in batch {
                    let record = train[i];
                    let (h, trunk_cache) = forward(&self.trunk, &record.embedding)?;
                    let (a_out, amb_cache) = forward(&self.amb_head, &h)?;
                    let (l_amb, g_a) = bce_loss(a_out[0], record.ambiguous);
                    let grad_h_amb = backward_accumulate(
                        &self.amb_head,
                        &amb_cache,
                        &[g_a * inv_b],
                        &mut g_amb,
                    )?;
                    let mut grad_h = grad_h_amb;
                    let mut loss = l_amb;
                    if record.ambiguous == 0 {
                        if let Some(y) = record.success {
                            let (p_out, success_cache) = forward(&self.success_head, &h)?;
                            let (l_s, g_p) = bce_loss(p_out[0], y);
                            let grad_h_success = backward_accumulate(
                                &self.success_head,
                                &success_cache,
                                &[g_p * inv_b],
                                &mut g_success,
                            )?;
                            for (g, gs) in grad_h.iter_mut().zip(&grad_h_success) {
                                *g += gs;
                            }
                            loss += l_s;
                        }
                    }
                    epoch_loss += loss;
                    backward_accumulate(&self.trunk, &trunk_cache, &grad_h, &mut g_trunk)?;
                }
                adam_step(&mut self.trunk, &g_trunk, &mut adam_trunk)?;
                adam_step(&mut self.amb_head, &g_amb, &mut adam_amb)?;
                adam_step(&mut self.success_head, &g_success, &mut adam_success)?;
            }
            history.push(epoch_loss / train.len() as f64);
        }

        self.epochs_trained += opts.epochs as u64;
        Ok(UanTrainReport {
            loss_history: history,
            skipped_missing_success,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            ModelKind::Uan,
            vec![
                NamedNet::from_params("trunk", &self.trunk),
                NamedNet::from_params("amb_head", &self.amb_head),
                NamedNet::from_params("success_head", &self.success_head),
            ],
            CheckpointMeta {
                seed: self.seed,
                input_dim: self.input_dim(),
                epochs_trained: self.epochs_trained,
                a_sim_mean: None,
                a_sim_max: None,
            },
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, UanError> {
        if ckpt.model_kind != ModelKind::Uan {
            return Err(UanError::Data(DataError::Checkpoint(format!(
                "expected a uan checkpoint, found {:?}",
                ckpt.model_kind
            ))));
        }
        let trunk = ckpt.net("trunk")?.to_params()?;
        let amb_head = ckpt.net("amb_head")?.to_params()?;
        let success_head = ckpt.net("success_head")?.to_params()?;
        if trunk.input_dim() != ckpt.meta.input_dim {
            return Err(UanError::Data(DataError::Checkpoint(
                "trunk input dim disagrees with meta.input_dim".into(),
            )));
        }
        let mut seeds = SplitMix64::new(ckpt.meta.seed);
        let _ = seeds.next_u64();
        let shuffle_seed = seeds.next_u64();
        Ok(Self {
            trunk,
            amb_head,
            success_head,
            seed: ckpt.meta.seed,
            epochs_trained: ckpt.meta.epochs_trained,
            shuffle_seed,
        })
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{make_synthetic, SyntheticConfig};

    #[test]
    fn untrained_model_answers_half_half() {
        let model = UanModel::new(5, 3).unwrap();
        let (a, p) = model.infer(&[1.0, -2.0, 0.3, 4.0, 0.0]).unwrap();
        assert_eq!((a, p), (0.5, 0.5));
    }

    #[test]
    fn init_is_deterministic() {
        let a = UanModel::new(7, 90).unwrap();
        let b = UanModel::new(7, 90).unwrap();
        assert_eq!(a, b);
        let c = UanModel::new(7, 91).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infer_checks_dimension_and_is_pure() {
        let model = UanModel::new(3, 1).unwrap();
        assert!(matches!(
            model.infer(&[1.0]),
            Err(UanError::DimensionMismatch { .. })
        ));
        let x = [0.1, 0.2, 0.3];
        let (a1, p1) = model.infer(&x).unwrap();
        let (a2, p2) = model.infer(&x).unwrap();
        assert_eq!((a1.to_bits(), p1.to_bits()), (a2.to_bits(), p2.to_bits()));
    }

    #[test]
    fn flipping_masked_success_labels_changes_nothing() {
        let cfg = SyntheticConfig {
            n_train: 96,
            n_test: 0,
            seed: 5,
            ..SyntheticConfig::default()
        };
        let base = make_synthetic(&cfg).unwrap();
        let mut flipped_records = base.records().to_vec();
        for r in &mut flipped_records {
            if r.ambiguous == 1 {
                r.success = r.success.map(|s| 1 - s);
            }
        }
        assert_ne!(base.records(), flipped_records.as_slice());
        let flipped = crate::data::Dataset::new(flipped_records).unwrap();

        let opts = UanTrainOptions {
            epochs: 1,
            batch_size: 16,
            lr: 1e-3,
        };
        let mut m1 = UanModel::new(8, 42).unwrap();
        let r1 = m1.train(&base, &opts).unwrap();
        let mut m2 = UanModel::new(8, 42).unwrap();
        let r2 = m2.train(&flipped, &opts).unwrap();
        assert_eq!(m1, m2, "masked labels leaked into training");
        assert_eq!(r1.loss_history, r2.loss_history);
    }

    #[test]
    fn missing_success_on_unambiguous_records_is_tallied() {
        let cfg = SyntheticConfig {
            n_train: 40,
            n_test: 0,
            seed: 9,
            ..SyntheticConfig::default()
        };
        let base = make_synthetic(&cfg).unwrap();
        let mut records = base.records().to_vec();
        let mut dropped = 0;
        for r in records.iter_mut().filter(|r| r.ambiguous == 0).take(7) {
            r.success = None;
            dropped += 1;
        }
        let data = crate::data::Dataset::new(records).unwrap();
        let mut model = UanModel::new(8, 4).unwrap();
        let report = model
            .train(
                &data,
                &UanTrainOptions {
                    epochs: 1,
                    ..Default::default()
                },
            )
            .unwrap();
        assert_eq!(report.skipped_missing_success, dropped);
    }

    #[test]
    fn all_successful_training_pushes_p_hat_up() {
        let cfg = SyntheticConfig {
            n_train: 120,
            n_test: 0,
            w_success: vec![0.0; 8],
            b_success: 30.0,
            seed: 12,
            ..SyntheticConfig::default()
        };
        let data = make_synthetic(&cfg).unwrap();
        let mut model = UanModel::new(8, 77).unwrap();
        model
            .train(
                &data,
                &UanTrainOptions {
                    epochs: 60,
                    batch_size: 32,
                    lr: 1e-3,
                },
            )
            .unwrap();
        let unamb: Vec<_> = data.records().iter().filter(|r| r.ambiguous == 0).collect();
        let mean_p = unamb
            .iter()
            .map(|r| model.infer(&r.embedding).unwrap().1)
            .sum::<f64>()
            / unamb.len() as f64;
        assert!(mean_p > 0.9, "mean p_hat on always-successful data: {mean_p}");
    }

    #[test]
    fn loss_decreases_on_the_synthetic_fixture() {
        let cfg = SyntheticConfig {
            n_train: 150,
            n_test: 0,
            seed: 21,
            ..SyntheticConfig::default()
        };
        let data = make_synthetic(&cfg).unwrap();
        let mut model = UanModel::new(8, 3).unwrap();
        let report = model
            .train(
                &data,
                &UanTrainOptions {
                    epochs: 25,
                    batch_size: 32,
                    lr: 1e-3,
                },
            )
            .unwrap();
        let h = &report.loss_history;
        assert_eq!(h.len(), 25);
        assert!(h.last().unwrap() < h.first().unwrap(), "history: {h:?}");
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("uan.ckpt.json");
        let cfg = SyntheticConfig {
            n_train: 50,
            n_test: 0,
            seed: 2,
            ..SyntheticConfig::default()
        };
        let data = make_synthetic(&cfg).unwrap();
        let mut model = UanModel::new(8, 11).unwrap();
        model
            .train(
                &data,
                &UanTrainOptions {
                    epochs: 3,
                    ..Default::default()
                },
            )
            .unwrap();
        crate::data::save_checkpoint(&model.to_checkpoint(), &path).unwrap();
        let back = UanModel::from_checkpoint(&crate::data::load_checkpoint(&path).unwrap()).unwrap();
        assert_eq!(model, back);
    }
}
