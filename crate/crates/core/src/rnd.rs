//! Task-familiarity scoring by random network distillation.
//!
//! A frozen, randomly initialized target network and a trained predictor
//! network both map the task encoding to a k-dimensional embedding; the
//! Euclidean distance between their outputs is the familiarity score
//! `A_sim`. The predictor is trained to imitate the target on known tasks,
//! so the distance stays small in-distribution and grows on novel inputs.
//!
//! Architectures: target `input -> 512 relu -> 128 identity`, predictor
//! `input -> 512 relu -> 512 relu -> 128 identity`. The predictor is one
//! layer deeper so it can express the target. The score is used raw; the
//! combiner's `alpha3` absorbs its scale, and the training-set mean/max are
//! stored for scale inspection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    Checkpoint, CheckpointMeta, DataError, Dataset, ModelKind, NamedNet, Split, TaskRecord,
};
use crate::nn::{
    adam_step, backward_accumulate, forward, forward_output, init_params, AdamConfig, AdamState,
    Activation, LayerSpec, MlpGrads, MlpParams, MlpSpec, NnError,
};
use crate::rng::{Pcg32, SplitMix64};

/// Output embedding dimension of both networks.
pub const RND_EMBED_DIM: usize = 128;
/// Hidden width of both networks.
pub const RND_HIDDEN: usize = 512;

#[derive(Debug, Error)]
pub enum RndError {
    #[error("train split is empty")]
    EmptyTrainSplit,
    #[error("embedding dimension {got} does not match model input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Mean and max familiarity over the training split, recomputed after each
/// training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RndTrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for RndTrainOptions {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 32,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RndModel {
    target: MlpParams,
    predictor: MlpParams,
    seed: u64,
    epochs_trained: u64,
    train_stats: Option<TrainStats>,
    shuffle_seed: u64,
}

impl RndModel {
    /// Deterministic init. One SplitMix64 chain seeded with `seed` yields,
    /// in order, the target init seed, the predictor init seed, and the
    /// epoch-shuffle seed.
    pub fn new(input_dim: usize, seed: u64) -> Result<Self, RndError> {
        let target_spec = MlpSpec::new(
            input_dim,
            vec![
                LayerSpec::new(RND_HIDDEN, Activation::Relu),
                LayerSpec::new(RND_EMBED_DIM, Activation::Identity),
            ],
        )?;
        let predictor_spec = MlpSpec::new(
            input_dim,
            vec![
                LayerSpec::new(RND_HIDDEN, Activation::Relu),
                LayerSpec::new(RND_HIDDEN, Activation::Relu),
                LayerSpec::new(RND_EMBED_DIM, Activation::Identity),
            ],
        )?;
        let mut seeds = SplitMix64::new(seed);
        let target = init_params(&target_spec, seeds.next_u64());
        let predictor = init_params(&predictor_spec, seeds.next_u64());
        let shuffle_seed = seeds.next_u64();
        Ok(Self {
            target,
            predictor,
            seed,
            epochs_trained: 0,
            train_stats: None,
            shuffle_seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.target.input_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epochs_trained(&self) -> u64 {
        self.epochs_trained
    }

    pub fn train_stats(&self) -> Option<TrainStats> {
        self.train_stats
    }

    /// The frozen target parameters; never modified after init.
    pub fn target(&self) -> &MlpParams {
        &self.target
    }

    pub fn predictor(&self) -> &MlpParams {
        &self.predictor
    }

    /// Familiarity score `A_sim`: Euclidean distance between the target and
    /// predictor embeddings of `t`.
    pub fn score(&self, t: &[f64]) -> Result<f64, RndError> {
        if t.len() != self.input_dim() {
            return Err(RndError::DimensionMismatch {
                expected: self.input_dim(),
                got: t.len(),
            });
        }
        let z_target = forward_output(&self.target, t)?;
        let z_pred = forward_output(&self.predictor, t)?;
        Ok(euclidean(&z_target, &z_pred))
    }

    /// Trains the predictor on the train split, minimizing the mean squared
    /// embedding distance per batch. Returns one loss value per epoch: the
    /// running dataset mean of the per-record squared distance (each record
    /// evaluated just before its batch's update). Only predictor parameters
    /// change; the target stays frozen.
    pub fn train(
        &mut self,
        dataset: &Dataset,
        opts: &RndTrainOptions,
    ) -> Result<Vec<f64>, RndError> {
        let train: Vec<&TaskRecord> = dataset.iter_split(Split::Train).collect();
        if train.is_empty() {
            return Err(RndError::EmptyTrainSplit);
        }
        if dataset.dim() != self.input_dim() {
            return Err(RndError::DimensionMismatch {
                expected: self.input_dim(),
                got: dataset.dim(),
            });
        }
        if opts.epochs == 0 {
            return Ok(Vec::new());
        }
        let batch_size = opts.batch_size.max(1);

        // Target embeddings never change; compute them once.
        let targets: Vec<Vec<f64>> = train
            .iter()
            .map(|r| forward_output(&self.target, &r.embedding))
            .collect::<Result<_, _>>()?;

        let mut shuffle_rng = Pcg32::new(self.shuffle_seed);
        let mut adam = AdamState::new(&self.predictor, AdamConfig::with_lr(opts.lr));
        let mut grads = MlpGrads::zeros_like(&self.predictor);
        let mut indices: Vec<usize> = (0..train.len()).collect();
        let mut history = Vec::with_capacity(opts.epochs);

        for _ in 0..opts.epochs {
            shuffle_rng.shuffle(&mut indices);
            let mut epoch_loss = 0.0;
            for batch in indices.chunks(batch_size) {
                grads.fill(0.0);
                let inv_b = 1.0 / batch.len() as f64;
                for &i in batch {
                    let (z_pred, cache) = forward(&self.predictor, &train[i].embedding)?;
                    let z_target = &targets[i];
                    let mut grad_out = vec![0.0; z_pred.len()];
                    let mut sq = 0.0;
                    for (g, (&p, &t)) in grad_out.iter_mut().zip(z_pred.iter().zip(z_target)) {
                        let d = p - t;
                        sq += d * d;
                        *g = 2.0 * d * inv_b;
                    }
                    epoch_loss += sq;
                    backward_accumulate(&self.predictor, &cache, &grad_out, &mut grads)?;
                }
                adam_step(&mut self.predictor, &grads, &mut adam)?;
            }
            history.push(epoch_loss / train.len() as f64);
        }

        self.epochs_trained += opts.epochs as u64;
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for r in &train {
            let s = self.score(&r.embedding)?;
            sum += s;
            max = max.max(s);
        }
        self.train_stats = Some(TrainStats {
            mean: sum / train.len() as f64,
            max,
        });
        Ok(history)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            ModelKind::Rnd,
            vec![
                NamedNet::from_params("target", &self.target),
                NamedNet::from_params("predictor", &self.predictor),
            ],
            CheckpointMeta {
                seed: self.seed,
                input_dim: self.input_dim(),
                epochs_trained: self.epochs_trained,
                a_sim_mean: self.train_stats.map(|s| s.mean),
                a_sim_max: self.train_stats.map(|s| s.max),
            },
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, RndError> {
        if ckpt.model_kind != ModelKind::Rnd {
            return Err(RndError::Data(DataError::Checkpoint(format!(
                "expected an rnd checkpoint, found {:?}",
                ckpt.model_kind
            ))));
        }
        let target = ckpt.net("target")?.to_params()?;
        let predictor = ckpt.net("predictor")?.to_params()?;
        if target.input_dim() != ckpt.meta.input_dim || predictor.input_dim() != ckpt.meta.input_dim
        {
            return Err(RndError::Data(DataError::Checkpoint(
                "net input dims disagree with meta.input_dim".into(),
            )));
        }
        let train_stats = match (ckpt.meta.a_sim_mean, ckpt.meta.a_sim_max) {
            (Some(mean), Some(max)) => Some(TrainStats { mean, max }),
            _ => None,
        };
        let mut seeds = SplitMix64::new(ckpt.meta.seed);
        let _ = seeds.next_u64();
        let _ = seeds.next_u64();
        let shuffle_seed = seeds.next_u64();
        Ok(Self {
            target,
            predictor,
            seed: ckpt.meta.seed,
            epochs_trained: ckpt.meta.epochs_trained,
            train_stats,
            shuffle_seed,
        })
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TaskRecord;

    fn dataset_of(embeddings: Vec<Vec<f64>>) -> Dataset {
        let records = embeddings
            .into_iter()
            .enumerate()
            .map(|(i, embedding)| TaskRecord {
                id: format!("r{i}"),
                embedding,
                ambiguous: 0,
                success: Some(1),
                split: Split::Train,
            })
            .collect();
        Dataset::new(records).unwrap()
    }

    #[test]
    fn same_seed_reproduces_target_outputs() {
        let a = RndModel::new(6, 42).unwrap();
        let b = RndModel::new(6, 42).unwrap();
        let x = vec![0.3, -0.2, 0.9, 0.0, 1.1, -0.7];
        assert_eq!(
            forward_output(a.target(), &x).unwrap(),
            forward_output(b.target(), &x).unwrap()
        );
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_model_scores_positive() {
        let model = RndModel::new(4, 9).unwrap();
        let s = model.score(&[0.5, -0.5, 1.0, 2.0]).unwrap();
        assert!(s > 0.0);
        // Purity: same input, same bits.
        let s2 = model.score(&[0.5, -0.5, 1.0, 2.0]).unwrap();
        assert_eq!(s.to_bits(), s2.to_bits());
    }

    #[test]
    fn score_rejects_wrong_dimension() {
        let model = RndModel::new(4, 9).unwrap();
        assert!(matches!(
            model.score(&[1.0, 2.0]),
            Err(RndError::DimensionMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut model = RndModel::new(3, 5).unwrap();
        let before = model.clone();
        let history = model
            .train(
                &dataset_of(vec![vec![0.1, 0.2, 0.3]]),
                &RndTrainOptions {
                    epochs: 0,
                    ..Default::default()
                },
            )
            .unwrap();
        assert!(history.is_empty());
        assert_eq!(model, before);
    }

    #[test]
    fn target_stays_frozen_and_loss_decreases() {
        let mut rng = Pcg32::new(77);
        let embeddings: Vec<Vec<f64>> = (0..48)
            .map(|_| (0..6).map(|_| rng.next_normal() * 0.5).collect())
            .collect();
        let dataset = dataset_of(embeddings);
        let mut model = RndModel::new(6, 123).unwrap();
        let target_before = model.target().clone();
        let history = model
            .train(
                &dataset,
                &RndTrainOptions {
                    epochs: 30,
                    batch_size: 16,
                    lr: 1e-3,
                },
            )
            .unwrap();
        assert_eq!(model.target(), &target_before, "target must stay frozen");
        assert_eq!(history.len(), 30);
        assert!(
            history.last().unwrap() < history.first().unwrap(),
            "loss did not decrease: {history:?}"
        );
        assert!(model.train_stats().is_some());
    }

    #[test]
    fn single_record_converges_to_tiny_score() {
        let record = vec![0.4, -0.3, 0.8];
        let dataset = dataset_of(vec![record.clone()]);
        let mut model = RndModel::new(3, 2024).unwrap();
        model
            .train(
                &dataset,
                &RndTrainOptions {
                    epochs: 2000,
                    batch_size: 1,
                    lr: 1e-3,
                },
            )
            .unwrap();
        let s = model.score(&record).unwrap();
        assert!(s < 1e-3, "A_sim after overfitting one record: {s}");
    }

    #[test]
    fn empty_train_split_is_an_error() {
        let records = vec![TaskRecord {
            id: "only-test".into(),
            embedding: vec![1.0, 2.0],
            ambiguous: 0,
            success: Some(1),
            split: Split::Test,
        }];
        let dataset = Dataset::new(records).unwrap();
        let mut model = RndModel::new(2, 1).unwrap();
        assert!(matches!(
            model.train(&dataset, &RndTrainOptions::default()),
            Err(RndError::EmptyTrainSplit)
        ));
    }

    #[test]
    fn checkpoint_round_trip_preserves_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rnd.ckpt.json");
        let mut model = RndModel::new(5, 31).unwrap();
        let data = dataset_of(
            (0..20)
                .map(|i| (0..5).map(|d| ((i * 5 + d) as f64).sin()).collect())
                .collect(),
        );
        model
            .train(
                &data,
                &RndTrainOptions {
                    epochs: 5,
                    ..Default::default()
                },
            )
            .unwrap();
        crate::data::save_checkpoint(&model.to_checkpoint(), &path).unwrap();
        let back = RndModel::from_checkpoint(&crate::data::load_checkpoint(&path).unwrap()).unwrap();
        assert_eq!(model, back);
        let mut rng = Pcg32::new(8);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.next_normal()).collect();
            let a = model.score(&x).unwrap();
            let b = back.score(&x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
