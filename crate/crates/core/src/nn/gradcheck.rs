//! Finite-difference gradient verification.
//!
//! The checker perturbs every parameter of a network by `±h`, evaluates the
//! MSE loss against a fixed target, and compares the central-difference
//! quotient with the analytic gradients from [`backward`]. It is the
//! independent oracle for the whole reverse-mode implementation.

use super::{backward, forward, init_params, mse_loss, MlpGrads, MlpParams, MlpSpec, NnError};
use crate::rng::{Pcg32, SplitMix64};

/// Central-difference step.
pub const GRAD_CHECK_H: f64 = 1e-5;

/// Relative error of `analytic` vs `numeric`, scaled by
/// `max(|analytic|, |numeric|, 1)` so near-zero gradients compare absolutely.
#[inline]
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Worst-case errors per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerError {
    pub weight_max: f64,
    pub bias_max: f64,
}

/// Full comparison result from [`grad_check_at`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckDetail {
    pub max_rel: f64,
    pub layers: Vec<LayerError>,
}

fn loss_of(params: &MlpParams, x: &[f64], target: &[f64]) -> Result<f64, NnError> {
    let (y, _) = forward(params, x)?;
    Ok(mse_loss(&y, target)?.0)
}

/// Central finite differences of the MSE loss over every parameter.
pub fn finite_diff_grads(
    params: &MlpParams,
    x: &[f64],
    target: &[f64],
    h: f64,
) -> Result<MlpGrads, NnError> {
    let mut work = params.clone();
    let mut grads = MlpGrads::zeros_like(params);
    for l in 0..params.layers().len() {
        for idx in 0..params.layers()[l].weight.data().len() {
            let orig = work.layers()[l].weight.data()[idx];
            work.layers_mut()[l].weight.data_mut()[idx] = orig + h;
            let lp = loss_of(&work, x, target)?;
            work.layers_mut()[l].weight.data_mut()[idx] = orig - h;
            let lm = loss_of(&work, x, target)?;
            work.layers_mut()[l].weight.data_mut()[idx] = orig;
            grads.layers[l].d_weight.data_mut()[idx] = (lp - lm) / (2.0 * h);
        }
        for idx in 0..params.layers()[l].bias.len() {
            let orig = work.layers()[l].bias[idx];
            work.layers_mut()[l].bias[idx] = orig + h;
            let lp = loss_of(&work, x, target)?;
            work.layers_mut()[l].bias[idx] = orig - h;
            let lm = loss_of(&work, x, target)?;
            work.layers_mut()[l].bias[idx] = orig;
            grads.layers[l].d_bias[idx] = (lp - lm) / (2.0 * h);
        }
    }
    Ok(grads)
}

/// Compares two gradient sets parameter by parameter.
pub fn compare_grads(analytic: &MlpGrads, numeric: &MlpGrads) -> GradCheckDetail {
    let mut layers = Vec::with_capacity(analytic.layers.len());
    let mut max_rel = 0.0f64;
    for (a, n) in analytic.layers.iter().zip(&numeric.layers) {
        let weight_max = a
            .d_weight
            .data()
            .iter()
            .zip(n.d_weight.data())
            .map(|(&x, &y)| rel_err(x, y))
            .fold(0.0, f64::max);
        let bias_max = a
            .d_bias
            .iter()
            .zip(&n.d_bias)
            .map(|(&x, &y)| rel_err(x, y))
            .fold(0.0, f64::max);
        max_rel = max_rel.max(weight_max).max(bias_max);
        layers.push(LayerError {
            weight_max,
            bias_max,
        });
    }
    GradCheckDetail { max_rel, layers }
}

/// Analytic-vs-numeric comparison at a caller-supplied point.
pub fn grad_check_at(
    params: &MlpParams,
    x: &[f64],
    target: &[f64],
) -> Result<GradCheckDetail, NnError> {
    let (y, cache) = forward(params, x)?;
    let (_, grad_out) = mse_loss(&y, target)?;
    let (analytic, _) = backward(params, &cache, &grad_out)?;
    let numeric = finite_diff_grads(params, x, target, GRAD_CHECK_H)?;
    Ok(compare_grads(&analytic, &numeric))
}

/// Initializes the spec from `seed`, draws a random input and target from
/// derived sub-streams, and returns the maximum relative gradient error.
pub fn grad_check(spec: &MlpSpec, seed: u64) -> Result<f64, NnError> {
    let mut seeds = SplitMix64::new(seed);
    let params = init_params(spec, seeds.next_u64());
    let mut data_rng = Pcg32::new(seeds.next_u64());
    let x: Vec<f64> = (0..spec.input_dim).map(|_| data_rng.next_normal()).collect();
    let target: Vec<f64> = (0..spec.output_dim())
        .map(|_| data_rng.next_normal())
        .collect();
    Ok(grad_check_at(&params, &x, &target)?.max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer, LayerSpec, Matrix};

    #[test]
    fn small_nets_pass_grad_check() {
        let specs = [
            MlpSpec::new(
                3,
                vec![
                    LayerSpec::new(8, Activation::Relu),
                    LayerSpec::new(2, Activation::Identity),
                ],
            )
            .unwrap(),
            MlpSpec::new(
                4,
                vec![
                    LayerSpec::new(6, Activation::Sigmoid),
                    LayerSpec::new(6, Activation::Relu),
                    LayerSpec::new(1, Activation::Sigmoid),
                ],
            )
            .unwrap(),
        ];
        for (i, spec) in specs.iter().enumerate() {
            let err = grad_check(spec, 1000 + i as u64).unwrap();
            assert!(err <= 1e-5, "spec {i}: max rel err {err}");
        }
    }

    #[test]
    fn grad_check_is_deterministic() {
        let spec = MlpSpec::new(
            2,
            vec![
                LayerSpec::new(4, Activation::Sigmoid),
                LayerSpec::new(2, Activation::Identity),
            ],
        )
        .unwrap();
        let a = grad_check(&spec, 7).unwrap();
        let b = grad_check(&spec, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn zero_net_bias_errors_are_exactly_zero() {
        // Identity layer, zero weights/bias, zero input, zero target: the
        // analytic bias gradient is 0 and the central difference cancels
        // exactly, so the comparison must report literal zero.
        let params = MlpParams::from_layers(
            2,
            vec![DenseLayer {
                weight: Matrix::from_vec(2, 2, vec![0.0; 4]).unwrap(),
                bias: vec![0.0; 2],
                activation: Activation::Identity,
            }],
        )
        .unwrap();
        let detail = grad_check_at(&params, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(detail.layers[0].bias_max, 0.0);
        assert_eq!(detail.layers[0].weight_max, 0.0);
        assert_eq!(detail.max_rel, 0.0);
    }

    #[test]
    fn checker_catches_a_sign_bug() {
        // Mutation fixture: negate the sigmoid-path gradients and make sure
        // the comparison blows past the tolerance.
        let spec = MlpSpec::new(3, vec![LayerSpec::new(4, Activation::Sigmoid)]).unwrap();
        let params = init_params(&spec, 21);
        let x = [0.3, -0.8, 0.5];
        let target = [0.1, 0.9, 0.4, 0.6];
        let (y, cache) = forward(&params, &x).unwrap();
        let (_, grad_out) = mse_loss(&y, &target).unwrap();
        let (mut analytic, _) = backward(&params, &cache, &grad_out).unwrap();
        analytic.scale(-1.0);
        let numeric = finite_diff_grads(&params, &x, &target, GRAD_CHECK_H).unwrap();
        let detail = compare_grads(&analytic, &numeric);
        assert!(
            detail.max_rel > 1e-3,
            "sign bug went undetected: {}",
            detail.max_rel
        );
    }
}
