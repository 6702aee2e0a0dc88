//! Seeded parameter initialisation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::{DType, Tensor};

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Glorot-style normal weight matrix `(fan_in, fan_out)`.
pub fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, dtype: DType) -> Result<Tensor> {
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| std * sample_normal(rng))
        .collect();
    Tensor::param(data, &[fan_in, fan_out], dtype)
}

pub fn normal(rng: &mut ChaCha8Rng, shape: &[usize], std: f64, dtype: DType) -> Result<Tensor> {
    let numel = shape.iter().product();
    let data = (0..numel).map(|_| std * sample_normal(rng)).collect();
    Tensor::param(data, shape, dtype)
}

pub fn zeros_param(shape: &[usize], dtype: DType) -> Result<Tensor> {
    Tensor::param(vec![0.0; shape.iter().product()], shape, dtype)
}

pub fn ones_param(shape: &[usize], dtype: DType) -> Result<Tensor> {
    Tensor::param(vec![1.0; shape.iter().product()], shape, dtype)
}

/// Gaussian noise tensor (not a parameter).
pub fn noise(rng: &mut ChaCha8Rng, shape: &[usize], std: f64, dtype: DType) -> Result<Tensor> {
    let numel = shape.iter().product();
    let data = (0..numel).map(|_| std * sample_normal(rng)).collect();
    Tensor::from_vec(data, shape, dtype)
}
