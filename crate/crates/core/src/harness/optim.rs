//! Adam with decoupled weight decay and a cosine learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Cosine decay from `lr` to ~0 over the step budget.
    pub cosine: bool,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lr: 3e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            cosine: true,
        }
    }
}

pub struct AdamW {
    cfg: OptimConfig,
    total_steps: usize,
    t: usize,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    decay_mask: Vec<bool>,
}

impl AdamW {
    /// Weight decay is applied to weight matrices only; biases, gains and
    /// scalar parameters (temperature, curvature scale, alpha) are exempt.
    pub fn new(cfg: OptimConfig, params: &[(String, Tensor)], total_steps: usize) -> AdamW {
        let m = params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect();
        let v = params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect();
        let decay_mask = params
            .iter()
            .map(|(name, p)| {
                p.numel() > 1
                    && !name.contains("bias")
                    && !name.contains(".b")
                    && !name.contains("gain")
            })
            .collect();
        AdamW {
            cfg,
            total_steps,
            t: 0,
            m,
            v,
            decay_mask,
        }
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        if self.cfg.cosine && self.total_steps > 0 {
            let progress = step as f64 / self.total_steps as f64;
            self.cfg.lr * 0.5 * (1.0 + (std::f64::consts::PI * progress.min(1.0)).cos())
        } else {
            self.cfg.lr
        }
    }

    /// One update over all parameters; missing gradients are treated as
    /// zero. Clears gradients afterwards.
    pub fn step(&mut self, params: &[(String, Tensor)]) -> Result<f64> {
        let lr = self.lr_at(self.t);
        self.t += 1;
        let bc1 = 1.0 - self.cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(self.t as i32);
        for (i, (_, p)) in params.iter().enumerate() {
            let grad = match p.grad() {
                Some(g) => g,
                None => {
                    p.zero_grad();
                    continue;
                }
            };
            let mut data = p.to_vec();
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            let decay = if self.decay_mask[i] { self.cfg.weight_decay } else { 0.0 };
            for j in 0..data.len() {
                m[j] = self.cfg.beta1 * m[j] + (1.0 - self.cfg.beta1) * grad[j];
                v[j] = self.cfg.beta2 * v[j] + (1.0 - self.cfg.beta2) * grad[j] * grad[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                data[j] -= lr * (m_hat / (v_hat.sqrt() + self.cfg.eps) + decay * data[j]);
            }
            p.set_data(data)?;
            p.zero_grad();
        }
        Ok(lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DType;

    #[test]
    fn adamw_minimises_a_quadratic() {
        let x = Tensor::param(vec![5.0, -3.0], &[2], DType::F64).unwrap();
        let params = vec![("x".to_string(), x.clone())];
        let mut opt = AdamW::new(
            OptimConfig {
                lr: 0.1,
                weight_decay: 0.0,
                cosine: false,
                ..OptimConfig::default()
            },
            &params,
            200,
        );
        for _ in 0..200 {
            let loss = x.square().unwrap().sum_all().unwrap();
            loss.backward().unwrap();
            opt.step(&params).unwrap();
        }
        for v in x.to_vec() {
            assert!(v.abs() < 1e-2, "did not converge: {v}");
        }
    }

    #[test]
    fn cosine_schedule_decays_to_zero() {
        let x = Tensor::param(vec![1.0], &[1], DType::F64).unwrap();
        let params = vec![("x".to_string(), x)];
        let opt = AdamW::new(OptimConfig::default(), &params, 100);
        assert!((opt.lr_at(0) - 3e-4).abs() < 1e-12);
        assert!(opt.lr_at(50) < 3e-4 * 0.6);
        assert!(opt.lr_at(100) < 1e-8);
    }

    #[test]
    fn scalars_and_biases_skip_weight_decay() {
        let w = Tensor::param(vec![1.0; 4], &[2, 2], DType::F64).unwrap();
        let tau = Tensor::param(vec![1.0], &[1], DType::F64).unwrap();
        let params = vec![
            ("layer.w".to_string(), w.clone()),
            ("align.log_tau".to_string(), tau.clone()),
        ];
        let mut opt = AdamW::new(
            OptimConfig {
                lr: 0.0, // isolate the decay term
                weight_decay: 0.5,
                cosine: false,
                ..OptimConfig::default()
            },
            &params,
            10,
        );
        // zero gradients: only decay could move the values
        let loss = w
            .mul_scalar(0.0)
            .unwrap()
            .sum_all()
            .unwrap()
            .add(&tau.mul_scalar(0.0).unwrap().sum_all().unwrap())
            .unwrap();
        loss.backward().unwrap();
        opt.step(&params).unwrap();
        // lr = 0 means even decayed params stay put; decay scales with lr
        assert_eq!(w.to_vec(), vec![1.0; 4]);
        assert_eq!(tau.to_vec(), vec![1.0]);
    }
}
