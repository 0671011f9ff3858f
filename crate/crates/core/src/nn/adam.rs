use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adam optimizer state: per-parameter first and second moments plus the
/// step counter for bias correction. beta1 = 0.9, beta2 = 0.999,
/// epsilon = 1e-8.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    step: usize,
    beta1: T,
    beta2: T,
    epsilon: T,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(slot_lens: &[usize]) -> AdamState<T> {
        AdamState {
            step: 0,
            beta1: T::from_config(0.9),
            beta2: T::from_config(0.999),
            epsilon: T::from_config(1e-8),
            first: slot_lens.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: slot_lens.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One bias-corrected update of every parameter slot in place.
    pub fn step(
        &mut self,
        params: &mut [&mut [T]],
        grads: &[&[T]],
        learning_rate: T,
    ) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::InvalidArgument(format!(
                "adam state holds {} slots, got {} params / {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let one = T::one();
        let bias1 = one - self.beta1.powi(self.step as i32);
        let bias2 = one - self.beta2.powi(self.step as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(&mut self.second))
        {
            if param.len() != m.len() || grad.len() != m.len() {
                return Err(Error::InvalidArgument(format!(
                    "adam slot length mismatch: state {}, param {}, grad {}",
                    m.len(),
                    param.len(),
                    grad.len()
                )));
            }
            for i in 0..m.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                param[i] = param[i] - learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Step-decay schedule: the base rate halved once per `halve_every` epochs.
pub fn scheduled_lr(base: f64, halve_every: usize, epoch: usize) -> f64 {
    if halve_every == 0 {
        return base;
    }
    base * 0.5f64.powi((epoch / halve_every) as i32)
}
