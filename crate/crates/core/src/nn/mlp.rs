use rand::Rng;

use crate::error::Result;
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// One-hidden-layer perceptron: ReLU on the hidden layer, identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub w1: Matrix<T>,
    pub b1: Vec<T>,
    pub w2: Matrix<T>,
    pub b2: Vec<T>,
}

/// Intermediates retained by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    input: Matrix<T>,
    pre_activation: Matrix<T>,
    hidden: Matrix<T>,
    dropout_scale: Option<Matrix<T>>,
}

/// Parameter gradients in the same layout as the parameters themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParamGrads<T> {
    pub dw1: Matrix<T>,
    pub db1: Vec<T>,
    pub dw2: Matrix<T>,
    pub db2: Vec<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn glorot(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Mlp<T> {
        Mlp {
            w1: glorot_matrix(input, hidden, rng),
            b1: vec![T::zero(); hidden],
            w2: glorot_matrix(hidden, output, rng),
            b2: vec![T::zero(); output],
        }
    }

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Mlp<T> {
        Mlp {
            w1: Matrix::zeros(input, hidden),
            b1: vec![T::zero(); hidden],
            w2: Matrix::zeros(hidden, output),
            b2: vec![T::zero(); output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    /// `y = relu(x W1 + b1) W2 + b2`, row per sample. With `training` set
    /// and `dropout > 0`, inverted dropout is applied to the hidden
    /// activation.
    pub fn forward(
        &self,
        x: &Matrix<T>,
        dropout: f64,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<(Matrix<T>, MlpCache<T>)> {
        let mut pre = x.matmul(&self.w1)?;
        add_row_bias(&mut pre, &self.b1);
        let mut hidden = pre.map(|v| v.max(T::zero()));
        let dropout_scale = if training && dropout > 0.0 {
            let keep = T::from_config(1.0 - dropout);
            let inv_keep = T::one() / keep;
            let scale = Matrix::from_fn(hidden.rows(), hidden.cols(), |_, _| {
                if rng.random::<f64>() < dropout {
                    T::zero()
                } else {
                    inv_keep
                }
            });
            for (h, &s) in hidden.values_mut().iter_mut().zip(scale.values()) {
                *h = *h * s;
            }
            Some(scale)
        } else {
            None
        };
        let mut out = hidden.matmul(&self.w2)?;
        add_row_bias(&mut out, &self.b2);
        Ok((
            out,
            MlpCache {
                input: x.clone(),
                pre_activation: pre,
                hidden,
                dropout_scale,
            },
        ))
    }

    /// Exact gradients of the forward map. Returns parameter gradients and
    /// the gradient with respect to the input rows.
    pub fn backward(
        &self,
        cache: &MlpCache<T>,
        upstream: &Matrix<T>,
    ) -> Result<(MlpParamGrads<T>, Matrix<T>)> {
        let db2 = upstream.sum_rows().into_values();
        let dw2 = cache.hidden.transpose_mul(upstream)?;
        let mut dhidden = upstream.mul_transpose(&self.w2)?;
        if let Some(scale) = &cache.dropout_scale {
            for (d, &s) in dhidden.values_mut().iter_mut().zip(scale.values()) {
                *d = *d * s;
            }
        }
        for (d, &p) in dhidden
            .values_mut()
            .iter_mut()
            .zip(cache.pre_activation.values())
        {
            if p <= T::zero() {
                *d = T::zero();
            }
        }
        let db1 = dhidden.sum_rows().into_values();
        let dw1 = cache.input.transpose_mul(&dhidden)?;
        let dinput = dhidden.mul_transpose(&self.w1)?;
        Ok((MlpParamGrads { dw1, db1, dw2, db2 }, dinput))
    }

    pub fn param_slot_lens(&self) -> Vec<usize> {
        vec![
            self.w1.values().len(),
            self.b1.len(),
            self.w2.values().len(),
            self.b2.len(),
        ]
    }

    pub fn param_slots_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.w1.values_mut(),
            &mut self.b1,
            self.w2.values_mut(),
            &mut self.b2,
        ]
    }
}

impl<T: Scalar> MlpParamGrads<T> {
    pub fn zeros_like(mlp: &Mlp<T>) -> MlpParamGrads<T> {
        MlpParamGrads {
            dw1: Matrix::zeros(mlp.w1.rows(), mlp.w1.cols()),
            db1: vec![T::zero(); mlp.b1.len()],
            dw2: Matrix::zeros(mlp.w2.rows(), mlp.w2.cols()),
            db2: vec![T::zero(); mlp.b2.len()],
        }
    }

    pub fn add_assign(&mut self, other: &MlpParamGrads<T>) -> Result<()> {
        self.dw1.add_assign(&other.dw1)?;
        self.dw2.add_assign(&other.dw2)?;
        for (a, &b) in self.db1.iter_mut().zip(&other.db1) {
            *a += b;
        }
        for (a, &b) in self.db2.iter_mut().zip(&other.db2) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        self.dw1.scale(factor);
        self.dw2.scale(factor);
        for v in &mut self.db1 {
            *v = *v * factor;
        }
        for v in &mut self.db2 {
            *v = *v * factor;
        }
    }

    pub fn slots(&self) -> Vec<&[T]> {
        vec![
            self.dw1.values(),
            &self.db1,
            self.dw2.values(),
            &self.db2,
        ]
    }
}

fn add_row_bias<T: Scalar>(m: &mut Matrix<T>, bias: &[T]) {
    for i in 0..m.rows() {
        for (v, &b) in m.row_mut(i).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn glorot_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| {
        T::from_config(rng.random::<f64>() * 2.0 * limit - limit)
    })
}
