use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Mean softmax cross-entropy over the rows of `logits`, with the gradient
/// `(softmax - onehot) / batch`. Stabilized by per-row max subtraction.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>)> {
    if labels.len() != logits.rows() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let classes = logits.cols();
    let batch = T::from_config(logits.rows() as f64);
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut loss = T::zero();
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut sum = T::zero();
        for &v in row {
            sum += (v - max).exp();
        }
        let log_sum = max + sum.ln();
        loss += log_sum - row[label];
        let grad_row = grad.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            let p = (v - log_sum).exp();
            let target = if j == label { T::one() } else { T::zero() };
            grad_row[j] = (p - target) / batch;
        }
    }
    Ok((loss / batch, grad))
}

/// Per-row softmax probabilities.
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    out
}

/// Index of the row maximum; the first one on ties.
pub fn argmax_row<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
