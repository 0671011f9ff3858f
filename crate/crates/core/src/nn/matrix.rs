use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
///
/// All reductions run in a fixed index order, so results are reproducible
/// bit for bit across runs for identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(self.shape_error("matmul", other));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a_ik * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`. Shapes: (k x m)^T * (k x n) = m x n.
    pub fn transpose_mul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != other.rows {
            return Err(self.shape_error("transpose_mul", other));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a_ki) in a_row.iter().enumerate() {
                let out_row = out.row_mut(i);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a_ki * b_kj;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`. Shapes: (m x k) * (n x k)^T = m x n.
    pub fn mul_transpose(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.cols {
            return Err(self.shape_error("mul_transpose", other));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = other.row(j);
                let mut acc = T::zero();
                for (&a, &b) in a_row.iter().zip(b_row) {
                    acc = acc + a * b;
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.shape_error("add", other));
        }
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Matrix<T>) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.shape_error("add_assign", other));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.data {
            *v = *v * factor;
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hconcat(parts: &[&Matrix<T>]) -> Result<Matrix<T>> {
        let rows = parts.first().map_or(0, |m| m.rows);
        for pair in parts.windows(2) {
            if pair[1].rows != rows {
                return Err(pair[0].shape_error("hconcat", pair[1]));
            }
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let out_row = out.row_mut(i);
            let mut offset = 0;
            for part in parts {
                out_row[offset..offset + part.cols].copy_from_slice(part.row(i));
                offset += part.cols;
            }
        }
        Ok(out)
    }

    /// Column sums as a 1 x cols matrix.
    pub fn sum_rows(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(1, self.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for (o, &v) in out.row_mut(0).iter_mut().zip(row) {
                *o = *o + v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    fn shape_error(&self, op: &'static str, other: &Matrix<T>) -> Error {
        Error::ShapeMismatch {
            op,
            lhs_rows: self.rows,
            lhs_cols: self.cols,
            rhs_rows: other.rows,
            rhs_cols: other.cols,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m64(rows: usize, cols: usize, data: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(rows, cols, data.to_vec())
    }

    #[test]
    fn identity_times_matrix_is_matrix() {
        let eye = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let h = m64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(eye.matmul(&h).unwrap(), h);
    }

    #[test]
    fn one_by_one_product() {
        let a = m64(1, 1, &[2.0]);
        let b = m64(1, 1, &[3.0]);
        assert_eq!(a.matmul(&b).unwrap().get(0, 0), 6.0);
    }

    #[test]
    fn path_adjacency_times_one_hot_sums_neighbor_rows() {
        // Path 0-1-2; features are one-hot per node. Row v of A*X must be
        // the sum of the one-hot rows of v's neighbors.
        let a = m64(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let x = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let prod = a.matmul(&x).unwrap();
        assert_eq!(prod.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(prod.row(1), &[1.0, 0.0, 1.0]);
        assert_eq!(prod.row(2), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(Error::ShapeMismatch { op: "matmul", .. })
        ));
    }

    #[test]
    fn transpose_mul_matches_explicit_transpose() {
        let a = m64(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m64(3, 4, &(0..12).map(|v| v as f64).collect::<Vec<_>>());
        let direct = a.transpose_mul(&b).unwrap();
        let via_transpose = a.transpose().matmul(&b).unwrap();
        assert_eq!(direct, via_transpose);
    }

    #[test]
    fn mul_transpose_matches_explicit_transpose() {
        let a = m64(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m64(4, 3, &(0..12).map(|v| v as f64).collect::<Vec<_>>());
        let direct = a.mul_transpose(&b).unwrap();
        let via_transpose = a.matmul(&b.transpose()).unwrap();
        assert_eq!(direct, via_transpose);
    }

    #[test]
    fn hconcat_lays_out_blocks_in_order() {
        let a = m64(2, 1, &[1.0, 2.0]);
        let b = m64(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let cat = Matrix::hconcat(&[&a, &b]).unwrap();
        assert_eq!(cat.row(0), &[1.0, 3.0, 4.0]);
        assert_eq!(cat.row(1), &[2.0, 5.0, 6.0]);
    }
}
