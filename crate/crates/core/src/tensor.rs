//! Row-major dense matrix used for weights, gradients and optimizer moments.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column(values: Vec<T>) -> Self {
        Self { rows: values.len(), cols: 1, data: values }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// `out += self * x`
    pub fn matvec_acc(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = T::zero();
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            *o += acc;
        }
    }

    /// `out += selfᵀ * g`
    pub fn matvec_t_acc(&self, g: &[T], out: &mut [T]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, gr) in g.iter().enumerate() {
            if *gr == T::zero() {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += *w * *gr;
            }
        }
    }

    /// `self += g ⊗ x`
    pub fn outer_acc(&mut self, g: &[T], x: &[T]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        let cols = self.cols;
        for (r, gr) in g.iter().enumerate() {
            if *gr == T::zero() {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += *gr * *xi;
            }
        }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
