use rand::Rng;

use crate::error::{invalid, shape, Result};
use crate::model::gru::{GruCell, GRU_TENSORS};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

pub const DEFAULT_HIDDEN: usize = 64;
pub const FULL_HIDDEN: usize = 1440;
pub const DEFAULT_MC_SAMPLES: usize = 30;

/// All learnable weights plus the hyperparameters needed to run them.
///
/// The same struct doubles as the gradient container and the optimizer moment
/// buffers, so shapes always mirror each other.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T = f64> {
    pub n_joints: usize,
    pub hidden: usize,
    pub dropout_rate: T,
    pub encoder: GruCell<T>,
    pub decoder: GruCell<T>,
    /// `(3J + J) × H`: velocity means then per-joint log-variances.
    pub head_w: Matrix<T>,
    pub head_b: Matrix<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn feature_dim(n_joints: usize) -> usize {
        9 * n_joints
    }

    pub fn output_dim(n_joints: usize) -> usize {
        4 * n_joints
    }

    pub fn zeros(n_joints: usize, hidden: usize, dropout_rate: T) -> Self {
        let d = Self::feature_dim(n_joints);
        Self {
            n_joints,
            hidden,
            dropout_rate,
            encoder: GruCell::zeros(d, hidden),
            decoder: GruCell::zeros(d, hidden),
            head_w: Matrix::zeros(Self::output_dim(n_joints), hidden),
            head_b: Matrix::zeros(Self::output_dim(n_joints), 1),
        }
    }

    pub fn random<R: Rng>(n_joints: usize, hidden: usize, dropout_rate: T, rng: &mut R) -> Result<Self> {
        if n_joints == 0 || hidden == 0 {
            return Err(invalid("model needs at least one joint and one hidden unit"));
        }
        if !(dropout_rate >= T::zero() && dropout_rate < T::one()) {
            return Err(invalid("dropout rate must lie in [0, 1)"));
        }
        let d = Self::feature_dim(n_joints);
        let encoder = GruCell::random(d, hidden, rng);
        let decoder = GruCell::random(d, hidden, rng);
        let k = 0.1 / (hidden as f64).sqrt();
        let head_w = Matrix::from_fn(Self::output_dim(n_joints), hidden, |_, _| T::lit(rng.gen_range(-k..k)));
        Ok(Self {
            n_joints,
            hidden,
            dropout_rate,
            encoder,
            decoder,
            head_w,
            head_b: Matrix::zeros(Self::output_dim(n_joints), 1),
        })
    }

    /// Same shapes, all zeros; used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n_joints, self.hidden, self.dropout_rate)
    }

    pub fn zero_head(&mut self) {
        self.head_w.fill(T::zero());
        self.head_b.fill(T::zero());
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        let mut out = Vec::with_capacity(20);
        for (prefix, cell) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (name, t) in GRU_TENSORS.iter().zip(cell.tensors()) {
                out.push((format!("{prefix}.{name}"), t));
            }
        }
        out.push(("head.w".to_string(), &self.head_w));
        out.push(("head.b".to_string(), &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        let mut out = Vec::with_capacity(20);
        for (prefix, cell) in [("encoder", &mut self.encoder), ("decoder", &mut self.decoder)] {
            for (name, t) in GRU_TENSORS.iter().zip(cell.tensors_mut()) {
                out.push((format!("{prefix}.{name}"), t));
            }
        }
        out.push(("head.w".to_string(), &mut self.head_w));
        out.push(("head.b".to_string(), &mut self.head_b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_joints == other.n_joints
            && self.hidden == other.hidden
            && self.tensors().iter().zip(other.tensors()).all(|((_, a), (_, b))| a.same_shape(b))
    }

    pub fn check_shapes(&self) -> Result<()> {
        let reference = Self::zeros(self.n_joints, self.hidden, self.dropout_rate);
        if !self.same_shape(&reference) {
            return Err(shape("model tensors inconsistent with J and H"));
        }
        Ok(())
    }

    /// `self += other` elementwise.
    pub fn add_assign(&mut self, other: &Self) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, k: T) {
        for (_, a) in self.tensors_mut() {
            a.data.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn global_norm(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.data.iter())
            .fold(T::zero(), |acc, x| acc + *x * *x)
            .sqrt()
    }

    /// Zeroes every gradient except the log-variance rows of the output head.
    pub fn retain_variance_head_only(&mut self) {
        let rows = 3 * self.n_joints;
        let cols = self.hidden;
        for (name, t) in self.tensors_mut() {
            match name.as_str() {
                "head.w" => t.data[..rows * cols].iter_mut().for_each(|x| *x = T::zero()),
                "head.b" => t.data[..rows].iter_mut().for_each(|x| *x = T::zero()),
                _ => t.fill(T::zero()),
            }
        }
    }
}
