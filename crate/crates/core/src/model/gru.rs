use rand::Rng;

use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Gated recurrent cell:
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
/// h' = (1 − z) ⊙ h + z ⊙ h̃
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct GruCell<T = f64> {
    pub w_z: Matrix<T>,
    pub w_r: Matrix<T>,
    pub w_h: Matrix<T>,
    pub u_z: Matrix<T>,
    pub u_r: Matrix<T>,
    pub u_h: Matrix<T>,
    pub b_z: Matrix<T>,
    pub b_r: Matrix<T>,
    pub b_h: Matrix<T>,
}

/// Everything the backward pass needs from one cell step.
#[derive(Clone, Debug, Default)]
pub struct GruStepCache<T> {
    pub input: Vec<T>,
    pub h_prev: Vec<T>,
    /// Recurrent state as seen by the gates (after the hidden dropout mask).
    pub h_gate: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub h_tilde: Vec<T>,
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) const GRU_TENSORS: [&str; 9] = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

impl<T: Scalar> GruCell<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let w = || Matrix::zeros(hidden, input_dim);
        let u = || Matrix::zeros(hidden, hidden);
        let b = || Matrix::zeros(hidden, 1);
        Self { w_z: w(), w_r: w(), w_h: w(), u_z: u(), u_r: u(), u_h: u(), b_z: b(), b_r: b(), b_h: b() }
    }

    /// Uniform(−1/√H, 1/√H) weights, zero biases.
    pub fn random<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        let mut cell = Self::zeros(input_dim, hidden);
        for m in [&mut cell.w_z, &mut cell.w_r, &mut cell.w_h, &mut cell.u_z, &mut cell.u_r, &mut cell.u_h] {
            m.data.iter_mut().for_each(|x| *x = T::lit(rng.gen_range(-k..k)));
        }
        cell
    }

    pub fn hidden(&self) -> usize {
        self.u_z.rows
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols
    }

    pub fn tensors(&self) -> [&Matrix<T>; 9] {
        [&self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r, &self.b_h]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix<T>; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    /// Plain cell step.
    pub fn forward(&self, h: &[T], input: &[T]) -> Vec<T> {
        self.step(h, None, input, false).0
    }

    /// Cell step where the gates see `hidden_mask ⊙ h` while the carry `(1 − z) ⊙ h`
    /// uses the unmasked state. Records a cache when `record` is set.
    pub fn step(
        &self,
        h: &[T],
        hidden_mask: Option<&[T]>,
        input: &[T],
        record: bool,
    ) -> (Vec<T>, Option<GruStepCache<T>>) {
        let n = self.hidden();
        let h_gate: Vec<T> = match hidden_mask {
            Some(m) => h.iter().zip(m).map(|(a, b)| *a * *b).collect(),
            None => h.to_vec(),
        };
        let mut z = self.b_z.data.clone();
        self.w_z.matvec_acc(input, &mut z);
        self.u_z.matvec_acc(&h_gate, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = self.b_r.data.clone();
        self.w_r.matvec_acc(input, &mut r);
        self.u_r.matvec_acc(&h_gate, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let rh: Vec<T> = r.iter().zip(&h_gate).map(|(a, b)| *a * *b).collect();
        let mut h_tilde = self.b_h.data.clone();
        self.w_h.matvec_acc(input, &mut h_tilde);
        self.u_h.matvec_acc(&rh, &mut h_tilde);
        h_tilde.iter_mut().for_each(|v| *v = v.tanh());

        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push((T::one() - z[i]) * h[i] + z[i] * h_tilde[i]);
        }
        let cache = record.then(|| GruStepCache { input: input.to_vec(), h_prev: h.to_vec(), h_gate, z, r, h_tilde });
        (out, cache)
    }

    /// Backward through one step. Accumulates parameter gradients into `grad`,
    /// returns `(d input, d h_prev)`.
    pub fn backward(
        &self,
        cache: &GruStepCache<T>,
        hidden_mask: Option<&[T]>,
        d_out: &[T],
        grad: &mut GruCell<T>,
    ) -> (Vec<T>, Vec<T>) {
        let n = self.hidden();
        let one = T::one();
        let mut d_a_z = vec![T::zero(); n];
        let mut d_a_h = vec![T::zero(); n];
        let mut d_h_prev = vec![T::zero(); n];
        for i in 0..n {
            let z = cache.z[i];
            let ht = cache.h_tilde[i];
            let g = d_out[i];
            d_a_z[i] = g * (ht - cache.h_prev[i]) * z * (one - z);
            d_a_h[i] = g * z * (one - ht * ht);
            d_h_prev[i] = g * (one - z);
        }
        let rh: Vec<T> = cache.r.iter().zip(&cache.h_gate).map(|(a, b)| *a * *b).collect();
        grad.w_h.outer_acc(&d_a_h, &cache.input);
        grad.u_h.outer_acc(&d_a_h, &rh);
        add_into(&mut grad.b_h.data, &d_a_h);
        let mut d_rh = vec![T::zero(); n];
        self.u_h.matvec_t_acc(&d_a_h, &mut d_rh);

        let mut d_h_gate = vec![T::zero(); n];
        let mut d_a_r = vec![T::zero(); n];
        for i in 0..n {
            let r = cache.r[i];
            d_a_r[i] = d_rh[i] * cache.h_gate[i] * r * (one - r);
            d_h_gate[i] = d_rh[i] * r;
        }
        grad.w_z.outer_acc(&d_a_z, &cache.input);
        grad.u_z.outer_acc(&d_a_z, &cache.h_gate);
        add_into(&mut grad.b_z.data, &d_a_z);
        self.u_z.matvec_t_acc(&d_a_z, &mut d_h_gate);

        grad.w_r.outer_acc(&d_a_r, &cache.input);
        grad.u_r.outer_acc(&d_a_r, &cache.h_gate);
        add_into(&mut grad.b_r.data, &d_a_r);
        self.u_r.matvec_t_acc(&d_a_r, &mut d_h_gate);

        let mut d_input = vec![T::zero(); self.input_dim()];
        self.w_z.matvec_t_acc(&d_a_z, &mut d_input);
        self.w_r.matvec_t_acc(&d_a_r, &mut d_input);
        self.w_h.matvec_t_acc(&d_a_h, &mut d_input);

        match hidden_mask {
            Some(m) => {
                for i in 0..n {
                    d_h_prev[i] += d_h_gate[i] * m[i];
                }
            }
            None => add_into(&mut d_h_prev, &d_h_gate),
        }
        (d_input, d_h_prev)
    }
}

#[inline]
pub(crate) fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Scalar-loop re-implementation of the gate equations, written independently.
    fn oracle(cell: &GruCell<f64>, h: &[f64], x: &[f64]) -> Vec<f64> {
        let n = h.len();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut out = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut az = cell.b_z.data[i];
            let mut ar = cell.b_r.data[i];
            for k in 0..x.len() {
                az += cell.w_z.get(i, k) * x[k];
                ar += cell.w_r.get(i, k) * x[k];
            }
            for k in 0..n {
                az += cell.u_z.get(i, k) * h[k];
                ar += cell.u_r.get(i, k) * h[k];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        for i in 0..n {
            let mut ah = cell.b_h.data[i];
            for k in 0..x.len() {
                ah += cell.w_h.get(i, k) * x[k];
            }
            for k in 0..n {
                ah += cell.u_h.get(i, k) * r[k] * h[k];
            }
            out[i] = (1.0 - z[i]) * h[i] + z[i] * ah.tanh();
        }
        out
    }

    #[test]
    fn zero_cell_fixed_point() {
        let cell = GruCell::<f64>::zeros(3, 4);
        assert_eq!(cell.forward(&[0.0; 4], &[0.0; 3]), vec![0.0; 4]);
        // z = 0.5, h̃ = 0 → h' = h/2
        assert_eq!(cell.forward(&[1.0; 4], &[0.0; 3]), vec![0.5; 4]);
    }

    #[test]
    fn saturated_update_gate_ignores_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cell = GruCell::<f64>::random(3, 4, &mut rng);
        cell.b_z.fill(60.0);
        let x = [0.1, -0.2, 0.3];
        let a = cell.forward(&[0.0; 4], &x);
        let b = cell.forward(&[0.0; 4], &x);
        assert_eq!(a, b);
        // with z≈1, h' ≈ h̃; h enters only through U_h(r⊙h)
        let mut c2 = cell.clone();
        c2.u_h.fill(0.0);
        let p = c2.forward(&[0.9, -0.9, 0.5, 0.1], &x);
        let q = c2.forward(&[-0.3, 0.2, -0.5, 0.7], &x);
        for (u, v) in p.iter().zip(&q) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let hid = 1 + trial % 8;
            let d = 1 + (trial * 7) % 9;
            let mut cell = GruCell::<f64>::random(d, hid, &mut rng);
            for b in [&mut cell.b_z, &mut cell.b_r, &mut cell.b_h] {
                b.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
            }
            let h: Vec<f64> = (0..hid).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let got = cell.forward(&h, &x);
            let want = oracle(&cell, &h, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
        }
    }
}
