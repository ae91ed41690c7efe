use rand::Rng;

use super::layers::{sigmoid, Linear};
use super::tensor::Tensor;

/// Gated recurrent unit with the reset gate applied before the candidate's
/// recurrent matrix:
///
/// ```text
/// z  = σ(W_z x + U_z h + b_z)
/// r  = σ(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
/// h' = (1 - z) ⊙ h + z ⊙ h~
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Linear,
    pub u_z: Tensor,
    pub w_r: Linear,
    pub u_r: Tensor,
    pub w_h: Linear,
    pub u_h: Tensor,
}

/// Intermediate values of one GRU step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruStep {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub cand: Vec<f64>,
    pub rh: Vec<f64>,
    pub out: Vec<f64>,
}

impl GruCell {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let u = |rng: &mut R| Tensor::glorot(&[hidden, hidden], hidden, hidden, rng);
        Self {
            w_z: Linear::new(input, hidden, rng),
            u_z: u(rng),
            w_r: Linear::new(input, hidden, rng),
            u_r: u(rng),
            w_h: Linear::new(input, hidden, rng),
            u_h: u(rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.output_dim()
    }

    pub fn step(&self, x: &[f64], h: &[f64]) -> GruStep {
        let n = self.hidden_dim();
        let mut z = self.w_z.forward(x);
        let mut r = self.w_r.forward(x);
        let uz = matvec(&self.u_z, h);
        let ur = matvec(&self.u_r, h);
        for i in 0..n {
            z[i] = sigmoid(z[i] + uz[i]);
            r[i] = sigmoid(r[i] + ur[i]);
        }
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut cand = self.w_h.forward(x);
        let uh = matvec(&self.u_h, &rh);
        for i in 0..n {
            cand[i] = (cand[i] + uh[i]).tanh();
        }
        let out = (0..n).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();
        GruStep {
            x: x.to_vec(),
            h: h.to_vec(),
            z,
            r,
            cand,
            rh,
            out,
        }
    }

    pub fn forward(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        self.step(x, h).out
    }

    /// Back-propagates `dL/dh'` through one step. Accumulates parameter
    /// gradients into `grad`; returns `(dL/dx, dL/dh)`.
    pub fn backward(&self, s: &GruStep, dout: &[f64], grad: &mut GruCell) -> (Vec<f64>, Vec<f64>) {
        let n = self.hidden_dim();
        let mut dh: Vec<f64> = (0..n).map(|i| dout[i] * (1.0 - s.z[i])).collect();
        let da_h: Vec<f64> = (0..n)
            .map(|i| dout[i] * s.z[i] * (1.0 - s.cand[i] * s.cand[i]))
            .collect();
        let da_z: Vec<f64> = (0..n)
            .map(|i| dout[i] * (s.cand[i] - s.h[i]) * s.z[i] * (1.0 - s.z[i]))
            .collect();
        outer_acc(&mut grad.u_h, &da_h, &s.rh);
        let drh = matvec_t(&self.u_h, &da_h);
        let da_r: Vec<f64> = (0..n)
            .map(|i| drh[i] * s.h[i] * s.r[i] * (1.0 - s.r[i]))
            .collect();
        for i in 0..n {
            dh[i] += drh[i] * s.r[i];
        }
        outer_acc(&mut grad.u_z, &da_z, &s.h);
        outer_acc(&mut grad.u_r, &da_r, &s.h);
        let dz_h = matvec_t(&self.u_z, &da_z);
        let dr_h = matvec_t(&self.u_r, &da_r);
        for i in 0..n {
            dh[i] += dz_h[i] + dr_h[i];
        }
        let mut dx = self.w_z.backward(&s.x, &da_z, &mut grad.w_z);
        let dxr = self.w_r.backward(&s.x, &da_r, &mut grad.w_r);
        let dxh = self.w_h.backward(&s.x, &da_h, &mut grad.w_h);
        for i in 0..dx.len() {
            dx[i] += dxr[i] + dxh[i];
        }
        (dx, dh)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w_z: self.w_z.zeros_like(),
            u_z: self.u_z.zeros_like(),
            w_r: self.w_r.zeros_like(),
            u_r: self.u_r.zeros_like(),
            w_h: self.w_h.zeros_like(),
            u_h: self.u_h.zeros_like(),
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Tensor)) {
        f(&format!("{prefix}.w_z.weight"), &self.w_z.weight);
        f(&format!("{prefix}.w_z.bias"), &self.w_z.bias);
        f(&format!("{prefix}.u_z"), &self.u_z);
        f(&format!("{prefix}.w_r.weight"), &self.w_r.weight);
        f(&format!("{prefix}.w_r.bias"), &self.w_r.bias);
        f(&format!("{prefix}.u_r"), &self.u_r);
        f(&format!("{prefix}.w_h.weight"), &self.w_h.weight);
        f(&format!("{prefix}.w_h.bias"), &self.w_h.bias);
        f(&format!("{prefix}.u_h"), &self.u_h);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f(&format!("{prefix}.w_z.weight"), &mut self.w_z.weight);
        f(&format!("{prefix}.w_z.bias"), &mut self.w_z.bias);
        f(&format!("{prefix}.u_z"), &mut self.u_z);
        f(&format!("{prefix}.w_r.weight"), &mut self.w_r.weight);
        f(&format!("{prefix}.w_r.bias"), &mut self.w_r.bias);
        f(&format!("{prefix}.u_r"), &mut self.u_r);
        f(&format!("{prefix}.w_h.weight"), &mut self.w_h.weight);
        f(&format!("{prefix}.w_h.bias"), &mut self.w_h.bias);
        f(&format!("{prefix}.u_h"), &mut self.u_h);
    }
}

/// `m v` for `m` of shape `[rows, cols]`.
pub fn matvec(m: &Tensor, v: &[f64]) -> Vec<f64> {
    let cols = m.shape[1];
    m.data
        .chunks_exact(cols)
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `mᵀ v` for `m` of shape `[rows, cols]`.
pub fn matvec_t(m: &Tensor, v: &[f64]) -> Vec<f64> {
    let cols = m.shape[1];
    let mut out = vec![0.0; cols];
    for (row, &g) in m.data.chunks_exact(cols).zip(v) {
        if g == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += g * a;
        }
    }
    out
}

/// `m += a bᵀ`.
pub fn outer_acc(m: &mut Tensor, a: &[f64], b: &[f64]) {
    let cols = m.shape[1];
    for (row, &g) in m.data.chunks_exact_mut(cols).zip(a) {
        if g == 0.0 {
            continue;
        }
        for (o, v) in row.iter_mut().zip(b) {
            *o += g * v;
        }
    }
}
