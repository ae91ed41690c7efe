use rand::Rng;

use super::tensor::Tensor;

/// `y = W x + b` with `W` of shape `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            weight: Tensor::glorot(&[output, input], input, output, rng),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n_in = self.input_dim();
        debug_assert_eq!(x.len(), n_in);
        self.weight
            .data
            .chunks_exact(n_in)
            .zip(&self.bias.data)
            .map(|(row, b)| b + dot(row, x))
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        let n_in = self.input_dim();
        let mut dx = vec![0.0; n_in];
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias.data[o] += g;
            let row = &self.weight.data[o * n_in..(o + 1) * n_in];
            let grow = &mut grad.weight.data[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
        dx
    }

    /// Like [`Linear::backward`] without computing `dL/dx`.
    pub fn backward_params(&self, x: &[f64], dy: &[f64], grad: &mut Linear) {
        let n_in = self.input_dim();
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias.data[o] += g;
            let grow = &mut grad.weight.data[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                grow[i] += g * x[i];
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 3×3 convolution with zero padding 1 over a `[channels, height, width]`
/// feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `[out, in, 3, 3]`
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
}

/// A `[channels, height, width]` activation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

impl Conv2d {
    pub fn new<R: Rng>(input: usize, output: usize, stride: usize, rng: &mut R) -> Self {
        Self {
            weight: Tensor::glorot(&[output, input, 3, 3], input * 9, output * 9, rng),
            bias: Tensor::zeros(&[output]),
            stride,
        }
    }

    pub fn out_size(&self, n: usize) -> usize {
        (n + 2 - 3) / self.stride + 1
    }

    pub fn forward(&self, x: &FeatureMap) -> FeatureMap {
        let (oc_n, ic_n) = (self.weight.shape[0], self.weight.shape[1]);
        debug_assert_eq!(ic_n, x.channels);
        let (oh, ow) = (self.out_size(x.height), self.out_size(x.width));
        let mut out = FeatureMap::zeros(oc_n, oh, ow);
        let s = self.stride;
        for oc in 0..oc_n {
            let b = self.bias.data[oc];
            let plane = &mut out.data[oc * oh * ow..(oc + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = b);
            for ic in 0..ic_n {
                let wk = &self.weight.data[(oc * ic_n + ic) * 9..(oc * ic_n + ic) * 9 + 9];
                let inp = &x.data[ic * x.height * x.width..(ic + 1) * x.height * x.width];
                for oy in 0..oh {
                    for ky in 0..3 {
                        let iy = (oy * s + ky) as isize - 1;
                        if iy < 0 || iy >= x.height as isize {
                            continue;
                        }
                        let row = &inp[iy as usize * x.width..(iy as usize + 1) * x.width];
                        let orow = &mut plane[oy * ow..(oy + 1) * ow];
                        for kx in 0..3 {
                            let w = wk[ky * 3 + kx];
                            for (ox, o) in orow.iter_mut().enumerate() {
                                let ix = (ox * s + kx) as isize - 1;
                                if ix >= 0 && (ix as usize) < x.width {
                                    *o += w * row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients; returns `dL/dx` when `need_dx`.
    pub fn backward(&self, x: &FeatureMap, dy: &FeatureMap, grad: &mut Conv2d, need_dx: bool) -> Option<FeatureMap> {
        let (oc_n, ic_n) = (self.weight.shape[0], self.weight.shape[1]);
        let (oh, ow) = (dy.height, dy.width);
        let s = self.stride;
        let mut dx = need_dx.then(|| FeatureMap::zeros(x.channels, x.height, x.width));
        for oc in 0..oc_n {
            let dplane = &dy.data[oc * oh * ow..(oc + 1) * oh * ow];
            grad.bias.data[oc] += dplane.iter().sum::<f64>();
            for ic in 0..ic_n {
                let base = (oc * ic_n + ic) * 9;
                let inp = &x.data[ic * x.height * x.width..(ic + 1) * x.height * x.width];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let w = self.weight.data[base + ky * 3 + kx];
                        let mut gw = 0.0;
                        for oy in 0..oh {
                            let iy = (oy * s + ky) as isize - 1;
                            if iy < 0 || iy >= x.height as isize {
                                continue;
                            }
                            let iy = iy as usize;
                            for ox in 0..ow {
                                let ix = (ox * s + kx) as isize - 1;
                                if ix < 0 || ix >= x.width as isize {
                                    continue;
                                }
                                let g = dplane[oy * ow + ox];
                                let xi = iy * x.width + ix as usize;
                                gw += g * inp[xi];
                                if let Some(dx) = dx.as_mut() {
                                    dx.data[ic * x.height * x.width + xi] += g * w;
                                }
                            }
                        }
                        grad.weight.data[base + ky * 3 + kx] += gw;
                    }
                }
            }
        }
        dx
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
            stride: self.stride,
        }
    }
}

pub fn tanh_inplace(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.tanh());
}

/// Given `y = tanh(a)` and `dL/dy`, returns `dL/da`.
pub fn tanh_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(y, g)| g * (1.0 - y * y)).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// `log softmax(logits)[target]`.
pub fn log_softmax_at(logits: &[f64], target: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|&l| (l - m).exp()).sum();
    logits[target] - m - z.ln()
}
