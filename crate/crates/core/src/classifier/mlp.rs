//! One-hidden-layer perceptron with logistic hidden units and a softmax
//! output, trained by minibatch stochastic gradient descent.

use rand::seq::SliceRandom;
use rand::Rng;

use super::cart::Features;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 20,
            epochs: 200,
            learning_rate: 0.1,
            batch: 16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mlp {
    m: usize,
    h: usize,
    c: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlp {
    fn forward(&self, row: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        hidden.copy_from_slice(&self.b1);
        for (i, &v) in row.iter().enumerate() {
            if v != 0.0 {
                let w = &self.w1[i * self.h..(i + 1) * self.h];
                for (hk, wk) in hidden.iter_mut().zip(w) {
                    *hk += v * wk;
                }
            }
        }
        hidden.iter_mut().for_each(|v| *v = sigmoid(*v));
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.b2[k] + (0..self.h).map(|j| hidden[j] * self.w2[j * self.c + k]).sum::<f64>();
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            z += *o;
        }
        out.iter_mut().for_each(|o| *o /= z);
    }

    pub fn fit<R: Rng>(x: Features<'_>, y: &[usize], rows: &[usize], n_classes: usize, params: MlpParams, rng: &mut R) -> Mlp {
        let (m, h, c) = (x.m, params.hidden, n_classes);
        let r1 = 1.0 / (m.max(1) as f64).sqrt();
        let r2 = 1.0 / (h as f64).sqrt();
        let mut net = Mlp {
            m,
            h,
            c,
            w1: (0..m * h).map(|_| rng.gen_range(-r1..r1)).collect(),
            b1: vec![0.0; h],
            w2: (0..h * c).map(|_| rng.gen_range(-r2..r2)).collect(),
            b2: vec![0.0; c],
        };
        let mut order = rows.to_vec();
        let mut hidden = vec![0.0; h];
        let mut out = vec![0.0; c];
        let mut g1 = vec![0.0; m * h];
        let mut gb1 = vec![0.0; h];
        let mut g2 = vec![0.0; h * c];
        let mut gb2 = vec![0.0; c];
        let mut dh = vec![0.0; h];
        let mut touched = vec![false; m];
        for _ in 0..params.epochs {
            order.shuffle(rng);
            for batch in order.chunks(params.batch.max(1)) {
                g2.iter_mut().for_each(|v| *v = 0.0);
                gb1.iter_mut().for_each(|v| *v = 0.0);
                gb2.iter_mut().for_each(|v| *v = 0.0);
                for &i in batch {
                    let row = x.row(i);
                    net.forward(row, &mut hidden, &mut out);
                    for k in 0..c {
                        let delta = out[k] - if y[i] == k { 1.0 } else { 0.0 };
                        gb2[k] += delta;
                        for j in 0..h {
                            g2[j * c + k] += delta * hidden[j];
                        }
                    }
                    for j in 0..h {
                        let back: f64 = (0..c).map(|k| (out[k] - if y[i] == k { 1.0 } else { 0.0 }) * net.w2[j * c + k]).sum();
                        dh[j] = back * hidden[j] * (1.0 - hidden[j]);
                        gb1[j] += dh[j];
                    }
                    for (f, &v) in row.iter().enumerate() {
                        if v != 0.0 {
                            if !touched[f] {
                                touched[f] = true;
                                g1[f * h..(f + 1) * h].iter_mut().for_each(|g| *g = 0.0);
                            }
                            for j in 0..h {
                                g1[f * h + j] += v * dh[j];
                            }
                        }
                    }
                }
                let step = params.learning_rate / batch.len() as f64;
                for (w, g) in net.w2.iter_mut().zip(&g2) {
                    *w -= step * g;
                }
                for (b, g) in net.b2.iter_mut().zip(&gb2) {
                    *b -= step * g;
                }
                for (b, g) in net.b1.iter_mut().zip(&gb1) {
                    *b -= step * g;
                }
                for f in 0..m {
                    if touched[f] {
                        touched[f] = false;
                        for j in 0..h {
                            net.w1[f * h + j] -= step * g1[f * h + j];
                        }
                    }
                }
            }
        }
        net
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        debug_assert_eq!(row.len(), self.m);
        let mut hidden = vec![0.0; self.h];
        let mut out = vec![0.0; self.c];
        self.forward(row, &mut hidden, &mut out);
        let mut best = 0;
        for k in 1..self.c {
            if out[k] > out[best] {
                best = k;
            }
        }
        best
    }
}
