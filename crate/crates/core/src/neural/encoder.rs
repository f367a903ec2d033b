//! One-block transformer encoder with a hand-written backward pass.
//!
//! ```text
//! X  = E[tokens] + P[positions]
//! Y1 = LN1(X + Attn(X) Wo)          single head, pad keys masked
//! H  = LN2(Y1 + GELU(Y1 W1 + b1) W2 + b2)
//! ```
//!
//! `H[0]` (the aggregate token) summarizes the whole name; `H[1..]` are the
//! per-token features.

use rand::Rng;

use super::tensor::{affine, affine_backward, dot, Tensor};
use crate::corpus::PAD;
use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

/// Parameters of one encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub token_embedding: Tensor,
    pub position_embedding: Tensor,
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_o: Tensor,
    pub ff_w1: Tensor,
    pub ff_b1: Tensor,
    pub ff_w2: Tensor,
    pub ff_b2: Tensor,
    pub ln1_gain: Tensor,
    pub ln1_bias: Tensor,
    pub ln2_gain: Tensor,
    pub ln2_bias: Tensor,
}

pub const ENCODER_TENSORS: [&str; 14] = [
    "token_embedding",
    "position_embedding",
    "w_q",
    "w_k",
    "w_v",
    "w_o",
    "ff_w1",
    "ff_b1",
    "ff_w2",
    "ff_b2",
    "ln1_gain",
    "ln1_bias",
    "ln2_gain",
    "ln2_bias",
];

impl EncoderParams {
    /// Weights and embeddings uniform in `[-1/sqrt(d), 1/sqrt(d)]`; layer
    /// norms start as the identity and biases at zero.
    pub fn new<R: Rng>(vocab_size: usize, dim: usize, max_positions: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let hidden = 4 * dim;
        Self {
            token_embedding: Tensor::uniform(vocab_size, dim, bound, rng),
            position_embedding: Tensor::uniform(max_positions, dim, bound, rng),
            w_q: Tensor::uniform(dim, dim, bound, rng),
            w_k: Tensor::uniform(dim, dim, bound, rng),
            w_v: Tensor::uniform(dim, dim, bound, rng),
            w_o: Tensor::uniform(dim, dim, bound, rng),
            ff_w1: Tensor::uniform(dim, hidden, bound, rng),
            ff_b1: Tensor::zeros(1, hidden),
            ff_w2: Tensor::uniform(hidden, dim, bound, rng),
            ff_b2: Tensor::zeros(1, dim),
            ln1_gain: Tensor::filled(1, dim, 1.0),
            ln1_bias: Tensor::zeros(1, dim),
            ln2_gain: Tensor::filled(1, dim, 1.0),
            ln2_bias: Tensor::zeros(1, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.token_embedding.cols
    }

    pub fn vocab_size(&self) -> usize {
        self.token_embedding.rows
    }

    pub fn max_positions(&self) -> usize {
        self.position_embedding.rows
    }

    pub fn tensors(&self) -> [&Tensor; 14] {
        [
            &self.token_embedding,
            &self.position_embedding,
            &self.w_q,
            &self.w_k,
            &self.w_v,
            &self.w_o,
            &self.ff_w1,
            &self.ff_b1,
            &self.ff_w2,
            &self.ff_b2,
            &self.ln1_gain,
            &self.ln1_bias,
            &self.ln2_gain,
            &self.ln2_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 14] {
        [
            &mut self.token_embedding,
            &mut self.position_embedding,
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
            &mut self.w_o,
            &mut self.ff_w1,
            &mut self.ff_b1,
            &mut self.ff_w2,
            &mut self.ff_b2,
            &mut self.ln1_gain,
            &mut self.ln1_bias,
            &mut self.ln2_gain,
            &mut self.ln2_bias,
        ]
    }

    /// Shape check against the declared dimensions.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let h = 4 * d;
        let expect = [
            (self.vocab_size(), d),
            (self.max_positions(), d),
            (d, d),
            (d, d),
            (d, d),
            (d, d),
            (d, h),
            (1, h),
            (h, d),
            (1, d),
            (1, d),
            (1, d),
            (1, d),
            (1, d),
        ];
        for ((t, (r, c)), name) in self.tensors().iter().zip(expect).zip(ENCODER_TENSORS) {
            if t.rows != r || t.cols != c {
                return Err(Error::Checkpoint(format!(
                    "encoder tensor {name} is {}x{}, expected {r}x{c}",
                    t.rows, t.cols
                )));
            }
        }
        Ok(())
    }

    /// Runs the encoder and keeps what the backward pass needs.
    pub fn forward(&self, tokens: &[usize]) -> Result<EncoderCache> {
        let d = self.dim();
        let t = tokens.len();
        if t == 0 {
            return Err(Error::InvalidInput("empty token sequence".into()));
        }
        if t > self.max_positions() {
            return Err(Error::InvalidInput(format!(
                "sequence of {t} tokens exceeds {} positions",
                self.max_positions()
            )));
        }
        if let Some(&bad) = tokens.iter().find(|&&i| i >= self.vocab_size()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: self.vocab_size(),
            });
        }
        let mut x = vec![0.0; t * d];
        for (j, &tok) in tokens.iter().enumerate() {
            let row = &mut x[j * d..(j + 1) * d];
            for ((o, e), p) in row
                .iter_mut()
                .zip(self.token_embedding.row(tok))
                .zip(self.position_embedding.row(j))
            {
                *o = e + p;
            }
        }
        let keys: Vec<bool> = tokens.iter().map(|&tok| tok != PAD).collect();

        let mut q = vec![0.0; t * d];
        let mut k = vec![0.0; t * d];
        let mut v = vec![0.0; t * d];
        affine(&x, t, &self.w_q, None, &mut q);
        affine(&x, t, &self.w_k, None, &mut k);
        affine(&x, t, &self.w_v, None, &mut v);

        let scale = 1.0 / (d as f64).sqrt();
        let mut attn = vec![0.0; t * t];
        for i in 0..t {
            let qi = &q[i * d..(i + 1) * d];
            let row = &mut attn[i * t..(i + 1) * t];
            let mut max = f64::NEG_INFINITY;
            for j in 0..t {
                if keys[j] {
                    row[j] = dot(qi, &k[j * d..(j + 1) * d]) * scale;
                    max = max.max(row[j]);
                }
            }
            let mut sum = 0.0;
            for j in 0..t {
                row[j] = if keys[j] { (row[j] - max).exp() } else { 0.0 };
                sum += row[j];
            }
            if sum > 0.0 {
                row.iter_mut().for_each(|a| *a /= sum);
            }
        }
        let mut ctx = vec![0.0; t * d];
        for i in 0..t {
            let out = &mut ctx[i * d..(i + 1) * d];
            for j in 0..t {
                let a = attn[i * t + j];
                if a != 0.0 {
                    for (o, &vv) in out.iter_mut().zip(&v[j * d..(j + 1) * d]) {
                        *o += a * vv;
                    }
                }
            }
        }
        let mut r1 = vec![0.0; t * d];
        affine(&ctx, t, &self.w_o, None, &mut r1);
        r1.iter_mut().zip(&x).for_each(|(r, xv)| *r += xv);
        let ln1 = LayerNormCache::forward(&r1, t, &self.ln1_gain, &self.ln1_bias);

        let hidden = self.ff_w1.cols;
        let mut u = vec![0.0; t * hidden];
        affine(&ln1.y, t, &self.ff_w1, Some(&self.ff_b1), &mut u);
        let g: Vec<f64> = u.iter().map(|&z| gelu(z)).collect();
        let mut r2 = vec![0.0; t * d];
        affine(&g, t, &self.ff_w2, Some(&self.ff_b2), &mut r2);
        r2.iter_mut().zip(&ln1.y).for_each(|(r, y)| *r += y);
        let ln2 = LayerNormCache::forward(&r2, t, &self.ln2_gain, &self.ln2_bias);

        Ok(EncoderCache {
            tokens: tokens.to_vec(),
            x,
            q,
            k,
            v,
            attn,
            ctx,
            ln1,
            u,
            g,
            ln2,
        })
    }

    /// Accumulates parameter gradients into `grads` given `d_out`, the
    /// gradient with respect to every output position (`T × d`).
    pub fn backward(&self, cache: &EncoderCache, d_out: &[f64], grads: &mut EncoderParams) {
        let d = self.dim();
        let t = cache.tokens.len();
        let hidden = self.ff_w1.cols;

        let mut d_r2 = vec![0.0; t * d];
        cache.ln2.backward(
            d_out,
            &self.ln2_gain,
            &mut grads.ln2_gain,
            &mut grads.ln2_bias,
            &mut d_r2,
        );

        // Residual: Y1 feeds both the feed-forward block and the sum.
        let mut d_y1 = d_r2.clone();
        let mut d_g = vec![0.0; t * hidden];
        affine_backward(
            &cache.g,
            t,
            &self.ff_w2,
            &d_r2,
            &mut grads.ff_w2,
            Some(&mut grads.ff_b2),
            Some(&mut d_g),
        );
        let d_u: Vec<f64> = d_g
            .iter()
            .zip(&cache.u)
            .map(|(dg, &z)| dg * gelu_grad(z))
            .collect();
        affine_backward(
            &cache.ln1.y,
            t,
            &self.ff_w1,
            &d_u,
            &mut grads.ff_w1,
            Some(&mut grads.ff_b1),
            Some(&mut d_y1),
        );

        let mut d_r1 = vec![0.0; t * d];
        cache.ln1.backward(
            &d_y1,
            &self.ln1_gain,
            &mut grads.ln1_gain,
            &mut grads.ln1_bias,
            &mut d_r1,
        );

        let mut d_x = d_r1.clone();
        let mut d_ctx = vec![0.0; t * d];
        affine_backward(
            &cache.ctx,
            t,
            &self.w_o,
            &d_r1,
            &mut grads.w_o,
            None,
            Some(&mut d_ctx),
        );

        let (q, k, v, attn) = (&cache.q, &cache.k, &cache.v, &cache.attn);
        let mut d_v = vec![0.0; t * d];
        let mut d_scores = vec![0.0; t * t];
        for i in 0..t {
            let dc = &d_ctx[i * d..(i + 1) * d];
            let a_row = &attn[i * t..(i + 1) * t];
            let mut d_a = vec![0.0; t];
            for j in 0..t {
                if a_row[j] == 0.0 {
                    continue;
                }
                d_a[j] = dot(dc, &v[j * d..(j + 1) * d]);
                for (dv, &g) in d_v[j * d..(j + 1) * d].iter_mut().zip(dc) {
                    *dv += a_row[j] * g;
                }
            }
            let inner: f64 = a_row.iter().zip(&d_a).map(|(a, g)| a * g).sum();
            for j in 0..t {
                d_scores[i * t + j] = a_row[j] * (d_a[j] - inner);
            }
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut d_q = vec![0.0; t * d];
        let mut d_k = vec![0.0; t * d];
        for i in 0..t {
            for j in 0..t {
                let s = d_scores[i * t + j] * scale;
                if s == 0.0 {
                    continue;
                }
                for c in 0..d {
                    d_q[i * d + c] += s * k[j * d + c];
                    d_k[j * d + c] += s * q[i * d + c];
                }
            }
        }
        affine_backward(
            &cache.x,
            t,
            &self.w_q,
            &d_q,
            &mut grads.w_q,
            None,
            Some(&mut d_x),
        );
        affine_backward(
            &cache.x,
            t,
            &self.w_k,
            &d_k,
            &mut grads.w_k,
            None,
            Some(&mut d_x),
        );
        affine_backward(
            &cache.x,
            t,
            &self.w_v,
            &d_v,
            &mut grads.w_v,
            None,
            Some(&mut d_x),
        );

        for (j, &tok) in cache.tokens.iter().enumerate() {
            let g = &d_x[j * d..(j + 1) * d];
            for (e, &gv) in grads.token_embedding.row_mut(tok).iter_mut().zip(g) {
                *e += gv;
            }
            for (p, &gv) in grads.position_embedding.row_mut(j).iter_mut().zip(g) {
                *p += gv;
            }
        }
    }
}

/// Forward intermediates of one sequence.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    tokens: Vec<usize>,
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    attn: Vec<f64>,
    ctx: Vec<f64>,
    ln1: LayerNormCache,
    u: Vec<f64>,
    g: Vec<f64>,
    ln2: LayerNormCache,
}

impl EncoderCache {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Output feature of position `j`.
    pub fn output(&self, j: usize) -> &[f64] {
        let d = self.ln2.y.len() / self.tokens.len();
        &self.ln2.y[j * d..(j + 1) * d]
    }

    /// All outputs, `T × d` row-major.
    pub fn outputs(&self) -> &[f64] {
        &self.ln2.y
    }
}

#[derive(Debug, Clone)]
struct LayerNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    y: Vec<f64>,
}

impl LayerNormCache {
    fn forward(x: &[f64], rows: usize, gain: &Tensor, bias: &Tensor) -> Self {
        let d = gain.cols;
        let mut xhat = vec![0.0; rows * d];
        let mut inv_std = vec![0.0; rows];
        let mut y = vec![0.0; rows * d];
        for r in 0..rows {
            let xr = &x[r * d..(r + 1) * d];
            let mean = xr.iter().sum::<f64>() / d as f64;
            let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = is;
            for c in 0..d {
                let h = (xr[c] - mean) * is;
                xhat[r * d + c] = h;
                y[r * d + c] = gain.data[c] * h + bias.data[c];
            }
        }
        Self { xhat, inv_std, y }
    }

    fn backward(
        &self,
        dy: &[f64],
        gain: &Tensor,
        d_gain: &mut Tensor,
        d_bias: &mut Tensor,
        dx: &mut [f64],
    ) {
        let d = gain.cols;
        let rows = self.inv_std.len();
        for r in 0..rows {
            let dyr = &dy[r * d..(r + 1) * d];
            let xh = &self.xhat[r * d..(r + 1) * d];
            let mut mean_dh = 0.0;
            let mut mean_dh_xh = 0.0;
            for c in 0..d {
                d_gain.data[c] += dyr[c] * xh[c];
                d_bias.data[c] += dyr[c];
                let dh = dyr[c] * gain.data[c];
                mean_dh += dh;
                mean_dh_xh += dh * xh[c];
            }
            mean_dh /= d as f64;
            mean_dh_xh /= d as f64;
            for c in 0..d {
                let dh = dyr[c] * gain.data[c];
                dx[r * d + c] += self.inv_std[r] * (dh - mean_dh - xh[c] * mean_dh_xh);
            }
        }
    }
}

fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + (GELU_C * (z + 0.044715 * z * z * z)).tanh())
}

fn gelu_grad(z: f64) -> f64 {
    let th = (GELU_C * (z + 0.044715 * z * z * z)).tanh();
    0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * 0.044715 * z * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn encoder(seed: u64) -> EncoderParams {
        EncoderParams::new(12, 16, 4, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn output_shape_and_finiteness() {
        let enc = encoder(0);
        let cache = enc.forward(&[0, 5, 7]).unwrap();
        assert_eq!(cache.outputs().len(), 3 * 16);
        assert!(cache.outputs().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pad_positions_do_not_leak() {
        let enc = encoder(1);
        let padded = enc.forward(&[0, 5, 7, PAD]).unwrap();
        let bare = enc.forward(&[0, 5, 7]).unwrap();
        for j in 0..3 {
            assert_eq!(padded.output(j), bare.output(j));
        }
    }

    #[test]
    fn order_matters() {
        let enc = encoder(2);
        let a = enc.forward(&[0, 5, 7]).unwrap();
        let b = enc.forward(&[0, 7, 5]).unwrap();
        let diff: f64 = a
            .output(0)
            .iter()
            .zip(b.output(0))
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(diff > 1e-6);
    }

    #[test]
    fn rejects_bad_sequences() {
        let enc = encoder(3);
        assert!(matches!(
            enc.forward(&[0, 12]),
            Err(Error::IndexOutOfRange {
                index: 12,
                size: 12
            })
        ));
        assert!(enc.forward(&[]).is_err());
        assert!(enc.forward(&[0, 3, 3, 3, 3]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Loss = <w, H> for a fixed random w.
        let enc = encoder(4);
        let tokens = [0, 3, 9];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let w: Vec<f64> = (0..3 * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |e: &EncoderParams| dot(e.forward(&tokens).unwrap().outputs(), &w);

        let mut grads = enc.clone();
        grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        let cache = enc.forward(&tokens).unwrap();
        enc.backward(&cache, &w, &mut grads);

        let eps = 1e-5;
        for (ti, name) in ENCODER_TENSORS.iter().enumerate() {
            let n = enc.tensors()[ti].len();
            for idx in (0..n).step_by((n / 7).max(1)) {
                let mut plus = enc.clone();
                plus.tensors_mut()[ti].data[idx] += eps;
                let mut minus = enc.clone();
                minus.tensors_mut()[ti].data[idx] -= eps;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                let analytic = grads.tensors()[ti].data[idx];
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic - numeric).abs() / denom < 1e-5,
                    "{name}[{idx}]: {analytic} vs {numeric}"
                );
            }
        }
    }
}
