//! Dense f64 primitives with hand-written backward passes.
//!
//! Shapes: activations are `[rows, dim]`, linear weights `[din, dout]`,
//! biases `[1, dout]`. Gradients accumulate into caller-owned buffers so a
//! batch can share one gradient set.

use ndarray::{s, Array1, Array2};

pub const LN_EPS: f64 = 1e-5;

/// y = x W + b
pub fn linear(x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// Accumulates dW and db, returns dx.
pub fn linear_backward(
    x: &Array2<f64>,
    w: &Array2<f64>,
    dy: &Array2<f64>,
    dw: &mut Array2<f64>,
    db: &mut Array2<f64>,
) -> Array2<f64> {
    *dw += &x.t().dot(dy);
    let col_sums = dy.sum_axis(ndarray::Axis(0));
    *db += &col_sums.insert_axis(ndarray::Axis(0));
    dy.dot(&w.t())
}

pub struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

/// Row-wise layer norm: y = xhat * gain + bias.
pub fn layer_norm(
    x: &Array2<f64>,
    gain: &Array2<f64>,
    bias: &Array2<f64>,
) -> (Array2<f64>, LayerNormCache) {
    let (rows, dim) = x.dim();
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(rows);
    for r in 0..rows {
        let mut row = xhat.row_mut(r);
        let mean = row.sum() / dim as f64;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / dim as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| v * is);
        inv_std[r] = is;
    }
    let mut y = xhat.clone();
    for r in 0..rows {
        let mut row = y.row_mut(r);
        for d in 0..dim {
            row[d] = row[d] * gain[(0, d)] + bias[(0, d)];
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &Array2<f64>,
    dy: &Array2<f64>,
    dgain: &mut Array2<f64>,
    dbias: &mut Array2<f64>,
) -> Array2<f64> {
    let (rows, dim) = dy.dim();
    let mut dx = Array2::zeros((rows, dim));
    for r in 0..rows {
        let xhat = cache.xhat.row(r);
        let dyr = dy.row(r);
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for d in 0..dim {
            dgain[(0, d)] += dyr[d] * xhat[d];
            dbias[(0, d)] += dyr[d];
            let dxhat = dyr[d] * gain[(0, d)];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[d];
        }
        mean_dxhat /= dim as f64;
        mean_dxhat_xhat /= dim as f64;
        let is = cache.inv_std[r];
        let mut dxr = dx.row_mut(r);
        for d in 0..dim {
            let dxhat = dyr[d] * gain[(0, d)];
            dxr[d] = is * (dxhat - mean_dxhat - xhat[d] * mean_dxhat_xhat);
        }
    }
    dx
}

const GELU_A: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_C: f64 = 0.044715;

/// Tanh-approximation GELU; smooth, so finite differences stay clean.
pub fn gelu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|u| 0.5 * u * (1.0 + (GELU_A * (u + GELU_C * u * u * u)).tanh()))
}

pub fn gelu_backward(x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = dy.clone();
    dx.zip_mut_with(x, |d, &u| {
        let inner = GELU_A * (u + GELU_C * u * u * u);
        let t = inner.tanh();
        let sech2 = 1.0 - t * t;
        *d *= 0.5 * (1.0 + t) + 0.5 * u * sech2 * GELU_A * (1.0 + 3.0 * GELU_C * u * u);
    });
    dx
}

pub struct AttnCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// One [q_len, k_len] matrix per head; rows are softmax distributions,
    /// exactly zero beyond the causal prefix.
    probs: Vec<Array2<f64>>,
    heads: usize,
    causal: bool,
}

impl AttnCache {
    /// Max |row sum - 1| over all attention rows; diagnostics and tests.
    pub fn max_row_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.probs {
            for row in p.rows() {
                worst = worst.max((row.sum() - 1.0).abs());
            }
        }
        worst
    }
}

/// Scaled dot-product attention over `heads` column blocks of q/k/v.
///
/// With `causal` set (requires q_len == k_len), row i attends keys 0..=i;
/// probabilities outside the prefix are exactly zero, so later tokens cannot
/// perturb earlier outputs.
pub fn attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    heads: usize,
    causal: bool,
) -> (Array2<f64>, AttnCache) {
    let (q_len, dim) = q.dim();
    let k_len = k.dim().0;
    debug_assert_eq!(dim % heads, 0);
    debug_assert!(!causal || q_len == k_len);
    let hd = dim / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut out = Array2::zeros((q_len, dim));
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = s![.., h * hd..(h + 1) * hd];
        let qh = q.slice(cols);
        let kh = k.slice(cols);
        let vh = v.slice(cols);
        let mut scores = qh.dot(&kh.t());
        scores *= scale;
        // Row-wise softmax over the visible prefix.
        for i in 0..q_len {
            let limit = if causal { i + 1 } else { k_len };
            let mut row = scores.row_mut(i);
            let max = row
                .iter()
                .take(limit)
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..k_len {
                if j < limit {
                    let e = (row[j] - max).exp();
                    row[j] = e;
                    sum += e;
                } else {
                    row[j] = 0.0;
                }
            }
            for j in 0..limit {
                row[j] /= sum;
            }
        }
        out.slice_mut(cols).assign(&scores.dot(&vh));
        probs.push(scores);
    }
    (
        out,
        AttnCache {
            q: q.clone(),
            k: k.clone(),
            v: v.clone(),
            probs,
            heads,
            causal,
        },
    )
}

/// Returns (dq, dk, dv).
pub fn attention_backward(
    cache: &AttnCache,
    dout: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (q_len, dim) = cache.q.dim();
    let k_len = cache.k.dim().0;
    let heads = cache.heads;
    let hd = dim / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut dq = Array2::zeros((q_len, dim));
    let mut dk = Array2::zeros((k_len, dim));
    let mut dv = Array2::zeros((k_len, dim));
    for h in 0..heads {
        let cols = s![.., h * hd..(h + 1) * hd];
        let qh = cache.q.slice(cols);
        let kh = cache.k.slice(cols);
        let vh = cache.v.slice(cols);
        let p = &cache.probs[h];
        let douth = dout.slice(cols);

        dv.slice_mut(cols).assign(&p.t().dot(&douth));
        let dp = douth.dot(&vh.t());
        // Softmax backward; zero probabilities kill masked positions.
        let mut ds = Array2::zeros((q_len, k_len));
        for i in 0..q_len {
            let pr = p.row(i);
            let dpr = dp.row(i);
            let dot: f64 = pr.iter().zip(dpr.iter()).map(|(a, b)| a * b).sum();
            let mut dsr = ds.row_mut(i);
            for j in 0..k_len {
                dsr[j] = pr[j] * (dpr[j] - dot) * scale;
            }
        }
        dq.slice_mut(cols).assign(&ds.dot(&kh));
        dk.slice_mut(cols).assign(&ds.t().dot(&qh));
    }
    let _ = cache.causal;
    (dq, dk, dv)
}

/// Row-wise softmax (full rows); used for output logits.
pub fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut y = x.clone();
    for mut row in y.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random(9, 8, &mut rng);
        let k = random(9, 8, &mut rng);
        let v = random(9, 8, &mut rng);
        let (_, cache) = attention(&q, &k, &v, 2, true);
        assert!(cache.max_row_sum_error() < 1e-6);
        let (_, cache) = attention(&q, &k, &v, 2, false);
        assert!(cache.max_row_sum_error() < 1e-6);
    }

    #[test]
    fn causal_prefix_is_suffix_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random(10, 8, &mut rng);
        let k = random(10, 8, &mut rng);
        let v = random(10, 8, &mut rng);
        let (full, _) = attention(&q, &k, &v, 2, true);
        let shorter = |a: &Array2<f64>| a.slice(s![..6, ..]).to_owned();
        let (prefix, _) = attention(&shorter(&q), &shorter(&k), &shorter(&v), 2, true);
        for i in 0..6 {
            for d in 0..8 {
                assert!((full[(i, d)] - prefix[(i, d)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_key_attention_copies_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random(5, 8, &mut rng);
        let k = random(1, 8, &mut rng);
        let v = random(1, 8, &mut rng);
        let (out, _) = attention(&q, &k, &v, 2, false);
        for i in 0..5 {
            for d in 0..8 {
                assert!((out[(i, d)] - v[(0, d)]).abs() < 1e-15);
            }
        }
    }

    // Finite-difference checks for each primitive, on tiny shapes.
    fn fd_grad(mut f: impl FnMut(&Array2<f64>) -> f64, x: &Array2<f64>) -> Array2<f64> {
        let h = 1e-6;
        let mut g = Array2::zeros(x.dim());
        let mut probe = x.clone();
        for idx in 0..x.len() {
            let (r, c) = (idx / x.dim().1, idx % x.dim().1);
            let orig = probe[(r, c)];
            probe[(r, c)] = orig + h;
            let up = f(&probe);
            probe[(r, c)] = orig - h;
            let down = f(&probe);
            probe[(r, c)] = orig;
            g[(r, c)] = (up - down) / (2.0 * h);
        }
        g
    }

    fn assert_close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) {
        for (x, y) in a.iter().zip(b.iter()) {
            let err = (x - y).abs() / x.abs().max(y.abs()).max(1e-6);
            assert!(err < tol, "grad mismatch: {x} vs {y}");
        }
    }

    #[test]
    fn layer_norm_gradients_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(3, 6, &mut rng);
        let gain = random(1, 6, &mut rng);
        let bias = random(1, 6, &mut rng);
        let weights = random(3, 6, &mut rng); // fixed projection to scalar loss
        let loss = |x: &Array2<f64>, g: &Array2<f64>, b: &Array2<f64>| {
            let (y, _) = layer_norm(x, g, b);
            (&y * &weights).sum()
        };
        let (_, cache) = layer_norm(&x, &gain, &bias);
        let mut dgain = Array2::zeros((1, 6));
        let mut dbias = Array2::zeros((1, 6));
        let dx = layer_norm_backward(&cache, &gain, &weights, &mut dgain, &mut dbias);
        assert_close(&dx, &fd_grad(|p| loss(p, &gain, &bias), &x), 1e-5);
        assert_close(&dgain, &fd_grad(|p| loss(&x, p, &bias), &gain), 1e-5);
        assert_close(&dbias, &fd_grad(|p| loss(&x, &gain, p), &bias), 1e-5);
    }

    #[test]
    fn gelu_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(4, 5, &mut rng);
        let weights = random(4, 5, &mut rng);
        let dx = gelu_backward(&x, &weights);
        let fd = fd_grad(|p| (&gelu(p) * &weights).sum(), &x);
        assert_close(&dx, &fd, 1e-5);
    }

    #[test]
    fn attention_gradients_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(q_len, k_len, causal) in &[(5usize, 5usize, true), (4, 1, false), (3, 6, false)] {
            let q = random(q_len, 8, &mut rng);
            let k = random(k_len, 8, &mut rng);
            let v = random(k_len, 8, &mut rng);
            let weights = random(q_len, 8, &mut rng);
            let loss = |q: &Array2<f64>, k: &Array2<f64>, v: &Array2<f64>| {
                let (out, _) = attention(q, k, v, 2, causal);
                (&out * &weights).sum()
            };
            let (_, cache) = attention(&q, &k, &v, 2, causal);
            let (dq, dk, dv) = attention_backward(&cache, &weights);
            assert_close(&dq, &fd_grad(|p| loss(p, &k, &v), &q), 1e-5);
            assert_close(&dk, &fd_grad(|p| loss(&q, p, &v), &k), 1e-5);
            assert_close(&dv, &fd_grad(|p| loss(&q, &k, p), &v), 1e-5);
        }
    }

    #[test]
    fn linear_gradients_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(4, 3, &mut rng);
        let w = random(3, 5, &mut rng);
        let b = random(1, 5, &mut rng);
        let weights = random(4, 5, &mut rng);
        let mut dw = Array2::zeros((3, 5));
        let mut db = Array2::zeros((1, 5));
        let dx = linear_backward(&x, &w, &weights, &mut dw, &mut db);
        assert_close(
            &dx,
            &fd_grad(|p| (&linear(p, &w, &b) * &weights).sum(), &x),
            1e-5,
        );
        assert_close(
            &dw,
            &fd_grad(|p| (&linear(&x, p, &b) * &weights).sum(), &w),
            1e-5,
        );
        assert_close(
            &db,
            &fd_grad(|p| (&linear(&x, &w, p) * &weights).sum(), &b),
            1e-5,
        );
    }
}
