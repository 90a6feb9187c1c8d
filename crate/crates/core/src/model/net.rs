//! Shared transformer stack: parameter containers, deterministic
//! initialization, forward pass with caches, and the full backward pass.
//!
//! One stack type serves three roles. The level decoder runs causally with a
//! cross-attention conditioner in every block; the prompt encoder runs
//! bidirectionally without a head (its final hidden states are mean-pooled);
//! the masked infill model runs bidirectionally with a head.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::math::{
    attention, attention_backward, gelu, gelu_backward, layer_norm, layer_norm_backward, linear,
    linear_backward, AttnCache, LayerNormCache,
};
use super::ModelError;
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub gain: Array2<f64>,
    pub bias: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossParams {
    pub ln: NormParams,
    pub q: LinearParams,
    pub k: LinearParams,
    pub v: LinearParams,
    pub out: LinearParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1: NormParams,
    pub qkv: LinearParams,
    pub attn_out: LinearParams,
    pub cross: Option<CrossParams>,
    pub ln2: NormParams,
    pub ff1: LinearParams,
    pub ff2: LinearParams,
}

/// A full transformer stack; `head` is absent for pooled encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct StackParams {
    pub tok_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub blocks: Vec<BlockParams>,
    pub ln_f: NormParams,
    pub head: Option<LinearParams>,
    pub heads: usize,
    pub causal: bool,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

fn init_linear(rng: &mut ChaCha8Rng, din: usize, dout: usize, gain: f64) -> LinearParams {
    LinearParams {
        w: uniform(rng, din, dout, gain / (din as f64).sqrt()),
        b: Array2::zeros((1, dout)),
    }
}

fn init_norm(dim: usize) -> NormParams {
    NormParams {
        gain: Array2::ones((1, dim)),
        bias: Array2::zeros((1, dim)),
    }
}

/// Dimensions for one stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_mult: usize,
    pub context_len: usize,
    pub cross: bool,
    pub head: bool,
    pub causal: bool,
}

impl StackParams {
    pub fn init(dims: &StackDims, rng: &mut ChaCha8Rng) -> StackParams {
        let e = dims.embed_dim;
        // Residual output projections start small so deep stacks begin near
        // the identity map.
        let res_gain = 1.0 / (2.0 * dims.num_layers as f64).sqrt();
        let blocks = (0..dims.num_layers)
            .map(|_| BlockParams {
                ln1: init_norm(e),
                qkv: init_linear(rng, e, 3 * e, 1.0),
                attn_out: init_linear(rng, e, e, res_gain),
                cross: dims.cross.then(|| CrossParams {
                    ln: init_norm(e),
                    q: init_linear(rng, e, e, 1.0),
                    k: init_linear(rng, e, e, 1.0),
                    v: init_linear(rng, e, e, 1.0),
                    out: init_linear(rng, e, e, res_gain),
                }),
                ln2: init_norm(e),
                ff1: init_linear(rng, e, dims.ff_mult * e, 1.0),
                ff2: init_linear(rng, dims.ff_mult * e, e, res_gain),
            })
            .collect();
        StackParams {
            tok_emb: uniform(rng, dims.vocab_size, e, 0.05),
            pos_emb: uniform(rng, dims.context_len, e, 0.02),
            blocks,
            ln_f: init_norm(e),
            head: dims.head.then(|| init_linear(rng, e, dims.vocab_size, 1.0)),
            heads: dims.num_heads,
            causal: dims.causal,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.tok_emb.ncols()
    }

    pub fn context_len(&self) -> usize {
        self.pos_emb.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.tok_emb.nrows()
    }

    /// All tensors with stable names, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = vec![
            ("tok_emb".to_string(), &self.tok_emb),
            ("pos_emb".to_string(), &self.pos_emb),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            let p = |suffix: &str| format!("block{i}.{suffix}");
            out.push((p("ln1.gain"), &b.ln1.gain));
            out.push((p("ln1.bias"), &b.ln1.bias));
            out.push((p("qkv.w"), &b.qkv.w));
            out.push((p("qkv.b"), &b.qkv.b));
            out.push((p("attn_out.w"), &b.attn_out.w));
            out.push((p("attn_out.b"), &b.attn_out.b));
            if let Some(c) = &b.cross {
                out.push((p("cross.ln.gain"), &c.ln.gain));
                out.push((p("cross.ln.bias"), &c.ln.bias));
                out.push((p("cross.q.w"), &c.q.w));
                out.push((p("cross.q.b"), &c.q.b));
                out.push((p("cross.k.w"), &c.k.w));
                out.push((p("cross.k.b"), &c.k.b));
                out.push((p("cross.v.w"), &c.v.w));
                out.push((p("cross.v.b"), &c.v.b));
                out.push((p("cross.out.w"), &c.out.w));
                out.push((p("cross.out.b"), &c.out.b));
            }
            out.push((p("ln2.gain"), &b.ln2.gain));
            out.push((p("ln2.bias"), &b.ln2.bias));
            out.push((p("ff1.w"), &b.ff1.w));
            out.push((p("ff1.b"), &b.ff1.b));
            out.push((p("ff2.w"), &b.ff2.w));
            out.push((p("ff2.b"), &b.ff2.b));
        }
        out.push(("ln_f.gain".to_string(), &self.ln_f.gain));
        out.push(("ln_f.bias".to_string(), &self.ln_f.bias));
        if let Some(h) = &self.head {
            out.push(("head.w".to_string(), &h.w));
            out.push(("head.b".to_string(), &h.b));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out: Vec<(String, &mut Array2<f64>)> = vec![
            ("tok_emb".to_string(), &mut self.tok_emb),
            ("pos_emb".to_string(), &mut self.pos_emb),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let p = |suffix: &str| format!("block{i}.{suffix}");
            out.push((p("ln1.gain"), &mut b.ln1.gain));
            out.push((p("ln1.bias"), &mut b.ln1.bias));
            out.push((p("qkv.w"), &mut b.qkv.w));
            out.push((p("qkv.b"), &mut b.qkv.b));
            out.push((p("attn_out.w"), &mut b.attn_out.w));
            out.push((p("attn_out.b"), &mut b.attn_out.b));
            if let Some(c) = &mut b.cross {
                out.push((p("cross.ln.gain"), &mut c.ln.gain));
                out.push((p("cross.ln.bias"), &mut c.ln.bias));
                out.push((p("cross.q.w"), &mut c.q.w));
                out.push((p("cross.q.b"), &mut c.q.b));
                out.push((p("cross.k.w"), &mut c.k.w));
                out.push((p("cross.k.b"), &mut c.k.b));
                out.push((p("cross.v.w"), &mut c.v.w));
                out.push((p("cross.v.b"), &mut c.v.b));
                out.push((p("cross.out.w"), &mut c.out.w));
                out.push((p("cross.out.b"), &mut c.out.b));
            }
            out.push((p("ln2.gain"), &mut b.ln2.gain));
            out.push((p("ln2.bias"), &mut b.ln2.bias));
            out.push((p("ff1.w"), &mut b.ff1.w));
            out.push((p("ff1.b"), &mut b.ff1.b));
            out.push((p("ff2.w"), &mut b.ff2.w));
            out.push((p("ff2.b"), &mut b.ff2.b));
        }
        out.push(("ln_f.gain".to_string(), &mut self.ln_f.gain));
        out.push(("ln_f.bias".to_string(), &mut self.ln_f.bias));
        if let Some(h) = &mut self.head {
            out.push(("head.w".to_string(), &mut h.w));
            out.push(("head.b".to_string(), &mut h.b));
        }
        out
    }

    pub fn zeros_like(&self) -> StackParams {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

struct CrossCache {
    ln: LayerNormCache,
    ln_out: Array2<f64>,
    attn: AttnCache,
    attn_out_in: Array2<f64>,
}

struct BlockCache {
    x_in_ln1: LayerNormCache,
    ln1_out: Array2<f64>,
    attn: AttnCache,
    attn_out_in: Array2<f64>,
    cross: Option<CrossCache>,
    ln2: LayerNormCache,
    ln2_out: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
}

/// Everything the backward pass needs from one forward pass.
pub struct StackCache {
    ids: Vec<TokenId>,
    blocks: Vec<BlockCache>,
    ln_f: LayerNormCache,
    ln_f_out: Array2<f64>,
}

impl StackCache {
    /// Final hidden states (after the last layer norm).
    pub fn hidden(&self) -> &Array2<f64> {
        &self.ln_f_out
    }

    /// Largest |attention row sum - 1| across every block and head.
    pub fn max_attention_row_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for b in &self.blocks {
            worst = worst.max(b.attn.max_row_sum_error());
            if let Some(c) = &b.cross {
                worst = worst.max(c.attn.max_row_sum_error());
            }
        }
        worst
    }
}

fn split_qkv(qkv: &Array2<f64>, e: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    (
        qkv.slice(s![.., 0..e]).to_owned(),
        qkv.slice(s![.., e..2 * e]).to_owned(),
        qkv.slice(s![.., 2 * e..3 * e]).to_owned(),
    )
}

/// Forward pass over token ids. `ctx` is the conditioning vector `[1, E]`
/// consumed by cross-attention blocks; it must be provided exactly when the
/// stack has cross parameters. Returns logits when the stack has a head,
/// otherwise the final hidden states.
pub fn stack_forward(
    p: &StackParams,
    ids: &[TokenId],
    ctx: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, StackCache), ModelError> {
    if ids.len() > p.context_len() {
        return Err(ModelError::SequenceTooLong {
            len: ids.len(),
            max: p.context_len(),
        });
    }
    if ids.is_empty() {
        return Err(ModelError::ShapeMismatch("empty token sequence".to_string()));
    }
    let e = p.embed_dim();
    let t = ids.len();
    let mut x = Array2::zeros((t, e));
    for (i, &id) in ids.iter().enumerate() {
        if (id as usize) >= p.vocab_size() {
            return Err(ModelError::ShapeMismatch(format!(
                "token id {id} out of range for vocab {}",
                p.vocab_size()
            )));
        }
        let row = &p.tok_emb.row(id as usize) + &p.pos_emb.row(i);
        x.row_mut(i).assign(&row);
    }

    let mut blocks = Vec::with_capacity(p.blocks.len());
    for b in &p.blocks {
        let (ln1_out, x_in_ln1) = layer_norm(&x, &b.ln1.gain, &b.ln1.bias);
        let qkv = linear(&ln1_out, &b.qkv.w, &b.qkv.b);
        let (q, k, v) = split_qkv(&qkv, e);
        let (attn_out_in, attn) = attention(&q, &k, &v, p.heads, p.causal);
        x += &linear(&attn_out_in, &b.attn_out.w, &b.attn_out.b);

        let cross = match (&b.cross, ctx) {
            (Some(c), Some(ctx)) => {
                let (ln_out, ln) = layer_norm(&x, &c.ln.gain, &c.ln.bias);
                let cq = linear(&ln_out, &c.q.w, &c.q.b);
                let ck = linear(ctx, &c.k.w, &c.k.b);
                let cv = linear(ctx, &c.v.w, &c.v.b);
                let (attn_out_in, attn) = attention(&cq, &ck, &cv, p.heads, false);
                x += &linear(&attn_out_in, &c.out.w, &c.out.b);
                Some(CrossCache {
                    ln,
                    ln_out,
                    attn,
                    attn_out_in,
                })
            }
            (None, _) => None,
            (Some(_), None) => {
                return Err(ModelError::ShapeMismatch(
                    "stack has cross-attention but no context vector given".to_string(),
                ))
            }
        };

        let (ln2_out, ln2) = layer_norm(&x, &b.ln2.gain, &b.ln2.bias);
        let ff_pre = linear(&ln2_out, &b.ff1.w, &b.ff1.b);
        let ff_act = gelu(&ff_pre);
        x += &linear(&ff_act, &b.ff2.w, &b.ff2.b);

        blocks.push(BlockCache {
            x_in_ln1,
            ln1_out,
            attn,
            attn_out_in,
            cross,
            ln2,
            ln2_out,
            ff_pre,
            ff_act,
        });
    }

    let (ln_f_out, ln_f) = layer_norm(&x, &p.ln_f.gain, &p.ln_f.bias);
    let out = match &p.head {
        Some(h) => linear(&ln_f_out, &h.w, &h.b),
        None => ln_f_out.clone(),
    };
    Ok((
        out,
        StackCache {
            ids: ids.to_vec(),
            blocks,
            ln_f,
            ln_f_out,
        },
    ))
}

/// Backward pass. `dout` matches the forward output (logit gradients when
/// the stack has a head, hidden-state gradients otherwise). Gradients
/// accumulate into `grads`; the return value is the context-vector gradient
/// for stacks with cross-attention.
pub fn stack_backward(
    p: &StackParams,
    ctx: Option<&Array2<f64>>,
    cache: &StackCache,
    dout: &Array2<f64>,
    grads: &mut StackParams,
) -> Option<Array2<f64>> {
    let e = p.embed_dim();
    let mut dctx: Option<Array2<f64>> = None;

    let mut dx = match (&p.head, &mut grads.head) {
        (Some(h), Some(gh)) => {
            let d = linear_backward(&cache.ln_f_out, &h.w, dout, &mut gh.w, &mut gh.b);
            layer_norm_backward(
                &cache.ln_f,
                &p.ln_f.gain,
                &d,
                &mut grads.ln_f.gain,
                &mut grads.ln_f.bias,
            )
        }
        _ => layer_norm_backward(
            &cache.ln_f,
            &p.ln_f.gain,
            dout,
            &mut grads.ln_f.gain,
            &mut grads.ln_f.bias,
        ),
    };

    for (b, gb, c) in itertools_rev(&p.blocks, &mut grads.blocks, &cache.blocks) {
        // Feed-forward branch.
        let dff_act = linear_backward(&c.ff_act, &b.ff2.w, &dx, &mut gb.ff2.w, &mut gb.ff2.b);
        let dff_pre = gelu_backward(&c.ff_pre, &dff_act);
        let dln2_out =
            linear_backward(&c.ln2_out, &b.ff1.w, &dff_pre, &mut gb.ff1.w, &mut gb.ff1.b);
        dx += &layer_norm_backward(
            &c.ln2,
            &b.ln2.gain,
            &dln2_out,
            &mut gb.ln2.gain,
            &mut gb.ln2.bias,
        );

        // Cross-attention conditioner.
        if let (Some(cp), Some(gcp), Some(cc)) = (&b.cross, gb.cross.as_mut(), &c.cross) {
            let ctx = ctx.expect("forward required ctx");
            let dattn_out_in = linear_backward(
                &cc.attn_out_in,
                &cp.out.w,
                &dx,
                &mut gcp.out.w,
                &mut gcp.out.b,
            );
            let (dcq, dck, dcv) = attention_backward(&cc.attn, &dattn_out_in);
            let dln_out =
                linear_backward(&cc.ln_out, &cp.q.w, &dcq, &mut gcp.q.w, &mut gcp.q.b);
            let dctx_k = linear_backward(ctx, &cp.k.w, &dck, &mut gcp.k.w, &mut gcp.k.b);
            let dctx_v = linear_backward(ctx, &cp.v.w, &dcv, &mut gcp.v.w, &mut gcp.v.b);
            let dc = dctx_k + dctx_v;
            dctx = Some(match dctx {
                Some(acc) => acc + dc,
                None => dc,
            });
            dx += &layer_norm_backward(
                &cc.ln,
                &cp.ln.gain,
                &dln_out,
                &mut gcp.ln.gain,
                &mut gcp.ln.bias,
            );
        }

        // Self-attention branch.
        let dattn_out_in = linear_backward(
            &c.attn_out_in,
            &b.attn_out.w,
            &dx,
            &mut gb.attn_out.w,
            &mut gb.attn_out.b,
        );
        let (dq, dk, dv) = attention_backward(&c.attn, &dattn_out_in);
        let t = dq.nrows();
        let mut dqkv = Array2::zeros((t, 3 * e));
        dqkv.slice_mut(s![.., 0..e]).assign(&dq);
        dqkv.slice_mut(s![.., e..2 * e]).assign(&dk);
        dqkv.slice_mut(s![.., 2 * e..3 * e]).assign(&dv);
        let dln1_out =
            linear_backward(&c.ln1_out, &b.qkv.w, &dqkv, &mut gb.qkv.w, &mut gb.qkv.b);
        dx += &layer_norm_backward(
            &c.x_in_ln1,
            &b.ln1.gain,
            &dln1_out,
            &mut gb.ln1.gain,
            &mut gb.ln1.bias,
        );
    }

    for (i, &id) in cache.ids.iter().enumerate() {
        let drow = dx.row(i);
        let mut emb_row = grads.tok_emb.row_mut(id as usize);
        emb_row += &drow;
        let mut pos_row = grads.pos_emb.row_mut(i);
        pos_row += &drow;
    }
    dctx
}

/// Reverse lockstep iteration over parameter, gradient, and cache blocks.
fn itertools_rev<'a>(
    blocks: &'a [BlockParams],
    grads: &'a mut [BlockParams],
    caches: &'a [BlockCache],
) -> impl Iterator<Item = (&'a BlockParams, &'a mut BlockParams, &'a BlockCache)> {
    blocks
        .iter()
        .rev()
        .zip(grads.iter_mut().rev())
        .zip(caches.iter().rev())
        .map(|((b, g), c)| (b, g, c))
}

/// Mean pool over positions; the encoder's conditioning vector.
pub fn mean_pool(hidden: &Array2<f64>) -> Array2<f64> {
    hidden
        .mean_axis(Axis(0))
        .expect("nonempty hidden states")
        .insert_axis(Axis(0))
}

/// Spread a pooled gradient back over positions.
pub fn mean_pool_backward(dpooled: &Array2<f64>, rows: usize) -> Array2<f64> {
    let mut dx = Array2::zeros((rows, dpooled.ncols()));
    let scaled = dpooled.mapv(|v| v / rows as f64);
    for mut row in dx.rows_mut() {
        row.assign(&scaled.row(0));
    }
    dx
}
