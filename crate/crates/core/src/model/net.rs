//! Forward passes.
//!
//! Both stacks use pre-norm residual blocks. Linear weights are stored
//! `[d_out, d_in]` and applied as `x·Wᵀ + b`.

use super::params::Binding;
use super::{ModelConfig, ModelError, ModelParams, Segments};
use crate::chartgen::RenderedChart;
use crate::numcore::{NumError, Tape, Tensor, Var};

const LN_EPS: f64 = 1e-5;

/// Patch embeddings of one image, `[num_patches, d_model]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub features: Tensor,
}

impl FeatureMap {
    pub fn num_patches(&self) -> usize {
        self.features.dims2().0
    }
}

/// Splits the image into non-overlapping `p×p` patches, row-major over
/// patches and over pixels within a patch.
pub fn patchify(image: &RenderedChart, config: &ModelConfig) -> Result<Tensor, ModelError> {
    let p = config.patch;
    let err = || ModelError::ImageSize {
        width: image.width,
        height: image.height,
        patch: p,
        expected: config.image_size,
    };
    if image.width % p != 0 || image.height % p != 0 {
        return Err(err());
    }
    let (pw, ph) = (image.width / p, image.height / p);
    if pw * ph != config.num_patches() {
        return Err(err());
    }
    let mut data = Vec::with_capacity(image.width * image.height);
    for py in 0..ph {
        for px in 0..pw {
            for y in 0..p {
                let row = (py * p + y) * image.width + px * p;
                data.extend_from_slice(&image.pixels[row..row + p]);
            }
        }
    }
    Ok(Tensor::matrix(pw * ph, p * p, data)?)
}

fn linear(tape: &mut Tape, b: &Binding, x: Var, name: &str) -> Result<Var, NumError> {
    let y = tape.matmul_t(x, b.get(&format!("{name}.w")))?;
    tape.add(y, b.get(&format!("{name}.b")))
}

fn norm(tape: &mut Tape, b: &Binding, x: Var, name: &str) -> Result<Var, NumError> {
    tape.layer_norm(x, b.get(&format!("{name}.gamma")), b.get(&format!("{name}.beta")), LN_EPS)
}

fn attention(
    tape: &mut Tape,
    b: &Binding,
    name: &str,
    heads: usize,
    xq: Var,
    xkv: Var,
    causal: bool,
) -> Result<Var, NumError> {
    let q = linear(tape, b, xq, &format!("{name}.q"))?;
    let k = linear(tape, b, xkv, &format!("{name}.k"))?;
    let v = linear(tape, b, xkv, &format!("{name}.v"))?;
    let d = tape.value(q).dims2().1;
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = tape.slice(q, 1, h * dh, dh)?;
        let kh = tape.slice(k, 1, h * dh, dh)?;
        let vh = tape.slice(v, 1, h * dh, dh)?;
        let s = tape.matmul_t(qh, kh)?;
        let mut s = tape.scale(s, scale)?;
        if causal {
            s = tape.causal_mask(s)?;
        }
        let p = tape.softmax(s, 1)?;
        outs.push(tape.matmul(p, vh)?);
    }
    let o = if heads == 1 { outs[0] } else { tape.concat(&outs, 1)? };
    linear(tape, b, o, &format!("{name}.o"))
}

fn feed_forward(tape: &mut Tape, b: &Binding, x: Var, name: &str) -> Result<Var, NumError> {
    let h = linear(tape, b, x, &format!("{name}.up"))?;
    let h = tape.gelu(h)?;
    linear(tape, b, h, &format!("{name}.down"))
}

/// Encoder over pre-split patches; returns the feature map node.
pub fn encoder_forward(tape: &mut Tape, b: &Binding, c: &ModelConfig, patches: &Tensor) -> Result<Var, ModelError> {
    let x = tape.constant(patches.clone());
    let x = linear(tape, b, x, "enc.patch")?;
    let mut x = tape.add(x, b.get("enc.pos"))?;
    for l in 0..c.enc_layers {
        let h = norm(tape, b, x, &format!("enc.{l}.ln1"))?;
        let h = attention(tape, b, &format!("enc.{l}.attn"), c.heads, h, h, false)?;
        x = tape.add(x, h)?;
        let h = norm(tape, b, x, &format!("enc.{l}.ln2"))?;
        let h = feed_forward(tape, b, h, &format!("enc.{l}.ffn"))?;
        x = tape.add(x, h)?;
    }
    Ok(norm(tape, b, x, "enc.ln_f")?)
}

pub(crate) fn check_tokens(c: &ModelConfig, ids: &[usize]) -> Result<(), ModelError> {
    if let Some(&id) = ids.iter().find(|&&id| id >= c.vocab_size) {
        return Err(ModelError::TokenOutOfRange { id, vocab: c.vocab_size });
    }
    if ids.len() > c.max_positions {
        return Err(ModelError::SequenceTooLong {
            len: ids.len(),
            max: c.max_positions,
        });
    }
    Ok(())
}

/// Decoder logits `[ids.len(), vocab]`; row `i` scores the token after `ids[i]`.
pub fn decoder_forward(
    tape: &mut Tape,
    b: &Binding,
    c: &ModelConfig,
    features: Var,
    ids: &[usize],
) -> Result<Var, ModelError> {
    check_tokens(c, ids)?;
    let tok = tape.embedding(b.get("dec.tok"), ids)?;
    let positions: Vec<usize> = (0..ids.len()).collect();
    let pos = tape.embedding(b.get("dec.pos"), &positions)?;
    let mut x = tape.add(tok, pos)?;
    for l in 0..c.dec_layers {
        let h = norm(tape, b, x, &format!("dec.{l}.ln1"))?;
        let h = attention(tape, b, &format!("dec.{l}.self"), c.heads, h, h, true)?;
        x = tape.add(x, h)?;
        let h = norm(tape, b, x, &format!("dec.{l}.ln2"))?;
        let h = attention(tape, b, &format!("dec.{l}.cross"), c.heads, h, features, false)?;
        x = tape.add(x, h)?;
        let h = norm(tape, b, x, &format!("dec.{l}.ln3"))?;
        let h = feed_forward(tape, b, h, &format!("dec.{l}.ffn"))?;
        x = tape.add(x, h)?;
    }
    let x = norm(tape, b, x, "dec.ln_f")?;
    Ok(linear(tape, b, x, "dec.out")?)
}

pub fn encode_image(params: &ModelParams, image: &RenderedChart) -> Result<FeatureMap, ModelError> {
    let patches = patchify(image, &params.config)?;
    let mut tape = Tape::new();
    let b = params.bind(&mut tape, false)?;
    let f = encoder_forward(&mut tape, &b, &params.config, &patches)?;
    Ok(FeatureMap {
        features: tape.value(f).clone(),
    })
}

/// Logits for `ids` given precomputed image features.
pub fn decode_logits(params: &ModelParams, features: &FeatureMap, ids: &[usize]) -> Result<Tensor, ModelError> {
    let mut tape = Tape::new();
    let b = params.bind(&mut tape, false)?;
    let f = tape.constant(features.features.clone());
    let logits = decoder_forward(&mut tape, &b, &params.config, f, ids)?;
    Ok(tape.value(logits).clone())
}

/// Weighted teacher-forced negative log-likelihood. `mask[i]` weights the
/// prediction of `ids[i]`; `mask[0]` must be zero since nothing predicts BOS.
pub fn teacher_forced_loss(
    tape: &mut Tape,
    b: &Binding,
    c: &ModelConfig,
    patches: &Tensor,
    ids: &[usize],
    mask: &[f64],
) -> Result<Var, ModelError> {
    if mask.len() != ids.len() || ids.len() < 2 {
        return Err(ModelError::Segments(format!(
            "{} mask weights for {} tokens",
            mask.len(),
            ids.len()
        )));
    }
    let f = encoder_forward(tape, b, c, patches)?;
    let logits = decoder_forward(tape, b, c, f, &ids[..ids.len() - 1])?;
    check_tokens(c, &ids[ids.len() - 1..])?;
    Ok(tape.cross_entropy(logits, &ids[1..], &mask[1..])?)
}

/// Teacher-forced log-probabilities of one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceLogProb {
    /// `per_token[i] = log P(ids[i] | image, ids[..i])`; entry 0 is zero.
    pub per_token: Vec<f64>,
    /// Sum over every position.
    pub total: f64,
    /// `log P(V | I)`: the reasoning segment.
    pub reasoning: f64,
    /// `log P(S | I, V)`: the summary segment.
    pub summary: f64,
    /// `log P(S, V | I)` summed in one pass over both segments.
    pub joint: f64,
}

/// Log-softmax of `row` evaluated at `target`.
fn log_softmax_at(row: &[f64], target: usize) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
    row[target] - m - z.ln()
}

pub fn sequence_log_prob(
    params: &ModelParams,
    image: &RenderedChart,
    ids: &[usize],
    seg: &Segments,
) -> Result<SequenceLogProb, ModelError> {
    check_tokens(&params.config, ids)?;
    if ids.len() < 2 || seg.summary.end > ids.len() {
        return Err(ModelError::Segments("segments exceed the sequence".into()));
    }
    let features = encode_image(params, image)?;
    let logits = decode_logits(params, &features, &ids[..ids.len() - 1])?;
    let mut per_token = vec![0.0; ids.len()];
    for i in 1..ids.len() {
        per_token[i] = log_softmax_at(logits.row(i - 1), ids[i]);
    }
    let sum = |r: std::ops::Range<usize>| r.map(|i| per_token[i]).sum::<f64>();
    Ok(SequenceLogProb {
        total: sum(1..ids.len()),
        reasoning: sum(seg.reasoning.clone()),
        summary: sum(seg.summary.clone()),
        joint: sum(seg.scored()),
        per_token,
    })
}
