//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use vcot::chartgen::{generate_corpus, render_chart, CorpusRecord};
use vcot::model::{build_sequence, init_model, patchify, teacher_forced_loss, ModelConfig};
use vcot::numcore::{finite_diff_check, finite_diff_check_coords, PrngStream, Tape, Tensor, Var, DEFAULT_STEP};
use vcot::train::build_vocabulary;

pub fn tiny_config(vocab: usize) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        heads: 2,
        enc_layers: 1,
        dec_layers: 1,
        patch: 16,
        image_size: 64,
        ffn_dim: 16,
        max_positions: 160,
        vocab_size: vocab,
    }
}

/// Sums `y ⊙ R` for a fixed random `R`, giving a scalar with a dense
/// gradient.
fn reduce(tape: &mut Tape, y: Var, seed: u64) -> Var {
    let (m, n) = tape.value(y).dims2();
    let mut rng = PrngStream::new(seed, 99);
    let r = Tensor::matrix(m, n, (0..m * n).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap();
    let r = tape.constant(r);
    let z = tape.mul(y, r).unwrap();
    let left = tape.constant(Tensor::matrix(1, m, vec![1.0; m]).unwrap());
    let right = tape.constant(Tensor::matrix(1, n, vec![1.0; n]).unwrap());
    let s = tape.matmul(left, z).unwrap();
    tape.matmul_t(s, right).unwrap()
}

fn split(theta: &[f64], shapes: &[Vec<usize>]) -> Vec<Tensor> {
    let mut off = 0;
    shapes
        .iter()
        .map(|s| {
            let n: usize = s.iter().product();
            let t = Tensor::new(s.clone(), theta[off..off + n].to_vec()).unwrap();
            off += n;
            t
        })
        .collect()
}

/// Analytic-vs-central-difference error of `build` over every input
/// coordinate. `build` returns a tensor, reduced to a scalar here unless it
/// already is one.
fn check<F>(shapes: &[Vec<usize>], seed: u64, build: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let mut rng = PrngStream::new(seed, 7);
    let total: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    let theta: Vec<f64> = (0..total).map(|_| rng.uniform_in(-1.5, 1.5)).collect();
    let eval = |theta: &[f64], grad: bool| {
        let mut tape = Tape::new();
        let leaves: Vec<Var> = split(theta, shapes).into_iter().map(|t| tape.leaf(t, grad)).collect();
        let mut out = build(&mut tape, &leaves);
        if tape.value(out).len() != 1 {
            out = reduce(&mut tape, out, seed);
        }
        (tape, leaves, out)
    };
    let (tape, leaves, out) = eval(&theta, true);
    let grads = tape.backward(out).unwrap();
    let analytic: Vec<f64> = leaves.iter().flat_map(|&v| grads.wrt(v).into_data()).collect();
    finite_diff_check(
        |t| {
            let (tape, _, out) = eval(t, false);
            tape.value(out).item()
        },
        &theta,
        &analytic,
        DEFAULT_STEP,
    )
}

pub const PRIMITIVES: [&str; 12] = [
    "matmul",
    "matmul_t",
    "add",
    "add_broadcast",
    "mul",
    "scale",
    "concat",
    "slice",
    "softmax",
    "layer_norm",
    "gelu",
    "embedding_gather",
];

/// Worst relative error of each primitive (plus masked attention and cross
/// entropy) over `seeds` random shapes and inputs.
pub fn primitive_sweep(seeds: u64) -> Vec<(&'static str, f64)> {
    let mut names: Vec<&'static str> = PRIMITIVES.to_vec();
    names.push("causal_mask_softmax");
    names.push("cross_entropy_with_logits");
    let mut worst = vec![0.0f64; names.len()];
    for seed in 0..seeds {
        let mut rng = PrngStream::new(seed, 1);
        let mut dim = || 1 + rng.below(4) as usize;
        let (m, k, n) = (dim(), dim(), dim());
        let axis = (seed % 2) as usize;
        let errs = [
            check(&[vec![m, k], vec![k, n]], seed, |t, v| t.matmul(v[0], v[1]).unwrap()),
            check(&[vec![m, k], vec![n, k]], seed, |t, v| t.matmul_t(v[0], v[1]).unwrap()),
            check(&[vec![m, n], vec![m, n]], seed, |t, v| t.add(v[0], v[1]).unwrap()),
            check(&[vec![m, n], vec![n]], seed, |t, v| t.add(v[0], v[1]).unwrap()),
            check(&[vec![m, n], vec![m, n]], seed, |t, v| t.mul(v[0], v[1]).unwrap()),
            check(&[vec![m, n]], seed, |t, v| t.scale(v[0], -1.7).unwrap()),
            check(&[vec![m, n], vec![m, n]], seed, |t, v| t.concat(&[v[0], v[1]], axis).unwrap()),
            check(&[vec![m + 1, n + 1]], seed, |t, v| {
                let len = if axis == 0 { m } else { n };
                t.slice(v[0], axis, 1, len).unwrap()
            }),
            check(&[vec![m, n]], seed, |t, v| t.softmax(v[0], axis).unwrap()),
            check(&[vec![m, n + 1], vec![n + 1], vec![n + 1]], seed, |t, v| {
                t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap()
            }),
            check(&[vec![m, n]], seed, |t, v| t.gelu(v[0]).unwrap()),
            check(&[vec![k + 1, n]], seed, |t, v| {
                let ids: Vec<usize> = (0..m + 2).map(|i| (i * 7 + seed as usize) % (k + 1)).collect();
                t.embedding(v[0], &ids).unwrap()
            }),
            check(&[vec![m, m + k]], seed, |t, v| {
                let s = t.causal_mask(v[0]).unwrap();
                t.softmax(s, 1).unwrap()
            }),
            check(&[vec![m, n + 1]], seed, |t, v| {
                let targets: Vec<usize> = (0..m).map(|i| (i + seed as usize) % (n + 1)).collect();
                let weights: Vec<f64> = (0..m).map(|i| 0.25 * (i % 3) as f64 + 0.5).collect();
                t.cross_entropy(v[0], &targets, &weights).unwrap()
            }),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    names.into_iter().zip(worst).collect()
}

/// Finite-difference error of the masked teacher-forced loss of a tiny
/// model, probing three coordinates of every parameter tensor.
pub fn model_loss_check(seed: u64) -> f64 {
    let records: Vec<CorpusRecord> = generate_corpus(2, 100 + seed);
    let vocab = build_vocabulary(&records);
    let mut p = init_model(&tiny_config(vocab.len()), seed).unwrap();
    let mut flat = p.flatten();
    let mut rng = PrngStream::new(seed, 1);
    for v in flat.iter_mut() {
        *v += 0.3 * rng.gaussian();
    }
    p.set_flat(&flat);
    let r = &records[0];
    let img = render_chart(&r.spec, 64).unwrap();
    let (ids, seg) = build_sequence(&vocab, r.instruction(), Some(&r.reasoning), &r.summary).unwrap();
    let patches = patchify(&img, &p.config).unwrap();
    let mut mask = vec![0.0; ids.len()];
    for i in seg.scored() {
        mask[i] = 1.0;
    }
    let mut tape = Tape::new();
    let b = p.bind(&mut tape, true).unwrap();
    let loss = teacher_forced_loss(&mut tape, &b, &p.config, &patches, &ids, &mask).unwrap();
    let grads = tape.backward(loss).unwrap();
    let analytic: Vec<f64> = b.leaves().iter().flat_map(|&v| grads.wrt(v).into_data()).collect();
    let mut coords = Vec::new();
    let mut off = 0;
    for param in p.params() {
        let n = param.value.len();
        for _ in 0..3 {
            coords.push(off + rng.below(n as u64) as usize);
        }
        off += n;
    }
    let mut probe = p.clone();
    finite_diff_check_coords(
        |theta| {
            probe.set_flat(theta);
            let mut t = Tape::new();
            let b = probe.bind(&mut t, false).unwrap();
            let l = teacher_forced_loss(&mut t, &b, &probe.config, &patches, &ids, &mask).unwrap();
            t.value(l).item()
        },
        &flat,
        &analytic,
        &coords,
        DEFAULT_STEP,
    )
}

/// Independent parameter count: every block spelled out by hand.
pub fn closed_form_count(c: &ModelConfig) -> usize {
    let (d, h, v, p2) = (c.d_model, c.ffn_dim, c.vocab_size, c.patch * c.patch);
    let n_patch = (c.image_size / c.patch).pow(2);
    let ln = 2 * d;
    let attn = 4 * (d * d + d);
    let ffn = h * d + h + d * h + d;
    let enc = (d * p2 + d) + n_patch * d + c.enc_layers * (2 * ln + attn + ffn) + ln;
    let dec = v * d + c.max_positions * d + c.dec_layers * (3 * ln + 2 * attn + ffn) + ln + (v * d + v);
    enc + dec
}
