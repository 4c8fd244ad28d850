//! Low-rank adapters on attention projections.

use serde::{Deserialize, Serialize};

use super::params::{Param, INIT_STD};
use super::{ModelConfig, ModelError, ModelParams};
use crate::numcore::{hash_str, NumError, PrngStream, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoraAdapter {
    pub rank: usize,
    pub alpha: f64,
}

impl LoraAdapter {
    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    pub fn a_name(target: &str) -> String {
        format!("{target}.lora_a")
    }

    pub fn b_name(target: &str) -> String {
        format!("{target}.lora_b")
    }

    /// `W + (alpha/r)·B·A` on `tape`.
    pub fn effective(&self, tape: &mut Tape, w: Var, a: Var, b: Var) -> Result<Var, NumError> {
        let ba = tape.matmul(b, a)?;
        let delta = tape.scale(ba, self.scaling())?;
        tape.add(w, delta)
    }
}

/// Query, key, value and output weights of every attention block.
pub fn attention_targets(config: &ModelConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut block = |prefix: String| {
        for p in ["q", "k", "v", "o"] {
            out.push(format!("{prefix}.{p}.w"));
        }
    };
    for l in 0..config.enc_layers {
        block(format!("enc.{l}.attn"));
    }
    for l in 0..config.dec_layers {
        block(format!("dec.{l}.self"));
        block(format!("dec.{l}.cross"));
    }
    out
}

/// Adds rank-`rank` adapters to `targets` and freezes every base weight.
///
/// `A` is Gaussian with std 0.02 and `B` is zero, so the adapted model
/// computes exactly what the base model does until `B` moves.
pub fn lora_inject<S: AsRef<str>>(
    params: &ModelParams,
    targets: &[S],
    rank: usize,
    seed: u64,
) -> Result<ModelParams, ModelError> {
    if rank == 0 {
        return Err(ModelError::InvalidRank);
    }
    let allowed = attention_targets(&params.config);
    let mut out = params.clone();
    for p in out.params_mut() {
        p.trainable = false;
    }
    for t in targets {
        let t = t.as_ref();
        if !allowed.iter().any(|a| a == t) {
            return Err(ModelError::UnknownTarget(t.to_string()));
        }
        if out.lora.contains_key(t) {
            return Err(ModelError::Config(format!("{t} already carries an adapter")));
        }
        let (d_out, d_in) = out.get(t).expect("attention target exists").value.dims2();
        let mut rng = PrngStream::derive(seed, &[hash_str(t)]);
        let a: Vec<f64> = (0..rank * d_in).map(|_| INIT_STD * rng.gaussian()).collect();
        out.push(Param {
            name: LoraAdapter::a_name(t),
            value: Tensor::matrix(rank, d_in, a)?,
            trainable: true,
        });
        out.push(Param {
            name: LoraAdapter::b_name(t),
            value: Tensor::zeros(&[d_out, rank]),
            trainable: true,
        });
        out.lora.insert(
            t.to_string(),
            LoraAdapter {
                rank,
                alpha: rank as f64,
            },
        );
    }
    Ok(out)
}

/// Folds every adapter into its base weight and drops it. All parameters
/// become trainable again. Without adapters this is the identity.
pub fn lora_merge(params: &ModelParams) -> ModelParams {
    let mut out = params.clone();
    let adapters = std::mem::take(&mut out.lora);
    for (target, adapter) in &adapters {
        let mut tape = Tape::new();
        let leaf = |tape: &mut Tape, name: &str| tape.constant(params.get(name).expect("adapter present").value.clone());
        let w = leaf(&mut tape, target);
        let a = leaf(&mut tape, &LoraAdapter::a_name(target));
        let b = leaf(&mut tape, &LoraAdapter::b_name(target));
        let merged = adapter
            .effective(&mut tape, w, a, b)
            .expect("adapter shapes were checked at injection");
        out.get_mut(target).expect("target present").value = tape.value(merged).clone();
    }
    out.remove_where(|p| p.name.ends_with(".lora_a") || p.name.ends_with(".lora_b"));
    for p in out.params_mut() {
        p.trainable = true;
    }
    out
}
