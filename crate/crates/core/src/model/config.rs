use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub patch: usize,
    /// Side of the square input image.
    pub image_size: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub vocab_size: usize,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            d_model: 64,
            heads: 4,
            enc_layers: 2,
            dec_layers: 2,
            patch: 8,
            image_size: 64,
            ffn_dim: 256,
            max_positions: 256,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("d_model", self.d_model),
            ("heads", self.heads),
            ("patch", self.patch),
            ("image_size", self.image_size),
            ("ffn_dim", self.ffn_dim),
            ("max_positions", self.max_positions),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.d_model % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        if self.image_size % self.patch != 0 {
            return Err(ModelError::Config(format!(
                "image size {} is not divisible by patch {}",
                self.image_size, self.patch
            )));
        }
        Ok(())
    }

    pub fn num_patches(&self) -> usize {
        let side = self.image_size / self.patch;
        side * side
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Normal,
    Zeros,
    Ones,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

/// Every base parameter of the model, in storage order.
pub fn param_specs(c: &ModelConfig) -> Vec<ParamSpec> {
    let d = c.d_model;
    let mut out = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, init: Init| out.push(ParamSpec { name, shape, init });
    let linear = |push: &mut dyn FnMut(String, Vec<usize>, Init), name: &str, d_out: usize, d_in: usize| {
        push(format!("{name}.w"), vec![d_out, d_in], Init::Normal);
        push(format!("{name}.b"), vec![d_out], Init::Zeros);
    };
    let norm = |push: &mut dyn FnMut(String, Vec<usize>, Init), name: &str| {
        push(format!("{name}.gamma"), vec![d], Init::Ones);
        push(format!("{name}.beta"), vec![d], Init::Zeros);
    };
    let attention = |push: &mut dyn FnMut(String, Vec<usize>, Init), name: &str| {
        for p in ["q", "k", "v", "o"] {
            linear(push, &format!("{name}.{p}"), d, d);
        }
    };
    let ffn = |push: &mut dyn FnMut(String, Vec<usize>, Init), name: &str| {
        linear(push, &format!("{name}.up"), c.ffn_dim, d);
        linear(push, &format!("{name}.down"), d, c.ffn_dim);
    };

    linear(&mut push, "enc.patch", d, c.patch * c.patch);
    push("enc.pos".into(), vec![c.num_patches(), d], Init::Normal);
    for l in 0..c.enc_layers {
        norm(&mut push, &format!("enc.{l}.ln1"));
        attention(&mut push, &format!("enc.{l}.attn"));
        norm(&mut push, &format!("enc.{l}.ln2"));
        ffn(&mut push, &format!("enc.{l}.ffn"));
    }
    norm(&mut push, "enc.ln_f");

    push("dec.tok".into(), vec![c.vocab_size, d], Init::Normal);
    push("dec.pos".into(), vec![c.max_positions, d], Init::Normal);
    for l in 0..c.dec_layers {
        norm(&mut push, &format!("dec.{l}.ln1"));
        attention(&mut push, &format!("dec.{l}.self"));
        norm(&mut push, &format!("dec.{l}.ln2"));
        attention(&mut push, &format!("dec.{l}.cross"));
        norm(&mut push, &format!("dec.{l}.ln3"));
        ffn(&mut push, &format!("dec.{l}.ffn"));
    }
    norm(&mut push, "dec.ln_f");
    linear(&mut push, "dec.out", c.vocab_size, d);
    out
}
