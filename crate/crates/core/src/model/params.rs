use std::collections::{BTreeMap, HashMap};

use super::config::{param_specs, Init};
use super::lora::LoraAdapter;
use super::{ModelConfig, ModelError};
use crate::numcore::{PrngStream, Tape, Tensor, Var};

pub const INIT_STD: f64 = 0.02;
const INIT_STREAM: u64 = 0x1417;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub trainable: bool,
}

/// Named parameter tensors in a fixed order, plus any LoRA adapters.
///
/// Adapter matrices are ordinary entries named `{target}.lora_a` and
/// `{target}.lora_b`; `lora` records rank and alpha per target.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    params: Vec<Param>,
    index: HashMap<String, usize>,
    pub lora: BTreeMap<String, LoraAdapter>,
}

/// Deterministic initialization: Gaussian weights with std 0.02, zero
/// biases, unit layer-norm gains.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<ModelParams, ModelError> {
    config.validate()?;
    let mut rng = PrngStream::new(seed, INIT_STREAM);
    let params = param_specs(config)
        .into_iter()
        .map(|s| {
            let n: usize = s.shape.iter().product();
            let data = match s.init {
                Init::Normal => (0..n).map(|_| INIT_STD * rng.gaussian()).collect(),
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
            };
            Param {
                name: s.name,
                value: Tensor::new(s.shape, data).expect("shape matches data"),
                trainable: true,
            }
        })
        .collect();
    Ok(ModelParams::from_parts(config.clone(), params, BTreeMap::new()))
}

impl ModelParams {
    pub fn from_parts(config: ModelConfig, params: Vec<Param>, lora: BTreeMap<String, LoraAdapter>) -> Self {
        let index = params.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        Self {
            config,
            params,
            index,
            lora,
        }
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<Param> {
        self.params
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.index.get(name).map(|&i| &mut self.params[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn total_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.params.iter().filter(|p| p.trainable).map(|p| p.value.len()).sum()
    }

    /// All values concatenated in storage order.
    pub fn flatten(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    /// Inverse of [`ModelParams::flatten`].
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_count(), "flat vector length");
        let mut off = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }

    /// Rounds every value through `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for p in &mut self.params {
            for v in p.value.data_mut() {
                *v = *v as f32 as f64;
            }
        }
    }

    pub(crate) fn push(&mut self, p: Param) {
        self.index.insert(p.name.clone(), self.params.len());
        self.params.push(p);
    }

    pub(crate) fn remove_where(&mut self, mut f: impl FnMut(&Param) -> bool) {
        self.params.retain(|p| !f(p));
        self.index = self.params.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
    }

    /// Places every parameter on `tape`. Trainable parameters become
    /// gradient leaves when `with_grad` is set. LoRA targets resolve to
    /// `W + (alpha/r)·B·A`.
    pub fn bind(&self, tape: &mut Tape, with_grad: bool) -> Result<Binding, ModelError> {
        let vars: Vec<Var> = self
            .params
            .iter()
            .map(|p| tape.leaf(p.value.clone(), with_grad && p.trainable))
            .collect();
        let mut effective = HashMap::new();
        for (target, adapter) in &self.lora {
            let w = self.index[target.as_str()];
            let a = self.index[&LoraAdapter::a_name(target)];
            let b = self.index[&LoraAdapter::b_name(target)];
            let eff = adapter.effective(tape, vars[w], vars[a], vars[b])?;
            effective.insert(w, eff);
        }
        Ok(Binding {
            vars,
            effective,
            index: self.index.clone(),
        })
    }
}

/// Tape handles for one bound [`ModelParams`].
pub struct Binding {
    vars: Vec<Var>,
    effective: HashMap<usize, Var>,
    index: HashMap<String, usize>,
}

impl Binding {
    /// The raw leaf for `name`, in storage order of the parameters.
    pub fn leaf(&self, i: usize) -> Var {
        self.vars[i]
    }

    pub fn leaves(&self) -> &[Var] {
        &self.vars
    }

    /// The value the network uses for `name`.
    pub fn get(&self, name: &str) -> Var {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} is bound"));
        self.effective.get(&i).copied().unwrap_or(self.vars[i])
    }
}
