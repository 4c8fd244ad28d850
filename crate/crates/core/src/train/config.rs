//! Training configuration and its `key = value` file format.

use std::fmt::Write as _;

use super::{AugmentConfig, CurriculumSchedule, TrainError};
use crate::model::ModelConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Full,
    NoVcot,
    NoAug,
    NoCurriculum,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoVcot, Variant::NoAug, Variant::NoCurriculum];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoVcot => "no_vcot",
            Variant::NoAug => "no_aug",
            Variant::NoCurriculum => "no_curriculum",
        }
    }

    /// Row label in ablation tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "V-CoT (Full Model)",
            Variant::NoVcot => "V-CoT w/o V-CoT",
            Variant::NoAug => "V-CoT w/o Data Augmentation",
            Variant::NoCurriculum => "V-CoT w/o Curriculum Learning",
        }
    }

    pub fn uses_vcot(self) -> bool {
        self != Variant::NoVcot
    }

    /// `config` with this variant's component switched off.
    pub fn apply(self, config: &TrainConfig) -> TrainConfig {
        let mut c = config.clone();
        c.variant = self;
        match self {
            Variant::Full | Variant::NoVcot => {}
            Variant::NoAug => c.augment = AugmentConfig::identity(),
            Variant::NoCurriculum => c.curriculum = CurriculumSchedule::disabled(),
        }
        c
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses an ablation variant name.
pub fn ablation_variant(name: &str) -> Result<Variant, TrainError> {
    Variant::ALL
        .into_iter()
        .find(|v| v.name() == name)
        .ok_or_else(|| TrainError::UnknownVariant(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Evaluations without sufficient improvement before stopping.
    pub patience: usize,
    /// Relative validation NLL improvement that resets patience.
    pub min_delta: f64,
    pub seed: u64,
    pub variant: Variant,
    pub weight_decay: f64,
    /// Optional hard cap on optimizer steps.
    pub max_steps: Option<usize>,
    /// Train rank-r adapters on the attention projections instead of every
    /// weight.
    pub lora_rank: Option<usize>,
    /// Threads used for augmentation.
    pub workers: usize,
    pub augment: AugmentConfig,
    pub curriculum: CurriculumSchedule,
    /// Architecture; the vocabulary size is filled in when training starts.
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            batch: 8,
            max_epochs: 40,
            patience: 3,
            min_delta: 0.005,
            seed: 0,
            variant: Variant::Full,
            weight_decay: 0.01,
            max_steps: None,
            lora_rank: None,
            workers: 1,
            augment: AugmentConfig::default(),
            curriculum: CurriculumSchedule::default(),
            model: ModelConfig::new(0),
        }
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Invalid(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch == 0 || self.max_epochs == 0 || self.patience == 0 || self.workers == 0 {
            return bad("batch, epochs, patience and workers must be positive".into());
        }
        if !(self.min_delta >= 0.0 && self.weight_decay >= 0.0) {
            return bad("min_delta and weight_decay must be non-negative".into());
        }
        if self.lora_rank == Some(0) || self.max_steps == Some(0) {
            return bad("lora_rank and max_steps must be positive when set".into());
        }
        self.augment.validate().map_err(TrainError::Invalid)?;
        self.curriculum.validate().map_err(TrainError::Invalid)?;
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped. The variant is applied after every key.
    pub fn parse(text: &str) -> Result<Self, TrainError> {
        let mut c = Self::default();
        let mut variant = Variant::Full;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| TrainError::Config { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, v) = (key.trim(), value.trim());
            let r: Result<(), String> = (|| {
                match key {
                    "lr" => c.lr = parse_num(v)?,
                    "batch" => c.batch = parse_num(v)?,
                    "epochs" => c.max_epochs = parse_num(v)?,
                    "patience" => c.patience = parse_num(v)?,
                    "min_delta" => c.min_delta = parse_num(v)?,
                    "seed" => c.seed = parse_num(v)?,
                    "variant" => variant = ablation_variant(v).map_err(|e| e.to_string())?,
                    "weight_decay" => c.weight_decay = parse_num(v)?,
                    "max_steps" => c.max_steps = Some(parse_num(v)?),
                    "lora_rank" => c.lora_rank = Some(parse_num(v)?),
                    "workers" => c.workers = parse_num(v)?,
                    "stage_epochs" => {
                        let parts: Vec<usize> = v.split(',').map(|p| parse_num(p.trim())).collect::<Result<_, _>>()?;
                        c.curriculum.epochs_per_stage = parts
                            .try_into()
                            .map_err(|_| "stage_epochs needs three comma-separated values".to_string())?;
                    }
                    "rotation_deg_max" => c.augment.rotation_deg_max = parse_num(v)?,
                    "scale_min" => c.augment.scale_min = parse_num(v)?,
                    "scale_max" => c.augment.scale_max = parse_num(v)?,
                    "translate_px_max" => c.augment.translate_px_max = parse_num(v)?,
                    "gaussian_sigma" => c.augment.gaussian_sigma = parse_num(v)?,
                    "salt_pepper_p" => c.augment.salt_pepper_p = parse_num(v)?,
                    "augment_p" => c.augment.apply_p = parse_num(v)?,
                    "d_model" => c.model.d_model = parse_num(v)?,
                    "heads" => c.model.heads = parse_num(v)?,
                    "enc_layers" => c.model.enc_layers = parse_num(v)?,
                    "dec_layers" => c.model.dec_layers = parse_num(v)?,
                    "ffn_dim" => c.model.ffn_dim = parse_num(v)?,
                    _ => return Err(format!("unknown key {key:?}")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        let c = variant.apply(&c);
        c.validate()?;
        Ok(c)
    }

    /// Inverse of [`TrainConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let a = &self.augment;
        let st = self.curriculum.epochs_per_stage;
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "batch = {}", self.batch);
        let _ = writeln!(s, "epochs = {}", self.max_epochs);
        let _ = writeln!(s, "patience = {}", self.patience);
        let _ = writeln!(s, "min_delta = {}", self.min_delta);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "weight_decay = {}", self.weight_decay);
        if let Some(m) = self.max_steps {
            let _ = writeln!(s, "max_steps = {m}");
        }
        if let Some(r) = self.lora_rank {
            let _ = writeln!(s, "lora_rank = {r}");
        }
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "stage_epochs = {},{},{}", st[0], st[1], st[2]);
        let _ = writeln!(s, "rotation_deg_max = {}", a.rotation_deg_max);
        let _ = writeln!(s, "scale_min = {}", a.scale_min);
        let _ = writeln!(s, "scale_max = {}", a.scale_max);
        let _ = writeln!(s, "translate_px_max = {}", a.translate_px_max);
        let _ = writeln!(s, "gaussian_sigma = {}", a.gaussian_sigma);
        let _ = writeln!(s, "salt_pepper_p = {}", a.salt_pepper_p);
        let _ = writeln!(s, "augment_p = {}", a.apply_p);
        let _ = writeln!(s, "d_model = {}", self.model.d_model);
        let _ = writeln!(s, "heads = {}", self.model.heads);
        let _ = writeln!(s, "enc_layers = {}", self.model.enc_layers);
        let _ = writeln!(s, "dec_layers = {}", self.model.dec_layers);
        let _ = writeln!(s, "ffn_dim = {}", self.model.ffn_dim);
        let _ = writeln!(s, "variant = {}", self.variant);
        s
    }
}
