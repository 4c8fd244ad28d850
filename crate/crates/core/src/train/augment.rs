//! Image augmentation: one affine resample (rotation, scale, translation)
//! followed by pixel noise.

use rayon::prelude::*;

use crate::chartgen::RenderedChart;
use crate::numcore::{hash_str, PrngStream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentConfig {
    pub rotation_deg_max: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub translate_px_max: i64,
    pub gaussian_sigma: f64,
    pub salt_pepper_p: f64,
    /// Probability that each transform is applied.
    pub apply_p: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            rotation_deg_max: 5.0,
            scale_min: 0.9,
            scale_max: 1.1,
            translate_px_max: 4,
            gaussian_sigma: 0.05,
            salt_pepper_p: 0.01,
            apply_p: 0.5,
        }
    }
}

impl AugmentConfig {
    /// Never applies anything.
    pub fn identity() -> Self {
        Self {
            apply_p: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{name} = {p} is not a probability"))
            }
        };
        prob("apply_p", self.apply_p)?;
        prob("salt_pepper_p", self.salt_pepper_p)?;
        if !(self.rotation_deg_max >= 0.0 && self.gaussian_sigma >= 0.0 && self.translate_px_max >= 0) {
            return Err("augmentation magnitudes must be non-negative".into());
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max) {
            return Err(format!("scale range [{}, {}] is invalid", self.scale_min, self.scale_max));
        }
        Ok(())
    }
}

/// The random choices behind one augmentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub rotation_deg: Option<f64>,
    pub scale: Option<f64>,
    pub translate: Option<(i64, i64)>,
    pub gaussian: bool,
    pub salt_pepper: bool,
}

/// Draws every decision in a fixed order, whether or not it is used, so
/// later draws do not shift with the configuration.
pub fn sample_params(rng: &mut PrngStream, c: &AugmentConfig) -> AugmentParams {
    let rot_on = rng.bernoulli(c.apply_p);
    let rot = rng.uniform_in(-c.rotation_deg_max, c.rotation_deg_max);
    let scale_on = rng.bernoulli(c.apply_p);
    let scale = rng.uniform_in(c.scale_min, c.scale_max);
    let shift_on = rng.bernoulli(c.apply_p);
    let tx = rng.range_inclusive(-c.translate_px_max, c.translate_px_max);
    let ty = rng.range_inclusive(-c.translate_px_max, c.translate_px_max);
    let gaussian = rng.bernoulli(c.apply_p);
    let salt_pepper = rng.bernoulli(c.apply_p);
    AugmentParams {
        rotation_deg: rot_on.then_some(rot),
        scale: scale_on.then_some(scale),
        translate: shift_on.then_some((tx, ty)),
        gaussian,
        salt_pepper,
    }
}

/// Bilinear sample with zero outside the image.
fn sample(img: &RenderedChart, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let px = |xi: f64, yi: f64| {
        if xi < 0.0 || yi < 0.0 || xi >= img.width as f64 || yi >= img.height as f64 {
            0.0
        } else {
            img.get(xi as usize, yi as usize)
        }
    };
    let top = px(x0, y0) * (1.0 - fx) + px(x0 + 1.0, y0) * fx;
    let bottom = px(x0, y0 + 1.0) * (1.0 - fx) + px(x0 + 1.0, y0 + 1.0) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Maps source point `q` to `c + t + s·R(θ)(q − c)` about the image centre
/// `c = ((w−1)/2, (h−1)/2)`, resampling bilinearly through the inverse map.
pub fn affine(img: &RenderedChart, degrees: f64, scale: f64, shift: (f64, f64)) -> RenderedChart {
    let (cx, cy) = ((img.width as f64 - 1.0) / 2.0, (img.height as f64 - 1.0) / 2.0);
    let (sin, cos) = degrees.to_radians().sin_cos();
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            let dx = (x as f64 - cx - shift.0) / scale;
            let dy = (y as f64 - cy - shift.1) / scale;
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            out.pixels[y * img.width + x] = sample(img, sx, sy);
        }
    }
    out
}

pub fn rotate(img: &RenderedChart, degrees: f64) -> RenderedChart {
    affine(img, degrees, 1.0, (0.0, 0.0))
}

/// Applies already-sampled choices; pixel noise draws from `rng`.
pub fn apply_params(img: &RenderedChart, p: &AugmentParams, c: &AugmentConfig, rng: &mut PrngStream) -> RenderedChart {
    let mut out = if p.rotation_deg.is_some() || p.scale.is_some() || p.translate.is_some() {
        let (tx, ty) = p.translate.unwrap_or((0, 0));
        affine(img, p.rotation_deg.unwrap_or(0.0), p.scale.unwrap_or(1.0), (tx as f64, ty as f64))
    } else {
        img.clone()
    };
    if p.gaussian {
        for v in &mut out.pixels {
            *v += c.gaussian_sigma * rng.gaussian();
        }
    }
    if p.salt_pepper {
        for v in &mut out.pixels {
            if rng.bernoulli(c.salt_pepper_p) {
                *v = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
            }
        }
    }
    for v in &mut out.pixels {
        *v = v.clamp(0.0, 1.0);
    }
    out
}

pub fn augment(img: &RenderedChart, rng: &mut PrngStream, c: &AugmentConfig) -> RenderedChart {
    let p = sample_params(rng, c);
    apply_params(img, &p, c, rng)
}

/// The stream for one record in one epoch.
pub fn sample_stream(seed: u64, record_id: &str, epoch: usize) -> PrngStream {
    PrngStream::derive(seed, &[hash_str(record_id), epoch as u64])
}

/// Augments `(image, record id)` pairs. Each item uses its own stream, so
/// the output does not depend on `workers`.
pub fn augment_batch(
    items: &[(&RenderedChart, &str)],
    seed: u64,
    epoch: usize,
    c: &AugmentConfig,
    workers: usize,
) -> Vec<RenderedChart> {
    let one = |(img, id): &(&RenderedChart, &str)| augment(img, &mut sample_stream(seed, id, epoch), c);
    if workers <= 1 {
        return items.iter().map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(one).collect()),
        Err(_) => items.iter().map(one).collect(),
    }
}
