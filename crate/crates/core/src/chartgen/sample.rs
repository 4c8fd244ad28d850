//! Random chart specs.

use super::text::{MONTHS, SERIES_NAMES};
use super::{complexity_stage, derive_facts, generate_texts, ChartKind, ChartSpec, NamedSeries};
use crate::numcore::PrngStream;

/// `k` distinct values from `lo..=hi`, ascending.
fn distinct_sorted(rng: &mut PrngStream, k: usize, lo: u32, hi: u32) -> Vec<u32> {
    let mut pool: Vec<u32> = (lo..=hi).collect();
    rng.shuffle(&mut pool);
    let mut out = pool[..k].to_vec();
    out.sort_unstable();
    out
}

fn sample_values(rng: &mut PrngStream, k: usize, lo: u32) -> Vec<u32> {
    match rng.below(10) {
        0..=2 => distinct_sorted(rng, k, lo, 100),
        3..=5 => {
            let mut v = distinct_sorted(rng, k, lo, 100);
            v.reverse();
            v
        }
        6 => vec![rng.range_inclusive(lo as i64, 100) as u32; k],
        _ => (0..k).map(|_| rng.range_inclusive(lo as i64, 100) as u32).collect(),
    }
}

fn candidate(rng: &mut PrngStream, target: u8) -> ChartSpec {
    let kind = match target {
        0 => [ChartKind::Bar, ChartKind::Line][rng.below(2) as usize],
        1 => ChartKind::ALL[rng.below(4) as usize],
        _ => [ChartKind::Bar, ChartKind::Line, ChartKind::Scatter][rng.below(3) as usize],
    };
    let n_series = match (kind, target) {
        (ChartKind::Pie, _) => 1,
        (_, 0) => rng.range_inclusive(1, 2) as usize,
        (ChartKind::Scatter, 1) => rng.range_inclusive(1, 5) as usize,
        (_, 1) => rng.range_inclusive(3, 5) as usize,
        _ => rng.range_inclusive(6, 8) as usize,
    };
    let k = match kind {
        ChartKind::Pie => rng.range_inclusive(2, 8) as usize,
        _ => rng.range_inclusive(2, 12) as usize,
    };
    let mut names: Vec<&str> = SERIES_NAMES.to_vec();
    rng.shuffle(&mut names);
    let series = names[..n_series]
        .iter()
        .map(|name| NamedSeries {
            name: name.to_string(),
            x: if kind == ChartKind::Scatter {
                distinct_sorted(rng, k, 0, 100)
            } else {
                vec![]
            },
            y: sample_values(rng, k, if kind == ChartKind::Pie { 1 } else { 0 }),
        })
        .collect();
    let x_labels = match kind {
        ChartKind::Bar | ChartKind::Line => {
            let start = rng.below((12 - k + 1) as u64) as usize;
            MONTHS[start..start + k].iter().map(|m| m.to_string()).collect()
        }
        _ => vec![],
    };
    ChartSpec {
        kind,
        series,
        x_labels,
        seed: 0,
    }
}

/// Draws a valid spec. With `stage_filter`, the spec (with its templated
/// summary) lands exactly in that curriculum stage; without, the stage is
/// drawn uniformly first.
pub fn sample_spec(rng: &mut PrngStream, stage_filter: Option<u8>) -> ChartSpec {
    let seed = rng.next_u64();
    let target = match stage_filter {
        Some(s) => s.min(2),
        None => rng.below(3) as u8,
    };
    loop {
        let mut spec = candidate(rng, target);
        spec.seed = seed;
        if spec.validate().is_err() {
            continue;
        }
        let facts = derive_facts(&spec);
        let (_, summary) = generate_texts(&spec, &facts);
        if complexity_stage(&spec, &summary) == target {
            return spec;
        }
    }
}
