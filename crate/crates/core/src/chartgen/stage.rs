//! Curriculum difficulty of a (chart, summary) pair.

use super::{ChartKind, ChartSpec};

pub const STAGES: usize = 3;

pub fn type_rank(kind: ChartKind) -> u8 {
    match kind {
        ChartKind::Bar | ChartKind::Line => 0,
        ChartKind::Pie | ChartKind::Scatter => 1,
    }
}

/// Series-count bin: 1–2 → 0, 3–5 → 1, more → 2.
pub fn series_bin(series: usize) -> u8 {
    match series {
        0..=2 => 0,
        3..=5 => 1,
        _ => 2,
    }
}

/// Summary-length bin over normalized words: ≤20 → 0, ≤40 → 1, more → 2.
pub fn length_bin(summary: &str) -> u8 {
    match crate::normalize::words(summary).len() {
        0..=20 => 0,
        21..=40 => 1,
        _ => 2,
    }
}

/// `max(type rank, series bin, length bin)`, always in `0..=2`.
pub fn complexity_stage(spec: &ChartSpec, summary: &str) -> u8 {
    type_rank(spec.kind)
        .max(series_bin(spec.series.len()))
        .max(length_bin(summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::NamedSeries;

    fn spec(kind: ChartKind, n: usize) -> ChartSpec {
        ChartSpec {
            kind,
            series: (0..n)
                .map(|i| NamedSeries {
                    name: format!("s{i}"),
                    x: vec![],
                    y: vec![1, 2],
                })
                .collect(),
            x_labels: vec![],
            seed: 0,
        }
    }

    fn words(n: usize) -> String {
        vec!["w"; n].join(" ")
    }

    #[test]
    fn bins() {
        assert_eq!(complexity_stage(&spec(ChartKind::Bar, 1), &words(15)), 0);
        assert_eq!(complexity_stage(&spec(ChartKind::Scatter, 2), &words(15)), 1);
        assert_eq!(complexity_stage(&spec(ChartKind::Line, 6), &words(15)), 2);
        assert_eq!(complexity_stage(&spec(ChartKind::Bar, 1), &words(21)), 1);
        assert_eq!(complexity_stage(&spec(ChartKind::Bar, 1), &words(41)), 2);
        assert_eq!(series_bin(5), 1);
    }
}
