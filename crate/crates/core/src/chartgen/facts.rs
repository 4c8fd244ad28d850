//! Canonical, machine-checkable statements about a chart.
//!
//! Every fact carries the lowercase surface forms under which the templated
//! summary realizes it, which is what the fact-recall metric and the error
//! classifier match against.

use serde::{Deserialize, Serialize};

use super::{ChartKind, ChartSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactKind {
    ChartType,
    SeriesCount,
    PointCount,
    MaxOfSeries,
    MinOfSeries,
    TrendOfSeries,
    LargestSlice,
    DominantSeries,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

impl Trend {
    pub const ALL: [Trend; 4] = [Trend::Increasing, Trend::Decreasing, Trend::Flat, Trend::Mixed];

    pub fn word(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::Mixed => "mixed",
        }
    }

    /// Classifies consecutive pairwise differences.
    pub fn of(values: &[u32]) -> Trend {
        let mut up = false;
        let mut down = false;
        for w in values.windows(2) {
            up |= w[1] > w[0];
            down |= w[1] < w[0];
        }
        match (up, down) {
            (true, false) => Trend::Increasing,
            (false, true) => Trend::Decreasing,
            (false, false) => Trend::Flat,
            (true, true) => Trend::Mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactValue {
    Number(f64),
    Category(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub kind: FactKind,
    /// Series name for per-series facts.
    pub subject: Option<String>,
    /// Category label index, slice index or scatter point index.
    pub index: Option<usize>,
    pub value: FactValue,
    pub surface_forms: Vec<String>,
    pub summary_required: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactList {
    pub facts: Vec<Fact>,
}

impl FactList {
    pub fn required(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|f| f.summary_required)
    }

    pub fn find(&self, kind: FactKind, subject: Option<&str>) -> Option<&Fact> {
        self.facts
            .iter()
            .find(|f| f.kind == kind && (subject.is_none() || f.subject.as_deref() == subject))
    }

    /// Every number a faithful text about this chart may mention: raw
    /// values, counts, shares and the axis range.
    pub fn admissible_numbers(&self, spec: &ChartSpec) -> Vec<f64> {
        let mut nums: Vec<f64> = vec![0.0, 100.0];
        for s in &spec.series {
            nums.extend(s.y.iter().chain(&s.x).map(|&v| v as f64));
        }
        for f in &self.facts {
            if let FactValue::Number(v) = f.value {
                nums.push(v);
            }
        }
        nums.sort_by(f64::total_cmp);
        nums.dedup();
        nums
    }
}

pub const ORDINALS: [&str; 8] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth",
];

/// Index of the first maximum.
fn argmax(values: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmin(values: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// The series with the largest total; ties go to the earlier series.
pub fn dominant_series(spec: &ChartSpec) -> usize {
    let totals: Vec<u32> = spec.series.iter().map(|s| s.y.iter().sum()).collect();
    argmax(&totals)
}

/// Share of slice `i` in percent, rounded half away from zero.
pub fn slice_share(values: &[u32], i: usize) -> u32 {
    let total: u32 = values.iter().sum();
    (100.0 * values[i] as f64 / total as f64).round() as u32
}

/// Where a series peaks, as written in texts: the category label for
/// bar/line charts, `x is N` for scatter plots.
pub fn peak_location(spec: &ChartSpec, series: usize) -> String {
    let s = &spec.series[series];
    let i = argmax(&s.y);
    match spec.kind {
        ChartKind::Scatter => format!("when x is {}", s.x[i]),
        _ => format!("in {}", spec.x_labels.get(i).map(String::as_str).unwrap_or("")),
    }
}

pub fn derive_facts(spec: &ChartSpec) -> FactList {
    let mut facts = Vec::new();
    let kind = spec.kind;
    let ns = spec.series.len();
    let k = spec.point_count();
    let dom = dominant_series(spec);
    let is_pie = kind == ChartKind::Pie;

    facts.push(Fact {
        kind: FactKind::ChartType,
        subject: None,
        index: None,
        value: FactValue::Category(kind.word().into()),
        surface_forms: vec![kind.phrase().into()],
        summary_required: true,
    });
    facts.push(Fact {
        kind: FactKind::SeriesCount,
        subject: None,
        index: None,
        value: FactValue::Number(ns as f64),
        surface_forms: vec![format!("{ns} series")],
        summary_required: !is_pie,
    });
    let unit = match kind {
        ChartKind::Bar | ChartKind::Line => "categories",
        ChartKind::Pie => "slices",
        ChartKind::Scatter => "points",
    };
    facts.push(Fact {
        kind: FactKind::PointCount,
        subject: None,
        index: None,
        value: FactValue::Number(k as f64),
        surface_forms: vec![format!("{k} {unit}")],
        summary_required: is_pie,
    });

    for (si, s) in spec.series.iter().enumerate() {
        let headline = !is_pie && si == dom;
        let imax = argmax(&s.y);
        facts.push(Fact {
            kind: FactKind::MaxOfSeries,
            subject: Some(s.name.clone()),
            index: Some(imax),
            value: FactValue::Number(s.y[imax] as f64),
            surface_forms: vec![format!("peaks at {} {}", s.y[imax], peak_location(spec, si))],
            summary_required: headline,
        });
        let imin = argmin(&s.y);
        facts.push(Fact {
            kind: FactKind::MinOfSeries,
            subject: Some(s.name.clone()),
            index: Some(imin),
            value: FactValue::Number(s.y[imin] as f64),
            surface_forms: vec![format!("lowest at {}", s.y[imin])],
            summary_required: false,
        });
        let trend = Trend::of(&s.y);
        facts.push(Fact {
            kind: FactKind::TrendOfSeries,
            subject: Some(s.name.clone()),
            index: None,
            value: FactValue::Category(trend.word().into()),
            surface_forms: vec![format!("{} is {}", s.name, trend.word())],
            summary_required: headline,
        });
    }

    if is_pie {
        let y = &spec.series[0].y;
        let i = argmax(y);
        let share = slice_share(y, i);
        facts.push(Fact {
            kind: FactKind::LargestSlice,
            subject: Some(ORDINALS[i].into()),
            index: Some(i),
            value: FactValue::Number(share as f64),
            surface_forms: vec![format!("{} slice is the largest at {share} %", ORDINALS[i])],
            summary_required: true,
        });
    } else if ns > 1 {
        let name = &spec.series[dom].name;
        facts.push(Fact {
            kind: FactKind::DominantSeries,
            subject: Some(name.clone()),
            index: Some(dom),
            value: FactValue::Category(name.clone()),
            surface_forms: vec![format!("{name} leads")],
            summary_required: true,
        });
    }
    FactList { facts }
}
