use serde::{Deserialize, Serialize};

use super::ChartError;

pub const MAX_VALUE: u32 = 100;
pub const MAX_SERIES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Bar,
    Line,
    Pie,
    Scatter,
}

impl ChartKind {
    pub const ALL: [ChartKind; 4] = [ChartKind::Bar, ChartKind::Line, ChartKind::Pie, ChartKind::Scatter];

    pub fn word(self) -> &'static str {
        match self {
            ChartKind::Bar => "bar",
            ChartKind::Line => "line",
            ChartKind::Pie => "pie",
            ChartKind::Scatter => "scatter",
        }
    }

    /// The noun phrase used in texts: "bar chart", "scatter plot", ...
    pub fn phrase(self) -> &'static str {
        match self {
            ChartKind::Bar => "bar chart",
            ChartKind::Line => "line chart",
            ChartKind::Pie => "pie chart",
            ChartKind::Scatter => "scatter plot",
        }
    }

    pub fn from_word(w: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.word() == w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    /// Only present for scatter plots.
    #[serde(default)]
    pub x: Vec<u32>,
    pub y: Vec<u32>,
}

/// Ground-truth definition of one chart; pixels, texts and facts are all
/// derived from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub series: Vec<NamedSeries>,
    /// Category labels for bar and line charts, empty otherwise.
    pub x_labels: Vec<String>,
    pub seed: u64,
}

impl ChartSpec {
    /// Checks every structural invariant for the chart kind.
    pub fn validate(&self) -> Result<(), ChartError> {
        let bad = |msg: String| Err(ChartError::InvalidSpec(msg));
        let ns = self.series.len();
        if ns == 0 || ns > MAX_SERIES {
            return bad(format!("{ns} series (expected 1..={MAX_SERIES})"));
        }
        for s in &self.series {
            if s.name.is_empty() {
                return bad("series with an empty name".into());
            }
            if let Some(v) = s.y.iter().chain(&s.x).find(|&&v| v > MAX_VALUE) {
                return bad(format!("value {v} in series {} exceeds {MAX_VALUE}", s.name));
            }
        }
        match self.kind {
            ChartKind::Pie => {
                if ns != 1 {
                    return bad(format!("pie chart with {ns} series"));
                }
                let y = &self.series[0].y;
                if !(2..=8).contains(&y.len()) {
                    return bad(format!("pie chart with {} slices", y.len()));
                }
                if y.contains(&0) {
                    return bad("pie slice with zero value".into());
                }
                if !self.x_labels.is_empty() || !self.series[0].x.is_empty() {
                    return bad("pie chart carries x data".into());
                }
            }
            ChartKind::Bar | ChartKind::Line => {
                let k = self.x_labels.len();
                if !(2..=12).contains(&k) {
                    return bad(format!("{k} category labels (expected 2..=12)"));
                }
                for s in &self.series {
                    if s.y.len() != k {
                        return bad(format!("series {} has {} values for {k} labels", s.name, s.y.len()));
                    }
                    if !s.x.is_empty() {
                        return bad(format!("series {} carries x values", s.name));
                    }
                }
            }
            ChartKind::Scatter => {
                if !self.x_labels.is_empty() {
                    return bad("scatter plot with category labels".into());
                }
                for s in &self.series {
                    if !(2..=12).contains(&s.y.len()) || s.x.len() != s.y.len() {
                        return bad(format!(
                            "series {} has {} x and {} y values",
                            s.name,
                            s.x.len(),
                            s.y.len()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of points (categories, slices or scatter points of the
    /// first series).
    pub fn point_count(&self) -> usize {
        match self.kind {
            ChartKind::Bar | ChartKind::Line => self.x_labels.len(),
            _ => self.series[0].y.len(),
        }
    }
}
