//! Fact recall and the error taxonomy.

use serde::{Deserialize, Serialize};

use crate::chartgen::{ChartSpec, FactKind, FactList, FactValue, Trend, ORDINALS, SERIES_NAMES};
use crate::normalize;

/// Share of required facts realized in `candidate`, in percent. A fact is
/// realized when one of its surface forms occurs in the normalized
/// candidate.
pub fn cs_score(candidate: &str, facts: &FactList) -> f64 {
    let text = normalize::normalize(candidate);
    let required: Vec<_> = facts.required().collect();
    if required.is_empty() {
        return 100.0;
    }
    let hit = required
        .iter()
        .filter(|f| f.surface_forms.iter().any(|s| text.contains(s.as_str())))
        .count();
    100.0 * hit as f64 / required.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    Incomplete,
    Hallucination,
    Reasoning,
    Other,
    None,
}

impl ErrorType {
    /// Display order of the error table.
    pub const ALL: [ErrorType; 5] = [
        ErrorType::Incomplete,
        ErrorType::Hallucination,
        ErrorType::Reasoning,
        ErrorType::Other,
        ErrorType::None,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorType::Incomplete => "Incomplete Summary (Missing Key Data)",
            ErrorType::Hallucination => "Hallucination (Factual Inaccuracy)",
            ErrorType::Reasoning => "Reasoning Error (Misinterpretation)",
            ErrorType::Other => "Other Errors (Style, Grammar)",
            ErrorType::None => "No Error",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::Incomplete => "incomplete",
            ErrorType::Hallucination => "hallucination",
            ErrorType::Reasoning => "reasoning",
            ErrorType::Other => "other",
            ErrorType::None => "none",
        }
    }
}

pub const NUMBER_TOLERANCE: f64 = 0.01;
pub const RECALL_THRESHOLD: f64 = 60.0;
pub const MAX_SENTENCES: usize = 3;

fn within_tolerance(x: f64, admissible: &[f64]) -> bool {
    admissible.iter().any(|&a| (x - a).abs() <= NUMBER_TOLERANCE * a.abs())
}

/// Whether `text` asserts a trend, dominance or largest-slice claim that
/// the facts contradict.
fn contradicts(text: &str, spec: &ChartSpec, facts: &FactList) -> bool {
    let padded = format!(" {text} ");
    let says = |phrase: &str| padded.contains(&format!(" {phrase} "));
    for f in &facts.facts {
        match (f.kind, &f.value, &f.subject) {
            (FactKind::TrendOfSeries, FactValue::Category(actual), Some(name)) => {
                if Trend::ALL
                    .iter()
                    .any(|t| t.word() != actual && says(&format!("{name} is {}", t.word())))
                {
                    return true;
                }
            }
            (FactKind::DominantSeries, _, Some(name)) => {
                if SERIES_NAMES.iter().any(|other| other != name && says(&format!("{other} leads"))) {
                    return true;
                }
            }
            (FactKind::LargestSlice, _, Some(ord)) => {
                if ORDINALS
                    .iter()
                    .any(|o| o != ord && says(&format!("{o} slice is the largest")))
                {
                    return true;
                }
            }
            _ => {}
        }
    }
    // A lead claim on a single-series chart has nothing to compare.
    spec.series.len() == 1 && SERIES_NAMES.iter().any(|n| says(&format!("{n} leads")))
}

fn well_formed(text: &str, reference: &str) -> bool {
    let words = normalize::words(text);
    let ref_len = normalize::words(reference).len().max(1);
    let sentences = words.iter().filter(|w| *w == ".").count();
    let stutter = words.windows(2).any(|w| w[0] == w[1]);
    words.last().is_some_and(|w| w == ".")
        && (1..=MAX_SENTENCES).contains(&sentences)
        && !stutter
        && words.len() <= 2 * ref_len
        && 2 * words.len() >= ref_len
}

/// Exactly one label per candidate, checked in order: a numeral more than
/// 1% away from every admissible value, a contradicted trend or comparison,
/// required-fact recall under 60%, a malformed or badly sized text.
pub fn classify_error(candidate: &str, spec: &ChartSpec, facts: &FactList, reference: &str) -> ErrorType {
    let text = normalize::normalize(candidate);
    let admissible = facts.admissible_numbers(spec);
    if normalize::numerals(&text).iter().any(|&x| !within_tolerance(x as f64, &admissible)) {
        return ErrorType::Hallucination;
    }
    if contradicts(&text, spec, facts) {
        return ErrorType::Reasoning;
    }
    if cs_score(&text, facts) < RECALL_THRESHOLD {
        return ErrorType::Incomplete;
    }
    if !well_formed(&text, reference) {
        return ErrorType::Other;
    }
    ErrorType::None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::{derive_facts, generate_corpus, generate_texts, ChartKind, NamedSeries};

    fn two_series() -> ChartSpec {
        ChartSpec {
            kind: ChartKind::Line,
            series: vec![
                NamedSeries {
                    name: "sales".into(),
                    x: vec![],
                    y: vec![10, 20, 30],
                },
                NamedSeries {
                    name: "costs".into(),
                    x: vec![],
                    y: vec![9, 5, 1],
                },
            ],
            x_labels: vec!["jan".into(), "feb".into(), "mar".into()],
            seed: 0,
        }
    }

    #[test]
    fn reference_scores_full_and_clean() {
        for r in generate_corpus(200, 3) {
            let f = derive_facts(&r.spec);
            assert_eq!(cs_score(&r.summary, &f), 100.0);
            assert_eq!(classify_error(&r.summary, &r.spec, &f, &r.summary), ErrorType::None, "{}", r.summary);
        }
    }

    #[test]
    fn three_of_four() {
        let s = two_series();
        let f = derive_facts(&s);
        assert_eq!(f.required().count(), 5);
        let mut f = f;
        f.facts.retain(|x| x.kind != FactKind::SeriesCount);
        assert_eq!(f.required().count(), 4);
        let cand = "the line chart . sales leads . sales is increasing .";
        assert_eq!(cs_score(cand, &f), 75.0);
        assert_eq!(cs_score("", &f), 0.0);
    }

    #[test]
    fn taxonomy() {
        let s = two_series();
        let f = derive_facts(&s);
        let (_, reference) = generate_texts(&s, &f);
        assert_eq!(classify_error(&reference.replace("30", "999"), &s, &f, &reference), ErrorType::Hallucination);
        // 101 is within 1% of the axis maximum 100; 102 is not.
        assert_eq!(classify_error(&reference.replace("30", "101"), &s, &f, &reference), ErrorType::None);
        assert_eq!(classify_error(&reference.replace("30", "102"), &s, &f, &reference), ErrorType::Hallucination);
        let wrong_trend = reference.replace("sales is increasing", "sales is decreasing");
        assert_eq!(classify_error(&wrong_trend, &s, &f, &reference), ErrorType::Reasoning);
        assert_eq!(classify_error("the line chart shows 2 series .", &s, &f, &reference), ErrorType::Incomplete);
        let stutter = reference.replace("sales leads", "sales sales leads");
        assert_eq!(classify_error(&stutter, &s, &f, &reference), ErrorType::Other);
    }
}
