//! Templated reasoning and summary texts.
//!
//! Reasoning is always three sentences: chart type, axes, trends. The
//! summary realizes every required fact in one to three sentences. All
//! output is already in normalized form.

use super::facts::{self, FactKind, FactList, FactValue, Trend, ORDINALS};
use super::{ChartKind, ChartSpec};

/// Instruction prompts; one is assigned to each record.
pub const INSTRUCTIONS: [&str; 3] = [
    "Provide a concise summary of the key insights presented in this chart, considering its type, axes, and data trends.",
    "Generate a chart summary by first identifying the chart type, then describing the axes and scales, and finally highlighting the major trends and data points.",
    "Summarize the given chart in a step-by-step manner, starting with chart type recognition, followed by axis analysis, and concluding with a synthesis of key data findings.",
];

pub const SERIES_NAMES: [&str; 8] = [
    "sales", "costs", "profit", "users", "visits", "orders", "revenue", "stock",
];

pub const MONTHS: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

fn category(facts: &FactList, kind: FactKind, subject: &str) -> String {
    match facts.find(kind, Some(subject)).map(|f| &f.value) {
        Some(FactValue::Category(c)) => c.clone(),
        _ => unreachable!("derive_facts emits {kind:?} for every series"),
    }
}

fn number(facts: &FactList, kind: FactKind, subject: Option<&str>) -> u32 {
    match facts.find(kind, subject).map(|f| &f.value) {
        Some(FactValue::Number(v)) => *v as u32,
        _ => unreachable!("derive_facts emits {kind:?}"),
    }
}

/// Produces `(reasoning, summary)` for a spec and its facts.
pub fn generate_texts(spec: &ChartSpec, facts: &FactList) -> (String, String) {
    let ns = spec.series.len();
    let k = spec.point_count();
    let phrase = spec.kind.phrase();

    if spec.kind == ChartKind::Pie {
        let largest = facts.find(FactKind::LargestSlice, None).expect("pie facts");
        let ord = ORDINALS[largest.index.unwrap_or(0)];
        let share = number(facts, FactKind::LargestSlice, None);
        let slice_sentence = format!("the {ord} slice is the largest at {share} % .");
        let reasoning = format!(
            "this is a {phrase} with {k} slices . each slice is a share of the whole . {slice_sentence}"
        );
        let summary = format!("the {phrase} shows {k} slices . {slice_sentence}");
        return (reasoning, summary);
    }

    let axes = match spec.kind {
        ChartKind::Scatter => "the x axis and the y axis both span 0 to 100 .".to_string(),
        _ => format!(
            "the x axis has {k} categories from {} to {} and the y axis spans 0 to 100 .",
            spec.x_labels[0],
            spec.x_labels[k - 1]
        ),
    };
    let trends: Vec<String> = spec
        .series
        .iter()
        .map(|s| format!("{} {}", s.name, category(facts, FactKind::TrendOfSeries, &s.name)))
        .collect();
    let reasoning = format!(
        "this is a {phrase} with {ns} series . {axes} the trends are : {} .",
        trends.join(" , ")
    );

    let dom = facts::dominant_series(spec);
    let name = &spec.series[dom].name;
    let trend = category(facts, FactKind::TrendOfSeries, name);
    let peak = number(facts, FactKind::MaxOfSeries, Some(name));
    let location = facts::peak_location(spec, dom);
    let mut summary = format!("the {phrase} shows {ns} series .");
    if ns > 1 {
        summary.push_str(&format!(" {name} leads ."));
    }
    summary.push_str(&format!(" {name} is {trend} and peaks at {peak} {location} ."));
    (reasoning, summary)
}

/// Every word the templates, prompts and label pools can produce, in
/// normalized form. Digits are excluded; the tokenizer handles them.
pub fn lexicon() -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    let mut add = |text: &str| {
        for w in crate::normalize::words(text) {
            if !w.chars().all(|c| c.is_ascii_digit()) {
                words.push(w);
            }
        }
    };
    for p in INSTRUCTIONS {
        add(p);
    }
    for w in SERIES_NAMES.iter().chain(&MONTHS).chain(&ORDINALS) {
        add(w);
    }
    for t in Trend::ALL {
        add(t.word());
    }
    for k in ChartKind::ALL {
        add(k.phrase());
    }
    add("this is a with series slices . each slice is a share of the whole");
    add("the slice is the largest at % shows leads and peaks in when x");
    add("the x axis has categories from to and the y axis spans both span trends are : ,");
    add("points lowest");
    words.sort();
    words.dedup();
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::{derive_facts, NamedSeries};

    fn line(ys: &[&[u32]]) -> ChartSpec {
        let k = ys[0].len();
        ChartSpec {
            kind: ChartKind::Line,
            series: ys
                .iter()
                .enumerate()
                .map(|(i, y)| NamedSeries {
                    name: SERIES_NAMES[i].into(),
                    x: vec![],
                    y: y.to_vec(),
                })
                .collect(),
            x_labels: MONTHS[..k].iter().map(|s| s.to_string()).collect(),
            seed: 1,
        }
    }

    #[test]
    fn reasoning_shape() {
        let s = line(&[&[1, 5, 9], &[9, 5, 1]]);
        let (r, summary) = generate_texts(&s, &derive_facts(&s));
        assert_eq!(
            r,
            "this is a line chart with 2 series . the x axis has 3 categories from jan to mar \
             and the y axis spans 0 to 100 . the trends are : sales increasing , costs decreasing ."
        );
        assert_eq!(summary, "the line chart shows 2 series . sales leads . sales is increasing and peaks at 9 in mar .");
    }

    #[test]
    fn texts_are_normalized() {
        let s = line(&[&[10, 50, 20]]);
        let (r, summary) = generate_texts(&s, &derive_facts(&s));
        assert_eq!(crate::normalize::normalize(&r), r);
        assert_eq!(crate::normalize::normalize(&summary), summary);
    }

    #[test]
    fn lexicon_covers_prompts() {
        let lex = lexicon();
        for p in INSTRUCTIONS {
            for w in crate::normalize::words(p) {
                assert!(lex.contains(&w), "{w}");
            }
        }
    }
}
