//! Report assembly and rendering.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{bleu, cider_per_pair, classify_error, cs_score, AblationRow, ComplexityBin, ErrorType, EvalRecord, MetricsError};
use crate::chartgen::ChartKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub model: String,
    pub records: usize,
    /// Corpus BLEU in `[0, 1]`; multiply by 100 for the percentage scale.
    pub bleu: f64,
    pub cider: f64,
    /// Mean required-fact recall, percent.
    pub cs: f64,
    pub ppl: Option<f64>,
    /// Share of records whose reasoning and summary both match exactly.
    pub exact_match: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub label: String,
    pub count: usize,
    pub bleu: Option<f64>,
    pub cider: Option<f64>,
    pub cs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub label: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub overall: Overall,
    pub by_kind: Vec<GroupRow>,
    pub by_complexity: Vec<GroupRow>,
    pub errors: Vec<ErrorRow>,
    pub ablation: Vec<AblationRow>,
}

/// One table: a name, a header and rows of cells.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn kind_label(k: ChartKind) -> &'static str {
    match k {
        ChartKind::Bar => "Bar Chart",
        ChartKind::Line => "Line Chart",
        ChartKind::Pie => "Pie Chart",
        ChartKind::Scatter => "Scatter Plot",
    }
}

fn group(label: &str, idx: &[usize], records: &[EvalRecord], cider: &[f64], cs: &[f64]) -> Result<GroupRow, MetricsError> {
    if idx.is_empty() {
        return Ok(GroupRow {
            label: label.to_string(),
            count: 0,
            bleu: None,
            cider: None,
            cs: None,
        });
    }
    let cands: Vec<&str> = idx.iter().map(|&i| records[i].candidate_summary.as_str()).collect();
    let refs: Vec<&str> = idx.iter().map(|&i| records[i].reference_summary.as_str()).collect();
    let mean = |v: &[f64]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    Ok(GroupRow {
        label: label.to_string(),
        count: idx.len(),
        bleu: Some(bleu(&cands, &refs)?),
        cider: Some(mean(cider)),
        cs: Some(mean(cs)),
    })
}

/// Scores `records` and groups them by chart kind, series-count bin and
/// error type. Rows always appear in the same order, empty groups included.
pub fn build_report(model: &str, records: &[EvalRecord], ppl: Option<f64>, ablation: &[AblationRow]) -> Result<Report, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let cands: Vec<&str> = records.iter().map(|r| r.candidate_summary.as_str()).collect();
    let refs: Vec<&str> = records.iter().map(|r| r.reference_summary.as_str()).collect();
    let cider = cider_per_pair(&cands, &refs)?;
    let cs: Vec<f64> = records.iter().map(|r| cs_score(&r.candidate_summary, &r.facts)).collect();
    let n = records.len() as f64;
    let all: Vec<usize> = (0..records.len()).collect();

    let by_kind = ChartKind::ALL
        .iter()
        .map(|&k| {
            let idx: Vec<usize> = all.iter().copied().filter(|&i| records[i].spec.kind == k).collect();
            group(kind_label(k), &idx, records, &cider, &cs)
        })
        .collect::<Result<_, _>>()?;
    let by_complexity = ComplexityBin::ALL
        .iter()
        .map(|&b| {
            let idx: Vec<usize> = all.iter().copied().filter(|&i| records[i].complexity == b).collect();
            group(b.label(), &idx, records, &cider, &cs)
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<ErrorType> = records
        .iter()
        .map(|r| classify_error(&r.candidate_summary, &r.spec, &r.facts, &r.reference_summary))
        .collect();
    let errors = ErrorType::ALL
        .iter()
        .map(|&e| {
            let count = labels.iter().filter(|&&l| l == e).count();
            ErrorRow {
                label: e.label().to_string(),
                count,
                percent: 100.0 * count as f64 / n,
            }
        })
        .collect();

    Ok(Report {
        overall: Overall {
            model: model.to_string(),
            records: records.len(),
            bleu: bleu(&cands, &refs)?,
            cider: cider.iter().sum::<f64>() / n,
            cs: cs.iter().sum::<f64>() / n,
            ppl,
            exact_match: records.iter().filter(|r| r.exact_match()).count() as f64 / n,
        },
        by_kind,
        by_complexity,
        errors,
        ablation: ablation.to_vec(),
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

impl Report {
    pub fn tables(&self) -> Vec<Table> {
        let o = &self.overall;
        let mut out = vec![Table {
            name: "overall",
            header: vec!["Model", "Records", "BLEU", "CIDEr", "CS", "PPL", "ExactMatch"],
            rows: vec![vec![
                o.model.clone(),
                o.records.to_string(),
                format!("{:.4}", o.bleu),
                format!("{:.4}", o.cider),
                format!("{:.2}", o.cs),
                opt(o.ppl, 4),
                format!("{:.4}", o.exact_match),
            ]],
        }];
        if !self.ablation.is_empty() {
            out.push(Table {
                name: "ablation",
                header: vec!["Variant", "Model Variant", "CIDEr", "BLEU", "CS", "BestValNLL", "Steps"],
                rows: self
                    .ablation
                    .iter()
                    .map(|a| {
                        vec![
                            a.variant.clone(),
                            a.label.clone(),
                            format!("{:.4}", a.cider),
                            format!("{:.4}", a.bleu),
                            format!("{:.2}", a.cs),
                            format!("{:.4}", a.best_val_nll),
                            a.steps.to_string(),
                        ]
                    })
                    .collect(),
            });
        }
        let groups = |rows: &[GroupRow]| -> Vec<Vec<String>> {
            rows.iter()
                .map(|g| vec![g.label.clone(), g.count.to_string(), opt(g.bleu, 4), opt(g.cider, 4), opt(g.cs, 2)])
                .collect()
        };
        out.push(Table {
            name: "chart_types",
            header: vec!["Chart Type", "Records", "BLEU", "CIDEr", "CS"],
            rows: groups(&self.by_kind),
        });
        out.push(Table {
            name: "complexity",
            header: vec!["Complexity Level", "Records", "BLEU", "CIDEr", "CS"],
            rows: groups(&self.by_complexity),
        });
        out.push(Table {
            name: "errors",
            header: vec!["Error Type", "Records", "Percentage"],
            rows: self
                .errors
                .iter()
                .map(|e| vec![e.label.clone(), e.count.to_string(), format!("{:.1}", e.percent)])
                .collect(),
        });
        out
    }

    /// Every table as tab-separated text, separated by blank lines.
    pub fn to_delimited(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.tables().iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            s.push_str(&delimited_table(t));
        }
        s
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.tables().iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            let title = match t.name {
                "overall" => "Automatic evaluation",
                "ablation" => "Ablation (CIDEr)",
                "chart_types" => "By chart type",
                "complexity" => "By complexity level",
                _ => "Error analysis (% of summaries)",
            };
            let _ = writeln!(s, "{title}");
            let mut widths: Vec<usize> = t.header.iter().map(|h| h.len()).collect();
            for r in &t.rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: Vec<&str>| -> String {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string()
            };
            let header = line(t.header.clone());
            let _ = writeln!(s, "{header}");
            let _ = writeln!(s, "{}", "-".repeat(header.len()));
            for r in &t.rows {
                let _ = writeln!(s, "{}", line(r.iter().map(String::as_str).collect()));
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        serde_json::from_str(text).map_err(|e| MetricsError::Format(e.to_string()))
    }

    /// Writes `report.json`, `report.txt` and one `.tsv` per table.
    pub fn write_dir(&self, dir: &Path) -> Result<(), MetricsError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        for t in self.tables() {
            std::fs::write(dir.join(format!("{}.tsv", t.name)), delimited_table(&t))?;
        }
        Ok(())
    }
}

fn delimited_table(t: &Table) -> String {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    w.write_record(&t.header).expect("in-memory write");
    for r in &t.rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::generate_corpus;

    fn records() -> Vec<EvalRecord> {
        generate_corpus(60, 5)
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut e = EvalRecord::from_reference(r);
                if i % 3 == 0 {
                    e.candidate_summary = "the chart .".into();
                }
                e
            })
            .collect()
    }

    #[test]
    fn group_counts_sum() {
        let r = build_report("m", &records(), None, &[]).unwrap();
        assert_eq!(r.by_kind.iter().map(|g| g.count).sum::<usize>(), 60);
        assert_eq!(r.by_complexity.iter().map(|g| g.count).sum::<usize>(), 60);
        assert_eq!(r.errors.iter().map(|g| g.count).sum::<usize>(), 60);
        let labels: Vec<&str> = r.by_complexity.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(labels, ["Low (1-2 Series)", "Medium (3-5 Series)", "High (>5 Series)"]);
    }

    #[test]
    fn deterministic_rendering() {
        let a = build_report("m", &records(), Some(3.5), &[]).unwrap();
        let b = build_report("m", &records(), Some(3.5), &[]).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_delimited(), b.to_delimited());
        assert_eq!(Report::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn perfect_candidates() {
        let recs: Vec<EvalRecord> = generate_corpus(20, 6).iter().map(EvalRecord::from_reference).collect();
        let r = build_report("m", &recs, None, &[]).unwrap();
        assert_eq!(r.overall.bleu, 1.0);
        assert!((r.overall.cider - 10.0).abs() < 1e-9);
        assert_eq!(r.overall.cs, 100.0);
        assert_eq!(r.overall.exact_match, 1.0);
        assert_eq!(r.errors.last().unwrap().count, 20);
    }
}
