//! Corpus records and their line-delimited JSON file format.
//!
//! Images are not stored; they are re-rendered from the chart spec on demand.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::text::INSTRUCTIONS;
use super::{
    complexity_stage, derive_facts, generate_texts, sample_spec, ChartError, ChartKind, ChartSpec,
    NamedSeries,
};
use crate::numcore::PrngStream;

const INSTRUCTION_STREAM: u64 = 0x1257;

/// One training example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub spec: ChartSpec,
    pub instruction_index: usize,
    pub reasoning: String,
    pub summary: String,
    pub stage: u8,
}

impl CorpusRecord {
    pub fn instruction(&self) -> &'static str {
        INSTRUCTIONS[self.instruction_index]
    }

    /// Builds the record for `spec`, deriving texts, stage and the
    /// instruction choice from the chart spec seed.
    pub fn from_spec(id: String, spec: ChartSpec) -> Self {
        let facts = derive_facts(&spec);
        let (reasoning, summary) = generate_texts(&spec, &facts);
        let stage = complexity_stage(&spec, &summary);
        let instruction_index = PrngStream::new(spec.seed, INSTRUCTION_STREAM).below(3) as usize;
        Self {
            id,
            spec,
            instruction_index,
            reasoning,
            summary,
            stage,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.spec.validate().map_err(|e| e.to_string())?;
        if self.instruction_index >= INSTRUCTIONS.len() {
            return Err(format!("instruction_index {} out of range", self.instruction_index));
        }
        let sentences = |t: &str| t.split(' ').filter(|w| *w == ".").count();
        if sentences(&self.reasoning) != 3 {
            return Err("reasoning must have exactly three sentences".into());
        }
        if !(1..=3).contains(&sentences(&self.summary)) {
            return Err("summary must have one to three sentences".into());
        }
        Ok(())
    }
}

/// `n` records, record `i` drawn from its own stream `(seed, i)` so the
/// result does not depend on generation order.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<CorpusRecord> {
    (0..n)
        .map(|i| {
            let mut rng = PrngStream::derive(seed, &[i as u64]);
            let spec = sample_spec(&mut rng, None);
            CorpusRecord::from_spec(format!("rec-{i:06}"), spec)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SeriesLine {
    name: String,
    x: Vec<u32>,
    y: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    chart_kind: ChartKind,
    series: Vec<SeriesLine>,
    x_labels: Vec<String>,
    seed: u64,
    instruction_index: usize,
    reasoning: String,
    summary: String,
    stage: u8,
}

impl From<&CorpusRecord> for RecordLine {
    fn from(r: &CorpusRecord) -> Self {
        Self {
            id: r.id.clone(),
            chart_kind: r.spec.kind,
            series: r
                .spec
                .series
                .iter()
                .map(|s| SeriesLine {
                    name: s.name.clone(),
                    x: s.x.clone(),
                    y: s.y.clone(),
                })
                .collect(),
            x_labels: r.spec.x_labels.clone(),
            seed: r.spec.seed,
            instruction_index: r.instruction_index,
            reasoning: r.reasoning.clone(),
            summary: r.summary.clone(),
            stage: r.stage,
        }
    }
}

impl From<RecordLine> for CorpusRecord {
    fn from(l: RecordLine) -> Self {
        Self {
            id: l.id,
            spec: ChartSpec {
                kind: l.chart_kind,
                series: l
                    .series
                    .into_iter()
                    .map(|s| NamedSeries {
                        name: s.name,
                        x: s.x,
                        y: s.y,
                    })
                    .collect(),
                x_labels: l.x_labels,
                seed: l.seed,
            },
            instruction_index: l.instruction_index,
            reasoning: l.reasoning,
            summary: l.summary,
            stage: l.stage,
        }
    }
}

/// Serializes records as one JSON object per LF-terminated line.
pub fn write_corpus<W: Write>(records: &[CorpusRecord], mut w: W) -> Result<(), ChartError> {
    for r in records {
        let line = serde_json::to_string(&RecordLine::from(r)).expect("record serializes");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_corpus(records: &[CorpusRecord], path: &Path) -> Result<(), ChartError> {
    let file = File::create(path).map_err(|e| ChartError::Path {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_corpus(records, BufWriter::new(file))
}

/// Parses records, validating each and recomputing its stage.
pub fn read_corpus<R: BufRead>(r: R) -> Result<Vec<CorpusRecord>, ChartError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line).map_err(|e| ChartError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let record = CorpusRecord::from(parsed);
        record.validate().map_err(|message| ChartError::Malformed {
            line: line_no,
            message,
        })?;
        let computed = complexity_stage(&record.spec, &record.summary);
        if computed != record.stage {
            return Err(ChartError::StageMismatch {
                line: line_no,
                id: record.id,
                stored: record.stage,
                computed,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>, ChartError> {
    let file = File::open(path).map_err(|e| ChartError::Path {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_corpus(BufReader::new(file))
}
