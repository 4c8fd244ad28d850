//! Generation over a corpus, perplexity, and the ablation sweep.

use serde::{Deserialize, Serialize};

use super::{build_report, MetricsError, Report};
use crate::chartgen::{derive_facts, render_chart, ChartSpec, CorpusRecord, FactList};
use crate::model::{build_sequence, generate_vcot, sequence_log_prob, DecodeConfig, ModelParams, Vocabulary};
use crate::train::{fit, split_corpus, FitResult, TrainConfig, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComplexityBin {
    Low,
    Medium,
    High,
}

impl ComplexityBin {
    pub const ALL: [ComplexityBin; 3] = [ComplexityBin::Low, ComplexityBin::Medium, ComplexityBin::High];

    pub fn of(series: usize) -> Self {
        match series {
            0..=2 => ComplexityBin::Low,
            3..=5 => ComplexityBin::Medium,
            _ => ComplexityBin::High,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ComplexityBin::Low => "Low (1-2 Series)",
            ComplexityBin::Medium => "Medium (3-5 Series)",
            ComplexityBin::High => "High (>5 Series)",
        }
    }
}

/// One generated summary with everything needed to score it.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub candidate_summary: String,
    pub reference_summary: String,
    pub candidate_reasoning: String,
    pub reference_reasoning: String,
    pub facts: FactList,
    pub spec: ChartSpec,
    pub complexity: ComplexityBin,
}

impl EvalRecord {
    /// Scores the reference against itself; useful as a ceiling.
    pub fn from_reference(r: &CorpusRecord) -> Self {
        Self::new(r, r.reasoning.clone(), r.summary.clone())
    }

    pub fn new(r: &CorpusRecord, candidate_reasoning: String, candidate_summary: String) -> Self {
        Self {
            id: r.id.clone(),
            candidate_summary,
            reference_summary: r.summary.clone(),
            candidate_reasoning,
            reference_reasoning: r.reasoning.clone(),
            facts: derive_facts(&r.spec),
            spec: r.spec.clone(),
            complexity: ComplexityBin::of(r.spec.series.len()),
        }
    }

    /// Both generated segments equal their references.
    pub fn exact_match(&self) -> bool {
        self.candidate_summary == self.reference_summary && self.candidate_reasoning == self.reference_reasoning
    }
}

/// Decodes every record with `decode` and pairs it with its references.
pub fn generate_eval_records(
    params: &ModelParams,
    vocab: &Vocabulary,
    records: &[CorpusRecord],
    decode: &DecodeConfig,
) -> Result<Vec<EvalRecord>, MetricsError> {
    records
        .iter()
        .map(|r| {
            let img = render_chart(&r.spec, params.config.image_size)?;
            let g = generate_vcot(params, vocab, &img, r.instruction(), decode)?;
            let reasoning = if decode.vcot { r.reasoning.clone() } else { String::new() };
            let mut e = EvalRecord::new(r, vocab.decode(&g.reasoning), vocab.decode(&g.summary));
            e.reference_reasoning = reasoning;
            Ok(e)
        })
        .collect()
}

/// `exp` of the mean teacher-forced NLL over summary-segment tokens of the
/// reference sequences. Reasoning tokens condition the summary but are not
/// counted.
pub fn perplexity(params: &ModelParams, vocab: &Vocabulary, records: &[CorpusRecord], vcot: bool) -> Result<f64, MetricsError> {
    let mut nll = 0.0;
    let mut count = 0usize;
    for r in records {
        let img = render_chart(&r.spec, params.config.image_size)?;
        let reasoning = vcot.then_some(r.reasoning.as_str());
        let (ids, seg) = build_sequence(vocab, r.instruction(), reasoning, &r.summary)?;
        let lp = sequence_log_prob(params, &img, &ids, &seg)?;
        nll -= lp.summary;
        count += seg.summary.len();
    }
    if count == 0 {
        return Err(MetricsError::NoSummaryTokens);
    }
    Ok((nll / count as f64).exp())
}

/// Generation, perplexity and report for one model on `records`.
pub fn evaluate(
    params: &ModelParams,
    vocab: &Vocabulary,
    records: &[CorpusRecord],
    variant: Variant,
) -> Result<(Report, Vec<EvalRecord>), MetricsError> {
    let decode = DecodeConfig {
        vcot: variant.uses_vcot(),
        ..DecodeConfig::default()
    };
    let evals = generate_eval_records(params, vocab, records, &decode)?;
    let ppl = perplexity(params, vocab, records, variant.uses_vcot())?;
    let report = build_report(variant.label(), &evals, Some(ppl), &[])?;
    Ok((report, evals))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub label: String,
    pub cider: f64,
    pub bleu: f64,
    pub cs: f64,
    pub best_val_nll: f64,
    pub steps: usize,
}

/// One trained and evaluated ablation variant.
pub struct AblationRun {
    pub variant: Variant,
    pub fit: FitResult,
    /// Test-split report for this variant alone.
    pub report: Report,
}

impl AblationRun {
    pub fn row(&self) -> AblationRow {
        AblationRow {
            variant: self.variant.name().to_string(),
            label: self.variant.label().to_string(),
            cider: self.report.overall.cider,
            bleu: self.report.overall.bleu,
            cs: self.report.overall.cs,
            best_val_nll: self.fit.best_val_nll,
            steps: self.fit.steps,
        }
    }
}

/// Trains and evaluates each variant on the 80/10/10 split of `corpus`;
/// scores come from the test split.
pub fn run_ablation(
    corpus: &[CorpusRecord],
    base: &TrainConfig,
    vocab: &Vocabulary,
    variants: &[Variant],
) -> Result<Vec<AblationRun>, MetricsError> {
    let split = split_corpus(corpus);
    if split.test.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    variants
        .iter()
        .map(|&variant| {
            let config = variant.apply(base);
            let fit = fit(&config, &split.train, &split.val, vocab)?;
            let (report, _) = evaluate(&fit.params, vocab, &split.test, variant)?;
            Ok(AblationRun { variant, fit, report })
        })
        .collect()
}
