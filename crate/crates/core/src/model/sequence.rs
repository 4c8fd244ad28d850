//! Token layout of one example:
//!
//! `BOS instruction REASON_OPEN reasoning REASON_CLOSE SUMMARY_OPEN summary SUMMARY_CLOSE EOS`
//!
//! Without a reasoning stage the two reasoning markers and the text between
//! them are absent.

use std::ops::Range;

use super::vocab::{BOS, EOS, REASON_CLOSE, REASON_OPEN, SUMMARY_CLOSE, SUMMARY_OPEN};
use super::{ModelError, Vocabulary};

/// Target positions of each segment. Position `i` is the prediction of
/// token `i` from tokens `< i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segments {
    /// Instruction tokens and the reasoning opener; never scored.
    pub prompt: Range<usize>,
    /// Reasoning tokens through `REASON_CLOSE`. Empty without a reasoning stage.
    pub reasoning: Range<usize>,
    /// `SUMMARY_OPEN` through `EOS`.
    pub summary: Range<usize>,
}

impl Segments {
    /// Finds the segments of a well-formed sequence.
    pub fn locate(ids: &[usize]) -> Result<Self, ModelError> {
        let bad = |m: &str| Err(ModelError::Segments(m.to_string()));
        if ids.first() != Some(&BOS) {
            return bad("sequence must start with BOS");
        }
        if ids.last() != Some(&EOS) || ids.len() < 2 {
            return bad("sequence must end with EOS");
        }
        let find = |t: usize| ids.iter().position(|&x| x == t);
        let Some(so) = find(SUMMARY_OPEN) else {
            return bad("missing SUMMARY_OPEN");
        };
        let reasoning = match (find(REASON_OPEN), find(REASON_CLOSE)) {
            (Some(ro), Some(rc)) if ro < rc && rc + 1 == so => ro + 1..rc + 1,
            (None, None) => so..so,
            _ => return bad("reasoning markers out of place"),
        };
        if ids[so + 1..ids.len() - 1].iter().filter(|&&t| t == SUMMARY_CLOSE).count() > 1 {
            return bad("repeated SUMMARY_CLOSE");
        }
        Ok(Self {
            prompt: 1..reasoning.start,
            reasoning,
            summary: so..ids.len(),
        })
    }

    /// Positions that carry loss: reasoning and summary.
    pub fn scored(&self) -> Range<usize> {
        self.reasoning.start..self.summary.end
    }
}

/// Encodes one example. `reasoning = None` builds the layout without a
/// reasoning stage.
pub fn build_sequence(
    vocab: &Vocabulary,
    instruction: &str,
    reasoning: Option<&str>,
    summary: &str,
) -> Result<(Vec<usize>, Segments), ModelError> {
    let mut ids = vec![BOS];
    ids.extend(vocab.encode(instruction)?);
    if let Some(r) = reasoning {
        ids.push(REASON_OPEN);
        ids.extend(vocab.encode(r)?);
        ids.push(REASON_CLOSE);
    }
    ids.push(SUMMARY_OPEN);
    ids.extend(vocab.encode(summary)?);
    ids.push(SUMMARY_CLOSE);
    ids.push(EOS);
    let seg = Segments::locate(&ids)?;
    Ok((ids, seg))
}
