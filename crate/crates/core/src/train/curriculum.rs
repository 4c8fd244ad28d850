//! Cumulative curriculum over complexity stages.

use crate::chartgen::{CorpusRecord, STAGES};
use crate::numcore::PrngStream;

const SHUFFLE_KEY: u64 = 0xc0c0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurriculumSchedule {
    /// Epochs spent at stages 0, 1 and 2 before the schedule ends.
    pub epochs_per_stage: [usize; 3],
    /// When false every epoch draws from the whole corpus.
    pub enabled: bool,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self {
            epochs_per_stage: [2, 2, 2],
            enabled: true,
        }
    }
}

impl CurriculumSchedule {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.epochs_per_stage.contains(&0) {
            return Err("every curriculum stage needs at least one epoch".into());
        }
        Ok(())
    }

    /// Highest stage admitted at `epoch`; past the schedule this is the
    /// final stage.
    pub fn stage_for_epoch(&self, epoch: usize) -> u8 {
        if !self.enabled {
            return (STAGES - 1) as u8;
        }
        let mut end = 0;
        for (stage, &n) in self.epochs_per_stage.iter().enumerate() {
            end += n;
            if epoch < end {
                return stage as u8;
            }
        }
        (STAGES - 1) as u8
    }

    /// First epoch at which the final stage is admitted.
    pub fn final_stage_epoch(&self) -> usize {
        if self.enabled {
            self.epochs_per_stage[..STAGES - 1].iter().sum()
        } else {
            0
        }
    }
}

/// Indices of the records admitted at `epoch`, shuffled by a stream keyed
/// on `(seed, epoch)`.
pub fn curriculum_order(corpus: &[CorpusRecord], schedule: &CurriculumSchedule, epoch: usize, seed: u64) -> Vec<usize> {
    let stage = schedule.stage_for_epoch(epoch);
    let mut pool: Vec<usize> = (0..corpus.len()).filter(|&i| corpus[i].stage <= stage).collect();
    PrngStream::derive(seed, &[SHUFFLE_KEY, epoch as u64]).shuffle(&mut pool);
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartgen::generate_corpus;

    #[test]
    fn cumulative_pools() {
        let corpus = generate_corpus(120, 1);
        let s = CurriculumSchedule::default();
        let pool0 = curriculum_order(&corpus, &s, 0, 5);
        assert!(!pool0.is_empty());
        assert!(pool0.iter().all(|&i| corpus[i].stage == 0));
        let mut prev_max = 0;
        let mut prev_len = 0;
        for e in 0..9 {
            let pool = curriculum_order(&corpus, &s, e, 5);
            let max = pool.iter().map(|&i| corpus[i].stage).max().unwrap();
            assert!(max >= prev_max && pool.len() >= prev_len);
            prev_max = max;
            prev_len = pool.len();
        }
        assert_eq!(curriculum_order(&corpus, &s, 100, 5).len(), corpus.len());
    }

    #[test]
    fn disabled_starts_full() {
        let corpus = generate_corpus(50, 2);
        assert_eq!(curriculum_order(&corpus, &CurriculumSchedule::disabled(), 0, 1).len(), 50);
    }
}
