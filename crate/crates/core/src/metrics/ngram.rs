//! BLEU and CIDEr over normalized word tokens.

use std::collections::{HashMap, HashSet};

use super::MetricsError;
use crate::normalize;

pub const MAX_N: usize = 4;
/// Lower bound on inverse document frequency, so n-grams shared by every
/// reference keep a small positive weight.
pub const IDF_FLOOR: f64 = 1e-6;
pub const CIDER_SCALE: f64 = 10.0;

type Counts<'a> = HashMap<&'a [String], usize>;

fn ngrams(tokens: &[String], n: usize) -> Counts<'_> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn tokenize<S: AsRef<str>>(texts: &[S]) -> Vec<Vec<String>> {
    texts.iter().map(|t| normalize::words(t.as_ref())).collect()
}

/// Corpus BLEU with one reference per candidate.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(candidates: &[S], references: &[T]) -> Result<f64, MetricsError> {
    let refs: Vec<Vec<&str>> = references.iter().map(|r| vec![r.as_ref()]).collect();
    bleu_multi(candidates, &refs, MAX_N)
}

/// Corpus BLEU: clipped n-gram matches and candidate n-gram totals are pooled
/// over the corpus, then combined as a geometric mean over `n = 1..=max_n`
/// with brevity penalty `exp(1 − r/c)` when `c < r`. Counts are clipped by
/// the maximum count over a candidate's references; `r` uses the reference
/// length closest to the candidate's. No smoothing: a zero precision gives 0.
pub fn bleu_multi<S: AsRef<str>, T: AsRef<str>>(
    candidates: &[S],
    references: &[Vec<T>],
    max_n: usize,
) -> Result<f64, MetricsError> {
    if candidates.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, refs) in candidates.iter().zip(references) {
        let cand = normalize::words(cand.as_ref());
        let refs = tokenize(refs);
        if refs.is_empty() {
            return Err(MetricsError::NoReference);
        }
        c += cand.len();
        r += refs
            .iter()
            .map(|x| x.len())
            .min_by_key(|&len| (len.abs_diff(cand.len()), len))
            .expect("at least one reference");
        for n in 1..=max_n {
            let cg = ngrams(&cand, n);
            let rgs: Vec<Counts> = refs.iter().map(|x| ngrams(x, n)).collect();
            for (g, &k) in &cg {
                let max_ref = rgs.iter().map(|m| m.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
                matched[n - 1] += k.min(max_ref);
                total[n - 1] += k;
            }
        }
    }
    if c == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        if matched[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    Ok(bp * (log_sum / max_n as f64).exp())
}

fn tfidf<'a>(counts: &Counts<'a>, df: &HashMap<&[String], usize>, n_docs: f64) -> HashMap<&'a [String], f64> {
    counts
        .iter()
        .map(|(g, &k)| {
            let d = df.get(g).copied().unwrap_or(0).max(1) as f64;
            (*g, k as f64 * (n_docs / d).ln().max(IDF_FLOOR))
        })
        .collect()
}

fn cosine(a: &HashMap<&[String], f64>, b: &HashMap<&[String], f64>) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// CIDEr of each pair. Document frequencies come from the references; for
/// each `n` the TF-IDF vectors of candidate and reference are compared by
/// cosine (two empty vectors count as identical), averaged over
/// `n = 1..=4` and scaled by 10.
pub fn cider_per_pair<S: AsRef<str>, T: AsRef<str>>(candidates: &[S], references: &[T]) -> Result<Vec<f64>, MetricsError> {
    if candidates.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let cands = tokenize(candidates);
    let refs = tokenize(references);
    let n_docs = refs.len() as f64;
    let mut scores = vec![0.0; cands.len()];
    for n in 1..=MAX_N {
        let ref_counts: Vec<Counts> = refs.iter().map(|r| ngrams(r, n)).collect();
        let mut df: HashMap<&[String], usize> = HashMap::new();
        for rc in &ref_counts {
            let unique: HashSet<&&[String]> = rc.keys().collect();
            for g in unique {
                *df.entry(*g).or_insert(0) += 1;
            }
        }
        for (i, cand) in cands.iter().enumerate() {
            let cv = tfidf(&ngrams(cand, n), &df, n_docs);
            let rv = tfidf(&ref_counts[i], &df, n_docs);
            scores[i] += cosine(&cv, &rv) / MAX_N as f64;
        }
    }
    Ok(scores.into_iter().map(|s| s * CIDER_SCALE).collect())
}

/// Mean of [`cider_per_pair`].
pub fn cider<S: AsRef<str>, T: AsRef<str>>(candidates: &[S], references: &[T]) -> Result<f64, MetricsError> {
    let s = cider_per_pair(candidates, references)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}
