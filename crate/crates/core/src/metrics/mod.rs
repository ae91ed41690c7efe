//! Caption metrics over tokenized sentences: BLEU-1..4, ROUGE-L, CIDEr and
//! an exact-match METEOR without synonym or stemming stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::captioner::tokenize;
use crate::error::{Error, IoContext, Result};

pub type Tokens = Vec<String>;

/// METEOR alignment search stops refining after this many search nodes.
pub const METEOR_NODE_LIMIT: usize = 200_000;

pub fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut m = BTreeMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn check_refs(refs: &[Tokens]) -> Result<()> {
    if refs.is_empty() {
        Err(Error::Metric("at least one reference is required".into()))
    } else {
        Ok(())
    }
}

/// Clipped n-gram matches and candidate n-gram total.
pub fn modified_precision(cand: &[String], refs: &[Tokens], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
    for r in refs {
        for (g, k) in ngram_counts(r, n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(k);
        }
    }
    let clipped = c.iter().map(|(g, &k)| k.min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (clipped, cand.len().saturating_sub(n - 1))
}

/// Length of the reference closest to `len`, the shorter one on ties.
fn closest_ref_len(len: usize, refs: &[Tokens]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(len), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    }
}

fn check_order(n: usize) -> Result<()> {
    if (1..=4).contains(&n) {
        Ok(())
    } else {
        Err(Error::Metric(format!("BLEU order must be 1..=4, got {n}")))
    }
}

/// Sentence-level BLEU-n: geometric mean of clipped precisions of orders
/// 1..=n times the brevity penalty. No smoothing.
pub fn bleu_n(cand: &[String], refs: &[Tokens], n: usize) -> Result<f64> {
    check_order(n)?;
    check_refs(refs)?;
    if cand.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let (m, t) = modified_precision(cand, refs, k);
        if m == 0 || t == 0 {
            return Ok(0.0);
        }
        log_sum += (m as f64 / t as f64).ln();
    }
    Ok(brevity_penalty(cand.len(), closest_ref_len(cand.len(), refs)) * (log_sum / n as f64).exp())
}

/// Corpus-level BLEU-n with precisions and lengths pooled over all samples.
pub fn corpus_bleu(cands: &[Tokens], refs: &[Vec<Tokens>], n: usize) -> Result<f64> {
    check_order(n)?;
    if cands.len() != refs.len() {
        return Err(Error::DimensionMismatch {
            expected: cands.len(),
            actual: refs.len(),
            context: "reference sets",
        });
    }
    let mut matched = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, rs) in cands.iter().zip(refs) {
        check_refs(rs)?;
        for k in 1..=n {
            let (m, t) = modified_precision(c, rs, k);
            matched[k - 1] += m;
            totals[k - 1] += t;
        }
        c_len += c.len();
        r_len += closest_ref_len(c.len(), rs);
    }
    let mut log_sum = 0.0;
    for k in 0..n {
        if matched[k] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[k] as f64 / totals[k] as f64).ln();
    }
    Ok(brevity_penalty(c_len, r_len) * (log_sum / n as f64).exp())
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure (β = 1), best over references.
pub fn rouge_l(cand: &[String], refs: &[Tokens]) -> Result<f64> {
    check_refs(refs)?;
    Ok(refs
        .iter()
        .map(|r| {
            let l = lcs_len(cand, r) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let p = l / cand.len() as f64;
            let rc = l / r.len() as f64;
            2.0 * p * rc / (p + rc)
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiderScores {
    pub per_shape: Vec<f64>,
    pub mean: f64,
}

type TfIdf<'a> = BTreeMap<&'a [String], f64>;

fn tfidf<'a>(tokens: &'a [String], n: usize, df: &BTreeMap<&[String], usize>, log_n: f64) -> (TfIdf<'a>, f64) {
    let v: TfIdf = ngram_counts(tokens, n)
        .into_iter()
        .map(|(g, k)| {
            let d = df.get(g).copied().unwrap_or(0).max(1) as f64;
            (g, k as f64 * (log_n - d.ln()))
        })
        .collect();
    let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
    (v, norm)
}

fn cosine(a: &(TfIdf, f64), b: &(TfIdf, f64)) -> f64 {
    if a.1 == 0.0 || b.1 == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.0.iter().filter_map(|(g, x)| b.0.get(g).map(|y| x * y)).sum();
    dot / (a.1 * b.1)
}

/// CIDEr over a corpus of shapes: per order n = 1..=4, the mean tf-idf
/// cosine between candidate and each reference, averaged over orders and
/// scaled by 10. Document frequency counts shapes whose references contain
/// an n-gram.
pub fn cider(cands: &[Tokens], refs: &[Vec<Tokens>]) -> Result<CiderScores> {
    if cands.len() != refs.len() {
        return Err(Error::DimensionMismatch {
            expected: cands.len(),
            actual: refs.len(),
            context: "reference sets",
        });
    }
    if cands.len() < 2 {
        return Err(Error::Metric(
            "CIDEr needs at least two shapes: with one, every reference n-gram has idf log(1/1) = 0".into(),
        ));
    }
    for r in refs {
        check_refs(r)?;
    }
    let log_n = (cands.len() as f64).ln();
    let mut per_shape = vec![0.0; cands.len()];
    for n in 1..=4 {
        let mut df: BTreeMap<&[String], usize> = BTreeMap::new();
        for rs in refs {
            let grams: BTreeSet<&[String]> = rs.iter().flat_map(|r| r.windows(n)).collect();
            for g in grams {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        for (i, (c, rs)) in cands.iter().zip(refs).enumerate() {
            let cv = tfidf(c, n, &df, log_n);
            let s: f64 = rs.iter().map(|r| cosine(&cv, &tfidf(r, n, &df, log_n))).sum();
            per_shape[i] += s / rs.len() as f64;
        }
    }
    for s in &mut per_shape {
        *s *= 10.0 / 4.0;
    }
    let mean = per_shape.iter().sum::<f64>() / per_shape.len() as f64;
    Ok(CiderScores { per_shape, mean })
}

/// Exact-match unigram alignment with the most matches and, among those,
/// the fewest chunks. Returns `(matches, chunks)`.
pub fn align(cand: &[String], reference: &[String]) -> (usize, usize) {
    let mut cc: BTreeMap<&String, usize> = BTreeMap::new();
    let mut rc: BTreeMap<&String, usize> = BTreeMap::new();
    cand.iter().for_each(|w| *cc.entry(w).or_insert(0) += 1);
    reference.iter().for_each(|w| *rc.entry(w).or_insert(0) += 1);
    let target: usize = cc.iter().map(|(w, &k)| k.min(rc.get(w).copied().unwrap_or(0))).sum();
    if target == 0 {
        return (0, 0);
    }
    // Remaining matchable candidate positions from index i onward.
    let mut possible = vec![0usize; cand.len() + 1];
    for i in (0..cand.len()).rev() {
        possible[i] = possible[i + 1] + rc.contains_key(&cand[i]) as usize;
    }
    let mut search = AlignSearch {
        cand,
        reference,
        target,
        possible,
        used: vec![false; reference.len()],
        best: usize::MAX,
        nodes: 0,
    };
    search.dfs(0, 0, None, 0);
    (target, search.best)
}

struct AlignSearch<'a> {
    cand: &'a [String],
    reference: &'a [String],
    target: usize,
    possible: Vec<usize>,
    used: Vec<bool>,
    best: usize,
    nodes: usize,
}

impl AlignSearch<'_> {
    fn dfs(&mut self, i: usize, matched: usize, last: Option<(usize, usize)>, chunks: usize) {
        self.nodes += 1;
        if chunks >= self.best || (self.nodes > METEOR_NODE_LIMIT && self.best != usize::MAX) {
            return;
        }
        if matched == self.target {
            self.best = chunks;
            return;
        }
        if i == self.cand.len() || matched + self.possible[i] < self.target {
            return;
        }
        // Prefer continuing the current chunk, then other positions in order.
        let mut options: Vec<usize> = (0..self.reference.len())
            .filter(|&j| !self.used[j] && self.reference[j] == self.cand[i])
            .collect();
        let contiguous = |j: usize| matches!(last, Some((li, lj)) if li + 1 == i && lj + 1 == j);
        options.sort_by_key(|&j| !contiguous(j));
        for j in options {
            self.used[j] = true;
            let nc = if contiguous(j) { chunks } else { chunks + 1 };
            self.dfs(i + 1, matched + 1, Some((i, j)), nc);
            self.used[j] = false;
        }
        self.dfs(i + 1, matched, last, chunks);
    }
}

/// METEOR with exact matching only: `Fmean = 10PR / (R + 9P)`, fragmentation
/// penalty `0.5 (chunks / matches)³`, best over references.
pub fn meteor_simple(cand: &[String], refs: &[Tokens]) -> Result<f64> {
    check_refs(refs)?;
    Ok(refs
        .iter()
        .map(|r| {
            let (m, ch) = align(cand, r);
            if m == 0 {
                return 0.0;
            }
            let p = m as f64 / cand.len() as f64;
            let rc = m as f64 / r.len() as f64;
            let fmean = 10.0 * p * rc / (rc + 9.0 * p);
            let pen = 0.5 * (ch as f64 / m as f64).powi(3);
            fmean * (1.0 - pen)
        })
        .fold(0.0, f64::max))
}

/// Column names of the metric table, in order.
pub const COLUMNS: [&str; 7] = ["B-1", "B-2", "B-3", "B-4", "M", "R", "C"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub shape_id: String,
    pub candidate: String,
    /// Values in [`COLUMNS`] order.
    pub scores: [f64; 7],
    pub exact_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Means of the per-sample scores, in [`COLUMNS`] order.
    pub table: [f64; 7],
    pub corpus_bleu: [f64; 4],
    pub exact_match_rate: f64,
    pub samples: Vec<SampleScores>,
}

/// Scores candidates against references keyed by shape id. Every candidate
/// id needs references; extra reference ids are ignored.
pub fn evaluate(cands: &BTreeMap<String, String>, refs: &BTreeMap<String, Vec<String>>) -> Result<Evaluation> {
    if cands.is_empty() {
        return Err(Error::Metric("no candidates to score".into()));
    }
    let ids: Vec<&String> = cands.keys().collect();
    let ct: Vec<Tokens> = cands.values().map(|s| tokenize(s)).collect();
    let rt: Vec<Vec<Tokens>> = ids
        .iter()
        .map(|id| {
            refs.get(*id)
                .filter(|r| !r.is_empty())
                .map(|r| r.iter().map(|s| tokenize(s)).collect())
                .ok_or_else(|| Error::Metric(format!("no references for `{id}`")))
        })
        .collect::<Result<_>>()?;
    let cid = cider(&ct, &rt)?;
    let mut samples = Vec::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        let (c, r) = (&ct[i], &rt[i]);
        let mut s = [0.0; 7];
        for n in 1..=4 {
            s[n - 1] = bleu_n(c, r, n)?;
        }
        s[4] = meteor_simple(c, r)?;
        s[5] = rouge_l(c, r)?;
        s[6] = cid.per_shape[i];
        samples.push(SampleScores {
            shape_id: id.to_string(),
            candidate: cands[*id].clone(),
            scores: s,
            exact_match: r.iter().any(|x| x == c),
        });
    }
    let k = samples.len() as f64;
    let mut table = [0.0; 7];
    for s in &samples {
        for (t, v) in table.iter_mut().zip(s.scores) {
            *t += v / k;
        }
    }
    let mut corpus = [0.0; 4];
    for n in 1..=4 {
        corpus[n - 1] = corpus_bleu(&ct, &rt, n)?;
    }
    Ok(Evaluation {
        table,
        corpus_bleu: corpus,
        exact_match_rate: samples.iter().filter(|s| s.exact_match).count() as f64 / k,
        samples,
    })
}

impl Evaluation {
    /// Fixed-width text table with a header row.
    pub fn table_text(&self) -> String {
        let mut out = String::new();
        for c in COLUMNS {
            let _ = write!(out, "{c:>8}");
        }
        out.push('\n');
        for v in self.table {
            let _ = write!(out, "{v:>8.4}");
        }
        out.push('\n');
        out
    }

    /// Tab-separated per-sample scores for distribution plots.
    pub fn samples_tsv(&self) -> String {
        let mut out = format!("shape_id\t{}\texact\n", COLUMNS.join("\t"));
        for s in &self.samples {
            let vals: Vec<String> = s.scores.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{}\t{}\t{}", s.shape_id, vals.join("\t"), s.exact_match as u8);
        }
        out
    }
}

/// Reads a JSON object mapping shape id to a list of sentences.
pub fn read_sentences(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tokens {
        tokenize(s)
    }

    #[test]
    fn identity_scores() {
        let c = t("a red chair with four legs .");
        let refs = vec![c.clone()];
        for n in 1..=4 {
            assert_eq!(bleu_n(&c, &refs, n).unwrap(), 1.0);
        }
        assert_eq!(rouge_l(&c, &refs).unwrap(), 1.0);
        let n = c.len() as f64;
        assert!((meteor_simple(&c, &refs).unwrap() - (1.0 - 0.5 / n.powi(3))).abs() < 1e-12);
    }

    #[test]
    fn brevity_penalty_applies() {
        let c = t("a red chair");
        let r = vec![t("a red chair with legs")];
        let b = bleu_n(&c, &r, 1).unwrap();
        assert!((b - (1.0f64 - 5.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn meteor_prefers_fewer_chunks() {
        assert_eq!(align(&t("a b a b"), &t("a b a b")), (4, 1));
        assert_eq!(align(&t("x y"), &t("z")), (0, 0));
    }

    #[test]
    fn cider_needs_two_shapes() {
        assert!(cider(&[t("a")], &[vec![t("a")]]).is_err());
    }
}
