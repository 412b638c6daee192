//! ROUGE-1, ROUGE-2, sentence-level ROUGE-L and summary-level ROUGE-LSum
//! against a single reference.
//!
//! ROUGE-LSum takes, for each reference sentence, the union of LCS-matched
//! reference positions over every candidate sentence. Each pair contributes
//! one canonical LCS: the one whose reference positions are lexicographically
//! smallest. Hits are clipped by token multiplicity on both sides so that
//! precision and recall stay within [0, 1].

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{tokenize_rouge, SentenceSplitter};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    fn from_hits(hits: usize, candidate_total: usize, reference_total: usize) -> Self {
        let ratio = |total: usize| {
            if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            }
        };
        Self::new(ratio(candidate_total), ratio(reference_total))
    }

    fn mean<'a>(scores: impl Iterator<Item = &'a Score>) -> Score {
        let mut n = 0usize;
        let mut acc = Score::default();
        for s in scores {
            n += 1;
            acc.precision += s.precision;
            acc.recall += s.recall;
            acc.f1 += s.f1;
        }
        if n == 0 {
            return acc;
        }
        let n = n as f64;
        Score {
            precision: acc.precision / n,
            recall: acc.recall / n,
            f1: acc.f1 / n,
        }
    }
}

/// Contiguous n-grams with multiplicity. Empty when there are fewer than `n` tokens.
pub fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    assert!(n >= 1, "n-gram order must be positive");
    let mut counts = HashMap::new();
    if tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts
            .entry(w.iter().map(AsRef::as_ref).collect())
            .or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap.
pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Score {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| refs.get(g).map_or(0, |&r| c.min(r)))
        .sum();
    Score::from_hits(
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// Length of the longest common subsequence, in O(|b|) memory.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Positions in `reference` of the LCS whose position sequence is
/// lexicographically smallest among all LCSs with `candidate`.
pub fn lcs_positions<T: PartialEq>(reference: &[T], candidate: &[T]) -> Vec<usize> {
    let (m, n) = (reference.len(), candidate.len());
    let w = n + 1;
    // suffix[i * w + j] = LCS(reference[i..], candidate[j..])
    let mut suffix = vec![0usize; (m + 1) * w];
    for i in (0..m).rev() {
        for j in (0..n).rev() {
            suffix[i * w + j] = if reference[i] == candidate[j] {
                suffix[(i + 1) * w + j + 1] + 1
            } else {
                suffix[(i + 1) * w + j].max(suffix[i * w + j + 1])
            };
        }
    }
    let mut out = Vec::with_capacity(suffix[0]);
    let (mut i, mut j) = (0, 0);
    let mut remaining = suffix[0];
    while remaining > 0 {
        // The earliest reference position that still completes an LCS, paired
        // with its earliest candidate match (later matches never do better).
        let (ii, jj) = (i..m)
            .find_map(|ii| {
                let jj = (j..n).find(|&jj| reference[ii] == candidate[jj])?;
                (suffix[(ii + 1) * w + jj + 1] + 1 == remaining).then_some((ii, jj))
            })
            .expect("suffix table guarantees a completion");
        out.push(ii);
        i = ii + 1;
        j = jj + 1;
        remaining -= 1;
    }
    out
}

/// LCS over the whole candidate and reference token sequences.
pub fn rouge_l_sentence<T: PartialEq>(candidate: &[T], reference: &[T]) -> Score {
    Score::from_hits(
        lcs_length(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

/// Summary-level union LCS over pre-tokenized sentences.
pub fn rouge_lsum_tokens<S: AsRef<str>>(candidate: &[Vec<S>], reference: &[Vec<S>]) -> Score {
    fn count<S: AsRef<str>>(sents: &[Vec<S>]) -> HashMap<&str, usize> {
        let mut m = HashMap::new();
        for t in sents.iter().flatten() {
            *m.entry(t.as_ref()).or_insert(0) += 1;
        }
        m
    }
    let mut cand_left = count(candidate);
    let mut ref_left = count(reference);
    let cand_total: usize = candidate.iter().map(Vec::len).sum();
    let ref_total: usize = reference.iter().map(Vec::len).sum();

    let mut hits = 0usize;
    for r in reference {
        let r_tokens: Vec<&str> = r.iter().map(AsRef::as_ref).collect();
        let mut union = BTreeSet::new();
        for c in candidate {
            let c_tokens: Vec<&str> = c.iter().map(AsRef::as_ref).collect();
            union.extend(lcs_positions(&r_tokens, &c_tokens));
        }
        for pos in union {
            let t = r_tokens[pos];
            match (ref_left.get_mut(t), cand_left.get_mut(t)) {
                (Some(rl), Some(cl)) if *rl > 0 && *cl > 0 => {
                    *rl -= 1;
                    *cl -= 1;
                    hits += 1;
                }
                _ => {}
            }
        }
    }
    Score::from_hits(hits, cand_total, ref_total)
}

/// Sentences for summary-level scoring: newline-separated lines, each further
/// split by the rule-based splitter.
pub fn summary_sentences(text: &str) -> Vec<&str> {
    let splitter = splitter();
    text.lines()
        .flat_map(|line| splitter.split_spans(line))
        .collect()
}

fn splitter() -> &'static SentenceSplitter {
    static SPLITTER: std::sync::OnceLock<SentenceSplitter> = std::sync::OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

fn tokenized_sentences(text: &str, use_stemmer: bool) -> Vec<Vec<String>> {
    summary_sentences(text)
        .into_iter()
        .map(|s| tokenize_rouge(s, use_stemmer))
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn rouge_lsum(candidate: &str, reference: &str, use_stemmer: bool) -> Score {
    rouge_lsum_tokens(
        &tokenized_sentences(candidate, use_stemmer),
        &tokenized_sentences(reference, use_stemmer),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1: Score,
    pub rouge2: Score,
    #[serde(rename = "rougeL")]
    pub rouge_l: Score,
    #[serde(rename = "rougeLsum")]
    pub rouge_lsum: Score,
}

impl RougeScores {
    pub fn mean<'a>(scores: impl Iterator<Item = &'a RougeScores> + Clone) -> RougeScores {
        RougeScores {
            rouge1: Score::mean(scores.clone().map(|s| &s.rouge1)),
            rouge2: Score::mean(scores.clone().map(|s| &s.rouge2)),
            rouge_l: Score::mean(scores.clone().map(|s| &s.rouge_l)),
            rouge_lsum: Score::mean(scores.map(|s| &s.rouge_lsum)),
        }
    }

    pub fn variants(&self) -> [(&'static str, Score); 4] {
        [
            ("rouge1", self.rouge1),
            ("rouge2", self.rouge2),
            ("rougeL", self.rouge_l),
            ("rougeLsum", self.rouge_lsum),
        ]
    }
}

/// All four variants for one candidate/reference pair.
pub fn score_pair(candidate: &str, reference: &str, use_stemmer: bool) -> RougeScores {
    let cand = tokenize_rouge(candidate, use_stemmer);
    let refs = tokenize_rouge(reference, use_stemmer);
    RougeScores {
        rouge1: rouge_n(&cand, &refs, 1),
        rouge2: rouge_n(&cand, &refs, 2),
        rouge_l: rouge_l_sentence(&cand, &refs),
        rouge_lsum: rouge_lsum(candidate, reference, use_stemmer),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_id: Option<String>,
    #[serde(flatten)]
    pub scores: RougeScores,
}

/// Corpus means of each variant plus the per-record scores they average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub use_stemmer: bool,
    #[serde(flatten)]
    pub corpus: RougeScores,
    pub records: Vec<RecordScores>,
}

impl RougeReport {
    pub fn from_records(records: Vec<RecordScores>, use_stemmer: bool) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation(
                "cannot evaluate an empty set of pairs".into(),
            ));
        }
        Ok(Self {
            use_stemmer,
            corpus: RougeScores::mean(records.iter().map(|r| &r.scores)),
            records,
        })
    }

    /// F1 table in percentage points.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>9} {:>9} {:>9}\n",
            "variant", "precision", "recall", "f1"
        );
        for (name, v) in self.corpus.variants() {
            s.push_str(&format!(
                "{name:<10} {:>9.2} {:>9.2} {:>9.2}\n",
                v.precision * 100.0,
                v.recall * 100.0,
                v.f1 * 100.0
            ));
        }
        s
    }
}

/// Scores each (candidate, reference) pair and averages over the corpus.
pub fn evaluate_corpus<C: AsRef<str> + Sync, R: AsRef<str> + Sync>(
    pairs: &[(C, R)],
    use_stemmer: bool,
) -> Result<RougeReport> {
    let records = pairs
        .par_iter()
        .map(|(c, r)| RecordScores {
            record_id: None,
            scores: score_pair(c.as_ref(), r.as_ref(), use_stemmer),
        })
        .collect();
    RougeReport::from_records(records, use_stemmer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn ngram_enumeration() {
        let t = toks("a b a");
        let uni = ngram_counts(&t, 1);
        assert_eq!(uni[&vec!["a"]], 2);
        assert_eq!(uni[&vec!["b"]], 1);
        let bi = ngram_counts(&t, 2);
        assert_eq!(bi.len(), 2);
        assert_eq!(bi[&vec!["a", "b"]], 1);
        assert_eq!(bi[&vec!["b", "a"]], 1);
        assert!(ngram_counts(&toks("a"), 2).is_empty());
    }

    #[test]
    fn rouge_n_cases() {
        let same = toks("x y z");
        assert_eq!(rouge_n(&same, &same, 1), Score::new(1.0, 1.0));
        let s = rouge_n(&toks("the cat sat"), &toks("the cat ate"), 1);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rouge_n(&toks("a b"), &toks("c d"), 1), Score::default());
        assert_eq!(rouge_n(&toks(""), &toks("c d"), 1), Score::default());
        // clipping: candidate repeats "the" three times, reference has it once
        let s = rouge_n(&toks("the the the"), &toks("the cat"), 1);
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-15 && (s.recall - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lcs_cases() {
        let a = toks("a b c d e");
        assert_eq!(lcs_length(&a, &a), 5);
        assert_eq!(lcs_length(&a, &toks("a c e")), 3);
        assert_eq!(lcs_length(&a, &toks("x y")), 0);
        assert_eq!(lcs_positions(&toks("a b"), &toks("b a")), [0]);
        assert_eq!(lcs_positions(&a, &toks("e c a c")), [0, 2]);
    }

    #[test]
    fn rouge_l_worked_examples() {
        let r = toks("w1 w2 w3 w4 w5");
        assert_eq!(rouge_l_sentence(&r, &r).f1, 1.0);
        let s = rouge_l_sentence(&toks("w1 w2 w6 w7 w8"), &r);
        assert!(
            (s.precision - 0.4).abs() < 1e-15
                && (s.recall - 0.4).abs() < 1e-15
                && (s.f1 - 0.4).abs() < 1e-15
        );
        let s = rouge_l_sentence(&toks("w1 w3 w8 w9 w5"), &r);
        assert!((s.f1 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn lsum_union_example() {
        let s = rouge_lsum("w1 w2 w6 w7 w8\nw1 w3 w8 w9 w5", "w1 w2 w3 w4 w5", false);
        assert_eq!(s.recall, 4.0 / 5.0);
        assert_eq!(s.precision, 4.0 / 10.0);
        assert!((s.f1 - 8.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn lsum_single_sentence_equals_rouge_l() {
        let c = "the model learns sparse codes";
        let r = "a model that learns codes";
        let l = rouge_l_sentence(&tokenize_rouge(c, false), &tokenize_rouge(r, false));
        assert_eq!(rouge_lsum(c, r, false), l);
    }

    #[test]
    fn lsum_union_is_direction_dependent() {
        let c = vec![toks("b f a e b e")];
        let r = vec![toks("a a a a"), toks("b e b a a b")];
        let (x, y) = (rouge_lsum_tokens(&c, &r), rouge_lsum_tokens(&r, &c));
        assert_eq!((x.precision, x.recall), (4.0 / 6.0, 4.0 / 10.0));
        assert_eq!((y.precision, y.recall), (3.0 / 10.0, 3.0 / 6.0));
    }

    #[test]
    fn lsum_clips_repeated_hits() {
        // Without clipping the two reference sentences would claim the single candidate token twice.
        let s = rouge_lsum("a", "a\na", false);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
    }

    #[test]
    fn identical_and_disjoint_texts() {
        let t = "We study graphs. Our method is fast.\nIt scales to large inputs.";
        let s = score_pair(t, t, true);
        for (_, v) in s.variants() {
            assert_eq!(v.f1, 1.0);
        }
        let s = score_pair("alpha beta gamma", "delta epsilon", true);
        for (_, v) in s.variants() {
            assert_eq!(v.f1, 0.0);
        }
    }

    #[test]
    fn corpus_means() {
        let report = evaluate_corpus(&[("x y", "x y")], false).unwrap();
        for (_, v) in report.corpus.variants() {
            assert_eq!(v.f1, 1.0);
        }
        // R1 F1 of 1.0 and 0.5
        let report = evaluate_corpus(&[("a b", "a b"), ("a b", "a c")], false).unwrap();
        assert_eq!(report.records[1].scores.rouge1.f1, 0.5);
        assert_eq!(report.corpus.rouge1.f1, 0.75);
        let empty: [(&str, &str); 0] = [];
        assert!(evaluate_corpus(&empty, false).is_err());
    }

    #[test]
    fn report_json_layout() {
        let report = evaluate_corpus(&[("a b", "a b")], true).unwrap();
        let v = serde_json::to_value(&report).unwrap();
        for key in ["rouge1", "rouge2", "rougeL", "rougeLsum"] {
            assert_eq!(v[key]["f1"], 1.0, "{key}");
            assert_eq!(v["records"][0][key]["precision"], 1.0);
        }
        assert_eq!(v["use_stemmer"], true);
    }

    fn words() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]),
            0..25,
        )
        .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn f1_symmetric_under_swap(c in words(), r in words()) {
            for n in [1, 2] {
                let (x, y) = (rouge_n(&c, &r, n), rouge_n(&r, &c, n));
                prop_assert_eq!(x.precision, y.recall);
                prop_assert!((x.f1 - y.f1).abs() < 1e-12);
            }
            let (x, y) = (rouge_l_sentence(&c, &r), rouge_l_sentence(&r, &c));
            prop_assert_eq!(x.precision, y.recall);
            prop_assert!((x.f1 - y.f1).abs() < 1e-12);
        }

        #[test]
        fn lsum_single_sentences_equal_rouge_l(c in words(), r in words()) {
            prop_assume!(!c.is_empty() && !r.is_empty());
            let x = rouge_lsum_tokens(std::slice::from_ref(&c), std::slice::from_ref(&r));
            let y = rouge_l_sentence(&c, &r);
            prop_assert_eq!(x, y);
        }

        #[test]
        fn unigram_recall_one_when_reference_contained(r in words(), extra in words()) {
            prop_assume!(!r.is_empty());
            let mut c = r.clone();
            c.extend(extra);
            prop_assert_eq!(rouge_n(&c, &r, 1).recall, 1.0);
        }

        #[test]
        fn lcs_bounded_and_positions_valid(a in words(), b in words()) {
            let l = lcs_length(&a, &b);
            prop_assert!(l <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&b, &a), l);
            let pos = lcs_positions(&a, &b);
            prop_assert_eq!(pos.len(), l);
            prop_assert!(pos.windows(2).all(|w| w[0] < w[1]));
            let picked: Vec<&String> = pos.iter().map(|&i| &a[i]).collect();
            prop_assert_eq!(lcs_length(&picked, &b.iter().collect::<Vec<_>>()), l);
        }

        #[test]
        fn appending_reference_tokens_never_lowers_recall(c in words(), r in words(), k in 0usize..10) {
            prop_assume!(!r.is_empty());
            let before = (rouge_n(&c, &r, 1).recall, rouge_n(&c, &r, 2).recall, rouge_l_sentence(&c, &r).recall);
            let mut longer = c.clone();
            longer.extend(r.iter().take(k).cloned());
            let after = (rouge_n(&longer, &r, 1).recall, rouge_n(&longer, &r, 2).recall, rouge_l_sentence(&longer, &r).recall);
            prop_assert!(after.0 >= before.0 && after.1 >= before.1 && after.2 >= before.2);
        }
    }
}
