//! Seeded synthetic corpora with planted embedding structure, for examples,
//! tests and benchmarks that cannot ship a real embedding model.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{RefEntry, SourceRecord};
use crate::embedding::{EmbeddingVector, FileProvider};

const WORDS: &[&str] = &[
    "graph",
    "neural",
    "sparse",
    "model",
    "training",
    "latent",
    "retrieval",
    "citation",
    "corpus",
    "encoder",
    "decoder",
    "attention",
    "transfer",
    "summary",
    "document",
    "feature",
    "kernel",
    "gradient",
    "bound",
    "sample",
    "signal",
    "network",
    "policy",
    "query",
    "label",
    "domain",
    "vector",
    "matrix",
    "entropy",
    "cluster",
    "token",
    "layer",
    "robust",
    "linear",
    "optimal",
    "random",
    "dense",
    "semantic",
    "lexical",
    "scalable",
    "efficient",
    "accurate",
    "baseline",
    "benchmark",
    "dataset",
    "inference",
    "objective",
    "variance",
    "prior",
    "posterior",
];

/// Gaussian blobs with `sizes[c]` points in cluster `c`. Centers sit on
/// distinct axes, pairwise `separation` apart; points scatter around their
/// center with root-mean-square radius `spread`.
pub fn planted_clusters(
    sizes: &[usize],
    dim: usize,
    separation: f64,
    spread: f64,
    rng: &mut impl Rng,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    assert!(dim >= sizes.len(), "need one axis per cluster");
    let noise = Normal::new(0.0, spread / (dim as f64).sqrt()).expect("valid spread");
    let offset = separation / std::f64::consts::SQRT_2;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, &n) in sizes.iter().enumerate() {
        for _ in 0..n {
            let mut p: Vec<f64> = (0..dim).map(|_| noise.sample(rng)).collect();
            p[c] += offset;
            points.push(p);
            labels.push(c);
        }
    }
    (points, labels)
}

/// A corpus plus embeddings for every sentence it contains.
pub struct SyntheticCorpus {
    pub records: Vec<SourceRecord>,
    pub embeddings: FileProvider,
    /// `(text, vector)` in first-seen order, for writing an embedding file.
    pub entries: Vec<(String, EmbeddingVector)>,
}

impl SyntheticCorpus {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            embeddings: FileProvider::default(),
            entries: Vec::new(),
        }
    }

    fn add_sentence(&mut self, text: String, values: Vec<f32>) {
        let v = EmbeddingVector::new(values).expect("finite synthetic vector");
        self.embeddings
            .insert(text.clone(), v.clone())
            .expect("unique synthetic sentences");
        self.entries.push((text, v));
    }
}

pub const DIM: usize = 16;

fn sentence(rng: &mut ChaCha8Rng, tag: &str, len: usize) -> String {
    let mut words: Vec<&str> = (0..len).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let first = words.remove(0);
    let mut first = first.to_string();
    first[..1].make_ascii_uppercase();
    format!("{first} {tag} {}.", words.join(" "))
}

fn clustered_vectors(rng: &mut ChaCha8Rng, groups: &[usize], spread: f64) -> Vec<Vec<f32>> {
    let centers: Vec<Vec<f64>> = (0..groups.len())
        .map(|_| (0..DIM).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let noise = Normal::new(0.0, spread).unwrap();
    groups
        .iter()
        .map(|&g| {
            centers[g]
                .iter()
                .map(|c| (c + noise.sample(rng)) as f32)
                .collect()
        })
        .collect()
}

/// `records` records, each a query plus up to four references. Documents
/// have 1 to 12 sentences; those with at least four are drawn from 2 to
/// floor(T/2) planted embedding clusters. Every sentence text is unique.
pub fn planted_corpus(records: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SyntheticCorpus::new();
    for r in 0..records {
        let n_refs = rng.random_range(0..=4);
        let mut docs = Vec::with_capacity(n_refs + 1);
        for d in 0..=n_refs {
            let t = rng.random_range(1..=12usize);
            let groups: Vec<usize> = if t >= 4 {
                let g = rng.random_range(2..=t / 2);
                let mut labels: Vec<usize> = (0..t).map(|i| i % g).collect();
                labels.shuffle(&mut rng);
                labels
            } else {
                (0..t).collect()
            };
            let vectors = clustered_vectors(&mut rng, &groups, 0.05);
            let mut sents = Vec::with_capacity(t);
            for (s, v) in vectors.into_iter().enumerate() {
                let len = rng.random_range(4..=14);
                let text = sentence(&mut rng, &format!("r{r}d{d}s{s}"), len);
                out.add_sentence(text.clone(), v);
                sents.push(text);
            }
            docs.push(sents.join(" "));
        }
        let query = docs.remove(0);
        out.records.push(SourceRecord {
            record_id: format!("syn-{r:05}"),
            query_abstract: query,
            references: docs
                .into_iter()
                .enumerate()
                .map(|(i, abstract_text)| RefEntry {
                    cite_key: format!("@cite_{}", i + 1),
                    abstract_text,
                })
                .collect(),
            target: Some(sentence(&mut rng, &format!("gold{r}"), 20)),
        });
    }
    out
}

/// Redundant documents: each is one base sentence followed by nine
/// same-length paraphrases (single-word substitutions), embedded as five
/// tight clusters of two sentences each.
pub fn redundancy_corpus(records: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SyntheticCorpus::new();
    for r in 0..records {
        let n_docs = rng.random_range(1..=4);
        let mut docs = Vec::with_capacity(n_docs);
        for d in 0..n_docs {
            let len = rng.random_range(8..=16);
            let base: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            let mut groups: Vec<usize> = (0..10).map(|i| i / 2).collect();
            groups.shuffle(&mut rng);
            let vectors = clustered_vectors(&mut rng, &groups, 0.05);
            let mut sents = Vec::with_capacity(10);
            for (s, v) in vectors.into_iter().enumerate() {
                let mut words = base.clone();
                if s > 0 {
                    let at = rng.random_range(1..len);
                    words[at] = WORDS.choose(&mut rng).unwrap();
                }
                let mut first = words[0].to_string();
                first[..1].make_ascii_uppercase();
                let text = format!("{first} r{r}d{d}v{s} {}.", words[1..].join(" "));
                out.add_sentence(text.clone(), v);
                sents.push(text);
            }
            docs.push(sents.join(" "));
        }
        let query = docs.remove(0);
        out.records.push(SourceRecord {
            record_id: format!("red-{r:05}"),
            query_abstract: query,
            references: docs
                .into_iter()
                .enumerate()
                .map(|(i, abstract_text)| RefEntry {
                    cite_key: format!("@cite_{}", i + 1),
                    abstract_text,
                })
                .collect(),
            target: None,
        });
    }
    out
}
