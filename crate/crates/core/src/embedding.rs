//! Sentence embeddings: the provider contract, a file-backed provider, an
//! HTTP provider, and the vector math used by clustering.
//!
//! Embedding file, one line per distinct text:
//!
//! ```text
//! {"text_sha256": "<hex>", "text": "...", "dim": 768, "values": [0.12, ...]}
//! ```
//!
//! Service contract: `POST /embed` with `{"texts": [...]}` answers
//! `{"dim": d, "vectors": [[...], ...]}` in request order; `GET /health`
//! answers 200.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{read_jsonl, JsonlWriter};
use crate::error::{Error, Result};
use crate::remote::{self, RetryPolicy, Semaphore};

/// A finite, nonempty vector stored at 32-bit precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation(
                "embedding must have positive dimension".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "embedding contains a non-finite value".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Maps a batch of texts to vectors, one per text, in input order.
/// Identical texts map to identical vectors within one provider.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

pub fn text_sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// First eight bytes of the text's SHA-256, used to name texts in errors.
pub fn text_hash64(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingLine {
    text_sha256: String,
    text: String,
    dim: usize,
    values: Vec<f32>,
}

/// Read-only exact-text lookup table loaded from an embedding file.
#[derive(Debug, Default)]
pub struct FileProvider {
    dim: Option<usize>,
    index: HashMap<String, EmbeddingVector>,
}

impl FileProvider {
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&EmbeddingVector> {
        self.index.get(text)
    }

    /// Adds one entry, enforcing a single dimension and one vector per text.
    pub fn insert(&mut self, text: String, vector: EmbeddingVector) -> Result<()> {
        match self.dim {
            Some(d) if d != vector.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: vector.dim(),
                })
            }
            _ => self.dim = Some(vector.dim()),
        }
        if let Some(prev) = self.index.get(&text) {
            if *prev != vector {
                return Err(Error::Validation(format!(
                    "conflicting vectors for text with hash {:016x}",
                    text_hash64(&text)
                )));
            }
            return Ok(());
        }
        self.index.insert(text, vector);
        Ok(())
    }
}

impl EmbeddingProvider for FileProvider {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| {
                self.index
                    .get(*t)
                    .cloned()
                    .ok_or_else(|| Error::MissingEmbedding {
                        hash: text_hash64(t),
                    })
            })
            .collect()
    }
}

pub fn load_embedding_file(path: &Path) -> Result<FileProvider> {
    let mut provider = FileProvider::default();
    for (i, line) in read_jsonl::<EmbeddingLine>(path)?.enumerate() {
        let line = line?;
        let ctx = |e: Error| Error::Validation(format!("{}: entry {}: {e}", path.display(), i + 1));
        if line.values.len() != line.dim {
            return Err(ctx(Error::DimensionMismatch {
                expected: line.dim,
                actual: line.values.len(),
            }));
        }
        if line.text_sha256 != text_sha256(&line.text) {
            return Err(ctx(Error::Validation(
                "text_sha256 does not match text".into(),
            )));
        }
        let vector = EmbeddingVector::new(line.values).map_err(ctx)?;
        provider.insert(line.text, vector).map_err(ctx)?;
    }
    Ok(provider)
}

/// Writes an embedding file, one line per entry in the given order.
pub fn write_embedding_file<'a>(
    entries: impl IntoIterator<Item = (&'a str, &'a EmbeddingVector)>,
    path: &Path,
) -> Result<usize> {
    let mut w = JsonlWriter::create(path)?;
    for (text, v) in entries {
        w.write(&EmbeddingLine {
            text_sha256: text_sha256(text),
            text: text.to_string(),
            dim: v.dim(),
            values: v.values.clone(),
        })?;
    }
    w.finish()
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Client for the `/embed` service. Texts are deduplicated, sent in batches
/// of at most `batch_size`, with at most `max_in_flight` concurrent requests
/// across all callers of this provider.
pub struct HttpProvider {
    base_url: String,
    batch_size: usize,
    max_in_flight: usize,
    policy: RetryPolicy,
    agent: ureq::Agent,
    in_flight: Semaphore,
    dim: Mutex<Option<usize>>,
}

impl HttpProvider {
    pub fn new(base_url: &str, batch_size: usize, max_in_flight: usize) -> Result<Self> {
        Self::with_policy(base_url, batch_size, max_in_flight, RetryPolicy::default())
    }

    pub fn with_policy(
        base_url: &str,
        batch_size: usize,
        max_in_flight: usize,
        policy: RetryPolicy,
    ) -> Result<Self> {
        if batch_size == 0 || max_in_flight == 0 {
            return Err(Error::Config(
                "batch_size and max_in_flight must be positive".into(),
            ));
        }
        Ok(Self {
            base_url: base_url.to_string(),
            batch_size,
            max_in_flight,
            agent: remote::agent(&policy),
            policy,
            in_flight: Semaphore::new(max_in_flight),
            dim: Mutex::new(None),
        })
    }

    pub fn health(&self) -> Result<()> {
        remote::get_ok(&self.agent, &remote::join_url(&self.base_url, "health"))
    }

    /// Dimension reported by the first successful response.
    pub fn dim(&self) -> Option<usize> {
        *self.dim.lock().unwrap()
    }

    fn embed_batch(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let url = remote::join_url(&self.base_url, "embed");
        let resp: EmbedResponse = {
            let _permit = self.in_flight.acquire();
            remote::post_json(
                &self.agent,
                &url,
                &EmbedRequest { texts: batch },
                &self.policy,
            )?
        };
        let fail = |message: String| Error::Remote {
            endpoint: url.clone(),
            message,
        };
        if resp.vectors.len() != batch.len() {
            return Err(fail(format!(
                "sent {} texts, received {} vectors",
                batch.len(),
                resp.vectors.len()
            )));
        }
        {
            let mut dim = self.dim.lock().unwrap();
            match *dim {
                Some(d) if d != resp.dim => {
                    return Err(fail(format!("dimension drift: {d} then {}", resp.dim)))
                }
                _ => *dim = Some(resp.dim),
            }
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != resp.dim {
                    return Err(fail(format!(
                        "vector of length {} in a dim {} response",
                        v.len(),
                        resp.dim
                    )));
                }
                EmbeddingVector::new(v).map_err(|e| fail(e.to_string()))
            })
            .collect()
    }
}

impl EmbeddingProvider for HttpProvider {
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut unique: Vec<&str> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        let positions: Vec<usize> = texts
            .iter()
            .map(|t| {
                *slot.entry(t).or_insert_with(|| {
                    unique.push(t);
                    unique.len() - 1
                })
            })
            .collect();

        let batches: Vec<&[&str]> = unique.chunks(self.batch_size).collect();
        let results: Vec<Mutex<Option<Result<Vec<EmbeddingVector>>>>> =
            batches.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(batches.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= batches.len() {
                        break;
                    }
                    let r = self.embed_batch(batches[i]);
                    let failed = r.is_err();
                    *results[i].lock().unwrap() = Some(r);
                    if failed {
                        next.store(batches.len(), Ordering::Relaxed);
                    }
                });
            }
        });

        let mut vectors = Vec::with_capacity(unique.len());
        for r in results {
            match r.into_inner().unwrap() {
                Some(batch) => vectors.extend(batch?),
                None => {
                    return Err(Error::Remote {
                        endpoint: self.base_url.clone(),
                        message: "request abandoned after an earlier batch failed".into(),
                    })
                }
            }
        }
        Ok(positions.into_iter().map(|p| vectors[p].clone()).collect())
    }
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

pub fn euclidean_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    check_dims(a, b)?;
    Ok(squared_distance_f32(&a.values, &b.values).sqrt())
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    check_dims(a, b)?;
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

fn squared_distance_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Scales `v` to unit L2 norm; the zero vector is returned unchanged.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}
