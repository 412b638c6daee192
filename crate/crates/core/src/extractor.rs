//! Per-document extraction: segment, embed, pick K by silhouette, take the
//! sentence nearest each centroid, and concatenate documents in record order.

use rayon::prelude::*;

use crate::clustering::{nearest_to_centroid, select_k_in_range, KMeansConfig};
use crate::corpus::{DocumentExtract, ExtractedRecord, JsonlWriter, SourceRecord};
use crate::embedding::{l2_normalize, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::textproc::{count_tokens, normalize_cite_markers, Sentence, SentenceSplitter};

/// Document key of the query abstract within a record.
pub const QUERY_DOC_KEY: &str = "query";

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub seed: u64,
    /// Documents with fewer sentences are passed through whole.
    pub min_sentences_for_clustering: usize,
    pub kmin: usize,
    /// Upper end of the K range as a fraction of the sentence count, floored.
    pub kmax_ratio: f64,
    pub normalize_embeddings: bool,
    pub normalize_cites: bool,
    pub kmeans: KMeansConfig,
    pub splitter: SentenceSplitter,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            min_sentences_for_clustering: 4,
            kmin: 2,
            kmax_ratio: 0.5,
            normalize_embeddings: false,
            normalize_cites: true,
            kmeans: KMeansConfig::default(),
            splitter: SentenceSplitter::default(),
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kmin < 2 {
            return Err(Error::Config(format!(
                "kmin must be at least 2, got {}",
                self.kmin
            )));
        }
        if !(self.kmax_ratio > 0.0 && self.kmax_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "kmax_ratio must be in (0, 1], got {}",
                self.kmax_ratio
            )));
        }
        if self.kmeans.max_iter == 0 || self.kmeans.tol < 0.0 || self.kmeans.restarts == 0 {
            return Err(Error::Config("invalid k-means settings".into()));
        }
        Ok(())
    }

    /// Inclusive K range for a document of `t` sentences.
    pub fn k_range(&self, t: usize) -> (usize, usize) {
        (self.kmin, (t as f64 * self.kmax_ratio).floor() as usize)
    }
}

/// Segments a document exactly as extraction does.
pub fn document_sentences(doc_key: &str, text: &str, config: &ExtractConfig) -> Vec<Sentence> {
    if config.normalize_cites {
        config
            .splitter
            .split(doc_key, &normalize_cite_markers(text))
    } else {
        config.splitter.split(doc_key, text)
    }
}

/// Sentences selected from one document, in original order, and the K used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentSelection {
    pub sentences: Vec<Sentence>,
    pub k: usize,
}

pub fn extract_document(
    doc_key: &str,
    text: &str,
    provider: &dyn EmbeddingProvider,
    config: &ExtractConfig,
) -> Result<DocumentSelection> {
    let sentences = document_sentences(doc_key, text, config);
    let t = sentences.len();
    let (kmin, kmax) = config.k_range(t);
    if t < config.min_sentences_for_clustering || kmax < kmin {
        return Ok(DocumentSelection { k: t, sentences });
    }

    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let vectors = provider.embed(&texts)?;
    if vectors.len() != t {
        return Err(Error::Validation(format!(
            "provider returned {} vectors for {t} sentences",
            vectors.len()
        )));
    }
    let points: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut p = v.to_f64();
            if config.normalize_embeddings {
                l2_normalize(&mut p);
            }
            p
        })
        .collect();

    let selection = select_k_in_range(&points, kmin, kmax, config.seed, &config.kmeans)?;
    let mut picked = nearest_to_centroid(&selection.result, &points)?;
    picked.sort_unstable();
    Ok(DocumentSelection {
        k: selection.best_k,
        sentences: picked.into_iter().map(|i| sentences[i].clone()).collect(),
    })
}

/// Documents of a record in processing order: the query abstract, then each
/// reference in listed order.
pub fn record_documents(record: &SourceRecord) -> impl Iterator<Item = (&str, &str)> {
    std::iter::once((QUERY_DOC_KEY, record.query_abstract.as_str())).chain(
        record
            .references
            .iter()
            .map(|r| (r.cite_key.as_str(), r.abstract_text.as_str())),
    )
}

pub fn extract_record(
    record: &SourceRecord,
    provider: &dyn EmbeddingProvider,
    config: &ExtractConfig,
) -> Result<ExtractedRecord> {
    let mut documents = Vec::with_capacity(record.references.len() + 1);
    for (doc_key, text) in record_documents(record) {
        let sel =
            extract_document(doc_key, text, provider, config).map_err(|e| Error::Document {
                doc_key: doc_key.to_string(),
                source: Box::new(e),
            })?;
        documents.push(DocumentExtract {
            doc_key: doc_key.to_string(),
            k: sel.k,
            sentences: sel.sentences.into_iter().map(|s| s.text).collect(),
        });
    }
    let extract_text = documents
        .iter()
        .flat_map(|d| d.sentences.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ExtractedRecord {
        record_id: record.record_id.clone(),
        token_count: count_tokens(&extract_text),
        documents,
        extract_text,
    })
}

/// Extracts a record stream in parallel chunks, writing results in input
/// order. Returns the number of records written.
pub fn extract_corpus<I>(
    records: I,
    provider: &dyn EmbeddingProvider,
    config: &ExtractConfig,
    writer: &mut JsonlWriter,
    chunk_size: usize,
) -> Result<usize>
where
    I: IntoIterator<Item = Result<SourceRecord>>,
{
    config.validate()?;
    let mut written = 0;
    let mut chunk = Vec::with_capacity(chunk_size.max(1));
    let flush = |chunk: &mut Vec<SourceRecord>, writer: &mut JsonlWriter| -> Result<usize> {
        let out: Vec<Result<ExtractedRecord>> = chunk
            .par_iter()
            .map(|r| {
                extract_record(r, provider, config).map_err(|e| Error::Record {
                    record_id: r.record_id.clone(),
                    source: Box::new(e),
                })
            })
            .collect();
        chunk.clear();
        let n = out.len();
        for r in out {
            writer.write(&r?)?;
        }
        Ok(n)
    };
    for record in records {
        chunk.push(record?);
        if chunk.len() >= chunk_size.max(1) {
            written += flush(&mut chunk, writer)?;
        }
    }
    if !chunk.is_empty() {
        written += flush(&mut chunk, writer)?;
    }
    Ok(written)
}
