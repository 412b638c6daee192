//! The boundary to the abstractive model: fine-tuning dataset export, the
//! `/generate` client, and scoring of multi-sample generations.
//!
//! Generation contract: `POST /generate` with
//! `{"input": str, "max_new_tokens": int, "num_samples": int, "seed": int?}`
//! answers `{"summaries": [str, ...]}`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ExtractedRecord, JsonlWriter, SourceRecord};
use crate::error::{Error, Result};
use crate::remote::{self, RetryPolicy, Semaphore};
use crate::rouge::{score_pair, RecordScores, RougeReport, RougeScores};
use crate::textproc::{count_tokens, normalize_cite_markers};

pub const DEFAULT_MAX_NEW_TOKENS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetunePair {
    pub record_id: String,
    pub source: String,
    pub target: String,
    pub source_tokens: usize,
}

/// Trainer settings recorded next to an exported dataset. Training itself
/// happens elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSettings {
    pub models: Vec<ModelSettings>,
    pub effective_batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub keep_best_checkpoints: usize,
    pub max_target_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gradient_accumulation: usize,
}

impl Default for TrainerSettings {
    fn default() -> Self {
        let m = |model: &str, learning_rate, batch_size, gradient_accumulation| ModelSettings {
            model: model.into(),
            learning_rate,
            batch_size,
            gradient_accumulation,
        };
        Self {
            models: vec![
                m("t5-small", 1e-5, 32, 1),
                m("t5-base", 1e-5, 8, 4),
                m("t5-large", 1e-6, 4, 8),
                m("t5-3b", 1e-7, 1, 32),
            ],
            effective_batch_size: 32,
            epochs: 8,
            weight_decay: 0.2,
            keep_best_checkpoints: 3,
            max_target_tokens: DEFAULT_MAX_NEW_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub written: usize,
    /// Corpus records without a gold target.
    pub skipped_no_target: usize,
    /// Corpus records with no extracted counterpart.
    pub skipped_not_extracted: usize,
    pub trainer: TrainerSettings,
}

/// Sidecar path for an exported dataset: `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Joins extracted records to corpus targets and writes
/// `{"record_id", "source", "target", "source_tokens"}` lines in corpus order,
/// plus a sidecar with the export counts and trainer settings.
pub fn export_finetune_dataset<E, C>(extracted: E, corpus: C, path: &Path) -> Result<ExportSummary>
where
    E: IntoIterator<Item = Result<ExtractedRecord>>,
    C: IntoIterator<Item = Result<SourceRecord>>,
{
    let mut sources: HashMap<String, (String, usize)> = HashMap::new();
    for r in extracted {
        let r = r?;
        sources.insert(r.record_id, (r.extract_text, r.token_count));
    }
    let mut w = JsonlWriter::create(path)?;
    let mut skipped_no_target = 0;
    let mut skipped_not_extracted = 0;
    for record in corpus {
        let record = record?;
        let Some((source, source_tokens)) = sources.remove(&record.record_id) else {
            skipped_not_extracted += 1;
            continue;
        };
        let target = record.target.as_deref().map(normalize_cite_markers);
        match target {
            Some(target) if !target.trim().is_empty() && !source.trim().is_empty() => {
                w.write(&FinetunePair {
                    record_id: record.record_id,
                    source,
                    target,
                    source_tokens,
                })?
            }
            _ => skipped_no_target += 1,
        }
    }
    if let Some(id) = sources.keys().min() {
        return Err(Error::Validation(format!(
            "extracted record `{id}` has no corpus record ({} unmatched)",
            sources.len()
        )));
    }
    let written = w.finish()?;
    if skipped_no_target > 0 {
        log::warn!("skipped {skipped_no_target} records without a target");
    }
    let summary = ExportSummary {
        written,
        skipped_no_target,
        skipped_not_extracted,
        trainer: TrainerSettings::default(),
    };
    let meta = sidecar_path(path);
    let body = serde_json::to_string_pretty(&summary).expect("serializable");
    std::fs::write(&meta, body + "\n").map_err(|e| Error::io(&meta, e))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub record_id: String,
    pub input_text: String,
    pub max_new_tokens: usize,
    pub num_samples: usize,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(record_id: impl Into<String>, input_text: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            input_text: input_text.into(),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            num_samples: 1,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_text.trim().is_empty() {
            return Err(Error::Validation(format!(
                "record `{}`: empty input text",
                self.record_id
            )));
        }
        if self.max_new_tokens == 0 || self.num_samples == 0 {
            return Err(Error::Validation(format!(
                "record `{}`: max_new_tokens and num_samples must be positive",
                self.record_id
            )));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    input: &'a str,
    max_new_tokens: usize,
    num_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct GenerateResponse {
    summaries: Vec<String>,
    #[serde(default)]
    decoding: Option<serde_json::Value>,
}

/// Generated samples for one record, as stored in generation output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub record_id: String,
    pub summaries: Vec<String>,
    /// Decoding settings, when the server reports them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoding: Option<serde_json::Value>,
}

pub struct GenClient {
    base_url: String,
    policy: RetryPolicy,
    agent: ureq::Agent,
    in_flight: Semaphore,
}

impl GenClient {
    pub fn new(base_url: &str, max_in_flight: usize) -> Self {
        Self::with_policy(base_url, max_in_flight, RetryPolicy::default())
    }

    pub fn with_policy(base_url: &str, max_in_flight: usize, policy: RetryPolicy) -> Self {
        Self {
            base_url: base_url.to_string(),
            agent: remote::agent(&policy),
            policy,
            in_flight: Semaphore::new(max_in_flight),
        }
    }

    pub fn summarize(&self, request: &GenerationRequest) -> Result<GeneratedRecord> {
        request.validate()?;
        let url = remote::join_url(&self.base_url, "generate");
        let body = GenerateBody {
            input: &request.input_text,
            max_new_tokens: request.max_new_tokens,
            num_samples: request.num_samples,
            seed: request.seed,
        };
        let resp: GenerateResponse = {
            let _permit = self.in_flight.acquire();
            remote::post_json(&self.agent, &url, &body, &self.policy)
        }
        .map_err(|e| match e {
            Error::Remote { endpoint, message } => Error::Remote {
                endpoint,
                message: format!("record `{}`: {message}", request.record_id),
            },
            other => other,
        })?;
        let fail = |message: String| Error::Remote {
            endpoint: url.clone(),
            message: format!("record `{}`: {message}", request.record_id),
        };
        if resp.summaries.len() != request.num_samples {
            return Err(fail(format!(
                "requested {} samples, received {}",
                request.num_samples,
                resp.summaries.len()
            )));
        }
        let limit = 2 * request.max_new_tokens;
        if let Some(long) = resp
            .summaries
            .iter()
            .map(|s| count_tokens(s))
            .find(|&n| n > limit)
        {
            return Err(fail(format!(
                "summary of {long} words exceeds the {limit}-word guard"
            )));
        }
        Ok(GeneratedRecord {
            record_id: request.record_id.clone(),
            summaries: resp.summaries,
            decoding: resp.decoding,
        })
    }

    /// Runs every request with at most `workers` concurrent calls; output
    /// order follows input order.
    pub fn summarize_all(
        &self,
        requests: &[GenerationRequest],
        workers: usize,
    ) -> Result<Vec<GeneratedRecord>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| requests.par_iter().map(|r| self.summarize(r)).collect())
    }
}

/// Scores each record as the mean over its samples, then averages records.
pub fn evaluate_generated(
    samples: &[GeneratedRecord],
    references: &HashMap<String, String>,
    use_stemmer: bool,
) -> Result<RougeReport> {
    let records = samples
        .par_iter()
        .map(|g| {
            let reference = references.get(&g.record_id).ok_or_else(|| {
                Error::Validation(format!("no reference for record `{}`", g.record_id))
            })?;
            if g.summaries.is_empty() {
                return Err(Error::Validation(format!(
                    "record `{}` has no samples",
                    g.record_id
                )));
            }
            let per_sample: Vec<RougeScores> = g
                .summaries
                .iter()
                .map(|s| score_pair(s, reference, use_stemmer))
                .collect();
            Ok(RecordScores {
                record_id: Some(g.record_id.clone()),
                scores: RougeScores::mean(per_sample.iter()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RougeReport::from_records(records, use_stemmer)
}
