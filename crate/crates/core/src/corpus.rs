//! Corpus records, pipeline output records and their JSON-lines files.
//!
//! Input lines follow the Multi-XScience release layout:
//!
//! ```text
//! {"record_id": "...", "abstract": "...", "ref_abstract": {"@cite_1": {"abstract": "..."}}, "related_work": "..."}
//! ```
//!
//! `aid` is accepted in place of `record_id`. Reference entries keep their
//! file order. Reference abstracts that are empty after trimming are dropped
//! while reading.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::embedding::text_hash64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefEntry {
    pub cite_key: String,
    pub abstract_text: String,
}

/// One task instance: a query abstract, the abstracts it cites, and the gold
/// related-work section when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    pub record_id: String,
    pub query_abstract: String,
    pub references: Vec<RefEntry>,
    pub target: Option<String>,
}

impl SourceRecord {
    /// The query abstract followed by every reference abstract, space-joined.
    pub fn source_text(&self) -> String {
        std::iter::once(self.query_abstract.as_str())
            .chain(self.references.iter().map(|r| r.abstract_text.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_json(&self) -> Value {
        let refs: Map<String, Value> = self
            .references
            .iter()
            .map(|r| {
                (
                    r.cite_key.clone(),
                    serde_json::json!({ "abstract": r.abstract_text }),
                )
            })
            .collect();
        let mut obj = Map::new();
        obj.insert("record_id".into(), Value::String(self.record_id.clone()));
        obj.insert(
            "abstract".into(),
            Value::String(self.query_abstract.clone()),
        );
        obj.insert("ref_abstract".into(), Value::Object(refs));
        if let Some(t) = &self.target {
            obj.insert("related_work".into(), Value::String(t.clone()));
        }
        Value::Object(obj)
    }

    fn from_json(line: usize, value: Value) -> Result<Self> {
        let Value::Object(mut obj) = value else {
            return Err(Error::schema(line, "$", "expected a JSON object"));
        };
        let record_id = match obj.remove("record_id").or_else(|| obj.remove("aid")) {
            Some(Value::String(s)) => s,
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => return Err(Error::schema(line, "record_id", "expected a string")),
            None => return Err(Error::schema(line, "record_id", "missing required field")),
        };
        if record_id.trim().is_empty() {
            return Err(Error::schema(line, "record_id", "must be nonempty"));
        }
        let query_abstract = take_string(&mut obj, line, "abstract", "abstract")?;
        let references = match obj.remove("ref_abstract") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Object(refs)) => {
                let mut out = Vec::with_capacity(refs.len());
                for (cite_key, entry) in refs {
                    let path = format!("ref_abstract.{cite_key}");
                    let Value::Object(mut entry) = entry else {
                        return Err(Error::schema(line, path, "expected an object"));
                    };
                    let abstract_text =
                        take_string(&mut entry, line, "abstract", &format!("{path}.abstract"))?;
                    if !abstract_text.trim().is_empty() {
                        out.push(RefEntry {
                            cite_key,
                            abstract_text,
                        });
                    }
                }
                out
            }
            Some(_) => return Err(Error::schema(line, "ref_abstract", "expected an object")),
        };
        let target = match obj.remove("related_work") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(Error::schema(line, "related_work", "expected a string")),
        };
        Ok(SourceRecord {
            record_id,
            query_abstract,
            references,
            target,
        })
    }
}

fn take_string(obj: &mut Map<String, Value>, line: usize, key: &str, path: &str) -> Result<String> {
    match obj.remove(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(Error::schema(line, path, "expected a string")),
        None => Err(Error::schema(line, path, "missing required field")),
    }
}

/// Streaming reader over an input corpus file.
pub struct CorpusReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    remaining: Option<usize>,
    /// 64-bit digests of record ids seen so far; eight bytes per record
    /// instead of the whole id.
    seen: HashSet<u64>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, limit: Option<usize>) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            remaining: limit,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<SourceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        let (line_no, line) = loop {
            self.line_no += 1;
            match self.lines.next()? {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => break (self.line_no, l),
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            }
        };
        if let Some(r) = self.remaining.as_mut() {
            *r -= 1;
        }
        let record = serde_json::from_str::<Value>(&line)
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })
            .and_then(|v| SourceRecord::from_json(line_no, v))
            .and_then(|r| {
                if self.seen.insert(text_hash64(&r.record_id)) {
                    Ok(r)
                } else {
                    Err(Error::Validation(format!(
                        "line {line_no}: duplicate record_id `{}`",
                        r.record_id
                    )))
                }
            });
        Some(record)
    }
}

/// Opens a corpus file as a record stream, stopping after `limit` records.
pub fn read_corpus(path: &Path, limit: Option<usize>) -> Result<CorpusReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(BufReader::new(file), limit))
}

/// Writes records in the input corpus layout.
pub fn write_corpus<'a>(
    records: impl IntoIterator<Item = &'a SourceRecord>,
    path: &Path,
) -> Result<usize> {
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(&r.to_json())?;
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentExtract {
    pub doc_key: String,
    /// Number of clusters used; equals the sentence count for pass-through documents.
    pub k: usize,
    /// Selected sentences in original document order.
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedRecord {
    pub record_id: String,
    pub documents: Vec<DocumentExtract>,
    pub extract_text: String,
    pub token_count: usize,
}

/// Line-oriented JSON writer that only exposes the final file once
/// [`JsonlWriter::finish`] succeeds. Until then output goes to `<path>.tmp`.
pub struct JsonlWriter {
    path: PathBuf,
    tmp: PathBuf,
    out: BufWriter<File>,
    count: usize,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let tmp = tmp_path(path);
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            tmp,
            out: BufWriter::new(file),
            count: 0,
        })
    }

    pub fn write<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| Error::io(&self.tmp, e.into()))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.tmp, e))?;
        self.count += 1;
        Ok(())
    }

    /// Flushes and renames the temporary file into place; returns the line count.
    pub fn finish(self) -> Result<usize> {
        let file = self
            .out
            .into_inner()
            .map_err(|e| Error::io(&self.tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&self.tmp, e))?;
        std::fs::rename(&self.tmp, &self.path).map_err(|e| Error::io(&self.path, e))?;
        Ok(self.count)
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".tmp");
    PathBuf::from(name)
}

pub fn write_extracted(
    records: impl IntoIterator<Item = ExtractedRecord>,
    path: &Path,
) -> Result<usize> {
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(&r)?;
    }
    w.finish()
}

/// Streaming typed reader for the JSON-lines files this crate writes.
pub struct JsonlReader<T, R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned, R: BufRead> Iterator for JsonlReader<T, R> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: self.line_no,
                message: e.to_string(),
            }));
        }
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<JsonlReader<T, BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(JsonlReader {
        lines: BufReader::new(file).lines(),
        line_no: 0,
        _marker: PhantomData,
    })
}

pub fn read_extracted(path: &Path) -> Result<JsonlReader<ExtractedRecord, BufReader<File>>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    /// Inclusive lower bound.
    pub lower: usize,
    /// Exclusive upper bound.
    pub upper: usize,
    pub count: usize,
}

/// Token-length distribution over a set of records. Only nonempty buckets are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub bucket_width: usize,
    pub records: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
    pub buckets: Vec<Bucket>,
}

impl LengthStats {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>, bucket_width: usize) -> Self {
        assert!(bucket_width > 0, "bucket width must be positive");
        let mut counts: Vec<usize> = counts.into_iter().collect();
        counts.sort_unstable();
        let n = counts.len();
        if n == 0 {
            return Self {
                bucket_width,
                records: 0,
                min: 0,
                max: 0,
                mean: 0.0,
                median: 0.0,
                buckets: Vec::new(),
            };
        }
        let mut buckets: Vec<Bucket> = Vec::new();
        for &c in &counts {
            let lower = c / bucket_width * bucket_width;
            match buckets.last_mut() {
                Some(b) if b.lower == lower => b.count += 1,
                _ => buckets.push(Bucket {
                    lower,
                    upper: lower + bucket_width,
                    count: 1,
                }),
            }
        }
        let median = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        Self {
            bucket_width,
            records: n,
            min: counts[0],
            max: counts[n - 1],
            mean: counts.iter().sum::<usize>() as f64 / n as f64,
            median,
            buckets,
        }
    }

    /// Plain-text histogram table.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "records {}  min {}  max {}  mean {:.2}  median {:.1}\n",
            self.records, self.min, self.max, self.mean, self.median
        );
        s.push_str(&format!("{:>16}  {:>8}\n", "tokens", "records"));
        for b in &self.buckets {
            s.push_str(&format!(
                "{:>16}  {:>8}\n",
                format!("[{}, {})", b.lower, b.upper),
                b.count
            ));
        }
        s
    }
}

/// Length statistics of each record's full source text (query abstract plus
/// every reference abstract).
pub fn corpus_stats<'a>(
    records: impl IntoIterator<Item = &'a SourceRecord>,
    token_counter: impl Fn(&str) -> usize,
    bucket_width: usize,
) -> LengthStats {
    LengthStats::from_counts(
        records.into_iter().map(|r| token_counter(&r.source_text())),
        bucket_width,
    )
}
