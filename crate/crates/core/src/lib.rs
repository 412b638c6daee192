//! Extract-then-abstract multi-document summarization toolkit.
//!
//! Sentences of each source document are embedded, clustered with seeded
//! k-means at the silhouette-best K, and the sentence nearest each centroid
//! is kept. The extracts feed an external abstractive model, and outputs are
//! scored with ROUGE-1/2/L/LSum.

pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod extractor;
pub mod gen_client;
mod remote;
pub mod rouge;
pub mod synthetic;
pub mod testing;
pub mod textproc;

pub use clustering::{
    kmeans, nearest_to_centroid, select_k, silhouette_score, KMeansConfig, KMeansResult,
};
pub use corpus::{read_corpus, ExtractedRecord, SourceRecord};
pub use embedding::{
    load_embedding_file, EmbeddingProvider, EmbeddingVector, FileProvider, HttpProvider,
};
pub use error::{Error, Result};
pub use extractor::{extract_document, extract_record, ExtractConfig};
pub use remote::RetryPolicy;
pub use rouge::{score_pair, RougeReport, RougeScores, Score};
pub use textproc::{count_tokens, split_sentences, tokenize_rouge, SentenceSplitter};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
