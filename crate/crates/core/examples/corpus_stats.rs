//! Token-length histogram for source texts and their extracts.
//!
//!     cargo run --example corpus_stats

use skx::corpus::{corpus_stats, LengthStats};
use skx::synthetic::planted_corpus;
use skx::{count_tokens, extract_record, ExtractConfig};

fn main() {
    let synth = planted_corpus(300, 3);
    let source = corpus_stats(&synth.records, count_tokens, 50);
    let extracted = LengthStats::from_counts(
        synth.records.iter().map(|r| {
            extract_record(r, &synth.embeddings, &ExtractConfig::default())
                .unwrap()
                .token_count
        }),
        50,
    );
    println!("source tokens");
    print!("{}", source.to_table());
    println!("\nextracted tokens");
    print!("{}", extracted.to_table());
}
