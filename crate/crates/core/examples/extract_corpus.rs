//! Extract a synthetic corpus from files, as `skx extract` does.
//!
//!     cargo run --example extract_corpus

use skx::corpus::{read_extracted, write_corpus, JsonlWriter};
use skx::embedding::write_embedding_file;
use skx::extractor::extract_corpus;
use skx::synthetic::planted_corpus;
use skx::{load_embedding_file, read_corpus, ExtractConfig};

fn main() -> skx::Result<()> {
    let dir = std::env::temp_dir().join("skx-extract-example");
    std::fs::create_dir_all(&dir).map_err(|e| skx::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let corpus_path = dir.join("corpus.jsonl");
    let emb_path = dir.join("emb.jsonl");
    let out_path = dir.join("extracted.jsonl");

    let synth = planted_corpus(5, 7);
    write_corpus(&synth.records, &corpus_path)?;
    write_embedding_file(
        synth.entries.iter().map(|(t, v)| (t.as_str(), v)),
        &emb_path,
    )?;

    let provider = load_embedding_file(&emb_path)?;
    let mut w = JsonlWriter::create(&out_path)?;
    let n = extract_corpus(
        read_corpus(&corpus_path, None)?,
        &provider,
        &ExtractConfig::default(),
        &mut w,
        64,
    )?;
    w.finish()?;
    println!("extracted {n} records into {}", out_path.display());

    for r in read_extracted(&out_path)? {
        let r = r?;
        println!("{} ({} tokens)", r.record_id, r.token_count);
        for d in &r.documents {
            println!(
                "  {:<8} k={}  {} sentences",
                d.doc_key,
                d.k,
                d.sentences.len()
            );
        }
    }
    Ok(())
}
