//! Export extract/target pairs for an external trainer.
//!
//!     cargo run --example finetune_export

use skx::corpus::{read_jsonl, write_extracted};
use skx::gen_client::{export_finetune_dataset, sidecar_path, FinetunePair};
use skx::synthetic::planted_corpus;
use skx::{extract_record, ExtractConfig};

fn main() -> skx::Result<()> {
    let dir = std::env::temp_dir().join("skx-finetune-example");
    std::fs::create_dir_all(&dir).map_err(|e| skx::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let x_path = dir.join("extracted.jsonl");
    let ft_path = dir.join("ft.jsonl");

    let mut synth = planted_corpus(6, 2);
    synth.records[2].target = None;
    let extracted: Vec<_> = synth
        .records
        .iter()
        .map(|r| extract_record(r, &synth.embeddings, &ExtractConfig::default()))
        .collect::<skx::Result<_>>()?;
    write_extracted(extracted.clone(), &x_path)?;

    let summary = export_finetune_dataset(
        extracted.into_iter().map(Ok),
        synth.records.into_iter().map(Ok),
        &ft_path,
    )?;
    println!(
        "wrote {} pairs, skipped {} without target",
        summary.written, summary.skipped_no_target
    );
    for pair in read_jsonl::<FinetunePair>(&ft_path)? {
        let pair = pair?;
        println!("{}: {} source tokens", pair.record_id, pair.source_tokens);
    }
    println!(
        "{}",
        std::fs::read_to_string(sidecar_path(&ft_path)).unwrap()
    );
    Ok(())
}
