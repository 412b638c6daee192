//! Split an abstract into sentences and show ROUGE tokens for each.
//!
//!     cargo run --example segment_sentences

use skx::textproc::normalize_cite_markers;
use skx::{split_sentences, tokenize_rouge, SentenceSplitter};

fn main() {
    let text =
        "Prior work @cite_2 studies graph models, e.g. GCNs. Results improve by 3.5 points! \
                See Fig. 2 for details. We follow et al. closely.";
    let text = normalize_cite_markers(text);
    for s in split_sentences("query", &text) {
        println!("[{}] {}", s.index, s.text);
        println!("    tokens: {:?}", tokenize_rouge(&s.text, true));
    }

    let custom = SentenceSplitter::from_list("fig.\n");
    println!("\nwith only `fig.` guarded:");
    for span in custom.split_spans(&text) {
        println!("  {span}");
    }
}
