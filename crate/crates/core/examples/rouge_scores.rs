//! Score a candidate summary against a reference with ROUGE-1/2/L/LSum.
//!
//!     cargo run --example rouge_scores

use skx::rouge::{evaluate_corpus, rouge_lsum};
use skx::score_pair;

fn main() {
    let reference = "w1 w2 w3 w4 w5";
    let candidate = "w1 w2 w6 w7 w8\nw1 w3 w8 w9 w5";
    let lsum = rouge_lsum(candidate, reference, false);
    println!(
        "union LCS example: P={:.3} R={:.3} F1={:.3}",
        lsum.precision, lsum.recall, lsum.f1
    );

    let pairs = [
        (
            "The models learn graph structure.",
            "Our model learns the graph structure.",
        ),
        (
            "Clustering selects sentences.\nROUGE scores them.",
            "Sentences are selected by clustering.",
        ),
    ];
    for (c, r) in pairs {
        let s = score_pair(c, r, true);
        for (name, v) in s.variants() {
            println!(
                "{name:>10}  P {:.3}  R {:.3}  F1 {:.3}",
                v.precision, v.recall, v.f1
            );
        }
        println!();
    }
    let report = evaluate_corpus(&pairs, true).unwrap();
    print!("{}", report.to_table());
}
