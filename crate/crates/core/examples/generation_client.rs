//! Request multiple abstractive samples and score them against references.
//!
//!     cargo run --example generation_client

use std::collections::HashMap;

use skx::gen_client::{evaluate_generated, GenClient, GenerationRequest};
use skx::testing::StubServer;

fn main() -> skx::Result<()> {
    // Stands in for a served abstractive model: each sample keeps a prefix
    // of the input that grows with the sample index.
    let server = StubServer::start(|req| {
        let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
        let words: Vec<&str> = body["input"].as_str().unwrap().split_whitespace().collect();
        let n = body["num_samples"].as_u64().unwrap() as usize;
        let summaries: Vec<String> = (1..=n)
            .map(|i| words[..(i * 3).min(words.len())].join(" "))
            .collect();
        (
            200,
            serde_json::json!({ "summaries": summaries, "decoding": { "do_sample": true } })
                .to_string(),
        )
    })
    .expect("bind stub server");

    let client = GenClient::new(server.url(), 2);
    let inputs = [
        (
            "r1",
            "We cluster sentences of each cited abstract and keep centroid sentences.",
        ),
        (
            "r2",
            "Extractive summaries feed a fine-tuned sequence model for related work.",
        ),
    ];
    let requests: Vec<GenerationRequest> = inputs
        .iter()
        .map(|(id, text)| GenerationRequest {
            num_samples: 5,
            ..GenerationRequest::new(*id, *text)
        })
        .collect();
    let generated = client.summarize_all(&requests, 2)?;
    for g in &generated {
        println!(
            "{}: {} samples, first {:?}",
            g.record_id,
            g.summaries.len(),
            g.summaries[0]
        );
    }

    let references: HashMap<String, String> = inputs
        .iter()
        .map(|(id, t)| (id.to_string(), t.to_string()))
        .collect();
    let report = evaluate_generated(&generated, &references, true)?;
    print!("{}", report.to_table());
    Ok(())
}
