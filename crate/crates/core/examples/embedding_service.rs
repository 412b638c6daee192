//! Embed sentences through the HTTP contract, against an in-process stub.
//!
//!     cargo run --example embedding_service

use skx::embedding::{cosine_similarity, euclidean_distance};
use skx::testing::StubServer;
use skx::{EmbeddingProvider, HttpProvider};

fn fake_vector(text: &str) -> Vec<f32> {
    let mut v = vec![0.0f32; 4];
    for (i, b) in text.bytes().enumerate() {
        v[i % 4] += b as f32 / 100.0;
    }
    v
}

fn main() -> skx::Result<()> {
    let server = StubServer::start(|req| match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => (200, "{}".into()),
        ("POST", "/embed") => {
            let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
            let vectors: Vec<Vec<f32>> = body["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| fake_vector(t.as_str().unwrap()))
                .collect();
            (
                200,
                serde_json::json!({ "dim": 4, "vectors": vectors }).to_string(),
            )
        }
        _ => (404, "{}".into()),
    })
    .expect("bind stub server");

    let provider = HttpProvider::new(server.url(), 2, 2)?;
    provider.health()?;
    let texts = [
        "Graph models work.",
        "Graph models work well.",
        "Unrelated sentence here.",
    ];
    let v = provider.embed(&texts)?;
    println!("dim {:?}", provider.dim());
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            println!(
                "{i}-{j}: euclidean {:.3}  cosine {:.3}",
                euclidean_distance(&v[i], &v[j])?,
                cosine_similarity(&v[i], &v[j])?
            );
        }
    }
    Ok(())
}
