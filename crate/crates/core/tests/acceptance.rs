//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use skx::clustering::{kmeans, select_k, silhouette_score, KMeansConfig};
use skx::corpus::{write_corpus, JsonlWriter};
use skx::embedding::write_embedding_file;
use skx::extractor::{document_sentences, extract_corpus, record_documents};
use skx::rouge::{rouge_lsum, score_pair};
use skx::synthetic::{planted_clusters, planted_corpus, redundancy_corpus};
use skx::{count_tokens, extract_record, load_embedding_file, read_corpus, ExtractConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rouge_oracle() -> Outcome {
    let mut rng = common::rng(2024);
    let pairs: Vec<(String, String)> = (0..50)
        .map(|_| {
            let lc = rng.random_range(5..=200);
            let lr = rng.random_range(5..=200);
            (
                common::random_text(&mut rng, lc),
                common::random_text(&mut rng, lr),
            )
        })
        .collect();
    let start = Instant::now();
    let got: Vec<_> = pairs.iter().map(|(c, r)| score_pair(c, r, false)).collect();
    let elapsed = start.elapsed();

    let mut worst: f64 = 0.0;
    for ((c, r), g) in pairs.iter().zip(&got) {
        for ((_, s), (p, rc, f)) in g.variants().iter().zip(common::rouge_all(c, r)) {
            worst = worst
                .max((s.precision - p).abs())
                .max((s.recall - rc).abs())
                .max((s.f1 - f).abs());
        }
    }
    let lin = rouge_lsum("w1 w2 w6 w7 w8\nw1 w3 w8 w9 w5", "w1 w2 w3 w4 w5", false);
    let pass = worst <= 1e-9 && lin.recall == 4.0 / 5.0 && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "50 pairs, max |diff| {worst:.1e} (tol 1e-9); union example recall {} (want 0.8); {:.0} ms (limit 5000)",
            lin.recall,
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn identity_and_zero() -> Outcome {
    let mut rng = common::rng(7);
    let mut ok = true;
    for _ in 0..20 {
        let n = rng.random_range(5..80);
        let t = common::random_text(&mut rng, n);
        for stem in [false, true] {
            ok &= score_pair(&t, &t, stem)
                .variants()
                .iter()
                .all(|(_, s)| s.f1 == 1.0);
        }
    }
    let disjoint = score_pair(
        "alpha beta gamma.\ndelta epsilon.",
        "one two three.\nfour five six.",
        true,
    );
    ok &= disjoint
        .variants()
        .iter()
        .all(|(_, s)| s.f1 == 0.0 && s.precision == 0.0 && s.recall == 0.0);
    outcome(
        ok,
        "20 self-pairs F1 = 1.0 with and without stemming; disjoint pair all zeros",
    )
}

fn silhouette_oracle() -> Outcome {
    let mut rng = common::rng(99);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=100);
        let dim = rng.random_range(1..=16);
        let points = common::random_points(&mut rng, n, dim);
        let k = rng.random_range(2..=n.min(8));
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        labels[0] = 0;
        labels[n - 1] = 1;
        let got = silhouette_score(&points, &labels).unwrap().mean;
        worst = worst.max((got - common::silhouette(&points, &labels)).abs());
    }
    let pts: Vec<Vec<f64>> = [0.0, 0.1, 10.0, 10.1].iter().map(|&x| vec![x]).collect();
    let pair = silhouette_score(&pts, &[0, 0, 1, 1]).unwrap().mean;
    outcome(
        worst <= 1e-9 && (pair - 0.99005).abs() <= 1e-4,
        format!("100 instances, max |diff| {worst:.1e} (tol 1e-9); two-pair score {pair:.6} (want 0.99005 +- 1e-4)"),
    )
}

fn kmeans_invariants() -> Outcome {
    let mut rng = common::rng(5);
    let config = KMeansConfig::default();
    let (mut monotone, mut deterministic, mut zero) = (0, 0, 0);
    for trial in 0..100u64 {
        let n = rng.random_range(2..=60);
        let dim = rng.random_range(1..=8);
        let points = common::random_points(&mut rng, n, dim);
        let k = rng.random_range(1..=n.min(10));
        let runs: Vec<_> = (0..3)
            .map(|_| kmeans(&points, k, trial, &config).unwrap())
            .collect();
        let trace = &runs[0].inertia_trace;
        if trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) {
            monotone += 1;
        }
        if runs.iter().all(|r| {
            r.assignments == runs[0].assignments && r.inertia.to_bits() == runs[0].inertia.to_bits()
        }) {
            deterministic += 1;
        }
        if kmeans(&points, n, trial, &config).unwrap().inertia == 0.0 {
            zero += 1;
        }
    }
    outcome(
        monotone == 100 && deterministic == 100 && zero == 100,
        format!("monotone inertia {monotone}/100; identical reruns {deterministic}/100; k = n inertia 0 {zero}/100"),
    )
}

fn select_k_planted() -> Outcome {
    let mut rng = common::rng(31);
    let mut hits = [0usize; 3];
    let mut scale_ok = 0;
    for trial in 0..100u64 {
        for (gi, g) in [2usize, 3, 4].into_iter().enumerate() {
            let t = rng.random_range(2 * g + 2..=2 * g + 16);
            let mut sizes = vec![2usize; g];
            for _ in 0..t - 2 * g {
                sizes[rng.random_range(0..g)] += 1;
            }
            let (points, _) = planted_clusters(&sizes, 16, 10.0, 1.0, &mut rng);
            let (k, _) = select_k(&points, trial).unwrap();
            if k == g {
                hits[gi] += 1;
            }
            if trial as usize % 3 == gi {
                let c = 10f64.powf(rng.random_range(-3.0..3.0));
                let scaled: Vec<Vec<f64>> = points
                    .iter()
                    .map(|p| p.iter().map(|x| x * c).collect())
                    .collect();
                if select_k(&scaled, trial).unwrap().0 == k {
                    scale_ok += 1;
                }
            }
        }
    }
    outcome(
        hits.iter().all(|&h| h >= 95) && scale_ok == 100,
        format!(
            "best_k = g for g=2,3,4: {}/100, {}/100, {}/100 (need 95); scale invariance {scale_ok}/100",
            hits[0], hits[1], hits[2]
        ),
    )
}

struct ExtractionCheck {
    contract: Outcome,
    k_range: Outcome,
}

fn extraction() -> ExtractionCheck {
    let start = Instant::now();
    let corpus = planted_corpus(200, 42);
    let config = ExtractConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    let emb_path = dir.path().join("emb.jsonl");
    write_corpus(&corpus.records, &corpus_path).unwrap();
    write_embedding_file(
        corpus.entries.iter().map(|(t, v)| (t.as_str(), v)),
        &emb_path,
    )
    .unwrap();

    let run = |name: &str| {
        let provider = load_embedding_file(&emb_path).unwrap();
        let out = dir.path().join(name);
        let mut w = JsonlWriter::create(&out).unwrap();
        extract_corpus(
            read_corpus(&corpus_path, None).unwrap(),
            &provider,
            &config,
            &mut w,
            64,
        )
        .unwrap();
        w.finish().unwrap();
        std::fs::read(out).unwrap()
    };
    let identical = run("a.jsonl") == run("b.jsonl");

    let (mut violations, mut passthrough, mut clustered, mut k_bad) = (0, 0, 0, 0);
    for record in &corpus.records {
        let out = extract_record(record, &corpus.embeddings, &config).unwrap();
        if out.token_count > count_tokens(&record.source_text()) {
            violations += 1;
        }
        for ((key, text), doc) in record_documents(record).zip(&out.documents) {
            let source = document_sentences(key, text, &config);
            let t = source.len();
            let idx: Option<Vec<usize>> = doc
                .sentences
                .iter()
                .map(|s| source.iter().position(|x| &x.text == s))
                .collect();
            let ordered = idx.is_some_and(|i| i.windows(2).all(|w| w[0] < w[1]));
            if !ordered {
                violations += 1;
            }
            if t < 4 {
                passthrough += 1;
                if doc.sentences.len() != t || doc.k != t {
                    violations += 1;
                }
            } else {
                clustered += 1;
                if doc.sentences.len() != doc.k {
                    violations += 1;
                }
                if doc.k < 2 || doc.k > t / 2 {
                    k_bad += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ExtractionCheck {
        contract: outcome(
            violations == 0 && identical && passthrough > 0 && elapsed < Duration::from_secs(30),
            format!(
                "200 records, {violations} violations, {passthrough} pass-through docs, reruns byte-identical: {identical}; {:.1} s (limit 30)",
                elapsed.as_secs_f64()
            ),
        ),
        k_range: outcome(
            k_bad == 0 && clustered > 0,
            format!("{clustered} clustered documents, {k_bad} outside [2, floor(T/2)]"),
        ),
    }
}

fn compression() -> Outcome {
    let corpus = redundancy_corpus(200, 8);
    let config = ExtractConfig::default();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for record in &corpus.records {
        let out = extract_record(record, &corpus.embeddings, &config).unwrap();
        let ratio = out.token_count as f64 / count_tokens(&record.source_text()) as f64;
        worst = worst.max(ratio);
        if ratio <= 0.6 {
            within += 1;
        }
    }
    let n = corpus.records.len();
    outcome(
        within * 10 >= n * 9,
        format!("{within}/{n} records at ratio <= 0.6 (need 90%); worst {worst:.3}"),
    )
}

fn main() {
    let extraction = extraction();
    let results = [
        ("rouge oracle equivalence", rouge_oracle()),
        ("rouge identity and zero", identity_and_zero()),
        ("silhouette oracle", silhouette_oracle()),
        ("k-means invariants", kmeans_invariants()),
        ("select_k planted clusters", select_k_planted()),
        ("extraction contract", extraction.contract),
        ("k-range conformance", extraction.k_range),
        ("pipeline compression", compression()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
