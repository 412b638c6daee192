//! Independent reference implementations and generators shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: &[&str] = &[
    "the", "model", "graph", "we", "a", "of", "learning", "network", "summary", "data", "cite",
    "method", "results", "show", "paper", "task", "2020", "3d", "x", "sentence",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lowercase alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        let c = ch.to_ascii_lowercase();
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn prf(hits: usize, cand: usize, reference: usize) -> (f64, f64, f64) {
    let p = if cand == 0 {
        0.0
    } else {
        hits as f64 / cand as f64
    };
    let r = if reference == 0 {
        0.0
    } else {
        hits as f64 / reference as f64
    };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

/// Clipped n-gram overlap by explicit enumeration.
pub fn rouge_n(cand: &[String], reference: &[String], n: usize) -> (f64, f64, f64) {
    let grams = |t: &[String]| -> Vec<String> {
        if t.len() < n {
            return Vec::new();
        }
        (0..=t.len() - n)
            .map(|i| t[i..i + n].join("\u{1}"))
            .collect()
    };
    let (c, r) = (grams(cand), grams(reference));
    let mut rc: HashMap<&str, usize> = HashMap::new();
    for g in &r {
        *rc.entry(g).or_default() += 1;
    }
    let mut hits = 0;
    for g in &c {
        if let Some(left) = rc.get_mut(g.as_str()) {
            if *left > 0 {
                *left -= 1;
                hits += 1;
            }
        }
    }
    prf(hits, c.len(), r.len())
}

/// Full (m+1)x(n+1) dynamic-programming table.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

/// Reference positions of the LCS that is lexicographically smallest, by
/// memoized search over all LCSs.
pub fn lexmin_lcs(reference: &[String], cand: &[String]) -> Vec<usize> {
    fn go(
        i: usize,
        j: usize,
        r: &[String],
        c: &[String],
        memo: &mut HashMap<(usize, usize), Vec<usize>>,
    ) -> Vec<usize> {
        if i == r.len() || j == c.len() {
            return Vec::new();
        }
        if let Some(v) = memo.get(&(i, j)) {
            return v.clone();
        }
        let mut options = vec![go(i + 1, j, r, c, memo), go(i, j + 1, r, c, memo)];
        if r[i] == c[j] {
            let mut v = vec![i];
            v.extend(go(i + 1, j + 1, r, c, memo));
            options.push(v);
        }
        let longest = options.iter().map(Vec::len).max().unwrap();
        let best = options
            .into_iter()
            .filter(|o| o.len() == longest)
            .min()
            .unwrap();
        memo.insert((i, j), best.clone());
        best
    }
    go(0, 0, reference, cand, &mut HashMap::new())
}

/// Summary-level union LCS with per-token clipping on both sides.
pub fn rouge_lsum(cand: &[Vec<String>], reference: &[Vec<String>]) -> (f64, f64, f64) {
    let mut cl: HashMap<&str, usize> = HashMap::new();
    let mut rl: HashMap<&str, usize> = HashMap::new();
    for t in cand.iter().flatten() {
        *cl.entry(t).or_default() += 1;
    }
    for t in reference.iter().flatten() {
        *rl.entry(t).or_default() += 1;
    }
    let mut hits = 0;
    for r in reference {
        let mut union: Vec<usize> = cand.iter().flat_map(|c| lexmin_lcs(r, c)).collect();
        union.sort_unstable();
        union.dedup();
        for p in union {
            let t = r[p].as_str();
            if cl[t] > 0 && rl[t] > 0 {
                *cl.get_mut(t).unwrap() -= 1;
                *rl.get_mut(t).unwrap() -= 1;
                hits += 1;
            }
        }
    }
    let n: usize = cand.iter().map(Vec::len).sum();
    let m: usize = reference.iter().map(Vec::len).sum();
    prf(hits, n, m)
}

/// All four variants for newline-separated texts, stemming off.
pub fn rouge_all(cand: &str, reference: &str) -> [(f64, f64, f64); 4] {
    let (c, r) = (tokens(cand), tokens(reference));
    let lines =
        |t: &str| -> Vec<Vec<String>> { t.lines().map(tokens).filter(|v| !v.is_empty()).collect() };
    let l = lcs_len(&c, &r);
    [
        rouge_n(&c, &r, 1),
        rouge_n(&c, &r, 2),
        prf(l, c.len(), r.len()),
        rouge_lsum(&lines(cand), &lines(reference)),
    ]
}

/// `total` tokens spread over 1 to 6 newline-separated sentences.
pub fn random_text(rng: &mut impl Rng, total: usize) -> String {
    let k = rng.random_range(1..=6).min(total);
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, total - 1, k - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(total);
    cuts.windows(2)
        .map(|w| {
            let words: Vec<String> = (w[0]..w[1])
                .map(|i| {
                    let word = VOCAB[rng.random_range(0..VOCAB.len())];
                    if i == w[0] {
                        let mut s = word.to_string();
                        s[..1].make_ascii_uppercase();
                        s
                    } else {
                        word.to_string()
                    }
                })
                .collect();
            format!("{}.", words.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Silhouette from a precomputed distance matrix, straight from the
/// definition.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|p| points.iter().map(|q| dist(p, q)).collect())
        .collect();
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    let mut total = 0.0;
    for i in 0..n {
        let same: Vec<usize> = (0..n)
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        if same.is_empty() {
            continue;
        }
        let a = same.iter().map(|&j| d[i][j]).sum::<f64>() / same.len() as f64;
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| {
                let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                members.iter().map(|&j| d[i][j]).sum::<f64>() / members.len() as f64
            })
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) == 0.0 {
            0.0
        } else {
            (b - a) / a.max(b)
        };
        total += s;
    }
    total / n as f64
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect()
}

/// Peak resident set size of this process in KiB, when the platform exposes it.
pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with("VmHWM:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}
