//! Lloyd's k-means with seeded k-means++ initialization, exact silhouette
//! scoring, and the silhouette-driven search for the number of clusters.
//!
//! Points are dense `f64` rows of equal length; distances are Euclidean.
//! Ties are always broken toward the smallest index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{distance, squared_distance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    /// Independent seeded runs per call; the lowest inertia wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index of each point, in `0..k`. Every cluster is nonempty.
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step, ending with the final assignment.
    pub inertia_trace: Vec<f64>,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(dim)
}

pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansResult> {
    check_points(points)?;
    if k < 1 || k > points.len() {
        return Err(Error::InvalidK { k, n: points.len() });
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let init = kmeans_plus_plus(points, k, &mut rng)
            .into_iter()
            .map(|i| points[i].clone())
            .collect();
        let result = lloyd(points, init, config);
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Runs Lloyd iterations from explicit starting centroids.
pub fn kmeans_from_centroids(
    points: &[Vec<f64>],
    initial: Vec<Vec<f64>>,
    config: &KMeansConfig,
) -> Result<KMeansResult> {
    let dim = check_points(points)?;
    let k = initial.len();
    if k < 1 || k > points.len() {
        return Err(Error::InvalidK { k, n: points.len() });
    }
    if let Some(bad) = initial.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(lloyd(points, initial, config))
}

/// k-means++ seeding: the first center uniformly, each next one with
/// probability proportional to its squared distance from the nearest chosen
/// center. When every remaining distance is zero, an unchosen point is drawn
/// uniformly.
fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &points[next]));
        }
    }
    chosen
}

const UNASSIGNED: usize = usize::MAX;

/// Assigns each point to a nearest centroid. A point keeps its current
/// cluster when that cluster is among the nearest; otherwise the lowest
/// nearest index wins. Returns whether anything changed.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) -> bool {
    let mut changed = false;
    for (p, a) in points.iter().zip(assignments.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = squared_distance(p, centroid);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        if *a != UNASSIGNED && *a != best && squared_distance(p, &centroids[*a]) == best_d {
            continue;
        }
        if *a != best {
            *a = best;
            changed = true;
        }
    }
    changed
}

/// Moves the point farthest from its centroid (among clusters with more than
/// one member) into each empty cluster, placing that cluster's centroid on
/// the point, then reassigns until no cluster is empty.
fn repair_empty(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignments: &mut [usize]) {
    let k = centroids.len();
    // Each round strictly lowers inertia or leaves it stable, so this bound is never hit in practice.
    for _ in 0..(points.len() * k + 1) {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        if counts.iter().all(|&c| c > 0) {
            return;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                let a = assignments[i];
                if counts[a] <= 1 {
                    continue;
                }
                let d = squared_distance(p, &centroids[a]);
                if d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
            let i = far.expect("k <= n leaves a cluster with two members");
            counts[assignments[i]] -= 1;
            assignments[i] = c;
            counts[c] = 1;
            centroids[c] = points[i].clone();
        }
        assign(points, centroids, assignments);
    }
}

fn inertia(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|x| *x /= n as f64);
    }
    sums
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, config: &KMeansConfig) -> KMeansResult {
    let k = centroids.len();
    let mut assignments = vec![UNASSIGNED; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for iter in 1..=config.max_iter.max(1) {
        iterations = iter;
        assign(points, &centroids, &mut assignments);
        repair_empty(points, &mut centroids, &mut assignments);
        trace.push(inertia(points, &centroids, &assignments));
        let updated = means(points, &assignments, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| distance(a, b))
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tol || shift == 0.0 {
            break;
        }
    }
    assign(points, &centroids, &mut assignments);
    repair_empty(points, &mut centroids, &mut assignments);
    let final_inertia = inertia(points, &centroids, &assignments);
    trace.push(final_inertia);
    KMeansResult {
        k,
        centroids,
        assignments,
        inertia: final_inertia,
        iterations,
        inertia_trace: trace,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// Per-point coefficient in [-1, 1]; zero for members of singleton clusters.
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Exact silhouette over all pairwise distances. Labels need not be
/// contiguous, but at least two distinct labels must be present.
pub fn silhouette_score(points: &[Vec<f64>], assignments: &[usize]) -> Result<Silhouette> {
    check_points(points)?;
    if assignments.len() != points.len() {
        return Err(Error::Validation(format!(
            "{} assignments for {} points",
            assignments.len(),
            points.len()
        )));
    }
    let mut labels: Vec<usize> = assignments.to_vec();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::SilhouetteUndefined(labels.len()));
    }
    let dense: Vec<usize> = assignments
        .iter()
        .map(|a| labels.binary_search(a).expect("label present"))
        .collect();
    let m = labels.len();
    let mut sizes = vec![0usize; m];
    for &c in &dense {
        sizes[c] += 1;
    }

    let n = points.len();
    let mut values = Vec::with_capacity(n);
    let mut sums = vec![0.0; m];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[dense[j]] += distance(&points[i], &points[j]);
            }
        }
        let own = dense[i];
        if sizes[own] == 1 {
            values.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..m)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        values.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { values, mean })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    pub result: KMeansResult,
    /// Mean silhouette for each candidate k, ascending in k.
    pub scores: Vec<(usize, f64)>,
}

/// Searches k over `[2, floor(T/2)]`, where T is the number of points.
pub fn select_k(points: &[Vec<f64>], seed: u64) -> Result<(usize, KMeansResult)> {
    let s = select_k_in_range(points, 2, points.len() / 2, seed, &KMeansConfig::default())?;
    Ok((s.best_k, s.result))
}

/// Clusters once per k in `[kmin, kmax]` and keeps the k with the highest
/// mean silhouette; ties go to the smaller k.
pub fn select_k_in_range(
    points: &[Vec<f64>],
    kmin: usize,
    kmax: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KSelection> {
    if kmin < 2 || kmax < kmin || kmax > points.len() {
        return Err(Error::EmptyKRange {
            kmin,
            kmax,
            points: points.len(),
        });
    }
    let mut best: Option<(f64, KMeansResult)> = None;
    let mut scores = Vec::with_capacity(kmax - kmin + 1);
    for k in kmin..=kmax {
        let result = kmeans(points, k, seed, config)?;
        let score = silhouette_score(points, &result.assignments)?.mean;
        scores.push((k, score));
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, result));
        }
    }
    let (_, result) = best.expect("nonempty range");
    Ok(KSelection {
        best_k: result.k,
        result,
        scores,
    })
}

/// For each cluster in ascending order, the member closest to its centroid.
pub fn nearest_to_centroid(result: &KMeansResult, points: &[Vec<f64>]) -> Result<Vec<usize>> {
    if result.assignments.len() != points.len() || result.centroids.len() != result.k {
        return Err(Error::Validation(
            "clustering result does not match the points".into(),
        ));
    }
    let mut best: Vec<Option<(usize, f64)>> = vec![None; result.k];
    for (i, (p, &a)) in points.iter().zip(&result.assignments).enumerate() {
        if a >= result.k {
            return Err(Error::Validation(format!(
                "assignment {a} outside 0..{}",
                result.k
            )));
        }
        let d = squared_distance(p, &result.centroids[a]);
        if best[a].is_none_or(|(_, bd)| d < bd) {
            best[a] = Some((i, d));
        }
    }
    best.into_iter()
        .enumerate()
        .map(|(c, b)| {
            b.map(|(i, _)| i)
                .ok_or_else(|| Error::Validation(format!("cluster {c} is empty")))
        })
        .collect()
}
