//! Cluster planted Gaussian blobs and pick K by silhouette.
//!
//!     cargo run --example kmeans_silhouette

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skx::clustering::{nearest_to_centroid, select_k_in_range, silhouette_score};
use skx::synthetic::planted_clusters;
use skx::{kmeans, KMeansConfig};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (points, truth) = planted_clusters(&[4, 5, 3], 8, 10.0, 1.0, &mut rng);

    let config = KMeansConfig::default();
    let sel = select_k_in_range(&points, 2, points.len() / 2, 42, &config).unwrap();
    for (k, s) in &sel.scores {
        println!("k={k}  silhouette {s:.4}");
    }
    println!("best k = {} (planted 3)", sel.best_k);
    println!("assignments {:?}", sel.result.assignments);
    println!("truth       {truth:?}");
    println!(
        "centroid sentences {:?}",
        nearest_to_centroid(&sel.result, &points).unwrap()
    );

    let r = kmeans(&points, 3, 42, &config).unwrap();
    println!("inertia trace {:?}", r.inertia_trace);
    println!(
        "silhouette {:.4}",
        silhouette_score(&points, &r.assignments).unwrap().mean
    );
}
