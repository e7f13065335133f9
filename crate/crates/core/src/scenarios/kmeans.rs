//! Seeded k-means++ / Lloyd clustering of the monthly feature vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::RegimeModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub shift_tol: f64,
    /// z-score each feature column before clustering.
    pub standardize: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 4,
            seed: 42,
            restarts: 10,
            max_iter: 100,
            shift_tol: 1e-8,
            standardize: true,
        }
    }
}

type Point = [f64; 2];

fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, q) in centroids.iter().enumerate() {
        let d = dist2(p, q);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Point], centroids: &[Point]) -> (Vec<usize>, f64) {
    let mut objective = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            objective += d;
            c
        })
        .collect();
    (labels, objective)
}

fn means(points: &[Point], labels: &[usize], k: usize) -> Vec<Option<Point>> {
    let mut sums = vec![[0.0, 0.0]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        sums[c][0] += p[0];
        sums[c][1] += p[1];
        counts[c] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| [s[0] / n as f64, s[1] / n as f64]))
        .collect()
}

fn plus_plus_init(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Move the point farthest from its centroid into each empty cluster.
fn reseed_empty(points: &[Point], labels: &mut [usize], centroids: &mut [Point], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&c| counts[c] += 1);
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&i, &j| {
                dist2(&points[i], &centroids[labels[i]])
                    .total_cmp(&dist2(&points[j], &centroids[labels[j]]))
                    .then(j.cmp(&i))
            });
        let Some(i) = far else {
            return;
        };
        labels[i] = empty;
        centroids[empty] = points[i];
    }
}

struct Run {
    centroids: Vec<Point>,
    labels: Vec<usize>,
    inertia: f64,
    trace: Vec<f64>,
}

fn lloyd(points: &[Point], config: &KMeansConfig, rng: &mut ChaCha8Rng) -> Run {
    let k = config.k;
    let mut centroids = plus_plus_init(points, k, rng);
    let mut trace: Vec<f64> = Vec::new();
    let mut labels;
    let mut iter = 0;
    loop {
        let (assigned, objective) = assign(points, &centroids);
        labels = assigned;
        if let Some(prev) = trace.last() {
            debug_assert!(
                objective <= prev + 1e-12 * prev.max(1.0),
                "k-means objective increased: {prev} -> {objective}"
            );
        }
        trace.push(objective);
        reseed_empty(points, &mut labels, &mut centroids, k);
        let updated: Vec<Point> = means(points, &labels, k)
            .into_iter()
            .zip(&centroids)
            .map(|(m, old)| m.unwrap_or(*old))
            .collect();
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        iter += 1;
        if shift < config.shift_tol || iter >= config.max_iter {
            break;
        }
    }
    let (final_labels, _) = assign(points, &centroids);
    let final_means = means(points, &final_labels, k);
    if final_means.iter().all(Option::is_some) {
        labels = final_labels;
        centroids = final_means.into_iter().flatten().collect();
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &c)| dist2(p, &centroids[c]))
        .sum();
    Run {
        centroids,
        labels,
        inertia,
        trace,
    }
}

/// Column means and population standard deviations (zero sd → 1).
fn standardization(points: &[Point]) -> ([f64; 2], [f64; 2]) {
    let n = points.len() as f64;
    let mut mean = [0.0; 2];
    let mut sd = [0.0; 2];
    for c in 0..2 {
        mean[c] = points.iter().map(|p| p[c]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[c] - mean[c]).powi(2)).sum::<f64>() / n;
        sd[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    (mean, sd)
}

/// Partition the `(market return, volatility)` features into `k` clusters.
///
/// Runs `restarts` seeded k-means++ initializations (restart `r` uses ChaCha
/// stream `r` of `seed`) and keeps the run with the smallest within-cluster
/// sum of squares, lowest restart index on ties.
pub fn kmeans_partition(features: &[[f64; 2]], config: &KMeansConfig) -> Result<RegimeModel> {
    let k = config.k;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if features.len() < k {
        return Err(Error::InvalidInput(format!(
            "{} observations cannot form {k} clusters",
            features.len()
        )));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    if config.restarts == 0 || config.max_iter == 0 {
        return Err(Error::InvalidInput(
            "k-means needs at least one restart and one iteration".into(),
        ));
    }
    let (points, scaling) = if config.standardize {
        let (mean, sd) = standardization(features);
        let z = features
            .iter()
            .map(|p| [(p[0] - mean[0]) / sd[0], (p[1] - mean[1]) / sd[1]])
            .collect();
        (z, Some((mean, sd)))
    } else {
        (features.to_vec(), None)
    };

    let runs: Vec<Run> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            lloyd(&points, config, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| {
            if run.inertia < best.inertia {
                run
            } else {
                best
            }
        })
        .expect("at least one restart");

    Ok(RegimeModel {
        k,
        centroids: best.centroids,
        assignment: best.labels,
        labels: None,
        inertia: best.inertia,
        objective_trace: best.trace,
        scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clouds() -> Vec<Point> {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
        let offsets = [
            [0.1, 0.0],
            [-0.1, 0.05],
            [0.0, -0.1],
            [0.05, 0.1],
            [-0.05, -0.05],
        ];
        centers
            .iter()
            .flat_map(|c| offsets.iter().map(move |o| [c[0] + o[0], c[1] + o[1]]))
            .collect()
    }

    fn sorted(mut c: Vec<Point>) -> Vec<Point> {
        c.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        c
    }

    #[test]
    fn separated_clouds_are_recovered_for_any_seed() {
        let pts = clouds();
        for seed in [0, 1, 42, 7777] {
            let cfg = KMeansConfig {
                seed,
                ..KMeansConfig::default()
            };
            let model = kmeans_partition(&pts, &cfg).unwrap();
            for cloud in model.assignment.chunks(5) {
                assert!(cloud.iter().all(|&c| c == cloud[0]));
            }
            let mut firsts: Vec<usize> = model.assignment.chunks(5).map(|c| c[0]).collect();
            firsts.sort_unstable();
            firsts.dedup();
            assert_eq!(firsts.len(), 4);
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = clouds();
        let cfg = KMeansConfig {
            k: 1,
            standardize: false,
            ..KMeansConfig::default()
        };
        let model = kmeans_partition(&pts, &cfg).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        assert!((model.centroids[0][0] - mx).abs() < 1e-12);
        assert!((model.centroids[0][1] - my).abs() < 1e-12);
    }

    #[test]
    fn duplicated_data_gives_same_centroids() {
        let pts = clouds();
        let twice: Vec<Point> = pts.iter().chain(pts.iter()).copied().collect();
        let cfg = KMeansConfig {
            standardize: false,
            ..KMeansConfig::default()
        };
        let a = sorted(kmeans_partition(&pts, &cfg).unwrap().centroids);
        let b = sorted(kmeans_partition(&twice, &cfg).unwrap().centroids);
        for (p, q) in a.iter().zip(&b) {
            assert!(dist2(p, q) < 1e-20);
        }
    }

    #[test]
    fn objective_never_increases() {
        let pts: Vec<Point> = (0..60)
            .map(|i| {
                let x = (i as f64 * 0.37).sin() * 3.0;
                let y = (i as f64 * 1.13).cos() * 2.0 + x * 0.2;
                [x, y]
            })
            .collect();
        let model = kmeans_partition(&pts, &KMeansConfig::default()).unwrap();
        for w in model.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn empty_cluster_reseeding() {
        // Centroid 1 starts far away from everything and loses all points.
        let pts = vec![[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]];
        let mut centroids = vec![[0.05, 0.0], [100.0, 100.0]];
        let (mut labels, _) = assign(&pts, &centroids);
        assert!(labels.iter().all(|&c| c == 0));
        reseed_empty(&pts, &mut labels, &mut centroids, 2);
        assert_eq!(labels.iter().filter(|&&c| c == 1).count(), 1);
        assert_eq!(labels[3], 1, "farthest point moves");
    }

    #[test]
    fn deterministic_and_validated() {
        let pts = clouds();
        let a = kmeans_partition(&pts, &KMeansConfig::default()).unwrap();
        let b = kmeans_partition(&pts, &KMeansConfig::default()).unwrap();
        assert_eq!(a, b);
        let cfg = KMeansConfig {
            k: 30,
            ..KMeansConfig::default()
        };
        assert!(kmeans_partition(&pts, &cfg).is_err());
    }
}
