//! Seeded k-means used for feature prototypes and spatial prompt grouping.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_SHIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// Final centroids; each equals the mean of its assigned points.
    pub centroids: Vec<Vec<f64>>,
    /// Point index -> centroid index.
    pub assignment: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// k-means++ seeding.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..points.len());
    centroids.push(points[first].clone());
    let mut dists: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let idx = if total <= 0.0 {
            // all remaining points coincide with a centroid
            rng.gen_range(0..points.len())
        } else {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in dists.iter().enumerate() {
                u -= d;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, centroids.last().unwrap());
            if d < dists[i] {
                dists[i] = d;
            }
        }
    }
    centroids
}

/// Lloyd iterations with k-means++ seeding. `k` is clamped to the point count.
/// Deterministic for a fixed RNG state.
pub fn kmeans(points: &[Vec<f32>], k: usize, rng: &mut ChaCha8Rng) -> KmeansResult {
    assert!(k >= 1);
    assert!(!points.is_empty());
    let k = k.min(points.len());
    let dim = points[0].len();
    let pts: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().map(|&v| v as f64).collect())
        .collect();

    let mut centroids = seed_centroids(&pts, k, rng);
    let mut trace = Vec::new();
    let mut assignment = vec![0usize; pts.len()];
    let mut prev_obj = f64::INFINITY;
    let mut repaired_last = true; // seeding counts as a reset for the monotonicity check

    for _iter in 0..KMEANS_MAX_ITERS * 2 {
        let mut obj = 0.0;
        for (i, p) in pts.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignment[i] = c;
            obj += d;
        }
        if !repaired_last {
            assert!(
                obj <= prev_obj + 1e-9,
                "k-means objective increased: {prev_obj} -> {obj}"
            );
        }
        prev_obj = obj;
        trace.push(obj);

        let mut sums = vec![vec![0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in pts.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(p) {
                *s += v;
            }
        }

        let mut repaired = false;
        let mut shift: f64 = 0.0;
        let mut new_centroids = centroids.clone();
        for j in 0..k {
            if counts[j] == 0 {
                // snap an empty cluster onto the point farthest from its centroid
                let far = (0..pts.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&pts[a], &centroids[assignment[a]]);
                        let db = sq_dist(&pts[b], &centroids[assignment[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                new_centroids[j] = pts[far].clone();
                repaired = true;
            } else {
                for (d, s) in new_centroids[j].iter_mut().zip(&sums[j]) {
                    *d = *s / counts[j] as f64;
                }
            }
            shift = shift.max(sq_dist(&new_centroids[j], &centroids[j]).sqrt());
        }
        centroids = new_centroids;
        repaired_last = repaired;

        if !repaired && (shift < KMEANS_SHIFT_TOL || trace.len() >= KMEANS_MAX_ITERS) {
            // final assignment against the converged centroids so that every
            // returned centroid is the mean of its assigned members
            let mut sums = vec![vec![0f64; dim]; k];
            let mut counts = vec![0usize; k];
            for (i, p) in pts.iter().enumerate() {
                let (c, _) = nearest(p, &centroids);
                assignment[i] = c;
                counts[c] += 1;
                for (s, v) in sums[c].iter_mut().zip(p) {
                    *s += v;
                }
            }
            for j in 0..k {
                if counts[j] > 0 {
                    for (d, s) in centroids[j].iter_mut().zip(&sums[j]) {
                        *d = *s / counts[j] as f64;
                    }
                }
            }
            break;
        }
    }

    KmeansResult {
        centroids,
        assignment,
        objective_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stage_rng;

    #[test]
    fn singleton_clusters_when_k_equals_n() {
        let pts: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32 * 10.0, 0.0]).collect();
        let mut rng = stage_rng(1, 0, "test");
        let r = kmeans(&pts, 5, &mut rng);
        assert_eq!(r.centroids.len(), 5);
        let mut seen: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, v) in seen.iter().enumerate() {
            assert!((v - i as f64 * 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_groups_give_group_means() {
        let mut pts = Vec::new();
        for _ in 0..10 {
            pts.push(vec![1.0f32, 0.0]);
            pts.push(vec![-1.0f32, 0.1]);
        }
        let mut rng = stage_rng(2, 0, "test");
        let r = kmeans(&pts, 2, &mut rng);
        let mut xs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 1.0).abs() < 1e-9);
        assert!((xs[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let pts: Vec<Vec<f32>> = (0..50)
            .map(|i| vec![(i * 7 % 13) as f32, (i * 3 % 11) as f32])
            .collect();
        let a = kmeans(&pts, 5, &mut stage_rng(9, 0, "test"));
        let b = kmeans(&pts, 5, &mut stage_rng(9, 0, "test"));
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn centroids_are_assigned_means() {
        let pts: Vec<Vec<f32>> = (0..40)
            .map(|i| vec![((i * 17 + 3) % 29) as f32, ((i * 5 + 1) % 19) as f32])
            .collect();
        let r = kmeans(&pts, 4, &mut stage_rng(4, 0, "test"));
        let dim = 2;
        let k = r.centroids.len();
        let mut sums = vec![vec![0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in pts.iter().enumerate() {
            counts[r.assignment[i]] += 1;
            for d in 0..dim {
                sums[r.assignment[i]][d] += p[d] as f64;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            for d in 0..dim {
                assert!((r.centroids[j][d] - sums[j][d] / counts[j] as f64).abs() < 1e-6);
            }
        }
    }
}
