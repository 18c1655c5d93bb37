//! Grouping of per-window optima into candidate designs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{design_bounds, ShapeParams};
use crate::optimizer::{ModelSettings, OptResult};
use crate::response::{frf, linear_grid};

/// Partition of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step of the winning run.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centroids.iter().enumerate() {
        let d = dist2(p, centre);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 || points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Argument("points must be finite and share one positive dimension".into()));
    }
    Ok(dim)
}

/// k-means with k-means++ seeding; the best of several restarts by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    kmeans_with(points, k, seed, &KMeansOptions::default())
}

pub fn kmeans_with(points: &[Vec<f64>], k: usize, seed: u64, options: &KMeansOptions) -> Result<KMeans> {
    if k == 0 || k > points.len() {
        return Err(Error::Argument(format!("k = {k} needs 1..={} points", points.len())));
    }
    check_points(points)?;
    let runs: Vec<KMeans> = (0..options.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| lloyd(points, k, seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15)), options.max_iterations))
        .collect();
    // first of the minimal runs, so the result does not depend on scheduling
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &di) in d.iter().enumerate() {
                if target < di {
                    idx = i;
                    break;
                }
                target -= di;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], k: usize, seed: u64, max_iterations: usize) -> KMeans {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points[0].len();
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let objective = |a: &[usize], c: &[Vec<f64>]| points.iter().zip(a).map(|(p, &i)| dist2(p, &c[i])).sum::<f64>();
    let mut history = vec![objective(&assignments, &centroids)];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // an empty cluster takes over the point farthest from its centroid
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = 0;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = dist2(p, &centroids[assignments[i]]);
                    if counts[assignments[i]] > 1 && d > far_d {
                        far = i;
                        far_d = d;
                    }
                }
                counts[assignments[far]] -= 1;
                counts[c] = 1;
                assignments[far] = c;
                centroids[c] = points[far].clone();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        let moved = next != assignments;
        assignments = next;
        history.push(objective(&assignments, &centroids));
        if !moved {
            break;
        }
    }
    // keep centroids as the exact means of the final partition
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(&assignments) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for c in 0..k {
        if counts[c] > 0 {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    let inertia = objective(&assignments, &centroids);
    KMeans {
        assignments,
        centroids,
        inertia,
        iterations,
        history,
    }
}

/// How the distance from a sample to the other clusters is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterCluster {
    /// Mean distance to the nearest other cluster.
    #[default]
    Nearest,
    /// Mean distance to all points outside the own cluster.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    pub mean: f64,
    pub samples: Vec<f64>,
}

/// Silhouette coefficients `(b - a) / max(a, b)` of a partition.
///
/// Singletons score 0, as do samples with `a = b = 0`.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize], inter: InterCluster) -> Result<Silhouette> {
    if points.len() != assignments.len() {
        return Err(Error::Argument("one assignment per point required".into()));
    }
    check_points(points)?;
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    assignments.iter().for_each(|&a| sizes[a] += 1);
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::SingleCluster);
    }
    let samples: Vec<f64> = (0..points.len())
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[assignments[j]] += dist2(&points[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = match inter {
                InterCluster::Nearest => (0..k)
                    .filter(|&c| c != own && sizes[c] > 0)
                    .map(|c| sums[c] / sizes[c] as f64)
                    .fold(f64::INFINITY, f64::min),
                InterCluster::Pooled => {
                    let n_out = points.len() - sizes[own];
                    (sums.iter().sum::<f64>() - sums[own]) / n_out as f64
                }
            };
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(Silhouette { mean, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Largest cluster count tried.
    pub max_k: usize,
    /// Below this best mean silhouette the optima form a single group.
    pub min_silhouette: f64,
    /// Append the fundamental frequency to the (L, l, H) features.
    pub include_frequency: bool,
    pub inter_cluster: InterCluster,
    pub kmeans: KMeansOptions,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            max_k: 6,
            min_silhouette: 0.5,
            include_frequency: false,
            inter_cluster: InterCluster::Nearest,
            kmeans: KMeansOptions::default(),
        }
    }
}

/// Peak of a candidate's voltage FRF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrfSummary {
    pub peak_hz: f64,
    /// [V / (m s^-2)]
    pub peak_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub shape: ShapeParams,
    pub members: Vec<String>,
    pub fundamental_hz: f64,
    pub frf: FrfSummary,
    /// Energy per window of the location [J].
    pub window_energies: Vec<f64>,
    /// Energy over the full record [J].
    pub total_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub k: usize,
    /// Mean silhouette per tested k.
    pub silhouettes: Vec<(usize, f64)>,
    /// Cluster of each optimum, in input order.
    pub assignments: Vec<usize>,
    pub feature_names: Vec<String>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    /// Whether the single-group rule was applied.
    pub single_group: bool,
}

impl ClusteringReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Writes `k,mean_silhouette`.
    pub fn write_silhouette_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k", "mean_silhouette"])?;
        for (k, s) in &self.silhouettes {
            w.write_record([k.to_string(), format!("{s}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column means and standard deviations; constant columns get scale 1.
fn zscore(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let means: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
    let scales: Vec<f64> = (0..dim)
        .map(|d| {
            let var = rows.iter().map(|r| (r[d] - means[d]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * means[d].abs().max(1e-300) {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(d, v)| (v - means[d]) / scales[d]).collect())
        .collect();
    (means, scales, z)
}

/// Seed derived from the sorted rows, so input order does not matter.
fn data_seed(rows: &[Vec<f64>]) -> u64 {
    let mut hasher = Sha256::new();
    for r in rows {
        for v in r {
            hasher.update(v.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest holds 8 bytes"))
}

fn lexical(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Clusters optimal shapes and turns each cluster centre into a candidate.
pub fn select_candidates(optima: &[OptResult], config: &ClusterConfig, settings: &ModelSettings) -> Result<(Vec<DesignCandidate>, ClusteringReport)> {
    let mut names = vec!["L".to_string(), "l".to_string(), "H".to_string()];
    if config.include_frequency {
        names.push("f1_hz".into());
    }
    if optima.len() < 2 {
        let candidates = optima
            .iter()
            .map(|o| candidate(o.best, vec![o.window_id.clone()], settings))
            .collect::<Result<Vec<_>>>()?;
        let report = ClusteringReport {
            k: candidates.len(),
            silhouettes: Vec::new(),
            assignments: vec![0; optima.len()],
            feature_names: names,
            feature_means: Vec::new(),
            feature_scales: Vec::new(),
            single_group: true,
        };
        return Ok((candidates, report));
    }

    let raw: Vec<Vec<f64>> = optima
        .iter()
        .map(|o| {
            let mut f = o.best.design_vector().to_vec();
            if config.include_frequency {
                f.push(o.fundamental_hz);
            }
            f
        })
        .collect();
    let (means, scales, z) = zscore(&raw);

    // cluster in sorted order so the outcome ignores input order
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| lexical(&z[a], &z[b]));
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| z[i].clone()).collect();
    let seed = data_seed(&sorted);

    let max_k = config.max_k.min(sorted.len() - 1);
    let tried: Vec<(usize, KMeans, f64)> = (2..=max_k)
        .into_par_iter()
        .map(|k| {
            let km = kmeans_with(&sorted, k, seed, &config.kmeans)?;
            let s = match silhouette(&sorted, &km.assignments, config.inter_cluster) {
                Ok(s) => s.mean,
                Err(Error::SingleCluster) => 0.0,
                Err(e) => return Err(e),
            };
            Ok((k, km, s))
        })
        .collect::<Result<_>>()?;

    let mut chosen: Option<&(usize, KMeans, f64)> = None;
    for t in &tried {
        if chosen.is_none_or(|c| t.2 > c.2) {
            chosen = Some(t);
        }
    }
    let silhouettes: Vec<(usize, f64)> = tried.iter().map(|t| (t.0, t.2)).collect();

    let (k, sorted_assign, centres) = match chosen {
        Some((k, km, s)) if *s >= config.min_silhouette => (*k, km.assignments.clone(), km.centroids.clone()),
        _ => {
            let dim = sorted[0].len();
            let mean = (0..dim).map(|d| sorted.iter().map(|r| r[d]).sum::<f64>() / sorted.len() as f64).collect();
            (1, vec![0; sorted.len()], vec![mean])
        }
    };
    let mut assignments = vec![0; optima.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = sorted_assign[pos];
    }

    // number clusters by first appearance in start-time order
    let mut by_time: Vec<usize> = (0..optima.len()).collect();
    by_time.sort_by(|&a, &b| optima[a].start_time.total_cmp(&optima[b].start_time).then(optima[a].window_id.cmp(&optima[b].window_id)));
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for &i in &by_time {
        let a = assignments[i];
        if relabel[a] == usize::MAX {
            relabel[a] = next;
            next += 1;
        }
    }
    assignments.iter_mut().for_each(|a| *a = relabel[*a]);
    let mut ordered_centres = vec![Vec::new(); k];
    for (old, c) in centres.into_iter().enumerate() {
        ordered_centres[relabel[old]] = c;
    }

    let (lo, hi) = design_bounds();
    let candidates = ordered_centres
        .iter()
        .enumerate()
        .map(|(c, centre)| {
            let x: Vec<f64> = (0..3).map(|d| (centre[d] * scales[d] + means[d]).clamp(lo[d], hi[d])).collect();
            let shape = settings.shape([x[0], x[1], x[2]])?;
            let members = by_time.iter().filter(|&&i| assignments[i] == c).map(|&i| optima[i].window_id.clone()).collect();
            candidate(shape, members, settings)
        })
        .collect::<Result<Vec<_>>>()?;

    let report = ClusteringReport {
        k,
        silhouettes,
        assignments,
        feature_names: names,
        feature_means: means,
        feature_scales: scales,
        single_group: k == 1,
    };
    Ok((candidates, report))
}

/// Frequency grid used for candidate FRF summaries.
pub fn frf_grid(fundamental_hz: f64) -> Vec<f64> {
    linear_grid(0.0, 3.0 * fundamental_hz, 601)
}

fn candidate(shape: ShapeParams, members: Vec<String>, settings: &ModelSettings) -> Result<DesignCandidate> {
    let reduced = settings.analyze(&shape)?;
    let f1 = reduced.fundamental_hz();
    let curve = frf(&reduced, &frf_grid(f1));
    let (peak_hz, peak_magnitude) = curve.peak().unwrap_or((f1, 0.0));
    Ok(DesignCandidate {
        shape,
        members,
        fundamental_hz: f1,
        frf: FrfSummary { peak_hz, peak_magnitude },
        window_energies: Vec::new(),
        total_energy: None,
    })
}
