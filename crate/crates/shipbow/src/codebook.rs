//! Visual vocabulary: k-means over pooled descriptors and bag-of-words
//! histogram encoding against the learned centers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::Descriptor;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("need at least {k} descriptors for {k} clusters, got {got}")]
    TooFewDescriptors { k: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot encode an empty descriptor set")]
    EmptyDescriptorSet,
}

/// k-means++ restarts; the run with the lowest final inertia wins.
const RESTARTS: usize = 5;

/// The dictionary: `k` cluster centers in descriptor space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    k: usize,
    dim: usize,
    /// Row-major `k x dim`.
    centers: Vec<f64>,
    /// Seed the centers were fitted with; kept for provenance.
    seed: u64,
}

/// L1-normalized word frequencies of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct BowHistogram {
    frequencies: Vec<f64>,
}

impl BowHistogram {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn nearest(point: &[f64], centers: &[f64], k: usize, dim: usize) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..k {
        let d = sq_dist(point, &centers[c * dim..(c + 1) * dim]);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// One full k-means++ / Lloyd run. Returns the centers, the per-iteration
/// inertia trace and the final inertia.
fn lloyd_run(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>, f64) {
    let point = |i: usize| &points[i * dim..(i + 1) * dim];

    // Greedy k-means++ seeding: first center uniform; every further center
    // draws several candidates proportionally to the squared distance to
    // the nearest chosen center and keeps the one that lowers the overall
    // potential the most.
    let mut centers = vec![0.0f64; k * dim];
    let first = rng.random_range(0..n);
    centers[..dim].copy_from_slice(point(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(point(i), &centers[..dim])).collect();
    let n_candidates = 2 + (k as f64).ln().floor() as usize;
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let mut best_pick = 0usize;
        let mut best_potential = f64::INFINITY;
        for _ in 0..n_candidates {
            let pick = if total <= 0.0 {
                // All remaining points coincide with a center.
                rng.random_range(0..n)
            } else {
                let threshold = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    acc += w;
                    if acc >= threshold {
                        pick = i;
                        break;
                    }
                }
                pick
            };
            let potential: f64 = (0..n)
                .map(|i| d2[i].min(sq_dist(point(i), point(pick))))
                .sum();
            if potential < best_potential {
                best_potential = potential;
                best_pick = pick;
            }
        }
        centers[c * dim..(c + 1) * dim].copy_from_slice(point(best_pick));
        for i in 0..n {
            let d = sq_dist(point(i), point(best_pick));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut final_inertia = f64::INFINITY;
    for _iter in 0..max_iter {
        // Assignment step; inertia is measured against the current centers.
        let mut inertia = 0.0f64;
        for i in 0..n {
            let (c, d) = nearest(point(i), &centers, k, dim);
            assignment[i] = c;
            inertia += d;
        }
        if let Some(&prev) = trace.last() {
            // Lloyd's iterations never increase the objective.
            debug_assert!(inertia <= prev * (1.0 + 1e-12) + 1e-12);
        }
        trace.push(inertia);
        final_inertia = inertia;

        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        // Repair empty clusters with the point farthest from its center.
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_i = 0usize;
            let mut far_d = -1.0f64;
            for i in 0..n {
                if counts[assignment[i]] <= 1 {
                    continue;
                }
                let d = sq_dist(point(i), &centers[assignment[i] * dim..(assignment[i] + 1) * dim]);
                if d > far_d {
                    far_d = d;
                    far_i = i;
                }
            }
            counts[assignment[far_i]] -= 1;
            assignment[far_i] = c;
            counts[c] = 1;
        }

        let mut new_centers = vec![0.0f64; k * dim];
        for i in 0..n {
            let base = assignment[i] * dim;
            for (j, v) in point(i).iter().enumerate() {
                new_centers[base + j] += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    new_centers[c * dim + j] /= counts[c] as f64;
                }
            } else {
                new_centers[c * dim..(c + 1) * dim]
                    .copy_from_slice(&centers[c * dim..(c + 1) * dim]);
            }
        }

        let mut max_shift = 0.0f64;
        for c in 0..k {
            let shift = sq_dist(
                &centers[c * dim..(c + 1) * dim],
                &new_centers[c * dim..(c + 1) * dim],
            )
            .sqrt();
            max_shift = max_shift.max(shift);
        }
        centers = new_centers;
        if max_shift < tol {
            break;
        }
    }
    // Inertia after the last center update.
    let mut inertia = 0.0f64;
    for i in 0..n {
        inertia += nearest(point(i), &centers, k, dim).1;
    }
    trace.push(inertia);
    final_inertia = final_inertia.min(inertia);
    (centers, trace, final_inertia)
}

/// Fit the dictionary plus the per-iteration inertia trace of every
/// restart; the traces let callers check Lloyd's monotonicity.
pub fn kmeans_fit_traced(
    descriptors: &[Descriptor],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(Codebook, Vec<Vec<f64>>), CodebookError> {
    if descriptors.len() < k {
        return Err(CodebookError::TooFewDescriptors {
            k,
            got: descriptors.len(),
        });
    }
    let dim = descriptors[0].dim();
    for d in descriptors {
        if d.dim() != dim {
            return Err(CodebookError::DimensionMismatch {
                expected: dim,
                got: d.dim(),
            });
        }
    }
    let n = descriptors.len();
    let mut points = Vec::with_capacity(n * dim);
    for d in descriptors {
        points.extend(d.values().iter().map(|&v| v as f64));
    }

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut traces = Vec::with_capacity(RESTARTS);
    for _ in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let (centers, trace, inertia) = lloyd_run(&points, n, dim, k, max_iter, tol, &mut rng);
        traces.push(trace);
        let better = match &best {
            Some((_, best_inertia)) => inertia < *best_inertia,
            None => true,
        };
        if better {
            best = Some((centers, inertia));
        }
    }
    let (centers, _) = best.expect("at least one restart");
    Ok((
        Codebook {
            k,
            dim,
            centers,
            seed,
        },
        traces,
    ))
}

/// Fit the dictionary: k-means++ seeding, Lloyd iterations until the center
/// movement drops below `tol` or `max_iter` is reached, best of five
/// restarts.
pub fn kmeans_fit(
    descriptors: &[Descriptor],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Codebook, CodebookError> {
    kmeans_fit_traced(descriptors, k, seed, max_iter, tol).map(|(cb, _)| cb)
}

impl Codebook {
    pub fn from_parts(k: usize, dim: usize, centers: Vec<f64>, seed: u64) -> Option<Self> {
        (k >= 1 && dim >= 1 && centers.len() == k * dim && centers.iter().all(|v| v.is_finite()))
            .then_some(Self {
                k,
                dim,
                centers,
                seed,
            })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the closest center, ties to the lowest index.
    pub fn nearest_center(&self, d: &Descriptor) -> Result<usize, CodebookError> {
        if d.dim() != self.dim {
            return Err(CodebookError::DimensionMismatch {
                expected: self.dim,
                got: d.dim(),
            });
        }
        let point: Vec<f64> = d.values().iter().map(|&v| v as f64).collect();
        Ok(nearest(&point, &self.centers, self.k, self.dim).0)
    }

    /// Encode a descriptor set as an L1-normalized word histogram.
    pub fn encode_bow(&self, descriptors: &[Descriptor]) -> Result<BowHistogram, CodebookError> {
        if descriptors.is_empty() {
            return Err(CodebookError::EmptyDescriptorSet);
        }
        let mut counts = vec![0usize; self.k];
        for d in descriptors {
            counts[self.nearest_center(d)?] += 1;
        }
        let total = descriptors.len() as f64;
        Ok(BowHistogram {
            frequencies: counts.iter().map(|&c| c as f64 / total).collect(),
        })
    }
}
