//! RBF-kernel support vector machine trained from scratch with sequential
//! minimal optimization, plus a one-vs-one multiclass wrapper.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
}

/// Solver and kernel settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box constraint.
    pub c: f64,
    /// RBF width.
    pub gamma: f64,
    /// Largest tolerated KKT violation after training.
    pub kkt_tol: f64,
    /// Work budget: one pass allows up to `n` working-pair updates.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            // 1 / histogram length at the default vocabulary size of 50.
            gamma: 0.02,
            kkt_tol: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmParams {
    /// Defaults with the RBF width set to `1 / dim`.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            gamma: 1.0 / dim.max(1) as f64,
            ..Self::default()
        }
    }
}

/// `exp(-gamma * ||a - b||^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if a.len() != b.len() {
        return Err(SvmError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok((-gamma * sq).exp())
}

/// Dual representation of a trained binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// Per-support-vector label, +1 or -1.
    pub sv_labels: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl BinarySvmModel {
    /// Dual decision function; the sign is the predicted label.
    pub fn decision_value(&self, v: &[f64]) -> Result<f64, SvmError> {
        let mut sum = self.bias;
        for ((sv, &alpha), &label) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.sv_labels)
        {
            sum += alpha * label * rbf_kernel(sv, v, self.gamma)?;
        }
        Ok(sum)
    }
}

/// Alphas below this are treated as zero when extracting support vectors.
const SV_THRESHOLD: f64 = 1e-8;

/// SMO working state for one binary problem.
struct SmoProblem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: Vec<f64>,
    gamma: f64,
    n: usize,
    c: f64,
    alphas: Vec<f64>,
    /// Bias-free margins `sum_j alpha_j y_j K(j, t)`, kept incrementally.
    f: Vec<f64>,
}

/// Kernel matrices up to this size are precomputed densely.
const DENSE_KERNEL_LIMIT: usize = 4096;

impl<'a> SmoProblem<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], gamma: f64) -> Result<Self, SvmError> {
        let n = x.len();
        let mut kernel = Vec::new();
        if n <= DENSE_KERNEL_LIMIT {
            kernel = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let k = rbf_kernel(&x[i], &x[j], gamma)?;
                    kernel[i * n + j] = k;
                    kernel[j * n + i] = k;
                }
            }
        }
        Ok(Self {
            x,
            y,
            kernel,
            gamma,
            n,
            c: 0.0,
            alphas: vec![0.0; n],
            f: vec![0.0; n],
        })
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        if self.kernel.is_empty() {
            rbf_kernel(&self.x[i], &self.x[j], self.gamma).expect("same-problem dimensions")
        } else {
            self.kernel[i * self.n + j]
        }
    }

    /// The bias value that would make sample `t` sit exactly on its margin.
    #[inline]
    fn margin_bias(&self, t: usize) -> f64 {
        self.y[t] - self.f[t]
    }

    /// Sample may move "up" (increase its alpha if positive class,
    /// decrease the decision otherwise).
    #[inline]
    fn in_up_set(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alphas[t] < self.c - SV_THRESHOLD)
            || (self.y[t] < 0.0 && self.alphas[t] > SV_THRESHOLD)
    }

    #[inline]
    fn in_low_set(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alphas[t] > SV_THRESHOLD)
            || (self.y[t] < 0.0 && self.alphas[t] < self.c - SV_THRESHOLD)
    }

    /// Maximal violating pair: the up-set sample with the largest margin
    /// bias and the low-set sample with the smallest. The gap is the
    /// worst-case KKT violation for any bias inside it; at most `gap`
    /// remains after the final bias lands within the interval.
    fn violating_pair(&self) -> Option<(usize, usize, f64)> {
        let mut up: Option<(usize, f64)> = None;
        let mut low: Option<(usize, f64)> = None;
        for t in 0..self.n {
            let d = self.margin_bias(t);
            if self.in_up_set(t) && up.map_or(true, |(_, best)| d > best) {
                up = Some((t, d));
            }
            if self.in_low_set(t) && low.map_or(true, |(_, best)| d < best) {
                low = Some((t, d));
            }
        }
        match (up, low) {
            (Some((i, di)), Some((j, dj))) => Some((i, j, di - dj)),
            _ => None,
        }
    }

    /// Low-set partners for an up-set `i`, most violating first.
    fn low_partners(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n)
            .filter(|&t| t != i && self.in_low_set(t))
            .collect();
        out.sort_by(|&a, &b| {
            self.margin_bias(a)
                .partial_cmp(&self.margin_bias(b))
                .unwrap()
                .then(a.cmp(&b))
        });
        out
    }

    /// Up-set partners for a low-set `j`, most violating first.
    fn up_partners(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n)
            .filter(|&t| t != j && self.in_up_set(t))
            .collect();
        out.sort_by(|&a, &b| {
            self.margin_bias(b)
                .partial_cmp(&self.margin_bias(a))
                .unwrap()
                .then(a.cmp(&b))
        });
        out
    }

    /// Jointly optimize the pair; returns whether alphas moved.
    fn update_pair(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai_old, aj_old) = (self.alphas[i], self.alphas[j]);
        // E_i - E_j with the bias cancelled.
        let e_gap = (self.f[i] - self.y[i]) - (self.f[j] - self.y[j]);

        let (low, high) = if (yi - yj).abs() > 0.5 {
            let diff = aj_old - ai_old;
            (diff.max(0.0), (self.c + diff).min(self.c))
        } else {
            let sum = ai_old + aj_old;
            ((sum - self.c).max(0.0), sum.min(self.c))
        };
        if high - low < 1e-12 {
            return false;
        }

        let eta = self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j);
        if eta <= 1e-12 {
            // Degenerate direction (duplicate points); no ascent possible.
            return false;
        }
        let mut aj = aj_old + yj * e_gap / eta;
        aj = aj.clamp(low, high);
        if (aj - aj_old).abs() < 1e-12 {
            return false;
        }
        let ai = (ai_old + yi * yj * (aj_old - aj)).clamp(0.0, self.c);

        let di = yi * (ai - ai_old);
        let dj = yj * (aj - aj_old);
        for t in 0..self.n {
            self.f[t] += di * self.k(i, t) + dj * self.k(j, t);
        }
        self.alphas[i] = ai;
        self.alphas[j] = aj;
        true
    }

    /// Dual objective `sum(alpha) - 1/2 sum alpha_i alpha_j y_i y_j K_ij`.
    fn dual_objective(&self) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.n {
            if self.alphas[i] == 0.0 {
                continue;
            }
            for j in 0..self.n {
                if self.alphas[j] == 0.0 {
                    continue;
                }
                quad += self.alphas[i] * self.alphas[j] * self.y[i] * self.y[j] * self.k(i, j);
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

fn train_binary_impl(
    x: &[Vec<f64>],
    y: &[f64],
    params: &SvmParams,
    mut objective_trace: Option<&mut Vec<f64>>,
) -> Result<BinarySvmModel, SvmError> {
    if x.len() < 2 {
        return Err(SvmError::TooFewSamples(x.len()));
    }
    let dim = x[0].len();
    for v in x {
        if v.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let has_pos = y.iter().any(|&l| l > 0.0);
    let has_neg = y.iter().any(|&l| l < 0.0);
    if !has_pos || !has_neg {
        return Err(SvmError::SingleClassInput);
    }

    let mut problem = SmoProblem::new(x, y, params.gamma)?;
    problem.c = params.c;
    // Converge below half the advertised tolerance so the final bias
    // placement keeps every sample within `kkt_tol`.
    let inner_tol = params.kkt_tol * 0.5;
    let max_updates = params.max_passes.saturating_mul(problem.n);
    let mut updates = 0usize;
    let mut final_gap = (0.0, 0.0);

    while updates < max_updates {
        let Some((i, j, gap)) = problem.violating_pair() else {
            break;
        };
        final_gap = (problem.margin_bias(i), problem.margin_bias(j));
        if gap <= inner_tol {
            break;
        }
        let mut moved = problem.update_pair(i, j);
        if !moved {
            // Degenerate extreme pair (duplicates); walk the remaining
            // partners of each end before giving up.
            for t in problem.low_partners(i) {
                if t != j && problem.update_pair(i, t) {
                    moved = true;
                    break;
                }
            }
            if !moved {
                for t in problem.up_partners(j) {
                    if t != i && problem.update_pair(t, j) {
                        moved = true;
                        break;
                    }
                }
            }
        }
        if !moved {
            break;
        }
        updates += 1;
        if let Some(trace) = objective_trace.as_mut() {
            trace.push(problem.dual_objective());
        }
    }

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for i in 0..problem.n {
        if problem.alphas[i] > SV_THRESHOLD {
            support_vectors.push(x[i].clone());
            alphas.push(problem.alphas[i]);
            sv_labels.push(y[i]);
        }
    }
    // Bias averaged over unbounded support vectors; with none, the
    // midpoint of the final violating-pair interval.
    let mut bias_sum = 0.0;
    let mut bias_count = 0usize;
    for i in 0..problem.n {
        let a = problem.alphas[i];
        if a > SV_THRESHOLD && a < params.c - SV_THRESHOLD {
            bias_sum += problem.margin_bias(i);
            bias_count += 1;
        }
    }
    let bias = if bias_count > 0 {
        bias_sum / bias_count as f64
    } else {
        0.5 * (final_gap.0 + final_gap.1)
    };

    Ok(BinarySvmModel {
        support_vectors,
        alphas,
        sv_labels,
        bias,
        gamma: params.gamma,
    })
}

/// Train a binary classifier with SMO. Labels are +1 / -1.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<BinarySvmModel, SvmError> {
    train_binary_impl(x, y, params, None)
}

#[cfg(test)]
pub(crate) fn train_binary_traced(
    x: &[Vec<f64>],
    y: &[f64],
    params: &SvmParams,
    trace: &mut Vec<f64>,
) -> Result<BinarySvmModel, SvmError> {
    train_binary_impl(x, y, params, Some(trace))
}

/// One-vs-one multiclass classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    /// Sorted class names; pair indices refer to this list.
    pub class_names: Vec<String>,
    pub pairwise: Vec<PairwiseModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseModel {
    /// Index of the class mapped to label +1.
    pub class_a: usize,
    /// Index of the class mapped to label -1.
    pub class_b: usize,
    pub model: BinarySvmModel,
}

/// Train one binary model per unordered class pair.
pub fn train_multiclass(
    x: &[Vec<f64>],
    labels: &[String],
    params: &SvmParams,
) -> Result<MulticlassSvmModel, SvmError> {
    assert_eq!(x.len(), labels.len());
    let mut class_names: Vec<String> = labels.to_vec();
    class_names.sort();
    class_names.dedup();
    if class_names.len() < 2 {
        return Err(SvmError::SingleClassInput);
    }
    let index_of = |name: &str| class_names.iter().position(|c| c == name).unwrap();
    let sample_class: Vec<usize> = labels.iter().map(|l| index_of(l)).collect();

    let mut pairwise = Vec::with_capacity(class_names.len() * (class_names.len() - 1) / 2);
    for a in 0..class_names.len() {
        for b in a + 1..class_names.len() {
            let mut px: Vec<Vec<f64>> = Vec::new();
            let mut py: Vec<f64> = Vec::new();
            for (i, &cls) in sample_class.iter().enumerate() {
                if cls == a {
                    px.push(x[i].clone());
                    py.push(1.0);
                } else if cls == b {
                    px.push(x[i].clone());
                    py.push(-1.0);
                }
            }
            let model = train_binary(&px, &py, params)?;
            pairwise.push(PairwiseModel {
                class_a: a,
                class_b: b,
                model,
            });
        }
    }
    Ok(MulticlassSvmModel {
        class_names,
        pairwise,
    })
}

impl MulticlassSvmModel {
    /// Majority vote over the pairwise decisions. Vote ties go to the tied
    /// class with the largest aggregate |decision value|, then to class-name
    /// order.
    pub fn predict(&self, v: &[f64]) -> Result<&str, SvmError> {
        let k = self.class_names.len();
        let mut votes = vec![0usize; k];
        let mut magnitude = vec![0.0f64; k];
        for pair in &self.pairwise {
            let d = pair.model.decision_value(v)?;
            let winner = if d >= 0.0 { pair.class_a } else { pair.class_b };
            votes[winner] += 1;
            magnitude[pair.class_a] += d.abs();
            magnitude[pair.class_b] += d.abs();
        }
        let top = *votes.iter().max().expect("at least two classes");
        let mut best: Option<usize> = None;
        for c in 0..k {
            if votes[c] != top {
                continue;
            }
            match best {
                None => best = Some(c),
                Some(b) if magnitude[c] > magnitude[b] => best = Some(c),
                _ => {}
            }
        }
        Ok(&self.class_names[best.expect("nonempty vote")])
    }
}
