//! Encoding-error statistics, the sketching error bound and its predicted
//! drop, and the sampling/error correlation experiment.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    frob_norm, pinv_truncated, thin_svd, DenseMat, IndexSet, MatrixSource, RankSpec, DEFAULT_RANK_TOL,
};
use crate::rng;
use crate::samplers::{encoding_error, nearest_assignment, uniform_indices, weighted_kmeans, WeightFn};

/// Size of the largest cluster.
pub fn cluster_sizes(assignment: &[usize], k: usize) -> usize {
    let mut counts = vec![0usize; k];
    for &a in assignment {
        if a < k {
            counts[a] += 1;
        }
    }
    counts.into_iter().max().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub theta: f64,
    pub include_tail: bool,
    pub tail_norm: f64,
}

impl BoundConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid(format!("theta must be positive, got {theta}")));
        }
        Ok(Self {
            theta,
            include_tail: false,
            tail_norm: 0.0,
        })
    }

    pub fn with_tail(mut self, tail_norm: f64) -> Result<Self> {
        if !(tail_norm.is_finite() && tail_norm >= 0.0) {
            return Err(Error::invalid("tail norm must be nonnegative"));
        }
        self.include_tail = true;
        self.tail_norm = tail_norm;
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub e_r: f64,
    pub e_c: f64,
    pub t_r: usize,
    pub t_c: usize,
    pub t: usize,
    pub w_pinv_norm: f64,
    pub k: usize,
    pub bound_value: f64,
}

/// `√(6kθ) T^{3/2} √(e_r + e_c) + kθT‖W†‖_F √(e_r e_c)` with
/// `T = max(T_r, T_c)`, plus the tail norm when requested.
pub fn theorem1_bound(
    e_r: f64,
    e_c: f64,
    t_r: usize,
    t_c: usize,
    k: usize,
    w_pinv_norm: f64,
    cfg: &BoundConfig,
) -> f64 {
    let t = t_r.max(t_c) as f64;
    let kt = k as f64 * cfg.theta;
    let first = (6.0 * kt).sqrt() * t.powf(1.5) * (e_r + e_c).sqrt();
    let second = kt * t * w_pinv_norm * (e_r * e_c).sqrt();
    let tail = if cfg.include_tail { cfg.tail_norm } else { 0.0 };
    first + second + tail
}

/// Encoding errors, cluster sizes and `‖W†‖_F` of one bilateral sample,
/// measured in the embeddings `p` (rows) and `q` (columns).
pub fn bound_report(
    p: ArrayView2<'_, f64>,
    q: ArrayView2<'_, f64>,
    rows: &IndexSet,
    cols: &IndexSet,
    w: &DenseMat,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    let (e_r, t_r) = side_stats(p, rows)?;
    let (e_c, t_c) = side_stats(q, cols)?;
    let w_pinv_norm = frob_norm(&pinv_truncated(w.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?);
    let k = rows.len().max(cols.len());
    Ok(BoundReport {
        e_r,
        e_c,
        t_r,
        t_c,
        t: t_r.max(t_c),
        w_pinv_norm,
        k,
        bound_value: theorem1_bound(e_r, e_c, t_r, t_c, k, w_pinv_norm, cfg),
    })
}

fn side_stats(x: ArrayView2<'_, f64>, reps: &IndexSet) -> Result<(f64, usize)> {
    let assignment = nearest_assignment(x, reps)?;
    let e = encoding_error(x, reps, &assignment, &WeightFn::Constant)?;
    Ok((e, cluster_sizes(&assignment, reps.len())))
}

/// `a / √b`, taken as zero when `a` is zero.
fn ratio_sqrt(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        (a / b).sqrt()
    }
}

/// Predicted minimum drop of the error bound from `pilot` to `followup`.
///
/// Uses the pilot cluster sizes and `‖W_p†‖_F`, the follow-up encoding
/// errors and the drops `Δ_r = e_r^p − e_r^f`, `Δ_c = e_c^p − e_c^f`, which
/// must both be nonnegative.
pub fn theorem2_gap(pilot: &BoundReport, followup: &BoundReport, k: usize, theta: f64) -> Result<f64> {
    let dr = pilot.e_r - followup.e_r;
    let dc = pilot.e_c - followup.e_c;
    if dr < 0.0 {
        return Err(Error::NegativeEncodingDrop {
            axis: "row",
            pilot: pilot.e_r,
            followup: followup.e_r,
        });
    }
    if dc < 0.0 {
        return Err(Error::NegativeEncodingDrop {
            axis: "column",
            pilot: pilot.e_c,
            followup: followup.e_c,
        });
    }
    let kt = k as f64 * theta;
    let (tr, tc) = (pilot.t_r as f64, pilot.t_c as f64);
    let first = ratio_sqrt(
        3.0 * kt * tc * tr * (tr + tc) * (dr + dc).powi(2),
        2.0 * (pilot.e_r + pilot.e_c),
    );
    let cross = dr * followup.e_c + dc * followup.e_r + dr * dc;
    let second = kt * pilot.w_pinv_norm * ratio_sqrt(tc * tr * cross * cross, pilot.e_r * pilot.e_c);
    Ok(first + second)
}

/// Both bounds evaluated with the pilot's cluster sizes and `‖W_p†‖_F`,
/// next to the predicted gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    pub psi_pilot: f64,
    pub psi_followup: f64,
    pub gap: f64,
}

impl GapCheck {
    pub fn bound_drop(&self) -> f64 {
        self.psi_pilot - self.psi_followup
    }

    pub fn holds(&self) -> bool {
        self.bound_drop() >= self.gap
    }
}

pub fn gap_check(pilot: &BoundReport, followup: &BoundReport, k: usize, theta: f64) -> Result<GapCheck> {
    let cfg = BoundConfig::new(theta)?;
    let psi = |e_r, e_c| theorem1_bound(e_r, e_c, pilot.t_r, pilot.t_c, k, pilot.w_pinv_norm, &cfg);
    Ok(GapCheck {
        psi_pilot: psi(pilot.e_r, pilot.e_c),
        psi_followup: psi(followup.e_r, followup.e_c),
        gap: theorem2_gap(pilot, followup, k, theta)?,
    })
}

/// Splits points into rounds: round `i` holds the `i`-th member of every
/// cluster, or the cluster's representative once the cluster is exhausted.
/// Every round lines up one-to-one with `reps`.
fn rounds(assignment: &[usize], reps: &IndexSet) -> Vec<Vec<usize>> {
    let k = reps.len();
    let mut members: Vec<Vec<usize>> = reps.iter().map(|r| vec![r]).collect();
    for (l, &c) in assignment.iter().enumerate() {
        if l != reps.as_slice()[c] {
            members[c].push(l);
        }
    }
    let t = members.iter().map(Vec::len).max().unwrap_or(0);
    (0..t)
        .map(|i| (0..k).map(|c| *members[c].get(i).unwrap_or(&members[c][0])).collect())
        .collect()
}

fn round_error(x: ArrayView2<'_, f64>, round: &[usize], reps: &IndexSet) -> f64 {
    round
        .iter()
        .zip(reps.iter())
        .map(|(&l, r)| {
            x.row(l)
                .iter()
                .zip(x.row(r).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Smallest `θ` for which every block-wise perturbation inequality used in
/// the bound's derivation holds on this sample.
///
/// Rows (columns) are grouped into rounds aligned with the sampled rows
/// (columns). For every pair of rounds the deviations of the block, of the
/// matching rows of `C` and of the matching columns of `R` from `W` are
/// compared with `k` times the round encoding errors. Returns infinity when
/// a deviation is nonzero while its encoding error is zero.
pub fn theta_hat(
    a: ArrayView2<'_, f64>,
    p: ArrayView2<'_, f64>,
    q: ArrayView2<'_, f64>,
    rows: &IndexSet,
    cols: &IndexSet,
) -> Result<f64> {
    let (m, n) = a.dim();
    if p.nrows() != m || q.nrows() != n || rows.domain_size() != m || cols.domain_size() != n {
        return Err(Error::dims("embeddings and index sets must match the matrix"));
    }
    let k = rows.len().max(cols.len()) as f64;
    let row_rounds = rounds(&nearest_assignment(p, rows)?, rows);
    let col_rounds = rounds(&nearest_assignment(q, cols)?, cols);
    let w = a.select(Axis(0), rows.as_slice()).select(Axis(1), cols.as_slice());
    let ratio = |dev: f64, enc: f64| -> f64 {
        if dev == 0.0 {
            0.0
        } else if enc == 0.0 {
            f64::INFINITY
        } else {
            dev / (k * enc)
        }
    };
    let mut theta: f64 = 0.0;
    let col_err: Vec<f64> = col_rounds.iter().map(|j| round_error(q, j, cols)).collect();
    let row_err: Vec<f64> = row_rounds.iter().map(|i| round_error(p, i, rows)).collect();
    for (ri, ei) in row_rounds.iter().zip(&row_err) {
        let a_rows = a.select(Axis(0), ri);
        let dc = &a_rows.select(Axis(1), cols.as_slice()) - &w;
        theta = theta.max(ratio(frob_norm(&dc).powi(2), *ei));
        for (cj, ej) in col_rounds.iter().zip(&col_err) {
            let da = &a_rows.select(Axis(1), cj) - &w;
            theta = theta.max(ratio(frob_norm(&da).powi(2), ei + ej));
        }
    }
    for (cj, ej) in col_rounds.iter().zip(&col_err) {
        let dr = &a.select(Axis(0), rows.as_slice()).select(Axis(1), cj) - &w;
        theta = theta.max(ratio(frob_norm(&dr).powi(2), *ej));
    }
    Ok(theta)
}

/// Relative error of every leading truncation `U_r S_r V_rᵀ`, `r = 1..=rank`,
/// from one streamed pass over `A`.
///
/// Uses `‖A − U_r S_r V_rᵀ‖² = ‖A‖² − 2 Σ s_i (UᵀAV)_ii + Σ s_i s_j (UᵀU)_ij (VᵀV)_ij`,
/// so factors need not be orthonormal. The subtraction limits resolution to
/// roughly `1e-8` relative error. Reads all of `A`.
pub fn truncation_errors(source: &MatrixSource, sk: &crate::Sketch) -> Result<Vec<f64>> {
    let (m, n) = source.shape();
    if sk.shape() != (m, n) {
        return Err(Error::dims(format!("sketch is {:?}, source is {m}x{n}", sk.shape())));
    }
    let (u, s, v) = (sk.u(), sk.s(), sk.v());
    let r = s.len();
    let mut total = 0.0;
    let mut g = Array2::<f64>::zeros((r, r));
    let mut j0 = 0;
    while j0 < n {
        let j1 = (j0 + crate::matcore::ERROR_BLOCK_COLS).min(n);
        let a = source.evaluation_block(j0, j1);
        total += a.iter().map(|x| x * x).sum::<f64>();
        g += &u.t().dot(&a).dot(&v.slice(ndarray::s![j0..j1, ..]));
        j0 = j1;
    }
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let gu = u.t().dot(u);
    let gv = v.t().dot(v);
    let mut resid = total;
    let mut out = Vec::with_capacity(r);
    for i in 0..r {
        resid -= 2.0 * s[i] * g[[i, i]];
        let mut cross = 0.0;
        for j in 0..i {
            cross += s[j] * gu[[i, j]] * gv[[i, j]];
        }
        resid += s[i] * (s[i] * gu[[i, i]] * gv[[i, i]] + 2.0 * cross);
        out.push((resid.max(0.0) / total).sqrt());
    }
    Ok(out)
}

/// How one side of a correlation trial was sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplingStrategy {
    Uniform,
    Kmeans {
        iters: usize,
    },
    /// The `k` nearest neighbours of a random anchor.
    Local,
    /// `k` points drawn uniformly from the `3k` smallest-norm points.
    LowNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTrial {
    pub e_r: f64,
    pub e_c: f64,
    pub sketch_error: f64,
    pub row_strategy: SamplingStrategy,
    pub col_strategy: SamplingStrategy,
}

fn draw_strategy(x: ArrayView2<'_, f64>, k: usize, rng: &mut rng::Rng) -> Result<(IndexSet, SamplingStrategy)> {
    let n = x.nrows();
    let sq: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    match rng.random_range(0..4) {
        0 => Ok((uniform_indices(n, k, rng.random())?, SamplingStrategy::Uniform)),
        1 => {
            let iters = rng.random_range(1..=5);
            let r = weighted_kmeans(x, k, &WeightFn::Constant, iters, rng.random())?;
            Ok((r.representatives.sorted(), SamplingStrategy::Kmeans { iters }))
        }
        2 => {
            let anchor = rng.random_range(0..n);
            let d: Vec<f64> = (0..n)
                .map(|l| {
                    x.row(l)
                        .iter()
                        .zip(x.row(anchor).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            order.truncate(k);
            order.sort_unstable();
            Ok((IndexSet::new(order, n)?, SamplingStrategy::Local))
        }
        _ => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]).then(a.cmp(&b)));
            order.truncate((3 * k).min(n));
            let mut picked: Vec<usize> = index::sample(rng, order.len(), k)
                .into_iter()
                .map(|p| order[p])
                .collect();
            picked.sort_unstable();
            Ok((IndexSet::new(picked, n)?, SamplingStrategy::LowNorm))
        }
    }
}

/// Exact embeddings `P = U S^½`, `Q = V S^½` of a dense matrix.
pub fn exact_embeddings(a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let svd = thin_svd(a)?;
    let root = svd.s.mapv(f64::sqrt);
    Ok((&svd.u * &root, &svd.v * &root))
}

/// `‖A − C W† R‖_F / ‖A‖_F` on an in-memory matrix.
fn skeleton_error(a: ArrayView2<'_, f64>, rows: &IndexSet, cols: &IndexSet, a_norm: f64) -> Result<f64> {
    let c = a.select(Axis(1), cols.as_slice());
    let r = a.select(Axis(0), rows.as_slice());
    let w = c.select(Axis(0), rows.as_slice());
    let approx = c
        .dot(&pinv_truncated(w.view(), RankSpec::Auto, DEFAULT_RANK_TOL)?)
        .dot(&r);
    Ok(frob_norm(&(&approx - &a)) / a_norm)
}

/// Repeated bilateral samplings of `source`, each side drawn from a random
/// mix of uniform, k-means, neighbourhood and low-norm strategies, with
/// encoding errors measured in the exact embeddings. Reads all of `A`.
pub fn correlation_experiment(
    source: &MatrixSource,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<CorrelationTrial>> {
    if trials == 0 {
        return Ok(Vec::new());
    }
    let (m, n) = source.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::TooManySamples {
            requested: k,
            available: m.min(n),
        });
    }
    let a = source.read_full().into_array();
    let a_norm = frob_norm(&a);
    if a_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let (p, q) = exact_embeddings(a.view())?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::seeded(rng::derive(seed, t as u64));
            let (rows, row_strategy) = draw_strategy(p.view(), k, &mut rng)?;
            let (cols, col_strategy) = draw_strategy(q.view(), k, &mut rng)?;
            let (e_r, _) = side_stats(p.view(), &rows)?;
            let (e_c, _) = side_stats(q.view(), &cols)?;
            Ok(CorrelationTrial {
                e_r,
                e_c,
                sketch_error: skeleton_error(a.view(), &rows, &cols, a_norm)?,
                row_strategy,
                col_strategy,
            })
        })
        .collect()
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `NaN` when
/// either side is constant or the inputs are shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    sxy / (sxx * syy).sqrt()
}

/// Tail `‖A − A_r‖_F` from the singular values beyond `r`.
pub fn tail_norm(singular_values: &[f64], r: usize) -> f64 {
    singular_values.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt()
}
