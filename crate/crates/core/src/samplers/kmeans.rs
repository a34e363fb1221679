use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use rayon::prelude::*;

use super::encoding::{encoding_error, nearest_assignment, sq_dist};
use super::weight::{weights_from_embedding, WeightFn};
use crate::error::{Error, Result};
use crate::matcore::IndexSet;
use crate::rng;

pub const DEFAULT_KMEANS_ITERS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansResult {
    /// Snapped centers, i.e. the rows of `x` at `representatives`.
    pub centers: Array2<f64>,
    /// Position in `representatives` of the center each point encodes to.
    pub assignment: Vec<usize>,
    pub representatives: IndexSet,
    pub weighted_error: f64,
    pub iterations_run: usize,
    /// Weighted objective before snapping: entry `t` is measured with the
    /// centers after `t` Lloyd updates and nearest-center assignment.
    pub objective_trace: Vec<f64>,
}

/// Importance-weighted k-means over the rows of `x`, snapped to in-sample
/// representatives.
pub fn weighted_kmeans(
    x: ArrayView2<'_, f64>,
    k: usize,
    w: &WeightFn,
    iters: usize,
    seed: u64,
) -> Result<KmeansResult> {
    let n = x.nrows();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("embedding contains non-finite values"));
    }
    let weights = weights_from_embedding(x, w);
    let eligible: Vec<usize> = (0..n).filter(|&l| weights[l] > 0.0).collect();
    let distinct = count_distinct(x, &eligible);
    if k == 0 || distinct < k {
        return Err(Error::InsufficientPoints {
            needed: k.max(1),
            available: distinct,
        });
    }

    let mut centers = seed_centers(x, &weights, &eligible, k, seed);
    let mut assign = assign_nearest(x, centers.view());
    let mut trace = vec![objective(x, &weights, centers.view(), &assign)];
    let mut iterations_run = 0;
    for _ in 0..iters {
        update_centers(x, &weights, &assign, &mut centers);
        let next = assign_nearest(x, centers.view());
        iterations_run += 1;
        trace.push(objective(x, &weights, centers.view(), &next));
        let settled = next == assign;
        assign = next;
        if settled {
            break;
        }
    }

    let representatives = snap(x, &weights, &eligible, centers.view(), &assign, k)?;
    let assignment = nearest_assignment(x, &representatives)?;
    let weighted_error = encoding_error(x, &representatives, &assignment, w)?;
    let centers = x.select(ndarray::Axis(0), representatives.as_slice());
    Ok(KmeansResult {
        centers,
        assignment,
        representatives,
        weighted_error,
        iterations_run,
        objective_trace: trace,
    })
}

fn count_distinct(x: ArrayView2<'_, f64>, subset: &[usize]) -> usize {
    let mut keys: Vec<Vec<u64>> = subset
        .iter()
        // +0.0 so that -0.0 and 0.0 compare equal
        .map(|&l| x.row(l).iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Picks the first index whose running mass exceeds `target`.
fn scan(masses: impl Iterator<Item = (usize, f64)>, target: f64) -> Option<usize> {
    let mut acc = 0.0;
    let mut last = None;
    for (l, m) in masses {
        if m <= 0.0 {
            continue;
        }
        acc += m;
        last = Some(l);
        if acc > target {
            return Some(l);
        }
    }
    last
}

fn seed_centers(x: ArrayView2<'_, f64>, weights: &[f64], eligible: &[usize], k: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng::seeded(seed);
    let mut centers = Array2::zeros((k, x.ncols()));
    let total: f64 = eligible.iter().map(|&l| weights[l]).sum();
    let first = scan(eligible.iter().map(|&l| (l, weights[l])), rng.random::<f64>() * total)
        .expect("at least one eligible point");
    centers.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = eligible.iter().map(|&l| sq_dist(x.row(l), x.row(first))).collect();
    for c in 1..k {
        let mass: f64 = eligible.iter().zip(&d2).map(|(&l, d)| weights[l] * d).sum();
        let pick = scan(
            eligible.iter().zip(&d2).map(|(&l, d)| (l, weights[l] * d)),
            rng.random::<f64>() * mass,
        )
        .expect("enough distinct points were verified");
        centers.row_mut(c).assign(&x.row(pick));
        for (slot, &l) in d2.iter_mut().zip(eligible) {
            *slot = slot.min(sq_dist(x.row(l), x.row(pick)));
        }
    }
    centers
}

fn assign_nearest(x: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> Vec<usize> {
    (0..x.nrows())
        .into_par_iter()
        .map(|l| {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.rows().into_iter().enumerate() {
                let d = sq_dist(x.row(l), center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        })
        .collect()
}

fn objective(x: ArrayView2<'_, f64>, weights: &[f64], centers: ArrayView2<'_, f64>, assign: &[usize]) -> f64 {
    let terms: Vec<f64> = (0..x.nrows())
        .into_par_iter()
        .map(|l| {
            if weights[l] == 0.0 {
                0.0
            } else {
                weights[l] * sq_dist(x.row(l), centers.row(assign[l]))
            }
        })
        .collect();
    terms.iter().sum()
}

fn update_centers(x: ArrayView2<'_, f64>, weights: &[f64], assign: &[usize], centers: &mut Array2<f64>) {
    let k = centers.nrows();
    let mut sums = Array2::<f64>::zeros(centers.raw_dim());
    let mut mass = vec![0.0; k];
    for (l, &c) in assign.iter().enumerate() {
        if weights[l] > 0.0 {
            sums.row_mut(c).scaled_add(weights[l], &x.row(l));
            mass[c] += weights[l];
        }
    }
    let mut empty = Vec::new();
    for (c, &mc) in mass.iter().enumerate() {
        if mc > 0.0 {
            let mean = &sums.row(c) / mc;
            centers.row_mut(c).assign(&mean);
        } else {
            empty.push(c);
        }
    }
    if empty.is_empty() {
        return;
    }
    // Re-seed each empty center at the point farthest (in weighted
    // distance) from its current center.
    let mut far: Vec<(f64, usize)> = (0..x.nrows())
        .filter(|&l| weights[l] > 0.0)
        .map(|l| (weights[l] * sq_dist(x.row(l), centers.row(assign[l])), l))
        .collect();
    far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (c, (_, l)) in empty.into_iter().zip(far) {
        centers.row_mut(c).assign(&x.row(l));
    }
}

/// Replaces each center by its closest eligible in-sample point, handing out
/// points greedily to the heaviest clusters first so no point is used twice.
fn snap(
    x: ArrayView2<'_, f64>,
    weights: &[f64],
    eligible: &[usize],
    centers: ArrayView2<'_, f64>,
    assign: &[usize],
    k: usize,
) -> Result<IndexSet> {
    let mut mass = vec![0.0; k];
    for (l, &c) in assign.iter().enumerate() {
        mass[c] += weights[l];
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let mut taken = vec![false; x.nrows()];
    let mut reps = vec![0; k];
    for c in order {
        let mut best = (f64::INFINITY, usize::MAX);
        for &l in eligible {
            if taken[l] {
                continue;
            }
            let d = sq_dist(x.row(l), centers.row(c));
            if d < best.0 {
                best = (d, l);
            }
        }
        taken[best.1] = true;
        reps[c] = best.1;
    }
    IndexSet::new(reps, x.nrows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn distinct_points_encode_exactly() {
        let x = array![[0.0, 1.0], [5.0, 5.0], [-3.0, 2.0]];
        let r = weighted_kmeans(x.view(), 3, &WeightFn::Constant, 5, 1).unwrap();
        assert_eq!(r.weighted_error, 0.0);
        assert_eq!(r.representatives.sorted().as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn two_groups_on_a_line() {
        // Optimal 2-partition by enumeration over the 2^5 labelings.
        let pts = [0.0, 1.0, 2.0, 10.0, 11.0];
        let cost = |mask: u32| -> f64 {
            let mut total = 0.0;
            for side in [0, 1] {
                let g: Vec<f64> = (0..5).filter(|i| (mask >> i & 1) == side).map(|i| pts[i]).collect();
                if g.is_empty() {
                    return f64::INFINITY;
                }
                let mean = g.iter().sum::<f64>() / g.len() as f64;
                total += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            }
            total
        };
        let best = (0u32..32).min_by(|&a, &b| cost(a).total_cmp(&cost(b))).unwrap();
        let x = Array2::from_shape_vec((5, 1), pts.to_vec()).unwrap();
        for seed in 0..20 {
            let r = weighted_kmeans(x.view(), 2, &WeightFn::Constant, 5, seed).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let same_oracle = (best >> i & 1) == (best >> j & 1);
                    assert_eq!(r.assignment[i] == r.assignment[j], same_oracle, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn zero_weight_points_do_not_move_the_objective() {
        let x = array![[1.0], [1.1], [5.0], [5.2], [0.0], [0.0]];
        let w = WeightFn::Step { threshold: 0.5 };
        let r = weighted_kmeans(x.view(), 2, &w, 5, 4).unwrap();
        let mut moved = r.assignment.clone();
        moved[4] = 1 - moved[4];
        moved[5] = 1 - moved[5];
        let e = encoding_error(x.view(), &r.representatives, &moved, &w).unwrap();
        assert_eq!(e, r.weighted_error);
        assert!(!r.representatives.contains(4) && !r.representatives.contains(5));
    }

    #[test]
    fn too_few_points() {
        let x = array![[1.0], [1.0], [0.0]];
        assert!(matches!(
            weighted_kmeans(x.view(), 2, &WeightFn::Power { exponent: 2.0 }, 5, 0),
            Err(Error::InsufficientPoints {
                needed: 2,
                available: 1
            })
        ));
        assert!(weighted_kmeans(x.view(), 2, &WeightFn::Constant, 0, 0).is_ok());
    }
}
