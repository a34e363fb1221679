use ndarray::{ArrayView1, ArrayView2};

use super::weight::{weights_from_embedding, WeightFn};
use crate::error::{Error, Result};
use crate::matcore::IndexSet;

pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest representative position for every row of `x`; ties go to the
/// earlier position in `reps`.
pub fn nearest_assignment(x: ArrayView2<'_, f64>, reps: &IndexSet) -> Result<Vec<usize>> {
    if reps.domain_size() != x.nrows() {
        return Err(Error::dims(format!(
            "representatives index {} points, embedding has {}",
            reps.domain_size(),
            x.nrows()
        )));
    }
    if reps.is_empty() && x.nrows() > 0 {
        return Err(Error::invalid("no representatives"));
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let mut best = (f64::INFINITY, 0);
            for (pos, r) in reps.iter().enumerate() {
                let d = sq_dist(row, x.row(r));
                if d < best.0 {
                    best = (d, pos);
                }
            }
            best.1
        })
        .collect())
}

/// `Σ_l ‖x_l − x_{reps[s(l)]}‖² · Υ(‖x_l‖)`.
pub fn encoding_error(x: ArrayView2<'_, f64>, reps: &IndexSet, assignment: &[usize], w: &WeightFn) -> Result<f64> {
    if assignment.len() != x.nrows() || reps.domain_size() != x.nrows() {
        return Err(Error::dims(format!(
            "assignment covers {} points, representatives index {}, embedding has {}",
            assignment.len(),
            reps.domain_size(),
            x.nrows()
        )));
    }
    let weights = weights_from_embedding(x, w);
    let mut total = 0.0;
    for (l, &pos) in assignment.iter().enumerate() {
        let Some(&r) = reps.as_slice().get(pos) else {
            return Err(Error::IndexOutOfRange {
                index: pos,
                domain: reps.len(),
            });
        };
        if weights[l] != 0.0 {
            total += weights[l] * sq_dist(x.row(l), x.row(r));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn examples() {
        let x = array![[0.0], [2.0]];
        let own = IndexSet::full(2);
        assert_eq!(
            encoding_error(x.view(), &own, &[0, 1], &WeightFn::Constant).unwrap(),
            0.0
        );
        let one = IndexSet::new(vec![0], 2).unwrap();
        assert_eq!(
            encoding_error(x.view(), &one, &[0, 0], &WeightFn::Constant).unwrap(),
            4.0
        );
        assert!(encoding_error(x.view(), &one, &[0, 1], &WeightFn::Constant).is_err());
    }

    #[test]
    fn nearest_assignment_beats_every_alternative() {
        let mut rng = seeded(5);
        for trial in 0..40 {
            let n = 2 + trial % 5;
            let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-3.0..3.0));
            let reps = IndexSet::new(vec![0, n - 1], n).unwrap();
            let w = WeightFn::Power { exponent: 1.0 };
            let best = encoding_error(x.view(), &reps, &nearest_assignment(x.view(), &reps).unwrap(), &w).unwrap();
            for code in 0u32..1 << n {
                let a: Vec<usize> = (0..n).map(|l| (code >> l & 1) as usize).collect();
                let e = encoding_error(x.view(), &reps, &a, &w).unwrap();
                assert!(best <= e + 1e-12, "trial {trial}: {best} > {e}");
            }
        }
    }
}
