use ndarray::{s, Array1, Array2, ArrayView2};

use super::triple::SampledTriple;
use super::ZERO_NORM_TOL;
use crate::error::{Error, Result};
use crate::matcore::{frob_norm, thin_svd, RankSpec, Sketch, Svd, DEFAULT_RANK_TOL};

fn scale_columns(mut a: Array2<f64>, by: impl Fn(usize) -> f64) -> Array2<f64> {
    for (j, mut col) in a.columns_mut().into_iter().enumerate() {
        col *= by(j);
    }
    a
}

fn top(svd: &Svd, r: usize) -> (ArrayView2<'_, f64>, &[f64], ArrayView2<'_, f64>) {
    (
        svd.u.slice(s![.., ..r]),
        &svd.s.as_slice().expect("contiguous")[..r],
        svd.v.slice(s![.., ..r]),
    )
}

/// `C W_r† R` arranged as `U = C V_w Σ⁻¹`, `S = Σ`, `V = Rᵀ U_w Σ⁻¹`.
pub fn pseudo_skeleton(t: &SampledTriple, rank: RankSpec) -> Result<Sketch> {
    t.check()?;
    let svd = thin_svd(t.w.view())?;
    let r = svd.rank(rank, DEFAULT_RANK_TOL);
    let (uw, sw, vw) = top(&svd, r);
    let u = scale_columns(t.c.view().dot(&vw), |j| 1.0 / sw[j]);
    let v = scale_columns(t.r.view().t().dot(&uw), |j| 1.0 / sw[j]);
    Sketch::new(u, Array1::from(sw.to_vec()), v, false)
}

/// Sketch built from the singular vectors of `W` extrapolated through `C`
/// and `R`, each normalized to unit length, with the singular values of `W`
/// rescaled by `√(mn / (k_r k_c))`.
///
/// Components whose extrapolated vector has (numerically) zero norm are
/// dropped.
pub fn stabilized_sketch(t: &SampledTriple, m: usize, n: usize, rank: RankSpec) -> Result<Sketch> {
    t.check()?;
    if t.source_shape() != (m, n) {
        return Err(Error::dims(format!(
            "triple was drawn from {:?}, expected {m}x{n}",
            t.source_shape()
        )));
    }
    let (kr, kc) = t.w.shape();
    if kr == 0 || kc == 0 {
        return Ok(Sketch::zero(m, n));
    }
    let svd = thin_svd(t.w.view())?;
    let r = svd.rank(rank, DEFAULT_RANK_TOL);
    let (uw, sw, vw) = top(&svd, r);
    let cv = t.c.view().dot(&vw);
    let ru = t.r.view().t().dot(&uw);
    let c_floor = ZERO_NORM_TOL * frob_norm(&t.c).max(f64::MIN_POSITIVE);
    let r_floor = ZERO_NORM_TOL * frob_norm(&t.r).max(f64::MIN_POSITIVE);
    let scale = ((m as f64) * (n as f64) / ((kr as f64) * (kc as f64))).sqrt();

    let mut keep = Vec::with_capacity(r);
    let mut nc = Vec::with_capacity(r);
    let mut nr = Vec::with_capacity(r);
    for (j, &s) in sw.iter().enumerate().take(r) {
        let a = cv.column(j).dot(&cv.column(j)).sqrt();
        let b = ru.column(j).dot(&ru.column(j)).sqrt();
        if s > 0.0 && a > c_floor && b > r_floor {
            keep.push(j);
            nc.push(a);
            nr.push(b);
        }
    }
    let pick = |f: &Array2<f64>, norms: &[f64]| {
        let mut out = f.select(ndarray::Axis(1), &keep);
        for (mut col, &nrm) in out.columns_mut().into_iter().zip(norms) {
            col /= nrm;
        }
        out
    };
    let u = pick(&cv, &nc);
    let v = pick(&ru, &nr);
    let s: Array1<f64> = keep.iter().map(|&j| sw[j] * scale).collect();
    Sketch::new(u, s, v, false)
}

/// `C W† Cᵀ` for a symmetric sample of a PSD matrix, with `V = U`.
pub fn nystrom(t: &SampledTriple, rank: RankSpec) -> Result<Sketch> {
    t.check()?;
    if t.row_idx != t.col_idx {
        return Err(Error::invalid("Nystrom needs identical row and column samples"));
    }
    let w = t.w.view();
    let big = w.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let k = w.nrows();
    for i in 0..k {
        for j in 0..i {
            if (w[[i, j]] - w[[j, i]]).abs() > 1e-8 * big {
                return Err(Error::invalid(format!("intersection is not symmetric at ({i}, {j})")));
            }
        }
    }
    let svd = thin_svd(w)?;
    let r = svd.rank(rank, DEFAULT_RANK_TOL);
    let (_, sw, vw) = top(&svd, r);
    let u = scale_columns(t.c.view().dot(&vw), |j| 1.0 / sw[j]);
    Sketch::new(u.clone(), Array1::from(sw.to_vec()), u, false)
}
