//! Small dense kernels: Householder QR, one-sided Jacobi SVD and the
//! truncated pseudo-inverse.
//!
//! Inputs here are the `k x k` intersection matrices and tall-thin factors
//! (`m x k`), never the full sketched matrix.

use ndarray::{s, Array1, Array2, ArrayBase, ArrayView2, Data, Ix2};

use super::{DenseMat, SparseMat};
use crate::error::{Error, Result};

/// Singular values at or below `tol * s_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

pub trait FrobNorm {
    fn frob_norm(&self) -> f64;
}

impl<S: Data<Elem = f64>> FrobNorm for ArrayBase<S, Ix2> {
    fn frob_norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl FrobNorm for DenseMat {
    fn frob_norm(&self) -> f64 {
        self.view().frob_norm()
    }
}

impl FrobNorm for SparseMat {
    fn frob_norm(&self) -> f64 {
        self.entries().iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }
}

pub fn frob_norm<M: FrobNorm + ?Sized>(m: &M) -> f64 {
    m.frob_norm()
}

/// How many singular triplets to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RankSpec {
    /// Every singular value above the relative tolerance.
    #[default]
    Auto,
    /// The top `r`, capped at the number above tolerance so that zero
    /// singular values are never inverted.
    Fixed(usize),
}

impl RankSpec {
    pub fn effective(self, singular_values: &[f64], tol: f64) -> usize {
        let smax = singular_values.first().copied().unwrap_or(0.0);
        let above = if smax > 0.0 {
            singular_values.iter().take_while(|&&s| s > tol * smax).count()
        } else {
            0
        };
        match self {
            RankSpec::Auto => above,
            RankSpec::Fixed(r) => r.min(above),
        }
    }
}

/// Thin SVD `M = U diag(s) Vᵀ` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

impl Svd {
    pub fn rank(&self, spec: RankSpec, tol: f64) -> usize {
        spec.effective(self.s.as_slice().expect("contiguous"), tol)
    }
}

/// Column-major scratch matrix used by the factorization loops.
struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn from_view(a: ArrayView2<'_, f64>) -> Self {
        let (rows, cols) = a.dim();
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            data.extend(a.column(j).iter());
        }
        Self { rows, cols, data }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let (lo, hi) = self.data.split_at_mut(q * self.rows);
        (&mut lo[p * self.rows..(p + 1) * self.rows], &mut hi[..self.rows])
    }

    fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.rows, self.cols), |(i, j)| self.data[j * self.rows + i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(a: ArrayView2<'_, f64>) -> Result<()> {
    match a.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::NonFinite { row, col }),
        None => Ok(()),
    }
}

/// Householder QR. Returns `(Q, R)` with `Q` of shape `m x p` having
/// orthonormal columns and `R` upper-trapezoidal `p x n`, `p = min(m, n)`.
pub fn qr_thin(a: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
    let (m, n) = a.dim();
    let p = m.min(n);
    let mut w = ColMajor::from_view(a);
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p);

    for j in 0..p {
        let x = &w.col(j)[j..];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
        for k in j + 1..n {
            let col = &mut w.col_mut(k)[j..];
            let t = beta * dot(&v, col);
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= t * vi);
        }
        let col = &mut w.col_mut(j)[j..];
        col[0] = alpha;
        col[1..].iter_mut().for_each(|c| *c = 0.0);
        reflectors.push((v, beta));
    }

    let r = Array2::from_shape_fn((p, n), |(i, k)| if i <= k { w.data[k * m + i] } else { 0.0 });

    let mut q = ColMajor {
        rows: m,
        cols: p,
        data: vec![0.0; m * p],
    };
    for i in 0..p {
        q.data[i * m + i] = 1.0;
    }
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        for c in 0..p {
            let col = &mut q.col_mut(c)[j..];
            let t = beta * dot(v, col);
            col.iter_mut().zip(v).for_each(|(x, vi)| *x -= t * vi);
        }
    }
    (q.to_array(), r)
}

/// One-sided (Hestenes) Jacobi on the columns of `g` (rows >= cols).
/// On return the columns of `g` are mutually orthogonal and `v` holds the
/// accumulated rotations.
fn hestenes(g: &mut ColMajor) -> ColMajor {
    let n = g.cols;
    let mut v = ColMajor::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (gp, gq) = g.two_cols_mut(p, q);
                let alpha = dot(gp, gp);
                let beta = dot(gq, gq);
                let gamma = dot(gp, gq);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(gp, gq, c, s);
                let (vp, vq) = v.two_cols_mut(p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn rotate(xp: &mut [f64], xq: &mut [f64], c: f64, s: f64) {
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Makes columns `from..` of `u` orthonormal against all earlier columns,
/// replacing degenerate ones with standard basis directions.
fn complete_orthonormal(u: &mut Array2<f64>, from: usize) {
    let (m, p) = u.dim();
    let mut basis = 0usize;
    for j in from..p {
        let mut cand = u.column(j).to_owned();
        let mut attempts = 0;
        loop {
            for _ in 0..2 {
                for i in 0..j {
                    let prev = u.column(i);
                    let proj = prev.dot(&cand);
                    cand.scaled_add(-proj, &prev);
                }
            }
            let norm = cand.dot(&cand).sqrt();
            if norm > 0.5 || (attempts > 0 && norm > 1e-8) {
                cand /= norm;
                break;
            }
            // Too little left after projection: restart from e_basis.
            cand.fill(0.0);
            cand[basis % m] = 1.0;
            basis += 1;
            attempts += 1;
        }
        u.column_mut(j).assign(&cand);
    }
}

/// Thin SVD of any finite matrix.
///
/// Tall inputs are first reduced by QR, wide inputs are handled through the
/// transpose, and the square core is diagonalized by one-sided Jacobi, which
/// keeps small singular values accurate to working precision.
pub fn thin_svd(a: ArrayView2<'_, f64>) -> Result<Svd> {
    check_finite(a)?;
    Ok(svd_unchecked(a))
}

fn svd_unchecked(a: ArrayView2<'_, f64>) -> Svd {
    let (m, n) = a.dim();
    if m < n {
        let t = svd_unchecked(a.t());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let p = n;
    if p == 0 {
        return Svd {
            u: Array2::zeros((m, 0)),
            s: Array1::zeros(0),
            v: Array2::zeros((n, 0)),
        };
    }

    let (q, core) = if m > n {
        let (q, r) = qr_thin(a);
        (Some(q), r)
    } else {
        (None, a.to_owned())
    };

    let mut g = ColMajor::from_view(core.view());
    let v = hestenes(&mut g);

    let norms: Vec<f64> = (0..p).map(|j| dot(g.col(j), g.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let rows = g.rows;
    let mut u_core = Array2::zeros((rows, p));
    let mut v_out = Array2::zeros((n, p));
    let mut s = Array1::zeros(p);
    let smax = norms[order[0]];
    let mut first_degenerate = p;
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        if norms[j] > 0.0 {
            let col = g.col(j);
            for i in 0..rows {
                u_core[[i, k]] = col[i] / norms[j];
            }
        }
        if first_degenerate == p && norms[j] <= smax * f64::EPSILON {
            first_degenerate = k;
        }
        let vc = v.col(j);
        for i in 0..n {
            v_out[[i, k]] = vc[i];
        }
    }
    if first_degenerate < p {
        complete_orthonormal(&mut u_core, first_degenerate);
    }

    let u = match q {
        Some(q) => q.dot(&u_core),
        None => u_core,
    };
    Svd { u, s, v: v_out }
}

/// `V_r Σ_r⁻¹ U_rᵀ` from the top `r` singular triplets of `m`.
///
/// With [`RankSpec::Auto`], `r` counts the singular values above
/// `tol * s_max`; an all-zero matrix yields an all-zero pseudo-inverse.
pub fn pinv_truncated(m: ArrayView2<'_, f64>, rank: RankSpec, tol: f64) -> Result<Array2<f64>> {
    let svd = thin_svd(m)?;
    Ok(pinv_from_svd(&svd, svd.rank(rank, tol)))
}

pub(crate) fn pinv_from_svd(svd: &Svd, r: usize) -> Array2<f64> {
    let mut vs = svd.v.slice(s![.., ..r]).to_owned();
    for (mut col, &sv) in vs.columns_mut().into_iter().zip(svd.s.iter()) {
        col /= sv;
    }
    vs.dot(&svd.u.slice(s![.., ..r]).t())
}
