use ndarray::Array2;

use crate::error::Result;
use crate::matcore::{thin_svd, Sketch};

/// Re-expresses `U S Vᵀ` with orthonormal factors in `O((m + n) r²)`:
/// `U = U₀ Σ₀ V₀ᵀ`, then `Σ₀ V₀ᵀ S Vᵀ = U₁ Σ₁ V₁ᵀ`, giving `(U₀ U₁, Σ₁, V₁)`.
pub fn orthogonalize(sk: &Sketch) -> Result<Sketch> {
    let (m, n) = sk.shape();
    if sk.rank() == 0 {
        return Ok(Sketch::zero(m, n));
    }
    let outer = thin_svd(sk.u().view())?;
    let mut core: Array2<f64> = outer.v.t().to_owned();
    for (mut row, &s) in core.rows_mut().into_iter().zip(outer.s.iter()) {
        row *= s;
    }
    for (mut col, &s) in core.columns_mut().into_iter().zip(sk.s().iter()) {
        col *= s;
    }
    let inner = thin_svd(core.dot(&sk.v().t()).view())?;
    Sketch::new(outer.u.dot(&inner.u), inner.s, inner.v, true)
}
