use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Row-major dense matrix with all entries finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMat {
    data: Array2<f64>,
}

impl DenseMat {
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), values).expect("length checked above");
        Self::from_array(data)
    }

    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::dims("ragged rows"));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), ncols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: Array2::eye(n) }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        self.data.as_slice().expect("DenseMat is always in standard layout")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_length_and_non_finite() {
        assert!(DenseMat::from_row_major(2, 2, vec![1.0; 3]).is_err());
        let err = DenseMat::from_row_major(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        assert!(DenseMat::from_row_major(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn transposed_input_is_stored_row_major() {
        let a = Array2::from_shape_vec((2, 3), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let m = DenseMat::from_array(a.t().to_owned()).unwrap();
        assert_eq!(m.values(), &[1., 4., 2., 5., 3., 6.]);
        let m = DenseMat::from_array(a.clone().reversed_axes()).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m.values(), &[1., 4., 2., 5., 3., 6.]);
    }
}
