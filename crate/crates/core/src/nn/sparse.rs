use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form, used as the propagation
/// operator of graph convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if entries.iter().any(|&(i, j, _)| i >= n || j >= n) {
            return Err(Error::invalid(format!("sparse entry out of bounds for n={n}")));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().expect("non-empty") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(&[self.n, self.n]);
        let n = self.n;
        for i in 0..n {
            for (j, v) in self.row(i) {
                t.data_mut()[i * n + j] += v;
            }
        }
        t
    }

    /// `out += self · x` for `x: n×d`.
    pub(crate) fn mul_into(&self, x: &[f64], d: usize, out: &mut [f64]) {
        for i in 0..self.n {
            let out_row = &mut out[i * d..(i + 1) * d];
            for (j, w) in self.row(i) {
                for (o, &xv) in out_row.iter_mut().zip(&x[j * d..(j + 1) * d]) {
                    *o += w * xv;
                }
            }
        }
    }

    /// `out += selfᵀ · g` for `g: n×d`.
    pub(crate) fn mul_t_into(&self, g: &[f64], d: usize, out: &mut [f64]) {
        for i in 0..self.n {
            let g_row = &g[i * d..(i + 1) * d];
            for (j, w) in self.row(i) {
                for (o, &gv) in out[j * d..(j + 1) * d].iter_mut().zip(g_row) {
                    *o += w * gv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_dense_matches() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.to_dense().data(), &[0.0, 3.0, 4.0, 0.0]);
    }

    #[test]
    fn transpose_product() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 3.0), (1, 1, 1.0)]).unwrap();
        let g = [1.0, 2.0];
        let mut out = [0.0; 2];
        m.mul_t_into(&g, 1, &mut out);
        // mᵀ = [[0,0],[3,1]]
        assert_eq!(out, [0.0, 5.0]);
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(SparseMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }
}
