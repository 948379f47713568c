use crate::error::{Error, Result};

/// `n × p` observations, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Row-major constructor. Requires `n ≥ 2`, `p ≥ 1` and finite values.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::InvalidDimension(format!(
                "expected {} values for {n}x{p} data, got {}",
                n * p,
                values.len()
            )));
        }
        if p == 0 {
            return Err(Error::InvalidDimension("data has no variables".into()));
        }
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / p, col: k % p });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidDimension(format!(
                "row {bad} has {} values, expected {p}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.p + i]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.p..(k + 1) * self.p]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, i)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<DataMatrix> {
        let mut values = Vec::with_capacity(idx.len() * self.p);
        for &k in idx {
            values.extend_from_slice(self.row(k));
        }
        DataMatrix::new(idx.len(), self.p, values)
    }

    /// Columns `idx`, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<DataMatrix> {
        let mut values = Vec::with_capacity(idx.len() * self.n);
        for k in 0..self.n {
            values.extend(idx.iter().map(|&i| self.get(k, i)));
        }
        DataMatrix::new(self.n, idx.len(), values)
    }

    pub fn scale(&self, c: f64) -> DataMatrix {
        DataMatrix {
            n: self.n,
            p: self.p,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Column-major copy with each column centred at its mean.
    pub(crate) fn centered_columns(&self, mean: &[f64]) -> Vec<f64> {
        let (n, p) = (self.n, self.p);
        let mut out = vec![0.0; n * p];
        for k in 0..n {
            let row = self.row(k);
            for i in 0..p {
                out[i * n + k] = row[i] - mean[i];
            }
        }
        out
    }
}
