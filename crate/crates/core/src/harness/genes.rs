//! One-way ANOVA ranking of variables across labelled classes.

use std::cmp::Ordering;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Observations with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub data: DataMatrix,
    pub labels: Vec<String>,
    /// Variable names, when the source had a header.
    pub names: Option<Vec<String>>,
}

impl LabeledData {
    pub fn new(data: DataMatrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::DimensionMismatch {
                expected: data.n(),
                got: labels.len(),
            });
        }
        Ok(Self {
            data,
            labels,
            names: None,
        })
    }

    /// Class index per row (in order of first appearance) and class names.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<String>) {
        let mut names: Vec<String> = Vec::new();
        let idx = self
            .labels
            .iter()
            .map(|l| match names.iter().position(|c| c == l) {
                Some(k) => k,
                None => {
                    names.push(l.clone());
                    names.len() - 1
                }
            })
            .collect();
        (idx, names)
    }
}

/// Per-variable F statistic: between-class mean square over within-class
/// mean square.
///
/// A vanishing within term gives `+∞` when the class means differ and `NaN`
/// when every value is identical.
pub fn f_statistic(d: &LabeledData) -> Result<Vec<f64>> {
    let (class, names) = d.class_indices();
    let (n, k) = (d.data.n(), names.len());
    if k < 2 {
        return Err(Error::Parameter(format!("need at least 2 classes, got {k}")));
    }
    if n <= k {
        return Err(Error::InsufficientData { needed: k + 1, got: n });
    }
    let mut sizes = vec![0usize; k];
    for &c in &class {
        sizes[c] += 1;
    }
    let mut out = Vec::with_capacity(d.data.p());
    for i in 0..d.data.p() {
        let x = d.data.column(i);
        let grand = x.iter().sum::<f64>() / n as f64;
        let mut means = vec![0.0; k];
        for (v, &c) in x.iter().zip(&class) {
            means[c] += v;
        }
        for (m, &s) in means.iter_mut().zip(&sizes) {
            *m /= s as f64;
        }
        let mut within = 0.0;
        let mut total = 0.0;
        for (v, &c) in x.iter().zip(&class) {
            within += (v - means[c]).powi(2);
            total += (v - grand).powi(2);
        }
        let between: f64 = means.iter().zip(&sizes).map(|(m, &s)| s as f64 * (m - grand).powi(2)).sum();
        let f = if total == 0.0 {
            f64::NAN
        } else if within <= 1e-14 * total {
            f64::INFINITY
        } else {
            (between / (k - 1) as f64) / (within / (n - k) as f64)
        };
        out.push(f);
    }
    Ok(out)
}

// Value order with NaN below every number.
fn value_order(x: f64, y: f64) -> Ordering {
    match (x.is_nan(), y.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => x.partial_cmp(&y).unwrap(),
    }
}

/// Indices of the `top` largest values (descending) followed by the
/// `bottom` smallest (ascending). Ties go to the lower index; `NaN` ranks
/// below every number.
pub fn select_genes(f: &[f64], top: usize, bottom: usize) -> Result<Vec<usize>> {
    if top + bottom > f.len() {
        return Err(Error::Parameter(format!(
            "cannot select {top} + {bottom} of {} variables",
            f.len()
        )));
    }
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| value_order(f[b], f[a]).then(a.cmp(&b)));
    let mut low = order[f.len() - bottom..].to_vec();
    low.sort_by(|&a, &b| value_order(f[a], f[b]).then(a.cmp(&b)));
    let mut out = order[..top].to_vec();
    out.extend(low);
    Ok(out)
}
