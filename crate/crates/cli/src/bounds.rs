//! Closed-form bound tables.

use serde::{Deserialize, Serialize};
use symbroadcast::{general_bound, lemma1_bound, BoundForm};

use crate::emit::Row;
use crate::error::{CliError, Result};
use crate::fmt;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub k: usize,
    pub bound_exact: f64,
    pub bound_asymptotic: f64,
    pub general_bound_exact: f64,
    pub general_bound_asymptotic: f64,
    /// `1/2 - bound_asymptotic/4`; at `k = 1` this is `1/2 - (d-1)/(2M)`.
    pub p_err_bound: f64,
}

impl Row for BoundsRow {
    const HEADER: &'static [&'static str] = &[
        "d",
        "M",
        "k",
        "bound_exact",
        "bound_asymptotic",
        "general_bound_exact",
        "general_bound_asymptotic",
        "p_err_bound",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.m.to_string(),
            self.k.to_string(),
            fmt::real(self.bound_exact),
            fmt::real(self.bound_asymptotic),
            fmt::real(self.general_bound_exact),
            fmt::real(self.general_bound_asymptotic),
            fmt::real(self.p_err_bound),
        ]
    }
}

pub fn bounds_row(d: usize, m: usize, k: usize) -> Result<BoundsRow> {
    let asym = lemma1_bound(d, m, k, BoundForm::Asymptotic)?;
    Ok(BoundsRow {
        d,
        m,
        k,
        bound_exact: lemma1_bound(d, m, k, BoundForm::Exact)?,
        bound_asymptotic: asym,
        general_bound_exact: general_bound(d, m, k, BoundForm::Exact)?,
        general_bound_asymptotic: general_bound(d, m, k, BoundForm::Asymptotic)?,
        p_err_bound: 0.5 - asym / 4.0,
    })
}

/// Every `(d, M, k)` combination with `k <= M`, in argument order.
pub fn bounds_table(ds: &[usize], ms: &[usize], ks: &[usize]) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for &d in ds {
        for &m in ms {
            for &k in ks.iter().filter(|&&k| k <= m) {
                rows.push(bounds_row(d, m, k)?);
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::config("k", "no (d, M, k) combination with k <= M"));
    }
    Ok(rows)
}
