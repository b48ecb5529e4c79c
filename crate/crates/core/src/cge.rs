//! Column selection by Gaussian elimination with complete pivoting on `Zᴴ Z`.
//!
//! The pivot sequence of `Ẑ = Zᴴ Z` reveals the numerical rank of `Z`: the
//! `k`-th pivot behaves like `σ_k²`, so stopping once a pivot falls below
//! `tol_cge` times the first one keeps the columns with `σ_k² / σ_1² ≥ tol_cge`.
//! Row swaps act on `Ẑ` only; column swaps are mirrored on `Z`, and the
//! retained columns are original columns of `Z`, never combinations.

use log::debug;

use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgeParams {
    /// Absolute floor: if no entry of `Ẑ` reaches it the rank is 0.
    pub alpha: f64,
    /// Relative stopping tolerance against the first pivot.
    pub tol_cge: f64,
}

impl Default for CgeParams {
    fn default() -> Self {
        Self {
            alpha: 1e-8,
            tol_cge: 1e-2,
        }
    }
}

impl CgeParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.tol_cge > 0.0 && self.tol_cge < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tol_cge must lie in (0, 1), got {}",
                self.tol_cge
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgeResult {
    /// The first `rk` columns of the column-permuted `Z`.
    pub z_out: DenseMatrix,
    pub rk: usize,
    /// Original indices of the retained columns, in output order.
    pub columns: Vec<usize>,
    /// Pivot magnitudes in elimination order, including the one that stopped it.
    pub pivots: Vec<f64>,
}

/// Largest `|Ẑ_ij|` over `i, j ≥ from`; ties go to the smallest `i`, then `j`.
fn complete_pivot(zh: &DenseMatrix, from: usize) -> (usize, usize, f64) {
    let m = zh.rows();
    let mut best = (from, from, -1.0);
    for i in from..m {
        for j in from..m {
            let v = zh[(i, j)].norm();
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Detects the numerical rank of `Z` and selects that many independent columns.
pub fn cge(z: &DenseMatrix, params: &CgeParams) -> Result<CgeResult> {
    params.validate()?;
    if z.cols() == 0 {
        return Err(Error::InvalidArgument("cge needs at least one column".into()));
    }
    z.ensure_finite("cge input")?;
    let m = z.cols();
    let mut zh = z.adjoint_mul(z)?;
    let mut order: Vec<usize> = (0..m).collect();
    let mut pivots = Vec::new();

    let empty = |pivots| CgeResult {
        z_out: DenseMatrix::zeros(z.rows(), 0),
        rk: 0,
        columns: Vec::new(),
        pivots,
    };

    let (mut i0, mut j0, first) = complete_pivot(&zh, 0);
    pivots.push(first);
    if first < params.alpha {
        return Ok(empty(pivots));
    }
    let alpha = first;

    let mut rk = m;
    for j in 0..m {
        zh.swap_rows(j, i0);
        zh.swap_cols(j, j0);
        order.swap(j, j0);

        let piv = zh[(j, j)];
        for i in j + 1..m {
            let l = zh[(i, j)] / piv;
            zh[(i, j)] = l;
            for k in j + 1..m {
                let t = l * zh[(j, k)];
                zh[(i, k)] -= t;
            }
        }

        if j + 1 == m {
            break;
        }
        let (ni, nj, v) = complete_pivot(&zh, j + 1);
        pivots.push(v);
        if v / alpha < params.tol_cge {
            rk = j + 1;
            break;
        }
        i0 = ni;
        j0 = nj;
    }

    debug!("cge: rank {rk} of {m}, pivots {pivots:?}");
    let columns = order[..rk].to_vec();
    Ok(CgeResult {
        z_out: z.select_columns(&columns),
        rk,
        columns,
        pivots,
    })
}
