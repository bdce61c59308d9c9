//! Distribution tails and small matrix statistics shared by the text and
//! dataset modules.

use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

/// Upper tail `P(X >= x)` of a chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> Result<f64> {
    let dist = ChiSquared::new(df).map_err(|e| Error::invalid(format!("chi-square df {df}: {e}")))?;
    Ok(dist.sf(x.max(0.0)).clamp(0.0, 1.0))
}

/// Upper tail `P(F >= x)` of the F distribution, via the regularized
/// incomplete beta function.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    let dist = FisherSnedecor::new(d1, d2)
        .map_err(|e| Error::invalid(format!("F distribution ({d1}, {d2}): {e}")))?;
    Ok(dist.sf(x.max(0.0)).clamp(0.0, 1.0))
}

/// Row-major `n x p` data to an nalgebra matrix, checking rectangularity.
pub fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(Error::invalid("data matrix is empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::invalid(format!(
            "row {i} has {} columns, expected {p}",
            rows[i].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data matrix".into()));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

pub fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|j| m.column(j).mean()).collect()
}

/// Sample covariance (`n - 1` denominator).
pub fn covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let means = column_means(m);
    let centered = DMatrix::from_fn(n, m.ncols(), |i, j| m[(i, j)] - means[j]);
    (centered.transpose() * &centered) / (n as f64 - 1.0).max(1.0)
}
