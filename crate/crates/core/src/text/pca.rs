use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{chi_square_sf, column_means, covariance, to_matrix};

/// Principal axes of mean-centred data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// `components[i]` is the i-th unit-norm axis over the input features.
    pub components: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::ShapeMismatch {
                op: "pca_transform",
                left: vec![x.len()],
                right: vec![self.n_features()],
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.means).map(|((c, v), m)| c * (v - m)).sum())
            .collect())
    }

    /// Maps reduced coordinates back to feature space (adds the mean).
    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.means.clone();
        for (c, &w) in self.components.iter().zip(z) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        out
    }
}

/// Fits PCA keeping the fewest components whose cumulative explained
/// variance reaches `variance_target`.
pub fn pca_fit(rows: &[Vec<f64>], variance_target: f64) -> Result<PcaModel> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::invalid(format!(
            "variance target {variance_target} outside (0, 1]"
        )));
    }
    if rows.len() < 2 {
        return Err(Error::invalid("PCA needs at least 2 rows"));
    }
    let data = to_matrix(rows)?;
    let p = data.ncols();
    let eig = SymmetricEigen::new(covariance(&data));

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    let axis = |i: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[i]).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };

    let means = column_means(&data);
    if total <= f64::MIN_POSITIVE {
        return Ok(PcaModel {
            components: vec![axis(0)],
            means,
            explained_variance: vec![0.0],
            explained_variance_ratio: vec![0.0],
        });
    }

    let mut keep = p;
    let mut cum = 0.0;
    for (i, v) in values.iter().enumerate() {
        cum += v / total;
        if cum >= variance_target - 1e-12 {
            keep = i + 1;
            break;
        }
    }
    Ok(PcaModel {
        components: (0..keep).map(axis).collect(),
        means,
        explained_variance: values[..keep].to_vec(),
        explained_variance_ratio: values[..keep].iter().map(|v| v / total).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    /// The correlation matrix was singular; the statistic is infinite.
    pub singular: bool,
}

/// Bartlett's test that the correlation matrix is the identity.
pub fn bartlett_sphericity(rows: &[Vec<f64>]) -> Result<BartlettResult> {
    let data = to_matrix(rows)?;
    let (n, p) = (data.nrows(), data.ncols());
    if n <= p {
        return Err(Error::invalid(format!(
            "Bartlett's test needs more rows than columns ({n} <= {p})"
        )));
    }
    let cov = covariance(&data);
    if let Some(j) = (0..p).find(|&j| cov[(j, j)] <= 0.0) {
        return Err(Error::invalid(format!("column {j} has zero variance")));
    }
    let corr = DMatrix::from_fn(p, p, |i, j| cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt());
    let df = (p * (p - 1)) as f64 / 2.0;
    let det = corr.determinant();
    if det <= 0.0 {
        return Ok(BartlettResult {
            statistic: f64::INFINITY,
            df,
            p_value: 0.0,
            singular: true,
        });
    }
    let statistic = (-(n as f64 - 1.0 - (2.0 * p as f64 + 5.0) / 6.0) * det.ln()).max(0.0);
    let p_value = if p == 1 { 1.0 } else { chi_square_sf(statistic, df)? };
    Ok(BartlettResult {
        statistic,
        df,
        p_value,
        singular: false,
    })
}
