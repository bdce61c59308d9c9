use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::f_sf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p_value: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub group_means: Vec<f64>,
    /// Sample standard deviations (`n - 1`).
    pub group_stds: Vec<f64>,
    /// Within-group variance was zero while group means differ.
    pub f_infinite: bool,
}

/// One-way analysis of variance across groups.
pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid("ANOVA needs at least two groups"));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().len() < 2) {
        return Err(Error::invalid(format!("group {i} has fewer than 2 observations")));
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(Error::invalid("total observations must exceed group count"));
    }
    if groups.iter().flat_map(|g| g.as_ref()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ANOVA input".into()));
    }

    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n as f64;
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.as_ref().iter().sum::<f64>() / g.as_ref().len() as f64)
        .collect();
    let ss_between: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().len() as f64 * (m - grand).powi(2))
        .sum();
    let group_ss: Vec<f64> = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().iter().map(|x| (x - m).powi(2)).sum())
        .collect();
    let ss_within: f64 = group_ss.iter().sum();
    let group_stds = groups
        .iter()
        .zip(&group_ss)
        .map(|(g, ss)| (ss / (g.as_ref().len() - 1) as f64).sqrt())
        .collect();

    let df_between = (k - 1) as f64;
    let df_within = (n - k) as f64;
    let scale = grand.abs().max(1.0);
    let between_zero = ss_between <= 1e-24 * scale * scale * n as f64;
    let (f, p_value, f_infinite) = if ss_within <= 0.0 {
        if between_zero {
            (0.0, 1.0, false)
        } else {
            (f64::INFINITY, 0.0, true)
        }
    } else if between_zero {
        (0.0, 1.0, false)
    } else {
        let f = (ss_between / df_between) / (ss_within / df_within);
        (f, f_sf(f, df_between, df_within)?, false)
    };

    Ok(AnovaResult {
        f,
        p_value,
        df_between,
        df_within,
        ss_between,
        ss_within,
        group_means: means,
        group_stds,
        f_infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let g = [1.0, 2.0, 3.0];
        let r = anova_oneway(&[g, g, g]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn textbook_groups() {
        let r = anova_oneway(&[
            vec![6.0, 8.0, 4.0, 5.0, 3.0, 4.0],
            vec![8.0, 12.0, 9.0, 11.0, 6.0, 8.0],
            vec![13.0, 9.0, 11.0, 8.0, 7.0, 12.0],
        ])
        .unwrap();
        assert!((r.f - 9.264705882352942).abs() < 1e-12);
        assert!((r.p_value - 0.0023987773293929083).abs() < 1e-9);
        assert_eq!((r.df_between, r.df_within), (2.0, 15.0));
    }

    #[test]
    fn zero_within_variance() {
        let r = anova_oneway(&[[1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(r.f_infinite);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn shift_invariance() {
        let g = [vec![0.0, 1.0, 3.0], vec![2.0, 2.0, 5.0], vec![1.0, 4.0, 0.0]];
        let shifted: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|x| x + 7.0).collect()).collect();
        let (a, b) = (anova_oneway(&g).unwrap(), anova_oneway(&shifted).unwrap());
        assert!((a.f - b.f).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&a.p_value) && a.f >= 0.0);
    }

    #[test]
    fn small_groups_rejected() {
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
    }
}
