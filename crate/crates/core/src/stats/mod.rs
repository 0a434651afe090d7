//! Experiment statistics: percentile bootstrap intervals, one-way ANOVA and
//! Tukey's HSD with compact letter grouping.

mod bootstrap;
pub mod dist;
mod tukey;

pub use bootstrap::{bootstrap_ci, Interval};
pub use tukey::{letters, tukey_hsd, TukeyResult};

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Observations of one treatment level.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGroup {
    pub label: String,
    pub observations: Vec<f64>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, observations: Vec<f64>) -> Self {
        SampleGroup {
            label: label.into(),
            observations,
        }
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.observations)
    }
}

/// One-way ANOVA table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub p: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub ms_between: f64,
    pub ms_within: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check(groups: &[SampleGroup]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Stats("at least two groups are needed".into()));
    }
    for g in groups {
        if g.n() < 2 {
            return Err(Error::Stats(alloc::format!("group {:?} has fewer than two observations", g.label)));
        }
        if g.observations.iter().any(|x| !x.is_finite()) {
            return Err(Error::Stats(alloc::format!("group {:?} has non-finite observations", g.label)));
        }
    }
    Ok(())
}

/// Classic one-way ANOVA, `F = MS_between / MS_within` on `(k-1, N-k)`
/// degrees of freedom.
pub fn anova_oneway(groups: &[SampleGroup]) -> Result<Anova> {
    check(groups)?;
    let k = groups.len() as f64;
    let n: usize = groups.iter().map(SampleGroup::n).sum();
    let grand = groups.iter().flat_map(|g| g.observations.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = g.mean();
        ss_between += g.n() as f64 * (m - grand) * (m - grand);
        ss_within += g.observations.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let df_between = k - 1.0;
    let df_within = n as f64 - k;
    let ms_between = ss_between / df_between;
    let ms_within = ss_within / df_within;
    let f = if ms_within > 0.0 {
        ms_between / ms_within
    } else if ms_between > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(Anova {
        f,
        p: dist::f_sf(f, df_between, df_within),
        df_between,
        df_within,
        ms_between,
        ms_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn g(label: &str, x: &[f64]) -> SampleGroup {
        SampleGroup::new(label, x.to_vec())
    }

    #[test]
    fn identical_groups_give_zero_f() {
        let groups = vec![g("a", &[1.0, 2.0, 3.0]), g("b", &[1.0, 2.0, 3.0]), g("c", &[1.0, 2.0, 3.0])];
        let a = anova_oneway(&groups).unwrap();
        assert_eq!(a.f, 0.0);
        assert_eq!(a.p, 1.0);
    }

    #[test]
    fn separated_groups_are_significant() {
        let groups = vec![g("a", &[0.0, 0.01, -0.01]), g("b", &[10.0, 10.01, 9.99])];
        assert!(anova_oneway(&groups).unwrap().p < 1e-6);
    }

    #[test]
    fn rejects_tiny_groups() {
        assert!(anova_oneway(&[g("a", &[1.0]), g("b", &[1.0, 2.0])]).is_err());
        assert!(anova_oneway(&[g("a", &[1.0, 2.0])]).is_err());
        assert!(anova_oneway(&[g("a", &[1.0, f64::NAN]), g("b", &[1.0, 2.0])]).is_err());
    }
}
