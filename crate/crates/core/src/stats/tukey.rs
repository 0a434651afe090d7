use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use super::{anova_oneway, dist, SampleGroup};
use crate::error::{Error, Result};

/// Tukey-Kramer pairwise comparisons. Matrices are indexed in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyResult {
    pub labels: Vec<String>,
    pub means: Vec<f64>,
    pub confidence: f64,
    pub df_within: f64,
    pub ms_within: f64,
    /// Critical studentized range `q(k, N-k)` at `confidence`.
    pub q_crit: f64,
    /// Honest significant difference of each pair.
    pub hsd: Vec<Vec<f64>>,
    /// Adjusted p-value of each pair.
    pub p_values: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    /// Grouping letters per group; groups sharing no letter differ.
    pub letters: Vec<String>,
}

pub fn tukey_hsd(groups: &[SampleGroup], confidence: f64) -> Result<TukeyResult> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Stats("confidence must lie in (0, 1)".into()));
    }
    let anova = anova_oneway(groups)?;
    let k = groups.len();
    let means: Vec<f64> = groups.iter().map(SampleGroup::mean).collect();
    let q_crit = dist::studentized_range_quantile(confidence, k as f64, anova.df_within);
    let mut hsd = vec![vec![0.0; k]; k];
    let mut p_values = vec![vec![1.0; k]; k];
    let mut significant = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let se = sqrt(anova.ms_within / 2.0 * (1.0 / groups[i].n() as f64 + 1.0 / groups[j].n() as f64));
            let diff = libm::fabs(means[i] - means[j]);
            hsd[i][j] = q_crit * se;
            let (p, sig) = if se > 0.0 {
                (dist::studentized_range_sf(diff / se, k as f64, anova.df_within), diff > hsd[i][j])
            } else {
                (if diff > 0.0 { 0.0 } else { 1.0 }, diff > 0.0)
            };
            p_values[i][j] = p.clamp(0.0, 1.0);
            significant[i][j] = sig;
        }
    }
    let labels: Vec<String> = groups.iter().map(|g| g.label.clone()).collect();
    let letters = letters(&means, &labels, &significant);
    Ok(TukeyResult {
        labels,
        means,
        confidence,
        df_within: anova.df_within,
        ms_within: anova.ms_within,
        q_crit,
        hsd,
        p_values,
        significant,
        letters,
    })
}

/// Compact letter display of a symmetric significance matrix.
///
/// Groups are ranked by ascending mean (ties by label) and letter columns
/// are built by insert-and-absorb: every significant pair splits the
/// columns holding both members, and columns contained in another are
/// dropped. Two groups then share a letter exactly when they do not differ.
/// `A` goes to the column holding the lowest-ranked group.
pub fn letters(means: &[f64], labels: &[String], significant: &[Vec<bool>]) -> Vec<String> {
    let k = means.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then_with(|| labels[a].cmp(&labels[b])));
    // columns as sets of ranks, kept sorted
    let mut cols: Vec<Vec<usize>> = vec![(0..k).collect()];
    for a in 0..k {
        for b in a + 1..k {
            let (i, j) = (order[a], order[b]);
            if !(significant[i][j] || significant[j][i]) {
                continue;
            }
            let mut next = Vec::with_capacity(cols.len() + 1);
            for c in cols {
                if c.contains(&a) && c.contains(&b) {
                    next.push(c.iter().copied().filter(|&x| x != b).collect());
                    next.push(c.into_iter().filter(|&x| x != a).collect());
                } else {
                    next.push(c);
                }
            }
            cols = absorb(next);
        }
    }
    cols.sort();
    let mut out = vec![String::new(); k];
    for (n, c) in cols.iter().enumerate() {
        let letter = letter_name(n);
        for &r in c {
            out[order[r]].push_str(&letter);
        }
    }
    out
}

fn absorb(cols: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut keep: Vec<Vec<usize>> = Vec::with_capacity(cols.len());
    for (i, c) in cols.iter().enumerate() {
        let covered = cols.iter().enumerate().any(|(j, d)| {
            j != i && c.iter().all(|x| d.contains(x)) && (c.len() < d.len() || j < i)
        });
        if !covered && !c.is_empty() {
            keep.push(c.clone());
        }
    }
    keep
}

/// `A`..`Z`, then `a`..`z`, then numbered.
fn letter_name(n: usize) -> String {
    match n {
        0..=25 => String::from((b'A' + n as u8) as char),
        26..=51 => String::from((b'a' + (n - 26) as u8) as char),
        _ => alloc::format!("[{n}]"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::borrow::ToOwned;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| alloc::format!("g{i}")).collect()
    }

    fn matrix(k: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; k]; k];
        for &(a, b) in pairs {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }

    #[test]
    fn all_different() {
        let k = 4;
        let all: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        let l = letters(&[4.0, 1.0, 3.0, 2.0], &labels(k), &matrix(k, &all));
        assert_eq!(l, ["D", "A", "C", "B"]);
    }

    #[test]
    fn none_different() {
        let l = letters(&[1.0, 2.0, 3.0], &labels(3), &matrix(3, &[]));
        assert_eq!(l, ["A", "A", "A"]);
    }

    #[test]
    fn overlapping_ranges() {
        // 0 ~ 1 ~ 2 but 0 differs from 2
        let l = letters(&[1.0, 2.0, 3.0], &labels(3), &matrix(3, &[(0, 2)]));
        assert_eq!(l, ["A", "AB", "B"]);
    }

    #[test]
    fn non_interval_pattern_is_encoded_exactly() {
        // 1 differs from 2 only; 0 and 3 differ from nobody
        let k = 4;
        let sig = matrix(k, &[(1, 2)]);
        let l = letters(&[1.0, 2.0, 3.0, 4.0], &labels(k), &sig);
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    let share = l[a].chars().any(|c| l[b].contains(c));
                    assert_eq!(share, !sig[a][b], "{a} {b} {l:?}");
                }
            }
        }
    }

    #[test]
    fn tie_break_by_label() {
        let l = letters(&[1.0, 1.0], &["b".to_owned(), "a".to_owned()], &matrix(2, &[(0, 1)]));
        assert_eq!(l, ["B", "A"]);
    }
}
