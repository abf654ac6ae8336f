//! Friedman ranking test and Nemenyi post-hoc critical difference.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Studentized range quantiles divided by √2 at α = 0.05, for m = 2..=10.
pub const Q_ALPHA_05: [f64; 9] = [1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031, 3.102, 3.164];

#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    /// Datasets × classifiers.
    pub accuracies: DenseMatrix<f64>,
    /// Rank 1 is the best accuracy in the row; ties share their mean rank.
    pub ranks: DenseMatrix<f64>,
    /// Column means of `ranks`.
    pub avg_ranks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanResult {
    pub chi_squared: f64,
    pub f_statistic: f64,
    pub df1: usize,
    pub df2: usize,
    /// Dataset count.
    pub datasets: usize,
    /// Classifier count.
    pub classifiers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NemenyiResult {
    pub q_alpha: f64,
    pub critical_difference: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairComparison {
    pub first: usize,
    pub second: usize,
    pub rank_difference: f64,
    pub significant: bool,
}

/// Ranks of one row, highest value first, ties averaged.
pub fn rank_row(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let shared = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

pub fn rank_matrix(accuracies: &DenseMatrix<f64>) -> Result<RankTable> {
    let (datasets, classifiers) = accuracies.shape();
    check_counts(datasets, classifiers)?;
    if !accuracies.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("accuracy matrix"));
    }
    let mut ranks = Vec::with_capacity(datasets * classifiers);
    for i in 0..datasets {
        ranks.extend(rank_row(accuracies.row(i)));
    }
    let ranks = DenseMatrix::new(datasets, classifiers, ranks)?;
    let avg_ranks = column_means(&ranks);
    Ok(RankTable {
        accuracies: accuracies.clone(),
        ranks,
        avg_ranks,
    })
}

fn column_means(m: &DenseMatrix<f64>) -> Vec<f64> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j)).sum::<f64>() / m.rows() as f64)
        .collect()
}

fn check_counts(datasets: usize, classifiers: usize) -> Result<()> {
    if datasets < 2 || classifiers < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 datasets and 2 classifiers, got {datasets} and {classifiers}"
        )));
    }
    Ok(())
}

/// `χ²_F = 12M/(m(m+1))·[Σ R_j² − m(m+1)²/4]` and
/// `F_F = (M−1)χ²_F / (M(m−1) − χ²_F)` from average ranks over `datasets` (M).
pub fn friedman(avg_ranks: &[f64], datasets: usize) -> Result<FriedmanResult> {
    let m = avg_ranks.len();
    check_counts(datasets, m)?;
    if !avg_ranks.iter().all(|r| r.is_finite()) {
        return Err(Error::NonFinite("average ranks"));
    }
    let (mf, big) = (m as f64, datasets as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi_squared = 12.0 * big / (mf * (mf + 1.0)) * (sum_sq - mf * (mf + 1.0).powi(2) / 4.0);
    let bound = big * (mf - 1.0);
    if chi_squared >= bound {
        return Err(Error::DegenerateFStatistic { chi_squared, bound });
    }
    Ok(FriedmanResult {
        chi_squared,
        f_statistic: (big - 1.0) * chi_squared / (bound - chi_squared),
        df1: m - 1,
        df2: (m - 1) * (datasets - 1),
        datasets,
        classifiers: m,
    })
}

/// Friedman statistics from a full M × m rank matrix.
pub fn friedman_from_ranks(ranks: &DenseMatrix<f64>) -> Result<FriedmanResult> {
    friedman(&column_means(ranks), ranks.rows())
}

/// `CD = q_α·√(m(m+1)/(6M))`. Only α = 0.05 and m in 2..=10 are tabulated.
pub fn nemenyi_cd(classifiers: usize, datasets: usize, alpha: f64) -> Result<NemenyiResult> {
    if alpha != 0.05 {
        return Err(Error::Stats(format!("no q table for alpha {alpha}; only 0.05 is available")));
    }
    if !(2..=10).contains(&classifiers) {
        return Err(Error::Stats(format!("no q value for {classifiers} classifiers; supported 2..=10")));
    }
    if datasets == 0 {
        return Err(Error::Stats("dataset count must be positive".into()));
    }
    let q_alpha = Q_ALPHA_05[classifiers - 2];
    let m = classifiers as f64;
    Ok(NemenyiResult {
        q_alpha,
        critical_difference: q_alpha * (m * (m + 1.0) / (6.0 * datasets as f64)).sqrt(),
        alpha,
    })
}

/// Every unordered pair with `|R_i − R_j|`, flagged when it reaches `cd`.
pub fn significance_pairs(avg_ranks: &[f64], cd: f64) -> Result<Vec<PairComparison>> {
    if !(cd > 0.0) {
        return Err(Error::Stats(format!("critical difference must be positive, got {cd}")));
    }
    let mut out = Vec::new();
    for i in 0..avg_ranks.len() {
        for j in (i + 1)..avg_ranks.len() {
            let d = (avg_ranks[i] - avg_ranks[j]).abs();
            out.push(PairComparison {
                first: i,
                second: j,
                rank_difference: d,
                significant: d >= cd,
            });
        }
    }
    Ok(out)
}
