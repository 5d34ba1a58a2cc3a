//! External clustering metrics: accuracy under the best label matching,
//! NMI, pairwise precision/recall/F-score and the adjusted Rand index.
//!
//! Labels may be arbitrary integers; they are compacted internally, so every
//! metric is invariant under relabeling of either argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster labels `0..c` with every value in that range used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("a label vector needs at least one entry".into()));
        }
        let c = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; c];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(gap) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidArgument(format!("label {gap} is unused; labels must be contiguous from 0")));
        }
        Ok(Self(labels))
    }

    /// Renumbers arbitrary labels by order of first appearance.
    pub fn canonical(raw: &[usize]) -> Result<Self> {
        Self::new(compact(raw).0)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.iter().max().map_or(0, |&m| m + 1)
    }
}

impl TryFrom<Vec<usize>> for LabelVector {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LabelVector> for Vec<usize> {
    fn from(l: LabelVector) -> Self {
        l.0
    }
}

fn compact(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = raw
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Contingency table `n_ij` = samples with truth `i` and prediction `j`.
struct Contingency {
    table: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

impl Contingency {
    fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch(truth.len(), pred.len()));
        }
        if truth.is_empty() {
            return Err(Error::InvalidArgument("cannot score an empty labelling".into()));
        }
        let (t, ct) = compact(truth);
        let (p, cp) = compact(pred);
        let mut table = vec![vec![0usize; cp]; ct];
        for (&a, &b) in t.iter().zip(&p) {
            table[a][b] += 1;
        }
        let rows = table.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..cp).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            table,
            rows,
            cols,
            n: truth.len(),
        })
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm with potentials). Returns `assignment[row] = col`.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    const INF: i64 = i64::MAX / 4;
    // 1-based potentials; column 0 is a virtual sentinel.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of samples matched under the best one-to-one mapping of
/// predicted clusters onto true classes.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = Contingency::new(truth, pred)?;
    let size = ct.rows.len().max(ct.cols.len());
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| -(ct.table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64))
                .collect()
        })
        .collect();
    let matched: i64 = hungarian(&cost).iter().enumerate().map(|(i, &j)| -cost[i][j]).sum();
    Ok(matched as f64 / ct.n as f64)
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(T;P) / sqrt(H(T)·H(P))` in nats. Two single-cluster partitions score
/// 1; a single-cluster partition against a nontrivial one scores 0.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = Contingency::new(truth, pred)?;
    let ht = entropy(&ct.rows, ct.n);
    let hp = entropy(&ct.cols, ct.n);
    if ht == 0.0 && hp == 0.0 {
        return Ok(1.0);
    }
    if ht == 0.0 || hp == 0.0 {
        return Ok(0.0);
    }
    let n = ct.n as f64;
    let mut mi = 0.0;
    for (i, row) in ct.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (ct.rows[i] as f64 * ct.cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ht * hp).sqrt()).clamp(0.0, 1.0))
}

fn pairs(c: usize) -> u128 {
    let c = c as u128;
    c * c.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Pair-counting precision, recall and F-score over unordered sample pairs.
///
/// A ratio with no pairs in its denominator is 0, except that two
/// all-singleton partitions agree perfectly and score 1 across the board.
pub fn pair_scores(truth: &[usize], pred: &[usize]) -> Result<PairScores> {
    let ct = Contingency::new(truth, pred)?;
    if ct.n < 2 {
        return Err(Error::InvalidArgument("pair scores need at least two samples".into()));
    }
    let tp: u128 = ct.table.iter().flatten().map(|&x| pairs(x)).sum();
    let same_pred: u128 = ct.cols.iter().map(|&x| pairs(x)).sum();
    let same_truth: u128 = ct.rows.iter().map(|&x| pairs(x)).sum();
    if same_pred == 0 && same_truth == 0 {
        return Ok(PairScores {
            precision: 1.0,
            recall: 1.0,
            f_score: 1.0,
        });
    }
    let ratio = |a: u128, b: u128| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, same_pred);
    let recall = ratio(tp, same_truth);
    let f_score = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PairScores {
        precision,
        recall,
        f_score,
    })
}

/// Hubert–Arabie adjusted Rand index. Partitions for which the index is
/// undefined (both trivial in the same way) are identical and score 1.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = Contingency::new(truth, pred)?;
    let index: u128 = ct.table.iter().flatten().map(|&x| pairs(x)).sum();
    let a: u128 = ct.rows.iter().map(|&x| pairs(x)).sum();
    let b: u128 = ct.cols.iter().map(|&x| pairs(x)).sum();
    let total = pairs(ct.n) as f64;
    let (index, a, b) = (index as f64, a as f64, b as f64);
    let expected = if total == 0.0 { 0.0 } else { a * b / total };
    let max = (a + b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyTrials);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Ok(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub acc: MeanStd,
    pub nmi: MeanStd,
    pub f_score: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub ari: MeanStd,
}

/// Scores every trial against `truth` and summarizes each metric.
pub fn evaluate_trials(truth: &[usize], preds: &[Vec<usize>]) -> Result<MetricReport> {
    if preds.is_empty() {
        return Err(Error::EmptyTrials);
    }
    let mut cols: [Vec<f64>; 6] = Default::default();
    for pred in preds {
        let ps = pair_scores(truth, pred)?;
        let row = [accuracy(truth, pred)?, nmi(truth, pred)?, ps.f_score, ps.precision, ps.recall, ari(truth, pred)?];
        for (col, v) in cols.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(MetricReport {
        acc: MeanStd::of(&cols[0])?,
        nmi: MeanStd::of(&cols[1])?,
        f_score: MeanStd::of(&cols[2])?,
        precision: MeanStd::of(&cols[3])?,
        recall: MeanStd::of(&cols[4])?,
        ari: MeanStd::of(&cols[5])?,
    })
}
