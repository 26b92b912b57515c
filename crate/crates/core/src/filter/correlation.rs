//! Pearson, Spearman and Kendall tau-b correlation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: an input is constant")]
    Undefined,
    #[error("input contains a non-finite value")]
    NonFinite,
}

fn check(xs: &[f64], ys: &[f64]) -> Result<(), CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooShort(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::Undefined);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Number of pairs tied within each run of equal values of a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort of `v` counting inversions (pairs out of order).
fn sort_count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], buf) + sort_count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    let n = xs.len() as u64;
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tied_x = tied_pairs(&xs_sorted);
    let tied_xy = tied_pairs(&pairs);

    let mut ys_by_x: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys_by_x.len());
    let swaps = sort_count_swaps(&mut ys_by_x, &mut buf);
    let tied_y = tied_pairs(&ys_by_x);

    let n0 = n * (n - 1) / 2;
    if tied_x == n0 || tied_y == n0 {
        return Err(CorrelationError::Undefined);
    }
    // concordant - discordant
    let s = n0 as i128 - tied_x as i128 - tied_y as i128 + tied_xy as i128 - 2 * swaps as i128;
    let denom = ((n0 - tied_x) as f64).sqrt() * ((n0 - tied_y) as f64).sqrt();
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

/// Agreement of a scorer with human judgments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
    pub kendall: f64,
}

pub fn eval_scorer(predicted: &[f64], human: &[f64]) -> Result<CorrelationReport, CorrelationError> {
    Ok(CorrelationReport {
        n: predicted.len(),
        pearson: pearson(predicted, human)?,
        spearman: spearman(predicted, human)?,
        kendall: kendall_tau(predicted, human)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn hand_case() {
        let (x, y) = ([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]);
        assert!((pearson(&x, &y).unwrap() - 0.5).abs() < EPS);
        assert!((spearman(&x, &y).unwrap() - 0.5).abs() < EPS);
        assert!((kendall_tau(&x, &y).unwrap() - 1.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn perfect_and_reversed() {
        let x = [0.3, 1.5, 2.0, 7.0, 9.5];
        let r = eval_scorer(&x, &x).unwrap();
        for v in [r.pearson, r.spearman, r.kendall] {
            assert!((v - 1.0).abs() < EPS);
        }
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < EPS);
        assert!((kendall_tau(&x, &rev).unwrap() + 1.0).abs() < EPS);
        assert!(pearson(&x, &rev).unwrap() < 0.0);
        let even = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = eval_scorer(&even, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        for v in [r.pearson, r.spearman, r.kendall] {
            assert!((v + 1.0).abs() < EPS);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(pearson(&[1.0], &[1.0]), Err(CorrelationError::TooShort(1)));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0]), Err(CorrelationError::LengthMismatch(2, 1)));
        assert_eq!(kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(CorrelationError::Undefined));
        assert_eq!(pearson(&[1.0, 2.0], &[4.0, 4.0]), Err(CorrelationError::Undefined));
        assert_eq!(spearman(&[1.0, f64::NAN], &[4.0, 5.0]), Err(CorrelationError::NonFinite));
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    fn tie_heavy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec((1u8..=5).prop_map(f64::from), n),
                prop::collection::vec((1u8..=3).prop_map(f64::from), n),
            )
        })
    }

    proptest! {
        #[test]
        fn affine_invariance((x, y) in tie_heavy(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let scaled: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            for f in [pearson, spearman, kendall_tau] {
                match (f(&x, &y), f(&scaled, &y)) {
                    (Ok(p), Ok(q)) => prop_assert!((p - q).abs() < 1e-9),
                    (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                    other => prop_assert!(false, "{:?}", other),
                }
            }
        }
    }
}
