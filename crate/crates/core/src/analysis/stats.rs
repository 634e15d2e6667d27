//! Dev-set sampling, error reduction and the Wilcoxon signed-rank test.

use rand::seq::index::sample;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::treebank::Sentence;
use crate::Rng64;

/// Draw `k = min |set|` sentences from every set without replacement,
/// keeping each set's original order. Sets of size `k` pass through whole.
pub fn sample_balanced(dev_sets: &[Vec<Sentence>], seed: u64) -> Result<Vec<Sentence>> {
    let k = dev_sets
        .iter()
        .map(Vec::len)
        .min()
        .ok_or(Error::Empty("development sets"))?;
    if k == 0 {
        return Err(Error::Empty("development set"));
    }
    let mut rng = Rng64::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k * dev_sets.len());
    for set in dev_sets {
        if set.len() == k {
            out.extend(set.iter().cloned());
            continue;
        }
        let mut picked = sample(&mut rng, set.len(), k).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| set[i].clone()));
    }
    Ok(out)
}

/// Percentage of the baseline's errors removed: `100 (new - base) / (100 - base)`.
pub fn error_reduction(base_las: f64, new_las: f64) -> Result<f64> {
    if !(0.0..100.0).contains(&base_las) {
        return Err(Error::Invalid(format!("baseline LAS {base_las} must lie in [0, 100)")));
    }
    Ok(100.0 * (new_las - base_las) / (100.0 - base_las))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wilcoxon {
    /// Smaller of the positive and negative rank sums.
    pub w: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Largest sample for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 25;

/// Ranks of `|d|` with ties averaged, doubled so they stay integral.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, times two
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Signed-rank test on paired differences. Zeros are dropped. Up to
/// [`EXACT_LIMIT`] differences the p-value is exact over all sign patterns
/// (counted by dynamic programming over rank sums); beyond it a normal
/// approximation with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<Wilcoxon> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::Invalid("all differences are zero".into()));
    }
    if nonzero.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("wilcoxon difference".into()));
    }
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let positive: u64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w2 = positive.min(total - positive);
    let w = w2 as f64 / 2.0;

    if n <= EXACT_LIMIT {
        // counts[s] = sign patterns whose doubled positive rank sum is s
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|&(s, _)| (s as u64).min(total - s as u64) <= w2)
            .map(|(_, c)| c)
            .sum();
        let p = extreme as f64 / 2f64.powi(n as i32);
        return Ok(Wilcoxon { w, p, n, exact: true });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = libm::erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(Wilcoxon { w, p, n, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::Token;

    #[test]
    fn reduction() {
        assert!((error_reduction(80.0, 85.0).unwrap() - 25.0).abs() < 1e-12);
        assert!((error_reduction(80.5, 84.5).unwrap() - 20.51).abs() < 0.01);
        assert_eq!(error_reduction(70.0, 70.0).unwrap(), 0.0);
        assert!(error_reduction(100.0, 100.0).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.w, 0.0);
        assert_eq!(r.p, 0.0625);
        let r = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert_eq!(r.w, 1.5);
        assert_eq!(r.p, 1.0);
        assert!(wilcoxon_signed_rank(&[0.0, 0.0]).is_err());
    }

    fn set(n: usize, tag: &str) -> Vec<Sentence> {
        (0..n)
            .map(|i| Sentence {
                tokens: vec![Token::new(1, format!("{tag}{i}"), "X", 0, "root")],
                comments: vec![],
                preserved: vec![],
                treebank_id: tag.into(),
            })
            .collect()
    }

    #[test]
    fn balanced_sampling() {
        let sets = vec![set(3, "a"), set(5, "b")];
        let out = sample_balanced(&sets, 7).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(out, sample_balanced(&sets, 7).unwrap());
        assert_eq!(&out[..3], &sets[0][..]);
        assert_eq!(sample_balanced(&sets[..1], 1).unwrap(), sets[0]);
        assert!(sample_balanced(&[], 1).is_err());
    }
}
