use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest smaller-sample size for which the exact null distribution is used.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stars {
    Ns,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p <= 0.001 {
            Stars::Three
        } else if p <= 0.01 {
            Stars::Two
        } else if p <= 0.05 {
            Stars::One
        } else {
            Stars::Ns
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Stars::Ns => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// U statistic of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub stars: Stars,
    pub method: PMethod,
}

/// Mid-ranks (1-based) of the pooled values.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Mann-Whitney U test with tie handling.
///
/// When the smaller sample has at most [`EXACT_MAX`] values the p-value
/// comes from the exact permutation distribution of the rank sum (ties
/// included); otherwise from the tie-corrected normal approximation with
/// continuity correction.
///
/// # Panics
/// If either sample is empty.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> SignificanceResult {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let (p, method) = if n1.min(n2) <= EXACT_MAX {
        (exact_p(&ranks, n1, n2), PMethod::Exact)
    } else {
        (normal_p(&ranks, u1, n1, n2), PMethod::Normal)
    };
    let p = p.clamp(0.0, 1.0);
    SignificanceResult {
        statistic: u1,
        p_value: p,
        stars: Stars::from_p(p),
        method,
    }
}

fn exact_p(ranks: &[f64], n1: usize, n2: usize) -> f64 {
    let n = n1 + n2;
    // Work with the smaller sample; doubled mid-ranks are integers.
    let (m, obs_ranks) = if n1 <= n2 { (n1, &ranks[..n1]) } else { (n2, &ranks[n1..]) };
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = obs_ranks.iter().map(|r| (2.0 * r).round() as usize).sum();
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable();
        d[n - m..].iter().sum()
    };
    // counts[j][s]: number of size-j subsets with doubled rank sum s.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; m + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=m).rev() {
            let (lo, hi) = counts.split_at_mut(j);
            for s in (r..=max_sum).rev() {
                let add = lo[j - 1][s - r];
                if add != 0.0 {
                    hi[0][s] += add;
                }
            }
        }
    }
    let center = (m * (n + 1)) as i64; // doubled expected rank sum
    let dev = (observed as i64 - center).abs();
    let total: f64 = counts[m].iter().sum();
    let extreme: f64 = counts[m]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    extreme / total
}

fn normal_p(ranks: &[f64], u1: f64, n1: usize, n2: usize) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
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
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let mu = n1f * n2f / 2.0;
    let z = ((u1 - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * (1.0 - normal.cdf(z))
}
