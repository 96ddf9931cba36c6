use serde::{Deserialize, Serialize};

use crate::clustering::argmax;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexPair {
    pub ari: f64,
    pub jaccard: f64,
}

/// Fuzzy pair-agreement counts between a hard reference `R` and a fuzzy
/// candidate `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FuzzyPairCounts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl FuzzyPairCounts {
    /// `a = sum min(s_R, s_Q)`, `b = sum min(s_R, d_Q)`,
    /// `c = sum min(d_R, s_Q)`, `d = sum min(d_R, d_Q)` over pairs `i < j`, with
    /// `s_Q(i,j) = max_c min(u_ic, u_jc)` and
    /// `d_Q(i,j) = max_{c != c'} min(u_ic, u_jc')`.
    pub fn new(reference: &[usize], u: &[Vec<f64>]) -> Result<Self> {
        check(reference, u)?;
        let n = reference.len();
        let mut k = Self::default();
        for i in 0..n {
            for j in i + 1..n {
                let (s_q, d_q) = pair_degrees(&u[i], &u[j]);
                if reference[i] == reference[j] {
                    k.a += s_q;
                    k.b += d_q;
                } else {
                    k.c += s_q;
                    k.d += d_q;
                }
            }
        }
        Ok(k)
    }

    /// `2 (ad - bc) / ((a + b)(b + d) + (a + c)(c + d))`
    pub fn ari(&self) -> Result<f64> {
        let Self { a, b, c, d } = *self;
        let den = (a + b) * (b + d) + (a + c) * (c + d);
        if den == 0.0 {
            return Err(Error::IndexUndefined("adjusted Rand denominator is zero".into()));
        }
        Ok(2.0 * (a * d - b * c) / den)
    }

    /// `a / (a + b + c)`
    pub fn jaccard(&self) -> Result<f64> {
        let den = self.a + self.b + self.c;
        if den == 0.0 {
            return Err(Error::IndexUndefined("Jaccard denominator is zero".into()));
        }
        Ok(self.a / den)
    }
}

fn pair_degrees(ui: &[f64], uj: &[f64]) -> (f64, f64) {
    let mut same: f64 = 0.0;
    let mut diff: f64 = 0.0;
    for (c, &x) in ui.iter().enumerate() {
        for (c2, &y) in uj.iter().enumerate() {
            let v = x.min(y);
            if c == c2 {
                same = same.max(v);
            } else {
                diff = diff.max(v);
            }
        }
    }
    (same, diff)
}

fn check(reference: &[usize], u: &[Vec<f64>]) -> Result<()> {
    if reference.len() != u.len() {
        return Err(Error::Dimension {
            expected: reference.len(),
            got: u.len(),
        });
    }
    if reference.len() < 2 {
        return Err(Error::domain("agreement indices need at least 2 objects"));
    }
    let first = reference[0];
    if reference.iter().all(|&l| l == first) {
        return Err(Error::IndexUndefined("reference partition has a single label".into()));
    }
    Ok(())
}

/// Fuzzy adjusted Rand and Jaccard indices of a fuzzy partition against a
/// hard reference.
pub fn arif_jif(reference: &[usize], u: &[Vec<f64>]) -> Result<IndexPair> {
    let k = FuzzyPairCounts::new(reference, u)?;
    Ok(IndexPair {
        ari: k.ari()?,
        jaccard: k.jaccard()?,
    })
}

/// Maximum-membership hard labels; ties go to the lowest cluster index.
pub fn harden(u: &[Vec<f64>]) -> Vec<usize> {
    u.iter().map(|row| argmax(row)).collect()
}

fn crisp_counts(a: &[usize], b: &[usize]) -> Result<[u64; 4]> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    // [same/same, same/diff, diff/same, diff/diff]
    let mut k = [0u64; 4];
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let idx = 2 * usize::from(a[i] != a[j]) + usize::from(b[i] != b[j]);
            k[idx] += 1;
        }
    }
    Ok(k)
}

/// Classical adjusted Rand index between two hard partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    let [ss, sd, ds, dd] = crisp_counts(a, b)?.map(|v| v as f64);
    FuzzyPairCounts {
        a: ss,
        b: sd,
        c: ds,
        d: dd,
    }
    .ari()
}

/// Classical Jaccard index between two hard partitions.
pub fn jaccard_index(a: &[usize], b: &[usize]) -> Result<f64> {
    let [ss, sd, ds, _] = crisp_counts(a, b)?.map(|v| v as f64);
    FuzzyPairCounts {
        a: ss,
        b: sd,
        c: ds,
        d: 0.0,
    }
    .jaccard()
}

/// Classical indices after hardening the fuzzy partition.
pub fn ari_ji(reference: &[usize], u: &[Vec<f64>]) -> Result<IndexPair> {
    check(reference, u)?;
    let hard = harden(u);
    Ok(IndexPair {
        ari: adjusted_rand_index(reference, &hard)?,
        jaccard: jaccard_index(reference, &hard)?,
    })
}
