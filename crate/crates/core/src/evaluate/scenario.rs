use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::simulate::Label;

/// Maps labels to `0..k` in order of first appearance. The isolated label is
/// its own group.
pub fn label_indices(labels: &[Label]) -> Vec<usize> {
    let mut seen: BTreeMap<Label, usize> = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = seen.len();
            *seen.entry(*l).or_insert(next)
        })
        .collect()
}

/// Success rule for a two-group scenario with one isolated series and
/// `C = 2`: every member of one group has membership above `threshold` in
/// one cluster, every member of the other group above `threshold` in the
/// other cluster, and the isolated series is at or below `threshold` in both.
pub fn uncertain_success(u: &[Vec<f64>], labels: &[Label], threshold: f64) -> Result<bool> {
    if u.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: u.len(),
        });
    }
    if u.iter().any(|r| r.len() != 2) {
        return Err(Error::domain("uncertain success is defined for C = 2"));
    }
    let isolated: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Isolated).collect();
    if isolated.len() != 1 {
        return Err(Error::domain(format!("expected one isolated series, found {}", isolated.len())));
    }
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Label::Cluster(c) = l {
            groups.entry(*c).or_default().push(i);
        }
    }
    if groups.len() != 2 {
        return Err(Error::domain(format!("expected two groups, found {}", groups.len())));
    }
    let group_cluster = |members: &[usize]| -> Option<usize> {
        let c = if u[members[0]][0] > threshold { 0 } else { 1 };
        members.iter().all(|&i| u[i][c] > threshold).then_some(c)
    };
    let mut it = groups.values();
    let (g1, g2) = (it.next().expect("two groups"), it.next().expect("two groups"));
    let (Some(c1), Some(c2)) = (group_cluster(g1), group_cluster(g2)) else {
        return Ok(false);
    };
    let iso = &u[isolated[0]];
    Ok(c1 != c2 && iso.iter().all(|&v| v <= threshold))
}

/// Trapezoid integral of the success rate over `m`.
pub fn area_under_fuzziness_curve(m: &[f64], rates: &[f64]) -> Result<f64> {
    if m.len() != rates.len() {
        return Err(Error::Dimension {
            expected: m.len(),
            got: rates.len(),
        });
    }
    if m.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("m values must be strictly increasing"));
    }
    Ok(m.windows(2)
        .zip(rates.windows(2))
        .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<Label> {
        let mut l: Vec<Label> = (1..=2).flat_map(|c| [Label::Cluster(c); 5]).collect();
        l.push(Label::Isolated);
        l
    }

    fn crisp_blocks(iso: [f64; 2]) -> Vec<Vec<f64>> {
        let mut u = vec![vec![1.0, 0.0]; 5];
        u.extend(vec![vec![0.0, 1.0]; 5]);
        u.push(iso.to_vec());
        u
    }

    #[test]
    fn success_cases() {
        assert!(uncertain_success(&crisp_blocks([0.5, 0.5]), &labels(), 0.7).unwrap());
        assert!(!uncertain_success(&crisp_blocks([0.75, 0.25]), &labels(), 0.7).unwrap());
        let mut u = crisp_blocks([0.5, 0.5]);
        u[2] = vec![0.69, 0.31];
        assert!(!uncertain_success(&u, &labels(), 0.7).unwrap());
        // both groups in the same cluster
        let mut u = crisp_blocks([0.5, 0.5]);
        for row in &mut u[5..10] {
            *row = vec![1.0, 0.0];
        }
        assert!(!uncertain_success(&u, &labels(), 0.7).unwrap());
        // the isolated series exactly at the threshold is not assigned
        assert!(uncertain_success(&crisp_blocks([0.7, 0.3]), &labels(), 0.7).unwrap());
    }

    #[test]
    fn shape_errors() {
        let u = crisp_blocks([0.5, 0.5]);
        assert!(uncertain_success(&u[..10], &labels()[..10], 0.7).is_err());
        let wide: Vec<Vec<f64>> = u.iter().map(|r| vec![r[0], r[1], 0.0]).collect();
        assert!(uncertain_success(&wide, &labels(), 0.7).is_err());
    }

    #[test]
    fn threshold_monotone_for_groups() {
        let mut u = crisp_blocks([0.5, 0.5]);
        u[0] = vec![0.8, 0.2];
        u[7] = vec![0.15, 0.85];
        let outcomes: Vec<bool> = [0.55, 0.6, 0.7, 0.79, 0.8, 0.9]
            .iter()
            .map(|&t| uncertain_success(&u, &labels(), t).unwrap())
            .collect();
        assert_eq!(outcomes, vec![true, true, true, true, false, false]);
    }

    #[test]
    fn area_cases() {
        assert_eq!(area_under_fuzziness_curve(&[1.0, 1.5, 3.0], &[0.4, 0.4, 0.4]).unwrap(), 0.4 * 2.0);
        assert_eq!(area_under_fuzziness_curve(&[1.1, 1.2], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(area_under_fuzziness_curve(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert!(area_under_fuzziness_curve(&[1.0, 2.0], &[0.0]).is_err());
        assert!(area_under_fuzziness_curve(&[2.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn label_mapping() {
        let l = [Label::Cluster(3), Label::Isolated, Label::Cluster(3), Label::Cluster(1)];
        assert_eq!(label_indices(&l), vec![0, 1, 0, 2]);
    }
}
