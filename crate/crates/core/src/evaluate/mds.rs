use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissimilarity::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mds {
    pub coords: Vec<[f64; 2]>,
    pub stress: f64,
    /// Two leading eigenvalues of the double-centred matrix.
    pub eigenvalues: [f64; 2],
}

/// Classical scaling into two dimensions: eigenvectors of
/// `-1/2 J D^2 J` scaled by the square roots of their eigenvalues. Each axis
/// is oriented so its first clearly nonzero coordinate is positive. Axes with
/// a nonpositive eigenvalue are left at zero.
pub fn classical_mds(d: &DissimilarityMatrix) -> Result<(Vec<[f64; 2]>, [f64; 2])> {
    let n = d.n();
    if n < 3 {
        return Err(Error::domain(format!("metric scaling needs at least 3 objects, got {n}")));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j) * d.get(i, j));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut coords = vec![[0.0; 2]; n];
    let mut values = [0.0; 2];
    for axis in 0..2 {
        let k = order[axis];
        let lambda = eig.eigenvalues[k];
        values[axis] = lambda;
        if lambda <= 0.0 {
            log::warn!("metric scaling: eigenvalue {axis} is {lambda}; axis set to zero");
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let scale = v.amax();
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-9 * scale)
            .map_or(1.0, |x| x.signum());
        for i in 0..n {
            coords[i][axis] = sign * v[i] * lambda.sqrt();
        }
    }
    Ok((coords, values))
}

/// `sqrt(sum_{i != j} (|x_i - x_j| - D_ij)^2 / sum_{i != j} D_ij^2)`
pub fn stress(coords: &[[f64; 2]], d: &DissimilarityMatrix) -> Result<f64> {
    let n = d.n();
    if coords.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: coords.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let e = (coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]);
                num += (e - d.get(i, j)).powi(2);
                den += d.get(i, j).powi(2);
            }
        }
    }
    if den == 0.0 {
        return Err(Error::domain("stress undefined for an all-zero dissimilarity matrix"));
    }
    Ok((num / den).sqrt())
}

pub fn mds_2d(d: &DissimilarityMatrix) -> Result<Mds> {
    let (coords, eigenvalues) = classical_mds(d)?;
    let stress = stress(&coords, d)?;
    Ok(Mds {
        coords,
        stress,
        eigenvalues,
    })
}

/// Permutation test of the 2-D stress. Each replicate shuffles the
/// off-diagonal entries (keeping symmetry) using stream `(seed, k)`;
/// `p = (1 + #{stress_perm <= stress_obs}) / (n_perms + 1)`.
pub fn mds_permutation_test(d: &DissimilarityMatrix, n_perms: usize, seed: u64) -> Result<f64> {
    if n_perms < 99 {
        return Err(Error::domain(format!("use at least 99 permutations, got {n_perms}")));
    }
    let observed = mds_2d(d)?.stress;
    let n = d.n();
    let upper: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d.get(i, j)).collect();
    let hits: usize = (0..n_perms)
        .into_par_iter()
        .map(|k| -> Result<usize> {
            let mut v = upper.clone();
            v.shuffle(&mut stream(seed, k as u64));
            let mut pos = vec![0.0; n * n];
            let mut it = v.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let x = it.next().expect("n(n-1)/2 entries");
                    pos[i * n + j] = x;
                    pos[j * n + i] = x;
                }
            }
            let p = DissimilarityMatrix::from_fn(n, d.metric(), |i, j| pos[i * n + j]);
            Ok(usize::from(mds_2d(&p)?.stress <= observed))
        })
        .sum::<Result<usize>>()?;
    Ok((1 + hits) as f64 / (n_perms + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn euclidean(points: &[[f64; 2]]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(points.len(), None, |i, j| {
            (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1])
        })
    }

    #[test]
    fn planar_triangle_embeds_exactly() {
        let d = euclidean(&[[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]);
        let m = mds_2d(&d).unwrap();
        assert!(m.stress < 1e-10, "{}", m.stress);
        let centroid = m.coords.iter().fold([0.0, 0.0], |a, c| [a[0] + c[0], a[1] + c[1]]);
        assert!(centroid[0].abs() < 1e-12 && centroid[1].abs() < 1e-12);
    }

    #[test]
    fn regular_simplex_is_not_planar() {
        let d = DissimilarityMatrix::from_fn(4, None, |_, _| 1.0);
        let m = mds_2d(&d).unwrap();
        // brute-force the stress from the returned configuration
        let mut num = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let e = (m.coords[i][0] - m.coords[j][0]).hypot(m.coords[i][1] - m.coords[j][1]);
                    num += (e - 1.0f64).powi(2);
                }
            }
        }
        assert!(((num / 12.0f64).sqrt() - m.stress).abs() < 1e-12);
        assert!(m.stress > 0.05, "{}", m.stress);
    }

    #[test]
    fn sign_convention() {
        let d = euclidean(&[[0.0, 0.0], [5.0, 1.0], [1.0, 3.0], [6.0, 5.0]]);
        let m = mds_2d(&d).unwrap();
        for axis in 0..2 {
            let first = m.coords.iter().map(|c| c[axis]).find(|v| v.abs() > 1e-9).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn collinear_points_pad_second_axis() {
        let d = euclidean(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        let m = mds_2d(&d).unwrap();
        assert!(m.stress < 1e-10);
        assert!(m.coords.iter().all(|c| c[1].abs() < 1e-6));
    }

    #[test]
    fn permutation_test_bounds_and_structure() {
        let mut rng = stream(9, 0);
        // three tight groups in the plane
        let pts: Vec<[f64; 2]> = (0..15)
            .map(|i| {
                let c = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]][i % 3];
                [c[0] + rng.random::<f64>(), c[1] + rng.random::<f64>()]
            })
            .collect();
        let p = mds_permutation_test(&euclidean(&pts), 199, 1).unwrap();
        assert!(p < 0.01, "{p}");
        let noise = DissimilarityMatrix::from_fn(12, None, |_, _| rng.random::<f64>());
        let q = mds_permutation_test(&noise, 99, 2).unwrap();
        assert!(q > 0.0 && q <= 1.0);
        assert!(mds_permutation_test(&noise, 10, 2).is_err());
    }

    #[test]
    fn null_p_values_are_spread() {
        let mut rng = stream(10, 0);
        let ps: Vec<f64> = (0..40)
            .map(|s| {
                let d = DissimilarityMatrix::from_fn(8, None, |_, _| rng.random::<f64>());
                mds_permutation_test(&d, 99, s).unwrap()
            })
            .collect();
        let small = ps.iter().filter(|&&p| p < 0.1).count();
        let large = ps.iter().filter(|&&p| p > 0.5).count();
        assert!(small <= 12 && large >= 10, "{ps:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn stress_rotation_invariant(angle in 0.0f64..6.3, flip in any::<bool>(), seed in 0u64..100) {
            let mut rng = stream(seed, 1);
            let d = DissimilarityMatrix::from_fn(6, None, |_, _| 0.5 + rng.random::<f64>());
            let m = mds_2d(&d).unwrap();
            let (s, c) = angle.sin_cos();
            let rotated: Vec<[f64; 2]> = m
                .coords
                .iter()
                .map(|p| {
                    let y = if flip { -p[1] } else { p[1] };
                    [c * p[0] - s * y, s * p[0] + c * y]
                })
                .collect();
            prop_assert!((stress(&rotated, &d).unwrap() - m.stress).abs() < 1e-10);
        }

        #[test]
        fn planar_configurations_embed(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..9)) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
            let d = euclidean(&pts);
            prop_assume!((0..d.n()).any(|i| (0..d.n()).any(|j| d.get(i, j) > 1e-3)));
            prop_assert!(mds_2d(&d).unwrap().stress < 1e-6);
        }
    }
}
