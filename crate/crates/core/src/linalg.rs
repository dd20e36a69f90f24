use crate::scalar::Scalar;

/// Least-squares solution and numerical rank of `a x ≈ b` by Householder QR with column pivoting.
///
/// `a` is row-major with `rows.len()` rows of equal length. Columns whose
/// remaining norm falls below `rank_tol` times the largest column norm are
/// treated as dependent and get coefficient zero, so rank-deficient systems
/// (points not affinely spanning their ambient space) still yield a solution.
pub(crate) fn least_squares<T: Scalar>(a: &[Vec<T>], b: &[T]) -> (Vec<T>, usize) {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let norm = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let max_norm = cols.iter().map(|c| norm(c)).fold(T::zero(), T::max);
    let rank_tol = T::epsilon().sqrt() * T::lit(1e-2) * max_norm.max(T::one());

    let mut rank = 0;
    for k in 0..n.min(m) {
        // pivot: largest remaining column norm
        let (p, pnorm) =
            (k..n)
                .map(|j| (j, norm(&cols[j][k..])))
                .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pnorm <= rank_tol {
            break;
        }
        cols.swap(k, p);
        perm.swap(k, p);
        let alpha = if cols[k][k] > T::zero() { -pnorm } else { pnorm };
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 > T::zero() {
            let reflect = |target: &mut [T]| {
                let s: T = v.iter().zip(target.iter()).map(|(&x, &y)| x * y).sum();
                let f = (s + s) / vnorm2;
                target.iter_mut().zip(&v).for_each(|(t, &x)| *t = *t - f * x);
            };
            for col in cols.iter_mut().skip(k) {
                reflect(&mut col[k..]);
            }
            reflect(&mut rhs[k..]);
        }
        rank += 1;
    }

    // back substitution on the leading rank x rank block
    let mut z = vec![T::zero(); n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s = s - cols[j][i] * z[j];
        }
        z[i] = s / cols[i][i];
    }
    let mut x = vec![T::zero(); n];
    for (k, &j) in perm.iter().enumerate() {
        x[j] = z[k];
    }
    (x, rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system_solved_exactly() {
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let (x, rank) = least_squares(&a, &[3.0, 5.0]);
        assert_eq!(rank, 2);
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_fit() {
        // y = 1 + 2t sampled exactly at 4 points
        let a: Vec<Vec<f64>> = (0..4).map(|t| vec![1.0, t as f64]).collect();
        let b: Vec<f64> = (0..4).map(|t| 1.0 + 2.0 * t as f64).collect();
        let (x, _) = least_squares(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-13 && (x[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_columns_still_fit() {
        // second and third columns identical
        let a: Vec<Vec<f64>> = vec![vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 2.0]];
        let (x, rank) = least_squares(&a, &[3.0, 5.0]);
        assert_eq!(rank, 2);
        for (row, want) in a.iter().zip([3.0, 5.0]) {
            let got: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            assert!((got - want).abs() < 1e-12);
        }
    }
}
