//! Small dense linear-algebra helpers shared by the model and the engine.

use nalgebra::DMatrix;

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

/// Hadamard's bound on `|det(m)|`: the product of the Euclidean row norms.
///
/// Used as the scale for every "is this determinant zero" decision.
pub fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|row| row.norm()).product()
}

/// `|det(m)| <= tol * hadamard_bound(m)`.
pub fn is_numerically_singular(m: &DMatrix<f64>, tol: f64) -> bool {
    determinant(m).abs() <= tol * hadamard_bound(m)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Scales rows, then columns, by powers of two so that each has largest
/// entry in `[1, 2)`. Powers of two keep the scaling exact, and the
/// determinant changes by the product of the factors only.
pub fn equilibrate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m.clone();
    let pow2 = |x: f64| {
        if x > 0.0 && x.is_finite() {
            2f64.powi(-(x.log2().floor() as i32))
        } else {
            1.0
        }
    };
    for mut row in s.row_iter_mut() {
        let f = pow2(row.amax());
        row *= f;
    }
    for mut col in s.column_iter_mut() {
        let f = pow2(col.amax());
        col *= f;
    }
    s
}

/// `|det| / H` after [`equilibrate`]. Rescaling rows or columns moves it by
/// at most the rounding to powers of two, a bounded factor.
pub fn scaled_singularity_ratio(m: &DMatrix<f64>) -> f64 {
    let s = equilibrate(m);
    let h = hadamard_bound(&s);
    if h == 0.0 {
        0.0
    } else {
        determinant(&s).abs() / h
    }
}

/// Infinity norm (maximum absolute row sum).
pub fn matrix_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn to_i128_rows(m: &DMatrix<i64>) -> Vec<Vec<i128>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| i128::from(m[(i, j)])).collect())
        .collect()
}

/// Exact determinant of an integer matrix (Bareiss fraction-free elimination).
pub fn integer_determinant(m: &DMatrix<i64>) -> i128 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return 1;
    }
    let mut a = to_i128_rows(m);
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| a[r][k] != 0) else {
            return 0;
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Exact rank of an integer matrix.
pub fn integer_rank(m: &DMatrix<i64>) -> usize {
    let (rows, cols) = m.shape();
    let mut a = to_i128_rows(m);
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(p, rank);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                a[i][j] = (a[rank][col] * a[i][j] - a[i][col] * a[rank][j]) / prev;
            }
            a[i][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_determinant_matches_float() {
        let m = DMatrix::from_row_slice(3, 3, &[2, -1, 0, -1, 2, -1, 0, -1, 2]);
        assert_eq!(integer_determinant(&m), 4);
        let f = m.map(|x| x as f64);
        assert!((determinant(&f) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn integer_determinant_needs_pivoting() {
        let m = DMatrix::from_row_slice(3, 3, &[0, 1, 0, 1, 0, 0, 0, 0, 5]);
        assert_eq!(integer_determinant(&m), -5);
        let singular = DMatrix::from_row_slice(2, 2, &[1, 2, 2, 4]);
        assert_eq!(integer_determinant(&singular), 0);
    }

    #[test]
    fn rank_of_rectangular_matrices() {
        let m = DMatrix::from_row_slice(2, 4, &[1, 2, 3, 4, 2, 4, 6, 8]);
        assert_eq!(integer_rank(&m), 1);
        let m = DMatrix::from_row_slice(3, 4, &[0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0]);
        assert_eq!(integer_rank(&m), 3);
        assert_eq!(integer_rank(&DMatrix::<i64>::zeros(3, 3)), 0);
    }

    #[test]
    fn scaled_ratio_is_insensitive_to_scaling() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, -1.0, 0.25, -1.0, 2.0]);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e6, 1.0, 1e-7]));
        let e = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3e-5, 7.0, 1e4]));
        let scaled = &d * &m * &e;
        let a = scaled_singularity_ratio(&m);
        let b = scaled_singularity_ratio(&scaled);
        assert!(a / b < 4.0 && b / a < 4.0, "{a} vs {b}");
        assert!(determinant(&scaled).abs() / hadamard_bound(&scaled) < 1e-3 * a);
        assert_eq!(scaled_singularity_ratio(&DMatrix::zeros(2, 2)), 0.0);
        let singular = DMatrix::from_row_slice(2, 2, &[1e8, 2e8, 1e-3, 2e-3]);
        assert!(scaled_singularity_ratio(&singular) < 1e-15);
    }

    #[test]
    fn hadamard_bounds_determinant() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 2.0]);
        assert_eq!(hadamard_bound(&m), 10.0);
        assert!(determinant(&m).abs() <= hadamard_bound(&m));
    }
}
