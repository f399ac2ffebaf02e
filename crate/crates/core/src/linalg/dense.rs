use nalgebra::DMatrix;

/// Determinant of the square matrix whose rows are `rows` (all of equal length).
pub fn det_rows(rows: &[&[f64]]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let (a, b, c) = (rows[0], rows[1], rows[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0])
        }
        n => DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant(),
    }
}

/// Singular values of a `k × n` row-major matrix, in decreasing order.
pub fn singular_values(data: &[f64], k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(data.len(), k * n);
    if k == 0 || n == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_row_slice(k, n, data);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(data: &[f64], k: usize, n: usize, tol: f64) -> usize {
    let s = singular_values(data, k, n);
    match s.first() {
        Some(&largest) if largest > 0.0 => s.iter().filter(|&&v| v > tol * largest).count(),
        _ => 0,
    }
}

/// Smallest of the first `n` singular values (0 when `k < n`), together with
/// the largest one.
pub fn extreme_singular_values(data: &[f64], k: usize, n: usize) -> (f64, f64) {
    if k < n {
        let s = singular_values(data, k, n);
        return (0.0, s.first().copied().unwrap_or(0.0));
    }
    if n == 1 {
        let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
        return (norm, norm);
    }
    let s = singular_values(data, k, n);
    (s[n - 1], s[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_determinants_match_lu() {
        let rows: [[f64; 3]; 3] = [[2.0, -1.0, 0.5], [0.3, 4.0, 1.0], [-2.0, 0.0, 1.5]];
        let r: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let lu = DMatrix::from_fn(3, 3, |i, j| rows[i][j]).determinant();
        assert!((det_rows(&r) - lu).abs() < 1e-12);
        assert_eq!(det_rows(&[&[1.0, 1.0], &[1.0, -1.0]]), -2.0);
        assert_eq!(det_rows(&[&[3.5]]), 3.5);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&[1.0, 0.0, 0.0, 1.0], 2, 2, 1e-10), 2);
        assert_eq!(numerical_rank(&[1.0, 0.0, 2.0, 0.0, 3.0, 0.0], 3, 2, 1e-10), 1);
        assert_eq!(numerical_rank(&[0.0; 6], 3, 2, 1e-10), 0);
    }

    #[test]
    fn extreme_values_of_tall_matrix() {
        // rows e1, e2, e1 + e2: FᵀF = [[2, 1], [1, 2]] with eigenvalues 3 and 1
        let (lo, hi) = extreme_singular_values(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0], 3, 2);
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3f64.sqrt()).abs() < 1e-12);
    }
}
