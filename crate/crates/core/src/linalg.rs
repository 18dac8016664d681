//! Small dense linear algebra: LU solves for oracle-side validation and
//! breakpoint enumeration. Row-major `Vec<Vec<f64>>` matrices; these stay
//! at dims <= 16 so no effort is spent on blocking or vectorization.

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Returns None when the system is numerically singular.
pub fn lu_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    if n == 0 || b.len() != n || a.iter().any(|row| row.len() != n) {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        let scale: f64 = m[pivot_row].iter().map(|v| v.abs()).fold(0.0, f64::max);
        if pivot_abs <= 1e-12 * scale.max(1.0) {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = m.split_at_mut(r);
            let pivot_row_vals = &upper[col];
            for (dst, src) in lower[0].iter_mut().zip(pivot_row_vals).skip(col) {
                *dst -= f * src;
            }
            rhs[r] -= f * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_2x2() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![5.0, 10.0];
        let x = lu_solve(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn random_residuals_small() {
        let mut rng = crate::rng::Rng::new(99);
        for _ in 0..50 {
            let n = 1 + (rng.next_below(8) as usize);
            let a: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
                .collect();
            let b: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            if let Some(x) = lu_solve(&a, &b) {
                for r in 0..n {
                    let ax: f64 = (0..n).map(|c| a[r][c] * x[c]).sum();
                    assert!((ax - b[r]).abs() < 1e-8, "row residual too large");
                }
            }
        }
    }
}
