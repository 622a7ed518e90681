//! Dense solves for the tiny systems of the Newton correctors.

/// Solve `a·x = b` for square `a` (row-major, n ≤ 4) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// 1-norm condition number estimate `‖A‖₁ ‖A⁻¹‖₁`, via N solves.
pub fn condition<const N: usize>(a: [[f64; N]; N]) -> f64 {
    let norm = |m: &[[f64; N]; N]| {
        (0..N)
            .map(|j| (0..N).map(|i| m[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        match solve(a, e) {
            Some(col) => {
                for i in 0..N {
                    inv[i][j] = col[i];
                }
            }
            None => return f64::INFINITY,
        }
    }
    norm(&a) * norm(&inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        let x = solve([[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]], [5.0, 3.0, 6.0]).unwrap();
        // x + y = 3, 3x + z = 6, 2y + z = 5
        for (got, want) in x.iter().zip([1.4, 1.6, 1.8]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0]).is_none());
    }

    #[test]
    fn condition_of_diagonal() {
        assert!((condition([[1.0, 0.0], [0.0, 1e-3]]) - 1e3).abs() < 1e-9);
    }
}
