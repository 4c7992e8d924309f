//! Dense linear solving over any [`Scalar`], shared by the exact q-minus
//! reconstruction and the complex Newton steps.

use crate::scalar::Scalar;
use std::fmt;

/// Outcome of a consistent solve: one particular solution (free unknowns set
/// to zero) and the kernel dimension.
#[derive(Debug, Clone)]
pub struct Solved<K> {
    pub particular: Vec<K>,
    pub kernel_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinError {
    /// No solution; the offending reduced row index is reported.
    Inconsistent(usize),
    ShapeMismatch,
}

impl fmt::Display for LinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinError::Inconsistent(r) => write!(f, "inconsistent linear system at reduced row {r}"),
            LinError::ShapeMismatch => write!(f, "matrix and right-hand side shapes differ"),
        }
    }
}

impl std::error::Error for LinError {}

/// Gaussian elimination with magnitude pivoting. `eps` is the negligibility
/// threshold: pass `0.0` for exact scalars so only true zeros are dropped.
#[allow(clippy::needless_range_loop)]
pub fn solve<K: Scalar>(
    mut a: Vec<Vec<K>>,
    mut b: Vec<K>,
    eps: f64,
) -> Result<Solved<K>, LinError> {
    let rows = a.len();
    if rows != b.len() {
        return Err(LinError::ShapeMismatch);
    }
    let cols = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != cols) {
        return Err(LinError::ShapeMismatch);
    }

    let mut pivot_col_of_row = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        // best pivot in this column at or below `row`
        let mut best = None;
        let mut best_mag = eps;
        for r in row..rows {
            let m = a[r][col].magnitude();
            if m > best_mag {
                best = Some(r);
                best_mag = m;
            }
        }
        let Some(p) = best else { continue };
        a.swap(row, p);
        b.swap(row, p);
        let inv = a[row][col].inv();
        for c in col..cols {
            let t = a[row][c].clone() * inv.clone();
            a[row][c] = t;
        }
        let t = b[row].clone() * inv.clone();
        b[row] = t;
        for r in 0..rows {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..cols {
                let t = a[r][c].clone() - factor.clone() * a[row][c].clone();
                a[r][c] = t;
            }
            let t = b[r].clone() - factor * b[row].clone();
            b[r] = t;
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }

    // consistency of the zero rows
    for r in row..rows {
        if b[r].magnitude() > eps {
            return Err(LinError::Inconsistent(r));
        }
    }

    let mut x = vec![K::zero(); cols];
    for (r, &col) in pivot_col_of_row.iter().enumerate() {
        x[col] = b[r].clone();
    }
    Ok(Solved {
        particular: x,
        kernel_dim: cols - pivot_col_of_row.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Gauss;

    #[test]
    fn unique_solution() {
        let a = vec![
            vec![Gauss::int(2), Gauss::int(1)],
            vec![Gauss::int(1), Gauss::int(-1)],
        ];
        let b = vec![Gauss::int(3), Gauss::int(0)];
        let s = solve(a, b, 0.0).unwrap();
        assert_eq!(s.kernel_dim, 0);
        assert_eq!(s.particular, vec![Gauss::int(1), Gauss::int(1)]);
    }

    #[test]
    fn underdetermined_reports_kernel() {
        let a = vec![vec![Gauss::int(1), Gauss::int(1)]];
        let b = vec![Gauss::int(2)];
        let s = solve(a, b, 0.0).unwrap();
        assert_eq!(s.kernel_dim, 1);
        // free unknown pinned to zero
        assert_eq!(s.particular, vec![Gauss::int(2), Gauss::int(0)]);
    }

    #[test]
    fn inconsistent_detected() {
        let a = vec![
            vec![Gauss::int(1), Gauss::int(1)],
            vec![Gauss::int(2), Gauss::int(2)],
        ];
        let b = vec![Gauss::int(1), Gauss::int(3)];
        assert!(matches!(solve(a, b, 0.0), Err(LinError::Inconsistent(_))));
    }
}
