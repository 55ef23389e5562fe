//! Small dense linear algebra over an arbitrary ordered field.

use num_traits::{Num, Signed};

/// Solves `a·x = b` by Gaussian elimination with largest-magnitude pivoting.
/// Returns `None` when the matrix is singular.
pub fn solve<T: Clone + Num + Signed + PartialOrd>(
    mut a: Vec<Vec<T>>,
    mut b: Vec<T>,
) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].is_zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let f = a[row][col].clone() / a[col][col].clone();
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *x = x.clone() - p.clone() * f.clone();
            }
            let t = b[col].clone() * f;
            b[row] = b[row].clone() - t;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Some(x)
}
