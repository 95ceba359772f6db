//! Thomas algorithm for tridiagonal systems with a factorization that can be
//! reused across many right-hand sides.

/// LU factors of a tridiagonal matrix `A` with sub-diagonal `a`, diagonal `b`
/// and super-diagonal `c` (`a[0]` and `c[n-1]` are ignored).
///
/// No pivoting; callers must supply a diagonally dominant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactor {
    sub: Vec<f64>,
    inv_pivot: Vec<f64>,
    sup_scaled: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 1 && sub.len() == n && sup.len() == n);
        let mut inv_pivot = vec![0.0; n];
        let mut sup_scaled = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i] * prev
            };
            inv_pivot[i] = 1.0 / pivot;
            sup_scaled[i] = if i + 1 < n {
                sup[i] * inv_pivot[i]
            } else {
                0.0
            };
            prev = sup_scaled[i];
        }
        Self {
            sub: sub.to_vec(),
            inv_pivot,
            sup_scaled,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution of `A x = rhs`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.sub[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.sup_scaled[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_diagonally_dominant_system() {
        let n = 9;
        let sub: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.4 + 0.02 * i as f64).collect();
        let diag = vec![2.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut rhs = matvec(&sub, &diag, &sup, &x);
        TridiagonalFactor::new(&sub, &diag, &sup).solve_in_place(&mut rhs);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_unknown() {
        let f = TridiagonalFactor::new(&[0.0], &[4.0], &[0.0]);
        let mut rhs = [2.0];
        f.solve_in_place(&mut rhs);
        assert_eq!(rhs[0], 0.5);
    }
}
