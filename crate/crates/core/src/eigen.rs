//! Eigenpairs of real symmetric tridiagonal matrices: Sturm-sequence
//! bisection for the eigenvalues, inverse iteration for the vectors.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples rows `i` and `i+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.len() {
                break;
            }
            let e = self.off[i];
            q = self.diag[i + 1] - x - e * e / q;
        }
        count
    }

    /// The `m`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue_ascending(&self, m: usize) -> f64 {
        assert!(m < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (lo.abs().max(hi.abs()).max(1.0));
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > m {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Top `k` eigenpairs, eigenvalues descending, vectors of unit Euclidean
    /// norm. Each pair satisfies `‖T v - μ v‖₂ ≤ tol · max(‖T‖, 1)`.
    pub fn top_eigenpairs(&self, k: usize, tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.len();
        assert!(k <= n, "requested {k} eigenpairs of a {n}x{n} matrix");
        let (lo, hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for i in 0..k {
            let mu = self.eigenvalue_ascending(n - 1 - i);
            let v = self.inverse_iteration(mu, scale, tol, &pairs, i)?;
            pairs.push((mu, v));
        }
        Ok(pairs)
    }

    fn inverse_iteration(
        &self,
        mu: f64,
        scale: f64,
        tol: f64,
        previous: &[(f64, Vec<f64>)],
        index: usize,
    ) -> Result<Vec<f64>> {
        let n = self.len();
        // separate the shift from the eigenvalue so the factorization stays usable
        let shift = mu + 4.0 * f64::EPSILON * scale;
        let lu = ShiftedLu::new(self, shift, scale);
        let mut v: Vec<f64> = (0..n)
            .map(|j| 1.0 + 0.5 * ((j as f64) * 0.7 + index as f64).sin())
            .collect();
        let mut residual = f64::INFINITY;
        let mut tv = vec![0.0; n];
        for _ in 0..8 {
            lu.solve_in_place(&mut v);
            // close eigenvalues: keep the iterate orthogonal to earlier vectors
            for (nu, w) in previous {
                if (nu - mu).abs() < 1e-3 * scale {
                    let c: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                    for (a, b) in v.iter_mut().zip(w) {
                        *a -= c * b;
                    }
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                break;
            }
            for a in v.iter_mut() {
                *a /= norm;
            }
            self.matvec(&v, &mut tv);
            residual = tv
                .iter()
                .zip(&v)
                .map(|(t, a)| (t - mu * a).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= tol * scale {
                return Ok(v);
            }
        }
        Err(Error::EigenConvergence { index, residual })
    }
}

/// LU factorization of `T - shift·I` with partial pivoting.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &SymTridiagonal, shift: f64, scale: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.diag.iter().map(|a| a - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let floor = f64::EPSILON * scale;
        for p in d.iter_mut() {
            if p.abs() < floor {
                *p = if *p < 0.0 { -floor } else { floor };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
