use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(len: usize) -> Self {
        Self { diag: vec![0.0; len], off: vec![0.0; len.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `xᵀ T x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.diag[i] * x[i] * x[i];
        }
        for i in 0..self.off.len() {
            acc += 2.0 * self.off[i] * x[i] * x[i + 1];
        }
        acc
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..self.off.len() {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// `self - c * other`.
    pub fn combine(&self, c: f64, other: &Self) -> Self {
        Self {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a - c * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a - c * b).collect(),
        }
    }

    /// Number of negative pivots of the `LDLᵀ` factorization, i.e. the number
    /// of negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.len() {
            d = if i == 0 { self.diag[0] } else { self.diag[i] - self.off[i - 1] * self.off[i - 1] / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `T x = b` by the Thomas algorithm.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut denom = self.diag[i];
            let mut rhs = b[i];
            if i > 0 {
                denom -= self.off[i - 1] * c[i - 1];
                rhs -= self.off[i - 1] * x[i - 1];
            }
            if denom == 0.0 {
                denom = f64::EPSILON * self.diag[i].abs().max(f64::MIN_POSITIVE);
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            x[i] = rhs / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }
}

/// Bisection bracket around the smallest generalized eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBracket {
    pub lo: f64,
    pub hi: f64,
    pub bisections: usize,
}

impl EigenBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Smallest `μ` with `(A - B) x = μ M x`, by Sturm counts of `A - B - μ M`.
///
/// The bisection stops once the bracket is narrower than `abs_tol` or no
/// longer shrinks in floating point.
pub fn min_eigenvalue(a: &Tridiagonal, b: &Tridiagonal, m: &Tridiagonal, abs_tol: f64) -> Result<EigenBracket> {
    if a.len() != b.len() || a.len() != m.len() || a.is_empty() {
        return Err(invalid("matrices must have the same nonzero size"));
    }
    if m.negative_count() > 0 || m.diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::SingularMass);
    }
    let k = a.combine(1.0, b);
    let count = |mu: f64| k.combine(mu, m).negative_count();
    let mut lo = -1.0;
    while count(lo) > 0 {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(invalid("no lower bound for the spectrum"));
        }
    }
    let mut hi = 1.0;
    while count(hi) == 0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(invalid("no upper bound for the spectrum"));
        }
    }
    let mut bisections = 0;
    while hi - lo > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
    }
    Ok(EigenBracket { lo, hi, bisections })
}

/// Eigenvector for an eigenvalue near `shift` by inverse iteration.
pub(crate) fn inverse_iteration(k: &Tridiagonal, m: &Tridiagonal, shift: f64, steps: usize) -> Vec<f64> {
    let n = k.len();
    let op = k.combine(shift, m);
    let mut x = vec![1.0; n];
    for _ in 0..steps {
        let rhs = m.mul(&x);
        let mut y = op.solve(&rhs);
        let norm = m.quad(&y).abs().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian(n: usize) -> Tridiagonal {
        Tridiagonal { diag: vec![2.0; n], off: vec![-1.0; n - 1] }
    }

    fn identity(n: usize) -> Tridiagonal {
        Tridiagonal { diag: vec![1.0; n], off: vec![0.0; n - 1] }
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let br = min_eigenvalue(&laplacian(n), &Tridiagonal::zeros(n), &identity(n), 1e-14).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert_relative_eq!(br.mid(), exact, max_relative = 1e-10);
        assert!(br.lo <= exact && exact <= br.hi);
    }

    #[test]
    fn shifted_spectrum_is_negative() {
        let n = 20;
        let mut b = Tridiagonal::zeros(n);
        b.diag.iter_mut().for_each(|d| *d = 3.0);
        let br = min_eigenvalue(&laplacian(n), &b, &identity(n), 1e-12).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos() - 3.0;
        assert_relative_eq!(br.mid(), exact, max_relative = 1e-10);
    }

    #[test]
    fn singular_mass_rejected() {
        let n = 5;
        assert!(matches!(
            min_eigenvalue(&laplacian(n), &Tridiagonal::zeros(n), &Tridiagonal::zeros(n), 1e-10),
            Err(Error::SingularMass)
        ));
    }

    #[test]
    fn thomas_solve() {
        let t = Tridiagonal { diag: vec![4.0, 5.0, 6.0, 7.0], off: vec![1.0, -2.0, 0.5] };
        let x = vec![1.0, -2.0, 3.0, 0.25];
        let b = t.mul(&x);
        let y = t.solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn inverse_iteration_finds_ground_state() {
        let n = 30;
        let k = laplacian(n);
        let m = identity(n);
        let mu = min_eigenvalue(&k, &Tridiagonal::zeros(n), &m, 1e-14).unwrap().mid();
        let x = inverse_iteration(&k, &m, mu - 1e-6, 5);
        assert_relative_eq!(k.quad(&x) / m.quad(&x), mu, max_relative = 1e-10);
        assert!(x.iter().all(|v| v * x[0] > 0.0));
    }
}
