//! Dense LU with partial pivoting, and double-double accumulation for the
//! badly conditioned normal equations.

use std::ops::{Add, Neg};

use super::BaselineError;

/// Row-major square matrix factored as `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Factors `a` (row-major, `n x n`). Fails when a pivot is zero or
    /// negligible against the largest entry of its column.
    pub fn new(a: &[f64], n: usize) -> Result<Self, BaselineError> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let pivot_row = (k..n)
                .max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs()))
                .expect("non-empty range");
            let pivot = lu[pivot_row * n + k];
            if !pivot.is_finite() || pivot.abs() <= scale * f64::EPSILON * n as f64 * 1e-3 {
                return Err(BaselineError::Singular);
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[i * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Ok(LuFactor { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            a[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(p, q)| p * q)
                .sum()
        })
        .collect()
}

/// Solves `a x = b` with one round of residual refinement.
pub fn solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>, BaselineError> {
    let lu = LuFactor::new(a, n)?;
    let mut x = lu.solve(b);
    let ax = mat_vec(a, n, &x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    for (xi, di) in x.iter_mut().zip(lu.solve(&r)) {
        *xi += di;
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(BaselineError::Singular)
    }
}

/// Unevaluated sum `hi + lo` carrying about 106 bits of precision.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    pub fn mul_f64(self, b: f64) -> DoubleDouble {
        let (p, e) = Self::two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = Self::two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    /// Exact-ish product of two doubles.
    pub fn product(a: f64, b: f64) -> DoubleDouble {
        let (hi, lo) = Self::two_prod(a, b);
        DoubleDouble { hi, lo }
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;

    fn add(self, o: DoubleDouble) -> DoubleDouble {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = Self::two_sum(s, e);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;

    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Solves `a x = b` where `a` and `b` are held in double-double, refining an
/// f64 LU solution against double-double residuals until the correction
/// stops shrinking. Reaches f64 accuracy for condition numbers well past
/// `1 / f64::EPSILON`'s square root.
pub fn solve_refined(
    a: &[DoubleDouble],
    n: usize,
    b: &[DoubleDouble],
) -> Result<Vec<f64>, BaselineError> {
    let a_hi: Vec<f64> = a.iter().map(|v| v.hi).collect();
    let lu = LuFactor::new(&a_hi, n)?;
    let b_hi: Vec<f64> = b.iter().map(|v| v.hi).collect();
    let mut x = lu.solve(&b_hi);
    let mut last = f64::INFINITY;
    for _ in 0..30 {
        let r: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = b[i];
                for j in 0..n {
                    acc = acc + -a[i * n + j].mul_f64(x[j]);
                }
                acc.hi + acc.lo
            })
            .collect();
        let d = lu.solve(&r);
        let size = d
            .iter()
            .zip(&x)
            .map(|(di, xi)| di.abs() / xi.abs().max(1.0))
            .fold(0.0, f64::max);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        if !size.is_finite() {
            return Err(BaselineError::Singular);
        }
        if size <= f64::EPSILON || size >= last {
            break;
        }
        last = size;
    }
    Ok(x)
}
