//! Dense univariate polynomials in the monomial basis.

use serde::{Deserialize, Serialize};

/// Coefficients `c[0] + c[1] x + ... + c[n] x^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Polynomial(coefficients)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.0.len() <= 1 {
            return Polynomial(vec![0.0]);
        }
        Polynomial(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// `p(offset + scale * x)` as a polynomial in `x`.
    pub fn compose_affine(&self, offset: f64, scale: f64) -> Polynomial {
        // Horner on polynomials: acc <- acc * (offset + scale x) + c
        let mut acc: Vec<f64> = vec![0.0];
        for &c in self.0.iter().rev() {
            let mut next = vec![0.0; acc.len() + 1];
            for (k, &a) in acc.iter().enumerate() {
                next[k] += a * offset;
                next[k + 1] += a * scale;
            }
            next[0] += c;
            acc = next;
        }
        while acc.len() > 1 && acc.last() == Some(&0.0) {
            acc.pop();
        }
        Polynomial(acc)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.0.len().max(other.0.len());
        Polynomial(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) - other.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    /// Minimum and maximum of the polynomial over `[lo, hi]`.
    ///
    /// Interior extrema are located as sign changes of the derivative on a
    /// fine grid and polished by bisection.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let d = self.derivative();
        let mut min = self.eval(lo).min(self.eval(hi));
        let mut max = self.eval(lo).max(self.eval(hi));
        for x in d.roots_in(lo, hi) {
            let v = self.eval(x);
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    /// Real roots in `[lo, hi]` found by sign-change bracketing.
    pub(crate) fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        const GRID: usize = 4096;
        let mut roots = Vec::new();
        let h = (hi - lo) / GRID as f64;
        let mut x0 = lo;
        let mut f0 = self.eval(x0);
        for k in 1..=GRID {
            let x1 = if k == GRID { hi } else { lo + k as f64 * h };
            let f1 = self.eval(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = self.eval(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        if f0 == 0.0 {
            roots.push(hi);
        }
        roots
    }
}
