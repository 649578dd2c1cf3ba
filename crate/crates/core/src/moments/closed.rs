//! Closed-form modified Chebyshev (first kind) moments.

use std::f64::consts::{LN_2, PI};

use super::{MomentVector, Provenance};
use crate::classical::Family;
use crate::error::{Error, Result};

fn build(m: usize, f: impl Fn(usize) -> f64) -> Result<MomentVector> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one moment".into()));
    }
    MomentVector::new(
        Family::chebyshev_t(),
        (0..m).map(f).collect(),
        Provenance::ClosedForm,
    )
}

/// Moments of `w = 1`: `2/(1-n^2)` for even `n`, zero for odd `n`.
pub fn moments_clenshaw_curtis(m: usize) -> Result<MomentVector> {
    build(m, |n| {
        if n % 2 == 0 {
            let nf = n as f64;
            2.0 / (1.0 - nf * nf)
        } else {
            0.0
        }
    })
}

/// Moments of `log(2/(1-x)) / sqrt(1-x^2)`.
pub fn moments_log_chebyshev(m: usize) -> Result<MomentVector> {
    build(m, |n| if n == 0 { 2.0 * PI * LN_2 } else { PI / n as f64 })
}

/// Moments of `|x|`.
pub fn moments_abs_x(m: usize) -> Result<MomentVector> {
    build(m, |n| {
        if n % 4 == 0 {
            let h = n as f64 / 2.0;
            1.0 / (1.0 - h * h)
        } else {
            0.0
        }
    })
}

/// Moments of `log(2/(1-x))`.
///
/// The digamma values at half-integers are expanded as
/// `psi(k + 1/2) = -gamma - 2 ln 2 + sum_{j<k} 2/(2j+1)`, after which the
/// Euler–Mascheroni and `ln 2` terms cancel exactly, leaving
/// `(n^2-1) mu_n = 2 - 2 S_k - r_n` with `S_k` that partial sum.
pub fn moments_log_weight(m: usize) -> Result<MomentVector> {
    let mut values = Vec::with_capacity(m);
    let mut partial = 0.0; // S_k for the current k
    let mut k_done = 0usize;
    for n in 0..m {
        let v = match n {
            0 => 2.0,
            1 => 1.0,
            _ => {
                let nf = n as f64;
                let (k, r) = if n % 2 == 0 {
                    ((n - 2) / 2, 4.0 * nf / (nf * nf - 1.0))
                } else {
                    ((n - 1) / 2, 2.0 / nf)
                };
                while k_done < k {
                    partial += 2.0 / (2 * k_done + 1) as f64;
                    k_done += 1;
                }
                (2.0 - 2.0 * partial - r) / (nf * nf - 1.0)
            }
        };
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("need at least one moment".into()));
    }
    MomentVector::new(Family::chebyshev_t(), values, Provenance::ClosedForm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_curtis_examples() {
        let mu = moments_clenshaw_curtis(5).unwrap();
        let v = mu.values();
        assert_eq!(v[0], 2.0);
        assert_eq!(v[1], 0.0);
        assert!((v[2] + 2.0 / 3.0).abs() < 1e-16);
        assert!((v[4] + 2.0 / 15.0).abs() < 1e-16);
        assert!(moments_clenshaw_curtis(0).is_err());
    }

    #[test]
    fn log_chebyshev_examples() {
        let v = moments_log_chebyshev(10).unwrap().into_values();
        assert!((v[0] - 4.355172180607204).abs() < 1e-14);
        assert!((v[3] - PI / 3.0).abs() < 1e-16);
        for (n, x) in v.iter().enumerate().skip(1) {
            assert!((x * n as f64 - PI).abs() < 1e-14);
        }
    }

    #[test]
    fn abs_x_examples() {
        let v = moments_abs_x(9).unwrap().into_values();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[2], 0.0);
        assert!((v[4] + 1.0 / 3.0).abs() < 1e-16);
        assert!((v[8] + 1.0 / 15.0).abs() < 1e-16);
    }

    #[test]
    fn log_weight_examples() {
        let v = moments_log_weight(4).unwrap().into_values();
        assert_eq!(v[0], 2.0);
        assert_eq!(v[1], 1.0);
        assert!((v[2] + 2.0 / 9.0).abs() < 1e-16);
        assert!((v[3] + 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn log_weight_satisfies_three_term_recurrence() {
        // (n+2) mu_{n+1} - (n-2) mu_{n-1} = 2 mu_n[1+x]
        let v = moments_log_weight(400).unwrap().into_values();
        let cc = moments_clenshaw_curtis(402).unwrap().into_values();
        for n in 1..399 {
            let nf = n as f64;
            // mu_n[1+x] = mu_n[1] + (mu_{n-1}[1] + mu_{n+1}[1]) / 2 for n >= 1
            let rhs = 2.0 * (cc[n] + 0.5 * (cc[n - 1] + cc[n + 1]));
            let lhs = (nf + 2.0) * v[n + 1] - (nf - 2.0) * v[n - 1];
            assert!((lhs - rhs).abs() < 1e-13, "n={n}: {lhs} vs {rhs}");
        }
    }
}
