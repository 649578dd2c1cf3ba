//! Exact moments of piecewise-constant weights, optionally multiplied by the
//! family's classical weight.

use super::{MomentVector, Provenance};
use crate::classical::{
    basis_diff_pinv_col, basis_diff_pinv_row, raising_matrix, Family,
};
use crate::error::{Error, Result};

/// `s(x) = values[k]` on `(breakpoints[k], breakpoints[k+1])`. The last
/// breakpoint may be `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl SimpleFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            )));
        }
        if breakpoints.iter().any(|x| x.is_nan())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
            || breakpoints[..breakpoints.len() - 1].iter().any(|x| x.is_infinite())
        {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing and finite (except a final +inf)".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("simple-function values must be finite".into()));
        }
        Ok(SimpleFunction {
            breakpoints,
            values,
        })
    }

    /// The constant `value` on `[a, b]`.
    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if x < b[0] || x > b[b.len() - 1] {
            return 0.0;
        }
        let k = b.partition_point(|&t| t <= x).clamp(1, self.values.len());
        self.values[k - 1]
    }

    fn check_domain(&self, family: &Family) -> Result<()> {
        let (lo, hi) = family.domain();
        for &x in &self.breakpoints {
            if x < lo || x > hi {
                return Err(Error::BreakpointOutsideDomain(x));
            }
        }
        Ok(())
    }
}

/// Moments of the simple function itself (Lebesgue measure):
/// `mu = sum_k s_k [P(x_k) - P(x_{k-1})] D^+ R`.
pub fn moments_simple_function(s: &SimpleFunction, family: &Family, m: usize) -> Result<MomentVector> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one moment".into()));
    }
    s.check_domain(family)?;
    let n = m + 1;
    let mut v = vec![0.0; n];
    let bp = s.breakpoints();
    for (k, &sk) in s.values().iter().enumerate() {
        if sk == 0.0 {
            continue;
        }
        if bp[k + 1].is_infinite() {
            return Err(Error::InvalidArgument(
                "simple function must vanish on an unbounded piece".into(),
            ));
        }
        let hi = crate::classical::evaluate(family, n, bp[k + 1]);
        let lo = crate::classical::evaluate(family, n, bp[k]);
        for j in 0..n {
            v[j] += sk * (hi[j] - lo[j]);
        }
    }
    let basis = family.basis();
    let w = basis_diff_pinv_row(basis, &v);
    let r = raising_matrix(family, n)?;
    let bw = r.upper_bandwidth();
    let mu: Vec<f64> = (0..m)
        .map(|j| (j.saturating_sub(bw)..=j).map(|i| w[i] * r.get(i, j)).sum())
        .collect();
    MomentVector::new(family.clone(), mu, Provenance::SimpleFunction)
}

/// Moments of `w_c(x) s(x)` with `w_c` the family's classical weight:
/// `mu_{k+1} = sum_j s_j [sigma w_c p'_k]_{x_j}^{x_{j-1}} h_{k+1} / (D[k, k+1] h'_k)`
/// where `h`, `h'` are the squared norms of the family and its derivative family.
/// The zeroth moment is annihilated by `D^+` and is computed separately as
/// `sum_j s_j \int_{x_{j-1}}^{x_j} w_c`.
pub fn moments_weighted_simple_function(
    s: &SimpleFunction,
    family: &Family,
    m: usize,
) -> Result<MomentVector> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one moment".into()));
    }
    s.check_domain(family)?;
    let basis = family.basis();
    let deriv = basis.derivative();
    let bp = s.breakpoints();
    // boundary data sigma(x) w_c(x) P'(x); vanishes at +inf and at weighted endpoints
    let boundary = |x: f64| -> Vec<f64> {
        let sw = family.sigma_weight(x);
        if sw == 0.0 {
            return vec![0.0; m];
        }
        deriv.evaluate(m, x).into_iter().map(|p| p * sw).collect()
    };
    let mut u = vec![0.0; m];
    let mut mu0 = 0.0;
    for (k, &sk) in s.values().iter().enumerate() {
        if sk == 0.0 {
            continue;
        }
        let lo = boundary(bp[k]);
        let hi = boundary(bp[k + 1]);
        for j in 0..m {
            u[j] += sk * (lo[j] - hi[j]);
        }
        mu0 += sk * family.weight_integral(bp[k], bp[k + 1]);
    }
    // -(sigma w_c p'_k)' = w_c p_{k+1} D[k, k+1] h'_k / h_{k+1}, so D^+ alone
    // is exact only when the two norm sequences coincide (as for ChebyshevT)
    let mut mu = basis_diff_pinv_col(basis, &u);
    for (k, v) in mu.iter_mut().enumerate().skip(1) {
        *v *= basis.norm(k) / deriv.norm(k - 1);
    }
    mu[0] = mu0;
    MomentVector::new(family.clone(), mu, Provenance::SimpleFunction)
}
