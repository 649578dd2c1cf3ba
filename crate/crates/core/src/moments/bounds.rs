use crate::error::{Error, Result};

/// Upper bound on `|mu_n[w]|` (Chebyshev, Lebesgue measure) for `w` of
/// bounded variation: `2 |w|_inf / (n-1)^2 + V(w) / (n-1)`, valid for `n >= 2`.
pub fn moment_bound_bv(sup_w: f64, total_variation_w: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("bound needs n >= 2, got {n}")));
    }
    let d = (n - 1) as f64;
    Ok(2.0 * sup_w / (d * d) + total_variation_w / d)
}

/// Sharper bound for absolutely continuous `w` with `w'` of bounded variation,
/// valid for `n >= 3`.
pub fn moment_bound_bv2(sup_w: f64, sup_dw: f64, total_variation_dw: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("bound needs n >= 3, got {n}")));
    }
    let d1 = (n - 1) as f64;
    let d2 = (n - 2) as f64;
    Ok(2.0 * sup_w / (d1 * d1) + 2.0 * sup_dw / (d2 * d2 * d2) + total_variation_dw / (d2 * d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::Family;
    use crate::quadrature;

    #[test]
    fn examples() {
        assert_eq!(moment_bound_bv(1.0, 0.0, 3).unwrap(), 0.5);
        assert_eq!(moment_bound_bv(0.0, 0.0, 17).unwrap(), 0.0);
        assert!(moment_bound_bv(1.0, 1.0, 1).is_err());
        assert!(moment_bound_bv2(1.0, 1.0, 1.0, 2).is_err());
        assert_eq!(moment_bound_bv(1.0, 2.0, 5).unwrap(), 0.625);
    }

    #[test]
    fn x_squared_is_below_bounds() {
        let mu = quadrature::moments(&Family::chebyshev_t(), |p| p.x * p.x, &[], 101);
        assert!(mu[5].abs() <= 0.625);
        for n in 2..=100 {
            assert!(mu[n].abs() <= moment_bound_bv(1.0, 2.0, n).unwrap());
        }
        // w' = 2x: sup 2, variation 4
        for n in 3..=100 {
            assert!(mu[n].abs() <= moment_bound_bv2(1.0, 2.0, 4.0, n).unwrap());
        }
    }
}
