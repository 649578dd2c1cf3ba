//! Modified moments `mu_k[w] = \int p_k(x) w(x) dx` of a weight against a
//! classical family.

mod bounds;
mod closed;
mod ode;
pub mod presets;
mod simple;

use std::io::{BufRead, Write};

pub use bounds::{moment_bound_bv, moment_bound_bv2};
pub use closed::{
    moments_abs_x, moments_clenshaw_curtis, moments_log_chebyshev, moments_log_weight,
};
pub use ode::{
    moments_from_ode, moments_from_ode_downward, recurrence_operator, OdeWeight, Rhs, WeightOde,
};
pub use presets::Preset;
pub use simple::{moments_simple_function, moments_weighted_simple_function, SimpleFunction};

use crate::classical::Family;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    OdeRecurrence,
    SimpleFunction,
    Quadrature,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    family: Family,
    values: Vec<f64>,
    provenance: Provenance,
}

impl MomentVector {
    pub fn new(family: Family, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("moment vector must be nonempty".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment {k} is not finite")));
        }
        Ok(MomentVector {
            family,
            values,
            provenance,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// First `m` moments (or all of them if fewer are stored).
    pub fn truncated(&self, m: usize) -> MomentVector {
        MomentVector {
            family: self.family.clone(),
            values: self.values[..m.min(self.values.len())].to_vec(),
            provenance: self.provenance,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `n,mu` CSV with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "n,mu")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{k},{v:.16e}")?;
        }
        Ok(())
    }

    /// Reads the `n,mu` CSV format written by [`MomentVector::write_csv`].
    pub fn read_csv(family: Family, input: impl BufRead) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('n')) {
                continue;
            }
            let mut parts = line.split(',');
            let idx: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad index", lineno + 1)))?;
            let val: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad value", lineno + 1)))?;
            if idx != values.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected index {}, found {idx}",
                    lineno + 1,
                    values.len()
                )));
            }
            values.push(val);
        }
        MomentVector::new(family, values, Provenance::External)
    }
}

/// Error of `approx` against `exact`: relative where `exact` is nonzero,
/// otherwise `|approx|` relative to the largest exact moment.
pub fn moment_errors(approx: &[f64], exact: &[f64]) -> Vec<f64> {
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            if *e == 0.0 {
                a.abs() / scale
            } else {
                ((a - e) / e).abs()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let mv = moments_log_chebyshev(20).unwrap();
        let mut buf = Vec::new();
        mv.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,mu\n0,4.35517"));
        let back = MomentVector::read_csv(Family::chebyshev_t(), &buf[..]).unwrap();
        assert_eq!(back.values(), mv.values());
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(MomentVector::new(Family::legendre(), vec![], Provenance::External).is_err());
        assert!(
            MomentVector::new(Family::legendre(), vec![1.0, f64::NAN], Provenance::External)
                .is_err()
        );
        let bad = "n,mu\n0,1.0\n2,3.0\n";
        assert!(MomentVector::read_csv(Family::legendre(), bad.as_bytes()).is_err());
    }
}
