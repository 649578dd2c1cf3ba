//! Named weights used by the command line and the test suites.

use std::fmt;
use std::str::FromStr;

use super::{
    moments_abs_x, moments_clenshaw_curtis, moments_log_chebyshev, moments_log_weight,
    moments_weighted_simple_function, MomentVector, OdeWeight, Provenance, SimpleFunction,
};
use crate::classical::Family;
use crate::error::{Error, Result};
use crate::quadrature::{self, Point};

/// Singularity locations of the default four-factor algebraic weight.
pub const ALGEBRAIC_T: [f64; 4] = [-0.5, -0.25, 0.25, 0.5];
/// Exponents of the default four-factor algebraic weight.
pub const ALGEBRAIC_GAMMA: [f64; 4] = [-0.5, -0.25, 0.25, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `w = 1` against ChebyshevT.
    ClenshawCurtis,
    /// `log(2/(1-x)) / sqrt(1-x^2)` against ChebyshevT.
    LogChebyshev,
    /// `|x|` against ChebyshevT.
    AbsX,
    /// `log(2/(1-x))` against ChebyshevT.
    Log,
    /// `(1-x)^a (1+x)^b` against ChebyshevT, by recurrence.
    Jacobi(f64, f64),
    /// `1/sqrt(1+d-x)` against Legendre, truncated where its Legendre
    /// coefficients drop below machine precision.
    DeltaSqrt(f64),
    /// `prod |t_i + x|^{gamma_i}` against ChebyshevT, by recurrence.
    Algebraic { t: Vec<f64>, gamma: Vec<f64> },
    /// `(4096 chi_[0,4) + chi_[4,inf)) e^{-x}` against Laguerre(0).
    LaguerreStep,
}

impl Preset {
    pub const NAMES: [&'static str; 8] = [
        "clenshaw-curtis",
        "log-chebyshev",
        "abs-x",
        "log",
        "jacobi",
        "delta-sqrt",
        "algebraic",
        "laguerre-step",
    ];

    pub fn algebraic_default() -> Self {
        Preset::Algebraic {
            t: ALGEBRAIC_T.to_vec(),
            gamma: ALGEBRAIC_GAMMA.to_vec(),
        }
    }

    /// Parses `name` or `name:p1,p2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (spec.trim(), None),
        };
        let params: Vec<f64> = match args {
            Some(a) => parse_list(a)?,
            None => Vec::new(),
        };
        let want = |k: usize| -> Result<()> {
            if params.len() != k {
                return Err(Error::Parse(format!(
                    "preset {name} takes {k} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        let preset = match name {
            "clenshaw-curtis" => Preset::ClenshawCurtis,
            "log-chebyshev" => Preset::LogChebyshev,
            "abs-x" => Preset::AbsX,
            "log" => Preset::Log,
            "laguerre-step" => Preset::LaguerreStep,
            "jacobi" => {
                want(2)?;
                Family::jacobi(params[0], params[1])?;
                Preset::Jacobi(params[0], params[1])
            }
            "delta-sqrt" => {
                want(1)?;
                if !(params[0] > 0.0) || !params[0].is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "delta must be positive, got {}",
                        params[0]
                    )));
                }
                Preset::DeltaSqrt(params[0])
            }
            "algebraic" => {
                if params.is_empty() {
                    Preset::algebraic_default()
                } else {
                    return Err(Error::Parse(
                        "give algebraic factors with --t and --gamma".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unknown preset {name:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        if args.is_some() && params.is_empty() {
            return Err(Error::Parse(format!("empty parameter list for {name}")));
        }
        if !params.is_empty() {
            want(match preset {
                Preset::Jacobi(..) => 2,
                Preset::DeltaSqrt(_) => 1,
                _ => 0,
            })?;
        }
        Ok(preset)
    }

    pub fn algebraic(t: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        OdeWeight::algebraic(t.clone(), gamma.clone())?;
        Ok(Preset::Algebraic { t, gamma })
    }

    pub fn family(&self) -> Family {
        match self {
            Preset::DeltaSqrt(_) => Family::legendre(),
            Preset::LaguerreStep => Family::laguerre(0.0).expect("valid parameter"),
            _ => Family::chebyshev_t(),
        }
    }

    fn ode_weight(&self) -> Option<OdeWeight> {
        match self {
            Preset::Jacobi(a, b) => OdeWeight::jacobi_power(*a, *b).ok(),
            Preset::Algebraic { t, gamma } => OdeWeight::algebraic(t.clone(), gamma.clone()).ok(),
            _ => None,
        }
    }

    fn step() -> SimpleFunction {
        SimpleFunction::new(vec![0.0, 4.0, f64::INFINITY], vec![4096.0, 1.0]).expect("valid step")
    }

    /// `rho` with `rho + 1/rho = 2(1 + d)`.
    fn delta_rho(d: f64) -> f64 {
        1.0 + d + (d * (2.0 + d)).sqrt()
    }

    /// First `m` moments by the preset's exact method.
    pub fn moments(&self, m: usize) -> Result<MomentVector> {
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one moment".into()));
        }
        match self {
            Preset::ClenshawCurtis => moments_clenshaw_curtis(m),
            Preset::LogChebyshev => moments_log_chebyshev(m),
            Preset::AbsX => moments_abs_x(m),
            Preset::Log => moments_log_weight(m),
            Preset::Jacobi(..) | Preset::Algebraic { .. } => {
                self.ode_weight().expect("validated").moments(&self.family(), m)
            }
            Preset::DeltaSqrt(d) => {
                let rho = Self::delta_rho(*d);
                let b = self.bandwidth().expect("banded preset");
                let scale = (2.0 / rho).sqrt();
                let values = (0..m)
                    .map(|k| {
                        if k > b {
                            0.0
                        } else {
                            scale * rho.powi(-(k as i32)) * 2.0 / (2 * k + 1) as f64
                        }
                    })
                    .collect();
                MomentVector::new(self.family(), values, Provenance::ClosedForm)
            }
            Preset::LaguerreStep => moments_weighted_simple_function(&Self::step(), &self.family(), m),
        }
    }

    /// The weight at a quadrature point.
    pub fn weight(&self, p: &Point) -> f64 {
        match self {
            Preset::ClenshawCurtis => 1.0,
            Preset::LogChebyshev => {
                let (u, v) = (p.dist(1.0), p.dist(-1.0));
                (2.0 / u).ln() / (u * v).sqrt()
            }
            Preset::AbsX => p.dist(0.0),
            Preset::Log => (2.0 / p.dist(1.0)).ln(),
            Preset::Jacobi(..) | Preset::Algebraic { .. } => {
                self.ode_weight().expect("validated").eval(p)
            }
            Preset::DeltaSqrt(d) => 1.0 / (1.0 + d - p.x).sqrt(),
            Preset::LaguerreStep => Self::step().eval(p.x) * (-p.x).exp(),
        }
    }

    /// Interior points where the weight is not smooth.
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            Preset::AbsX => vec![0.0],
            Preset::Algebraic { .. } => self.ode_weight().expect("validated").singular_points(),
            Preset::LaguerreStep => vec![4.0],
            _ => Vec::new(),
        }
    }

    /// Index past which every moment is zero, for band-limited presets.
    pub fn bandwidth(&self) -> Option<usize> {
        match self {
            Preset::DeltaSqrt(d) => {
                let rho = Self::delta_rho(*d);
                let b = (f64::EPSILON.ln() / -rho.ln()).ceil();
                Some(b as usize)
            }
            _ => None,
        }
    }

    /// Moments by the quadrature oracle, for checking.
    pub fn quadrature_moments(&self, m: usize) -> Vec<f64> {
        quadrature::moments(&self.family(), |p| self.weight(p), &self.singular_points(), m)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::parse(s)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::ClenshawCurtis => write!(f, "clenshaw-curtis"),
            Preset::LogChebyshev => write!(f, "log-chebyshev"),
            Preset::AbsX => write!(f, "abs-x"),
            Preset::Log => write!(f, "log"),
            Preset::Jacobi(a, b) => write!(f, "jacobi:{a},{b}"),
            Preset::DeltaSqrt(d) => write!(f, "delta-sqrt:{d}"),
            Preset::Algebraic { .. } => write!(f, "algebraic"),
            Preset::LaguerreStep => write!(f, "laguerre-step"),
        }
    }
}

/// Comma- or whitespace-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: {t:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for s in ["clenshaw-curtis", "log", "jacobi:0.5,-0.5", "delta-sqrt:1", "laguerre-step"] {
            let p = Preset::parse(s).unwrap();
            assert_eq!(Preset::parse(&p.to_string()).unwrap(), p);
        }
        assert!(Preset::parse("jacobi:1").is_err());
        assert!(Preset::parse("jacobi:-1,0").is_err());
        assert!(Preset::parse("nope").is_err());
        assert!(Preset::parse("delta-sqrt:-1").is_err());
        assert!(Preset::parse("log:1").is_err());
    }

    #[test]
    fn all_presets_match_quadrature() {
        let presets = [
            Preset::ClenshawCurtis,
            Preset::LogChebyshev,
            Preset::AbsX,
            Preset::Log,
            Preset::Jacobi(0.5, -0.3),
            Preset::DeltaSqrt(1.0),
            Preset::algebraic_default(),
        ];
        for p in presets {
            let mu = p.moments(120).unwrap();
            let q = p.quadrature_moments(120);
            let scale = mu.max_abs();
            for (k, (a, b)) in mu.values().iter().zip(&q).enumerate() {
                assert!((a - b).abs() <= 1e-8 * b.abs() + 1e-14 * scale, "{p}: k={k} {a} vs {b}");
            }
        }
    }

    #[test]
    fn laguerre_step_matches_quadrature() {
        let p = Preset::LaguerreStep;
        let mu = p.moments(30).unwrap();
        let q = p.quadrature_moments(30);
        for k in 0..30 {
            assert!((mu.values()[k] - q[k]).abs() <= 1e-10 * q[0], "{k}");
        }
    }

    #[test]
    fn delta_sqrt_is_band_limited() {
        let p = Preset::DeltaSqrt(1.0);
        let b = p.bandwidth().unwrap();
        let mu = p.moments(b + 10).unwrap();
        assert!(mu.values()[b] != 0.0);
        assert!(mu.values()[b + 1..].iter().all(|&v| v == 0.0));
        assert!(mu.values()[b].abs() < 1e-14 * mu.values()[0]);
    }
}
