//! Option parsing shared by every command, and the key=value weight files.
//!
//! Weight files hold one `key = value` pair per line; `#` starts a comment
//! and lists are comma- or whitespace-separated.
//!
//! ODE files describe `a(x) (sigma w)' + b(x) w = c(x)`:
//!
//! ```text
//! a_coeffs = 1            # ascending monomial coefficients
//! b_coeffs = 0.5, 2.5
//! rhs      = zero         # zero | lebesgue | classical | explicit moment list
//! initial  = 1.2, 0.3     # leading moments seeding the recurrence
//! ```
//!
//! Simple-function files describe a piecewise-constant `s`:
//!
//! ```text
//! breakpoints = 0, 4, inf
//! values      = 4096, 1
//! weighted    = true      # moments of w_c s instead of s
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use opmod_core::classical::Family;
use opmod_core::connection::Backend;
use opmod_core::moments::presets::parse_list;
use opmod_core::moments::{
    moments_from_ode, moments_simple_function, moments_weighted_simple_function, MomentVector,
    Preset, Provenance, Rhs, SimpleFunction, WeightOde,
};
use opmod_core::quadrature::{self, Point};

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Parses `chebyshev-t`, `chebyshev-u`, `legendre`, `jacobi:a,b` or `laguerre:a`.
pub fn parse_family(s: &str) -> Result<Family, CliError> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n, parse_list(a)?),
        None => (s, Vec::new()),
    };
    let fam = match (name, args.as_slice()) {
        ("chebyshev-t", []) => Family::chebyshev_t(),
        ("chebyshev-u", []) => Family::chebyshev_u(),
        ("legendre", []) => Family::legendre(),
        ("jacobi", [a, b]) => Family::jacobi(*a, *b)?,
        ("laguerre", [a]) => Family::laguerre(*a)?,
        _ => {
            return Err(CliError::Config(format!(
                "unknown family {s:?}; expected chebyshev-t, chebyshev-u, legendre, jacobi:a,b or laguerre:a"
            )))
        }
    };
    Ok(fam)
}

fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1)));
        };
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("{}: duplicate key {}", path.display(), k.trim())));
        }
    }
    Ok(out)
}

fn take<'a>(kv: &'a BTreeMap<String, String>, key: &str, path: &Path) -> Result<&'a str, CliError> {
    kv.get(key)
        .map(String::as_str)
        .ok_or_else(|| CliError::Config(format!("{}: missing key {key}", path.display())))
}

fn reject_unknown(kv: &BTreeMap<String, String>, allowed: &[&str], path: &Path) -> Result<(), CliError> {
    match kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::Config(format!("{}: unknown key {k}", path.display()))),
        None => Ok(()),
    }
}

/// Where the moments come from.
#[derive(Debug, Clone)]
pub enum WeightSource {
    Preset(Preset),
    Ode { ode: WeightOde, initial: Vec<f64> },
    Simple { s: SimpleFunction, weighted: bool },
}

impl WeightSource {
    pub fn read_ode(path: &Path, family: &Family) -> Result<Self, CliError> {
        let kv = read_key_values(path)?;
        reject_unknown(&kv, &["a_coeffs", "b_coeffs", "rhs", "initial"], path)?;
        let a = parse_list(take(&kv, "a_coeffs", path)?)?;
        let b = parse_list(take(&kv, "b_coeffs", path)?)?;
        let rhs = match kv.get("rhs").map(String::as_str).unwrap_or("zero") {
            "zero" => Rhs::Zero,
            "lebesgue" => Rhs::Lebesgue,
            "classical" => Rhs::Classical,
            list => Rhs::Explicit(parse_list(list)?),
        };
        let initial = parse_list(take(&kv, "initial", path)?)?;
        let ode = WeightOde::new(family.clone(), a, b, rhs)?;
        Ok(WeightSource::Ode { ode, initial })
    }

    pub fn read_simple(path: &Path) -> Result<Self, CliError> {
        let kv = read_key_values(path)?;
        reject_unknown(&kv, &["breakpoints", "values", "weighted"], path)?;
        let bp = parse_list(take(&kv, "breakpoints", path)?)?;
        let values = parse_list(take(&kv, "values", path)?)?;
        let weighted = match kv.get("weighted").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(v) => return Err(CliError::Config(format!("{}: weighted must be true or false, got {v}", path.display()))),
        };
        Ok(WeightSource::Simple {
            s: SimpleFunction::new(bp, values)?,
            weighted,
        })
    }

    pub fn moments(&self, family: &Family, m: usize) -> Result<MomentVector, CliError> {
        Ok(match self {
            WeightSource::Preset(p) => p.moments(m)?,
            WeightSource::Ode { ode, initial } => {
                let init = MomentVector::new(family.clone(), initial.clone(), Provenance::Quadrature)?;
                if m <= initial.len() {
                    init.truncated(m)
                } else {
                    moments_from_ode(ode, &init, m)?
                }
            }
            WeightSource::Simple { s, weighted: true } => moments_weighted_simple_function(s, family, m)?,
            WeightSource::Simple { s, weighted: false } => moments_simple_function(s, family, m)?,
        })
    }

    /// Quadrature reference moments, where the weight has pointwise values.
    pub fn quadrature_moments(&self, family: &Family, m: usize) -> Option<Vec<f64>> {
        match self {
            WeightSource::Preset(p) => Some(p.quadrature_moments(m)),
            WeightSource::Ode { .. } => None,
            WeightSource::Simple { s, weighted } => {
                let (lo, hi) = family.domain();
                let pts: Vec<f64> = s.breakpoints().iter().copied().filter(|&x| x > lo && x < hi).collect();
                let w = |p: &Point| {
                    let v = s.eval(p.x);
                    if *weighted {
                        v * family.weight(p.x)
                    } else {
                        v
                    }
                };
                Some(quadrature::moments(family, w, &pts, m))
            }
        }
    }
}

/// Options common to every command, after validation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Family,
    pub weight: WeightSource,
    pub n: usize,
    pub tol: f64,
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub leaf: usize,
}

/// Raw option values as they come off the command line.
#[derive(Debug, Clone, Default)]
pub struct RawOptions {
    pub family: Option<String>,
    pub weight: Option<String>,
    pub ode: Option<PathBuf>,
    pub simple: Option<PathBuf>,
    pub t: Option<String>,
    pub gamma: Option<String>,
    pub n: usize,
    pub tol: Option<f64>,
    pub backend: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub leaf: usize,
}

impl RunConfig {
    pub fn from_raw(raw: RawOptions) -> Result<Self, CliError> {
        if raw.n < 2 {
            return Err(CliError::Config(format!("--n must be at least 2, got {}", raw.n)));
        }
        let tol = raw.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("--tol must lie in (0, 1), got {tol}")));
        }
        if raw.leaf == 0 {
            return Err(CliError::Config("--leaf must be positive".into()));
        }
        let sources = [raw.weight.is_some(), raw.ode.is_some(), raw.simple.is_some()];
        if sources.iter().filter(|&&s| s).count() > 1 {
            return Err(CliError::Config("give at most one of --weight, --ode, --simple".into()));
        }
        if (raw.t.is_some() || raw.gamma.is_some()) && raw.weight.as_deref() != Some("algebraic") {
            return Err(CliError::Config("--t and --gamma only apply to --weight algebraic".into()));
        }
        let family_opt = raw.family.as_deref().map(parse_family).transpose()?;
        let (family, weight) = if let Some(path) = &raw.ode {
            let family = family_opt.unwrap_or_else(Family::chebyshev_t);
            let w = WeightSource::read_ode(path, &family)?;
            (family, w)
        } else if let Some(path) = &raw.simple {
            (family_opt.unwrap_or_else(Family::chebyshev_t), WeightSource::read_simple(path)?)
        } else {
            let name = raw.weight.as_deref().unwrap_or("log-chebyshev");
            let mut preset = Preset::parse(name)?;
            if let Preset::Algebraic { .. } = preset {
                if raw.t.is_some() || raw.gamma.is_some() {
                    let (Some(t), Some(g)) = (&raw.t, &raw.gamma) else {
                        return Err(CliError::Config("--t and --gamma must be given together".into()));
                    };
                    preset = Preset::algebraic(parse_list(t)?, parse_list(g)?)?;
                }
            }
            let family = preset.family();
            if let Some(f) = family_opt {
                if f != family {
                    return Err(CliError::Config(format!(
                        "preset {preset} is defined against {}, not {}",
                        family.name(),
                        f.name()
                    )));
                }
            }
            (family, WeightSource::Preset(preset))
        };
        let backend = raw
            .backend
            .as_deref()
            .filter(|b| *b != "auto")
            .map(str::parse::<Backend>)
            .transpose()?;
        Ok(RunConfig {
            family,
            weight,
            n: raw.n,
            tol,
            backend,
            seed: raw.seed,
            out: raw.out,
            leaf: raw.leaf,
        })
    }

    /// The seed, which HODLR runs must state explicitly.
    pub fn hodlr_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("the HODLR backend needs --seed for reproducible sketches".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn raw(n: usize) -> RawOptions {
        RawOptions {
            n,
            leaf: 64,
            ..Default::default()
        }
    }

    #[test]
    fn families_parse() {
        assert_eq!(parse_family("legendre").unwrap(), Family::legendre());
        assert_eq!(parse_family("jacobi:0.5,-0.5").unwrap(), Family::jacobi(0.5, -0.5).unwrap());
        assert!(parse_family("jacobi:0.5").is_err());
        assert!(parse_family("hermite").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::from_raw(raw(1)).is_err());
        assert!(RunConfig::from_raw(RawOptions { tol: Some(1.0), ..raw(8) }).is_err());
        let c = RunConfig::from_raw(raw(8)).unwrap();
        assert!(matches!(c.weight, WeightSource::Preset(Preset::LogChebyshev)));
        assert!(c.hodlr_seed().is_err());
        let clash = RawOptions {
            weight: Some("delta-sqrt:1".into()),
            family: Some("chebyshev-t".into()),
            ..raw(8)
        };
        assert!(RunConfig::from_raw(clash).is_err());
    }

    #[test]
    fn algebraic_factors_from_options() {
        let c = RunConfig::from_raw(RawOptions {
            weight: Some("algebraic".into()),
            t: Some("0.3".into()),
            gamma: Some("0.5".into()),
            ..raw(8)
        })
        .unwrap();
        assert!(matches!(c.weight, WeightSource::Preset(Preset::Algebraic { ref t, .. }) if t == &[0.3]));
        let half = RawOptions {
            weight: Some("algebraic".into()),
            t: Some("0.3".into()),
            ..raw(8)
        };
        assert!(RunConfig::from_raw(half).is_err());
    }

    #[test]
    fn simple_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# step\nbreakpoints = -1, 0, 1\nvalues = 2, 1").unwrap();
        let w = WeightSource::read_simple(f.path()).unwrap();
        let fam = Family::legendre();
        let mu = w.moments(&fam, 4).unwrap();
        assert!((mu.values()[0] - 3.0).abs() < 1e-14);
        let q = w.quadrature_moments(&fam, 4).unwrap();
        for (a, b) in mu.values().iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ode_file() {
        // w = 1 against Legendre: (sigma w)' + 2x w = 0
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a_coeffs = 1\nb_coeffs = 0 2\ninitial = 2").unwrap();
        let fam = Family::legendre();
        let w = WeightSource::read_ode(f.path(), &fam).unwrap();
        let mu = w.moments(&fam, 6).unwrap();
        assert!((mu.values()[0] - 2.0).abs() < 1e-15);
        assert!(mu.values()[1..].iter().all(|v| v.abs() < 1e-14));
        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "a_coeffs = 1\nb_coeffs = 0 2\ninitial = 2\ncolour = blue").unwrap();
        assert!(WeightSource::read_ode(bad.path(), &fam).is_err());
    }
}
