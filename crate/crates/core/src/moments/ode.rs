//! Linear recurrences for moments of weights satisfying
//! `a(x) (sigma w)' + b(x) w = c(x)`.
//!
//! Expanding `w = w_c P(x) coeffs` turns the ODE into the banded system
//! `A mu[w] = mu[c]` with `A = M {a(X)[L D + tau(X)] + b(X)} M^{-1}`. Each row
//! of `A` then determines one new moment from the previous ones.

use super::{moments_simple_function, MomentVector, Provenance, SimpleFunction};
use crate::classical::{
    basis_multiplication, differentiation_matrix, mass_matrix, weighted_lowering_matrix,
    BandedSection, Family, FamilyKind,
};
use crate::error::{Error, Result};
use crate::quadrature::{self, Point};

/// Moments of the inhomogeneity `c(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    /// `c = 0`.
    Zero,
    /// Precomputed moments of `c`; must cover every row that is solved.
    Explicit(Vec<f64>),
    /// `c = 1` (bounded families only).
    Lebesgue,
    /// `c = w_c`, the family's own classical weight.
    Classical,
    /// `c(x) = q(x) base(x)` with ascending coefficients `q`.
    Polynomial { coeffs: Vec<f64>, base: Box<Rhs> },
    /// `c` is itself a weight with a known ODE.
    Weight(Box<OdeWeight>),
}

impl Rhs {
    fn moments(&self, family: &Family, count: usize) -> Result<Vec<f64>> {
        match self {
            Rhs::Zero => Ok(vec![0.0; count]),
            Rhs::Explicit(v) => {
                if v.len() < count {
                    return Err(Error::InsufficientMoments {
                        needed: count,
                        got: v.len(),
                    });
                }
                Ok(v[..count].to_vec())
            }
            Rhs::Lebesgue => {
                if !family.is_bounded() {
                    return Err(Error::InvalidArgument(
                        "the constant function has no moments on an unbounded domain".into(),
                    ));
                }
                let (a, b) = family.domain();
                let s = SimpleFunction::constant(a, b, 1.0)?;
                Ok(moments_simple_function(&s, family, count)?.into_values())
            }
            Rhs::Classical => {
                let mut v = vec![0.0; count];
                if count > 0 {
                    v[0] = mass_matrix(family, 1)?.get(0, 0);
                }
                Ok(v)
            }
            Rhs::Polynomial { coeffs, base } => {
                let deg = coeffs.len().saturating_sub(1);
                let n = count + deg;
                let mu = base.moments(family, n)?;
                // mu_k[q c] = (q(X)^T mu[c])_k
                let qx = basis_multiplication(family.basis(), n)
                    .to_banded()
                    .polynomial(coeffs);
                Ok((0..count)
                    .map(|k| (0..=(k + deg).min(n - 1)).map(|j| qx.get(j, k) * mu[j]).sum())
                    .collect())
            }
            Rhs::Weight(w) => Ok(w.moments(family, count)?.into_values()),
        }
    }
}

/// A weight ODE in normal form with its target family.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightOde {
    family: Family,
    a: Vec<f64>,
    b: Vec<f64>,
    rhs: Rhs,
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    if p.is_empty() {
        p.push(0.0);
    }
    p
}

impl WeightOde {
    pub fn new(family: Family, a: Vec<f64>, b: Vec<f64>, rhs: Rhs) -> Result<Self> {
        let (a, b) = (trim(a), trim(b));
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("ODE coefficients must be finite".into()));
        }
        if a.iter().chain(&b).all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("ODE is identically zero".into()));
        }
        Ok(WeightOde { family, a, b, rhs })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    /// Half-bandwidth `h` of the recurrence operator; the recurrence has
    /// `2h + 1` terms and needs `h` leading moments.
    pub fn bandwidth(&self) -> usize {
        let da = if self.a.iter().all(|&v| v == 0.0) { 0 } else { self.a.len() };
        da.max(self.b.len() - 1)
    }

    /// Number of terms in the recurrence.
    pub fn recurrence_length(&self) -> usize {
        2 * self.bandwidth() + 1
    }
}

/// `n x n` section of the recurrence operator `A`.
pub fn recurrence_operator(ode: &WeightOde, n: usize) -> Result<BandedSection> {
    let family = &ode.family;
    let x = basis_multiplication(family.basis(), n).to_banded();
    let ld = weighted_lowering_matrix(family, n)?.mul(&differentiation_matrix(family, n)?);
    let inner = ld.add_scaled(&x.polynomial(family.tau()), 1.0);
    let b = x
        .polynomial(&ode.a)
        .mul(&inner)
        .add_scaled(&x.polynomial(&ode.b), 1.0);
    let norms = mass_matrix(family, n)?.diagonal();
    let inv: Vec<f64> = norms.iter().map(|v| 1.0 / v).collect();
    Ok(b.diag_scaled(&norms, &inv))
}

fn pivot_ok(row: impl Iterator<Item = f64>, pivot: f64) -> bool {
    let scale = row.fold(0.0f64, |m, v| m.max(v.abs()));
    pivot.abs() > 1e-13 * scale
}

/// Forward recurrence: given at least `h` leading moments, solves row `i` of
/// `A mu = mu[c]` for `mu_{i+h}` until `m` moments are known. Supplied
/// initial moments are kept as given; solving starts at the first row whose
/// trailing unknown lies past them.
pub fn moments_from_ode(ode: &WeightOde, initial: &MomentVector, m: usize) -> Result<MomentVector> {
    if initial.family() != &ode.family {
        return Err(Error::InvalidFamily(format!(
            "initial moments are for {}, ODE for {}",
            initial.family().name(),
            ode.family.name()
        )));
    }
    let h = ode.bandwidth();
    let init = initial.values();
    if init.len() < h.max(1) {
        return Err(Error::InsufficientInitialMoments {
            needed: h.max(1),
            got: init.len(),
        });
    }
    if m <= init.len() {
        return MomentVector::new(ode.family.clone(), init[..m].to_vec(), initial.provenance());
    }
    if h == 0 {
        // b is a constant and a vanishes: the system is diagonal
        let c = ode.rhs.moments(&ode.family, m)?;
        let b0 = ode.b[0];
        let mut mu = init.to_vec();
        mu.extend((init.len()..m).map(|k| c[k] / b0));
        return MomentVector::new(ode.family.clone(), mu, Provenance::OdeRecurrence);
    }
    let n = m + 4 * h + 4;
    let a = recurrence_operator(ode, n)?;
    let c = ode.rhs.moments(&ode.family, m)?;
    let mut mu = init.to_vec();
    mu.resize(m, 0.0);
    for i in (init.len() - h)..(m - h) {
        let pivot = a.get(i, i + h);
        if !pivot_ok((i.saturating_sub(h)..=i + h).map(|j| a.get(i, j)), pivot) {
            return Err(Error::ZeroPivot(i));
        }
        let mut s = c[i];
        for j in i.saturating_sub(h)..i + h {
            s -= a.get(i, j) * mu[j];
        }
        mu[i + h] = s / pivot;
    }
    MomentVector::new(ode.family.clone(), mu, Provenance::OdeRecurrence)
}

/// Backward recurrence: `trailing` holds `mu_{m-2h}, ..., mu_{m-1}` and row
/// `i` is solved for `mu_{i-h}` down to `mu_0`.
pub fn moments_from_ode_downward(ode: &WeightOde, trailing: &[f64], m: usize) -> Result<MomentVector> {
    let h = ode.bandwidth();
    let t = 2 * h;
    if h == 0 || trailing.len() != t || m < t {
        return Err(Error::InsufficientInitialMoments {
            needed: t.max(1),
            got: trailing.len(),
        });
    }
    let n = m + 4 * h + 4;
    let a = recurrence_operator(ode, n)?;
    let c = ode.rhs.moments(&ode.family, m)?;
    let mut mu = vec![0.0; m];
    mu[m - t..].copy_from_slice(trailing);
    for i in (h..m - h).rev() {
        let pivot = a.get(i, i - h);
        if !pivot_ok((i - h..=i + h).map(|j| a.get(i, j)), pivot) {
            return Err(Error::ZeroPivot(i));
        }
        let mut s = c[i];
        for j in i - h + 1..=i + h {
            s -= a.get(i, j) * mu[j];
        }
        mu[i - h] = s / pivot;
    }
    MomentVector::new(ode.family.clone(), mu, Provenance::OdeRecurrence)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn poly_add(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len().max(q.len())];
    for (i, a) in p.iter().enumerate() {
        out[i] += a;
    }
    for (i, b) in q.iter().enumerate() {
        out[i] += b;
    }
    out
}

fn poly_scale(p: &[f64], s: f64) -> Vec<f64> {
    p.iter().map(|v| v * s).collect()
}

/// `prod_i (t_i + x)` and `sum_i gamma_i prod_{j != i} (t_j + x)`.
fn algebraic_polys(t: &[f64], gamma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut prod = vec![1.0];
    for &ti in t {
        prod = poly_mul(&prod, &[ti, 1.0]);
    }
    let mut s = vec![0.0];
    for (i, &gi) in gamma.iter().enumerate() {
        let mut term = vec![gi];
        for (j, &tj) in t.iter().enumerate() {
            if j != i {
                term = poly_mul(&term, &[tj, 1.0]);
            }
        }
        s = poly_add(&s, &term);
    }
    (prod, s)
}

fn jacobi_params(f: &Family) -> Option<(f64, f64)> {
    match f.kind() {
        FamilyKind::ChebyshevT => Some((-0.5, -0.5)),
        FamilyKind::ChebyshevU => Some((0.5, 0.5)),
        FamilyKind::Legendre => Some((0.0, 0.0)),
        FamilyKind::Jacobi => Some((f.alpha(), f.beta())),
        FamilyKind::Laguerre => None,
    }
}

fn nonneg_integer(x: f64) -> Option<usize> {
    (x >= 0.0 && x.fract() == 0.0 && x <= 16.0).then_some(x as usize)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    JacobiPower(f64, f64),
    JacobiLog(f64, f64),
    Algebraic(Vec<f64>, Vec<f64>),
    LaguerrePower(f64),
    LaguerreLog(f64, f64),
    LaguerreAlgebraic(Vec<f64>, Vec<f64>),
}

/// A weight from the catalogue of ODE-defined weights, with pointwise values
/// (for quadrature of initial moments) and its ODE in normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeWeight {
    kind: Kind,
}

fn check_algebraic(t: &[f64], gamma: &[f64]) -> Result<()> {
    if t.is_empty() || t.len() != gamma.len() {
        return Err(Error::InvalidArgument(format!(
            "algebraic weight needs matching nonempty t and gamma (got {} and {})",
            t.len(),
            gamma.len()
        )));
    }
    if t.iter().chain(gamma).any(|v| !v.is_finite()) || gamma.iter().any(|&g| g <= -1.0) {
        return Err(Error::InvalidArgument(
            "algebraic exponents must exceed -1 and all parameters be finite".into(),
        ));
    }
    Ok(())
}

impl OdeWeight {
    /// `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
    pub fn jacobi_power(alpha: f64, beta: f64) -> Result<Self> {
        Family::jacobi(alpha, beta)?;
        Ok(OdeWeight {
            kind: Kind::JacobiPower(alpha, beta),
        })
    }

    /// `log(2/(1-x)) (1-x)^alpha (1+x)^beta` on `[-1, 1]`.
    pub fn jacobi_log(alpha: f64, beta: f64) -> Result<Self> {
        Family::jacobi(alpha, beta)?;
        Ok(OdeWeight {
            kind: Kind::JacobiLog(alpha, beta),
        })
    }

    /// `prod_i |t_i + x|^{gamma_i}` on `[-1, 1]`.
    pub fn algebraic(t: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        check_algebraic(&t, &gamma)?;
        Ok(OdeWeight {
            kind: Kind::Algebraic(t, gamma),
        })
    }

    /// `x^alpha e^{-x}` on `[0, inf)`.
    pub fn laguerre_power(alpha: f64) -> Result<Self> {
        Family::laguerre(alpha)?;
        Ok(OdeWeight {
            kind: Kind::LaguerrePower(alpha),
        })
    }

    /// `log(t + x) x^alpha e^{-x}` on `[0, inf)`, `t > 0`.
    pub fn laguerre_log(t: f64, alpha: f64) -> Result<Self> {
        Family::laguerre(alpha)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("log shift must be positive, got {t}")));
        }
        Ok(OdeWeight {
            kind: Kind::LaguerreLog(t, alpha),
        })
    }

    /// `prod_i |t_i + x|^{gamma_i} e^{-x}` on `[0, inf)`.
    pub fn laguerre_algebraic(t: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        check_algebraic(&t, &gamma)?;
        Ok(OdeWeight {
            kind: Kind::LaguerreAlgebraic(t, gamma),
        })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self.kind,
            Kind::JacobiPower(..) | Kind::JacobiLog(..) | Kind::Algebraic(..)
        )
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let algebraic = |t: &[f64], g: &[f64]| -> f64 {
            t.iter().zip(g).map(|(ti, gi)| p.dist(-ti).powf(*gi)).product()
        };
        match &self.kind {
            Kind::JacobiPower(a, b) => p.dist(1.0).powf(*a) * p.dist(-1.0).powf(*b),
            Kind::JacobiLog(a, b) => {
                (2.0 / p.dist(1.0)).ln() * p.dist(1.0).powf(*a) * p.dist(-1.0).powf(*b)
            }
            Kind::Algebraic(t, g) => algebraic(t, g),
            Kind::LaguerrePower(a) => p.dist(0.0).powf(*a) * (-p.x).exp(),
            Kind::LaguerreLog(t, a) => (t + p.x).ln() * p.dist(0.0).powf(*a) * (-p.x).exp(),
            Kind::LaguerreAlgebraic(t, g) => algebraic(t, g) * (-p.x).exp(),
        }
    }

    /// Interior points where the weight is not smooth.
    pub fn singular_points(&self) -> Vec<f64> {
        let (lo, hi) = if self.is_bounded() { (-1.0, 1.0) } else { (0.0, f64::INFINITY) };
        match &self.kind {
            Kind::Algebraic(t, _) | Kind::LaguerreAlgebraic(t, _) => {
                t.iter().map(|v| -v).filter(|&x| x > lo && x < hi).collect()
            }
            _ => Vec::new(),
        }
    }

    fn check_family(&self, family: &Family) -> Result<()> {
        if family.is_bounded() != self.is_bounded() {
            return Err(Error::InvalidFamily(format!(
                "weight and family {} live on different domains",
                family.name()
            )));
        }
        Ok(())
    }

    /// The ODE in normal form for moments against `family`.
    pub fn ode(&self, family: &Family) -> Result<WeightOde> {
        self.check_family(family)?;
        let (a, b, rhs) = match &self.kind {
            Kind::JacobiPower(al, be) => (vec![1.0], vec![al - be, al + be + 2.0], Rhs::Zero),
            Kind::JacobiLog(al, be) => {
                // c = (1+x) (1-x)^al (1+x)^be
                let rhs = if jacobi_params(family) == Some((*al, *be)) {
                    Rhs::Polynomial {
                        coeffs: vec![1.0, 1.0],
                        base: Box::new(Rhs::Classical),
                    }
                } else if let (0.0, Some(k)) = (*al, nonneg_integer(be + 1.0)) {
                    let mut q = vec![1.0];
                    for _ in 0..k {
                        q = poly_mul(&q, &[1.0, 1.0]);
                    }
                    Rhs::Polynomial {
                        coeffs: q,
                        base: Box::new(Rhs::Lebesgue),
                    }
                } else {
                    Rhs::Weight(Box::new(OdeWeight::jacobi_power(*al, be + 1.0)?))
                };
                (vec![1.0], vec![al - be, al + be + 2.0], rhs)
            }
            Kind::Algebraic(t, g) => {
                let (prod, s) = algebraic_polys(t, g);
                // T sigma w' = sigma S w  =>  T (sigma w)' - (T sigma' + sigma S) w = 0
                let sigma = [1.0, 0.0, -1.0];
                let b = poly_scale(&poly_add(&poly_mul(&prod, &[0.0, -2.0]), &poly_mul(&sigma, &s)), -1.0);
                (prod, b, Rhs::Zero)
            }
            Kind::LaguerrePower(al) => (vec![1.0], vec![-al - 1.0, 1.0], Rhs::Zero),
            Kind::LaguerreLog(t, al) => {
                let fa = family.alpha();
                let rhs = if let Some(k) = nonneg_integer(al + 1.0 - fa) {
                    let mut q = vec![0.0; k + 1];
                    q[k] = 1.0;
                    Rhs::Polynomial {
                        coeffs: q,
                        base: Box::new(Rhs::Classical),
                    }
                } else {
                    Rhs::Weight(Box::new(OdeWeight::laguerre_power(al + 1.0)?))
                };
                (vec![*t, 1.0], poly_mul(&[*t, 1.0], &[-al - 1.0, 1.0]), rhs)
            }
            Kind::LaguerreAlgebraic(t, g) => {
                let (prod, s) = algebraic_polys(t, g);
                // T (w' + w) = S w with (sigma w)' = x w' + w, multiplied by x
                let b = poly_add(&poly_mul(&prod, &[-1.0, 1.0]), &poly_scale(&poly_mul(&[0.0, 1.0], &s), -1.0));
                (prod, b, Rhs::Zero)
            }
        };
        WeightOde::new(family.clone(), a, b, rhs)
    }

    /// Number of initial moments seeded by quadrature: one less than the
    /// recurrence length.
    pub fn initial_count(&self, family: &Family) -> Result<usize> {
        Ok(self.ode(family)?.recurrence_length() - 1)
    }

    /// Leading moments by the quadrature oracle.
    pub fn quadrature_moments(&self, family: &Family, m: usize) -> Result<MomentVector> {
        self.check_family(family)?;
        let pts = self.singular_points();
        let mu = quadrature::moments(family, |p| self.eval(p), &pts, m);
        MomentVector::new(family.clone(), mu, Provenance::Quadrature)
    }

    /// First `m` moments: quadrature for the initial ones, then the forward
    /// recurrence.
    pub fn moments(&self, family: &Family, m: usize) -> Result<MomentVector> {
        let ode = self.ode(family)?;
        let k = ode.recurrence_length() - 1;
        let init = self.quadrature_moments(family, k.min(m).max(1))?;
        if m <= k {
            return Ok(init.truncated(m));
        }
        moments_from_ode(&ode, &init, m)
    }
}
