//! Banded operator matrices of the classical orthogonal polynomial families.
//!
//! Polynomials are row vectors `P(x) = (p_0(x), p_1(x), ...)` in their classical
//! normalization (`p_0 = 1`), and operators act on coefficient vectors from the
//! right: `x P(x) = P(x) X`, `d/dx P(x) = P'(x) D`, `P(x) = P'(x) R` and
//! `sigma(x) P'(x) = P(x) L`, where `P'` is the family of derivatives.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    ChebyshevT,
    ChebyshevU,
    Legendre,
    Jacobi,
    Laguerre,
}

/// A classical orthogonal polynomial family together with its Pearson data
/// `(sigma w_c)' = tau w_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    kind: FamilyKind,
    alpha: f64,
    beta: f64,
    sigma: Vec<f64>,
    tau: Vec<f64>,
}

impl Family {
    pub fn chebyshev_t() -> Self {
        Self::build(FamilyKind::ChebyshevT, 0.0, 0.0)
    }

    pub fn chebyshev_u() -> Self {
        Self::build(FamilyKind::ChebyshevU, 0.0, 0.0)
    }

    pub fn legendre() -> Self {
        Self::build(FamilyKind::Legendre, 0.0, 0.0)
    }

    /// Jacobi family with weight `(1-x)^alpha (1+x)^beta`.
    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "Jacobi requires alpha, beta > -1 (got {alpha}, {beta})"
            )));
        }
        Ok(Self::build(FamilyKind::Jacobi, alpha, beta))
    }

    /// Generalized Laguerre family with weight `x^alpha e^{-x}`.
    pub fn laguerre(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::InvalidFamily(format!(
                "Laguerre requires alpha > -1 (got {alpha})"
            )));
        }
        Ok(Self::build(FamilyKind::Laguerre, alpha, 0.0))
    }

    fn build(kind: FamilyKind, alpha: f64, beta: f64) -> Self {
        let (sigma, tau) = match kind {
            FamilyKind::ChebyshevT => (vec![1.0, 0.0, -1.0], vec![0.0, -1.0]),
            FamilyKind::ChebyshevU => (vec![1.0, 0.0, -1.0], vec![0.0, -3.0]),
            FamilyKind::Legendre => (vec![1.0, 0.0, -1.0], vec![0.0, -2.0]),
            FamilyKind::Jacobi => (
                vec![1.0, 0.0, -1.0],
                vec![beta - alpha, -(alpha + beta + 2.0)],
            ),
            FamilyKind::Laguerre => (vec![0.0, 1.0], vec![alpha + 1.0, -1.0]),
        };
        Family {
            kind,
            alpha,
            beta,
            sigma,
            tau,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Ascending coefficients of `sigma` (degree at most 2).
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Ascending coefficients of `tau` (degree at most 1).
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn sigma_degree(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn is_bounded(&self) -> bool {
        self.kind != FamilyKind::Laguerre
    }

    /// Interval of orthogonality.
    pub fn domain(&self) -> (f64, f64) {
        if self.is_bounded() {
            (-1.0, 1.0)
        } else {
            (0.0, f64::INFINITY)
        }
    }

    /// The classical weight `w_c(x)`.
    pub fn weight(&self, x: f64) -> f64 {
        match self.kind {
            FamilyKind::ChebyshevT => 1.0 / (1.0 - x * x).sqrt(),
            FamilyKind::ChebyshevU => (1.0 - x * x).sqrt(),
            FamilyKind::Legendre => 1.0,
            FamilyKind::Jacobi => (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta),
            FamilyKind::Laguerre => x.powf(self.alpha) * (-x).exp(),
        }
    }

    /// `sigma(x) w_c(x)`, evaluated without forming the (possibly singular) weight.
    pub fn sigma_weight(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        match self.kind {
            FamilyKind::ChebyshevT => (1.0 - x * x).max(0.0).sqrt(),
            FamilyKind::ChebyshevU => (1.0 - x * x).max(0.0).powf(1.5),
            FamilyKind::Legendre => 1.0 - x * x,
            FamilyKind::Jacobi => {
                (1.0 - x).powf(self.alpha + 1.0) * (1.0 + x).powf(self.beta + 1.0)
            }
            FamilyKind::Laguerre => x.powf(self.alpha + 1.0) * (-x).exp(),
        }
    }

    /// `\int_a^b w_c(x) dx`; `b` may be `+inf` for Laguerre.
    pub fn weight_integral(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            FamilyKind::ChebyshevT => b.clamp(-1.0, 1.0).asin() - a.clamp(-1.0, 1.0).asin(),
            FamilyKind::ChebyshevU => {
                let f = |x: f64| {
                    let x = x.clamp(-1.0, 1.0);
                    0.5 * (x * (1.0 - x * x).sqrt() + x.asin())
                };
                f(b) - f(a)
            }
            FamilyKind::Legendre => b - a,
            FamilyKind::Jacobi => {
                let (p, q) = (self.beta + 1.0, self.alpha + 1.0);
                let scale = ((self.alpha + self.beta + 1.0) * std::f64::consts::LN_2
                    + ln_beta(p, q))
                .exp();
                let t = |x: f64| ((1.0 + x) / 2.0).clamp(0.0, 1.0);
                scale * (beta_reg(p, q, t(b)) - beta_reg(p, q, t(a)))
            }
            FamilyKind::Laguerre => {
                let s = self.alpha + 1.0;
                let cdf = |x: f64| {
                    if x.is_infinite() {
                        1.0
                    } else if x <= 0.0 {
                        0.0
                    } else {
                        gamma_lr(s, x)
                    }
                };
                ln_gamma(s).exp() * (cdf(b) - cdf(a))
            }
        }
    }

    pub(crate) fn basis(&self) -> Basis {
        match self.kind {
            FamilyKind::ChebyshevT => Basis::ChebyshevT,
            FamilyKind::ChebyshevU => Basis::Ultraspherical(1.0),
            FamilyKind::Legendre => Basis::Ultraspherical(0.5),
            FamilyKind::Jacobi => Basis::Jacobi(self.alpha, self.beta),
            FamilyKind::Laguerre => Basis::Laguerre(self.alpha),
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            FamilyKind::ChebyshevT => "chebyshev-t".into(),
            FamilyKind::ChebyshevU => "chebyshev-u".into(),
            FamilyKind::Legendre => "legendre".into(),
            FamilyKind::Jacobi => format!("jacobi({},{})", self.alpha, self.beta),
            FamilyKind::Laguerre => format!("laguerre({})", self.alpha),
        }
    }
}

/// Polynomial bases reachable from the public families, including the
/// derivative families `P'` (which are not exposed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Basis {
    ChebyshevT,
    Ultraspherical(f64),
    Jacobi(f64, f64),
    Laguerre(f64),
}

impl Basis {
    pub(crate) fn derivative(self) -> Basis {
        match self {
            Basis::ChebyshevT => Basis::Ultraspherical(1.0),
            Basis::Ultraspherical(l) => Basis::Ultraspherical(l + 1.0),
            Basis::Jacobi(a, b) => Basis::Jacobi(a + 1.0, b + 1.0),
            Basis::Laguerre(a) => Basis::Laguerre(a + 1.0),
        }
    }

    /// `X[n+1, n]`: coefficient of `p_{n+1}` in `x p_n`.
    pub(crate) fn sub(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => {
                if n == 0 {
                    1.0
                } else {
                    0.5
                }
            }
            Basis::Ultraspherical(l) => (nf + 1.0) / (2.0 * (nf + l)),
            Basis::Jacobi(a, b) => {
                if n == 0 {
                    2.0 / (a + b + 2.0)
                } else {
                    let s = 2.0 * nf + a + b;
                    2.0 * (nf + 1.0) * (nf + a + b + 1.0) / ((s + 1.0) * (s + 2.0))
                }
            }
            Basis::Laguerre(_) => -(nf + 1.0),
        }
    }

    /// `X[n, n]`.
    pub(crate) fn diag(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Basis::ChebyshevT | Basis::Ultraspherical(_) => 0.0,
            Basis::Jacobi(a, b) => {
                if n == 0 {
                    (b - a) / (a + b + 2.0)
                } else {
                    let s = 2.0 * nf + a + b;
                    (b * b - a * a) / (s * (s + 2.0))
                }
            }
            Basis::Laguerre(a) => 2.0 * nf + a + 1.0,
        }
    }

    /// `X[n-1, n]` for `n >= 1`: coefficient of `p_{n-1}` in `x p_n`.
    pub(crate) fn sup(self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => 0.5,
            Basis::Ultraspherical(l) => (nf + 2.0 * l - 1.0) / (2.0 * (nf + l)),
            Basis::Jacobi(a, b) => {
                let s = 2.0 * nf + a + b;
                2.0 * (nf + a) * (nf + b) / (s * (s + 1.0))
            }
            Basis::Laguerre(a) => -(nf + a),
        }
    }

    /// Squared norm `\int p_n^2 w_c`.
    pub(crate) fn norm(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => {
                if n == 0 {
                    PI
                } else {
                    PI / 2.0
                }
            }
            Basis::Ultraspherical(l) => {
                let lg = (1.0 - 2.0 * l) * std::f64::consts::LN_2 + ln_gamma(nf + 2.0 * l)
                    - ln_gamma(nf + 1.0)
                    - 2.0 * ln_gamma(l);
                PI * lg.exp() / (nf + l)
            }
            Basis::Jacobi(a, b) => {
                let pow2 = (a + b + 1.0) * std::f64::consts::LN_2;
                if n == 0 {
                    (pow2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp()
                } else {
                    let lg = pow2 + ln_gamma(nf + a + 1.0) + ln_gamma(nf + b + 1.0)
                        - ln_gamma(nf + a + b + 1.0)
                        - ln_gamma(nf + 1.0);
                    lg.exp() / (2.0 * nf + a + b + 1.0)
                }
            }
            Basis::Laguerre(a) => (ln_gamma(nf + a + 1.0) - ln_gamma(nf + 1.0)).exp(),
        }
    }

    /// `D[n-1, n]` for `n >= 1`: `p_n' = D[n-1,n] p'_{n-1}`.
    pub(crate) fn diff(self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => nf,
            Basis::Ultraspherical(l) => 2.0 * l,
            Basis::Jacobi(a, b) => (nf + a + b + 1.0) / 2.0,
            Basis::Laguerre(_) => -1.0,
        }
    }

    /// Column `n` of the raising matrix: `[R[n,n], R[n-1,n], R[n-2,n]]`.
    pub(crate) fn raise(self, n: usize) -> [f64; 3] {
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => match n {
                0 => [1.0, 0.0, 0.0],
                1 => [0.5, 0.0, 0.0],
                _ => [0.5, 0.0, -0.5],
            },
            Basis::Ultraspherical(l) => {
                let c = l / (nf + l);
                [c, 0.0, if n >= 2 { -c } else { 0.0 }]
            }
            Basis::Jacobi(a, b) => {
                // P^{(a,b)} = P^{(a,b+1)} R1 and P^{(a,b+1)} = P^{(a+1,b+1)} R2
                let r1 = |k: usize| -> (f64, f64) {
                    if k == 0 {
                        return (1.0, 0.0);
                    }
                    let kf = k as f64;
                    let s = 2.0 * kf + a + b + 1.0;
                    ((kf + a + b + 1.0) / s, (kf + a) / s)
                };
                let bp = b + 1.0;
                let r2 = |k: usize| -> (f64, f64) {
                    let kf = k as f64;
                    let s = 2.0 * kf + a + bp + 1.0;
                    ((kf + a + bp + 1.0) / s, -(kf + bp) / s)
                };
                let (r1d, r1u) = r1(n);
                let (r2d, _) = r2(n);
                let mut col = [r2d * r1d, 0.0, 0.0];
                if n >= 1 {
                    let (r2d_prev, r2u_prev) = r2(n - 1);
                    let (_, r2u) = r2(n);
                    col[1] = r2d_prev * r1u + r2u * r1d;
                    if n >= 2 {
                        col[2] = r2u_prev * r1u;
                    }
                }
                col
            }
            Basis::Laguerre(_) => [1.0, if n >= 1 { -1.0 } else { 0.0 }, 0.0],
        }
    }

    /// Column `n` of the weighted lowering matrix: `[L[n,n], L[n+1,n], L[n+2,n]]`.
    pub(crate) fn lower(self, n: usize) -> [f64; 3] {
        let nf = n as f64;
        match self {
            Basis::ChebyshevT => [0.5, 0.0, -0.5],
            Basis::Ultraspherical(l) => {
                let den = 4.0 * l * (nf + l + 1.0);
                [
                    (nf + 2.0 * l) * (nf + 2.0 * l + 1.0) / den,
                    0.0,
                    -(nf + 1.0) * (nf + 2.0) / den,
                ]
            }
            Basis::Jacobi(a, b) => {
                // (1+x) P^{(a+1,b+1)} = P^{(a+1,b)} B1, (1-x) P^{(a+1,b)} = P^{(a,b)} B2
                let b1 = |k: usize| -> (f64, f64) {
                    let kf = k as f64;
                    let den = kf + (a + b + 1.0) / 2.0 + 1.0;
                    ((kf + b + 1.0) / den, (kf + 1.0) / den)
                };
                let b2 = |k: usize| -> (f64, f64) {
                    let kf = k as f64;
                    let den = kf + (a + b) / 2.0 + 1.0;
                    ((kf + a + 1.0) / den, -(kf + 1.0) / den)
                };
                let (b1d, b1l) = b1(n);
                let (b2d, b2l) = b2(n);
                let (b2d_next, b2l_next) = b2(n + 1);
                [b2d * b1d, b2l * b1d + b2d_next * b1l, b2l_next * b1l]
            }
            Basis::Laguerre(a) => [nf + a + 1.0, -(nf + 1.0), 0.0],
        }
    }

    /// `p_0(x), ..., p_{n-1}(x)` by forward recurrence.
    pub(crate) fn evaluate(self, n: usize, x: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(n);
        if n == 0 {
            return p;
        }
        p.push(1.0);
        for k in 0..n.saturating_sub(1) {
            let mut v = (x - self.diag(k)) * p[k];
            if k >= 1 {
                v -= self.sup(k) * p[k - 1];
            }
            p.push(v / self.sub(k));
        }
        p
    }
}

/// Tridiagonal `n x n` section with `dl[i] = X[i+1,i]`, `d[i] = X[i,i]`,
/// `du[i] = X[i,i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSection {
    pub dl: Vec<f64>,
    pub d: Vec<f64>,
    pub du: Vec<f64>,
}

impl TridiagonalSection {
    pub fn new(dl: Vec<f64>, d: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if n == 0 || dl.len() + 1 != n || du.len() + 1 != n {
            return Err(Error::DimensionMismatch(format!(
                "tridiagonal lengths {}/{}/{}",
                dl.len(),
                n,
                du.len()
            )));
        }
        Ok(TridiagonalSection { dl, d, du })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.d[i]
        } else if i == j + 1 {
            self.dl[j]
        } else if j == i + 1 {
            self.du[i]
        } else {
            0.0
        }
    }

    /// Leading `m x m` subsection.
    pub fn leading(&self, m: usize) -> TridiagonalSection {
        assert!(m >= 1 && m <= self.n());
        TridiagonalSection {
            dl: self.dl[..m - 1].to_vec(),
            d: self.d[..m].to_vec(),
            du: self.du[..m - 1].to_vec(),
        }
    }

    pub fn is_irreducible(&self) -> bool {
        self.dl.iter().chain(self.du.iter()).all(|&v| v != 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    pub fn to_banded(&self) -> BandedSection {
        let n = self.n();
        let mut b = BandedSection::zeros(n, 1, 1);
        for i in 0..n {
            b.set(i, i, self.d[i]);
            if i + 1 < n {
                b.set(i + 1, i, self.dl[i]);
                b.set(i, i + 1, self.du[i]);
            }
        }
        b
    }

    /// `X v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * v[i];
                if i > 0 {
                    s += self.dl[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.du[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// `X^T v` for a column vector `v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * v[i];
                if i > 0 {
                    s += self.du[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.dl[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Square banded section in column-major band storage: column `j` holds rows
/// `j - upper ..= j + lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSection {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedSection {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        BandedSection {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::zeros(n, 0, 0);
        b.data.fill(1.0);
        b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i + self.upper < j || j + self.lower < i {
            None
        } else {
            Some(j * (self.lower + self.upper + 1) + (i + self.upper - j))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[k] = v;
    }

    fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry inside band");
        self.data[k] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul(&self, other: &BandedSection) -> BandedSection {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = BandedSection::zeros(n, self.lower + other.lower, self.upper + other.upper);
        for j in 0..n {
            let k_lo = j.saturating_sub(other.upper);
            let k_hi = (j + other.lower).min(n - 1);
            for k in k_lo..=k_hi {
                let b = other.get(k, j);
                if b == 0.0 {
                    continue;
                }
                let i_lo = k.saturating_sub(self.upper);
                let i_hi = (k + self.lower).min(n - 1);
                for i in i_lo..=i_hi {
                    out.add_at(i, j, self.get(i, k) * b);
                }
            }
        }
        out
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &BandedSection, scale: f64) -> BandedSection {
        assert_eq!(self.n, other.n);
        let mut out = BandedSection::zeros(
            self.n,
            self.lower.max(other.lower),
            self.upper.max(other.upper),
        );
        for j in 0..self.n {
            for i in j.saturating_sub(out.upper)..=(j + out.lower).min(self.n - 1) {
                let v = self.get(i, j) + scale * other.get(i, j);
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> BandedSection {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `diag(left) * self * diag(right)`.
    pub fn diag_scaled(&self, left: &[f64], right: &[f64]) -> BandedSection {
        let mut out = self.clone();
        for j in 0..self.n {
            for i in j.saturating_sub(self.upper)..=(j + self.lower).min(self.n - 1) {
                let k = out.slot(i, j).unwrap();
                out.data[k] *= left[i] * right[j];
            }
        }
        out
    }

    /// Polynomial in this matrix with ascending coefficients, by Horner's rule.
    pub fn polynomial(&self, coeffs: &[f64]) -> BandedSection {
        let n = self.n;
        let Some((&last, rest)) = coeffs.split_last() else {
            return BandedSection::zeros(n, 0, 0);
        };
        let mut acc = BandedSection::identity(n).scaled(last);
        for &c in rest.iter().rev() {
            acc = acc.mul(self).add_scaled(&BandedSection::identity(n), c);
        }
        acc
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &vj) in v.iter().enumerate().take(self.n) {
            for i in j.saturating_sub(self.upper)..=(j + self.lower).min(self.n - 1) {
                out[i] += self.get(i, j) * vj;
            }
        }
        out
    }
}

fn check_size(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!(
            "section size must be at least {min}, got {n}"
        )));
    }
    Ok(())
}

/// `n x n` section of the multiplication matrix `X_P`.
pub fn multiplication_matrix(family: &Family, n: usize) -> Result<TridiagonalSection> {
    check_size(n, 1)?;
    Ok(basis_multiplication(family.basis(), n))
}

pub(crate) fn basis_multiplication(basis: Basis, n: usize) -> TridiagonalSection {
    TridiagonalSection {
        dl: (0..n - 1).map(|k| basis.sub(k)).collect(),
        d: (0..n).map(|k| basis.diag(k)).collect(),
        du: (1..n).map(|k| basis.sup(k)).collect(),
    }
}

/// Diagonal mass matrix of squared norms.
pub fn mass_matrix(family: &Family, n: usize) -> Result<BandedSection> {
    check_size(n, 1)?;
    let basis = family.basis();
    let mut m = BandedSection::zeros(n, 0, 0);
    for k in 0..n {
        m.set(k, k, basis.norm(k));
    }
    Ok(m)
}

/// Differentiation into the derivative family; nonzero only on the first
/// superdiagonal.
pub fn differentiation_matrix(family: &Family, n: usize) -> Result<BandedSection> {
    check_size(n, 1)?;
    let basis = family.basis();
    let mut d = BandedSection::zeros(n, 0, 1);
    for k in 1..n {
        d.set(k - 1, k, basis.diff(k));
    }
    Ok(d)
}

/// Conversion `P = P' R`; upper bandwidth equals `deg(sigma)`.
pub fn raising_matrix(family: &Family, n: usize) -> Result<BandedSection> {
    check_size(n, 1)?;
    let basis = family.basis();
    let bw = family.sigma_degree();
    let mut r = BandedSection::zeros(n, 0, bw);
    for k in 0..n {
        let col = basis.raise(k);
        for (off, &v) in col.iter().enumerate().take(bw + 1) {
            if off <= k {
                r.set(k - off, k, v);
            }
        }
    }
    Ok(r)
}

/// Weighted conversion `sigma P' = P L`; lower bandwidth equals `deg(sigma)`.
pub fn weighted_lowering_matrix(family: &Family, n: usize) -> Result<BandedSection> {
    check_size(n, 1)?;
    let basis = family.basis();
    let bw = family.sigma_degree();
    let mut l = BandedSection::zeros(n, bw, 0);
    for k in 0..n {
        let col = basis.lower(k);
        for (off, &v) in col.iter().enumerate().take(bw + 1) {
            if k + off < n {
                l.set(k + off, k, v);
            }
        }
    }
    Ok(l)
}

/// Values `p_0(x), ..., p_{n-1}(x)` by the three-term recurrence.
pub fn evaluate(family: &Family, n: usize, x: f64) -> Vec<f64> {
    family.basis().evaluate(n, x)
}

/// Row-vector product `v D^+` with the pseudoinverse of the `n x n`
/// differentiation section, where `n = v.len()`.
pub fn apply_diff_pseudoinverse(family: &Family, v: &[f64]) -> Vec<f64> {
    basis_diff_pinv_row(family.basis(), v)
}

pub(crate) fn basis_diff_pinv_row(basis: Basis, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        out[k] = v[k + 1] / basis.diff(k + 1);
    }
    out
}

/// Column-vector product `D^+ u`.
pub(crate) fn basis_diff_pinv_col(basis: Basis, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    for k in 1..n {
        out[k] = u[k - 1] / basis.diff(k);
    }
    out
}

/// Evaluate a polynomial with ascending coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}
