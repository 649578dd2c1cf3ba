//! Connection coefficients between a classical family `P` and the family `Q`
//! orthonormal under a modified weight: `P(x) = Q(x) R` with `W = R^T R`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classical::{evaluate, multiplication_matrix, Family, FamilyKind, TridiagonalSection};
use crate::displacement::{cholesky_dense_reference, fast_cholesky_gram, TriangularFactor};
use crate::error::{Error, Result};
use crate::gram::{effective_bandwidth, gram_banded_from_moments, gram_from_moments, gram_tph, GramSection};
use crate::hodlr::{hodlr_cholesky, hodlr_compress, CompressOptions, DenseOracle, HodlrCholesky, HodlrMatrix, TphOracle};
use crate::moments::MomentVector;

/// Smallest ChebyshevT section for which automatic selection picks HODLR.
pub const HODLR_AUTO_MIN: usize = 2048;
/// Sections up to this size get an exact residual; larger ones are probed.
const EXACT_RESIDUAL_MAX: usize = 512;
const RESIDUAL_PROBES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    DenseCholesky,
    DisplacementCholesky,
    HodlrCholesky,
}

impl Backend {
    /// Banded moments go to the banded displacement algorithm, long
    /// ChebyshevT problems to HODLR, everything else to the dense-stored
    /// displacement algorithm.
    pub fn auto(moments: &MomentVector, n: usize) -> Backend {
        if effective_bandwidth(moments) + 1 < n {
            Backend::DisplacementCholesky
        } else if moments.family().kind() == FamilyKind::ChebyshevT && n >= HODLR_AUTO_MIN {
            Backend::HodlrCholesky
        } else {
            Backend::DisplacementCholesky
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Backend::DenseCholesky),
            "displacement" => Ok(Backend::DisplacementCholesky),
            "hodlr" => Ok(Backend::HodlrCholesky),
            _ => Err(Error::Parse(format!("unknown backend {s:?}; expected dense, displacement or hodlr"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::DenseCholesky => "dense",
            Backend::DisplacementCholesky => "displacement",
            Backend::HodlrCholesky => "hodlr",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConnectionProblem {
    pub moments: MomentVector,
    pub n: usize,
    pub backend: Backend,
    /// Only read by the HODLR backend.
    pub hodlr: CompressOptions,
}

/// The Gram section as handed to a backend.
#[derive(Debug, Clone)]
pub struct FilledGram {
    /// Exact entries: dense, banded, or through the moments.
    pub section: GramSection,
    /// Present for the HODLR backend.
    pub hodlr: Option<HodlrMatrix>,
}

impl ConnectionProblem {
    /// Problem with an automatically chosen backend.
    pub fn new(moments: MomentVector, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("section size must be positive".into()));
        }
        let banded = effective_bandwidth(&moments) + 1 < n;
        if !banded && moments.len() + 1 < 2 * n {
            return Err(Error::InsufficientMoments {
                needed: 2 * n - 1,
                got: moments.len(),
            });
        }
        let backend = Backend::auto(&moments, n);
        Ok(ConnectionProblem {
            moments,
            n,
            backend,
            hodlr: CompressOptions::new(1e-12, 0),
        })
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_hodlr_options(mut self, opts: CompressOptions) -> Self {
        self.hodlr = opts;
        self
    }

    pub fn family(&self) -> &Family {
        self.moments.family()
    }

    /// Half-bandwidth of the Gram section when the moments are band-limited.
    pub fn bandwidth(&self) -> Option<usize> {
        let b = effective_bandwidth(&self.moments);
        (b + 1 < self.n).then_some(b)
    }

    /// `X_P` section large enough for the fill recurrence and the
    /// factorization.
    pub fn multiplication(&self) -> Result<TridiagonalSection> {
        let m = match self.bandwidth() {
            Some(b) => self.n + b,
            None => 2 * self.n - 1,
        };
        multiplication_matrix(self.family(), m.max(self.n + 1))
    }

    pub fn fill(&self, x: &TridiagonalSection) -> Result<FilledGram> {
        let n = self.n;
        let is_t = self.family().kind() == FamilyKind::ChebyshevT;
        if self.backend == Backend::HodlrCholesky {
            if is_t {
                let mu = self.moments.truncated(2 * n - 1);
                let h = hodlr_compress(&TphOracle::new(mu.values(), n)?, &self.hodlr)?;
                return Ok(FilledGram {
                    section: gram_tph(&mu, n)?,
                    hodlr: Some(h),
                });
            }
            let section = gram_from_moments(&self.moments, x, n)?;
            let h = hodlr_compress(&DenseOracle(&section.to_dense()), &self.hodlr)?;
            return Ok(FilledGram {
                section,
                hodlr: Some(h),
            });
        }
        let section = match self.bandwidth() {
            Some(b) => gram_banded_from_moments(&self.moments, x, n, b)?,
            None => gram_from_moments(&self.moments, x, n)?,
        };
        Ok(FilledGram { section, hodlr: None })
    }

    pub fn factor(&self, w: &FilledGram, x: &TridiagonalSection) -> Result<ConnectionFactor> {
        match (self.backend, &w.hodlr) {
            (Backend::HodlrCholesky, Some(h)) => Ok(ConnectionFactor::Hodlr(hodlr_cholesky(h)?)),
            (Backend::HodlrCholesky, None) => Err(Error::InvalidArgument("HODLR backend needs a compressed Gram section".into())),
            (Backend::DenseCholesky, _) => Ok(ConnectionFactor::Triangular(cholesky_dense_reference(&w.section)?)),
            (Backend::DisplacementCholesky, _) => Ok(ConnectionFactor::Triangular(fast_cholesky_gram(&w.section, x)?)),
        }
    }
}

/// Upper-triangular connection coefficients `R`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionFactor {
    /// `R = L^T` for a packed or banded lower factor `L`.
    Triangular(TriangularFactor),
    Hodlr(HodlrCholesky),
}

impl ConnectionFactor {
    pub fn n(&self) -> usize {
        match self {
            ConnectionFactor::Triangular(l) => l.n(),
            ConnectionFactor::Hodlr(r) => r.n(),
        }
    }

    /// `R[i, j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            ConnectionFactor::Triangular(l) => l.get(j, i),
            ConnectionFactor::Hodlr(r) => r.get(i, j),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.diagonal(),
            ConnectionFactor::Hodlr(r) => r.diagonal(),
        }
    }

    /// `R v`.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.tr_mul_vec(v),
            ConnectionFactor::Hodlr(r) => r.matvec(v),
        }
    }

    /// `R^T v`.
    pub fn mul_t(&self, v: &[f64]) -> Vec<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.mul_vec(v),
            ConnectionFactor::Hodlr(r) => r.matvec_t(v),
        }
    }

    /// Solves `R x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.solve_upper(b),
            ConnectionFactor::Hodlr(r) => r.solve(b, false),
        }
    }

    /// Solves `R^T x = b`.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.solve_lower(b),
            ConnectionFactor::Hodlr(r) => r.solve(b, true),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ConnectionFactor::Triangular(l) => l.to_dense().transpose(),
            ConnectionFactor::Hodlr(r) => r.to_dense(),
        }
    }

    fn check_diagonal(&self) -> Result<()> {
        match self.diagonal().iter().position(|&d| !(d > 0.0)) {
            Some(k) => Err(Error::SingularFactor(k)),
            None => Ok(()),
        }
    }

    /// `||W - R^T R||_F / ||W||_F`, exact for small sections and estimated
    /// from seeded Gaussian probes otherwise.
    pub fn relative_residual(&self, w: &GramSection) -> f64 {
        let n = self.n();
        let probes: Vec<Vec<f64>> = if n <= EXACT_RESIDUAL_MAX {
            (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    e
                })
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..RESIDUAL_PROBES)
                .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect()
        };
        let (mut num, mut den) = (0.0, 0.0);
        for v in &probes {
            let wv = w.mul_vec(v);
            let rv = self.mul_t(&self.mul(v));
            num += wv.iter().zip(&rv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            den += wv.iter().map(|a| a * a).sum::<f64>();
        }
        (num / den).sqrt()
    }
}

/// Factors the problem's Gram section with its backend.
pub fn connection_coefficients(p: &ConnectionProblem) -> Result<ConnectionFactor> {
    let x = p.multiplication()?;
    let w = p.fill(&x)?;
    p.factor(&w, &x)
}

/// Dense `(n-1) x (n-1)` section of `X_Q`, tridiagonal up to roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedJacobiSection {
    x: DMatrix<f64>,
}

impl ModifiedJacobiSection {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn tridiagonal(&self) -> TridiagonalSection {
        let n = self.n();
        TridiagonalSection {
            dl: (0..n - 1).map(|i| self.x[(i + 1, i)]).collect(),
            d: (0..n).map(|i| self.x[(i, i)]).collect(),
            du: (0..n - 1).map(|i| self.x[(i, i + 1)]).collect(),
        }
    }

    /// Largest entry outside the tridiagonal band relative to the largest entry.
    pub fn off_tridiagonal_ratio(&self) -> f64 {
        let mut off: f64 = 0.0;
        for ((i, j), v) in self.x.iter().enumerate().map(|(k, v)| ((k % self.n(), k / self.n()), v)) {
            if i.abs_diff(j) > 1 {
                off = off.max(v.abs());
            }
        }
        off / self.x.amax()
    }

    /// `max |X - X^T| / max |X|`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.x - self.x.transpose()).amax() / self.x.amax()
    }

    /// Tridiagonal band as `i,j,x` CSV.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        write_tridiagonal_csv(&self.tridiagonal(), out)
    }
}

pub fn write_tridiagonal_csv(x: &TridiagonalSection, mut out: impl Write) -> Result<()> {
    writeln!(out, "i,j,x")?;
    let n = x.n();
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            writeln!(out, "{i},{j},{:.16e}", x.get(i, j))?;
        }
    }
    Ok(())
}

/// `(n-1)`-section of `X_Q = R X_P R^{-1}` from `n`-sections of `R` and `X_P`,
/// by solving `X_Q R = R X_P` one row at a time.
pub fn modified_jacobi(r: &ConnectionFactor, x: &TridiagonalSection) -> Result<ModifiedJacobiSection> {
    let n = r.n();
    if n < 2 || x.n() < n {
        return Err(Error::DimensionMismatch(format!("R is {n}x{n}, X_P section is {}", x.n())));
    }
    r.check_diagonal()?;
    let x = x.leading(n);
    let m = n - 1;
    let mut out = DMatrix::zeros(m, m);
    let mut e = vec![0.0; n];
    for i in 0..m {
        e[i] = 1.0;
        let row = r.mul_t(&e);
        e[i] = 0.0;
        // (row_i R) X_P, then y R = b, i.e. R^T y^T = b^T; the leading m
        // entries of y only see the leading m entries of b
        let b = x.tr_mul_vec(&row);
        let y = r.solve_t(&b);
        for j in 0..m {
            out[(i, j)] = y[j];
        }
    }
    Ok(ModifiedJacobiSection { x: out })
}

/// Tridiagonal `(n-1)`-section of `X_Q` from the diagonal and first
/// superdiagonal of `R` alone, taking `X_Q` symmetric. `O(n)`.
pub fn modified_jacobi_tridiagonal(r: &ConnectionFactor, x: &TridiagonalSection) -> Result<TridiagonalSection> {
    let n = r.n();
    if n < 2 || x.n() < n {
        return Err(Error::DimensionMismatch(format!("R is {n}x{n}, X_P section is {}", x.n())));
    }
    r.check_diagonal()?;
    let m = n - 1;
    let diag = r.diagonal();
    let sup: Vec<f64> = (0..m).map(|i| r.get(i, i + 1)).collect();
    // subdiagonal (i+1, i) and diagonal (i, i) of X_Q R = R X_P
    let off: Vec<f64> = (0..m).map(|i| diag[i + 1] * x.dl[i] / diag[i]).collect();
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let mut s = diag[i] * x.d[i] + sup[i] * x.dl[i];
            if i > 0 {
                s -= off[i - 1] * sup[i - 1];
            }
            s / diag[i]
        })
        .collect();
    let off = off[..m - 1].to_vec();
    TridiagonalSection::new(off.clone(), d, off)
}

/// `||R X_P - X_Q R||_F` on the common `(n-1)`-section, relative to
/// `||R||_F ||X_P||_F`. Dense, for checking.
pub fn gautschi_residual(r: &ConnectionFactor, x: &TridiagonalSection, xq: &ModifiedJacobiSection) -> f64 {
    let m = xq.n();
    let rd = r.to_dense();
    let xd = x.leading(r.n()).to_dense();
    let lhs = (&rd * &xd).view((0, 0), (m, m)).into_owned();
    let rhs = xq.matrix() * rd.view((0, 0), (m, m));
    (lhs - rhs).norm() / (rd.norm() * xd.norm())
}

/// Coefficients in `P` of `f = Q q`: solves `R p = q`.
pub fn convert_to_known(r: &ConnectionFactor, q: &[f64]) -> Result<Vec<f64>> {
    check_len(r, q.len())?;
    r.check_diagonal()?;
    Ok(r.solve(q))
}

/// Coefficients in `Q` of `f = P p`: `q = R p`.
pub fn convert_to_modified(r: &ConnectionFactor, p: &[f64]) -> Result<Vec<f64>> {
    check_len(r, p.len())?;
    Ok(r.mul(p))
}

fn check_len(r: &ConnectionFactor, len: usize) -> Result<()> {
    if len != r.n() {
        return Err(Error::DimensionMismatch(format!("{len} coefficients for a size {} factor", r.n())));
    }
    Ok(())
}

/// Values of `q_k` on `xs`: the `P` coefficients of `q_k` are `R^{-1} e_k`.
pub fn synthesize(r: &ConnectionFactor, family: &Family, k: usize, xs: &[f64]) -> Result<Vec<f64>> {
    let n = r.n();
    if k >= n {
        return Err(Error::InvalidArgument(format!("degree {k} needs a section larger than {n}")));
    }
    r.check_diagonal()?;
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    let c = r.solve(&e);
    Ok(xs
        .iter()
        .map(|&x| evaluate(family, k + 1, x).iter().zip(&c).map(|(p, c)| p * c).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moments_clenshaw_curtis, moments_log_chebyshev, Preset, Provenance};
    use std::f64::consts::PI;

    fn chebyshev_weight_moments(m: usize) -> MomentVector {
        let mut v = vec![0.0; m];
        v[0] = PI;
        MomentVector::new(Family::chebyshev_t(), v, Provenance::ClosedForm).unwrap()
    }

    #[test]
    fn classical_weight_gives_diagonal_factor() {
        let n = 16;
        let p = ConnectionProblem::new(chebyshev_weight_moments(2 * n - 1), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        for i in 0..n {
            let h = if i == 0 { PI } else { PI / 2.0 };
            assert!((r.get(i, i) - h.sqrt()).abs() < 1e-14);
            for j in i + 1..n {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
        let x = p.multiplication().unwrap();
        let xq = modified_jacobi(&r, &x).unwrap().tridiagonal();
        assert!((xq.dl[0] - 0.5f64.sqrt()).abs() < 1e-14);
        for i in 1..n - 2 {
            assert!((xq.dl[i] - 0.5).abs() < 1e-14);
            assert!(xq.d[i].abs() < 1e-14);
        }
    }

    #[test]
    fn identity_factor_reproduces_x() {
        let n = 10;
        let r = ConnectionFactor::Triangular(TriangularFactor::identity(n));
        let x = multiplication_matrix(&Family::legendre(), n).unwrap();
        let xq = modified_jacobi(&r, &x).unwrap();
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                assert!((xq.get(i, j) - x.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn legendre_from_chebyshev() {
        let n = 64;
        let p = ConnectionProblem::new(moments_clenshaw_curtis(2 * n - 1).unwrap(), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        let x = p.multiplication().unwrap();
        let xq = modified_jacobi(&r, &x).unwrap();
        assert!(xq.off_tridiagonal_ratio() < 1e-10);
        let t = xq.tridiagonal();
        for k in 0..n - 2 {
            let kf = (k + 1) as f64;
            let b = kf / ((2.0 * kf - 1.0) * (2.0 * kf + 1.0)).sqrt();
            assert!((t.dl[k] - b).abs() < 1e-10, "{k}: {} vs {b}", t.dl[k]);
            assert!((t.du[k] - b).abs() < 1e-10);
            assert!(t.d[k].abs() < 1e-10);
        }
        let fast = modified_jacobi_tridiagonal(&r, &x).unwrap();
        for k in 0..n - 2 {
            assert!((fast.dl[k] - t.dl[k]).abs() < 1e-12);
            assert!((fast.d[k] - t.d[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gautschi_relation_holds() {
        let n = 96;
        let p = ConnectionProblem::new(Preset::LogChebyshev.moments(2 * n - 1).unwrap(), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        let x = p.multiplication().unwrap();
        let xq = modified_jacobi(&r, &x).unwrap();
        assert!(gautschi_residual(&r, &x, &xq) < 1e-12);
        assert!(xq.symmetry_defect() < 1e-9);
    }

    #[test]
    fn backends_agree() {
        let n = 256;
        let mu = moments_log_chebyshev(2 * n - 1).unwrap();
        let base = ConnectionProblem::new(mu, n).unwrap();
        let opts = CompressOptions {
            leaf_size: 32,
            ..CompressOptions::new(1e-14, 5)
        };
        let dense = connection_coefficients(&base.clone().with_backend(Backend::DenseCholesky)).unwrap().to_dense();
        for b in [Backend::DisplacementCholesky, Backend::HodlrCholesky] {
            let p = base.clone().with_backend(b).with_hodlr_options(opts);
            let r = connection_coefficients(&p).unwrap().to_dense();
            let rel = (&r - &dense).norm() / dense.norm();
            assert!(rel < 1e-9, "{b}: {rel}");
        }
    }

    #[test]
    fn auto_selection() {
        let band = Preset::DeltaSqrt(1.0).moments(300).unwrap();
        let p = ConnectionProblem::new(band, 128).unwrap();
        assert_eq!(p.backend, Backend::DisplacementCholesky);
        assert!(p.bandwidth().is_some());
        let long = moments_log_chebyshev(2 * HODLR_AUTO_MIN - 1).unwrap();
        assert_eq!(Backend::auto(&long, HODLR_AUTO_MIN), Backend::HodlrCholesky);
        assert_eq!(Backend::auto(&long, 100), Backend::DisplacementCholesky);
        assert!(ConnectionProblem::new(moments_log_chebyshev(10).unwrap(), 8).is_err());
    }

    #[test]
    fn conversions_roundtrip() {
        let n = 128;
        let p = ConnectionProblem::new(moments_log_chebyshev(2 * n - 1).unwrap(), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let back = convert_to_known(&r, &convert_to_modified(&r, &v).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let q = convert_to_modified(&r, &e0).unwrap();
        assert!((q[0] - r.get(0, 0)).abs() < 1e-15 && q[1..].iter().all(|&v| v == 0.0));
        assert!(convert_to_known(&r, &e0[1..]).is_err());
    }

    #[test]
    fn synthesis_matches_normalized_chebyshev() {
        let n = 12;
        let p = ConnectionProblem::new(chebyshev_weight_moments(2 * n - 1), n).unwrap();
        let r = connection_coefficients(&p).unwrap();
        let xs = [-0.9, -0.3, 0.0, 0.45, 1.0];
        let q0 = synthesize(&r, &Family::chebyshev_t(), 0, &xs).unwrap();
        assert!(q0.iter().all(|v| (v - 1.0 / PI.sqrt()).abs() < 1e-15));
        let q7 = synthesize(&r, &Family::chebyshev_t(), 7, &xs).unwrap();
        for (x, v) in xs.iter().zip(q7) {
            let t = (7.0 * x.acos()).cos() / (PI / 2.0).sqrt();
            assert!((v - t).abs() < 1e-13);
        }
        assert!(synthesize(&r, &Family::chebyshev_t(), n, &xs).is_err());
    }

    #[test]
    fn residual_is_small_for_both_regimes() {
        for n in [64, 600] {
            let p = ConnectionProblem::new(moments_log_chebyshev(2 * n - 1).unwrap(), n).unwrap();
            let x = p.multiplication().unwrap();
            let w = p.fill(&x).unwrap();
            let r = p.factor(&w, &x).unwrap();
            assert!(r.relative_residual(&w.section) < 1e-12);
        }
    }
}
