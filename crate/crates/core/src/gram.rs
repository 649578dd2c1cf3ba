//! Principal sections of the Gram matrix `W[m, n] = \int p_m p_n w dx`,
//! filled from modified moments by the five-term recurrence implied by
//! `X^T W = W X`.

use std::collections::HashMap;
use std::io::Write;
use std::ops::Range;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::classical::{BandedSection, Family, FamilyKind, TridiagonalSection};
use crate::error::{Error, Result};
use crate::moments::MomentVector;

/// Laguerre fills beyond this size lose all accuracy in double precision.
pub const LAGUERRE_STABLE_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum GramStorage {
    Dense(DMatrix<f64>),
    /// Symmetric band of half-bandwidth `BandedSection::lower_bandwidth`.
    Banded(BandedSection),
    /// Chebyshev-T Gram given entrywise by `(mu_{m+n} + mu_{|m-n|}) / 2`.
    ToeplitzPlusHankel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSection {
    n: usize,
    moments: MomentVector,
    storage: GramStorage,
}

impl GramSection {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        self.moments.family()
    }

    pub fn moments(&self) -> &MomentVector {
        &self.moments
    }

    pub fn storage(&self) -> &GramStorage {
        &self.storage
    }

    /// Half-bandwidth for banded storage.
    pub fn bandwidth(&self) -> Option<usize> {
        match &self.storage {
            GramStorage::Banded(b) => Some(b.lower_bandwidth()),
            _ => None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            GramStorage::Dense(w) => w[(i, j)],
            GramStorage::Banded(b) => b.get(i, j),
            GramStorage::ToeplitzPlusHankel => {
                let mu = self.moments.values();
                0.5 * (mu[i + j] + mu[i.abs_diff(j)])
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn first_column(&self) -> Vec<f64> {
        self.column(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            GramStorage::Dense(w) => w.clone(),
            _ => DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j)),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        match &self.storage {
            GramStorage::Dense(w) => (w * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec(),
            GramStorage::Banded(b) => b.mul_vec(v),
            GramStorage::ToeplitzPlusHankel => {
                TphOperator::new(self.moments.values().to_vec()).apply(0..self.n, 0..self.n, v).expect("covered")
            }
        }
    }

    /// Dense row-major `i,j,w` CSV, or the moment vector for Toeplitz-plus-Hankel storage.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        if let GramStorage::ToeplitzPlusHankel = self.storage {
            return self.moments.truncated(2 * self.n - 1).write_csv(out);
        }
        writeln!(out, "i,j,w")?;
        for i in 0..self.n {
            for j in 0..self.n {
                writeln!(out, "{i},{j},{:.16e}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

fn check_inputs(moments: &MomentVector, x: &TridiagonalSection, n: usize, need_mu: usize, need_x: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gram section must be nonempty".into()));
    }
    if moments.len() < need_mu {
        return Err(Error::InsufficientMoments {
            needed: need_mu,
            got: moments.len(),
        });
    }
    if x.n() < need_x {
        return Err(Error::DimensionMismatch(format!(
            "multiplication section has size {}, need {need_x}",
            x.n()
        )));
    }
    if let Some(k) = x.dl.iter().take(need_x - 1).position(|&v| v == 0.0) {
        return Err(Error::IrreducibilityViolated(k));
    }
    Ok(())
}

fn warn_if_unstable(family: &Family, n: usize) {
    if family.kind() == FamilyKind::Laguerre && n > LAGUERRE_STABLE_SIZE {
        log::warn!(
            "Gram recurrence for {} is unstable beyond n = {LAGUERRE_STABLE_SIZE} (requested {n})",
            family.name()
        );
    }
}

/// One step of the recurrence: column `j + 1` from columns `j` and `j - 1`
/// over rows `0..len`, where `cur` has at least `len + 1` entries.
fn next_column(x: &TridiagonalSection, j: usize, prev: Option<&[f64]>, cur: &[f64], len: usize) -> Vec<f64> {
    let inv = 1.0 / x.dl[j];
    (0..len)
        .map(|m| {
            let mut s = x.d[m] * cur[m] + x.dl[m] * cur[m + 1];
            if m > 0 {
                s += x.du[m - 1] * cur[m - 1];
            }
            s -= cur[m] * x.d[j];
            if let (Some(p), true) = (prev, j > 0) {
                s -= p[m] * x.du[j - 1];
            }
            s * inv
        })
        .collect()
}

/// Dense `n x n` section. Needs `2n - 1` moments and a `(2n - 1)`-section of `X`.
pub fn gram_from_moments(moments: &MomentVector, x: &TridiagonalSection, n: usize) -> Result<GramSection> {
    let need = 2 * n - 1;
    check_inputs(moments, x, n, need, need)?;
    warn_if_unstable(moments.family(), n);
    let mut w = DMatrix::zeros(n, n);
    let mut prev: Option<Vec<f64>> = None;
    let mut cur = moments.values()[..need].to_vec();
    for j in 0..n {
        for m in j..n {
            let v = cur[m];
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry(m, j));
            }
            w[(m, j)] = v;
            w[(j, m)] = v;
        }
        if j + 1 < n {
            let next = next_column(x, j, prev.as_deref(), &cur, need - j - 1);
            prev = Some(std::mem::replace(&mut cur, next));
        }
    }
    Ok(GramSection {
        n,
        moments: moments.clone(),
        storage: GramStorage::Dense(w),
    })
}

/// Columns `cols` of the `n x n` section without storing the whole matrix:
/// `O(n^2)` work, `O(n)` memory. Entries match [`gram_from_moments`] exactly,
/// including the mirrored upper triangle.
pub fn gram_columns(moments: &MomentVector, x: &TridiagonalSection, n: usize, cols: &[usize]) -> Result<Vec<Vec<f64>>> {
    let need = 2 * n - 1;
    check_inputs(moments, x, n, need, need)?;
    if let Some(&c) = cols.iter().find(|&&c| c >= n) {
        return Err(Error::InvalidArgument(format!("column {c} outside {n}x{n} section")));
    }
    warn_if_unstable(moments.family(), n);
    let last = cols.iter().copied().max().unwrap_or(0);
    let mut out = vec![vec![0.0; n]; cols.len()];
    let mut prev: Option<Vec<f64>> = None;
    let mut cur = moments.values()[..need].to_vec();
    for j in 0..=last {
        if let Some(m) = cur[j..n].iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry(m + j, j));
        }
        for (slot, &c) in cols.iter().enumerate() {
            if c == j {
                out[slot][j..].copy_from_slice(&cur[j..n]);
            } else if c > j {
                out[slot][j] = cur[c];
            }
        }
        if j < last {
            let next = next_column(x, j, prev.as_deref(), &cur, need - j - 1);
            prev = Some(std::mem::replace(&mut cur, next));
        }
    }
    Ok(out)
}

/// Largest moment index with `|mu_k|` above `1e-15 max |mu|`.
pub fn effective_bandwidth(moments: &MomentVector) -> usize {
    let tol = 1e-15 * moments.max_abs();
    moments.values().iter().rposition(|v| v.abs() > tol).unwrap_or(0)
}

/// Banded `n x n` section for moments that vanish past index `b`, in
/// `O(bn)` work. Needs `min(b + 1, 2n - 1)` moments and an `(n + b)`-section of `X`.
pub fn gram_banded_from_moments(moments: &MomentVector, x: &TridiagonalSection, n: usize, b: usize) -> Result<GramSection> {
    let mu = moments.values();
    let tol = 1e-15 * moments.max_abs();
    if let Some((k, &v)) = mu.iter().enumerate().skip(b + 1).find(|(_, v)| v.abs() > tol) {
        return Err(Error::MomentsNotBandLimited {
            bandwidth: b,
            index: k,
            value: v,
        });
    }
    let rows = (n + b).min(2 * n - 1);
    check_inputs(moments, x, n, (b + 1).min(2 * n - 1), rows)?;
    warn_if_unstable(moments.family(), n);
    // column j holds rows j-b ..= j+b at offset (m + b - j); rows past the
    // shrinking coverage 2n-2-j are never read
    let width = 2 * b + 1;
    let at = |col: &[f64], j: usize, m: isize| -> f64 {
        let off = m - j as isize + b as isize;
        if m < 0 || off < 0 || off >= width as isize {
            0.0
        } else {
            col[off as usize]
        }
    };
    let mut out = BandedSection::zeros(n, b, b);
    let mut cur = vec![0.0; width];
    for (k, v) in cur.iter_mut().enumerate().skip(b) {
        *v = mu.get(k - b).copied().unwrap_or(0.0);
    }
    let mut prev = vec![0.0; width];
    for j in 0..n {
        let hi = (j + b).min(2 * n - 2 - j).min(n - 1);
        for m in j..=hi {
            let v = at(&cur, j, m as isize);
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry(m, j));
            }
            out.set(m, j, v);
            out.set(j, m, v);
        }
        if j + 1 == n {
            break;
        }
        let inv = 1.0 / x.dl[j];
        let mut next = vec![0.0; width];
        let row_hi = (j + 1 + b).min(2 * n - 3 - j).min(rows - 1);
        for m in (j + 1).saturating_sub(b)..=row_hi {
            let mi = m as isize;
            let mut s = x.d[m] * at(&cur, j, mi);
            if m + 1 < x.n() {
                s += x.dl[m] * at(&cur, j, mi + 1);
            }
            if m > 0 {
                s += x.du[m - 1] * at(&cur, j, mi - 1);
            }
            s -= at(&cur, j, mi) * x.d[j];
            if j > 0 {
                s -= at(&prev, j - 1, mi) * x.du[j - 1];
            }
            next[m + b - (j + 1)] = s * inv;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(GramSection {
        n,
        moments: moments.clone(),
        storage: GramStorage::Banded(out),
    })
}

/// Chebyshev-T Gram section stored through its moments.
pub fn gram_tph(moments: &MomentVector, n: usize) -> Result<GramSection> {
    if moments.family().kind() != FamilyKind::ChebyshevT {
        return Err(Error::InvalidFamily(format!(
            "Toeplitz-plus-Hankel structure needs ChebyshevT moments, got {}",
            moments.family().name()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("Gram section must be nonempty".into()));
    }
    if moments.len() < 2 * n - 1 {
        return Err(Error::InsufficientMoments {
            needed: 2 * n - 1,
            got: moments.len(),
        });
    }
    Ok(GramSection {
        n,
        moments: moments.clone(),
        storage: GramStorage::ToeplitzPlusHankel,
    })
}

/// Runs the recurrence downwards from caller-supplied columns `n-2` and
/// `n-1`, each over rows `0..2n-1`. Column `j` comes from `j+1`, `j+2`:
/// `W[m, j] X[j, j+1] = (X^T W)[m, j+1] - W[m, j+1] X[j+1, j+1] - W[m, j+2] X[j+2, j+1]`.
pub fn gram_downward(family: &Family, x: &TridiagonalSection, n: usize, col_nm2: &[f64], col_nm1: &[f64]) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("downward fill needs n >= 2".into()));
    }
    let need = 2 * n - 1;
    if col_nm2.len() < need || col_nm1.len() < need {
        return Err(Error::InsufficientMoments {
            needed: need,
            got: col_nm2.len().min(col_nm1.len()),
        });
    }
    if x.n() < need {
        return Err(Error::DimensionMismatch(format!("multiplication section has size {}, need {need}", x.n())));
    }
    warn_if_unstable(family, n);
    let mut w = DMatrix::zeros(n, n);
    let mut hi = col_nm1[..need].to_vec();
    let mut lo = col_nm2[..need].to_vec();
    let store = |w: &mut DMatrix<f64>, col: &[f64], j: usize| {
        for m in 0..n {
            w[(m, j)] = col[m];
        }
    };
    store(&mut w, &hi, n - 1);
    store(&mut w, &lo, n - 2);
    let mut len = need;
    for j in (0..n - 2).rev() {
        // lo = column j+1 over rows 0..len, hi = column j+2 over rows 0..len+1
        len -= 1;
        let inv = 1.0 / x.du[j];
        let col: Vec<f64> = (0..len)
            .map(|m| {
                let mut s = x.d[m] * lo[m] + x.dl[m] * lo[m + 1];
                if m > 0 {
                    s += x.du[m - 1] * lo[m - 1];
                }
                (s - lo[m] * x.d[j + 1] - hi[m] * x.dl[j + 1]) * inv
            })
            .collect();
        if let Some(m) = col[..n].iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry(m, j));
        }
        store(&mut w, &col, j);
        hi = std::mem::replace(&mut lo, col);
    }
    // mirror the upper triangle, which came from the columns nearest the start
    for j in 0..n {
        for m in 0..j {
            w[(j, m)] = w[(m, j)];
        }
    }
    Ok(w)
}

struct Symbol {
    fft_len: usize,
    /// Transforms of the Toeplitz and Hankel symbols.
    toeplitz: Vec<Complex<f64>>,
    hankel: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

const SYMBOL_CACHE_LIMIT: usize = 512;

/// Products with contiguous blocks of the Chebyshev-T Gram matrix
/// `(mu_{m+n} + mu_{|m-n|}) / 2` through FFT convolution.
pub struct TphOperator {
    mu: Vec<f64>,
    cache: Mutex<(FftPlanner<f64>, HashMap<(usize, isize, usize, usize), Arc<Symbol>>)>,
}

impl TphOperator {
    pub fn new(mu: Vec<f64>) -> Self {
        TphOperator {
            mu,
            cache: Mutex::new((FftPlanner::new(), HashMap::new())),
        }
    }

    pub fn moments(&self) -> &[f64] {
        &self.mu
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.mu[i + j] + self.mu[i.abs_diff(j)])
    }

    fn symbol(&self, r0: usize, c0: usize, m: usize, n: usize) -> Arc<Symbol> {
        let key = (r0 + c0, r0 as isize - c0 as isize, m, n);
        let mut guard = self.cache.lock().expect("cache lock");
        let (planner, map) = &mut *guard;
        if let Some(s) = map.get(&key) {
            return s.clone();
        }
        let fft_len = (m + 2 * n - 2).next_power_of_two().max(2);
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let shift = r0 as isize - c0 as isize - (n as isize - 1);
        let mut t = vec![Complex::new(0.0, 0.0); fft_len];
        let mut h = vec![Complex::new(0.0, 0.0); fft_len];
        for k in 0..m + n - 1 {
            t[k].re = self.mu[(shift + k as isize).unsigned_abs()];
            h[k].re = self.mu[r0 + c0 + k];
        }
        forward.process(&mut t);
        forward.process(&mut h);
        let sym = Arc::new(Symbol {
            fft_len,
            toeplitz: t,
            hankel: h,
            forward,
            inverse,
        });
        if map.len() >= SYMBOL_CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, sym.clone());
        sym
    }

    /// `W[rows, cols] v`.
    pub fn apply(&self, rows: Range<usize>, cols: Range<usize>, v: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = (rows.len(), cols.len());
        if v.len() != n {
            return Err(Error::DimensionMismatch(format!("block has {n} columns, vector has {}", v.len())));
        }
        if m == 0 {
            return Ok(Vec::new());
        }
        if n == 0 {
            return Ok(vec![0.0; m]);
        }
        let needed = rows.end + cols.end - 1;
        if needed > self.mu.len() {
            return Err(Error::RangeOutOfCoverage {
                needed,
                available: self.mu.len(),
            });
        }
        if m * n <= 4096 {
            return Ok(rows
                .map(|i| cols.clone().zip(v).map(|(j, x)| self.entry(i, j) * x).sum())
                .collect());
        }
        let sym = self.symbol(rows.start, cols.start, m, n);
        let len = sym.fft_len;
        let mut a = vec![Complex::new(0.0, 0.0); len];
        let mut b = vec![Complex::new(0.0, 0.0); len];
        for (k, &x) in v.iter().enumerate() {
            a[k].re = x;
            b[n - 1 - k].re = x;
        }
        sym.forward.process(&mut a);
        sym.forward.process(&mut b);
        for k in 0..len {
            a[k] = a[k] * sym.toeplitz[k] + b[k] * sym.hankel[k];
        }
        sym.inverse.process(&mut a);
        let scale = 0.5 / len as f64;
        Ok((0..m).map(|i| a[i + n - 1].re * scale).collect())
    }
}

/// Product of a contiguous block of the Chebyshev-T Gram matrix with `v`.
pub fn tph_matvec(moments: &MomentVector, rows: Range<usize>, cols: Range<usize>, v: &[f64]) -> Result<Vec<f64>> {
    TphOperator::new(moments.values().to_vec()).apply(rows, cols, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::multiplication_matrix;
    use crate::moments::{moments_log_chebyshev, Preset, Provenance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn mv(f: Family, v: Vec<f64>) -> MomentVector {
        MomentVector::new(f, v, Provenance::External).unwrap()
    }

    #[test]
    fn classical_weight_gives_mass_matrix() {
        let f = Family::chebyshev_t();
        let mut mu = vec![0.0; 15];
        mu[0] = PI;
        let x = multiplication_matrix(&f, 15).unwrap();
        let w = gram_from_moments(&mv(f, mu), &x, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let e = if i != j { 0.0 } else if i == 0 { PI } else { PI / 2.0 };
                assert!((w.get(i, j) - e).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn chebyshev_fill_matches_toeplitz_plus_hankel() {
        let n = 40;
        let mu = moments_log_chebyshev(2 * n - 1).unwrap();
        let x = multiplication_matrix(mu.family(), 2 * n - 1).unwrap();
        let w = gram_from_moments(&mu, &x, n).unwrap();
        let t = gram_tph(&mu, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((w.get(i, j) - t.get(i, j)).abs() < 1e-13 * w.get(0, 0), "({i},{j})");
                assert_eq!(w.get(i, j), w.get(j, i));
            }
        }
    }

    #[test]
    fn legendre_delta_weight_matches_quadrature() {
        let p = Preset::DeltaSqrt(1.0);
        let f = p.family();
        let n = 8;
        let mu = p.moments(2 * n - 1).unwrap();
        let x = multiplication_matrix(&f, 2 * n - 1).unwrap();
        let w = gram_from_moments(&mu, &x, n).unwrap();
        for (i, j) in [(0, 0), (3, 5), (7, 2)] {
            let q = crate::quadrature::integrate(
                |pt| {
                    let v = crate::classical::evaluate(&f, 8, pt.x);
                    v[i] * v[j] * p.weight(pt)
                },
                -1.0,
                1.0,
                &[],
            );
            assert!((w.get(i, j) - q).abs() < 1e-10 * q.abs().max(1e-3), "({i},{j}) {} vs {q}", w.get(i, j));
        }
    }

    #[test]
    fn insufficient_moments_and_coverage() {
        let mu = moments_log_chebyshev(10).unwrap();
        let x = multiplication_matrix(mu.family(), 30).unwrap();
        assert_eq!(
            gram_from_moments(&mu, &x, 6),
            Err(Error::InsufficientMoments { needed: 11, got: 10 })
        );
        assert!(gram_from_moments(&mu, &x.leading(5), 5).is_err());
        assert!(tph_matvec(&mu, 0..6, 0..6, &[0.0; 6]).is_err());
    }

    #[test]
    fn banded_fill_matches_dense_inside_band() {
        for d in [1.0, 0.1] {
            let p = Preset::DeltaSqrt(d);
            let b = p.bandwidth().unwrap();
            let n = 3 * b;
            let mu = p.moments(2 * n - 1).unwrap();
            let x = multiplication_matrix(&p.family(), 2 * n - 1).unwrap();
            let dense = gram_from_moments(&mu, &x, n).unwrap();
            let band = gram_banded_from_moments(&mu, &x, n, b).unwrap();
            let scale = dense.get(0, 0);
            for i in 0..n {
                for j in 0..n {
                    let diff = (dense.get(i, j) - band.get(i, j)).abs();
                    if i.abs_diff(j) <= b {
                        assert!(diff <= 1e-14 * scale, "d={d} ({i},{j}) {diff:e}");
                    } else {
                        assert!(dense.get(i, j).abs() < 1e-13 * scale);
                        assert_eq!(band.get(i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn banded_fill_rejects_wide_moments() {
        let mu = moments_log_chebyshev(30).unwrap();
        let x = multiplication_matrix(mu.family(), 30).unwrap();
        assert!(matches!(
            gram_banded_from_moments(&mu, &x, 10, 3),
            Err(Error::MomentsNotBandLimited { bandwidth: 3, index: 4, .. })
        ));
        let f = Family::chebyshev_t();
        let mut v = vec![0.0; 19];
        v[0] = PI;
        let w = gram_banded_from_moments(&mv(f.clone(), v), &multiplication_matrix(&f, 10).unwrap(), 10, 0).unwrap();
        assert_eq!(w.get(3, 3), PI / 2.0);
        assert_eq!(w.bandwidth(), Some(0));
    }

    #[test]
    fn streaming_columns_match_dense() {
        let n = 50;
        let mu = Preset::algebraic_default().moments(2 * n - 1).unwrap();
        let x = multiplication_matrix(mu.family(), 2 * n - 1).unwrap();
        let w = gram_from_moments(&mu, &x, n).unwrap();
        let cols = gram_columns(&mu, &x, n, &[n - 1, 0, n - 2]).unwrap();
        for i in 0..n {
            assert_eq!(cols[0][i], w.to_dense()[(i, n - 1)]);
            assert_eq!(cols[1][i], mu.values()[i]);
            assert_eq!(cols[2][i], w.to_dense()[(i, n - 2)]);
        }
    }

    #[test]
    fn downward_fill_reproduces_forward_fill() {
        let n = 12;
        let mu = Preset::Jacobi(0.5, -0.5).moments(4 * n).unwrap();
        let x = multiplication_matrix(mu.family(), 4 * n).unwrap();
        // columns n-2, n-1 over 2n-1 rows come from a larger forward fill
        let big = gram_from_moments(&mu, &x, 2 * n).unwrap();
        let c2: Vec<f64> = (0..2 * n - 1).map(|i| big.get(i, n - 2)).collect();
        let c1: Vec<f64> = (0..2 * n - 1).map(|i| big.get(i, n - 1)).collect();
        let w = gram_downward(mu.family(), &x, n, &c2, &c1).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((w[(i, j)] - big.get(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn tph_matvec_matches_dense_blocks() {
        let mu = moments_log_chebyshev(600).unwrap();
        let op = TphOperator::new(mu.values().to_vec());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (rows, cols) in [(0..256, 0..256), (10..200, 150..290), (0..1, 0..1), (256..300, 0..128)] {
            let v: Vec<f64> = (0..cols.len()).map(|_| rng.random::<f64>() - 0.5).collect();
            let fast = op.apply(rows.clone(), cols.clone(), &v).unwrap();
            let dense: Vec<f64> = rows
                .clone()
                .map(|i| cols.clone().zip(&v).map(|(j, x)| op.entry(i, j) * x).sum())
                .collect();
            let scale = dense.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
        let e0: Vec<f64> = (0..256).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
        let col = op.apply(0..256, 0..256, &e0).unwrap();
        for (i, c) in col.iter().enumerate() {
            assert!((c - mu.values()[i]).abs() < 1e-13 * mu.values()[0]);
        }
        let zero = TphOperator::new(vec![0.0; 600]);
        assert!(zero.apply(0..256, 0..256, &e0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_export() {
        let mu = moments_log_chebyshev(5).unwrap();
        let x = multiplication_matrix(mu.family(), 5).unwrap();
        let w = gram_from_moments(&mu, &x, 3).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i,j,w\n0,0,"));
        assert_eq!(text.lines().count(), 10);
        let mut buf = Vec::new();
        gram_tph(&mu, 3).unwrap().write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,mu\n"));
    }
}
