//! Displacement structure `X^T W - W X = G J G^T` of Gram sections and the
//! fast Cholesky factorization it enables.

use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix2};

use crate::classical::TridiagonalSection;
use crate::error::{Error, Result};
use crate::gram::GramSection;

/// Relative pivot threshold against the largest entry of the first column.
pub const PIVOT_TOL: f64 = 1e-14;

/// Generators `G = (g1 | g2)` with `J = [[0, 1], [-1, 0]]`, so that
/// `G J G^T = g1 g2^T - g2 g1^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    g: DMatrix<f64>,
}

impl GeneratorPair {
    pub fn new(g1: Vec<f64>, g2: Vec<f64>) -> Result<Self> {
        if g1.len() != g2.len() || g1.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "generator columns of length {} and {}",
                g1.len(),
                g2.len()
            )));
        }
        let n = g1.len();
        Ok(GeneratorPair {
            g: DMatrix::from_fn(n, 2, |i, j| if j == 0 { g1[i] } else { g2[i] }),
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn j() -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, -1.0, 0.0)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.g.column(k).iter().copied().collect()
    }

    /// Dense `G J G^T`.
    pub fn gjg(&self) -> DMatrix<f64> {
        let jm = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        &self.g * jm * self.g.transpose()
    }

    fn first_is_last_unit(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| self.g[(i, 0)] == if i + 1 == n { 1.0 } else { 0.0 })
    }
}

/// Generators from the last two columns of an `n x n` section:
/// `G = (e_n | W e_{n-1} X[n-1,n] + W e_n X[n,n] - X^T W e_n)` (1-based).
pub fn generators_from_columns(col_nm2: &[f64], col_nm1: &[f64], x: &TridiagonalSection) -> Result<GeneratorPair> {
    let n = col_nm1.len();
    if n == 0 || x.n() < n || (n > 1 && col_nm2.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "columns of length {} and {n} with a {}-section of X",
            col_nm2.len(),
            x.n()
        )));
    }
    let x = x.leading(n);
    let xt_w = x.tr_mul_vec(col_nm1);
    let mut g2: Vec<f64> = (0..n).map(|i| col_nm1[i] * x.d[n - 1] - xt_w[i]).collect();
    if n > 1 {
        for (g, w) in g2.iter_mut().zip(col_nm2) {
            *g += w * x.du[n - 2];
        }
    }
    let mut g1 = vec![0.0; n];
    g1[n - 1] = 1.0;
    GeneratorPair::new(g1, g2)
}

pub fn build_generators(w: &GramSection, x: &TridiagonalSection) -> Result<GeneratorPair> {
    let n = w.n();
    if x.n() < n {
        return Err(Error::DimensionMismatch(format!(
            "Gram section is {n}x{n} but X is {}x{}",
            x.n(),
            x.n()
        )));
    }
    let last = w.column(n - 1);
    let prev = if n > 1 { w.column(n - 2) } else { Vec::new() };
    generators_from_columns(&prev, &last, x)
}

/// `||X^T W - W X - G J G^T||_F` over the `n x n` section.
pub fn displacement_residual(w: &DMatrix<f64>, x: &TridiagonalSection, g: &GeneratorPair) -> f64 {
    let n = w.nrows();
    let xd = x.leading(n).to_dense();
    (xd.transpose() * w - w * xd - g.gjg()).norm()
}

/// Lower-triangular factor `L` with `W = L L^T`, stored packed by columns or
/// as a band.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularFactor {
    n: usize,
    /// Number of stored subdiagonals (`n - 1` for dense storage).
    b: usize,
    /// Column `j` holds rows `j ..= min(j + b, n - 1)` starting at `start[j]`.
    data: Vec<f64>,
    start: Vec<usize>,
}

impl TriangularFactor {
    fn zeros(n: usize, b: usize) -> Self {
        let b = b.min(n.saturating_sub(1));
        let mut start = Vec::with_capacity(n + 1);
        let mut off = 0;
        for j in 0..n {
            start.push(off);
            off += (b + 1).min(n - j);
        }
        start.push(off);
        TriangularFactor {
            n,
            b,
            data: vec![0.0; off],
            start,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut f = Self::zeros(n, 0);
        f.data.fill(1.0);
        f
    }

    pub fn from_dense_lower(l: &DMatrix<f64>) -> Result<Self> {
        let n = l.nrows();
        let mut f = Self::zeros(n, n.saturating_sub(1));
        for j in 0..n {
            if !(l[(j, j)] > 0.0) {
                return Err(Error::InvalidArgument(format!("diagonal entry {j} is not positive")));
            }
            f.col_mut(j).copy_from_slice(&l.column(j).as_slice()[j..]);
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored lower bandwidth.
    pub fn bandwidth(&self) -> usize {
        self.b
    }

    pub fn is_banded(&self) -> bool {
        self.b + 1 < self.n
    }

    /// Entries `L[j.., j]` inside the stored band.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[self.start[j]..self.start[j + 1]]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[self.start[j]..self.start[j + 1]]
    }

    /// `L[i, j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < j || i - j > self.b {
            0.0
        } else {
            self.col(j)[i - j]
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.col(j)[0]).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `L v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for j in 0..self.n {
            for (k, l) in self.col(j).iter().enumerate() {
                out[j + k] += l * v[j];
            }
        }
        out
    }

    /// `L^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.col(j).iter().zip(&v[j..]).map(|(l, x)| l * x).sum())
            .collect()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for j in 0..self.n {
            let c = self.col(j);
            x[j] /= c[0];
            let xj = x[j];
            for (k, l) in c.iter().enumerate().skip(1) {
                x[j + k] -= l * xj;
            }
        }
        x
    }

    /// Solves `L^T x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for j in (0..self.n).rev() {
            let c = self.col(j);
            let s: f64 = c.iter().zip(&x[j..]).skip(1).map(|(l, v)| l * v).sum();
            x[j] = (x[j] - s) / c[0];
        }
        x
    }

    /// `||W - L L^T||_F / ||W||_F`.
    pub fn relative_residual(&self, w: &DMatrix<f64>) -> f64 {
        let l = self.to_dense();
        (w - &l * l.transpose()).norm() / w.norm()
    }

    /// Lower triangle as `i,j,l` CSV.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "i,j,l")?;
        for i in 0..self.n {
            for j in i.saturating_sub(self.b)..=i {
                writeln!(out, "{i},{j},{:.16e}", self.get(i, j))?;
            }
        }
        Ok(())
    }

    /// Binary band format: `n` and `b` as little-endian `u64`, then for each
    /// column `j` the `b + 1` entries `L[j..=j+b, j]` as little-endian `f64`,
    /// zero-padded past row `n - 1`.
    pub fn write_band(&self, mut out: impl Write) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.b as u64).to_le_bytes())?;
        for j in 0..self.n {
            let c = self.col(j);
            for k in 0..=self.b {
                out.write_all(&c.get(k).copied().unwrap_or(0.0).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_band(mut input: impl Read) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let b = u64::from_le_bytes(word) as usize;
        if n == 0 || b >= n.max(1) {
            return Err(Error::Parse(format!("bad band header n={n} b={b}")));
        }
        let mut f = Self::zeros(n, b);
        for j in 0..n {
            for k in 0..=b {
                input.read_exact(&mut word)?;
                let v = f64::from_le_bytes(word);
                if j + k < n {
                    f.col_mut(j)[k] = v;
                }
            }
        }
        Ok(f)
    }
}

/// Standard column Cholesky: `O(n^3)` dense, `O(b^2 n)` for banded sections.
pub fn cholesky_dense_reference(w: &GramSection) -> Result<TriangularFactor> {
    let n = w.n();
    let b = w.bandwidth().unwrap_or(n.saturating_sub(1));
    let mut f = TriangularFactor::zeros(n, b);
    for j in 0..n {
        let len = f.col(j).len();
        let mut c: Vec<f64> = (0..len).map(|k| w.get(j + k, j)).collect();
        for p in j.saturating_sub(f.b)..j {
            let lp = f.col(p);
            let ljp = lp[j - p];
            let end = lp.len().min(j - p + len);
            for (k, v) in lp[j - p..end].iter().enumerate() {
                c[k] -= v * ljp;
            }
        }
        if !(c[0] > 0.0) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = c[0].sqrt();
        for (dst, v) in f.col_mut(j).iter_mut().zip(&c) {
            *dst = v / d;
        }
    }
    Ok(f)
}

/// State of the fast factorization after `k` steps: the trailing Schur
/// complement `S` satisfies `Y^T S - S Y = e g2^T - g2 e^T` with
/// `Y = X[k.., k..] + e_0 r^T` and `e` the last unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurState {
    pub step: usize,
    /// First column of `S`.
    pub c: Vec<f64>,
    /// First-row correction of `Y`.
    pub r: Vec<f64>,
    pub g2: Vec<f64>,
}

impl SchurState {
    pub fn generators(&self) -> GeneratorPair {
        let n = self.g2.len();
        let mut g1 = vec![0.0; n];
        g1[n - 1] = 1.0;
        GeneratorPair::new(g1, self.g2.clone()).expect("consistent lengths")
    }

    /// Dense `Y`.
    pub fn operator(&self, x: &TridiagonalSection) -> DMatrix<f64> {
        let k = self.step;
        let n = self.c.len();
        DMatrix::from_fn(n, n, |i, j| x.get(k + i, k + j) + if i == 0 { self.r[j] } else { 0.0 })
    }
}

fn check_fast_inputs(first_column: &[f64], x: &TridiagonalSection, g: &GeneratorPair) -> Result<()> {
    let n = first_column.len();
    if n == 0 || g.n() != n || x.n() < n {
        return Err(Error::DimensionMismatch(format!(
            "first column {n}, generators {}, X section {}",
            g.n(),
            x.n()
        )));
    }
    if !g.first_is_last_unit() {
        return Err(Error::InvalidArgument(
            "first generator column must be the last unit vector".into(),
        ));
    }
    Ok(())
}

/// Core elimination loop. `band` limits the working length of `c` and `r`
/// to `band + 2` entries; `stop` ends after that many steps and returns the
/// live state.
fn eliminate(
    first_column: &[f64],
    x: &TridiagonalSection,
    g: &GeneratorPair,
    band: Option<usize>,
    stop: Option<usize>,
    mut out: Option<&mut TriangularFactor>,
) -> Result<SchurState> {
    let n = first_column.len();
    let scale = first_column.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = PIVOT_TOL * scale;
    let work = band.map_or(n, |b| (b + 2).min(n));
    let mut c = first_column[..work].to_vec();
    if let Some(b) = band {
        if let Some((i, &v)) = first_column.iter().enumerate().skip(b + 1).find(|(_, v)| **v != 0.0) {
            return Err(Error::MomentsNotBandLimited {
                bandwidth: b,
                index: i,
                value: v,
            });
        }
    }
    let mut r = vec![0.0; work];
    let mut g2 = g.column(1);
    let mut s1 = vec![0.0; work];
    for k in 0..n {
        if stop == Some(k) {
            let len = n - k;
            let mut cc = c.clone();
            cc.resize(len, 0.0);
            let mut rr = r.clone();
            rr.resize(len, 0.0);
            return Ok(SchurState {
                step: k,
                c: cc,
                r: rr,
                g2: g2[k..].to_vec(),
            });
        }
        let len = n - k;
        let wl = c.len();
        let d = c[0];
        if !(d > tol) {
            return Err(Error::NotPositiveDefinite(k));
        }
        if let Some(f) = out.as_deref_mut() {
            let sd = d.sqrt();
            for (dst, v) in f.col_mut(k).iter_mut().zip(&c) {
                *dst = v / sd;
            }
        }
        if len == 1 {
            break;
        }
        let gamma = x.dl[k];
        if gamma == 0.0 {
            return Err(Error::IrreducibilityViolated(k));
        }
        // second column of S from (Y^T - Y[0,0]) c - g2[0] e, divided by gamma
        let y00 = x.d[k] + r[0];
        let c0 = c[0];
        let g20 = g2[k];
        // rows 1..wl of s1; rows past wl are zero in the banded case
        let ext = if band.is_some() { wl.min(len) } else { len };
        for i in 1..ext {
            let gi = k + i;
            let mut v = x.du[gi - 1] * c[i - 1] + x.d[gi] * c[i];
            if i + 1 < wl {
                v += x.dl[gi] * c[i + 1];
            }
            v += r[i] * c0 - y00 * c[i];
            if i + 1 == len {
                v -= g20;
            }
            s1[i] = v / gamma;
        }
        // trailing state, shifted by one
        let ratio = c[1] / d;
        let rs = -gamma / d;
        let gs = g20 / d;
        let new_wl = if band.is_some() { work.min(len - 1) } else { len - 1 };
        let mut nc = vec![0.0; new_wl];
        let mut nr = vec![0.0; new_wl];
        for i in 0..new_wl {
            let u = if i + 1 < wl { c[i + 1] } else { 0.0 };
            let s = if i + 1 < ext { s1[i + 1] } else { 0.0 };
            nc[i] = s - u * ratio;
            nr[i] = rs * u;
            if u != 0.0 {
                g2[k + 1 + i] -= gs * u;
            }
        }
        c = nc;
        r = nr;
        if !c.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteEntry(k + 1, k + 1));
        }
    }
    Ok(SchurState {
        step: n,
        c: Vec::new(),
        r: Vec::new(),
        g2: Vec::new(),
    })
}

/// Fast Cholesky of the SPD matrix `W` determined by its first column and
/// the displacement equation `X^T W - W X = G J G^T`, with `G`'s first
/// column the last unit vector. `O(n^2)` work.
pub fn fast_cholesky(first_column: &[f64], x: &TridiagonalSection, g: &GeneratorPair) -> Result<TriangularFactor> {
    check_fast_inputs(first_column, x, g)?;
    let n = first_column.len();
    let mut f = TriangularFactor::zeros(n, n - 1);
    eliminate(first_column, x, g, None, None, Some(&mut f))?;
    Ok(f)
}

/// Banded variant for `W` of half-bandwidth `b`: `O(bn)` work, banded factor.
pub fn fast_cholesky_banded(first_column: &[f64], x: &TridiagonalSection, g: &GeneratorPair, b: usize) -> Result<TriangularFactor> {
    check_fast_inputs(first_column, x, g)?;
    let n = first_column.len();
    let mut f = TriangularFactor::zeros(n, b);
    eliminate(first_column, x, g, Some(b), None, Some(&mut f))?;
    Ok(f)
}

/// Runs `k` elimination steps and returns the live state, for inspecting the
/// Schur-complement displacement equation.
pub fn schur_state_after(first_column: &[f64], x: &TridiagonalSection, g: &GeneratorPair, k: usize) -> Result<SchurState> {
    check_fast_inputs(first_column, x, g)?;
    if k >= first_column.len() {
        return Err(Error::InvalidArgument(format!("step {k} past the last pivot")));
    }
    eliminate(first_column, x, g, None, Some(k), None)
}

/// Factors a Gram section with the fast algorithm, choosing the banded
/// variant for banded storage.
pub fn fast_cholesky_gram(w: &GramSection, x: &TridiagonalSection) -> Result<TriangularFactor> {
    let g = build_generators(w, x)?;
    let c = w.first_column();
    match w.bandwidth() {
        Some(b) => fast_cholesky_banded(&c, x, &g, b),
        None => fast_cholesky(&c, x, &g),
    }
}
