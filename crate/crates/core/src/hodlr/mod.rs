//! Hierarchical off-diagonal low-rank (HODLR) matrices: randomized
//! compression, Cholesky factorization, products and triangular solves.

mod bound;
mod cholesky;
mod compress;

use std::io::Write;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::Result;

pub use bound::{rank_bound, RankBound};
pub use cholesky::{hodlr_cholesky, HodlrCholesky};
pub use compress::{
    hodlr_compress, randomized_range, BlockOracle, CompressOptions, DenseOracle, TphOracle,
    OVERSAMPLING, POWER_ITERATIONS,
};

pub const DEFAULT_LEAF_SIZE: usize = 64;

/// `U diag(s) V^T` with orthonormal `U`, `V` and nonincreasing `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankBlock {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl LowRankBlock {
    pub fn zero(rows: usize, cols: usize) -> Self {
        LowRankBlock {
            u: DMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        }
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// `U S V^T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let t = self.v.tr_mul(&nalgebra::DVector::from_column_slice(x));
        let t = t.zip_map(&nalgebra::DVector::from_column_slice(&self.s), |a, b| a * b);
        (&self.u * t).as_slice().to_vec()
    }

    /// `V S U^T x`.
    pub fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let t = self.u.tr_mul(&nalgebra::DVector::from_column_slice(x));
        let t = t.zip_map(&nalgebra::DVector::from_column_slice(&self.s), |a, b| a * b);
        (&self.v * t).as_slice().to_vec()
    }

    /// Rebuilds `A B^T` (with `A`, `B` arbitrary) in orthonormal form,
    /// keeping singular values above `tol`.
    pub fn from_factors(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Self {
        let (m, n) = (a.nrows(), b.nrows());
        if a.ncols() == 0 {
            return Self::zero(m, n);
        }
        let qa = a.clone().qr();
        let qb = b.clone().qr();
        let core = qa.r() * qb.r().transpose();
        let svd = core.svd(true, true);
        let (cu, cs, cvt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        let mut order: Vec<usize> = (0..cs.len()).collect();
        order.sort_by(|&i, &j| cs[j].total_cmp(&cs[i]));
        let keep: Vec<usize> = order.into_iter().filter(|&i| cs[i] > tol && cs[i] > 0.0).collect();
        let u = qa.q() * cu.select_columns(keep.iter());
        let v = qb.q() * cvt.select_rows(keep.iter()).transpose();
        LowRankBlock {
            u,
            s: keep.iter().map(|&i| cs[i]).collect(),
            v,
        }
    }

    /// Scaled factors `(U S, V)`.
    fn weighted_left(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HodlrNode {
    Leaf(DMatrix<f64>),
    /// `[[d1, off], [off^T, d2]]`, split after `split` rows.
    Branch {
        split: usize,
        d1: Box<HodlrNode>,
        d2: Box<HodlrNode>,
        off: LowRankBlock,
    },
}

impl HodlrNode {
    pub fn size(&self) -> usize {
        match self {
            HodlrNode::Leaf(d) => d.nrows(),
            HodlrNode::Branch { d1, d2, .. } => d1.size() + d2.size(),
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            HodlrNode::Leaf(d) => (d * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
            HodlrNode::Branch { split, d1, d2, off } => {
                let (x1, x2) = x.split_at(*split);
                let mut y1 = d1.matvec(x1);
                let mut y2 = d2.matvec(x2);
                for (a, b) in y1.iter_mut().zip(off.apply(x2)) {
                    *a += b;
                }
                for (a, b) in y2.iter_mut().zip(off.apply_t(x1)) {
                    *a += b;
                }
                y1.extend(y2);
                y1
            }
        }
    }

    fn fill_dense(&self, out: &mut DMatrix<f64>, at: usize) {
        match self {
            HodlrNode::Leaf(d) => {
                let n = d.nrows();
                out.view_mut((at, at), (n, n)).copy_from(d);
            }
            HodlrNode::Branch { split, d1, d2, off } => {
                d1.fill_dense(out, at);
                d2.fill_dense(out, at + split);
                let b = off.to_dense();
                out.view_mut((at, at + split), (b.nrows(), b.ncols())).copy_from(&b);
                out.view_mut((at + split, at), (b.ncols(), b.nrows())).copy_from(&b.transpose());
            }
        }
    }

    /// Subtracts `V diag(s2) V^T`.
    fn downdate(&mut self, v: &DMatrix<f64>, s2: &[f64], tol: f64) {
        if v.ncols() == 0 {
            return;
        }
        match self {
            HodlrNode::Leaf(d) => {
                let mut vs = v.clone();
                for (k, s) in s2.iter().enumerate() {
                    vs.column_mut(k).scale_mut(*s);
                }
                *d -= vs * v.transpose();
                // keep the leaf exactly symmetric
                let n = d.nrows();
                for i in 0..n {
                    for j in 0..i {
                        let a = 0.5 * (d[(i, j)] + d[(j, i)]);
                        d[(i, j)] = a;
                        d[(j, i)] = a;
                    }
                }
            }
            HodlrNode::Branch { split, d1, d2, off } => {
                let v1 = v.rows(0, *split).into_owned();
                let v2 = v.rows(*split, v.nrows() - *split).into_owned();
                d1.downdate(&v1, s2, tol);
                d2.downdate(&v2, s2, tol);
                let r0 = off.rank();
                let k = s2.len();
                let mut a = DMatrix::zeros(off.rows(), r0 + k);
                a.columns_mut(0, r0).copy_from(&off.weighted_left());
                let mut v1s = v1.clone();
                for (c, s) in s2.iter().enumerate() {
                    v1s.column_mut(c).scale_mut(-s);
                }
                a.columns_mut(r0, k).copy_from(&v1s);
                let mut b = DMatrix::zeros(off.cols(), r0 + k);
                b.columns_mut(0, r0).copy_from(&off.v);
                b.columns_mut(r0, k).copy_from(&v2);
                *off = LowRankBlock::from_factors(&a, &b, tol);
            }
        }
    }

    fn collect_ranks(&self, level: usize, index: usize, out: &mut Vec<RankRecord>) {
        if let HodlrNode::Branch { d1, d2, off, .. } = self {
            out.push(RankRecord {
                level: level + 1,
                block_row: 2 * index,
                block_col: 2 * index + 1,
                rows: off.rows(),
                cols: off.cols(),
                rank: off.rank(),
            });
            d1.collect_ranks(level + 1, 2 * index, out);
            d2.collect_ranks(level + 1, 2 * index + 1, out);
        }
    }

    fn depth(&self) -> usize {
        match self {
            HodlrNode::Leaf(_) => 0,
            HodlrNode::Branch { d1, d2, .. } => 1 + d1.depth().max(d2.depth()),
        }
    }
}

/// One off-diagonal block in a rank-structure report. Level 1 is the root
/// split; block indices count blocks of that level's size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRecord {
    pub level: usize,
    pub block_row: usize,
    pub block_col: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

pub fn write_rank_csv(records: &[RankRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "level,block_row,block_col,rows,cols,rank")?;
    for r in records {
        writeln!(out, "{},{},{},{},{},{}", r.level, r.block_row, r.block_col, r.rows, r.cols, r.rank)?;
    }
    Ok(())
}

/// Symmetric HODLR matrix; the lower off-diagonal blocks are the transposes
/// of the stored upper ones.
#[derive(Debug, Clone, PartialEq)]
pub struct HodlrMatrix {
    pub(crate) root: HodlrNode,
    pub(crate) leaf_size: usize,
    /// Absolute truncation threshold used for every block.
    pub(crate) tol_abs: f64,
    pub(crate) tol: f64,
}

impl HodlrMatrix {
    pub fn n(&self) -> usize {
        self.root.size()
    }

    pub fn levels(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn root(&self) -> &HodlrNode {
        &self.root
    }

    /// Absolute singular-value cutoff: `tol` times the largest singular
    /// value of the root off-diagonal block.
    pub fn truncation(&self) -> f64 {
        self.tol_abs
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n());
        self.root.matvec(x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        self.root.fill_dense(&mut out, 0);
        out
    }

    pub fn rank_report(&self) -> Vec<RankRecord> {
        let mut out = Vec::new();
        self.root.collect_ranks(0, 0, &mut out);
        out
    }

    /// Rank of the root off-diagonal block.
    pub fn top_rank(&self) -> usize {
        match &self.root {
            HodlrNode::Leaf(_) => 0,
            HodlrNode::Branch { off, .. } => off.rank(),
        }
    }

    /// Builds a HODLR matrix from explicit parts, mainly for tests.
    pub fn from_node(root: HodlrNode, leaf_size: usize, tol: f64, tol_abs: f64) -> Self {
        HodlrMatrix {
            root,
            leaf_size,
            tol_abs,
            tol,
        }
    }
}

/// Splits `range` at `ceil(len/2)` until pieces have at most `leaf` rows.
pub(crate) fn split_point(range: &Range<usize>) -> usize {
    range.start + range.len().div_ceil(2)
}
