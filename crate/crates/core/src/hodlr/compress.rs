use std::ops::Range;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{split_point, HodlrMatrix, HodlrNode, LowRankBlock};
use crate::error::{Error, Result};
use crate::gram::TphOperator;

/// Extra sketch columns beyond the target rank.
pub const OVERSAMPLING: usize = 8;
/// Subspace iterations in the range finder.
pub const POWER_ITERATIONS: usize = 2;
const INITIAL_RANK: usize = 16;

/// Products with contiguous blocks of a symmetric `n x n` matrix.
pub trait BlockOracle {
    fn n(&self) -> usize;

    /// `A[rows, cols] X`.
    fn apply(&self, rows: Range<usize>, cols: Range<usize>, x: &DMatrix<f64>) -> DMatrix<f64>;

    /// `A[rows, cols]^T X`, which for a symmetric matrix is `A[cols, rows] X`.
    fn apply_t(&self, rows: Range<usize>, cols: Range<usize>, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.apply(cols, rows, x)
    }

    fn dense_block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64>;
}

/// Oracle over an explicit dense matrix, `O(mn)` per product.
pub struct DenseOracle<'a>(pub &'a DMatrix<f64>);

impl BlockOracle for DenseOracle<'_> {
    fn n(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, rows: Range<usize>, cols: Range<usize>, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.view((rows.start, cols.start), (rows.len(), cols.len())) * x
    }

    fn dense_block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
        self.0.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }
}

impl BlockOracle for DMatrix<f64> {
    fn n(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, rows: Range<usize>, cols: Range<usize>, x: &DMatrix<f64>) -> DMatrix<f64> {
        DenseOracle(self).apply(rows, cols, x)
    }

    fn dense_block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
        DenseOracle(self).dense_block(rows, cols)
    }
}

/// Chebyshev-T Gram oracle with FFT-based block products.
pub struct TphOracle {
    op: TphOperator,
    n: usize,
}

impl TphOracle {
    /// Needs `2n - 1` moments.
    pub fn new(mu: &[f64], n: usize) -> Result<Self> {
        if mu.len() + 1 < 2 * n {
            return Err(Error::InsufficientMoments {
                needed: 2 * n - 1,
                got: mu.len(),
            });
        }
        Ok(TphOracle {
            op: TphOperator::new(mu[..2 * n - 1].to_vec()),
            n,
        })
    }
}

impl BlockOracle for TphOracle {
    fn n(&self) -> usize {
        self.n
    }

    fn apply(&self, rows: Range<usize>, cols: Range<usize>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rows.len(), x.ncols());
        for k in 0..x.ncols() {
            let y = self
                .op
                .apply(rows.clone(), cols.clone(), x.column(k).as_slice())
                .expect("block inside the section");
            out.column_mut(k).copy_from_slice(&y);
        }
        out
    }

    fn dense_block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.op.entry(rows.start + i, cols.start + j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressOptions {
    /// Relative truncation against the root off-diagonal block's largest
    /// singular value.
    pub tol: f64,
    pub leaf_size: usize,
    pub seed: u64,
}

impl CompressOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        CompressOptions {
            tol,
            leaf_size: super::DEFAULT_LEAF_SIZE,
            seed,
        }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn orth(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Orthonormal basis of `A[rows, cols] Omega` after `q` subspace iterations,
/// with `Omega` an `ncols x l` Gaussian matrix.
pub fn randomized_range(
    oracle: &dyn BlockOracle,
    rows: Range<usize>,
    cols: Range<usize>,
    l: usize,
    q: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let omega = gaussian(cols.len(), l, rng);
    let mut y = oracle.apply(rows.clone(), cols.clone(), &omega);
    for _ in 0..q {
        let qy = orth(y);
        let z = orth(oracle.apply_t(rows.clone(), cols.clone(), &qy));
        y = oracle.apply(rows.clone(), cols.clone(), &z);
    }
    orth(y)
}

enum Cutoff {
    Absolute(f64),
    /// Relative to the block's own largest singular value.
    Relative(f64),
}

/// Adaptive randomized SVD of one block; doubles the sketch until a
/// computed singular value falls below the cutoff.
fn compress_block(
    oracle: &dyn BlockOracle,
    rows: Range<usize>,
    cols: Range<usize>,
    cutoff: Cutoff,
    rng: &mut ChaCha8Rng,
) -> Result<(LowRankBlock, f64)> {
    let (m, n) = (rows.len(), cols.len());
    let max_rank = m.min(n);
    let mut target = INITIAL_RANK;
    loop {
        let l = (target + OVERSAMPLING).min(max_rank);
        let q = randomized_range(oracle, rows.clone(), cols.clone(), l, POWER_ITERATIONS, rng);
        // B^T = A^T Q, so A ~ Q B = Q (V_b S U_b^T)
        let bt = oracle.apply_t(rows.clone(), cols.clone(), &q);
        if bt.iter().all(|&v| v == 0.0) {
            return Ok((LowRankBlock::zero(m, n), 0.0));
        }
        let svd = bt.svd(true, true);
        let (ub, s, vbt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let s_max = s[order[0]];
        let thr = match cutoff {
            Cutoff::Absolute(t) => t,
            Cutoff::Relative(t) => t * s_max,
        };
        let smallest = s[*order.last().unwrap()];
        if smallest > thr && l < max_rank {
            target *= 2;
            continue;
        }
        let keep: Vec<usize> = order.into_iter().filter(|&i| s[i] > thr && s[i] > 0.0).collect();
        if keep.len() > max_rank / 2 {
            return Err(Error::RankExceedsHalfBlock {
                rows: m,
                cols: n,
                rank: keep.len(),
            });
        }
        let u = &q * vbt.select_rows(keep.iter()).transpose();
        let v = ub.select_columns(keep.iter());
        let s = keep.iter().map(|&i| s[i]).collect();
        return Ok((LowRankBlock { u, s, v }, s_max));
    }
}

fn build(
    oracle: &dyn BlockOracle,
    range: Range<usize>,
    id: u64,
    opts: &CompressOptions,
    tol_abs: f64,
) -> Result<HodlrNode> {
    if range.len() <= opts.leaf_size {
        return Ok(HodlrNode::Leaf(oracle.dense_block(range.clone(), range)));
    }
    let mid = split_point(&range);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(id);
    let (off, _) = compress_block(oracle, range.start..mid, mid..range.end, Cutoff::Absolute(tol_abs), &mut rng)?;
    Ok(HodlrNode::Branch {
        split: mid - range.start,
        d1: Box::new(build(oracle, range.start..mid, 2 * id, opts, tol_abs)?),
        d2: Box::new(build(oracle, mid..range.end, 2 * id + 1, opts, tol_abs)?),
        off,
    })
}

/// HODLR approximation of the symmetric matrix behind `oracle`. Off-diagonal
/// blocks drop singular values at or below `tol` times the largest singular
/// value of the root off-diagonal block. Deterministic in `seed`.
pub fn hodlr_compress(oracle: &dyn BlockOracle, opts: &CompressOptions) -> Result<HodlrMatrix> {
    let n = oracle.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    if opts.leaf_size == 0 {
        return Err(Error::InvalidArgument("leaf size must be positive".into()));
    }
    let root = 0..n;
    if n <= opts.leaf_size {
        return Ok(HodlrMatrix {
            root: HodlrNode::Leaf(oracle.dense_block(root.clone(), root)),
            leaf_size: opts.leaf_size,
            tol_abs: 0.0,
            tol: opts.tol,
        });
    }
    let mid = split_point(&root);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(1);
    let (off, s_max) = compress_block(oracle, 0..mid, mid..n, Cutoff::Relative(opts.tol), &mut rng)?;
    let tol_abs = opts.tol * s_max;
    let node = HodlrNode::Branch {
        split: mid,
        d1: Box::new(build(oracle, 0..mid, 2, opts, tol_abs)?),
        d2: Box::new(build(oracle, mid..n, 3, opts, tol_abs)?),
        off,
    };
    Ok(HodlrMatrix {
        root: node,
        leaf_size: opts.leaf_size,
        tol_abs,
        tol: opts.tol,
    })
}
