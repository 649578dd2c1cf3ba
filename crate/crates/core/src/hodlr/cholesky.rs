use nalgebra::DMatrix;

use super::{HodlrMatrix, HodlrNode, LowRankBlock, RankRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum CholNode {
    /// Dense upper-triangular factor.
    Leaf(DMatrix<f64>),
    /// `[[r11, r12], [0, r22]]`.
    Branch {
        split: usize,
        r11: Box<CholNode>,
        r22: Box<CholNode>,
        r12: LowRankBlock,
    },
}

/// Upper-triangular HODLR factor `R` with `W = R^T R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodlrCholesky {
    root: CholNode,
    n: usize,
}

fn dense_upper_cholesky(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(j);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l.transpose())
}

impl CholNode {
    fn size(&self) -> usize {
        match self {
            CholNode::Leaf(r) => r.nrows(),
            CholNode::Branch { r11, r22, .. } => r11.size() + r22.size(),
        }
    }

    /// Solves `R^T X = B` in place.
    fn solve_t(&self, b: &mut DMatrix<f64>) {
        match self {
            CholNode::Leaf(r) => {
                r.tr_solve_upper_triangular_mut(b);
            }
            CholNode::Branch { split, r11, r22, r12 } => {
                let (m, k) = (*split, b.ncols());
                let mut b1 = b.rows(0, m).into_owned();
                r11.solve_t(&mut b1);
                let mut b2 = b.rows(m, b.nrows() - m).into_owned();
                if r12.rank() > 0 {
                    let t = r12.u.tr_mul(&b1);
                    let t = DMatrix::from_fn(t.nrows(), k, |i, j| t[(i, j)] * r12.s[i]);
                    b2 -= &r12.v * t;
                }
                r22.solve_t(&mut b2);
                b.rows_mut(0, m).copy_from(&b1);
                b.rows_mut(m, b2.nrows()).copy_from(&b2);
            }
        }
    }

    /// Solves `R X = B` in place.
    fn solve(&self, b: &mut DMatrix<f64>) {
        match self {
            CholNode::Leaf(r) => {
                r.solve_upper_triangular_mut(b);
            }
            CholNode::Branch { split, r11, r22, r12 } => {
                let (m, k) = (*split, b.ncols());
                let mut b2 = b.rows(m, b.nrows() - m).into_owned();
                r22.solve(&mut b2);
                let mut b1 = b.rows(0, m).into_owned();
                if r12.rank() > 0 {
                    let t = r12.v.tr_mul(&b2);
                    let t = DMatrix::from_fn(t.nrows(), k, |i, j| t[(i, j)] * r12.s[i]);
                    b1 -= &r12.u * t;
                }
                r11.solve(&mut b1);
                b.rows_mut(0, m).copy_from(&b1);
                b.rows_mut(m, b2.nrows()).copy_from(&b2);
            }
        }
    }

    fn matvec(&self, x: &[f64], transposed: bool) -> Vec<f64> {
        match self {
            CholNode::Leaf(r) => {
                let v = nalgebra::DVector::from_column_slice(x);
                let y = if transposed { r.tr_mul(&v) } else { r * v };
                y.as_slice().to_vec()
            }
            CholNode::Branch { split, r11, r22, r12 } => {
                let (x1, x2) = x.split_at(*split);
                if transposed {
                    let y1 = r11.matvec(x1, true);
                    let mut y2 = r22.matvec(x2, true);
                    for (a, b) in y2.iter_mut().zip(r12.apply_t(x1)) {
                        *a += b;
                    }
                    [y1, y2].concat()
                } else {
                    let mut y1 = r11.matvec(x1, false);
                    for (a, b) in y1.iter_mut().zip(r12.apply(x2)) {
                        *a += b;
                    }
                    [y1, r22.matvec(x2, false)].concat()
                }
            }
        }
    }

    fn fill_dense(&self, out: &mut DMatrix<f64>, at: usize) {
        match self {
            CholNode::Leaf(r) => {
                let n = r.nrows();
                out.view_mut((at, at), (n, n)).copy_from(r);
            }
            CholNode::Branch { split, r11, r22, r12 } => {
                r11.fill_dense(out, at);
                r22.fill_dense(out, at + split);
                let b = r12.to_dense();
                out.view_mut((at, at + split), (b.nrows(), b.ncols())).copy_from(&b);
            }
        }
    }

    fn collect_ranks(&self, level: usize, index: usize, out: &mut Vec<RankRecord>) {
        if let CholNode::Branch { r11, r22, r12, .. } = self {
            out.push(RankRecord {
                level: level + 1,
                block_row: 2 * index,
                block_col: 2 * index + 1,
                rows: r12.rows(),
                cols: r12.cols(),
                rank: r12.rank(),
            });
            r11.collect_ranks(level + 1, 2 * index, out);
            r22.collect_ranks(level + 1, 2 * index + 1, out);
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            CholNode::Leaf(r) => r[(i, j)],
            CholNode::Branch { split, r11, r22, r12 } => {
                let m = *split;
                match (i < m, j < m) {
                    (true, true) => r11.entry(i, j),
                    (false, false) => r22.entry(i - m, j - m),
                    (true, false) => (0..r12.rank()).map(|k| r12.u[(i, k)] * r12.s[k] * r12.v[(j - m, k)]).sum(),
                    (false, true) => 0.0,
                }
            }
        }
    }

    fn diagonal(&self, out: &mut Vec<f64>) {
        match self {
            CholNode::Leaf(r) => out.extend(r.diagonal().iter()),
            CholNode::Branch { r11, r22, .. } => {
                r11.diagonal(out);
                r22.diagonal(out);
            }
        }
    }
}

struct Factorizer<'a> {
    /// Truncation for blocks of `W` (downdates).
    tol_w: f64,
    /// Truncation for blocks of `R`.
    tol_r: f64,
    leaf: usize,
    /// Sees every downdated trailing block before it is factored.
    hook: Option<&'a mut dyn FnMut(&HodlrNode)>,
}

impl Factorizer<'_> {
    fn factor(&mut self, node: HodlrNode) -> Result<CholNode> {
        match node {
            HodlrNode::Leaf(d) => {
                let leaf = self.leaf;
                self.leaf += 1;
                dense_upper_cholesky(&d)
                    .map(CholNode::Leaf)
                    .map_err(|step| Error::LeafNotPositiveDefinite { leaf, step })
            }
            HodlrNode::Branch { split, d1, d2, off } => {
                let r11 = self.factor(*d1)?;
                // R12 = R11^{-T} U S V^T, kept in orthonormal form
                let mut a = off.weighted_left();
                r11.solve_t(&mut a);
                let r12 = LowRankBlock::from_factors(&a, &off.v, self.tol_r);
                let mut d2 = *d2;
                let s2: Vec<f64> = r12.s.iter().map(|s| s * s).collect();
                d2.downdate(&r12.v, &s2, self.tol_w);
                if let Some(h) = self.hook.as_deref_mut() {
                    h(&d2);
                }
                let r22 = self.factor(d2)?;
                Ok(CholNode::Branch {
                    split,
                    r11: Box::new(r11),
                    r22: Box::new(r22),
                    r12,
                })
            }
        }
    }
}

fn factor_with(w: &HodlrMatrix, hook: Option<&mut dyn FnMut(&HodlrNode)>) -> Result<HodlrCholesky> {
    let tol_w = w.tol_abs;
    let mut f = Factorizer {
        tol_w,
        // R has the scale of sqrt(W)
        tol_r: (w.tol * tol_w).sqrt(),
        leaf: 0,
        hook,
    };
    let root = f.factor(w.root.clone())?;
    Ok(HodlrCholesky { n: root.size(), root })
}

/// Recursive Cholesky: factor the leading block, form the low-rank `R12`,
/// downdate the trailing block by `R12^T R12` with recompression, recurse.
pub fn hodlr_cholesky(w: &HodlrMatrix) -> Result<HodlrCholesky> {
    factor_with(w, None)
}

impl HodlrCholesky {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `R x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.root.matvec(x, false)
    }

    /// `R^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.root.matvec(x, true)
    }

    /// Solves `R x = b`, or `R^T x = b` when `transposed`.
    pub fn solve(&self, b: &[f64], transposed: bool) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut m = DMatrix::from_column_slice(self.n, 1, b);
        if transposed {
            self.root.solve_t(&mut m);
        } else {
            self.root.solve(&mut m);
        }
        m.as_slice().to_vec()
    }

    /// Dense upper-triangular `R`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        self.root.fill_dense(&mut out, 0);
        out
    }

    /// `R[i, j]` without forming `R`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n);
        self.root.entry(i, j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        self.root.diagonal(&mut out);
        out
    }

    pub fn rank_report(&self) -> Vec<RankRecord> {
        let mut out = Vec::new();
        self.root.collect_ranks(0, 0, &mut out);
        out
    }
}
