//! Composite Gauss–Legendre quadrature with geometric grading toward
//! singular points. Used to seed recurrences with initial moments and as an
//! independent oracle in tests; never on the fast path.

use std::sync::OnceLock;

use crate::classical::Family;

const NODES: usize = 64;
const GRADING_RATIO: f64 = 0.2;
const GRADING_LEVELS: usize = 45;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    // (P_n(z), P_n'(z))
    let eval = |z: f64| -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        (p1, nf * (z * p1 - p0) / (z * z - 1.0))
    };
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = eval(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() <= 1e-17 {
                break;
            }
        }
        let (_, dp) = eval(z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// A quadrature node together with its exact offsets from the two cut points
/// of the segment that contains it. Weight functions with singularities at
/// cut points should use [`Point::dist`] rather than `x - p`, which loses all
/// accuracy a few ulps away from `p`.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub x: f64,
    left_cut: f64,
    right_cut: f64,
    left_dist: f64,
    right_dist: f64,
}

impl Point {
    /// A point with no nearby cut information.
    pub fn plain(x: f64) -> Self {
        Point {
            x,
            left_cut: f64::NAN,
            right_cut: f64::NAN,
            left_dist: f64::NAN,
            right_dist: f64::NAN,
        }
    }

    /// Accurate `|x - p|`.
    pub fn dist(&self, p: f64) -> f64 {
        if p == self.left_cut {
            self.left_dist
        } else if p == self.right_cut {
            self.right_dist
        } else {
            (self.x - p).abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg_lo: f64,
    seg_hi: f64,
    from_left: bool,
    off_lo: f64,
    off_hi: f64,
}

/// Panels covering `[a, b]`, split at `points` and graded toward every cut.
fn panels(a: f64, b: f64, points: &[f64], per_segment: usize, grade_b: bool) -> Vec<Panel> {
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = points.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut out = Vec::new();
    let nseg = cuts.len() - 1;
    for s in 0..nseg {
        let (l, r) = (cuts[s], cuts[s + 1]);
        let len = r - l;
        let h = len / per_segment as f64;
        let grade_right = s + 1 < nseg || grade_b;
        let mut push = |from_left: bool, off_lo: f64, off_hi: f64| {
            out.push(Panel {
                seg_lo: l,
                seg_hi: r,
                from_left,
                off_lo,
                off_hi,
            })
        };
        for k in 0..per_segment {
            let lo = h * k as f64;
            let hi = if k + 1 == per_segment { len } else { h * (k + 1) as f64 };
            let left_graded = k == 0;
            let right_graded = k + 1 == per_segment && grade_right;
            match (left_graded, right_graded) {
                (true, true) => {
                    graded(0.5 * hi, |a, b| push(true, a, b));
                    graded(0.5 * hi, |a, b| push(false, a, b));
                }
                (true, false) => graded(hi, |a, b| push(true, a, b)),
                (false, true) => graded(len - lo, |a, b| push(false, a, b)),
                (false, false) => push(true, lo, hi),
            }
        }
    }
    out
}

/// Geometric subdivision of offsets `[0, h]` toward zero.
fn graded(h: f64, mut push: impl FnMut(f64, f64)) {
    let mut t = 1.0;
    for _ in 0..GRADING_LEVELS {
        let tn = t * GRADING_RATIO;
        push(h * tn, h * t);
        t = tn;
    }
    push(0.0, h * t);
}

fn apply_rule(panels: &[Panel], mut visit: impl FnMut(&Point, f64)) {
    let (x, w) = rule();
    for p in panels {
        let c = 0.5 * (p.off_lo + p.off_hi);
        let r = 0.5 * (p.off_hi - p.off_lo);
        if r <= 0.0 {
            continue;
        }
        let len = p.seg_hi - p.seg_lo;
        for (xi, wi) in x.iter().zip(w) {
            let off = c + r * xi;
            let pt = if p.from_left {
                Point {
                    x: p.seg_lo + off,
                    left_cut: p.seg_lo,
                    right_cut: p.seg_hi,
                    left_dist: off,
                    right_dist: len - off,
                }
            } else {
                Point {
                    x: p.seg_hi - off,
                    left_cut: p.seg_lo,
                    right_cut: p.seg_hi,
                    left_dist: len - off,
                    right_dist: off,
                }
            };
            visit(&pt, r * wi);
        }
    }
}

/// Truncation point for semi-infinite integrals of `m` Laguerre moments.
fn laguerre_cutoff(m: usize) -> f64 {
    (60.0 + 4.0 * m as f64).min(700.0)
}

const MAX_DOUBLINGS: usize = 10;

/// Adaptive quadrature of a scalar function on `[a, b]` (with `b` possibly
/// `+inf`, truncated at 700), graded toward `a`, `b` and each entry of `points`.
pub fn integrate(f: impl Fn(&Point) -> f64, a: f64, b: f64, points: &[f64]) -> f64 {
    let (b, grade_b) = if b.is_infinite() { (700.0, false) } else { (b, true) };
    let mut per = 4;
    let mut prev = f64::NAN;
    for _ in 0..MAX_DOUBLINGS {
        let mut s = 0.0;
        let mut abs = 0.0;
        apply_rule(&panels(a, b, points, per, grade_b), |x, w| {
            let v = f(x) * w;
            s += v;
            abs += v.abs();
        });
        if (s - prev).abs() <= 1e-14 * abs {
            return s;
        }
        prev = s;
        per *= 2;
    }
    prev
}

/// `\int p_k(x) w(x) dx` for `k < m` over the family's domain, with panels
/// split and graded at `points`.
///
/// Panel counts double until successive estimates agree to `1e-13` relative
/// per entry, with an absolute floor of `2e-16 (k+1) \int |p_k w|` reflecting the
/// rounding error of the three-term recurrence.
pub fn moments(family: &Family, w: impl Fn(&Point) -> f64, points: &[f64], m: usize) -> Vec<f64> {
    let (a, b) = family.domain();
    moments_on_interval(family, w, a, b, points, m)
}

/// As [`moments`] but restricted to `[a, b]` inside the domain.
pub fn moments_on_interval(
    family: &Family,
    w: impl Fn(&Point) -> f64,
    a: f64,
    b: f64,
    points: &[f64],
    m: usize,
) -> Vec<f64> {
    let (b, grade_b) = if b.is_infinite() { (laguerre_cutoff(m), false) } else { (b, true) };
    moments_on(family, &w, a, b, grade_b, points, m)
}

fn moments_on(
    family: &Family,
    w: &dyn Fn(&Point) -> f64,
    a: f64,
    b: f64,
    grade_b: bool,
    points: &[f64],
    m: usize,
) -> Vec<f64> {
    let basis = family.basis();
    let coeffs: Vec<(f64, f64, f64)> = (0..m)
        .map(|k| {
            (
                basis.diag(k),
                if k >= 1 { basis.sup(k) } else { 0.0 },
                1.0 / basis.sub(k),
            )
        })
        .collect();
    let estimate = |per: usize| -> (Vec<f64>, Vec<f64>) {
        let mut mu = vec![0.0; m];
        let mut comp = vec![0.0; m];
        let mut abs = vec![0.0; m];
        apply_rule(&panels(a, b, points, per, grade_b), |pt, wt| {
            let f = w(pt) * wt;
            if f == 0.0 || !f.is_finite() {
                return;
            }
            let x = pt.x;
            // recurrence started from f so that p_k(x) w(x) never overflows
            let (mut p0, mut p1) = (0.0, f);
            for k in 0..m {
                // Neumaier summation
                let t = mu[k] + p1;
                comp[k] += if mu[k].abs() >= p1.abs() {
                    (mu[k] - t) + p1
                } else {
                    (p1 - t) + mu[k]
                };
                mu[k] = t;
                abs[k] += p1.abs();
                let (d, s, inv) = coeffs[k];
                let p2 = ((x - d) * p1 - s * p0) * inv;
                p0 = p1;
                p1 = p2;
            }
        });
        for (v, c) in mu.iter_mut().zip(&comp) {
            *v += c;
        }
        (mu, abs)
    };
    let mut per = (m / 24).max(4);
    let (mut prev, _) = estimate(per);
    for _ in 0..MAX_DOUBLINGS {
        per *= 2;
        let (cur, abs) = estimate(per);
        let done = cur
            .iter()
            .zip(&prev)
            .zip(&abs)
            .enumerate()
            .all(|(k, ((c, p), s))| (c - p).abs() <= 1e-13 * c.abs() + 2e-16 * (k as f64 + 1.0) * s);
        prev = cur;
        if done {
            break;
        }

    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(64);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        for deg in [2, 10, 126] {
            let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg {deg}");
        }
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_endpoint_singularities() {
        let v = integrate(|p| 1.0 / (p.dist(-1.0) * p.dist(1.0)).sqrt(), -1.0, 1.0, &[]);
        assert!((v - PI).abs() < 1e-13, "{v}");
        let v = integrate(|p| (2.0 / p.dist(1.0)).ln(), -1.0, 1.0, &[]);
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|p| p.dist(0.5).powf(-0.5), -1.0, 1.0, &[0.5]);
        let want = 2.0 * 0.5f64.sqrt() + 2.0 * 1.5f64.sqrt();
        assert!((v - want).abs() < 1e-13);
        let v = integrate(|p| (-p.x).exp(), 0.0, f64::INFINITY, &[]);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_weight_moments_are_orthogonality() {
        let f = Family::chebyshev_t();
        let mu = moments(&f, |p| 1.0 / (p.dist(-1.0) * p.dist(1.0)).sqrt(), &[], 40);
        assert!((mu[0] - PI).abs() < 1e-13);
        assert!(mu[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn clenshaw_curtis_moments_by_quadrature() {
        let f = Family::chebyshev_t();
        let mu = moments(&f, |_| 1.0, &[], 300);
        for (n, v) in mu.iter().enumerate() {
            let want = if n % 2 == 0 { 2.0 / (1.0 - (n * n) as f64) } else { 0.0 };
            let err = if want == 0.0 { v.abs() / 2.0 } else { (v - want).abs() / want.abs() };
            assert!(err < 1e-10, "n={n}: {v} vs {want}");
        }
    }
}
