/// Closed-form rank estimate for off-diagonal blocks of Gram matrices of
/// algebraically decaying moments, with its intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankBound {
    /// The formula's value; may be non-positive, in which case it carries
    /// no information.
    pub rank: f64,
    pub z: f64,
    /// Per-term ratio `2 alpha e z / (1 - z)`; the bound is informative only
    /// when this is below one.
    pub ratio: f64,
}

impl RankBound {
    pub fn is_informative(&self) -> bool {
        self.rank > 0.0 && self.ratio < 1.0
    }
}

/// `z(s) = (s - 1) / (s + 1 + 2 sqrt(s))`.
pub fn z_of(s: f64) -> f64 {
    (s - 1.0) / (s + 1.0 + 2.0 * s.sqrt())
}

/// `r = log(eps/2 ((s-1)(1-z)^2 / (4z))^alpha) / log(2 alpha e z / (1-z))`
/// with `s = floor(n/2)` and `z = z(s)`.
pub fn rank_bound(alpha: f64, eps: f64, n: usize) -> RankBound {
    let s = (n / 2) as f64;
    let z = z_of(s);
    let ratio = 2.0 * alpha * std::f64::consts::E * z / (1.0 - z);
    let num = (eps / 2.0).ln() + alpha * ((s - 1.0) * (1.0 - z) * (1.0 - z) / (4.0 * z)).ln();
    RankBound {
        rank: num / ratio.ln(),
        z,
        ratio,
    }
}
