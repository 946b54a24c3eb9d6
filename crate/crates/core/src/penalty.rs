//! Subgradient calculus of the sparse group lasso penalty.
//!
//! The subdifferential of a block penalty at zero is the Minkowski sum of a
//! scaled Euclidean ball and a scaled box. Deciding whether zero minimizes a
//! block subproblem reduces to comparing the squared norm of an entrywise
//! soft-threshold (`k_value`) against the squared ball radius.

use crate::blocks::{BlockVector, PenaltySpec};
use crate::error::{Result, SglError};

/// Entrywise soft-threshold of `z` at levels `v`.
///
/// This is the minimum-norm point of the box `z + diag(v) [-1, 1]^n`.
pub fn kappa(v: &[f64], z: &[f64]) -> Vec<f64> {
    debug_assert_eq!(v.len(), z.len());
    v.iter()
        .zip(z)
        .map(|(&vi, &zi)| if zi.abs() <= vi { 0.0 } else { zi - zi.signum() * vi })
        .collect()
}

/// Squared norm of [`kappa`].
pub fn k_value(v: &[f64], z: &[f64]) -> f64 {
    v.iter()
        .zip(z)
        .map(|(&vi, &zi)| {
            let excess = zi.abs() - vi;
            if excess > 0.0 {
                excess * excess
            } else {
                0.0
            }
        })
        .sum()
}

/// Minimum-norm point of `a B^n + z + diag(v) T^n` for a radius `a > 0`.
///
/// Zero when `k_value(v, z) <= a^2`, otherwise `kappa` shrunk towards the
/// origin by `a`.
pub fn min_norm_point(a: f64, v: &[f64], z: &[f64]) -> Vec<f64> {
    let k = k_value(v, z);
    if k <= a * a {
        return vec![0.0; z.len()];
    }
    let factor = 1.0 - a / k.sqrt();
    kappa(v, z).into_iter().map(|x| factor * x).collect()
}

/// Whether zero minimizes block `block` of the penalized problem when the
/// smooth part has gradient `g` at block-zero. Unpenalized blocks are never zero.
pub fn block_is_zero(spec: &PenaltySpec, lambda: f64, block: usize, g: &[f64]) -> bool {
    if spec.is_unpenalized(block) {
        return false;
    }
    let v = spec.l1_thresholds(lambda, block);
    let c = spec.group_threshold(lambda, block);
    k_value(&v, g) <= c * c
}

/// Smallest `lambda > 0` at which every penalized block is zero, given the
/// loss gradient at the point where the penalized blocks are zero and the
/// unpenalized blocks are optimal.
pub fn lambda_max(spec: &PenaltySpec, grad0: &BlockVector) -> Result<f64> {
    let structure = spec.structure();
    if grad0.len() != structure.dim() {
        return Err(SglError::DimensionMismatch {
            what: "gradient",
            expected: structure.dim(),
            found: grad0.len(),
        });
    }
    let mut best: Option<f64> = None;
    for j in spec.penalized_blocks() {
        let lam = block_lambda_max(spec, j, grad0.block(j))?;
        best = Some(best.map_or(lam, |b: f64| b.max(lam)));
    }
    best.ok_or(SglError::NoPenalizedBlocks)
}

/// Per-block infimum of `lambda` with `sqrt(K(lambda alpha xi, g)) <= lambda (1 - alpha) gamma`.
pub fn block_lambda_max(spec: &PenaltySpec, block: usize, g: &[f64]) -> Result<f64> {
    let v: Vec<f64> = spec.l1_thresholds(1.0, block);
    let c = spec.group_threshold(1.0, block);
    if g.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    if c == 0.0 {
        // pure L1 block: zero once every |g_i| <= lambda v_i
        let mut lam: f64 = 0.0;
        for (&vi, &gi) in v.iter().zip(g) {
            if gi == 0.0 {
                continue;
            }
            if vi == 0.0 {
                return Err(SglError::UnboundedLambda(block));
            }
            lam = lam.max(gi.abs() / vi);
        }
        return Ok(lam);
    }
    if v.iter().all(|&vi| vi == 0.0) {
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        return Ok(norm / c);
    }
    let f = PiecewiseQuadratic::scaled_threshold(&v, g, -c * c);
    Ok(f.inf_at_or_below(0.0))
}

/// Largest shift `x >= 0` with `sqrt(K(lambda alpha xi, |q| + x)) <= lambda (1 - alpha) gamma`,
/// or zero when the inequality fails at `x = 0`.
///
/// A block currently at zero whose Hessian-product bound is below this value
/// stays at zero in the block update.
pub fn t_threshold(spec: &PenaltySpec, lambda: f64, block: usize, q: &[f64]) -> f64 {
    if spec.is_unpenalized(block) {
        return 0.0;
    }
    let v = spec.l1_thresholds(lambda, block);
    let c = spec.group_threshold(lambda, block);
    if k_value(&v, q) > c * c {
        return 0.0;
    }
    if c == 0.0 {
        return v
            .iter()
            .zip(q)
            .map(|(vi, qi)| vi - qi.abs())
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
    }
    let abs_q: Vec<f64> = q.iter().map(|x| x.abs()).collect();
    PiecewiseQuadratic::shifted(&v, &abs_q).sup_at_or_below(c * c)
}

/// Continuous piecewise quadratic function on `[0, inf)`.
///
/// Piece `k` is valid on `[breakpoints[k-1], breakpoints[k]]` with an implicit
/// leading breakpoint at zero; the last piece extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    breakpoints: Vec<f64>,
    // (a, b, c) of a x^2 + b x + c
    pieces: Vec<[f64; 3]>,
}

impl PiecewiseQuadratic {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<[f64; 3]>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(SglError::InvalidParameter("piece count must exceed breakpoint count by one".into()));
        }
        if breakpoints.iter().any(|&b| !(b > 0.0 && b.is_finite()))
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(SglError::InvalidParameter("breakpoints must be positive and increasing".into()));
        }
        Ok(Self { breakpoints, pieces })
    }

    /// `lambda -> K(lambda v, z) + extra lambda^2`, nonincreasing when `extra <= 0`.
    pub fn scaled_threshold(v: &[f64], z: &[f64], extra: f64) -> Self {
        // term i is (|z_i| - lambda v_i)^2 while lambda < |z_i| / v_i
        let mut a = extra;
        let mut b = 0.0;
        let mut c = 0.0;
        let mut events = Vec::new();
        for (&vi, &zi) in v.iter().zip(z) {
            let s = zi.abs();
            if s == 0.0 {
                continue;
            }
            a += vi * vi;
            b -= 2.0 * s * vi;
            c += s * s;
            if vi > 0.0 {
                events.push((s / vi, [vi * vi, -2.0 * s * vi, s * s]));
            }
        }
        Self::from_events(events, [a, b, c], -1.0)
    }

    /// `x -> K(v, z + x)` for `z >= 0`, nondecreasing.
    pub fn shifted(v: &[f64], z: &[f64]) -> Self {
        // term i is (z_i - v_i + x)^2 once x > v_i - z_i
        let mut init = [0.0; 3];
        let mut events = Vec::new();
        for (&vi, &zi) in v.iter().zip(z) {
            let s = zi - vi;
            let term = [1.0, 2.0 * s, s * s];
            if s >= 0.0 {
                for k in 0..3 {
                    init[k] += term[k];
                }
            } else {
                events.push((-s, term));
            }
        }
        Self::from_events(events, init, 1.0)
    }

    // Walks sorted breakpoints, adding (sign = 1) or removing (sign = -1) terms.
    fn from_events(mut events: Vec<(f64, [f64; 3])>, init: [f64; 3], sign: f64) -> Self {
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut breakpoints = Vec::new();
        let mut pieces = vec![init];
        let mut current = init;
        for (at, term) in events {
            for k in 0..3 {
                current[k] += sign * term[k];
            }
            if breakpoints.last() == Some(&at) {
                *pieces.last_mut().unwrap() = current;
            } else {
                breakpoints.push(at);
                pieces.push(current);
            }
        }
        Self { breakpoints, pieces }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[[f64; 3]] {
        &self.pieces
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.pieces[self.piece_index(x)];
        (a * x + b) * x + c
    }

    fn interval(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 { 0.0 } else { self.breakpoints[k - 1] };
        let hi = self.breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// Smallest `x >= 0` with `f(x) <= level` for a nonincreasing `f`.
    pub fn inf_at_or_below(&self, level: f64) -> f64 {
        if self.eval(0.0) <= level {
            return 0.0;
        }
        for k in 0..self.pieces.len() {
            let (lo, hi) = self.interval(k);
            if hi.is_finite() && self.eval(hi) > level {
                continue;
            }
            return self.root_in(k, lo, hi, level);
        }
        f64::INFINITY
    }

    /// Largest `x >= 0` with `f(x) <= level` for a nondecreasing `f`.
    pub fn sup_at_or_below(&self, level: f64) -> f64 {
        if self.eval(0.0) > level {
            return 0.0;
        }
        for k in 0..self.pieces.len() {
            let (lo, hi) = self.interval(k);
            if hi.is_finite() && self.eval(hi) <= level {
                continue;
            }
            let [a, b, _] = self.pieces[k];
            if !hi.is_finite() && a == 0.0 && b == 0.0 {
                return f64::INFINITY;
            }
            return self.root_in(k, lo, hi, level);
        }
        f64::INFINITY
    }

    // Crossing of piece k with `level` inside [lo, hi]; the sign of f - level differs at the ends.
    fn root_in(&self, k: usize, lo: f64, hi: f64, level: f64) -> f64 {
        let [a, b, c0] = self.pieces[k];
        let c = c0 - level;
        let scale = a.abs().max(b.abs()).max(c.abs()).max(f64::MIN_POSITIVE);
        let hi_bound = if hi.is_finite() { hi } else { f64::INFINITY };
        let slack = 1e-12 * lo.abs().max(1.0);
        let in_range = |x: f64| x.is_finite() && x >= lo - slack && x <= hi_bound + slack;

        let mut candidates = Vec::with_capacity(2);
        if a.abs() > 1e-14 * scale {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -0.5 * (b + b.signum() * sq);
                if q != 0.0 {
                    candidates.push(q / a);
                    candidates.push(c / q);
                } else {
                    candidates.push(-b / (2.0 * a));
                }
            }
        } else if b != 0.0 {
            candidates.push(-c / b);
        }
        let f = |x: f64| (a * x + b) * x + c;
        let f_lo = f(lo);
        if let Some(x) = candidates.into_iter().filter(|&x| in_range(x)).min_by(|x, y| {
            f(*x).abs().total_cmp(&f(*y).abs())
        }) {
            return x.clamp(lo, hi_bound);
        }
        self.bisect(f, f_lo, lo, hi)
    }

    fn bisect(&self, f: impl Fn(f64) -> f64, f_lo: f64, lo: f64, hi: f64) -> f64 {
        let mut lo = lo;
        let mut hi = hi;
        if !hi.is_finite() {
            hi = lo.max(1.0);
            while f(hi).signum() == f_lo.signum() && hi < 1e300 {
                hi *= 2.0;
            }
        }
        while hi - lo > 1e-12 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockStructure;

    fn spec(dims: Vec<usize>, alpha: f64, gamma: Vec<f64>, xi: Vec<f64>) -> PenaltySpec {
        PenaltySpec::new(&BlockStructure::new(dims).unwrap(), alpha, gamma, xi).unwrap()
    }

    fn bv(dims: Vec<usize>, vals: Vec<f64>) -> BlockVector {
        BlockVector::from_values(&BlockStructure::new(dims).unwrap(), vals).unwrap()
    }

    #[test]
    fn phi_examples() {
        let s = spec(vec![3], 1.0, vec![1.0], vec![1.0; 3]);
        assert_eq!(s.phi(&bv(vec![3], vec![1.0, -2.0, 3.0])).unwrap(), 6.0);
        let s = spec(vec![2, 1], 0.0, vec![1.0, 1.0], vec![1.0; 3]);
        assert_eq!(s.phi(&bv(vec![2, 1], vec![3.0, 4.0, 2.0])).unwrap(), 7.0);
        let s = spec(vec![2], 0.5, vec![2.0], vec![1.0; 2]);
        assert_eq!(s.phi(&bv(vec![2], vec![3.0, 4.0])).unwrap(), 8.5);
        assert!(s.phi_values(&[1.0]).is_err());
    }

    #[test]
    fn kappa_and_k_examples() {
        assert_eq!(kappa(&[1.0, 1.0], &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(kappa(&[1.0, 2.0], &[3.0, -1.0]), vec![2.0, 0.0]);
        assert_eq!(k_value(&[1.0, 2.0], &[3.0, -1.0]), 4.0);
        assert_eq!(k_value(&[2.0, 3.0], &[-2.0, 1.5]), 0.0);
    }

    #[test]
    fn min_norm_examples() {
        assert_eq!(min_norm_point(2.5, &[0.0, 0.0], &[3.0, 4.0]), vec![1.5, 2.0]);
        assert_eq!(min_norm_point(1.0, &[1.0, 1.0], &[0.5, -0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn block_zero_examples() {
        let s = spec(vec![2], 0.0, vec![1.0], vec![1.0; 2]);
        assert!(block_is_zero(&s, 6.0, 0, &[3.0, 4.0]));
        assert!(!block_is_zero(&s, 4.9, 0, &[3.0, 4.0]));
        let s = spec(vec![1], 1.0, vec![1.0], vec![1.0]);
        assert!(block_is_zero(&s, 1.0, 0, &[0.5]));
        let s = spec(vec![1], 0.5, vec![0.0], vec![0.0]);
        assert!(!block_is_zero(&s, 100.0, 0, &[0.0]));
    }

    #[test]
    fn lambda_max_closed_forms() {
        let s = spec(vec![3], 1.0, vec![1.0], vec![1.0; 3]);
        assert_eq!(lambda_max(&s, &bv(vec![3], vec![-3.0, 1.0, 2.0])).unwrap(), 3.0);
        let s = spec(vec![2, 2], 0.0, vec![1.0, 1.0], vec![1.0; 4]);
        assert_eq!(lambda_max(&s, &bv(vec![2, 2], vec![3.0, 4.0, 1.0, 1.0])).unwrap(), 5.0);
        let s = spec(vec![2], 0.5, vec![0.0], vec![0.0; 2]);
        assert_eq!(lambda_max(&s, &bv(vec![2], vec![3.0, 4.0])), Err(SglError::NoPenalizedBlocks));
        // pure L1 block with an unweighted coordinate can never be zero
        let s = spec(vec![2], 1.0, vec![0.0], vec![1.0, 0.0]);
        assert_eq!(lambda_max(&s, &bv(vec![2], vec![3.0, 4.0])), Err(SglError::UnboundedLambda(0)));
        // pure L1 block through a zero group weight
        let s = spec(vec![2], 0.5, vec![0.0], vec![1.0, 2.0]);
        assert_eq!(lambda_max(&s, &bv(vec![2], vec![3.0, 4.0])).unwrap(), 6.0);
    }

    fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambda_max_mixed_matches_bisection() {
        let s = spec(vec![2], 0.5, vec![1.0], vec![1.0; 2]);
        let lam = lambda_max(&s, &bv(vec![2], vec![3.0, 4.0])).unwrap();
        let oracle = bisect_decreasing(|l| k_value(&[0.5 * l, 0.5 * l], &[3.0, 4.0]) - 0.25 * l * l, 0.0, 100.0);
        assert!((lam - oracle).abs() < 1e-10, "{lam} vs {oracle}");
    }

    #[test]
    fn t_threshold_examples() {
        let s = spec(vec![2], 0.0, vec![1.0], vec![1.0; 2]);
        let t = t_threshold(&s, 10.0, 0, &[3.0, 4.0]);
        let expect = (-14.0 + 796f64.sqrt()) / 4.0;
        assert!((t - expect).abs() < 1e-12, "{t} vs {expect}");
        assert_eq!(t_threshold(&s, 4.0, 0, &[3.0, 4.0]), 0.0);
        let s = spec(vec![3], 1.0, vec![1.0], vec![1.0; 3]);
        assert_eq!(t_threshold(&s, 2.0, 0, &[0.5, -1.5, 1.0]), 0.5);
    }

    #[test]
    fn piecewise_is_continuous() {
        let v = [0.3, 1.2, 0.0, 2.0];
        let z = [1.0, -2.0, 0.5, 0.7];
        let f = PiecewiseQuadratic::scaled_threshold(&v, &z, -0.4);
        for (k, &bp) in f.breakpoints().iter().enumerate() {
            let left = f.pieces()[k];
            let right = f.pieces()[k + 1];
            let l = (left[0] * bp + left[1]) * bp + left[2];
            let r = (right[0] * bp + right[1]) * bp + right[2];
            assert!((l - r).abs() <= 1e-9 * l.abs().max(1.0));
        }
        for x in [0.0, 0.1, 0.5, 0.9, 1.5, 3.0] {
            let direct = k_value(&v.map(|vi| x * vi), &z) - 0.4 * x * x;
            assert!((f.eval(x) - direct).abs() < 1e-12);
        }
        let g = PiecewiseQuadratic::shifted(&v, &z.map(f64::abs));
        for x in [0.0, 0.1, 0.5, 0.9, 1.5, 3.0] {
            let direct = k_value(&v, &z.map(|zi| zi.abs() + x));
            assert!((g.eval(x) - direct).abs() < 1e-12);
        }
        assert!(PiecewiseQuadratic::new(vec![1.0, 0.5], vec![[0.0; 3]; 3]).is_err());
    }
}
