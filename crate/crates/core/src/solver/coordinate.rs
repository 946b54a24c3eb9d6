/// Minimizer of `c x + h x^2 / 2 + gamma sqrt(x^2 + r) + xi |x|`.
///
/// For `h > 0` the minimizer is a soft-threshold when `r = 0` or `gamma = 0`,
/// and otherwise zero or the root of the strictly increasing derivative on the
/// side opposite to `c`. With `h = 0` a bounded quadratic model forces `c = 0`
/// and the result is zero; the bounded `h = 0`, `c != 0` case is solved in
/// closed form for completeness.
pub fn coordinate_min(c: f64, h: f64, gamma: f64, xi: f64, r: f64) -> f64 {
    debug_assert!(h >= 0.0 && gamma >= 0.0 && xi >= 0.0 && r >= 0.0);
    if h <= 0.0 {
        if c.abs() <= xi || r <= 0.0 || gamma <= 0.0 || c.abs() >= xi + gamma {
            return 0.0;
        }
        let s = c - c.signum() * xi;
        return -s.signum() * r.sqrt() * s.abs() / (gamma * gamma - s * s).sqrt();
    }
    if r == 0.0 || gamma == 0.0 {
        let thr = xi + gamma;
        return if c > thr {
            (thr - c) / h
        } else if c < -thr {
            (-thr - c) / h
        } else {
            0.0
        };
    }
    if c.abs() <= xi {
        return 0.0;
    }
    let s = (c - c.signum() * xi).abs();
    -c.signum() * positive_root(h, gamma, r, s)
}

// Root y > 0 of h y + gamma y / sqrt(y^2 + r) = s, s > 0. The left side is
// increasing and concave, so Newton from the linearization at zero climbs
// monotonically; bisection guards against rounding.
fn positive_root(h: f64, gamma: f64, r: f64, s: f64) -> f64 {
    let psi = |y: f64| h * y + gamma * y / (y * y + r).sqrt() - s;
    let mut lo = 0.0;
    let mut hi = s / h;
    let mut y = s / (h + gamma / r.sqrt());
    let tol = 1e-12 * s.max(1.0);
    for _ in 0..200 {
        let f = psi(y);
        if f.abs() <= tol {
            return y;
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let denom = y * y + r;
        let slope = h + gamma * r / (denom * denom.sqrt());
        let next = y - f / slope;
        y = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    y
}
