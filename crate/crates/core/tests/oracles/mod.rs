//! Independent reference computations for tests. Nothing here calls the
//! solver; losses are only used for their value and gradient.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use sgl::blocks::{BlockStructure, BlockVector, PenaltySpec};
use sgl::design::{Dataset, DesignMatrix};
use sgl::loss::LossModel;

/// Minimizer of `|z_i + v_i t|` over `t` on a grid of `[-1, 1]`, per coordinate.
pub fn kappa_grid(v: &[f64], z: &[f64], step: f64) -> Vec<f64> {
    let n = (2.0 / step).round() as usize;
    v.iter()
        .zip(z)
        .map(|(&vi, &zi)| {
            (0..=n)
                .map(|k| zi + vi * (-1.0 + k as f64 * step))
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap()
        })
        .collect()
}

/// Minimum-norm point of `a B + z + diag(v) T`, by searching `t` in the box
/// on a coarse grid and refining around the best point down to `step`.
pub fn min_norm_grid(a: f64, v: &[f64], z: &[f64], step: f64) -> Vec<f64> {
    let n = z.len();
    let norm_at = |t: &[f64]| -> f64 { (0..n).map(|i| (z[i] + v[i] * t[i]).powi(2)).sum::<f64>().sqrt() };
    let mut center = vec![0.0; n];
    let mut half_width: f64 = 1.0;
    let mut h: f64 = 0.1;
    loop {
        let per_axis = (2.0 * half_width / h).round() as usize;
        let mut best = center.clone();
        let mut best_norm = f64::INFINITY;
        let total = (per_axis + 1).pow(n as u32);
        let mut t = vec![0.0; n];
        for idx in 0..total {
            let mut rest = idx;
            for (i, ti) in t.iter_mut().enumerate() {
                let k = rest % (per_axis + 1);
                rest /= per_axis + 1;
                *ti = (center[i] - half_width + k as f64 * h).clamp(-1.0, 1.0);
            }
            let value = norm_at(&t);
            if value < best_norm {
                best_norm = value;
                best.copy_from_slice(&t);
            }
        }
        center = best;
        if h <= step * 1.0000001 {
            break;
        }
        half_width = h;
        h = (h / 10.0).max(step);
    }
    let w: Vec<f64> = (0..n).map(|i| z[i] + v[i] * center[i]).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= a {
        vec![0.0; n]
    } else {
        w.iter().map(|x| x * (1.0 - a / norm)).collect()
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// `prox` of `t (group ||x|| + sum l1_i |x_i|)`: soft-threshold, then shrink the norm.
pub fn sgl_prox(u: &[f64], group: f64, l1: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = u
        .iter()
        .zip(l1)
        .map(|(&x, &w)| x.signum() * (x.abs() - w).max(0.0))
        .collect();
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= group {
        vec![0.0; u.len()]
    } else {
        s.iter().map(|x| x * (1.0 - group / norm)).collect()
    }
}

/// Penalty value computed directly from its definition.
pub fn penalty(spec: &PenaltySpec, x: &[f64]) -> f64 {
    let s = spec.structure();
    let alpha = spec.alpha();
    (0..s.num_blocks())
        .map(|j| {
            let r = s.range(j);
            let b = &x[r.clone()];
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let l1: f64 = b.iter().zip(&spec.xi()[r]).map(|(v, w)| w * v.abs()).sum();
            (1.0 - alpha) * spec.gamma()[j] * norm + alpha * l1
        })
        .sum()
}

/// Accelerated proximal gradient (FISTA with backtracking and restart) on
/// `f + lambda Phi`. Returns the best point seen and its objective.
pub fn proximal_gradient<L: LossModel>(
    loss: &L,
    spec: &PenaltySpec,
    lambda: f64,
    start: &[f64],
    iterations: usize,
) -> (Vec<f64>, f64) {
    let s = spec.structure().clone();
    let alpha = spec.alpha();
    let value = |x: &[f64]| loss.value(&BlockVector::from_values(&s, x.to_vec()).unwrap());
    let grad = |x: &[f64]| {
        loss.gradient(&BlockVector::from_values(&s, x.to_vec()).unwrap())
            .into_values()
    };
    let objective = |x: &[f64]| value(x) + lambda * penalty(spec, x);
    let prox = |u: &[f64], t: f64| -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for j in 0..s.num_blocks() {
            let r = s.range(j);
            let group = t * lambda * (1.0 - alpha) * spec.gamma()[j];
            let l1: Vec<f64> = spec.xi()[r.clone()].iter().map(|w| t * lambda * alpha * w).collect();
            out[r.clone()].copy_from_slice(&sgl_prox(&u[r], group, &l1));
        }
        out
    };

    let mut x = start.to_vec();
    let mut y = x.clone();
    let mut momentum: f64 = 1.0;
    let mut step = 1.0;
    let mut best = (x.clone(), objective(&x));
    for _ in 0..iterations {
        let fy = value(&y);
        let gy = grad(&y);
        let next = loop {
            let u: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
            let cand = prox(&u, step);
            let d: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy
                + gy.iter().zip(&d).map(|(g, v)| g * v).sum::<f64>()
                + d.iter().map(|v| v * v).sum::<f64>() / (2.0 * step);
            if value(&cand) <= model + 1e-15 * model.abs().max(1.0) || step < 1e-14 {
                break cand;
            }
            step *= 0.5;
        };
        let f_next = objective(&next);
        if f_next < best.1 {
            best = (next.clone(), f_next);
        }
        if f_next > objective(&x) {
            // restart momentum on non-monotone steps
            momentum = 1.0;
            y = x.clone();
            continue;
        }
        let m_next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (momentum - 1.0) / m_next * (a - b))
            .collect();
        x = next;
        momentum = m_next;
        step *= 1.1;
    }
    best
}

/// Cyclic coordinate descent for `x'Ax/2 + b'x + sum w_i |x_i|` run to convergence.
pub fn lasso_coordinate_descent(a: &DMatrix<f64>, b: &[f64], w: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for _ in 0..1_000_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let rest: f64 = (0..n).filter(|&k| k != i).map(|k| a[(i, k)] * x[k]).sum::<f64>() + b[i];
            let new = -rest.signum() * (rest.abs() - w[i]).max(0.0) / a[(i, i)];
            change = change.max((new - x[i]).abs());
            x[i] = new;
        }
        if change < 1e-14 {
            break;
        }
    }
    x
}

/// Random symmetric positive definite matrix with eigenvalues at least `floor`.
pub fn random_spd<R: Rng>(n: usize, floor: f64, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut a = &m * m.transpose() + DMatrix::identity(n, n) * floor;
    a.fill_upper_triangle_with_lower_triangle();
    a
}

/// Random block sizes summing to at most `max_dim`, with at most `max_blocks` blocks.
pub fn random_structure<R: Rng>(max_blocks: usize, max_dim: usize, rng: &mut R) -> BlockStructure {
    let m = rng.random_range(1..=max_blocks);
    let per = (max_dim / m).max(1);
    let dims: Vec<usize> = (0..m).map(|_| rng.random_range(1..=per)).collect();
    BlockStructure::new(dims).unwrap()
}

/// Random weights with `gamma_J = sqrt(n_J)` times a positive factor and positive `xi`.
pub fn random_spec<R: Rng>(s: &BlockStructure, alpha: f64, rng: &mut R) -> PenaltySpec {
    let gamma = s
        .dims()
        .iter()
        .map(|&d| (d as f64).sqrt() * rng.random_range(0.5f64..1.5))
        .collect();
    let xi = (0..s.dim()).map(|_| rng.random_range(0.5..1.5)).collect();
    PenaltySpec::new(s, alpha, gamma, xi).unwrap()
}

/// Small random multinomial data set with every class present.
pub fn random_dataset<R: Rng>(n: usize, p: usize, k: usize, rng: &mut R) -> Dataset {
    let y: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let shift: Vec<f64> = (0..k * p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<f64> = (0..n * p)
        .map(|idx| {
            let (i, j) = (idx / p, idx % p);
            rng.random_range(-1.0..1.0) + shift[y[i] * p + j]
        })
        .collect();
    Dataset::new(DesignMatrix::from_rows(n, p, &rows).unwrap(), y, k).unwrap()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12);
    diff / scale
}
