//! Independent reference routes used for equivalence checking: dense
//! Hessian assembly, finite differences, and straight-line SGD-family
//! loops written against plain coordinate arithmetic. Nothing here calls
//! into the kernel dual solves or the optimizer steps it is used to
//! check; the CLI selftest and the acceptance suite both drive these.

use crate::blocked::BlockedVector;
use crate::error::Result;
use crate::linalg::lu_solve;
use crate::oracle::{FiniteSumObjective, Sampler};
use crate::schedule::Schedule;

/// Central finite differences of a scalar function.
pub fn finite_difference_gradient(
    f: &dyn Fn(&BlockedVector) -> f64,
    x: &BlockedVector,
    h: f64,
) -> BlockedVector {
    let mut g = BlockedVector::zeros_like(x);
    let dims = x.block_dims();
    let flat = x.to_flat();
    let mut out = Vec::with_capacity(flat.len());
    for j in 0..flat.len() {
        let mut fp = flat.clone();
        fp[j] += h;
        let mut fm = flat.clone();
        fm[j] -= h;
        let vp = f(&BlockedVector::from_flat(&dims, &fp).unwrap());
        let vm = f(&BlockedVector::from_flat(&dims, &fm).unwrap());
        out.push((vp - vm) / (2.0 * h));
    }
    for (gj, oj) in g.iter_mut().zip(out) {
        *gj = oj;
    }
    g
}

/// Explicitly assembled dense Hessian of the blockwise polynomial profile
/// p(t) = t^2/2 + (sigma/r) t^r at one block:
/// (1 + sigma t^(r-2)) I + sigma (r-2) t^(r-4) x x^T.
pub fn assemble_poly_block_hessian(sigma: f64, degree: u32, x_block: &[f64]) -> Vec<Vec<f64>> {
    let n = x_block.len();
    let t = x_block.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, b) = if t == 0.0 {
        (1.0, 0.0)
    } else {
        (
            1.0 + sigma * t.powi(degree as i32 - 2),
            sigma * (degree as f64 - 2.0) * t.powi(degree as i32 - 4),
        )
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = b * x_block[i] * x_block[j];
        }
        m[i][i] += a;
    }
    m
}

/// Dense-LU route for the inverse Hessian application, blockwise.
pub fn dense_poly_inv_hessian_apply(
    sigma: f64,
    degree: u32,
    x: &BlockedVector,
    v: &BlockedVector,
) -> Option<BlockedVector> {
    let mut out = BlockedVector::zeros_like(v);
    for (i, (xb, vb)) in x.blocks().iter().zip(v.blocks()).enumerate() {
        let m = assemble_poly_block_hessian(sigma, degree, xb);
        let sol = lu_solve(&m, vb)?;
        out.blocks_mut()[i].copy_from_slice(&sol);
    }
    Some(out)
}

/// Straight-line SGD: x <- x - eta_s g_i with the epoch-constant
/// schedule. Returns the full iterate path, x0 first.
pub fn reference_sgd(
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: &Schedule,
    x0: &BlockedVector,
    steps: usize,
) -> Result<Vec<BlockedVector>> {
    let n = obj.len() as u64;
    let mut x = x0.clone();
    let mut path = vec![x.clone()];
    for _ in 0..steps {
        let s = sampler.draws() / n;
        let eta_k = eta.eval(s);
        let i = sampler.next_index();
        let (_, g) = obj.eval_component(i, &x)?;
        for (xj, gj) in x.iter_mut().zip(g.iter()) {
            *xj -= eta_k * gj;
        }
        path.push(x.clone());
    }
    Ok(path)
}

/// Straight-line momentum SGD: x <- x - eta m; m <- m - theta (m - g),
/// with g sampled at the pre-update point. Returns (xs, ms).
pub fn reference_momentum_sgd(
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: &Schedule,
    theta: &Schedule,
    x0: &BlockedVector,
    steps: usize,
) -> Result<(Vec<BlockedVector>, Vec<BlockedVector>)> {
    let n = obj.len() as u64;
    let mut x = x0.clone();
    let mut m = BlockedVector::zeros_like(x0);
    let mut xs = vec![x.clone()];
    let mut ms = vec![m.clone()];
    for _ in 0..steps {
        let s = sampler.draws() / n;
        let eta_k = eta.eval(s);
        let theta_k = theta.eval(s);
        let i = sampler.next_index();
        let (_, g) = obj.eval_component(i, &x)?;
        for (xj, mj) in x.iter_mut().zip(m.iter()) {
            *xj -= eta_k * mj;
        }
        for (mj, gj) in m.iter_mut().zip(g.iter()) {
            *mj -= theta_k * (*mj - gj);
        }
        xs.push(x.clone());
        ms.push(m.clone());
    }
    Ok((xs, ms))
}

/// Straight-line proximal SGD with soft-thresholding and clamping:
/// v = x - eta g; soft-threshold at eta*lambda; clamp into [lo, hi].
#[allow(clippy::too_many_arguments)]
pub fn reference_prox_sgd(
    obj: &FiniteSumObjective,
    sampler: &mut Sampler,
    eta: &Schedule,
    x0: &BlockedVector,
    steps: usize,
    lambda: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<BlockedVector>> {
    let n = obj.len() as u64;
    let mut x = x0.clone();
    let mut path = vec![x.clone()];
    for _ in 0..steps {
        let s = sampler.draws() / n;
        let eta_k = eta.eval(s);
        let i = sampler.next_index();
        let (_, g) = obj.eval_component(i, &x)?;
        for (xj, gj) in x.iter_mut().zip(g.iter()) {
            let v = *xj - eta_k * gj;
            let t = eta_k * lambda;
            let z = if v > t {
                v - t
            } else if v < -t {
                v + t
            } else {
                0.0
            };
            *xj = z.clamp(lo, hi);
        }
        path.push(x.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{BlockPolynomialKernel, Kernel};
    use crate::rng::Rng;

    #[test]
    fn fd_gradient_on_quadratic() {
        let f = |x: &BlockedVector| 0.5 * x.dot(x);
        let x = BlockedVector::dense(vec![1.0, -2.0, 3.0]);
        let g = finite_difference_gradient(&f, &x, 1e-6);
        assert!(g.dist(&x) < 1e-8);
    }

    #[test]
    fn dense_route_matches_rank_one_inverse() {
        let kernel = BlockPolynomialKernel::new(0.01, 6).unwrap();
        let mut rng = Rng::new(8);
        for _ in 0..20 {
            let dim = 1 + rng.next_below(8) as usize;
            let x = BlockedVector::dense((0..dim).map(|_| 5.0 * rng.next_gaussian()).collect());
            let v = BlockedVector::dense((0..dim).map(|_| rng.next_gaussian()).collect());
            let fast = kernel.inv_hessian_apply(&x, &v).unwrap();
            let dense = dense_poly_inv_hessian_apply(0.01, 6, &x, &v).unwrap();
            assert!(fast.dist(&dense) <= 1e-10 * (1.0 + dense.norm()));
        }
    }
}
