//! Legendre kernel functions and their Bregman machinery.
//!
//! A kernel here is a convex, continuously differentiable function on all
//! of R^n whose gradient is a bijection (Legendre). Every implementation
//! exposes the value, gradient, conjugate gradient (the inverse map),
//! Bregman distance, and Hessian / inverse-Hessian applications. The
//! polynomial kernels act blockwise as p(t) = t^2/2 + (sigma/r) t^r on the
//! block norm t, so the conjugate gradient reduces to a strictly
//! increasing scalar equation per block, solved by safeguarded Newton.
//!
//! Inverse-Hessian applications use the rank-one-update inverse derived
//! from the exact block Hessian
//!     H = (1 + sigma t^(r-2)) I + sigma (r-2) t^(r-4) x x^T,
//! namely H^{-1} v = v/a - (b <x,v> / (a (a + b t^2))) x with
//! a = 1 + sigma t^(r-2) and b = sigma (r-2) t^(r-4). That expression is
//! validated against dense LU solves of the assembled H in the tests.

use crate::blocked::BlockedVector;
use crate::error::{Error, Result};
use crate::root::solve_poly_dual;

/// Blocks with norm below this are treated as exactly zero when inverting
/// the gradient, avoiding 0/0 in the direction recovery.
const ZERO_BLOCK_NORM: f64 = 1e-300;

/// Scalar profile of a separable kernel: the coordinatewise map
/// phi'_j and its inverse. Available only for kernels that act
/// independently on each coordinate, which is what the certified
/// proximal subproblem solver requires.
#[derive(Clone, Copy, Debug)]
pub enum SeparableScalar {
    Euclidean,
    Poly { sigma: f64, degree: u32 },
}

impl SeparableScalar {
    /// The 1-D dual map u -> phi'(u).
    #[inline]
    pub fn scalar_grad(&self, u: f64) -> f64 {
        match *self {
            SeparableScalar::Euclidean => u,
            SeparableScalar::Poly { sigma, degree } => {
                u * (1.0 + sigma * u.abs().powi(degree as i32 - 2))
            }
        }
    }

    /// Inverse of the 1-D dual map: the unique u with phi'(u) = c.
    pub fn scalar_grad_inv(&self, c: f64) -> Result<f64> {
        match *self {
            SeparableScalar::Euclidean => Ok(c),
            SeparableScalar::Poly { sigma, degree } => {
                if c.abs() < ZERO_BLOCK_NORM {
                    return Ok(0.0);
                }
                let root = solve_poly_dual(sigma, degree, c.abs())?;
                Ok(c.signum() * root.t)
            }
        }
    }
}

/// Legendre kernel interface. Implementations are immutable after
/// construction; everything here is a pure function of its inputs and
/// safe to call concurrently.
pub trait Kernel: Send + Sync {
    /// phi(x).
    fn value(&self, x: &BlockedVector) -> Result<f64>;

    /// grad phi(x).
    fn grad(&self, x: &BlockedVector) -> Result<BlockedVector>;

    /// The unique x with grad phi(x) = y, i.e. grad of the conjugate.
    fn grad_conj(&self, y: &BlockedVector) -> Result<BlockedVector>;

    /// Bregman distance D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>.
    fn bregman(&self, x: &BlockedVector, y: &BlockedVector) -> Result<f64> {
        x.check_shape(y, "bregman")?;
        let gy = self.grad(y)?;
        let diff = x.sub(y);
        Ok(self.value(x)? - self.value(y)? - gy.dot(&diff))
    }

    /// Hessian-vector product (grad^2 phi(x)) v.
    fn hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector>;

    /// Inverse Hessian-vector product (grad^2 phi(x))^{-1} v, computed in
    /// O(dim) per block without forming any matrix.
    fn inv_hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector>;

    /// Coordinatewise profile, when the kernel is fully separable.
    fn separable(&self) -> Option<SeparableScalar> {
        None
    }

    fn name(&self) -> &'static str;
}

/// The classical kernel phi(x) = ||x||^2 / 2; gradient and conjugate
/// gradient are the identity, the Bregman distance is half the squared
/// Euclidean distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct EuclideanKernel;

impl Kernel for EuclideanKernel {
    fn value(&self, x: &BlockedVector) -> Result<f64> {
        Ok(0.5 * x.dot(x))
    }

    fn grad(&self, x: &BlockedVector) -> Result<BlockedVector> {
        Ok(x.clone())
    }

    fn grad_conj(&self, y: &BlockedVector) -> Result<BlockedVector> {
        Ok(y.clone())
    }

    fn hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "hessian_apply")?;
        Ok(v.clone())
    }

    fn inv_hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "inv_hessian_apply")?;
        Ok(v.clone())
    }

    fn separable(&self) -> Option<SeparableScalar> {
        Some(SeparableScalar::Euclidean)
    }

    fn name(&self) -> &'static str {
        "euclidean"
    }
}

/// Parameters of one polynomial profile p(t) = t^2/2 + (sigma/r) t^r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyParams {
    pub sigma: f64,
    pub degree: u32,
}

impl PolyParams {
    pub fn new(sigma: f64, degree: u32) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "polynomial kernel sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if degree < 4 {
            return Err(Error::InvalidParameter(format!(
                "polynomial kernel degree must be an integer >= 4, got {degree}"
            )));
        }
        Ok(PolyParams { sigma, degree })
    }

    #[inline]
    fn value(&self, t: f64) -> f64 {
        0.5 * t * t + self.sigma / self.degree as f64 * t.powi(self.degree as i32)
    }

    /// Multiplier 1 + sigma t^(r-2) in grad p(t) = (1 + sigma t^(r-2)) t.
    #[inline]
    fn grad_factor(&self, t: f64) -> f64 {
        1.0 + self.sigma * t.powi(self.degree as i32 - 2)
    }

    /// Hessian coefficients (a, b): H = a I + b x x^T at block norm t.
    #[inline]
    fn hessian_coeffs(&self, t: f64) -> (f64, f64) {
        if t == 0.0 {
            return (1.0, 0.0);
        }
        let a = self.grad_factor(t);
        let b = self.sigma * (self.degree as f64 - 2.0) * t.powi(self.degree as i32 - 4);
        (a, b)
    }
}

fn block_norm(block: &[f64]) -> f64 {
    block.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Blockwise polynomial kernel phi(x) = sum_i p_i(||x_i||) with
/// p_i(t) = t^2/2 + (sigma_i/r_i) t^{r_i}. One (sigma, r) pair may be
/// shared by all blocks or given per block.
#[derive(Clone, Debug)]
pub struct BlockPolynomialKernel {
    shared: PolyParams,
    per_block: Option<Vec<PolyParams>>,
}

impl BlockPolynomialKernel {
    pub fn new(sigma: f64, degree: u32) -> Result<Self> {
        Ok(BlockPolynomialKernel {
            shared: PolyParams::new(sigma, degree)?,
            per_block: None,
        })
    }

    pub fn with_per_block(params: Vec<PolyParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter(
                "per-block kernel parameters must be nonempty".into(),
            ));
        }
        Ok(BlockPolynomialKernel {
            shared: params[0],
            per_block: Some(params),
        })
    }

    fn params_for(&self, block_index: usize, num_blocks: usize) -> Result<PolyParams> {
        match &self.per_block {
            None => Ok(self.shared),
            Some(list) => {
                if list.len() != num_blocks {
                    return Err(Error::DimensionMismatch {
                        context: "block kernel parameter count",
                        left: list.len(),
                        right: num_blocks,
                    });
                }
                Ok(list[block_index])
            }
        }
    }
}

impl Kernel for BlockPolynomialKernel {
    fn value(&self, x: &BlockedVector) -> Result<f64> {
        let nb = x.num_blocks();
        let mut acc = 0.0;
        for (i, block) in x.blocks().iter().enumerate() {
            acc += self.params_for(i, nb)?.value(block_norm(block));
        }
        Ok(acc)
    }

    fn grad(&self, x: &BlockedVector) -> Result<BlockedVector> {
        let nb = x.num_blocks();
        let mut out = x.clone();
        for (i, block) in out.blocks_mut().iter_mut().enumerate() {
            let factor = self.params_for(i, nb)?.grad_factor(block_norm(block));
            for v in block.iter_mut() {
                *v *= factor;
            }
        }
        Ok(out)
    }

    fn grad_conj(&self, y: &BlockedVector) -> Result<BlockedVector> {
        let nb = y.num_blocks();
        let mut out = y.clone();
        for (i, block) in out.blocks_mut().iter_mut().enumerate() {
            let p = self.params_for(i, nb)?;
            let s = block_norm(block);
            if s < ZERO_BLOCK_NORM {
                block.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let root = solve_poly_dual(p.sigma, p.degree, s)?;
            let scale = root.t / s;
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
        Ok(out)
    }

    fn hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "hessian_apply")?;
        let nb = x.num_blocks();
        let mut out = v.clone();
        for i in 0..nb {
            let p = self.params_for(i, nb)?;
            let xb = x.block(i);
            let (a, b) = p.hessian_coeffs(block_norm(xb));
            let xv: f64 = xb.iter().zip(out.block(i)).map(|(p, q)| p * q).sum();
            let ob = &mut out.blocks_mut()[i];
            for (w, xj) in ob.iter_mut().zip(xb) {
                *w = a * *w + b * xv * xj;
            }
        }
        Ok(out)
    }

    fn inv_hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "inv_hessian_apply")?;
        let nb = x.num_blocks();
        let mut out = v.clone();
        for i in 0..nb {
            let p = self.params_for(i, nb)?;
            let xb = x.block(i);
            let t = block_norm(xb);
            let (a, b) = p.hessian_coeffs(t);
            let xv: f64 = xb.iter().zip(out.block(i)).map(|(p, q)| p * q).sum();
            // (a I + b x x^T)^{-1} = I/a - (b / (a (a + b t^2))) x x^T
            let coeff = b * xv / (a * (a + b * t * t));
            let ob = &mut out.blocks_mut()[i];
            for (w, xj) in ob.iter_mut().zip(xb) {
                *w = *w / a - coeff * xj;
            }
        }
        Ok(out)
    }

    fn name(&self) -> &'static str {
        "block_poly"
    }
}

/// Coordinatewise polynomial kernel phi(x) = sum_j p(|x_j|), the fully
/// separable variant. Each 1-D map u -> u (1 + sigma |u|^(r-2)) is
/// strictly increasing, so the conjugate gradient splits into independent
/// scalar solves and the proximal subproblems admit a certified
/// coordinatewise solver (see the prox module).
#[derive(Clone, Copy, Debug)]
pub struct CoordPolynomialKernel {
    params: PolyParams,
}

impl CoordPolynomialKernel {
    pub fn new(sigma: f64, degree: u32) -> Result<Self> {
        Ok(CoordPolynomialKernel {
            params: PolyParams::new(sigma, degree)?,
        })
    }
}

impl Kernel for CoordPolynomialKernel {
    fn value(&self, x: &BlockedVector) -> Result<f64> {
        Ok(x.iter().map(|u| self.params.value(u.abs())).sum())
    }

    fn grad(&self, x: &BlockedVector) -> Result<BlockedVector> {
        let mut out = x.clone();
        for u in out.iter_mut() {
            *u *= self.params.grad_factor(u.abs());
        }
        Ok(out)
    }

    fn grad_conj(&self, y: &BlockedVector) -> Result<BlockedVector> {
        let profile = SeparableScalar::Poly {
            sigma: self.params.sigma,
            degree: self.params.degree,
        };
        let mut out = y.clone();
        for u in out.iter_mut() {
            *u = profile.scalar_grad_inv(*u)?;
        }
        Ok(out)
    }

    fn hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "hessian_apply")?;
        let mut out = v.clone();
        let sigma = self.params.sigma;
        let rm1 = self.params.degree as f64 - 1.0;
        let pow = self.params.degree as i32 - 2;
        for (w, u) in out.iter_mut().zip(x.iter()) {
            *w *= 1.0 + sigma * rm1 * u.abs().powi(pow);
        }
        Ok(out)
    }

    fn inv_hessian_apply(&self, x: &BlockedVector, v: &BlockedVector) -> Result<BlockedVector> {
        x.check_shape(v, "inv_hessian_apply")?;
        let mut out = v.clone();
        let sigma = self.params.sigma;
        let rm1 = self.params.degree as f64 - 1.0;
        let pow = self.params.degree as i32 - 2;
        for (w, u) in out.iter_mut().zip(x.iter()) {
            *w /= 1.0 + sigma * rm1 * u.abs().powi(pow);
        }
        Ok(out)
    }

    fn separable(&self) -> Option<SeparableScalar> {
        Some(SeparableScalar::Poly {
            sigma: self.params.sigma,
            degree: self.params.degree,
        })
    }

    fn name(&self) -> &'static str {
        "coord_poly"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(vals: &[f64]) -> BlockedVector {
        BlockedVector::dense(vals.to_vec())
    }

    #[test]
    fn euclidean_value_and_grad() {
        let k = EuclideanKernel;
        let x = bv(&[3.0, 4.0]);
        assert_eq!(k.value(&x).unwrap(), 12.5);
        assert_eq!(k.grad(&x).unwrap(), x);
        assert_eq!(k.grad_conj(&bv(&[3.75, 5.0])).unwrap(), bv(&[3.75, 5.0]));
        assert_eq!(k.value(&bv(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn block_poly_value() {
        // p(5) = 12.5 + (0.01/4) * 625 = 14.0625 at x = (3,4).
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let x = bv(&[3.0, 4.0]);
        assert!((k.value(&x).unwrap() - 14.0625).abs() < 1e-12);
        assert_eq!(k.value(&bv(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn block_poly_grad() {
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let g = k.grad(&bv(&[3.0, 4.0])).unwrap();
        assert!((g.block(0)[0] - 3.75).abs() < 1e-12);
        assert!((g.block(0)[1] - 5.0).abs() < 1e-12);
        assert_eq!(k.grad(&bv(&[0.0, 0.0])).unwrap(), bv(&[0.0, 0.0]));
    }

    #[test]
    fn block_poly_grad_conj_known_point() {
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let x = k.grad_conj(&bv(&[3.75, 5.0])).unwrap();
        assert!((x.block(0)[0] - 3.0).abs() < 1e-10);
        assert!((x.block(0)[1] - 4.0).abs() < 1e-10);
        assert_eq!(k.grad_conj(&bv(&[0.0, 0.0])).unwrap(), bv(&[0.0, 0.0]));
    }

    #[test]
    fn bregman_identities() {
        let e = EuclideanKernel;
        assert!((e.bregman(&bv(&[1.0, 0.0]), &bv(&[0.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let x = bv(&[3.0, 4.0]);
        assert_eq!(k.bregman(&x, &x).unwrap(), 0.0);
        // D(x, 0) = phi(x) - phi(0) - <0, x> = phi(x).
        assert!((k.bregman(&x, &bv(&[0.0, 0.0])).unwrap() - 14.0625).abs() < 1e-12);
    }

    #[test]
    fn hessian_apply_matches_finite_differences() {
        // Frozen from the central-difference oracle on grad:
        // H(3,4) = 1.25 I + 0.02 x x^T, so H (1,0) = (1.43, 0.24).
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let x = bv(&[3.0, 4.0]);
        let hv = k.hessian_apply(&x, &bv(&[1.0, 0.0])).unwrap();
        assert!((hv.block(0)[0] - 1.43).abs() < 1e-12, "{:?}", hv);
        assert!((hv.block(0)[1] - 0.24).abs() < 1e-12, "{:?}", hv);

        // Central differences of grad along v, step 1e-6.
        let h = 1e-6;
        let mut xp = x.clone();
        xp.blocks_mut()[0][0] += h;
        let mut xm = x.clone();
        xm.blocks_mut()[0][0] -= h;
        let fd = k.grad(&xp).unwrap().sub(&k.grad(&xm).unwrap()).scaled(0.5 / h);
        assert!((fd.block(0)[0] - hv.block(0)[0]).abs() < 1e-6);
        assert!((fd.block(0)[1] - hv.block(0)[1]).abs() < 1e-6);
    }

    #[test]
    fn hessian_identity_at_origin() {
        for degree in [4u32, 6] {
            let k = BlockPolynomialKernel::new(0.01, degree).unwrap();
            let zero = bv(&[0.0, 0.0, 0.0]);
            let v = bv(&[1.0, -2.0, 0.5]);
            assert_eq!(k.hessian_apply(&zero, &v).unwrap(), v);
            assert_eq!(k.inv_hessian_apply(&zero, &v).unwrap(), v);
        }
    }

    #[test]
    fn inverse_hessian_matches_dense_solve() {
        let k = BlockPolynomialKernel::new(0.01, 4).unwrap();
        let x = bv(&[3.0, 4.0]);
        let v = bv(&[1.0, 0.0]);
        let w = k.inv_hessian_apply(&x, &v).unwrap();
        // Dense 2x2 solve of [1.25 I + 0.02 x x^T] w = v.
        let a = vec![
            vec![1.25 + 0.02 * 9.0, 0.02 * 12.0],
            vec![0.02 * 12.0, 1.25 + 0.02 * 16.0],
        ];
        let dense = crate::linalg::lu_solve(&a, &[1.0, 0.0]).unwrap();
        assert!((w.block(0)[0] - dense[0]).abs() < 1e-12);
        assert!((w.block(0)[1] - dense[1]).abs() < 1e-12);
    }

    #[test]
    fn inv_hessian_round_trip() {
        let mut rng = crate::rng::Rng::new(17);
        for &(sigma, degree) in &[(0.01, 4u32), (1e-6, 6), (0.5, 5)] {
            let k = BlockPolynomialKernel::new(sigma, degree).unwrap();
            for _ in 0..50 {
                let dim = 1 + rng.next_below(16) as usize;
                let x = bv(&(0..dim).map(|_| 10.0 * rng.next_gaussian()).collect::<Vec<_>>());
                let v = bv(&(0..dim).map(|_| rng.next_gaussian()).collect::<Vec<_>>());
                let w = k.inv_hessian_apply(&x, &v).unwrap();
                let back = k.hessian_apply(&x, &w).unwrap();
                assert!(
                    back.dist(&v) <= 1e-8 * (1.0 + v.norm()),
                    "sigma={sigma} r={degree}"
                );
            }
        }
    }

    #[test]
    fn sigma_zero_collapses_to_euclidean() {
        let k = BlockPolynomialKernel::new(0.0, 4).unwrap();
        let e = EuclideanKernel;
        let x = BlockedVector::new(vec![vec![1.5, -2.0], vec![0.25]]);
        assert_eq!(k.value(&x).unwrap(), e.value(&x).unwrap());
        assert_eq!(k.grad(&x).unwrap(), e.grad(&x).unwrap());
        assert_eq!(k.grad_conj(&x).unwrap(), e.grad_conj(&x).unwrap());
    }

    #[test]
    fn coord_poly_round_trip_and_separability() {
        let k = CoordPolynomialKernel::new(0.01, 4).unwrap();
        let x = bv(&[3.0, -4.0, 0.0]);
        let y = k.grad(&x).unwrap();
        assert!((y.block(0)[0] - 3.0 * (1.0 + 0.01 * 9.0)).abs() < 1e-12);
        let back = k.grad_conj(&y).unwrap();
        assert!(back.dist(&x) < 1e-10);
        assert!(k.separable().is_some());
        assert!(BlockPolynomialKernel::new(0.01, 4)
            .unwrap()
            .separable()
            .is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BlockPolynomialKernel::new(-0.1, 4).is_err());
        assert!(BlockPolynomialKernel::new(0.01, 3).is_err());
        assert!(CoordPolynomialKernel::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn per_block_parameter_count_checked() {
        let k = BlockPolynomialKernel::with_per_block(vec![
            PolyParams::new(0.01, 4).unwrap(),
            PolyParams::new(0.1, 6).unwrap(),
        ])
        .unwrap();
        let two = BlockedVector::new(vec![vec![1.0], vec![2.0]]);
        assert!(k.value(&two).is_ok());
        let three = BlockedVector::new(vec![vec![1.0], vec![2.0], vec![3.0]]);
        assert!(k.value(&three).is_err());
    }
}
