//! Property tests over the kernel and proximal contracts.

use proptest::prelude::*;

use bregopt::blocked::BlockedVector;
use bregopt::kernel::{
    BlockPolynomialKernel, CoordPolynomialKernel, EuclideanKernel, Kernel,
};
use bregopt::prox::{bregman_prox, forward_backward, ConstraintSet, Regularizer};

fn blocked_vector(max_blocks: usize, max_dim: usize, scale: f64) -> impl Strategy<Value = BlockedVector> {
    prop::collection::vec(
        prop::collection::vec(-scale..scale, 1..=max_dim),
        1..=max_blocks,
    )
    .prop_map(BlockedVector::new)
}

fn kernels() -> Vec<Box<dyn Kernel>> {
    vec![
        Box::new(EuclideanKernel),
        Box::new(BlockPolynomialKernel::new(0.01, 4).unwrap()),
        Box::new(BlockPolynomialKernel::new(1e-6, 6).unwrap()),
        Box::new(CoordPolynomialKernel::new(0.01, 4).unwrap()),
        Box::new(CoordPolynomialKernel::new(0.5, 5).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn grad_conj_round_trip(x in blocked_vector(3, 6, 100.0)) {
        for kernel in kernels() {
            let y = kernel.grad(&x).unwrap();
            let back = kernel.grad_conj(&y).unwrap();
            prop_assert!(back.dist(&x) <= 1e-9 * (1.0 + x.norm()),
                "kernel {}", kernel.name());
        }
    }

    #[test]
    fn bregman_nonnegative_and_identifies(x in blocked_vector(2, 5, 50.0), y in blocked_vector(2, 5, 50.0)) {
        for kernel in kernels() {
            if !x.same_shape(&y) {
                continue;
            }
            let d = kernel.bregman(&x, &y).unwrap();
            prop_assert!(d >= -1e-9, "kernel {}: D = {d}", kernel.name());
            prop_assert_eq!(kernel.bregman(&x, &x).unwrap(), 0.0);
            if d <= 1e-12 {
                // Strictly convex kernels: zero distance means equal points.
                prop_assert!(x.dist(&y) <= 1e-3, "kernel {}", kernel.name());
            }
        }
    }

    #[test]
    fn value_convex_on_segments(
        x in blocked_vector(2, 5, 50.0),
        y in blocked_vector(2, 5, 50.0),
        t in 0.0f64..1.0,
    ) {
        for kernel in kernels() {
            if !x.same_shape(&y) {
                continue;
            }
            let mut mid = x.scaled(t);
            mid.axpy(1.0 - t, &y);
            let lhs = kernel.value(&mid).unwrap();
            let rhs = t * kernel.value(&x).unwrap() + (1.0 - t) * kernel.value(&y).unwrap();
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "kernel {}", kernel.name());
        }
    }

    #[test]
    fn gradient_matches_finite_differences(x in blocked_vector(2, 4, 10.0)) {
        for kernel in kernels() {
            let g = kernel.grad(&x).unwrap();
            let fd = bregopt::check::finite_difference_gradient(
                &|p| kernel.value(p).unwrap(), &x, 1e-5);
            prop_assert!(fd.dist(&g) <= 1e-5 * (1.0 + g.norm()),
                "kernel {}: fd gap {}", kernel.name(), fd.dist(&g));
        }
    }

    #[test]
    fn hessian_inverse_composition(x in blocked_vector(2, 8, 20.0), seed in 0u64..1000) {
        let mut rng = bregopt::rng::Rng::new(seed);
        let mut v = BlockedVector::zeros_like(&x);
        for value in v.iter_mut() {
            *value = rng.next_gaussian();
        }
        for kernel in kernels() {
            let w = kernel.inv_hessian_apply(&x, &v).unwrap();
            let back = kernel.hessian_apply(&x, &w).unwrap();
            prop_assert!(back.dist(&v) <= 1e-8 * (1.0 + v.norm()), "kernel {}", kernel.name());
        }
    }

    #[test]
    fn prox_firmly_nonexpansive_euclidean(
        a in prop::collection::vec(-10.0f64..10.0, 4),
        b in prop::collection::vec(-10.0f64..10.0, 4),
        lambda in 0.0f64..2.0,
    ) {
        let kernel = EuclideanKernel;
        let reg = Regularizer::l1(lambda).unwrap();
        let x = BlockedVector::dense(a);
        let y = BlockedVector::dense(b);
        let (px, _) = bregman_prox(&kernel, &reg, &x, 1.0, 1e-9).unwrap();
        let (py, _) = bregman_prox(&kernel, &reg, &y, 1.0, 1e-9).unwrap();
        prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-12);
    }

    #[test]
    fn forward_backward_feasible_and_certified(
        xs in prop::collection::vec(-5.0f64..5.0, 3),
        gs in prop::collection::vec(-3.0f64..3.0, 3),
        eta in 0.01f64..1.0,
        lambda in 0.0f64..1.0,
    ) {
        let kernel = CoordPolynomialKernel::new(0.01, 4).unwrap();
        let reg = Regularizer::l1(lambda).unwrap();
        let cons = ConstraintSet::boxed(-1.0, 1.0).unwrap();
        let x = BlockedVector::dense(xs);
        let x = cons.project(&x);
        let g = BlockedVector::dense(gs);
        let (x_plus, cert) = forward_backward(&kernel, &reg, &cons, &x, &g, eta, 1e-7).unwrap();
        prop_assert!(cons.contains(&x_plus));
        prop_assert!(cert.stationarity_residual <= 1e-7);
        prop_assert!(cert.decrease_ok);
    }

    #[test]
    fn blocked_dot_matches_flat(x in blocked_vector(3, 5, 10.0)) {
        let flat = x.to_flat();
        let flat_dot: f64 = flat.iter().map(|v| v * v).sum();
        // Same block layout, same accumulation order.
        let rebuilt = BlockedVector::from_flat(&x.block_dims(), &flat).unwrap();
        prop_assert_eq!(rebuilt, x.clone());
        prop_assert!((x.dot(&x) - flat_dot).abs() <= 1e-9 * (1.0 + flat_dot.abs()));
    }
}
