//! Safeguarded scalar root finding for strictly increasing maps.

use crate::error::{Error, Result};

/// Outcome of a scalar solve: the root and the residual it achieved.
#[derive(Clone, Copy, Debug)]
pub struct ScalarRoot {
    pub t: f64,
    pub residual: f64,
    pub iters: usize,
}

/// Solve f(t) = 0 for a strictly increasing f on the bracket [lo, hi],
/// where f(lo) <= 0 <= f(hi). `f` returns (value, derivative).
///
/// Newton steps are taken from `start` and rejected in favor of bisection
/// whenever they leave the current bracket. Converges when
/// |f(t)| <= stop_tol; reports failure if after `max_iter` iterations the
/// residual still exceeds `fail_tol`.
pub fn newton_bisection(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    stop_tol: f64,
    fail_tol: f64,
    max_iter: usize,
) -> Result<ScalarRoot> {
    let mut t = start.clamp(lo, hi);
    let (mut val, mut deriv) = f(t);
    let mut best_t = t;
    let mut best_res = val.abs();

    for iter in 0..max_iter {
        if val.abs() <= stop_tol {
            return Ok(ScalarRoot {
                t,
                residual: val.abs(),
                iters: iter,
            });
        }
        if val > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = if deriv > 0.0 { t - val / deriv } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == t {
            // Bracket exhausted at floating point resolution.
            break;
        }
        t = next;
        let (v, d) = f(t);
        val = v;
        deriv = d;
        if val.abs() < best_res {
            best_res = val.abs();
            best_t = t;
        }
    }

    if best_res <= fail_tol {
        Ok(ScalarRoot {
            t: best_t,
            residual: best_res,
            iters: max_iter,
        })
    } else {
        Err(Error::RootSolveFailed {
            iters: max_iter,
            residual: best_res,
            tolerance: fail_tol,
        })
    }
}

/// Value and derivative of the scalar dual map t -> t + sigma * t^(r-1)
/// minus the target s. This is the norm equation behind the polynomial
/// kernel gradients; it is strictly increasing on [0, inf).
#[inline]
fn poly_dual_gap(sigma: f64, degree: u32, t: f64, s: f64) -> (f64, f64) {
    let tp2 = t.powi(degree as i32 - 2);
    let value = t + sigma * tp2 * t - s;
    let deriv = 1.0 + sigma * (degree as f64 - 1.0) * tp2;
    (value, deriv)
}

/// Solve t * (1 + sigma * t^(r-2)) = s for t >= 0, given s >= 0.
///
/// Since t <= s and sigma * t^(r-1) <= s at the root, the bracket [0, s]
/// always contains it; Newton starts from min(s, (s/sigma)^(1/(r-1))),
/// an upper bound on the root, and descends monotonically.
pub fn solve_poly_dual(sigma: f64, degree: u32, s: f64) -> Result<ScalarRoot> {
    debug_assert!(s >= 0.0 && sigma >= 0.0 && degree >= 4);
    if s == 0.0 {
        return Ok(ScalarRoot {
            t: 0.0,
            residual: 0.0,
            iters: 0,
        });
    }
    if sigma == 0.0 {
        return Ok(ScalarRoot {
            t: s,
            residual: 0.0,
            iters: 0,
        });
    }
    let start = s.min((s / sigma).powf(1.0 / (degree as f64 - 1.0)));
    let stop_tol = 1e-14 * (1.0 + s);
    let fail_tol = 1e-12 * (1.0 + s);
    newton_bisection(
        |t| poly_dual_gap(sigma, degree, t, s),
        0.0,
        s,
        start,
        stop_tol,
        fail_tol,
        100,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain bisection, kept free of the Newton path on purpose.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn recovers_known_root() {
        // t (1 + 0.01 t^2) = 6.25 has the root t = 5.
        let root = solve_poly_dual(0.01, 4, 6.25).unwrap();
        assert!((root.t - 5.0).abs() < 1e-12, "t = {}", root.t);
    }

    #[test]
    fn matches_bisection_oracle() {
        for &(sigma, degree, s) in &[
            (0.01, 4u32, 5.25),
            (0.01, 6, 123.4),
            (1e-6, 4, 1e6),
            (0.5, 5, 0.3),
            (1e-6, 6, 1e8),
        ] {
            let oracle = bisect(
                |t| t * (1.0 + sigma * t.powi(degree as i32 - 2)) - s,
                0.0,
                s,
            );
            let got = solve_poly_dual(sigma, degree, s).unwrap();
            assert!(
                (got.t - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()),
                "sigma={sigma} r={degree} s={s}: {} vs oracle {}",
                got.t,
                oracle
            );
        }
    }

    #[test]
    fn zero_and_degenerate_sigma() {
        assert_eq!(solve_poly_dual(0.01, 4, 0.0).unwrap().t, 0.0);
        assert_eq!(solve_poly_dual(0.0, 4, 3.5).unwrap().t, 3.5);
    }

    #[test]
    fn residual_within_tolerance_over_wide_range() {
        for exp in -8..=8 {
            let s = 10f64.powi(exp);
            for &(sigma, degree) in &[(1e-6, 4u32), (0.01, 4), (0.01, 6), (1.0, 8)] {
                let root = solve_poly_dual(sigma, degree, s).unwrap();
                let back = root.t * (1.0 + sigma * root.t.powi(degree as i32 - 2));
                assert!(
                    (back - s).abs() <= 1e-12 * (1.0 + s),
                    "sigma={sigma} r={degree} s={s}: back={back}"
                );
            }
        }
    }
}
