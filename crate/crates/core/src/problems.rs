//! Desk-scale nonsmooth test problems with independent solution oracles.
//!
//! Every generator is bitwise reproducible from (name, seed, params): data
//! entries come from the seeded stream in a fixed order. Ground truth is
//! produced by independent oracles (breakpoint enumeration for least
//! absolute deviations at n <= 3, dense two-stage grid refinement for
//! the constrained lasso-style instance at n <= 2) and stored alongside
//! the generated instance.

use std::sync::Arc;

use crate::blocked::BlockedVector;
use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::oracle::{ConservativeOracle, FiniteSumObjective};
use crate::prox::{ConstraintSet, Regularizer};
use crate::rng::Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Instance descriptor: how it was generated and what the independent
/// oracle says about its optimum (when the oracle is exact at this size).
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub dimension: usize,
    pub num_components: usize,
    pub seed: u64,
    pub oracle_method: &'static str,
    pub optimum: Option<Optimum>,
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub value: f64,
    pub point: Vec<f64>,
}

#[inline]
fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------
// L1 regression (least absolute deviations)
// ---------------------------------------------------------------------

/// One residual term |a^T x - b| with element sign(a^T x - b) * a,
/// sign(0) = 0.
pub struct L1Component {
    a: Vec<f64>,
    b: f64,
    dims: [usize; 1],
}

impl ConservativeOracle for L1Component {
    fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    fn eval(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        let xb = x.block(0);
        let r: f64 = self.a.iter().zip(xb).map(|(ai, xi)| ai * xi).sum::<f64>() - self.b;
        let s = sign0(r);
        let mut g = BlockedVector::zeros(&self.dims);
        for (gj, aj) in g.blocks_mut()[0].iter_mut().zip(&self.a) {
            *gj = s * aj;
        }
        Ok((r.abs(), g))
    }
}

/// Build f(x) = (1/m) sum |a_i^T x - b_i| from explicit rows.
pub fn l1_regression_from_data(rows: Vec<Vec<f64>>, b: Vec<f64>) -> Result<FiniteSumObjective> {
    if rows.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "l1 regression rows vs rhs",
            left: rows.len(),
            right: b.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("l1 regression needs at least one row"));
    }
    let n = rows[0].len();
    let components: Vec<Arc<dyn ConservativeOracle>> = rows
        .into_iter()
        .zip(b)
        .map(|(a, b)| {
            Arc::new(L1Component { a, b, dims: [n] }) as Arc<dyn ConservativeOracle>
        })
        .collect();
    FiniteSumObjective::new(components)
}

/// Seeded LAD instance. When `consistent` is set the right-hand side is
/// b = A xbar for a hidden xbar, so the optimal value is exactly zero.
/// Ground truth by breakpoint enumeration is attached for n <= 3.
pub fn make_l1_regression(
    m: usize,
    n: usize,
    seed: u64,
    consistent: bool,
) -> Result<(FiniteSumObjective, ProblemSpec)> {
    if n < 1 || m < n {
        return Err(Error::InvalidParameter(format!(
            "l1 regression needs m >= n >= 1, got m={m} n={n}"
        )));
    }
    let mut rng = Rng::new(seed);
    let xbar: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
        .collect();
    let b: Vec<f64> = if consistent {
        rows.iter()
            .map(|a| a.iter().zip(&xbar).map(|(ai, xi)| ai * xi).sum())
            .collect()
    } else {
        (0..m).map(|_| rng.next_gaussian()).collect()
    };
    // Enumeration visits C(m, n) vertices; attach ground truth only when
    // that stays desk-scale. Larger instances run without it and are
    // judged by certificates alone.
    let optimum = if n <= 3 && subset_count(m, n) <= 500_000 {
        let (value, point) = lad_breakpoint_optimum(&rows, &b)?;
        Some(Optimum { value, point })
    } else {
        None
    };
    let obj = l1_regression_from_data(rows, b)?;
    let spec = ProblemSpec {
        name: "l1_regression",
        dimension: n,
        num_components: m,
        seed,
        oracle_method: "breakpoint_enumeration",
        optimum,
    };
    Ok((obj, spec))
}

fn lad_value(rows: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, bi) in rows.iter().zip(b) {
        let r: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() - bi;
        acc += r.abs();
    }
    acc / rows.len() as f64
}

/// Exact LAD optimum by enumerating all intersections of n hyperplanes
/// a_i^T x = b_i: some optimum of the piecewise-linear objective lies at
/// such a vertex. Refused for n > 3.
pub fn lad_breakpoint_optimum(rows: &[Vec<f64>], b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = rows.first().map_or(0, |r| r.len());
    if n == 0 || n > 3 {
        return Err(Error::Unsupported(format!(
            "breakpoint enumeration oracle supports 1 <= n <= 3, got n={n}"
        )));
    }
    let m = rows.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| {
        let v = lad_value(rows, b, &x);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    };
    let mut subset = vec![0usize; n];
    enumerate_subsets(m, n, &mut subset, 0, 0, &mut |idx: &[usize]| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        if let Some(x) = lu_solve(&a, &rhs) {
            consider(x);
        }
    });
    best.ok_or_else(|| {
        Error::Unsupported("no nonsingular hyperplane intersection found".into())
    })
}

fn subset_count(m: usize, k: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k as u64 {
        acc = acc.saturating_mul(m as u64 - i) / (i + 1);
    }
    acc
}

fn enumerate_subsets(
    m: usize,
    k: usize,
    buf: &mut Vec<usize>,
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(buf);
        return;
    }
    for i in start..m {
        buf[depth] = i;
        enumerate_subsets(m, k, buf, depth + 1, i + 1, visit);
    }
}

// ---------------------------------------------------------------------
// Two-layer ReLU network loss
// ---------------------------------------------------------------------

/// f(W) = ||W2 relu(W1 x)||^2 / 2 for a fixed input x, with the
/// conservative element produced by the backpropagation selection
/// relu'(a) = 1 for a > 0 and 0 for a <= 0. Parameters are two row-major
/// blocks: W1 (hidden x d_in) and W2 (d_out x hidden).
pub struct ReluNetOracle {
    d_in: usize,
    d_hidden: usize,
    d_out: usize,
    x_data: Vec<f64>,
    dims: [usize; 2],
}

impl ReluNetOracle {
    pub fn new(d_in: usize, d_hidden: usize, d_out: usize, x_data: Vec<f64>) -> Result<Self> {
        if d_in == 0 || d_hidden == 0 || d_out == 0 {
            return Err(Error::InvalidParameter(
                "relu net dimensions must be positive".into(),
            ));
        }
        if x_data.len() != d_in {
            return Err(Error::DimensionMismatch {
                context: "relu net input length",
                left: x_data.len(),
                right: d_in,
            });
        }
        Ok(ReluNetOracle {
            d_in,
            d_hidden,
            d_out,
            x_data,
            dims: [d_hidden * d_in, d_out * d_hidden],
        })
    }

    /// The fixed input vector this loss is built around.
    pub fn input(&self) -> &[f64] {
        &self.x_data
    }
}

impl ConservativeOracle for ReluNetOracle {
    fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    fn eval(&self, w: &BlockedVector) -> Result<(f64, BlockedVector)> {
        if w.block_dims() != self.dims {
            return Err(Error::DimensionMismatch {
                context: "relu net parameters",
                left: w.total_dim(),
                right: self.dims.iter().sum(),
            });
        }
        let w1 = w.block(0);
        let w2 = w.block(1);
        let (h, din, dout) = (self.d_hidden, self.d_in, self.d_out);

        // z = W1 x, s = relu(z)
        let mut z = vec![0.0; h];
        for i in 0..h {
            z[i] = (0..din).map(|k| w1[i * din + k] * self.x_data[k]).sum();
        }
        let s: Vec<f64> = z.iter().map(|&a| if a > 0.0 { a } else { 0.0 }).collect();

        // y = W2 s
        let mut y = vec![0.0; dout];
        for o in 0..dout {
            y[o] = (0..h).map(|i| w2[o * h + i] * s[i]).sum();
        }
        let value = 0.5 * y.iter().map(|v| v * v).sum::<f64>();

        // u = W2^T y
        let mut u = vec![0.0; h];
        for i in 0..h {
            u[i] = (0..dout).map(|o| w2[o * h + i] * y[o]).sum();
        }

        let mut g = BlockedVector::zeros(&self.dims);
        {
            let g1 = &mut g.blocks_mut()[0];
            for i in 0..h {
                let gate = if z[i] > 0.0 { u[i] } else { 0.0 };
                for k in 0..din {
                    g1[i * din + k] = gate * self.x_data[k];
                }
            }
        }
        {
            let g2 = &mut g.blocks_mut()[1];
            for o in 0..dout {
                for i in 0..h {
                    g2[o * h + i] = y[o] * s[i];
                }
            }
        }
        Ok((value, g))
    }
}

/// ReLU net with a seeded standard-normal input vector.
pub fn make_relu_net(
    d_in: usize,
    d_hidden: usize,
    d_out: usize,
    seed: u64,
) -> Result<(ReluNetOracle, ProblemSpec)> {
    let mut rng = Rng::new(seed);
    let x_data: Vec<f64> = (0..d_in).map(|_| rng.next_gaussian()).collect();
    let oracle = ReluNetOracle::new(d_in, d_hidden, d_out, x_data)?;
    let spec = ProblemSpec {
        name: "relu_net",
        dimension: d_hidden * d_in + d_out * d_hidden,
        num_components: 1,
        seed,
        oracle_method: "finite_differences",
        // W = 0 attains the global minimum value 0 of the nonnegative loss.
        optimum: Some(Optimum {
            value: 0.0,
            point: vec![0.0; d_hidden * d_in + d_out * d_hidden],
        }),
    };
    Ok((oracle, spec))
}

// ---------------------------------------------------------------------
// Non-Clarke-regular scalar instance
// ---------------------------------------------------------------------

/// f(x) = x^2 - |x| + 1 on the line: lower bounded, nonconvex, and not
/// Clarke regular at the kink (the -|x| part has an upward corner). The
/// selection d(x) = 2x - sign(x) with sign(0) = 0 makes x = 0 a
/// stationary point of the selection even though it is a local maximum
/// along the kink; this is the weaker stationarity notion the field admits.
/// Global minima sit at x = +-1/2 with value 3/4.
pub struct NonregularScalar {
    dims: [usize; 1],
}

impl NonregularScalar {
    pub fn new() -> Self {
        NonregularScalar { dims: [1] }
    }
}

impl Default for NonregularScalar {
    fn default() -> Self {
        Self::new()
    }
}

impl ConservativeOracle for NonregularScalar {
    fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    fn eval(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        let u = x.block(0)[0];
        let value = u * u - u.abs() + 1.0;
        let d = 2.0 * u - sign0(u);
        Ok((value, BlockedVector::dense(vec![d])))
    }
}

pub fn make_nonregular_scalar() -> (FiniteSumObjective, ProblemSpec) {
    let obj = FiniteSumObjective::single(Arc::new(NonregularScalar::new()));
    let spec = ProblemSpec {
        name: "nonregular_scalar",
        dimension: 1,
        num_components: 1,
        seed: 0,
        oracle_method: "grid_search_1d",
        optimum: Some(Optimum {
            value: 0.75,
            point: vec![0.5],
        }),
    };
    (obj, spec)
}

// ---------------------------------------------------------------------
// Smooth quadratic (deterministic reference instance)
// ---------------------------------------------------------------------

/// f(x) = ||x||^2 / 2 with gradient x; the deterministic sanity instance
/// for convergence checks.
pub struct Quadratic {
    dims: Vec<usize>,
}

impl Quadratic {
    pub fn new(block_dims: Vec<usize>) -> Self {
        Quadratic { dims: block_dims }
    }
}

impl ConservativeOracle for Quadratic {
    fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    fn eval(&self, x: &BlockedVector) -> Result<(f64, BlockedVector)> {
        Ok((0.5 * x.dot(x), x.clone()))
    }
}

pub fn make_quadratic(block_dims: Vec<usize>) -> (FiniteSumObjective, ProblemSpec) {
    let dimension = block_dims.iter().sum();
    let obj = FiniteSumObjective::single(Arc::new(Quadratic::new(block_dims)));
    let spec = ProblemSpec {
        name: "quadratic",
        dimension,
        num_components: 1,
        seed: 0,
        oracle_method: "closed_form",
        optimum: Some(Optimum {
            value: 0.0,
            point: vec![0.0; dimension],
        }),
    };
    (obj, spec)
}

// ---------------------------------------------------------------------
// Nonnegative lasso-style LAD composite
// ---------------------------------------------------------------------

/// Composite instance: f as in L1 regression, R = lambda ||.||_1, X the
/// nonnegative orthant. Ground truth by two-stage dense grid refinement
/// (final resolution 1e-6) for n <= 2; with lambda = 0 the instance
/// degenerates to unconstrained L1 regression and the breakpoint oracle
/// is used instead.
pub fn make_lasso_lad(
    m: usize,
    n: usize,
    lambda: f64,
    seed: u64,
) -> Result<(FiniteSumObjective, Regularizer, ConstraintSet, ProblemSpec)> {
    if n < 1 || m < n {
        return Err(Error::InvalidParameter(format!(
            "lasso instance needs m >= n >= 1, got m={m} n={n}"
        )));
    }
    if n > 2 {
        return Err(Error::Unsupported(format!(
            "grid oracle supports n <= 2, got n={n}"
        )));
    }
    let mut rng = Rng::new(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.next_gaussian()).collect();

    if lambda == 0.0 {
        let (value, point) = lad_breakpoint_optimum(&rows, &b)?;
        let obj = l1_regression_from_data(rows, b)?;
        let spec = ProblemSpec {
            name: "lasso_lad",
            dimension: n,
            num_components: m,
            seed,
            oracle_method: "breakpoint_enumeration",
            optimum: Some(Optimum { value, point }),
        };
        return Ok((obj, Regularizer::Zero, ConstraintSet::WholeSpace, spec));
    }

    let reg = Regularizer::l1(lambda)?;
    let (value, point) = lasso_grid_optimum(&rows, &b, lambda)?;
    let obj = l1_regression_from_data(rows, b)?;
    let spec = ProblemSpec {
        name: "lasso_lad",
        dimension: n,
        num_components: m,
        seed,
        oracle_method: "two_stage_grid",
        optimum: Some(Optimum { value, point }),
    };
    Ok((obj, reg, ConstraintSet::NonNeg, spec))
}

fn lasso_value(rows: &[Vec<f64>], b: &[f64], lambda: f64, x: &[f64]) -> f64 {
    lad_value(rows, b, x) + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Scan an axis-aligned grid, returning the best (value, point). The grid
/// is chunked along the first axis; chunks evaluate independently (in
/// parallel when enabled) and the minima combine by (value, index) order,
/// so the result does not depend on scheduling.
fn grid_scan(
    rows: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
    lo: &[f64],
    hi: &[f64],
    counts: &[usize],
) -> (f64, Vec<f64>) {
    let n = lo.len();
    debug_assert!(n == 1 || n == 2);
    let coord = |axis: usize, i: usize| -> f64 {
        if counts[axis] <= 1 {
            lo[axis]
        } else {
            lo[axis] + (hi[axis] - lo[axis]) * i as f64 / (counts[axis] - 1) as f64
        }
    };

    let scan_slice = |i0: usize| -> (f64, usize, usize) {
        let x0 = coord(0, i0);
        let mut best = (f64::INFINITY, 0usize);
        if n == 1 {
            let v = lasso_value(rows, b, lambda, &[x0]);
            best = (v, 0);
        } else {
            for i1 in 0..counts[1] {
                let v = lasso_value(rows, b, lambda, &[x0, coord(1, i1)]);
                if v < best.0 {
                    best = (v, i1);
                }
            }
        }
        (best.0, i0, best.1)
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(f64, usize, usize)> = (0..counts[0]).into_par_iter().map(scan_slice).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, usize, usize)> = (0..counts[0]).map(scan_slice).collect();

    let (v, i0, i1) = results
        .into_iter()
        .min_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap())
        .unwrap();
    let point = if n == 1 {
        vec![coord(0, i0)]
    } else {
        vec![coord(0, i0), coord(1, i1)]
    };
    (v, point)
}

/// Two-stage grid optimum for min f(x) + lambda ||x||_1 over x >= 0.
/// Stage one covers [0, xmax]^n where xmax = h(0)/lambda bounds any
/// optimum; stage two refines a window around the stage-one argmin down
/// to spacing 1e-6.
pub fn lasso_grid_optimum(
    rows: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = rows.first().map_or(0, |r| r.len());
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!(
            "grid oracle supports 1 <= n <= 2, got n={n}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "grid oracle needs lambda > 0".into(),
        ));
    }
    // lambda ||x||_1 <= h(x*) <= h(0) bounds the optimum coordinates.
    let h0 = lasso_value(rows, b, lambda, &vec![0.0; n]);
    let xmax = (h0 / lambda).max(1e-3) * (1.0 + 1e-9);

    let g1 = 4001usize;
    let lo1 = vec![0.0; n];
    let hi1 = vec![xmax; n];
    let (v1, p1) = grid_scan(rows, b, lambda, &lo1, &hi1, &vec![g1; n]);

    let spacing1 = xmax / (g1 - 1) as f64;
    let window = 1.5 * spacing1;
    let lo2: Vec<f64> = p1.iter().map(|c| (c - window).max(0.0)).collect();
    let hi2: Vec<f64> = p1.iter().map(|c| (c + window).min(xmax)).collect();
    let g2 = ((2.0 * window / 1e-6).ceil() as usize + 1).min(12_000);
    let (v2, p2) = grid_scan(rows, b, lambda, &lo2, &hi2, &vec![g2; n]);

    if v2 <= v1 {
        Ok((v2, p2))
    } else {
        Ok((v1, p1))
    }
}

/// Exact optimum of the nonnegative lasso-LAD composite by enumerating
/// generalized vertices: intersections of n hyperplanes drawn from the
/// residual kinks a_i^T x = b_i and the coordinate walls x_j = 0. The
/// objective is polyhedral convex on a polyhedron, so some optimum is
/// such a vertex. Used to cross-check the grid oracle; n <= 2.
pub fn lasso_vertex_optimum(
    rows: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = rows.first().map_or(0, |r| r.len());
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!(
            "vertex oracle supports 1 <= n <= 2, got n={n}"
        )));
    }
    let m = rows.len();
    // Equations: first m are data kinks, last n are coordinate walls.
    let equation = |idx: usize| -> (Vec<f64>, f64) {
        if idx < m {
            (rows[idx].clone(), b[idx])
        } else {
            let mut e = vec![0.0; n];
            e[idx - m] = 1.0;
            (e, 0.0)
        }
    };
    let total = m + n;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset = vec![0usize; n];
    enumerate_subsets(total, n, &mut subset, 0, 0, &mut |idx: &[usize]| {
        let sys: Vec<(Vec<f64>, f64)> = idx.iter().map(|&i| equation(i)).collect();
        let a: Vec<Vec<f64>> = sys.iter().map(|(r, _)| r.clone()).collect();
        let rhs: Vec<f64> = sys.iter().map(|(_, v)| *v).collect();
        if let Some(x) = lu_solve(&a, &rhs) {
            if x.iter().all(|&v| v >= -1e-12) {
                let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
                let v = lasso_value(rows, b, lambda, &x);
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, x));
                }
            }
        }
    });
    best.ok_or_else(|| Error::Unsupported("no feasible vertex found".into()))
}

/// Raw data access for oracle cross-checks: regenerate the rows and rhs
/// that `make_lasso_lad` / `make_l1_regression` built from this seed.
pub fn regenerate_lad_data(m: usize, n: usize, seed: u64, consistent: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let xbar: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
        .collect();
    let b: Vec<f64> = if consistent {
        rows.iter()
            .map(|a| a.iter().zip(&xbar).map(|(ai, xi)| ai * xi).sum())
            .collect()
    } else {
        (0..m).map(|_| rng.next_gaussian()).collect()
    };
    (rows, b)
}

/// Rows/rhs as generated by `make_lasso_lad` (no hidden xbar draw).
pub fn regenerate_lasso_data(m: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.next_gaussian()).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.next_gaussian()).collect();
    (rows, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_instance() {
        // f(x) = (|x| + |x-1| + |x-2|)/3: optimum at the median x = 1.
        let rows = vec![vec![1.0], vec![1.0], vec![1.0]];
        let b = vec![0.0, 1.0, 2.0];
        let (fstar, xstar) = lad_breakpoint_optimum(&rows, &b).unwrap();
        assert!((xstar[0] - 1.0).abs() < 1e-12);
        assert!((fstar - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_system_has_zero_optimum() {
        let (obj, spec) = make_l1_regression(10, 2, 21, true).unwrap();
        let opt = spec.optimum.unwrap();
        assert!(opt.value.abs() < 1e-10, "f* = {}", opt.value);
        let x = BlockedVector::dense(opt.point.clone());
        assert!(obj.eval_full_value(&x).unwrap() < 1e-10);
    }

    #[test]
    fn seeded_instance_is_reproducible() {
        let (_, s1) = make_l1_regression(50, 2, 7, false).unwrap();
        let (_, s2) = make_l1_regression(50, 2, 7, false).unwrap();
        let (o1, o2) = (s1.optimum.unwrap(), s2.optimum.unwrap());
        assert_eq!(o1.value.to_bits(), o2.value.to_bits());
        assert_eq!(o1.point, o2.point);
    }

    #[test]
    fn enumeration_value_is_attained_and_upper_bounds_random_probes() {
        let (obj, spec) = make_l1_regression(50, 2, 7, false).unwrap();
        let opt = spec.optimum.unwrap();
        let xstar = BlockedVector::dense(opt.point.clone());
        let at_vertex = obj.eval_full_value(&xstar).unwrap();
        assert!((at_vertex - opt.value).abs() < 1e-12);
        // No probe from a coarse random cloud beats the enumerated value.
        let mut rng = Rng::new(1234);
        for _ in 0..2000 {
            let x = BlockedVector::dense(vec![
                4.0 * rng.next_gaussian(),
                4.0 * rng.next_gaussian(),
            ]);
            assert!(obj.eval_full_value(&x).unwrap() >= opt.value - 1e-12);
        }
    }

    #[test]
    fn enumeration_refuses_large_n() {
        let rows = vec![vec![1.0, 0.0, 0.0, 0.0]; 5];
        let b = vec![0.0; 5];
        assert!(lad_breakpoint_optimum(&rows, &b).is_err());
    }

    #[test]
    fn relu_net_hand_computed_scalar_case() {
        // W1 = 1, W2 = 1, x = 1: f = 1/2, element (1, 1).
        let oracle = ReluNetOracle::new(1, 1, 1, vec![1.0]).unwrap();
        let w = BlockedVector::new(vec![vec![1.0], vec![1.0]]);
        let (f, g) = oracle.eval(&w).unwrap();
        assert_eq!(f, 0.5);
        assert_eq!(g.block(0), &[1.0]);
        assert_eq!(g.block(1), &[1.0]);
    }

    #[test]
    fn relu_net_kink_rows_are_zeroed() {
        // One hidden unit with W1 x = 0: its W1-row element must be zero.
        let oracle = ReluNetOracle::new(2, 2, 1, vec![1.0, -1.0]).unwrap();
        // First hidden row (1,1) gives z_0 = 0; second row (2,1) gives z_1 = 1.
        let w = BlockedVector::new(vec![vec![1.0, 1.0, 2.0, 1.0], vec![1.0, 1.0]]);
        let (_, g) = oracle.eval(&w).unwrap();
        assert_eq!(&g.block(0)[0..2], &[0.0, 0.0]);
        assert!(g.block(0)[2..4].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn relu_net_zero_output_layer_is_stationary() {
        let oracle = ReluNetOracle::new(3, 4, 2, vec![0.3, -0.7, 1.1]).unwrap();
        let mut w = BlockedVector::zeros(&[12, 8]);
        for (i, v) in w.blocks_mut()[0].iter_mut().enumerate() {
            *v = 0.1 * (i as f64 + 1.0);
        }
        let (f, g) = oracle.eval(&w).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn relu_net_matches_finite_differences_at_random_smooth_points() {
        let (oracle, _) = make_relu_net(3, 4, 2, 77).unwrap();
        let mut rng = Rng::new(3);
        let mut checked = 0;
        'outer: for _ in 0..200 {
            if checked >= 100 {
                break;
            }
            let w = BlockedVector::new(vec![
                (0..12).map(|_| rng.next_gaussian()).collect(),
                (0..8).map(|_| rng.next_gaussian()).collect(),
            ]);
            // Stay away from the kink set.
            let w1 = w.block(0);
            for i in 0..4 {
                let z: f64 = (0..3).map(|k| w1[i * 3 + k] * oracle.input()[k]).sum();
                if z.abs() < 1e-3 {
                    continue 'outer;
                }
            }
            let (_, g) = oracle.eval(&w).unwrap();
            let h = 1e-6;
            let mut flat = w.to_flat();
            for j in 0..flat.len() {
                let orig = flat[j];
                flat[j] = orig + h;
                let fp = oracle
                    .eval(&BlockedVector::from_flat(&[12, 8], &flat).unwrap())
                    .unwrap()
                    .0;
                flat[j] = orig - h;
                let fm = oracle
                    .eval(&BlockedVector::from_flat(&[12, 8], &flat).unwrap())
                    .unwrap()
                    .0;
                flat[j] = orig;
                let fd = (fp - fm) / (2.0 * h);
                let gj = g.to_flat()[j];
                assert!(
                    (fd - gj).abs() <= 1e-4 * (1.0 + gj.abs()),
                    "coordinate {j}: fd {fd} vs element {gj}"
                );
            }
            checked += 1;
        }
        assert!(checked >= 50, "only {checked} smooth points checked");
    }

    #[test]
    fn l1_components_match_finite_differences_off_kinks() {
        let (obj, _) = make_l1_regression(8, 2, 19, false).unwrap();
        let mut rng = Rng::new(4);
        let mut checked = 0;
        while checked < 100 {
            let x = BlockedVector::dense(vec![2.0 * rng.next_gaussian(), 2.0 * rng.next_gaussian()]);
            let i = rng.next_below(8) as usize;
            let (v, d) = obj.eval_component(i, &x).unwrap();
            // Skip points within 1e-7 of this component's kink.
            if v < 1e-7 {
                continue;
            }
            let fd = crate::check::finite_difference_gradient(
                &|p| obj.eval_component(i, p).unwrap().0,
                &x,
                1e-6,
            );
            assert!(
                fd.dist(&d) <= 1e-4 * (1.0 + d.norm()),
                "component {i}: fd gap {}",
                fd.dist(&d)
            );
            checked += 1;
        }
    }

    #[test]
    fn nonregular_scalar_matches_finite_differences_off_kink() {
        let (obj, _) = make_nonregular_scalar();
        let mut rng = Rng::new(6);
        let mut checked = 0;
        while checked < 100 {
            let u = 3.0 * rng.next_gaussian();
            if u.abs() < 1e-7 {
                continue;
            }
            let x = BlockedVector::dense(vec![u]);
            let (_, d) = obj.eval_full(&x).unwrap();
            let fd = crate::check::finite_difference_gradient(
                &|p| obj.eval_full_value(p).unwrap(),
                &x,
                1e-6,
            );
            assert!(fd.dist(&d) <= 1e-4 * (1.0 + d.norm()));
            checked += 1;
        }
    }

    #[test]
    fn nonregular_scalar_values() {
        let (obj, spec) = make_nonregular_scalar();
        let at = |v: f64| obj.eval_full(&BlockedVector::dense(vec![v])).unwrap();
        let (f1, d1) = at(1.0);
        assert_eq!(f1, 1.0);
        assert_eq!(d1.block(0), &[1.0]);
        let (f0, d0) = at(0.0);
        assert_eq!(f0, 1.0);
        assert_eq!(d0.block(0), &[0.0]); // stationary for the selection
        let opt = spec.optimum.unwrap();
        let (fmin, _) = at(0.5);
        assert_eq!(fmin, opt.value);
        // 1-D grid confirms the stored optimum.
        let grid_best = (0..40_001)
            .map(|i| -2.0 + 4.0 * i as f64 / 40_000.0)
            .map(|v| at(v).0)
            .fold(f64::INFINITY, f64::min);
        assert!((grid_best - 0.75).abs() < 1e-8);
    }

    #[test]
    fn lasso_zero_lambda_reduces_to_lad() {
        let (_, reg, cons, spec) = make_lasso_lad(12, 2, 0.0, 5).unwrap();
        assert_eq!(reg, Regularizer::Zero);
        assert_eq!(cons, ConstraintSet::WholeSpace);
        let (rows, b) = regenerate_lasso_data(12, 2, 5);
        let (fstar, _) = lad_breakpoint_optimum(&rows, &b).unwrap();
        assert_eq!(spec.optimum.unwrap().value.to_bits(), fstar.to_bits());
    }

    #[test]
    fn lasso_large_lambda_zero_is_optimal() {
        let (rows, b) = regenerate_lasso_data(10, 2, 3);
        let lambda = 100.0;
        let (fstar, xstar) = lasso_vertex_optimum(&rows, &b, lambda).unwrap();
        assert_eq!(xstar, vec![0.0, 0.0]);
        assert!((fstar - lasso_value(&rows, &b, lambda, &[0.0, 0.0])).abs() < 1e-15);
        // The residual interval at the origin absorbs the gradient: with
        // the L1 interval [-lambda, lambda] plus the nonnegativity cone,
        // stationarity holds exactly at 0.
        let obj = l1_regression_from_data(rows, b).unwrap();
        let x0 = BlockedVector::dense(vec![0.0, 0.0]);
        let (_, g) = obj.eval_full(&x0).unwrap();
        let res = crate::prox::min_norm_residual(
            &g,
            &BlockedVector::dense(vec![0.0, 0.0]),
            &Regularizer::l1(lambda).unwrap(),
            &ConstraintSet::NonNeg,
            &x0,
        );
        assert_eq!(res, 0.0);
    }

    #[test]
    fn grid_oracle_agrees_with_vertex_enumeration() {
        // The stored acceptance instance: m=20, n=2, lambda=0.1, seed=3.
        let (_, _, _, spec) = make_lasso_lad(20, 2, 0.1, 3).unwrap();
        let grid = spec.optimum.unwrap();
        let (rows, b) = regenerate_lasso_data(20, 2, 3);
        let (vertex_val, _) = lasso_vertex_optimum(&rows, &b, 0.1).unwrap();
        assert!(
            (grid.value - vertex_val).abs() <= 1e-5,
            "grid {} vs vertex {}",
            grid.value,
            vertex_val
        );
        // Grid value can only sit above the exact optimum.
        assert!(grid.value >= vertex_val - 1e-12);
    }

    #[test]
    fn quadratic_eval() {
        let (obj, _) = make_quadratic(vec![2]);
        let x = BlockedVector::dense(vec![3.0, 4.0]);
        let (f, g) = obj.eval_full(&x).unwrap();
        assert_eq!(f, 12.5);
        assert_eq!(g, x);
    }
}
