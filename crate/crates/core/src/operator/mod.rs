//! The operator `H = -d²/dx² + α/x²` on the half-line with a Dirichlet
//! condition at the origin, and its closed-form spectral kernels.
//!
//! All kernels are symmetric in `(x, y)`. The matrix builders evaluate the
//! one-variable factors once per grid point and multiply, using exactly the
//! same products as the pointwise functions, so both agree bit for bit.

mod grid;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;

pub use grid::{Grid, KernelEntry, KernelMatrix, Panel, PanelPlan, WaveFunction};

use crate::error::{Error, Result};
use crate::specfun::{gamma_unchecked, jn, jyn, NU_MAX};

/// Coupling `α` of the inverse-square potential. The Bessel order
/// `ν = √(1/4 + α)` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    alpha: f64,
}

impl OperatorParams {
    pub fn new(alpha: f64) -> Result<Self> {
        nu_from_alpha(alpha)?;
        Ok(OperatorParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        // alpha was validated by `new`
        (0.25 + self.alpha).max(0.0).sqrt()
    }
}

pub fn nu_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha >= -0.25) || !alpha.is_finite() {
        return Err(Error::domain(
            "nu_from_alpha",
            format!("alpha = {alpha} must be >= -1/4"),
        ));
    }
    let nu = (0.25 + alpha).sqrt();
    if nu > NU_MAX {
        return Err(Error::domain(
            "nu_from_alpha",
            format!("alpha = {alpha} gives nu = {nu} above the supported {NU_MAX}"),
        ));
    }
    Ok(nu)
}

/// `ρ(x)^{-s}` with `ρ(x) = 1 + x`.
#[inline]
pub fn weight(s: f64, x: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (1.0 + x).powf(-s)
    }
}

/// Canonical argument order, so that `K(x, y)` and `K(y, x)` round identically.
#[inline]
fn ordered(x: f64, y: f64) -> (f64, f64) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

fn check_positive(func: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            func,
            format!("{name} = {v} must be finite and > 0"),
        ))
    }
}

/// `√x J_ν(√λ x)`, the regular solution.
#[inline]
fn regular(nu: f64, k: f64, x: f64) -> f64 {
    x.sqrt() * jn(nu, k * x)
}

/// `√x (J_ν + iY_ν)(√λ x)`, the outgoing solution.
#[inline]
fn outgoing(nu: f64, k: f64, x: f64) -> Complex64 {
    let (j, y) = jyn(nu, k * x);
    Complex64::new(j, y) * x.sqrt()
}

/// The regular and outgoing solutions `(u1, u2)` of `-u'' + (α/x²) u = λ u`.
pub fn eigenfunctions(params: OperatorParams, lambda: f64, x: f64) -> Result<(f64, Complex64)> {
    check_positive("eigenfunctions", "lambda", lambda)?;
    check_positive("eigenfunctions", "x", x)?;
    let k = lambda.sqrt();
    Ok((regular(params.nu(), k, x), outgoing(params.nu(), k, x)))
}

#[inline]
fn resolvent_from_factors(u1_lo: f64, u2_hi: Complex64) -> Complex64 {
    Complex64::new(0.0, FRAC_PI_2) * u1_lo * u2_hi
}

/// Boundary value of the resolvent kernel on the positive real axis.
pub fn resolvent_kernel(params: OperatorParams, lambda: f64, x: f64, y: f64) -> Result<Complex64> {
    check_positive("resolvent_kernel", "lambda", lambda)?;
    check_positive("resolvent_kernel", "x", x)?;
    check_positive("resolvent_kernel", "y", y)?;
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let k = lambda.sqrt();
    let nu = params.nu();
    Ok(resolvent_from_factors(
        regular(nu, k, lo),
        outgoing(nu, k, hi),
    ))
}

/// Spectral density kernel `E(λ, x, y) = (1/2)√(xy) J_ν(√λ x) J_ν(√λ y)`.
pub fn spectral_density_kernel(params: OperatorParams, lambda: f64, x: f64, y: f64) -> Result<f64> {
    check_positive("spectral_density_kernel", "lambda", lambda)?;
    check_positive("spectral_density_kernel", "x", x)?;
    check_positive("spectral_density_kernel", "y", y)?;
    let (x, y) = ordered(x, y);
    let k = lambda.sqrt();
    let nu = params.nu();
    Ok(0.5 * regular(nu, k, x) * regular(nu, k, y))
}

/// `x^{ν+1/2} / (2^ν Γ(ν+1))`, the small-`λ` limit of `λ^{-ν/2} √x J_ν(√λ x)`.
#[inline]
fn threshold_factor(nu: f64, x: f64) -> f64 {
    x.powf(nu + 0.5) / (2f64.powf(nu) * gamma_unchecked(nu + 1.0))
}

/// Leading threshold kernel `E₀(x, y) = lim λ^{-ν} E(λ, x, y)
/// = (xy)^{ν+1/2} / (2^{2ν+1} Γ(ν+1)²)`.
pub fn e0_kernel(params: OperatorParams, x: f64, y: f64) -> Result<f64> {
    check_positive("e0_kernel", "x", x)?;
    check_positive("e0_kernel", "y", y)?;
    let (x, y) = ordered(x, y);
    let nu = params.nu();
    Ok(0.5 * threshold_factor(nu, x) * threshold_factor(nu, y))
}

/// The rank-one factor `g` with `E₀(x, y) = g(x) g(y)`.
pub fn e0_factor(params: OperatorParams, x: f64) -> Result<f64> {
    check_positive("e0_factor", "x", x)?;
    Ok(std::f64::consts::FRAC_1_SQRT_2 * threshold_factor(params.nu(), x))
}

/// `(λ^{-ν/2} √x J_ν(√λ x), remainder)` where the remainder is the first
/// factor minus its threshold limit. Small arguments sum the series tail
/// directly so the remainder carries no cancellation error.
fn scaled_regular_split(nu: f64, lambda: f64, x: f64) -> (f64, f64) {
    let g0 = threshold_factor(nu, x);
    let z = lambda.sqrt() * x;
    if z <= 2.0 {
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut tail = 0.0;
        for k in 1..200 {
            term *= q / (k as f64 * (nu + k as f64));
            tail += term;
            if term.abs() <= 1e-17 * tail.abs() {
                break;
            }
        }
        let rem = g0 * tail;
        (g0 + rem, rem)
    } else {
        let full = lambda.powf(-0.5 * nu) * regular(nu, lambda.sqrt(), x);
        (full, full - g0)
    }
}

#[inline]
fn e1_from_split(gx: f64, rx: f64, gy: f64, ry: f64) -> f64 {
    // 1/2 (g0x + rx)(g0y + ry) - 1/2 g0x g0y
    let g0x = gx - rx;
    let g0y = gy - ry;
    0.5 * (g0x * ry + rx * g0y + rx * ry)
}

/// Scaled threshold remainder `λ^{-ν} E(λ, x, y) - E₀(x, y)`.
pub fn e1_scaled_kernel(params: OperatorParams, lambda: f64, x: f64, y: f64) -> Result<f64> {
    check_positive("e1_scaled_kernel", "lambda", lambda)?;
    check_positive("e1_scaled_kernel", "x", x)?;
    check_positive("e1_scaled_kernel", "y", y)?;
    let (x, y) = ordered(x, y);
    let nu = params.nu();
    let (gx, rx) = scaled_regular_split(nu, lambda, x);
    let (gy, ry) = scaled_regular_split(nu, lambda, y);
    Ok(e1_from_split(gx, rx, gy, ry))
}

#[inline]
fn d_lambda_factor(nu: f64, k: f64, x: f64) -> f64 {
    x * x.sqrt() * jn(nu + 1.0, k * x)
}

#[inline]
fn d_lambda_combine(pre: f64, ax: f64, bx: f64, ay: f64, by: f64) -> f64 {
    pre * (bx * ay + by * ax)
}

/// `∂_λ (λ^{-ν} E(λ, x, y))`.
pub fn d_lambda_scaled_density(params: OperatorParams, lambda: f64, x: f64, y: f64) -> Result<f64> {
    check_positive("d_lambda_scaled_density", "lambda", lambda)?;
    check_positive("d_lambda_scaled_density", "x", x)?;
    check_positive("d_lambda_scaled_density", "y", y)?;
    let (x, y) = ordered(x, y);
    let nu = params.nu();
    let k = lambda.sqrt();
    let pre = -0.25 * lambda.powf(-nu - 0.5);
    Ok(d_lambda_combine(
        pre,
        regular(nu, k, x),
        d_lambda_factor(nu, k, x),
        regular(nu, k, y),
        d_lambda_factor(nu, k, y),
    ))
}

fn outer<T: KernelEntry>(grid: Arc<Grid>, f: impl Fn(usize, usize) -> T) -> KernelMatrix<T> {
    let n = grid.len();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // upper triangle computed, lower mirrored
            entries.push(if j >= i { f(i, j) } else { f(j, i) });
        }
    }
    KernelMatrix::from_entries(grid, entries).expect("square by construction")
}

/// `E(λ)` sampled on `grid × grid`.
pub fn density_matrix(
    params: OperatorParams,
    lambda: f64,
    grid: Arc<Grid>,
) -> Result<KernelMatrix<f64>> {
    check_positive("density_matrix", "lambda", lambda)?;
    let k = lambda.sqrt();
    let nu = params.nu();
    let a: Vec<f64> = grid.points().iter().map(|&x| regular(nu, k, x)).collect();
    Ok(outer(grid, |i, j| 0.5 * a[i] * a[j]))
}

/// `λ^{-ν} E(λ)` sampled on `grid × grid`.
pub fn scaled_density_matrix(
    params: OperatorParams,
    lambda: f64,
    grid: Arc<Grid>,
) -> Result<KernelMatrix<f64>> {
    check_positive("scaled_density_matrix", "lambda", lambda)?;
    let nu = params.nu();
    let g: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| scaled_regular_split(nu, lambda, x).0)
        .collect();
    Ok(outer(grid, |i, j| 0.5 * g[i] * g[j]))
}

pub fn e0_matrix(params: OperatorParams, grid: Arc<Grid>) -> KernelMatrix<f64> {
    let nu = params.nu();
    let g: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| threshold_factor(nu, x))
        .collect();
    outer(grid, |i, j| 0.5 * g[i] * g[j])
}

pub fn e1_scaled_matrix(
    params: OperatorParams,
    lambda: f64,
    grid: Arc<Grid>,
) -> Result<KernelMatrix<f64>> {
    check_positive("e1_scaled_matrix", "lambda", lambda)?;
    let nu = params.nu();
    let split: Vec<(f64, f64)> = grid
        .points()
        .iter()
        .map(|&x| scaled_regular_split(nu, lambda, x))
        .collect();
    Ok(outer(grid, |i, j| {
        e1_from_split(split[i].0, split[i].1, split[j].0, split[j].1)
    }))
}

pub fn d_lambda_scaled_matrix(
    params: OperatorParams,
    lambda: f64,
    grid: Arc<Grid>,
) -> Result<KernelMatrix<f64>> {
    check_positive("d_lambda_scaled_matrix", "lambda", lambda)?;
    let nu = params.nu();
    let k = lambda.sqrt();
    let pre = -0.25 * lambda.powf(-nu - 0.5);
    let a: Vec<f64> = grid.points().iter().map(|&x| regular(nu, k, x)).collect();
    let b: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| d_lambda_factor(nu, k, x))
        .collect();
    Ok(outer(grid, |i, j| {
        d_lambda_combine(pre, a[i], b[i], a[j], b[j])
    }))
}

/// Resolvent boundary value sampled on `grid × grid`.
pub fn resolvent_matrix(
    params: OperatorParams,
    lambda: f64,
    grid: Arc<Grid>,
) -> Result<KernelMatrix<Complex64>> {
    check_positive("resolvent_matrix", "lambda", lambda)?;
    let nu = params.nu();
    let k = lambda.sqrt();
    let u1: Vec<f64> = grid.points().iter().map(|&x| regular(nu, k, x)).collect();
    let u2: Vec<Complex64> = grid.points().iter().map(|&x| outgoing(nu, k, x)).collect();
    // grid points ascend, so for i <= j the point x_i is the smaller one
    Ok(outer(grid, |i, j| resolvent_from_factors(u1[i], u2[j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p(alpha: f64) -> OperatorParams {
        OperatorParams::new(alpha).unwrap()
    }

    /// Deterministic points in `(lo, hi)`.
    fn spread(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                lo + (hi - lo) * ((s >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect()
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_from_alpha(-0.25).unwrap(), 0.0);
        assert_eq!(nu_from_alpha(0.0).unwrap(), 0.5);
        assert_eq!(nu_from_alpha(2.0).unwrap(), 1.5);
        assert!(nu_from_alpha(-0.3).is_err());
        assert!(OperatorParams::new(f64::NAN).is_err());
        assert_eq!(p(2.0).nu(), 1.5);
        assert!(nu_from_alpha(0.1).unwrap() < nu_from_alpha(0.2).unwrap());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.0, 7.0), 1.0);
        assert_eq!(weight(1.0, 1.0), 0.5);
        assert_relative_eq!(weight(1.5, 3.0), 0.125, max_relative = 1e-15);
    }

    #[test]
    fn eigenfunction_examples() {
        let (u1, u2) = eigenfunctions(p(0.0), 1.0, FRAC_PI_2).unwrap();
        assert_relative_eq!(u1, 0.7978845608028654, max_relative = 1e-12);
        assert_relative_eq!(u2.re, 0.7978845608028654, max_relative = 1e-12);
        assert!(u2.im.abs() < 1e-15);
        let (small, _) = eigenfunctions(p(1.0), 1.0, 1e-8).unwrap();
        assert!(small.abs() < 1e-12);
        assert!(eigenfunctions(p(0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let r = resolvent_kernel(p(0.0), 1.0, 1.0, 2.0).unwrap();
        let want = Complex64::from_polar(1f64.sin(), 2.0);
        assert!((r - want).norm() < 1e-12);
        assert_relative_eq!(r.re, -0.350175, epsilon = 1e-6);
        assert_relative_eq!(r.im, 0.765147, epsilon = 1e-6);
        let r4 = resolvent_kernel(p(0.0), 4.0, 1.0, 1.0).unwrap();
        assert!((r4 - Complex64::from_polar(0.5 * 2f64.sin(), 2.0)).norm() < 1e-12);
        let a = resolvent_kernel(p(1.3), 2.0, 0.7, 3.1).unwrap();
        let b = resolvent_kernel(p(1.3), 2.0, 3.1, 0.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_examples() {
        let e = spectral_density_kernel(p(0.0), 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(e, 1f64.sin() * 2f64.sin() / PI, max_relative = 1e-12);
        assert_relative_eq!(e, 0.243554, epsilon = 1e-6);
        let d = spectral_density_kernel(p(0.0), PI * PI, 1.0, 1.0).unwrap();
        assert!(d.abs() < 1e-15);
        for &x in &[0.3, 1.0, 7.7, 40.0] {
            let diag = spectral_density_kernel(p(2.5), 1.7, x, x).unwrap();
            let j = jn(p(2.5).nu(), 1.7f64.sqrt() * x);
            assert!(diag >= 0.0);
            assert_relative_eq!(diag, 0.5 * x * j * j, max_relative = 1e-14);
        }
    }

    #[test]
    fn stone_consistency_on_random_points() {
        for &alpha in &[-0.25, -0.1, 0.0, 1.0, 6.0] {
            let xs = spread(20, 0.01, 30.0, 7);
            let ys = spread(20, 0.01, 30.0, 11);
            for &x in &xs {
                for &y in &ys {
                    let r = resolvent_kernel(p(alpha), 1.3, x, y).unwrap();
                    let e = spectral_density_kernel(p(alpha), 1.3, x, y).unwrap();
                    let scale = e.abs().max(1e-300);
                    assert!(
                        (r.im / PI - e).abs() <= 1e-12 * scale,
                        "alpha={alpha} x={x} y={y}"
                    );
                }
            }
        }
    }

    #[test]
    fn regular_solution_satisfies_ode() {
        let h = 1e-3;
        for &alpha in &[-0.2, 0.0, 1.0, 3.0] {
            let params = p(alpha);
            let u = |x: f64| eigenfunctions(params, 1.0, x).unwrap().0;
            let mut x = 0.5;
            while x <= 20.0 {
                let upp = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
                let residual = -upp + alpha / (x * x) * u(x) - u(x);
                assert!(
                    residual.abs() < 1e-6,
                    "alpha={alpha} x={x} residual={residual}"
                );
                x += 0.37;
            }
        }
    }

    #[test]
    fn density_scaling_covariance() {
        let c = 2.0;
        for &alpha in &[-0.25, 0.0, 1.0, 3.0] {
            for &(lam, x, y) in &[(1.0, 1.0, 2.0), (0.3, 5.0, 0.2), (2.2, 3.3, 3.4)] {
                let a = spectral_density_kernel(p(alpha), lam, x, y).unwrap();
                let b = c * spectral_density_kernel(p(alpha), c * c * lam, x / c, y / c).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn e0_values_and_rank_one() {
        let half = p(0.0);
        assert_relative_eq!(
            e0_kernel(half, 1.0, 1.0).unwrap(),
            1.0 / PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            e0_kernel(half, 2.0, 3.0).unwrap(),
            6.0 / PI,
            max_relative = 1e-14
        );
        assert_eq!(
            e0_kernel(half, 2.0, 3.0).unwrap(),
            e0_kernel(half, 3.0, 2.0).unwrap()
        );
        assert!(e0_kernel(half, 0.0, 1.0).is_err());
        for &alpha in &[-0.25, 0.0, 2.0, 5.0] {
            let q = p(alpha);
            let (x1, x2, y1, y2) = (0.4, 2.5, 1.1, 7.0);
            let e = |x, y| e0_kernel(q, x, y).unwrap();
            let det = e(x1, y1) * e(x2, y2) - e(x1, y2) * e(x2, y1);
            let scale = e(x1, y1) * e(x2, y2);
            assert!(det.abs() <= 1e-12 * scale);
            let g = |x| e0_factor(q, x).unwrap();
            assert_relative_eq!(g(x1) * g(y2), e(x1, y2), max_relative = 1e-14);
        }
    }

    #[test]
    fn e0_is_the_threshold_limit() {
        for &alpha in &[-0.25, 0.0, 2.0] {
            let q = p(alpha);
            let lam: f64 = 1e-12;
            let scaled = lam.powf(-q.nu()) * spectral_density_kernel(q, lam, 1.5, 0.8).unwrap();
            assert_relative_eq!(scaled, e0_kernel(q, 1.5, 0.8).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn e1_examples() {
        let q = p(0.0);
        let e0 = e0_kernel(q, 1.0, 1.0).unwrap();
        assert!(e1_scaled_kernel(q, 1e-8, 1.0, 1.0).unwrap().abs() < 1e-4 * e0);
        // at λ = 1: sin²(1)/π - 1/π
        let v = e1_scaled_kernel(q, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, -(1f64.cos().powi(2)) / PI, max_relative = 1e-12);
        for &(lam, x, y) in &[(0.5f64, 1.0, 2.0), (1e-3, 30.0, 0.1), (3.0, 0.2, 0.3)] {
            let full = lam.powf(-q.nu()) * spectral_density_kernel(q, lam, x, y).unwrap();
            let parts = e1_scaled_kernel(q, lam, x, y).unwrap() + e0_kernel(q, x, y).unwrap();
            assert!((full - parts).abs() <= 1e-12 * full.abs().max(parts.abs()));
        }
    }

    #[test]
    fn e1_shrinks_toward_threshold() {
        for &alpha in &[0.0, 2.0] {
            for &(x, y) in &[(1.0, 1.0), (2.0, 3.0), (0.5, 10.0)] {
                let vals: Vec<f64> = (2..=8)
                    .map(|k| {
                        e1_scaled_kernel(p(alpha), 10f64.powi(-k), x, y)
                            .unwrap()
                            .abs()
                    })
                    .collect();
                assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
            }
        }
    }

    #[test]
    fn d_lambda_matches_finite_difference() {
        for &alpha in &[0.0, 1.0, 2.0] {
            let q = p(alpha);
            for &(lam, x, y) in &[(1.0, 1.0, 1.0), (0.2, 2.0, 3.5), (2.0, 0.7, 1.9)] {
                let f = |l: f64| l.powf(-q.nu()) * spectral_density_kernel(q, l, x, y).unwrap();
                let h = 1e-5 * lam;
                let fd = (f(lam + h) - f(lam - h)) / (2.0 * h);
                let d = d_lambda_scaled_density(q, lam, x, y).unwrap();
                assert!(
                    (d - fd).abs() <= 1e-5 * d.abs(),
                    "alpha={alpha}: {d} vs {fd}"
                );
                assert_eq!(d, d_lambda_scaled_density(q, lam, y, x).unwrap());
            }
        }
    }

    #[test]
    fn matrices_match_pointwise_kernels_exactly() {
        let grid = Arc::new(Grid::panels(6.0, 3, 5).unwrap());
        let q = p(1.7);
        let lam = 0.9;
        let pts = grid.points().to_vec();
        let dm = density_matrix(q, lam, grid.clone()).unwrap();
        let rm = resolvent_matrix(q, lam, grid.clone()).unwrap();
        let e1 = e1_scaled_matrix(q, lam, grid.clone()).unwrap();
        let dl = d_lambda_scaled_matrix(q, lam, grid.clone()).unwrap();
        let e0 = e0_matrix(q, grid.clone());
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                assert_eq!(dm.get(i, j), spectral_density_kernel(q, lam, x, y).unwrap());
                assert_eq!(rm.get(i, j), resolvent_kernel(q, lam, x, y).unwrap());
                assert_eq!(e1.get(i, j), e1_scaled_kernel(q, lam, x, y).unwrap());
                assert_eq!(dl.get(i, j), d_lambda_scaled_density(q, lam, x, y).unwrap());
                assert_eq!(e0.get(i, j), e0_kernel(q, x, y).unwrap());
            }
        }
        assert_eq!(dm.asymmetry(), 0.0);
        assert_eq!(rm.asymmetry(), 0.0);
    }
}
