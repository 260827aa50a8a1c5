//! Measured decay rates: the weighted `L¹ → L∞` size of the propagator for
//! large `t`, the small-`λ` behavior of the spectral density in weighted
//! Hilbert–Schmidt norm, and weighted `L² → L²` decay of the evolution.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Checked, Error, Result, Warning};
use crate::operator::{
    d_lambda_scaled_matrix, e0_matrix, e1_scaled_matrix, scaled_density_matrix, weight, Grid,
    KernelEntry, KernelMatrix, OperatorParams, PanelPlan, WaveFunction,
};
use crate::propagator::{evolve_onto, spectral_radius, support_radius, EvolvePlan};
use crate::specfun::jn;

/// Least-squares line through `(ln variable, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Fitted value at `variable = 1`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerLawFit> {
    if samples.len() < 5 {
        return Err(Error::Degenerate(format!(
            "{} samples; a power-law fit needs at least 5",
            samples.len()
        )));
    }
    if let Some(&(v, y)) = samples
        .iter()
        .find(|(v, y)| !(*v > 0.0 && *y > 0.0 && v.is_finite() && y.is_finite()))
    {
        return Err(Error::Degenerate(format!(
            "sample ({v}, {y}) is not positive and finite"
        )));
    }
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|&(v, y)| (v.ln(), y.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all variables are equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    // flat data leaves only rounding in ss_tot
    let flat = 1e-24 * pts.iter().map(|p| p.1 * p.1).sum::<f64>();
    let r_squared = if ss_tot <= flat {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).max(0.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        n_points: pts.len(),
    })
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n as f64 - 1.0)).exp())
        .collect()
}

/// Settings of a dispersive or threshold scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub alpha: f64,
    pub s: f64,
    /// Scan range of `t` (dispersive) or `λ` (threshold).
    pub variable_min: f64,
    pub variable_max: f64,
    pub n_samples: usize,
    /// Dispersive: initial sup-search radius (default `10√(2t)`, doubled until
    /// the boundary check passes). Threshold: truncation radius (default `10⁴/√λ`).
    pub x_max: Option<f64>,
    /// Dispersive: points per axis of the geometric search grid.
    pub grid_n: usize,
    /// Threshold: quadrature panels per oscillation wavelength `2π/√λ`.
    pub panels_per_wavelength: f64,
}

impl ScanConfig {
    pub fn dispersive(alpha: f64, s: f64, t_min: f64, t_max: f64, n: usize) -> Self {
        ScanConfig {
            alpha,
            s,
            variable_min: t_min,
            variable_max: t_max,
            n_samples: n,
            x_max: None,
            grid_n: 600,
            panels_per_wavelength: 8.0,
        }
    }

    pub fn threshold(alpha: f64, s: f64, lambda_min: f64, lambda_max: f64, n: usize) -> Self {
        ScanConfig {
            variable_min: lambda_min,
            variable_max: lambda_max,
            ..ScanConfig::dispersive(alpha, s, lambda_min, lambda_max, n)
        }
    }

    pub fn params(&self) -> Result<OperatorParams> {
        OperatorParams::new(self.alpha)
    }

    pub fn samples(&self) -> Vec<f64> {
        log_space(self.variable_min, self.variable_max, self.n_samples)
    }

    fn validate_range(&self) -> Result<()> {
        if !(self.variable_min > 0.0 && self.variable_max > self.variable_min) {
            return Err(Error::Precondition(format!(
                "scan range must satisfy 0 < min < max (got {} .. {})",
                self.variable_min, self.variable_max
            )));
        }
        if self.n_samples < 5 {
            return Err(Error::Precondition(
                "a scan needs at least 5 samples".into(),
            ));
        }
        Ok(())
    }

    /// Checks `0 ≤ s ≤ ν + 1/2`.
    pub fn validate_dispersive(&self) -> Result<OperatorParams> {
        let params = self.params()?;
        check_dispersive_s(params, self.s)?;
        self.validate_range()?;
        if self.grid_n < 10 {
            return Err(Error::Precondition("grid_n must be at least 10".into()));
        }
        Ok(params)
    }

    /// Checks `s > ν + 1` and `λ_max ≤ 1`.
    pub fn validate_threshold(&self) -> Result<OperatorParams> {
        let params = self.params()?;
        let nu = params.nu();
        if !(self.s > nu + 1.0) {
            return Err(Error::Precondition(format!(
                "s must exceed ν + 1 = {:.6} (got {})",
                nu + 1.0,
                self.s
            )));
        }
        self.validate_range()?;
        if self.variable_max > 1.0 {
            return Err(Error::Precondition(
                "threshold scans need lambda_max <= 1".into(),
            ));
        }
        if !(self.panels_per_wavelength >= 1.0) {
            return Err(Error::Precondition(
                "panels_per_wavelength must be >= 1".into(),
            ));
        }
        Ok(params)
    }
}

fn check_dispersive_s(params: OperatorParams, s: f64) -> Result<()> {
    let top = params.nu() + 0.5;
    if !(s >= 0.0 && s <= top * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "s must lie in [0, ν + 1/2] = [0, {top:.6}] (got {s})"
        )));
    }
    Ok(())
}

/// Samples of a scan and the power law fitted to them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub samples: Vec<(f64, f64)>,
    pub fit: PowerLawFit,
}

/// `(1/(2t)) max ρ(x)^{-s} √(xy) |J_ν(xy/(2t))| ρ(y)^{-s}` over pairs of grid points.
///
/// Warns when the maximum over pairs touching the outermost point is not
/// below 10% of the overall maximum. At `s = 0` the weighted kernel does not
/// decay, so the check is skipped.
pub fn dispersive_sup(
    params: OperatorParams,
    s: f64,
    t: f64,
    search_grid: &Grid,
) -> Result<Checked<f64>> {
    check_dispersive_s(params, s)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(
            "dispersive_sup",
            format!("t = {t} must be > 0"),
        ));
    }
    let nu = params.nu();
    let pts = search_grid.points();
    let n = pts.len();
    let a: Vec<f64> = pts.iter().map(|&x| weight(s, x) * x.sqrt()).collect();
    let mut best = 0.0_f64;
    let mut edge = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let v = a[i] * a[j] * jn(nu, pts[i] * pts[j] / (2.0 * t)).abs();
            best = best.max(v);
            if j == n - 1 {
                edge = edge.max(v);
            }
        }
    }
    let scale = 0.5 / t;
    let mut warnings = Vec::new();
    if s > 0.0 && edge >= 0.1 * best {
        warnings.push(Warning::BoundaryDominated {
            boundary_value: edge * scale,
            max_value: best * scale,
        });
    }
    Ok(Checked {
        value: best * scale,
        warnings,
    })
}

/// Geometric sup-search grid on `[1e-3, x_max]`.
pub fn search_grid(x_max: f64, n: usize) -> Result<Grid> {
    Grid::geometric(1e-3, x_max, n)
}

/// [`dispersive_sup`] with the search radius doubled until the boundary check passes.
/// Returns the value and the radius used.
pub fn dispersive_sup_auto(
    params: OperatorParams,
    s: f64,
    t: f64,
    x_start: Option<f64>,
    n: usize,
) -> Result<Checked<(f64, f64)>> {
    let mut x_max = x_start.unwrap_or(10.0 * (2.0 * t).sqrt()).max(1.0);
    let mut last = None;
    for _ in 0..20 {
        let r = dispersive_sup(params, s, t, &search_grid(x_max, n)?)?;
        if r.is_clean() {
            return Ok(r.map(|v| (v, x_max)));
        }
        last = Some(r);
        x_max *= 2.0;
    }
    let r = last.expect("loop ran");
    Ok(r.map(|v| (v, x_max / 2.0)))
}

/// `dispersive_sup` over log-spaced `t` with a power-law fit.
pub fn dispersive_scan(config: &ScanConfig) -> Result<Checked<Scan>> {
    let params = config.validate_dispersive()?;
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for t in config.samples() {
        let r = dispersive_sup_auto(params, config.s, t, config.x_max, config.grid_n)?;
        samples.push((t, r.value.0));
        warnings.extend(r.warnings);
    }
    let fit = fit_power_law(&samples)?;
    Ok(Checked {
        value: Scan { samples, fit },
        warnings,
    })
}

/// `(∬ |K(x,y)|² ρ(x)^{-2s} ρ(y)^{-2s} dx dy)^{1/2}` by the grid quadrature.
pub fn weighted_hs_norm<T: KernelEntry>(kernel: &KernelMatrix<T>, s: f64) -> f64 {
    let g = kernel.grid();
    let w: Vec<f64> = g
        .points()
        .iter()
        .zip(g.weights())
        .map(|(&x, &q)| q * weight(2.0 * s, x))
        .collect();
    let n = w.len();
    let entries = kernel.entries();
    let mut total = 0.0;
    for i in 0..n {
        let row = &entries[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for (e, wj) in row.iter().zip(&w) {
            acc += e.abs2() * wj;
        }
        total += w[i] * acc;
    }
    total.sqrt()
}

/// Fraction of the squared weighted HS norm carried by rows with `x > x_cut`.
fn hs_tail_fraction(kernel: &KernelMatrix<f64>, s: f64, x_cut: f64) -> f64 {
    let g = kernel.grid();
    let w: Vec<f64> = g
        .points()
        .iter()
        .zip(g.weights())
        .map(|(&x, &q)| q * weight(2.0 * s, x))
        .collect();
    let n = w.len();
    let (mut total, mut tail) = (0.0, 0.0);
    for i in 0..n {
        let acc: f64 = (0..n).map(|j| kernel.get(i, j).powi(2) * w[j]).sum::<f64>() * w[i];
        total += acc;
        if g.points()[i] > x_cut {
            tail += acc;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Quadrature grid for kernels at spectral parameter `lambda`: panels grow
/// geometrically from `0.25` until they reach `1/panels_per_wavelength` of the
/// wavelength `2π/√λ`, stay there up to `100/√λ`, then grow by 20% per panel
/// up to the truncation radius.
pub fn threshold_grid(config: &ScanConfig, lambda: f64) -> Result<Grid> {
    let k = lambda.sqrt();
    let h_cap = (2.0 * PI / k / config.panels_per_wavelength).max(0.25);
    let plan = PanelPlan {
        x_max: config.x_max.unwrap_or(1e4 / k),
        h_min: 0.25,
        growth: 0.25,
        h_cap,
        cap_until: 100.0 / k,
        far_growth: 0.2,
        order: 8,
    };
    Grid::from_plan(&plan)
}

/// Tail fraction above which a threshold sample warns.
pub const HS_TAIL_LIMIT: f64 = 1e-3;

/// Kernels whose weighted HS norm is tracked as `λ → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKernel {
    /// `λ^{-ν}E(λ) - E₀`.
    Remainder,
    /// `λ^{-ν}E(λ)`, which tends to `E₀`.
    ScaledDensity,
    /// `∂_λ(λ^{-ν}E(λ))`.
    Derivative,
}

/// Weighted HS norm of `kind` at a single `lambda` on [`threshold_grid`].
pub fn threshold_norm(
    config: &ScanConfig,
    kind: ThresholdKernel,
    lambda: f64,
) -> Result<Checked<f64>> {
    let params = config.validate_threshold()?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Precondition(format!(
            "lambda must lie in (0, 1] (got {lambda})"
        )));
    }
    let grid = Arc::new(threshold_grid(config, lambda)?);
    let x_cut = 0.5 * grid.x_max();
    let kernel = match kind {
        ThresholdKernel::Remainder => e1_scaled_matrix(params, lambda, grid)?,
        ThresholdKernel::ScaledDensity => scaled_density_matrix(params, lambda, grid)?,
        ThresholdKernel::Derivative => d_lambda_scaled_matrix(params, lambda, grid)?,
    };
    let tail = hs_tail_fraction(&kernel, config.s, x_cut);
    let mut warnings = Vec::new();
    if tail > HS_TAIL_LIMIT {
        warnings.push(Warning::Truncation {
            what: "weighted Hilbert-Schmidt integrand",
            tail_fraction: tail,
            limit: HS_TAIL_LIMIT,
        });
    }
    Ok(Checked {
        value: weighted_hs_norm(&kernel, config.s),
        warnings,
    })
}

fn norm_scan(config: &ScanConfig, kind: ThresholdKernel, lambdas: &[f64]) -> Result<Checked<Scan>> {
    config.validate_threshold()?;
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for &lambda in lambdas {
        let r = threshold_norm(config, kind, lambda)?;
        samples.push((lambda, r.value));
        warnings.extend(r.warnings);
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fit = fit_power_law(&samples)?;
    Ok(Checked {
        value: Scan { samples, fit },
        warnings,
    })
}

/// Weighted HS norm of `λ^{-ν}E(λ) - E₀` against `λ`.
pub fn threshold_scan(config: &ScanConfig, lambdas: &[f64]) -> Result<Checked<Scan>> {
    norm_scan(config, ThresholdKernel::Remainder, lambdas)
}

/// Weighted HS norm of `λ^{-ν}E(λ)` against `λ`; tends to that of `E₀`.
pub fn scaled_density_scan(config: &ScanConfig, lambdas: &[f64]) -> Result<Checked<Scan>> {
    norm_scan(config, ThresholdKernel::ScaledDensity, lambdas)
}

/// Weighted HS norm of `∂_λ(λ^{-ν}E(λ))` against `λ`.
pub fn derivative_norm_scan(config: &ScanConfig, lambdas: &[f64]) -> Result<Checked<Scan>> {
    norm_scan(config, ThresholdKernel::Derivative, lambdas)
}

/// Weighted HS norm of `E₀` on the grid used for `lambda`.
pub fn e0_weighted_norm(config: &ScanConfig, lambda: f64) -> Result<f64> {
    let params = config.validate_threshold()?;
    let grid = Arc::new(threshold_grid(config, lambda)?);
    Ok(weighted_hs_norm(&e0_matrix(params, grid), config.s))
}

/// The probe family of [`l2_weighted_decay`]: `x^{ν+1/2}` times a Gaussian pair
/// centered at `±c` with width `w`, for `c ∈ {1, 2, 4, 6, 8}`, `w ∈ {0.5, 1, 2}`.
/// The symmetric pair keeps each probe smooth in the operator's sense at 0.
pub fn decay_probes(params: OperatorParams) -> Vec<WaveFunction> {
    let mut out = Vec::new();
    for &c in &[1.0, 2.0, 4.0, 6.0, 8.0] {
        for &w in &[0.5, 1.0, 2.0] {
            out.push(bump_probe(params, c, w));
        }
    }
    out
}

pub fn bump_probe(params: OperatorParams, c: f64, w: f64) -> WaveFunction {
    let nu = params.nu();
    let x_max = c + 12.0 * w + 4.0 * (nu + 1.0);
    let grid =
        Arc::new(Grid::panels(x_max, (x_max / 0.25).ceil() as usize, 10).expect("valid panels"));
    WaveFunction::from_fn(grid, move |x| {
        let g = (-(x - c).powi(2) / (2.0 * w * w)).exp() + (-(x + c).powi(2) / (2.0 * w * w)).exp();
        Complex64::new(x.powf(nu + 0.5) * g, 0.0)
    })
}

/// `max_probes ‖ρ^{-β} e^{-itH} φ‖` with each probe scaled to `‖ρ^β φ‖ = 1`,
/// a lower bound for `‖ρ^{-β} e^{-itH} ρ^{-β}‖_{L²→L²}`, against `t`.
pub fn l2_weighted_decay(
    params: OperatorParams,
    s: f64,
    beta: f64,
    t_list: &[f64],
    probes: &[WaveFunction],
) -> Result<Checked<Scan>> {
    check_dispersive_s(params, s)?;
    if !(beta > s + 0.5) {
        return Err(Error::Precondition(format!(
            "beta must exceed s + 1/2 = {} (got {beta})",
            s + 0.5
        )));
    }
    if probes.is_empty() {
        return Err(Error::Precondition("at least one probe is required".into()));
    }
    if t_list.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Precondition("every t must be > 0".into()));
    }
    let mut warnings = Vec::new();
    let mut prepared = Vec::new();
    for probe in probes {
        let norm = probe.weighted_norm(beta);
        if norm == 0.0 {
            return Err(Error::Degenerate("zero probe".into()));
        }
        let phi = probe.scaled(1.0 / norm);
        let k_max = spectral_radius(params, &phi)?;
        let support = support_radius(&phi, 1e-14);
        prepared.push((phi, k_max, support));
    }
    let mut samples = Vec::new();
    for &t in t_list {
        let mut best = 0.0_f64;
        for (phi, k_max, support) in &prepared {
            let x_max = support + 2.0 * t * k_max + 5.0;
            let width = (PI / (2.0 * k_max.max(1.0))).min(0.5);
            let out = Arc::new(Grid::panels(x_max, (x_max / width).ceil() as usize, 10)?);
            let ev = evolve_onto(params, phi, t, out, EvolvePlan::default())?;
            warnings.extend(ev.warnings);
            best = best.max(ev.value.weighted_norm(-beta));
        }
        samples.push((t, best));
    }
    let fit = fit_power_law(&samples)?;
    Ok(Checked {
        value: Scan { samples, fit },
        warnings,
    })
}
