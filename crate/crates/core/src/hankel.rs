//! The Hankel pair that diagonalizes the operator:
//!
//! ```text
//! (U f)(p)      = ∫ f(x) √x J_ν(x√p) dx
//! (U⁻¹ g)(x)    = (1/2) ∫ g(p) √x J_ν(x√p) dp
//! ```
//!
//! `U H U⁻¹` is multiplication by `p`, so `e^{-itH} = U⁻¹ e^{-itp} U`.
//! The spectral quadrature runs over `k = √p` with `dp = 2k dk`, which keeps
//! the formulas above verbatim while resolving the `√p` edge at `p = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Checked, Error, Result, Warning};
use crate::operator::{Grid, OperatorParams, WaveFunction};
use crate::quadrature::gauss_legendre;
use crate::specfun::jn;

/// Largest phase change `t·Δp` allowed across one spectral panel.
pub const PHASE_GUARD: f64 = PI / 4.0;

/// Input tail fraction (outer 10% of the grid) above which a truncation warning is raised.
pub const INPUT_TAIL_LIMIT: f64 = 1e-10;

/// Spectral quadrature in `p`, built from Gauss–Legendre panels in `k = √p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    k_breaks: Vec<f64>,
    order: usize,
    k: Vec<f64>,
    p_points: Vec<f64>,
    p_weights: Vec<f64>,
    p_max: f64,
}

/// Controls for [`SpectralGrid::adapted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPlan {
    /// Largest `|t|` the grid must resolve.
    pub t_max: f64,
    /// Largest `x` at which the inverse transform will be evaluated.
    pub x_extent: f64,
    /// Spectral mass allowed beyond `p_max`, relative to the total.
    pub tail_mass: f64,
    pub order: usize,
}

impl SpectralPlan {
    pub fn new(t_max: f64, x_extent: f64) -> Self {
        SpectralPlan {
            t_max,
            x_extent,
            tail_mass: 1e-14,
            order: 10,
        }
    }
}

impl SpectralGrid {
    pub fn from_k_breaks(k_breaks: &[f64], order: usize) -> Result<Self> {
        if k_breaks.len() < 2
            || k_breaks[0] < 0.0
            || k_breaks.windows(2).any(|w| !(w[1] > w[0]))
            || !k_breaks.last().unwrap().is_finite()
        {
            return Err(Error::Precondition(
                "spectral breaks must be nonnegative, finite and strictly increasing".into(),
            ));
        }
        if order == 0 {
            return Err(Error::Precondition("panel order must be >= 1".into()));
        }
        let (nodes, wts) = gauss_legendre(order);
        let mut k = Vec::new();
        let mut p_points = Vec::new();
        let mut p_weights = Vec::new();
        for w in k_breaks.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (t, wt) in nodes.iter().zip(&wts) {
                let kk = mid + half * t;
                k.push(kk);
                p_points.push(kk * kk);
                p_weights.push(2.0 * kk * half * wt);
            }
        }
        let k_max = *k_breaks.last().unwrap();
        Ok(SpectralGrid {
            k_breaks: k_breaks.to_vec(),
            order,
            k,
            p_points,
            p_weights,
            p_max: k_max * k_max,
        })
    }

    /// Equal `k` panels on `[0, √p_max]`.
    pub fn uniform_k(p_max: f64, n_panels: usize, order: usize) -> Result<Self> {
        if !(p_max > 0.0) || n_panels == 0 {
            return Err(Error::Precondition(
                "need p_max > 0 and at least one panel".into(),
            ));
        }
        let k_max = p_max.sqrt();
        let breaks: Vec<f64> = (0..=n_panels)
            .map(|i| k_max * i as f64 / n_panels as f64)
            .collect();
        SpectralGrid::from_k_breaks(&breaks, order)
    }

    /// Grid fitted to `psi`: `p_max` is the smallest panel edge leaving at most
    /// `plan.tail_mass` of the spectral mass beyond it, and panels resolve both
    /// `J_ν(x√p)` up to `x_extent` and the phase `e^{-itp}` up to `t_max`.
    pub fn adapted(params: OperatorParams, psi: &WaveFunction, plan: SpectralPlan) -> Result<Self> {
        if !(plan.t_max >= 0.0) || !(plan.x_extent > 0.0) || !(plan.tail_mass > 0.0) {
            return Err(Error::Precondition(
                "spectral plan needs t_max >= 0, x_extent > 0, tail_mass > 0".into(),
            ));
        }
        let x_extent = plan.x_extent.max(psi.grid().x_max());
        let total = psi.norm().powi(2);
        if total == 0.0 {
            return Err(Error::Degenerate(
                "cannot adapt a spectral grid to a zero state".into(),
            ));
        }
        // probe on a coarse grid, doubling k until the tail mass is negligible
        let dk_probe = PI / (2.0 * psi.grid().x_max());
        let mut k_probe = 8.0_f64;
        let cutoff = loop {
            let n_panels = (k_probe / dk_probe).ceil() as usize;
            let probe = SpectralGrid::uniform_k(k_probe * k_probe, n_panels, 8)?;
            let f = forward_raw(params, psi, &probe);
            let mass: Vec<f64> = f
                .iter()
                .zip(&probe.p_weights)
                .map(|(v, w)| 0.5 * w * v.norm_sqr())
                .collect();
            let mut tail = 0.0;
            let mut found = None;
            // walk panels from the top, accumulating the tail
            for panel in (0..n_panels).rev() {
                let lo = panel * 8;
                tail += mass[lo..lo + 8].iter().sum::<f64>();
                if tail > plan.tail_mass * total {
                    found = Some(probe.k_breaks[panel + 1]);
                    break;
                }
            }
            let edge = found.unwrap_or(probe.k_breaks[1]);
            // accept once the cutoff sits clearly inside the probe range
            if edge < 0.75 * k_probe {
                break edge;
            }
            k_probe *= 2.0;
            if k_probe > 4096.0 {
                return Err(Error::Resolution(
                    "state has spectral content beyond k = 4096; refine its grid".into(),
                ));
            }
        };
        let dk_space = PI / (2.0 * x_extent);
        let mut breaks = vec![0.0];
        let mut a = 0.0_f64;
        while a < cutoff {
            let mut dk = dk_space;
            if plan.t_max > 0.0 {
                // (a + dk)² - a² ≤ guard / t
                let dk_phase = -a + (a * a + PHASE_GUARD / plan.t_max).sqrt();
                dk = dk.min(dk_phase);
            }
            a = (a + dk).min(cutoff);
            breaks.push(a);
        }
        SpectralGrid::from_k_breaks(&breaks, plan.order)
    }

    pub fn p_points(&self) -> &[f64] {
        &self.p_points
    }

    pub fn p_weights(&self) -> &[f64] {
        &self.p_weights
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn len(&self) -> usize {
        self.p_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_points.is_empty()
    }

    /// Largest `|t|·Δp` over the panels.
    pub fn max_phase_step(&self, t: f64) -> f64 {
        self.k_breaks
            .windows(2)
            .map(|w| t.abs() * (w[1] * w[1] - w[0] * w[0]))
            .fold(0.0, f64::max)
    }

    /// `((1/2) ∫ |f|² dp)^{1/2}`, the norm that makes `U` unitary.
    pub fn norm(&self, f: &[Complex64]) -> f64 {
        (0.5 * self
            .p_weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>())
        .sqrt()
    }

    fn top_panel_fraction(&self, f: &[Complex64]) -> f64 {
        let total: f64 = self
            .p_weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.norm_sqr())
            .sum();
        if total == 0.0 {
            return 0.0;
        }
        let n = self.len();
        let lo = n - self.order;
        let top: f64 = self.p_weights[lo..]
            .iter()
            .zip(&f[lo..])
            .map(|(w, v)| w * v.norm_sqr())
            .sum();
        top / total
    }
}

fn forward_raw(params: OperatorParams, psi: &WaveFunction, sgrid: &SpectralGrid) -> Vec<Complex64> {
    let nu = params.nu();
    let grid = psi.grid();
    let peak = psi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    // drop samples that cannot affect the sum at double precision
    let terms: Vec<(f64, Complex64)> = grid
        .points()
        .iter()
        .zip(grid.weights())
        .zip(psi.values())
        .filter(|(_, v)| v.norm() > 1e-18 * peak)
        .map(|((&x, &w), &v)| (x, v * (w * x.sqrt())))
        .collect();
    sgrid
        .k
        .iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, c) in &terms {
                acc += c * jn(nu, x * k);
            }
            acc
        })
        .collect()
}

/// `(Uψ)(p)` at the nodes of `sgrid`.
pub fn forward(
    params: OperatorParams,
    psi: &WaveFunction,
    sgrid: &SpectralGrid,
) -> Checked<Vec<Complex64>> {
    let values = forward_raw(params, psi, sgrid);
    let mut warnings = Vec::new();
    let tail = psi.tail_fraction(0.1);
    if tail > INPUT_TAIL_LIMIT {
        warnings.push(Warning::Truncation {
            what: "hankel input",
            tail_fraction: tail,
            limit: INPUT_TAIL_LIMIT,
        });
    }
    Checked {
        value: values,
        warnings,
    }
}

/// `(U⁻¹f)(x)` at the points of `grid`.
pub fn inverse(
    params: OperatorParams,
    f: &[Complex64],
    sgrid: &SpectralGrid,
    grid: Arc<Grid>,
) -> Result<Checked<WaveFunction>> {
    if f.len() != sgrid.len() {
        return Err(Error::Precondition(format!(
            "{} spectral samples for a spectral grid of {} nodes",
            f.len(),
            sgrid.len()
        )));
    }
    let nu = params.nu();
    let peak = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let terms: Vec<(f64, Complex64)> = sgrid
        .k
        .iter()
        .zip(&sgrid.p_weights)
        .zip(f)
        .filter(|(_, v)| v.norm() > 1e-18 * peak)
        .map(|((&k, &w), &v)| (k, v * (0.5 * w)))
        .collect();
    let values = grid
        .points()
        .iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(k, c) in &terms {
                acc += c * jn(nu, x * k);
            }
            acc * x.sqrt()
        })
        .collect();
    let mut warnings = Vec::new();
    let top = sgrid.top_panel_fraction(f);
    if top > 1e-10 {
        warnings.push(Warning::SpectralCutoff { tail_fraction: top });
    }
    Ok(Checked {
        value: WaveFunction::new(grid, values)?,
        warnings,
    })
}

/// `U⁻¹ e^{-itp} U ψ`, sampled on `out`.
pub fn evolve_diagonalized(
    params: OperatorParams,
    psi: &WaveFunction,
    t: f64,
    sgrid: &SpectralGrid,
    out: Arc<Grid>,
) -> Result<Checked<WaveFunction>> {
    let step = sgrid.max_phase_step(t);
    if step > PHASE_GUARD * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!(
            "spectral panels change the phase by {step:.3} > π/4 at t = {t}"
        )));
    }
    let fwd = forward(params, psi, sgrid);
    let rotated: Vec<Complex64> = fwd
        .value
        .iter()
        .zip(sgrid.p_points())
        .map(|(v, &p)| v * Complex64::from_polar(1.0, -t * p))
        .collect();
    let mut out = inverse(params, &rotated, sgrid, out)?;
    let mut warnings = fwd.warnings;
    warnings.append(&mut out.warnings);
    Ok(Checked {
        value: out.value,
        warnings,
    })
}
