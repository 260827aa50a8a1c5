//! Discretizations of the half-line: grids, sampled states and sampled kernels.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::weight;
use crate::quadrature::gauss_legendre;

/// One Gauss–Legendre panel `[a, b]` owning `points[start..start + len]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub start: usize,
    pub len: usize,
}

/// Strictly increasing sample points on `(0, x_max]` with quadrature weights.
///
/// Panel grids interpolate with the panel's own Lagrange polynomial; all other
/// grids fall back to local cubic interpolation with zero anchors at `0` and
/// `x_max` (the Dirichlet ends).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
    x_max: f64,
    panels: Vec<Panel>,
}

/// How panel widths grow along the half-line.
///
/// A panel starting at `a` has width `clamp(growth * a, h_min, h_cap)` while
/// `a < cap_until`, and `max(h_cap, far_growth * a)` afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelPlan {
    pub x_max: f64,
    pub h_min: f64,
    pub growth: f64,
    pub h_cap: f64,
    pub cap_until: f64,
    pub far_growth: f64,
    pub order: usize,
}

impl PanelPlan {
    /// Equal panels of width at most `h` on `(0, x_max]`.
    pub fn uniform(x_max: f64, h: f64, order: usize) -> Self {
        PanelPlan {
            x_max,
            h_min: h,
            growth: 0.0,
            h_cap: h,
            cap_until: f64::INFINITY,
            far_growth: 0.0,
            order,
        }
    }

    pub fn breaks(&self) -> Result<Vec<f64>> {
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::Precondition(format!(
                "x_max = {} must be positive",
                self.x_max
            )));
        }
        if !(self.h_min > 0.0 && self.h_cap >= self.h_min) {
            return Err(Error::Precondition(
                "panel widths must satisfy 0 < h_min <= h_cap".into(),
            ));
        }
        if self.growth < 0.0 || self.far_growth < 0.0 {
            return Err(Error::Precondition(
                "panel growth rates must be >= 0".into(),
            ));
        }
        let mut breaks = vec![0.0];
        let mut a = 0.0_f64;
        while a < self.x_max {
            let w = if a < self.cap_until {
                (self.growth * a).clamp(self.h_min, self.h_cap)
            } else {
                (self.far_growth * a).max(self.h_cap)
            };
            let mut b = a + w;
            // avoid a sliver as the last panel
            if b > self.x_max || self.x_max - b < 0.25 * w {
                b = self.x_max;
            }
            breaks.push(b);
            a = b;
            if breaks.len() > 5_000_000 {
                return Err(Error::Precondition(
                    "panel plan produces too many panels".into(),
                ));
            }
        }
        Ok(breaks)
    }
}

impl Grid {
    /// Composite Gauss–Legendre grid on the panels `[breaks[i], breaks[i+1]]`.
    pub fn from_breaks(breaks: &[f64], order: usize) -> Result<Grid> {
        if breaks.len() < 2 {
            return Err(Error::Precondition("need at least one panel".into()));
        }
        if breaks[0] < 0.0 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "panel breaks must be nonnegative and strictly increasing".into(),
            ));
        }
        if order == 0 {
            return Err(Error::Precondition("panel order must be >= 1".into()));
        }
        let (nodes, wts) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(points.capacity());
        let mut panels = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            panels.push(Panel {
                a,
                b,
                start: points.len(),
                len: order,
            });
            for (t, wt) in nodes.iter().zip(&wts) {
                points.push(mid + half * t);
                weights.push(half * wt);
            }
        }
        Ok(Grid {
            points,
            weights,
            x_max: *breaks.last().unwrap(),
            panels,
        })
    }

    pub fn from_plan(plan: &PanelPlan) -> Result<Grid> {
        Grid::from_breaks(&plan.breaks()?, plan.order)
    }

    /// `n` equal Gauss–Legendre panels on `(0, x_max]`.
    pub fn panels(x_max: f64, n_panels: usize, order: usize) -> Result<Grid> {
        if n_panels == 0 {
            return Err(Error::Precondition("need at least one panel".into()));
        }
        let breaks: Vec<f64> = (0..=n_panels)
            .map(|i| x_max * i as f64 / n_panels as f64)
            .collect();
        Grid::from_breaks(&breaks, order)
    }

    /// Interior nodes `x_j = (j+1) h`, `h = length / (n+1)`, with weights `h`.
    pub fn uniform_interior(length: f64, n: usize) -> Result<Grid> {
        if !(length > 0.0) || n == 0 {
            return Err(Error::Precondition(
                "uniform grid needs length > 0 and n >= 1".into(),
            ));
        }
        let h = length / (n as f64 + 1.0);
        Ok(Grid {
            points: (0..n).map(|j| (j as f64 + 1.0) * h).collect(),
            weights: vec![h; n],
            x_max: length,
            panels: Vec::new(),
        })
    }

    /// `n` geometrically spaced points on `[x_min, x_max]` with trapezoid weights.
    pub fn geometric(x_min: f64, x_max: f64, n: usize) -> Result<Grid> {
        if !(x_min > 0.0 && x_max > x_min) || n < 2 {
            return Err(Error::Precondition(
                "geometric grid needs 0 < x_min < x_max and n >= 2".into(),
            ));
        }
        let ratio = (x_max / x_min).ln() / (n as f64 - 1.0);
        let mut points: Vec<f64> = (0..n).map(|i| x_min * (ratio * i as f64).exp()).collect();
        points[n - 1] = x_max;
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (points[i + 1] - points[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Grid {
            points,
            weights,
            x_max,
            panels: Vec::new(),
        })
    }

    /// Arbitrary strictly increasing points in `(0, x_max]` with trapezoid weights.
    pub fn from_points(points: Vec<f64>, x_max: f64) -> Result<Grid> {
        if points.is_empty()
            || !(points[0] > 0.0)
            || points.windows(2).any(|w| !(w[1] > w[0]))
            || !(*points.last().unwrap() <= x_max)
        {
            return Err(Error::Precondition(
                "points must be positive, strictly increasing and at most x_max".into(),
            ));
        }
        let n = points.len();
        let mut weights = vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            let h = 0.5 * (points[i + 1] - points[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Grid {
            points,
            weights,
            x_max,
            panels: Vec::new(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn panel_list(&self) -> &[Panel] {
        &self.panels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Interpolates samples `values` (one per point) at `x`; zero outside `(0, x_max]`.
    pub fn interpolate(&self, values: &[Complex64], x: f64) -> Complex64 {
        debug_assert_eq!(values.len(), self.points.len());
        if !(x > 0.0 && x <= self.x_max) {
            return Complex64::new(0.0, 0.0);
        }
        if self.panels.is_empty() {
            self.interpolate_cubic(values, x)
        } else {
            self.interpolate_panel(values, x)
        }
    }

    fn interpolate_panel(&self, values: &[Complex64], x: f64) -> Complex64 {
        let idx = self
            .panels
            .partition_point(|p| p.b < x)
            .min(self.panels.len() - 1);
        let p = self.panels[idx];
        if x < p.a {
            return Complex64::new(0.0, 0.0);
        }
        let nodes = &self.points[p.start..p.start + p.len];
        let vals = &values[p.start..p.start + p.len];
        // barycentric Lagrange interpolation on the panel nodes
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, (&xj, &vj)) in nodes.iter().zip(vals).enumerate() {
            let dx = x - xj;
            if dx == 0.0 {
                return vj;
            }
            let mut wj = 1.0;
            for (k, &xk) in nodes.iter().enumerate() {
                if k != j {
                    wj /= xj - xk;
                }
            }
            let c = wj / dx;
            num += vj * c;
            den += c;
        }
        num / den
    }

    fn interpolate_cubic(&self, values: &[Complex64], x: f64) -> Complex64 {
        let n = self.points.len();
        // extended node list with Dirichlet anchors: index 0 -> x = 0, n + 1 -> x_max
        let node = |i: usize| -> (f64, Complex64) {
            if i == 0 {
                (0.0, Complex64::new(0.0, 0.0))
            } else if i == n + 1 {
                (self.x_max, Complex64::new(0.0, 0.0))
            } else {
                (self.points[i - 1], values[i - 1])
            }
        };
        let has_right_anchor = self.points[n - 1] < self.x_max;
        let last = if has_right_anchor { n + 1 } else { n };
        // first extended index whose node is >= x
        let right = 1 + self.points.partition_point(|&p| p < x);
        let right = right.min(last);
        let lo = right.saturating_sub(2).min(last.saturating_sub(3));
        let hi = (lo + 3).min(last);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in lo..=hi {
            let (xi, vi) = node(i);
            let mut li = 1.0;
            for k in lo..=hi {
                if k != i {
                    let (xk, _) = node(k);
                    li *= (x - xk) / (xi - xk);
                }
            }
            acc += vi * li;
        }
        acc
    }
}

/// Complex samples of a state on a grid.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Precondition(
                "wave function samples must be finite".into(),
            ));
        }
        Ok(WaveFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        WaveFunction { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        WaveFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, x: f64) -> Complex64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn norm(&self) -> f64 {
        self.weighted_norm(0.0)
    }

    /// `‖ρ^β ψ‖` with `ρ(x) = 1 + x`.
    pub fn weighted_norm(&self, beta: f64) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((&x, &w), v)| {
                let r = weight(-beta, x);
                w * v.norm_sqr() * r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, c: f64) -> WaveFunction {
        WaveFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Resamples onto another grid.
    pub fn interpolate_to(&self, grid: Arc<Grid>) -> WaveFunction {
        let values = grid.points().iter().map(|&x| self.at(x)).collect();
        WaveFunction { grid, values }
    }

    /// L² distance, with `other` resampled onto this state's grid.
    pub fn l2_distance(&self, other: &WaveFunction) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((&x, &w), v)| w * (v - other.at(x)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Fraction of `‖ψ‖²` carried by points beyond `(1 - frac) · x_max`.
    pub fn tail_fraction(&self, frac: f64) -> f64 {
        let cut = (1.0 - frac) * self.grid.x_max();
        let mut tail = 0.0;
        let mut total = 0.0;
        for ((&x, &w), v) in self
            .grid
            .points()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
        {
            let m = w * v.norm_sqr();
            total += m;
            if x > cut {
                tail += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Squared modulus for real or complex kernel entries.
pub trait KernelEntry: Copy + Send + Sync {
    fn abs2(self) -> f64;
    fn is_finite_entry(self) -> bool;
}

impl KernelEntry for f64 {
    fn abs2(self) -> f64 {
        self * self
    }
    fn is_finite_entry(self) -> bool {
        self.is_finite()
    }
}

impl KernelEntry for Complex64 {
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn is_finite_entry(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// A two-point kernel sampled on `grid × grid`, stored row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T = f64> {
    grid: Arc<Grid>,
    entries: Vec<T>,
    weight_exponent_s: f64,
}

impl<T: KernelEntry> KernelMatrix<T> {
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> T) -> Self {
        let pts = grid.points();
        let mut entries = Vec::with_capacity(pts.len() * pts.len());
        for &x in pts {
            for &y in pts {
                entries.push(f(x, y));
            }
        }
        KernelMatrix {
            grid,
            entries,
            weight_exponent_s: 0.0,
        }
    }

    /// Evaluates `f` on the upper triangle only and mirrors it.
    pub fn from_symmetric_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> T) -> Self {
        let n = grid.len();
        let pts = grid.points();
        let mut entries: Vec<T> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = if j >= i {
                    f(pts[i], pts[j])
                } else {
                    entries[j * n + i]
                };
                entries.push(v);
            }
        }
        KernelMatrix {
            grid,
            entries,
            weight_exponent_s: 0.0,
        }
    }

    pub fn from_entries(grid: Arc<Grid>, entries: Vec<T>) -> Result<Self> {
        if entries.len() != grid.len() * grid.len() {
            return Err(Error::Precondition(
                "kernel entries must form an n×n matrix".into(),
            ));
        }
        Ok(KernelMatrix {
            grid,
            entries,
            weight_exponent_s: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim() + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn weight_exponent(&self) -> f64 {
        self.weight_exponent_s
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite_entry())
    }

    /// `max |K_ij - K_ji|` relative to `max |K_ij|`.
    pub fn asymmetry(&self) -> f64
    where
        T: std::ops::Sub<Output = T>,
    {
        let n = self.dim();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(self.get(i, j).abs2());
                if j > i {
                    worst = worst.max((self.get(i, j) - self.get(j, i)).abs2());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            (worst / scale).sqrt()
        }
    }
}

impl KernelMatrix<f64> {
    /// Multiplies by `ρ(x)^{-s} ρ(y)^{-s}` and records the exponent.
    pub fn weighted(mut self, s: f64) -> Self {
        let w: Vec<f64> = self.grid.points().iter().map(|&x| weight(s, x)).collect();
        let n = w.len();
        for i in 0..n {
            for j in 0..n {
                self.entries[i * n + j] *= w[i] * w[j];
            }
        }
        self.weight_exponent_s += s;
        self
    }
}

impl KernelMatrix<Complex64> {
    pub fn weighted(mut self, s: f64) -> Self {
        let w: Vec<f64> = self.grid.points().iter().map(|&x| weight(s, x)).collect();
        let n = w.len();
        for i in 0..n {
            for j in 0..n {
                self.entries[i * n + j] *= w[i] * w[j];
            }
        }
        self.weight_exponent_s += s;
        self
    }
}
