//! The unitary group `e^{-itH}` through its closed-form kernel
//!
//! ```text
//! K(t, x, y) = (1/(2it)) √(xy) J_ν(xy/(2t)) e^{i(x²+y²)/(4t)} e^{-iνπ/2}
//! ```
//!
//! and evolution of states by quadrature against it. Negative times use
//! `K(-t) = conj K(t)`, which holds because the operator is real.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Checked, Error, Result, Warning};
use crate::hankel::{SpectralGrid, SpectralPlan};
use crate::operator::{Grid, OperatorParams, WaveFunction};
use crate::specfun::jn;

/// Output tail fraction (outer 10% of the grid) above which evolution warns.
pub const OUTPUT_TAIL_LIMIT: f64 = 1e-6;
/// Input tail fraction above which evolution warns.
pub const INPUT_TAIL_LIMIT: f64 = 1e-10;

fn check_args(func: &'static str, t: f64, x: f64, y: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::domain(
            func,
            format!("t = {t} must be finite and nonzero"),
        ));
    }
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::domain(
            func,
            format!("x = {x}, y = {y} must be finite and > 0"),
        ));
    }
    Ok(())
}

/// Kernel value from `J_ν(xy/(2|t|))`, shared by the pointwise and batched paths.
#[inline]
fn kernel_unchecked(nu: f64, t: f64, x: f64, y: f64) -> Complex64 {
    let ta = t.abs();
    let amp = 0.5 / ta * (x * y).sqrt() * jn(nu, x * y / (2.0 * ta));
    // 1/i contributes -π/2
    let phase = (x * x + y * y) / (4.0 * ta) - nu * FRAC_PI_2 - FRAC_PI_2;
    let v = Complex64::from_polar(amp, phase);
    if t > 0.0 {
        v
    } else {
        v.conj()
    }
}

pub fn kernel(params: OperatorParams, t: f64, x: f64, y: f64) -> Result<Complex64> {
    check_args("propagator::kernel", t, x, y)?;
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    Ok(kernel_unchecked(params.nu(), t, x, y))
}

/// Kernel of the free Dirichlet half-line by the method of images,
/// `(4πit)^{-1/2} (e^{i(x-y)²/(4t)} - e^{i(x+y)²/(4t)})`.
pub fn free_dirichlet_kernel(t: f64, x: f64, y: f64) -> Result<Complex64> {
    check_args("free_dirichlet_kernel", t, x, y)?;
    // e^{ia} - e^{ib} = 2i sin((a-b)/2) e^{i(a+b)/2}, free of cancellation when x y ≪ |t|
    let half_diff = -x * y / (2.0 * t);
    let mean = (x * x + y * y) / (4.0 * t);
    let pre = Complex64::from_polar((4.0 * PI * t.abs()).powf(-0.5), -t.signum() * PI / 4.0);
    Ok(pre * Complex64::new(0.0, 2.0 * half_diff.sin()) * Complex64::from_polar(1.0, mean))
}

/// One evaluated kernel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub value: Complex64,
}

impl PropagatorSample {
    pub fn new(params: OperatorParams, t: f64, x: f64, y: f64) -> Result<Self> {
        Ok(PropagatorSample {
            t,
            x,
            y,
            value: kernel(params, t, x, y)?,
        })
    }

    /// `(1/(2|t|)) √(xy) |J_ν(xy/(2|t|))|`, which `|value|` equals.
    pub fn modulus_bound(&self, params: OperatorParams) -> f64 {
        let ta = self.t.abs();
        0.5 / ta * (self.x * self.y).sqrt() * jn(params.nu(), self.x * self.y / (2.0 * ta)).abs()
    }
}

/// Discretization controls for [`evolve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvePlan {
    /// Output truncation radius; `None` applies the ballistic rule
    /// `x_max = support + 2|t| k_max + 5` with `k_max` the state's spectral cutoff.
    pub x_max: Option<f64>,
    /// Largest kernel phase change across one integration panel in `y`.
    pub phase_per_panel: f64,
    pub order: usize,
}

impl Default for EvolvePlan {
    fn default() -> Self {
        EvolvePlan {
            x_max: None,
            phase_per_panel: FRAC_PI_2,
            order: 10,
        }
    }
}

/// Smallest `x` beyond which `psi` carries at most `tol` of its mass.
pub fn support_radius(psi: &WaveFunction, tol: f64) -> f64 {
    let pts = psi.grid().points();
    let mass: Vec<f64> = psi
        .grid()
        .weights()
        .iter()
        .zip(psi.values())
        .map(|(w, v)| w * v.norm_sqr())
        .collect();
    let total: f64 = mass.iter().sum();
    let mut tail = 0.0;
    for i in (0..pts.len()).rev() {
        tail += mass[i];
        if tail > tol * total {
            return if i + 1 < pts.len() {
                pts[i + 1]
            } else {
                psi.grid().x_max()
            };
        }
    }
    pts[0]
}

/// Largest wavenumber carried by `psi`, measured with the Hankel transform.
pub fn spectral_radius(params: OperatorParams, psi: &WaveFunction) -> Result<f64> {
    let sg = SpectralGrid::adapted(params, psi, SpectralPlan::new(0.0, psi.grid().x_max()))?;
    Ok(sg.p_max().sqrt())
}

/// Output grid for `e^{-itH} psi` following the ballistic rule.
pub fn ballistic_grid(params: OperatorParams, psi: &WaveFunction, t: f64) -> Result<Arc<Grid>> {
    let k_max = spectral_radius(params, psi)?;
    let x_max = support_radius(psi, 1e-14) + 2.0 * t.abs() * k_max + 5.0;
    output_grid(x_max, k_max)
}

fn output_grid(x_max: f64, k_max: f64) -> Result<Arc<Grid>> {
    let width = (PI / (2.0 * k_max.max(1.0))).min(0.5);
    let n_panels = (x_max / width).ceil() as usize;
    Ok(Arc::new(Grid::panels(x_max, n_panels, 10)?))
}

/// `e^{-itH} psi0` by quadrature against the kernel, on a ballistic output grid.
pub fn evolve(
    params: OperatorParams,
    psi0: &WaveFunction,
    t: f64,
) -> Result<Checked<WaveFunction>> {
    evolve_with(params, psi0, t, EvolvePlan::default())
}

pub fn evolve_with(
    params: OperatorParams,
    psi0: &WaveFunction,
    t: f64,
    plan: EvolvePlan,
) -> Result<Checked<WaveFunction>> {
    let out = match plan.x_max {
        Some(x_max) => output_grid(x_max, spectral_radius(params, psi0)?)?,
        None => ballistic_grid(params, psi0, t)?,
    };
    evolve_onto(params, psi0, t, out, plan)
}

/// `e^{-itH} psi0` sampled on the given output grid.
pub fn evolve_onto(
    params: OperatorParams,
    psi0: &WaveFunction,
    t: f64,
    out: Arc<Grid>,
    plan: EvolvePlan,
) -> Result<Checked<WaveFunction>> {
    evolve_with_kernel(psi0, t, out, plan, |t, x, y| {
        kernel_unchecked(params.nu(), t, x, y)
    })
}

/// Same quadrature as [`evolve_onto`] with the images kernel; the `α = 0` reference.
pub fn evolve_free_dirichlet(
    psi0: &WaveFunction,
    t: f64,
    out: Arc<Grid>,
    plan: EvolvePlan,
) -> Result<Checked<WaveFunction>> {
    evolve_with_kernel(psi0, t, out, plan, |t, x, y| {
        free_dirichlet_kernel(t, x, y).expect("arguments validated")
    })
}

fn evolve_with_kernel(
    psi0: &WaveFunction,
    t: f64,
    out: Arc<Grid>,
    plan: EvolvePlan,
    k: impl Fn(f64, f64, f64) -> Complex64,
) -> Result<Checked<WaveFunction>> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::domain(
            "evolve",
            format!("t = {t} must be finite and nonzero"),
        ));
    }
    if !(plan.phase_per_panel > 0.0) || plan.order == 0 {
        return Err(Error::Precondition(
            "evolve plan needs phase_per_panel > 0, order >= 1".into(),
        ));
    }
    let mut warnings = Vec::new();
    let tail_in = psi0.tail_fraction(0.1);
    if tail_in > INPUT_TAIL_LIMIT {
        warnings.push(Warning::Truncation {
            what: "evolution input",
            tail_fraction: tail_in,
            limit: INPUT_TAIL_LIMIT,
        });
    }
    // integrate over the input support on panels resolving the kernel phase,
    // whose y-wavenumber is at most (x + y)/(2|t|)
    let y_max = support_radius(psi0, 1e-16).min(psi0.grid().x_max());
    let k_y = (out.x_max() + y_max) / (2.0 * t.abs());
    let width = (plan.phase_per_panel / k_y).min(0.5);
    let n_panels = ((y_max / width).ceil() as usize).max(1);
    let ygrid = Grid::panels(y_max, n_panels, plan.order)?;
    let src: Vec<(f64, Complex64)> = ygrid
        .points()
        .iter()
        .zip(ygrid.weights())
        .map(|(&y, &w)| (y, psi0.at(y) * w))
        .filter(|(_, c)| c.norm() > 0.0)
        .collect();
    let values: Vec<Complex64> = out
        .points()
        .iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(y, c) in &src {
                acc += k(t, x, y) * c;
            }
            acc
        })
        .collect();
    let psi_t = WaveFunction::new(out, values)?;
    let tail_out = psi_t.tail_fraction(0.1);
    if tail_out > OUTPUT_TAIL_LIMIT {
        warnings.push(Warning::Truncation {
            what: "evolved state",
            tail_fraction: tail_out,
            limit: OUTPUT_TAIL_LIMIT,
        });
    }
    Ok(Checked {
        value: psi_t,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bump() -> WaveFunction {
        let grid = Arc::new(Grid::panels(15.0, 30, 10).unwrap());
        WaveFunction::from_fn(grid, |x| Complex64::new((-(x - 5.0f64).powi(2)).exp(), 0.0))
    }

    #[test]
    fn value_at_unit_point() {
        let k = kernel(OperatorParams::new(0.0).unwrap(), 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(k.re, -0.07615275358932844, max_relative = 1e-12);
        assert_relative_eq!(k.im, -0.25954559998157306, max_relative = 1e-12);
        let f = free_dirichlet_kernel(1.0, 1.0, 1.0).unwrap();
        assert!((k - f).norm() < 1e-14);
    }

    #[test]
    fn images_match_on_probe_grid() {
        let params = OperatorParams::new(0.0).unwrap();
        for &t in &[0.3, 1.0, -2.5] {
            for i in 0..10 {
                for j in 0..10 {
                    let x = 0.05 + 0.83 * i as f64;
                    let y = 0.11 + 0.77 * j as f64;
                    let a = kernel(params, t, x, y).unwrap();
                    let b = free_dirichlet_kernel(t, x, y).unwrap();
                    assert!((a - b).norm() <= 1e-10 * b.norm(), "t={t} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn images_formula_matches_its_direct_form() {
        for &(t, x, y) in &[(1.0, 1.0, 2.0), (0.5, 3.0, 0.4), (-1.5, 2.0, 2.0)] {
            let pre = Complex64::new(0.0, 4.0 * PI * t).powf(-0.5);
            let direct = pre
                * (Complex64::from_polar(1.0, (x - y) * (x - y) / (4.0 * t))
                    - Complex64::from_polar(1.0, (x + y) * (x + y) / (4.0 * t)));
            let k = free_dirichlet_kernel(t, x, y).unwrap();
            assert!((k - direct).norm() < 1e-13);
        }
        assert!(free_dirichlet_kernel(1.0, 1.0, 1e-12).unwrap().norm() < 1e-12);
    }

    #[test]
    fn symmetric_modulus_and_domain() {
        let params = OperatorParams::new(1.3).unwrap();
        let a = kernel(params, 0.7, 0.4, 3.0).unwrap();
        assert_eq!(a, kernel(params, 0.7, 3.0, 0.4).unwrap());
        let s = PropagatorSample::new(params, 0.7, 0.4, 3.0).unwrap();
        assert!((s.value.norm() - s.modulus_bound(params)).abs() <= 1e-15 * s.value.norm());
        assert!(kernel(params, 0.0, 1.0, 1.0).is_err());
        assert!(free_dirichlet_kernel(0.0, 1.0, 1.0).is_err());
        let back = kernel(params, -0.7, 0.4, 3.0).unwrap();
        assert_eq!(back, a.conj());
    }

    #[test]
    fn scaling_covariance() {
        let c = 2.0;
        for &alpha in &[-0.25, 0.0, 1.0, 3.0] {
            let params = OperatorParams::new(alpha).unwrap();
            for &(t, x, y) in &[(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (-4.0, 7.0, 3.0)] {
                let a = kernel(params, c * c * t, c * x, c * y).unwrap();
                let b = kernel(params, t, x, y).unwrap() / c;
                assert!((a - b).norm() <= 1e-12 * b.norm(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn evolution_matches_images_and_conserves_norm() {
        let psi = bump();
        let params = OperatorParams::new(0.0).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            let ev = evolve(params, &psi, t).unwrap();
            assert!(ev.is_clean(), "{:?}", ev.warnings);
            let rel = (ev.value.norm() - psi.norm()).abs() / psi.norm();
            assert!(rel < 1e-3, "t={t} norm drift {rel}");
            let img =
                evolve_free_dirichlet(&psi, t, ev.value.grid().clone(), EvolvePlan::default())
                    .unwrap();
            assert!(ev.value.l2_distance(&img.value) < 1e-6, "t={t}");
        }
    }

    #[test]
    fn two_steps_compose() {
        let psi = bump();
        let params = OperatorParams::new(1.0).unwrap();
        let t = 0.25;
        let once = evolve(params, &psi, t).unwrap().value;
        let twice = evolve(params, &once, t).unwrap().value;
        let direct = evolve(params, &psi, 2.0 * t).unwrap().value;
        // single-step error measured against a refined quadrature
        let fine = evolve_onto(
            params,
            &psi,
            t,
            once.grid().clone(),
            EvolvePlan {
                phase_per_panel: FRAC_PI_2 / 2.0,
                order: 14,
                ..EvolvePlan::default()
            },
        )
        .unwrap()
        .value;
        let single = once.l2_distance(&fine).max(1e-7);
        let gap = direct.l2_distance(&twice);
        assert!(gap <= 2.0 * single, "gap {gap} single {single}");
    }

    #[test]
    fn short_output_grid_is_flagged() {
        let psi = bump();
        let params = OperatorParams::new(0.0).unwrap();
        let plan = EvolvePlan {
            x_max: Some(10.0),
            ..EvolvePlan::default()
        };
        let ev = evolve_with(params, &psi, 2.0, plan).unwrap();
        assert!(!ev.is_clean());
    }

    proptest::proptest! {
        #[test]
        fn scaling_covariance_holds_for_any_dilation(
            alpha in -0.25f64..6.0,
            t in 0.05f64..20.0,
            x in 0.01f64..10.0,
            y in 0.01f64..10.0,
            c in 0.2f64..5.0,
        ) {
            let params = OperatorParams::new(alpha).unwrap();
            let a = kernel(params, c * c * t, c * x, c * y).unwrap() * c;
            let b = kernel(params, t, x, y).unwrap();
            proptest::prop_assert!((a - b).norm() <= 1e-11 * b.norm().max(1e-300), "{a} vs {b}");
        }
    }
}
