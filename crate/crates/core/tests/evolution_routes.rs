//! Independent evolution routes against each other.

use std::sync::Arc;

use halfline::hankel::{evolve_diagonalized, SpectralGrid, SpectralPlan};
use halfline::oracle::evolve_reference;
use halfline::propagator::evolve;
use halfline::{Grid, OperatorParams, WaveFunction};
use num_complex::Complex64;

fn bump() -> WaveFunction {
    let grid = Arc::new(Grid::panels(15.0, 30, 10).unwrap());
    WaveFunction::from_fn(grid, |x| Complex64::new((-(x - 5.0f64).powi(2)).exp(), 0.0))
}

#[test]
fn kernel_quadrature_matches_finite_differences() {
    let params = OperatorParams::new(1.0).unwrap();
    let psi0 = bump();
    let k = evolve(params, &psi0, 1.0).unwrap();
    let f = evolve_reference(params, &psi0, 1.0, 50.0, 4000).unwrap();
    assert!(k.is_clean() && f.is_clean());
    let d = k.value.l2_distance(&f.value);
    assert!(d < 1e-3, "distance {d}");
    assert!((f.value.norm() - psi0.norm()).abs() < 1e-9 * psi0.norm());
}

#[test]
fn kernel_quadrature_matches_hankel_diagonalization() {
    for alpha in [0.0, 1.0] {
        let params = OperatorParams::new(alpha).unwrap();
        let psi0 = bump();
        let k = evolve(params, &psi0, 1.0).unwrap().value;
        let out = k.grid().clone();
        let sg = SpectralGrid::adapted(params, &psi0, SpectralPlan::new(1.0, out.x_max())).unwrap();
        let h = evolve_diagonalized(params, &psi0, 1.0, &sg, out).unwrap();
        assert!(h.is_clean());
        let d = k.l2_distance(&h.value);
        assert!(d < 1e-3, "alpha={alpha}: distance {d}");
    }
}

#[test]
fn backward_evolution_undoes_forward() {
    let params = OperatorParams::new(0.75).unwrap();
    let psi0 = bump();
    let fwd = evolve(params, &psi0, 0.5).unwrap().value;
    let back = evolve(params, &fwd, -0.5).unwrap().value;
    let d = psi0.l2_distance(&back);
    assert!(d < 1e-7, "distance {d}");
}
