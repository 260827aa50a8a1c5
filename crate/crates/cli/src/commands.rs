use std::sync::Arc;

use halfline::estimates::{
    decay_probes, dispersive_scan, e0_weighted_norm, l2_weighted_decay, threshold_norm, ScanConfig,
    ThresholdKernel,
};
use halfline::hankel::{evolve_diagonalized, SpectralGrid, SpectralPlan};
use halfline::operator::{e0_kernel, resolvent_kernel, spectral_density_kernel};
use halfline::oracle::{resolvent_density_reference, ReferencePropagator, Scheme};
use halfline::propagator::{ballistic_grid, evolve_onto, kernel, EvolvePlan};
use halfline::{Error, Grid, OperatorParams, Result, WaveFunction};
use num_complex::Complex64;

use crate::args::{
    BumpArgs, DispersiveArgs, EvolveArgs, KernelArgs, OracleArgs, Route, ThresholdArgs, WeightArg,
    What,
};
use crate::table::{num, Table};

fn params_into(table: &mut Table, alpha: f64) -> Result<OperatorParams> {
    let params = OperatorParams::new(alpha)?;
    table.param("alpha", alpha);
    table.param("nu", num(params.nu()));
    Ok(params)
}

fn need(value: Option<f64>, flag: &str, what: What) -> Result<f64> {
    value.ok_or_else(|| {
        Error::Precondition(format!("--{flag} is required for --what {what:?}").to_lowercase())
    })
}

pub fn kernel_cmd(a: &KernelArgs) -> Result<Table> {
    let mut table = Table::new("kernel");
    let params = params_into(&mut table, a.common.alpha)?;
    table.param("what", format!("{:?}", a.what).to_lowercase());
    let points: Vec<(f64, f64)> = match (a.x, a.y) {
        (Some(x), Some(y)) => vec![(x, y)],
        (None, None) => {
            if !(a.x_max > 0.0) || a.grid_n == 0 {
                return Err(Error::Precondition(
                    "sampling grid needs x_max > 0 and grid_n >= 1".into(),
                ));
            }
            table.param("x_max", a.x_max);
            table.param("grid_n", a.grid_n);
            let h = a.x_max / a.grid_n as f64;
            let axis: Vec<f64> = (1..=a.grid_n).map(|i| i as f64 * h).collect();
            axis.iter()
                .flat_map(|&x| axis.iter().map(move |&y| (x, y)))
                .collect()
        }
        _ => {
            return Err(Error::Precondition(
                "--x and --y must be given together".into(),
            ))
        }
    };
    match a.what {
        What::Density | What::E0 => {
            let lambda = if a.what == What::Density {
                let l = need(a.lambda, "lambda", a.what)?;
                table.param("lambda", l);
                Some(l)
            } else {
                None
            };
            table.columns(&["x", "y", "value"]);
            for (x, y) in points {
                let v = match lambda {
                    Some(l) => spectral_density_kernel(params, l, x, y)?,
                    None => e0_kernel(params, x, y)?,
                };
                table.row(&[x, y, v]);
            }
        }
        What::Resolvent | What::Propagator => {
            let (name, var) = if a.what == What::Resolvent {
                ("lambda", need(a.lambda, "lambda", a.what)?)
            } else {
                ("t", need(a.t, "t", a.what)?)
            };
            table.param(name, var);
            table.columns(&["x", "y", "re", "im"]);
            for (x, y) in points {
                let v: Complex64 = if a.what == What::Resolvent {
                    resolvent_kernel(params, var, x, y)?
                } else {
                    kernel(params, var, x, y)?
                };
                table.row(&[x, y, v.re, v.im]);
            }
        }
    }
    Ok(table)
}

fn bump(table: &mut Table, b: &BumpArgs) -> Result<WaveFunction> {
    if !(b.center >= 0.0 && b.width > 0.0) {
        return Err(Error::Precondition(
            "bump needs center >= 0 and width > 0".into(),
        ));
    }
    table.param(
        "initial",
        format!("exp(-((x - {}) / {})^2)", b.center, b.width),
    );
    let x_max = b.center + 10.0 * b.width;
    let panels = (x_max / (0.5 * b.width.min(1.0))).ceil() as usize;
    let grid = Arc::new(Grid::panels(x_max, panels, 10)?);
    let (c, w) = (b.center, b.width);
    Ok(WaveFunction::from_fn(grid, move |x| {
        Complex64::new((-((x - c) / w).powi(2)).exp(), 0.0)
    }))
}

fn state_rows(table: &mut Table, psi: &WaveFunction) {
    table.columns(&["x", "re", "im"]);
    for (x, v) in psi.grid().points().iter().zip(psi.values()) {
        table.row(&[*x, v.re, v.im]);
    }
}

fn reference_length(
    params: OperatorParams,
    psi0: &WaveFunction,
    t: f64,
    given: Option<f64>,
) -> Result<f64> {
    match given {
        Some(l) => Ok(l),
        None => Ok(ballistic_grid(params, psi0, t)?.x_max() + 10.0),
    }
}

pub fn evolve_cmd(a: &EvolveArgs) -> Result<Table> {
    let mut table = Table::new("evolve");
    let params = params_into(&mut table, a.common.alpha)?;
    table.param("t", a.t);
    table.param("route", format!("{:?}", a.route).to_lowercase());
    let psi0 = bump(&mut table, &a.bump)?;
    let state = match a.route {
        Route::Kernel | Route::Hankel => {
            let out = match a.x_max {
                Some(x) => Arc::new(Grid::panels(x, (x / 0.25).ceil() as usize, 10)?),
                None => ballistic_grid(params, &psi0, a.t)?,
            };
            table.param("x_max", num(out.x_max()));
            if a.route == Route::Kernel {
                evolve_onto(params, &psi0, a.t, out, EvolvePlan::default())?
            } else {
                let sg = SpectralGrid::adapted(
                    params,
                    &psi0,
                    SpectralPlan::new(a.t.abs(), out.x_max()),
                )?;
                table.param("spectral_points", sg.len());
                evolve_diagonalized(params, &psi0, a.t, &sg, out)?
            }
        }
        Route::Reference => {
            let length = reference_length(params, &psi0, a.t, a.x_max)?;
            table.param("box_length", num(length));
            table.param("grid_n", a.grid_n);
            ReferencePropagator::with_scheme(params, length, a.grid_n, Scheme::PowerLaw)?
                .evolve(&psi0, a.t)?
        }
    };
    table.param("norm_initial", num(psi0.norm()));
    table.param("norm_final", num(state.value.norm()));
    table.warn(state.warnings);
    state_rows(&mut table, &state.value);
    Ok(table)
}

pub fn dispersive_cmd(a: &DispersiveArgs) -> Result<Table> {
    let mut table = Table::new("dispersive-scan");
    let params = params_into(&mut table, a.common.alpha)?;
    let s = match a.s {
        WeightArg::Max => params.nu() + 0.5,
        WeightArg::Value(v) => v,
    };
    table.param("s", num(s));
    let mut config = ScanConfig::dispersive(a.common.alpha, s, a.t_min, a.t_max, a.t_points);
    config.x_max = a.x_max;
    config.grid_n = a.grid_n;
    config.validate_dispersive()?;
    if let Some(beta) = a.beta {
        if !(beta > s + 0.5) {
            return Err(Error::Precondition(format!(
                "beta must exceed s + 1/2 = {} (got {beta})",
                s + 0.5
            )));
        }
    }
    table.param(
        "t_range",
        format!("[{}, {}] x {} log-spaced", a.t_min, a.t_max, a.t_points),
    );
    table.param(
        "x_max",
        a.x_max.map_or(
            "10*sqrt(2t), doubled until the boundary check passes".into(),
            |x| x.to_string(),
        ),
    );
    table.param("grid_n", a.grid_n);
    let scan = dispersive_scan(&config)?;
    table.warn(scan.warnings);
    match a.beta {
        None => {
            table.columns(&["t", "sup_value"]);
            for &(t, v) in &scan.value.samples {
                table.row(&[t, v]);
            }
            table.fit("sup_value", &scan.value.fit);
        }
        Some(beta) => {
            table.param("beta", beta);
            table.param(
                "probes",
                "x^(nu+1/2) Gaussian pairs, centers {1,2,4,6,8}, widths {0.5,1,2}",
            );
            let l2 = l2_weighted_decay(params, s, beta, &config.samples(), &decay_probes(params))?;
            table.warn(l2.warnings);
            table.columns(&["t", "sup_value", "l2_value"]);
            for (&(t, v), &(_, w)) in scan.value.samples.iter().zip(&l2.value.samples) {
                table.row(&[t, v, w]);
            }
            table.fit("sup_value", &scan.value.fit);
            table.fit("l2_value", &l2.value.fit);
        }
    }
    Ok(table)
}

pub fn threshold_cmd(a: &ThresholdArgs) -> Result<Table> {
    let mut table = Table::new("threshold-scan");
    let params = params_into(&mut table, a.common.alpha)?;
    let s = match (a.s, a.eps) {
        (Some(s), _) => s,
        (None, eps) => params.nu() + 1.0 + eps.unwrap_or(0.5),
    };
    table.param("s", num(s));
    let mut config = ScanConfig::threshold(
        a.common.alpha,
        s,
        a.lambda_min,
        a.lambda_max,
        a.lambda_points,
    );
    config.x_max = a.x_max;
    config.panels_per_wavelength = a.grid_n as f64;
    config.validate_threshold()?;
    table.param(
        "lambda_range",
        format!(
            "[{}, {}] x {} log-spaced",
            a.lambda_min, a.lambda_max, a.lambda_points
        ),
    );
    table.param(
        "x_max",
        a.x_max.map_or("1e4/sqrt(lambda)".into(), |x| x.to_string()),
    );
    table.param("panels_per_wavelength", a.grid_n);
    let lambdas = config.samples();
    table.columns(&[
        "lambda",
        "scaled_e1_norm",
        "scaled_density_norm",
        "derivative_norm",
    ]);
    let mut cols: [Vec<(f64, f64)>; 3] = Default::default();
    for &lambda in &lambdas {
        let mut row = vec![lambda];
        for (k, kind) in [
            ThresholdKernel::Remainder,
            ThresholdKernel::ScaledDensity,
            ThresholdKernel::Derivative,
        ]
        .into_iter()
        .enumerate()
        {
            let r = threshold_norm(&config, kind, lambda)?;
            table.warn(r.warnings);
            cols[k].push((lambda, r.value));
            row.push(r.value);
        }
        table.row(&row);
    }
    table.footer(format!(
        "e0_norm = {}",
        num(e0_weighted_norm(&config, lambdas[0])?)
    ));
    for (label, col) in ["scaled_e1_norm", "scaled_density_norm", "derivative_norm"]
        .iter()
        .zip(&cols)
    {
        table.fit(label, &halfline::estimates::fit_power_law(col)?);
    }
    Ok(table)
}

pub fn oracle_cmd(a: &OracleArgs) -> Result<Table> {
    let mut table = Table::new("oracle-compare");
    let params = params_into(&mut table, a.common.alpha)?;
    table.param("grid_n", a.grid_n);
    match a.what {
        What::Density => {
            let length = a.x_max.unwrap_or(200.0);
            table.param("lambda", a.lambda);
            table.param("eps", a.eps);
            table.param("box_length", length);
            let probes = Arc::new(Grid::from_points(vec![0.5, 1.0, 1.5, 2.0, 2.5], 3.0)?);
            let reference = resolvent_density_reference(
                params,
                a.lambda,
                a.eps,
                length,
                a.grid_n,
                probes.clone(),
            )?;
            table.columns(&["x", "y", "reference", "analytic", "relative_error"]);
            let mut worst = 0.0_f64;
            for (i, &x) in probes.points().iter().enumerate() {
                for (j, &y) in probes.points().iter().enumerate() {
                    let exact = spectral_density_kernel(params, a.lambda, x, y)?;
                    let r = reference.get(i, j);
                    let rel = (r - exact).abs() / exact.abs();
                    worst = worst.max(rel);
                    table.row(&[x, y, r, exact, rel]);
                }
            }
            table.footer(format!("max_relative_error = {}", num(worst)));
        }
        What::Propagator => {
            table.param("t", a.t);
            let psi0 = bump(&mut table, &a.bump)?;
            let out = ballistic_grid(params, &psi0, a.t)?;
            let length = reference_length(params, &psi0, a.t, a.x_max)?;
            table.param("box_length", num(length));
            let k = evolve_onto(params, &psi0, a.t, out.clone(), EvolvePlan::default())?;
            let sg =
                SpectralGrid::adapted(params, &psi0, SpectralPlan::new(a.t.abs(), out.x_max()))?;
            let h = evolve_diagonalized(params, &psi0, a.t, &sg, out)?;
            let f = ReferencePropagator::with_scheme(params, length, a.grid_n, Scheme::PowerLaw)?
                .evolve(&psi0, a.t)?;
            table.warn(k.warnings.into_iter().chain(h.warnings).chain(f.warnings));
            let (k, h, f) = (k.value, h.value, f.value);
            table.columns(&[
                "x",
                "kernel_re",
                "kernel_im",
                "hankel_re",
                "hankel_im",
                "reference_re",
                "reference_im",
            ]);
            for (i, &x) in k.grid().points().iter().enumerate() {
                let (kv, hv, fv) = (k.values()[i], h.values()[i], f.at(x));
                table.row(&[x, kv.re, kv.im, hv.re, hv.im, fv.re, fv.im]);
            }
            table.footer(format!(
                "distance kernel-hankel = {}",
                num(k.l2_distance(&h))
            ));
            table.footer(format!(
                "distance kernel-reference = {}",
                num(k.l2_distance(&f))
            ));
            table.footer(format!(
                "distance hankel-reference = {}",
                num(h.l2_distance(&f))
            ));
            table.footer(format!(
                "norms initial={} kernel={} hankel={} reference={}",
                num(psi0.norm()),
                num(k.norm()),
                num(h.norm()),
                num(f.norm())
            ));
        }
        other => {
            return Err(Error::Precondition(
                format!("oracle-compare supports --what density or propagator, not {other:?}")
                    .to_lowercase(),
            ))
        }
    }
    Ok(table)
}
