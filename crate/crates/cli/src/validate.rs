//! Oracle and invariant checks behind the `validate` command.
//!
//! Oracle comparisons use `R = max(R_case, 20)` so that the closed forms,
//! which live on the whole half-line, are not confused with domain
//! truncation.

use std::sync::Arc;

use cbe_core::metrics::{consecutive_term_norm, moments_over_time, MomentSource};
use cbe_core::series::{oracle_terms, ORACLE_TABLE};
use cbe_core::{
    build_grid, integrate, registry_case, FvmOperator, Grid, GridFunction, GridScheme,
    SeriesBuilder, SeriesMethod, Stepper, CASE_IDS,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
        }
    }
}

const ORACLE_CELLS: usize = 1000;
const ORACLE_TOL: f64 = 1e-3;

fn rel_l1(num: &GridFunction, reference: &GridFunction) -> CliResult<f64> {
    Ok(num.l1_distance(reference)? / reference.l1_norm())
}

/// `oracle_scale` multiplies every closed-form term; anything but 1 should
/// make the oracle checks fail.
pub fn oracle_checks(oracle_scale: f64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for &(case_id, method, m) in ORACLE_TABLE {
        let case = registry_case(case_id)?;
        let rmax = case.rmax.max(20.0);
        let case = case.with_rmax(rmax)?;
        let grid = build_grid(rmax, ORACLE_CELLS, GridScheme::Uniform)?;
        let method = match method {
            "ham" => SeriesMethod::Ham {
                alpha: case
                    .reference_alpha
                    .expect("ham oracles come with a reference alpha"),
            },
            _ => SeriesMethod::Ahpm,
        };
        let series = SeriesBuilder::new(&case, &grid).build(method, m)?;
        let oracle = oracle_terms(case_id, method, m, &grid)?.scale(oracle_scale);
        let err = rel_l1(&series.terms[m].eval(case.tend), &oracle.eval(case.tend))?;
        out.push(Check::at_most(
            format!("oracle/{case_id}/{}/{m}", method.name()),
            err,
            ORACLE_TOL,
        ));
    }
    Ok(out)
}

/// Coefficient of `t^m` in `(1+t)² e^{-e(1+t)}`.
pub fn ex1_taylor_coeff(m: usize, e: f64) -> f64 {
    let mut s = 0.0;
    for (k, binom) in [1.0, 2.0, 1.0].into_iter().enumerate().take(m + 1) {
        let p = m - k;
        let fact: f64 = (1..=p).map(|v| v as f64).product();
        s += binom * (-e).powi(p as i32) / fact;
    }
    (-e).exp() * s
}

fn taylor_checks() -> CliResult<Vec<Check>> {
    let case = registry_case("ex1")?.with_rmax(20.0)?;
    let grid = build_grid(20.0, ORACLE_CELLS, GridScheme::Uniform)?;
    let series = SeriesBuilder::new(&case, &grid).ahpm(4)?;
    (1..=4)
        .map(|m| {
            let taylor = GridFunction::from_fn(grid.clone(), |e| ex1_taylor_coeff(m, e));
            // the m-th term is a pure t^m monomial, so its value at t = 1 is the coefficient
            let err = rel_l1(&series.terms[m].eval(1.0), &taylor)?;
            Ok(Check::at_most(
                format!("taylor/ex1/ahpm/{m}"),
                err,
                ORACLE_TOL,
            ))
        })
        .collect()
}

/// Triple-loop evaluation of the finite-volume right-hand side.
pub fn brute_force_rhs(case_id: &str, grid: &Grid, f: &[f64]) -> CliResult<Vec<f64>> {
    let case = registry_case(case_id)?;
    let (k, b) = (&case.kernel, &case.breakage);
    let (x, dx, edges) = (grid.midpoints(), grid.widths(), grid.edges());
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let mut birth = 0.0;
            for l in 0..n {
                for j in i..n {
                    let lam = if j == i { x[i] } else { edges[i + 1] };
                    let w = b.fragments_in(edges[i], lam, x[j]);
                    birth += k.rate(x[j], x[l]) * f[j] * f[l] * dx[j] * dx[l] * w;
                }
            }
            let death: f64 = (0..n)
                .map(|j| k.rate(x[i], x[j]) * f[i] * f[j] * dx[j])
                .sum();
            birth / dx[i] - death
        })
        .collect())
}

fn rhs_checks() -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for case_id in CASE_IDS {
        let case = registry_case(case_id)?;
        for (cells, scheme) in [
            (5, GridScheme::Uniform),
            (20, GridScheme::Uniform),
            (12, GridScheme::Geometric { eps_min: 0.05 }),
        ] {
            let grid: Arc<Grid> = build_grid(case.rmax.min(4.0), cells, scheme)?;
            let f: Vec<f64> = (0..cells)
                .map(|i| 0.5 + ((i * 7919) % 13) as f64 / 13.0)
                .collect();
            let fast = FvmOperator::new(grid.clone(), case.kernel.clone(), &case.breakage)
                .rhs(&GridFunction::new(grid.clone(), f.clone())?)?;
            let slow = brute_force_rhs(case_id, &grid, &f)?;
            let err = fast
                .values()
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let label = if matches!(scheme, GridScheme::Uniform) {
                "uniform"
            } else {
                "geometric"
            };
            out.push(Check::at_most(
                format!("rhs/{case_id}/{label}{cells}"),
                err,
                1e-12,
            ));
        }
    }
    Ok(out)
}

fn mass_checks() -> CliResult<Vec<Check>> {
    CASE_IDS
        .iter()
        .map(|&case_id| {
            let case = registry_case(case_id)?;
            let grid = build_grid(case.rmax, 300, GridScheme::Uniform)?;
            let times: Vec<f64> = (0..=10).map(|k| case.tend * k as f64 / 10.0).collect();
            let sol = integrate(&case, &grid, &times, Stepper::default())?;
            let table = moments_over_time(case_id, "fvm", MomentSource::Fvm(&sol), &times)?;
            Ok(Check::at_most(
                format!("mass/{case_id}/fvm"),
                table.mass_drift(),
                1e-2,
            ))
        })
        .collect()
}

/// Consecutive-term norms on ex2 must shrink from m = 3 to 5; the check value
/// is the largest ratio `‖f_m‖ / ‖f_{m-1}‖`.
fn term_checks() -> CliResult<Vec<Check>> {
    let case = registry_case("ex2")?;
    let grid = build_grid(case.rmax, 300, GridScheme::Uniform)?;
    let builder = SeriesBuilder::new(&case, &grid);
    let alpha = case.reference_alpha.expect("ex2 has a reference alpha");
    [("ham", builder.ham(5, alpha)?), ("ahpm", builder.ahpm(5)?)]
        .into_iter()
        .map(|(name, s)| {
            let norms = (2..=5)
                .map(|m| consecutive_term_norm(&s, m, case.tend))
                .collect::<Result<Vec<_>, _>>()?;
            let worst = norms.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            Ok(Check {
                name: format!("terms/ex2/{name}"),
                value: worst,
                tol: 1.0,
                passed: worst < 1.0,
            })
        })
        .collect()
}

fn breakage_checks() -> CliResult<Vec<Check>> {
    CASE_IDS
        .iter()
        .map(|&case_id| {
            let case = registry_case(case_id)?;
            let worst = [0.1, 1.0, 3.7, 10.0]
                .iter()
                .map(|&r| (case.breakage.mass_residual(r) / r).abs())
                .fold(0.0, f64::max);
            Ok(Check::at_most(
                format!("breakage-mass/{case_id}"),
                worst,
                1e-12,
            ))
        })
        .collect()
}

/// All checks, in a fixed order.
pub fn run_checks(oracle_scale: f64) -> CliResult<Vec<Check>> {
    let mut checks = oracle_checks(oracle_scale)?;
    checks.extend(taylor_checks()?);
    checks.extend(rhs_checks()?);
    checks.extend(breakage_checks()?);
    checks.extend(mass_checks()?);
    checks.extend(term_checks()?);
    Ok(checks)
}

/// Error naming the first failing check, if any.
pub fn verdict(checks: &[Check]) -> CliResult<()> {
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(CliError::Validation(format!(
            "first failing check {} (value {:e}, tolerance {:e})",
            c.name, c.value, c.tol
        ))),
        None => Ok(()),
    }
}
