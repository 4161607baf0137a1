//! Pieces shared by the subcommands: running a method on a grid and turning
//! results into table rows.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use cbe_core::fvm::MomentRow;
use cbe_core::series::{averaged_residual, optimize_alpha, AlphaSearch, CollocationSpec};
use cbe_core::{
    integrate, CaseSpec, FvmSolution, Grid, GridFunction, SeriesBuilder, SeriesSolution, StepStats,
    Stepper,
};
use serde::Serialize;

use crate::config::{canonical, hash_text, AlphaMode, Method};
use crate::error::CliResult;
use crate::output::{write_json, Cell, Table};

/// A series solution and, for HAM, the control parameter it was built with.
#[derive(Debug, Clone)]
pub struct SeriesRun {
    pub solution: SeriesSolution,
    pub alpha: Option<f64>,
    /// `A(alpha)` for HAM runs.
    pub residual: Option<f64>,
}

/// Collocation used for `A(alpha)`: as many nodes as the series order.
pub fn collocation(case: &CaseSpec, order: usize) -> CollocationSpec {
    CollocationSpec::default_for(order.max(1), case.tend, case.rmax)
}

pub fn run_series(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    method: Method,
    order: usize,
    alpha: AlphaMode,
) -> CliResult<SeriesRun> {
    let builder = SeriesBuilder::new(case, grid);
    match method {
        Method::Ahpm => Ok(SeriesRun {
            solution: builder.ahpm(order)?,
            alpha: None,
            residual: None,
        }),
        Method::Ham => {
            let colloc = collocation(case, order);
            let (a, value) = match alpha {
                AlphaMode::Auto => {
                    let opt = optimize_alpha(case, grid, order, &colloc, AlphaSearch::default())?;
                    (opt.alpha, opt.value)
                }
                AlphaMode::Fixed(a) => (a, averaged_residual(case, grid, order, a, &colloc)?),
            };
            Ok(SeriesRun {
                solution: builder.ham(order, a)?,
                alpha: Some(a),
                residual: Some(value),
            })
        }
        Method::Fvm => unreachable!("finite volumes are not a series method"),
    }
}

/// Integrates with the default adaptive stepper; `times` need not start at 0.
pub fn run_fvm(case: &CaseSpec, grid: &Arc<Grid>, times: &[f64]) -> CliResult<FvmSolution> {
    let mut all = Vec::with_capacity(times.len() + 1);
    if times.first() != Some(&0.0) {
        all.push(0.0);
    }
    all.extend_from_slice(times);
    Ok(integrate(case, grid, &all, Stepper::default())?)
}

pub fn push_concentration(
    table: &mut Table,
    case_id: &str,
    method: &str,
    order: Option<usize>,
    alpha: Option<f64>,
    time: f64,
    g: &GridFunction,
) {
    for (&e, &v) in g.grid().midpoints().iter().zip(g.values()) {
        table.push(vec![
            case_id.into(),
            method.into(),
            order.map_or(Cell::Empty, Cell::Int),
            alpha.into(),
            time.into(),
            e.into(),
            v.into(),
        ]);
    }
}

pub fn push_moments(table: &mut Table, case_id: &str, method: &str, rows: &[MomentRow]) {
    for r in rows {
        table.push(vec![
            case_id.into(),
            method.into(),
            r.time.into(),
            r.m0.into(),
            r.m1.into(),
            r.m2.into(),
        ]);
    }
}

/// Exact moments where a closed form exists; unknown orders stay empty.
pub fn push_exact_moments(table: &mut Table, case: &CaseSpec, times: &[f64]) {
    for &t in times {
        let m = |k| case.exact_moment(k, t).ok();
        table.push(vec![
            case.id.as_str().into(),
            "exact".into(),
            t.into(),
            m(0).into(),
            m(1).into(),
            m(2).into(),
        ]);
    }
}

pub fn series_moments(run: &SeriesRun, times: &[f64]) -> CliResult<Vec<MomentRow>> {
    let order = run.solution.order();
    times
        .iter()
        .map(|&t| Ok(MomentRow::of(t, &run.solution.truncated_sum(order, t)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Steps {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl From<StepStats> for Steps {
    fn from(s: StepStats) -> Self {
        Self {
            accepted: s.accepted,
            rejected: s.rejected,
            rhs_evals: s.rhs_evals,
        }
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub alpha_star: Option<f64>,
    pub averaged_residual: Option<f64>,
    pub steps: Option<Steps>,
    pub wall_time_s: f64,
    pub version: &'static str,
}

impl RunRecord {
    pub fn new(command: &str, entries: &[(String, String)], started: Instant) -> Self {
        Self {
            command: command.to_string(),
            config: entries.iter().cloned().collect(),
            config_hash: hash_text(&canonical(entries)),
            alpha_star: None,
            averaged_residual: None,
            steps: None,
            wall_time_s: started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn with_series(mut self, run: Option<&SeriesRun>) -> Self {
        if let Some(r) = run {
            self.alpha_star = r.alpha;
            self.averaged_residual = r.residual;
        }
        self
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("run.json"), self)
    }
}
