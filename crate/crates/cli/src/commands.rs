//! `solve`, `eoc` and `optimize-alpha`.

use std::path::PathBuf;
use std::time::Instant;

use cbe_core::metrics::{check_doubling, number_error, EocReport};
use cbe_core::series::{optimize_alpha, AlphaOptimum, AlphaSearch};
use cbe_core::{build_grid, CaseSpec};

use crate::config::{canonical, hash_text, parse_list, AlphaMode, Method, RunConfig, Settings};
use crate::error::{CliError, CliResult};
use crate::output::{concentration_table, eoc_table, moment_table, Table};
use crate::run::{
    collocation, push_concentration, push_moments, run_fvm, run_series, series_moments, RunRecord,
    SeriesRun,
};

/// What `solve` produced, for printing.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub out: PathBuf,
    pub record: RunRecord,
}

pub fn solve(cfg: &RunConfig) -> CliResult<SolveOutcome> {
    let started = Instant::now();
    let case = cfg.case_spec()?;
    let grid = build_grid(cfg.rmax, cfg.cells, cfg.scheme)?;
    let hash = cfg.hash();
    let mut conc = concentration_table();
    let mut moments = moment_table();
    let method = cfg.method.name();

    let (steps, series) = match cfg.method {
        Method::Fvm => {
            let sol = run_fvm(&case, &grid, &cfg.times)?;
            for &t in &cfg.times {
                let g = sol.at(t).expect("snapshot at every requested time");
                push_concentration(&mut conc, &case.id, method, None, None, t, g);
            }
            let rows: Vec<_> = sol
                .moments
                .iter()
                .filter(|r| cfg.times.contains(&r.time))
                .copied()
                .collect();
            push_moments(&mut moments, &case.id, method, &rows);
            (Some(sol.stats.into()), None)
        }
        Method::Ham | Method::Ahpm => {
            let run = run_series(&case, &grid, cfg.method, cfg.order, cfg.alpha)?;
            for &t in &cfg.times {
                let g = run.solution.truncated_sum(cfg.order, t)?;
                push_concentration(
                    &mut conc,
                    &case.id,
                    method,
                    Some(cfg.order),
                    run.alpha,
                    t,
                    &g,
                );
            }
            push_moments(
                &mut moments,
                &case.id,
                method,
                &series_moments(&run, &cfg.times)?,
            );
            (None, Some(run))
        }
    };

    // render both before writing either so a non-finite value leaves no partial output
    let conc_text = conc.render(&hash)?;
    let moment_text = moments.render(&hash)?;
    crate::output::write_file(&cfg.out.join("concentration.csv"), &conc_text)?;
    crate::output::write_file(&cfg.out.join("moments.csv"), &moment_text)?;

    let mut record = RunRecord::new("solve", &cfg.entries(), started).with_series(series.as_ref());
    record.steps = steps;
    record.write(&cfg.out)?;
    Ok(SolveOutcome {
        out: cfg.out.clone(),
        record,
    })
}

/// Settings for `eoc`, where `cells` is a doubling list and `method` may list
/// several methods or say `all`.
#[derive(Debug, Clone)]
pub struct EocConfig {
    pub run: RunConfig,
    pub methods: Vec<Method>,
    pub cells: Vec<usize>,
}

impl EocConfig {
    pub fn from_settings(settings: &Settings) -> CliResult<Self> {
        let mut s = settings.clone();
        s.entry("case".into()).or_insert_with(|| "ex1".into());
        let cells = match s.remove("cells") {
            Some(list) => parse_list::<usize>("cells", &list)?,
            None => vec![30, 60, 120, 240],
        };
        check_doubling(&cells).map_err(|e| CliError::Config(e.to_string()))?;
        let methods = match s.remove("method").as_deref() {
            None | Some("all") => vec![Method::Fvm, Method::Ham, Method::Ahpm],
            Some(list) => parse_list::<Method>("method", list)?,
        };
        if methods.is_empty() {
            return Err(CliError::Config("no methods given".into()));
        }
        let run = RunConfig::from_settings(&s)?;
        let case = run.case_spec()?;
        if !case.has_exact_concentration() {
            return Err(CliError::Config(format!(
                "case {} has no exact concentration to measure errors against",
                case.id
            )));
        }
        Ok(Self {
            run,
            methods,
            cells,
        })
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<_> = self
            .run
            .entries()
            .into_iter()
            .filter(|(k, _)| !matches!(k.as_str(), "method" | "cells" | "times"))
            .collect();
        let methods: Vec<_> = self.methods.iter().map(|m| m.name()).collect();
        let cells: Vec<_> = self.cells.iter().map(usize::to_string).collect();
        e.push(("methods".into(), methods.join(",")));
        e.push(("cell_list".into(), cells.join(",")));
        e
    }
}

/// Number-density errors at the end time on each grid and the resulting
/// orders. HAM in auto mode takes `alpha*` from the finest grid and keeps it
/// fixed across the sequence.
pub fn eoc_reports(cfg: &EocConfig) -> CliResult<(Vec<EocReport>, Option<SeriesRun>)> {
    let case = cfg.run.case_spec()?;
    let tend = case.tend;
    let order = cfg.run.order;
    let mut ham_alpha = None;
    let mut ham_probe = None;
    let mut reports = Vec::new();
    for &method in &cfg.methods {
        if method == Method::Ham && ham_alpha.is_none() {
            let finest = *cfg.cells.last().unwrap();
            let grid = build_grid(case.rmax, finest, cfg.run.scheme)?;
            let run = run_series(&case, &grid, Method::Ham, order, cfg.run.alpha)?;
            ham_alpha = run.alpha;
            ham_probe = Some(run);
        }
        let mut errors = Vec::with_capacity(cfg.cells.len());
        for &cells in &cfg.cells {
            let grid = build_grid(case.rmax, cells, cfg.run.scheme)?;
            let approx = match method {
                Method::Fvm => run_fvm(&case, &grid, &[tend])?.last().clone(),
                Method::Ham => {
                    let alpha = AlphaMode::Fixed(ham_alpha.expect("alpha chosen above"));
                    run_series(&case, &grid, method, order, alpha)?
                        .solution
                        .truncated_sum(order, tend)?
                }
                Method::Ahpm => run_series(&case, &grid, method, order, AlphaMode::Auto)?
                    .solution
                    .truncated_sum(order, tend)?,
            };
            errors.push((cells, number_error(&approx, &case, tend)?));
        }
        reports.push(EocReport::from_errors(&case.id, method.name(), &errors)?);
    }
    Ok((reports, ham_probe))
}

pub fn eoc_rows(reports: &[EocReport]) -> Table {
    let mut t = eoc_table();
    for r in reports {
        for row in &r.rows {
            t.push(vec![
                r.case_id.as_str().into(),
                r.method.as_str().into(),
                row.cells.into(),
                row.error.into(),
                row.eoc.into(),
            ]);
        }
    }
    t
}

pub fn eoc(cfg: &EocConfig) -> CliResult<Vec<EocReport>> {
    let started = Instant::now();
    let entries = cfg.entries();
    let (reports, ham) = eoc_reports(cfg)?;
    eoc_rows(&reports).write(
        &cfg.run.out.join("eoc.csv"),
        &hash_text(&canonical(&entries)),
    )?;
    RunRecord::new("eoc", &entries, started)
        .with_series(ham.as_ref())
        .write(&cfg.run.out)?;
    Ok(reports)
}

/// `A(alpha)` minimisation with `n` collocation nodes per axis
/// (default: the series order).
pub fn optimize(cfg: &RunConfig, colloc_nodes: Option<usize>) -> CliResult<AlphaOptimum> {
    let started = Instant::now();
    let case: CaseSpec = cfg.case_spec()?;
    let grid = build_grid(cfg.rmax, cfg.cells, cfg.scheme)?;
    let colloc = match colloc_nodes {
        Some(0) => {
            return Err(CliError::Config(
                "need at least one collocation node".into(),
            ))
        }
        Some(n) => cbe_core::series::CollocationSpec::default_for(n, case.tend, case.rmax),
        None => collocation(&case, cfg.order),
    };
    let opt = optimize_alpha(&case, &grid, cfg.order, &colloc, AlphaSearch::default())?;

    let mut entries: Vec<_> = cfg
        .entries()
        .into_iter()
        .filter(|(k, _)| !matches!(k.as_str(), "method" | "alpha" | "times"))
        .collect();
    entries.push(("colloc_nodes".into(), colloc.times.len().to_string()));
    let mut t = Table::new(&["case", "order", "alpha", "residual"]);
    for &(a, v) in &opt.scan {
        t.push(vec![
            case.id.as_str().into(),
            cfg.order.into(),
            a.into(),
            v.into(),
        ]);
    }
    t.write(
        &cfg.out.join("alpha_scan.csv"),
        &hash_text(&canonical(&entries)),
    )?;

    let mut record = RunRecord::new("optimize-alpha", &entries, started);
    record.alpha_star = Some(opt.alpha);
    record.averaged_residual = Some(opt.value);
    record.write(&cfg.out)?;
    Ok(opt)
}
