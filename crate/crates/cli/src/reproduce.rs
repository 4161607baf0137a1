//! Data for every figure and the convergence table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use cbe_core::metrics::{abs_error_grid, consecutive_term_norm};
use cbe_core::{build_grid, registry_case, CaseSpec, Grid, GridFunction, GridScheme};

use crate::commands::{eoc_reports, eoc_rows, EocConfig};
use crate::config::{canonical, hash_text, AlphaMode, Method, Settings};
use crate::error::{CliError, CliResult};
use crate::output::{concentration_table, moment_table, Table};
use crate::run::{
    push_concentration, push_exact_moments, push_moments, run_fvm, run_series, series_moments,
    RunRecord, SeriesRun,
};

const FIGURE_CELLS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    Fig1,
    Fig7,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6,
    Table1,
}

impl Figure {
    pub const ALL: [Figure; 9] = [
        Self::Fig1,
        Self::Fig7,
        Self::Fig2,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig4,
        Self::Fig5,
        Self::Fig6,
        Self::Table1,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig7 => "fig7",
            Self::Fig2 => "fig2",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Table1 => "table1",
        }
    }

    fn case_id(self) -> &'static str {
        match self {
            Self::Fig1 | Self::Fig7 | Self::Fig2 | Self::Table1 => "ex1",
            Self::Fig3a | Self::Fig3b | Self::Fig4 => "ex2",
            Self::Fig5 | Self::Fig6 => "ex3",
        }
    }
}

impl FromStr for Figure {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| CliError::Config(format!("unknown figure id `{s}`")))
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Expands `all` and removes duplicates, keeping the canonical order.
pub fn parse_ids(ids: &[String]) -> CliResult<Vec<Figure>> {
    if ids.is_empty() {
        return Err(CliError::Config(
            "name at least one figure id or `all`".into(),
        ));
    }
    let mut out = Vec::new();
    for id in ids {
        if id == "all" {
            out.extend(Figure::ALL);
        } else {
            out.push(id.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Writes `<out>/<id>/…` for every figure, running them concurrently.
pub fn reproduce(figures: &[Figure], out: &Path) -> CliResult<Vec<PathBuf>> {
    let results: Vec<CliResult<PathBuf>> = std::thread::scope(|s| {
        let handles: Vec<_> = figures
            .iter()
            .map(|&fig| {
                let dir = out.join(fig.id());
                s.spawn(move || reproduce_one(fig, &dir).map(|_| dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("figure worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

fn series_order(case: &CaseSpec) -> usize {
    if case.id == "ex3" {
        3
    } else {
        5
    }
}

fn snapshot_times(case: &CaseSpec) -> Vec<f64> {
    (0..=10).map(|k| case.tend * k as f64 / 10.0).collect()
}

/// Geometric cells resolve the small sizes on log-log concentration plots.
fn plot_grid(case: &CaseSpec) -> CliResult<(Arc<Grid>, String)> {
    let eps_min = case.rmax * 1e-4;
    let grid = build_grid(case.rmax, FIGURE_CELLS, GridScheme::Geometric { eps_min })?;
    Ok((grid, format!("geometric:{eps_min:e}")))
}

struct Curves {
    fvm: GridFunction,
    ham: SeriesRun,
    ahpm: SeriesRun,
}

fn final_curves(case: &CaseSpec, grid: &Arc<Grid>) -> CliResult<Curves> {
    let order = series_order(case);
    Ok(Curves {
        fvm: run_fvm(case, grid, &[case.tend])?.last().clone(),
        ham: run_series(case, grid, Method::Ham, order, AlphaMode::Auto)?,
        ahpm: run_series(case, grid, Method::Ahpm, order, AlphaMode::Auto)?,
    })
}

fn entries(
    fig: Figure,
    case: &CaseSpec,
    grid: &str,
    extra: &[(&str, String)],
) -> Vec<(String, String)> {
    let mut e = vec![
        ("figure".to_string(), fig.id().to_string()),
        ("case".to_string(), case.id.clone()),
        ("rmax".to_string(), format!("{:e}", case.rmax)),
        ("tend".to_string(), format!("{:e}", case.tend)),
        ("grid".to_string(), grid.to_string()),
        ("cells".to_string(), FIGURE_CELLS.to_string()),
        ("order".to_string(), series_order(case).to_string()),
        ("alpha".to_string(), "auto".to_string()),
    ];
    e.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    e
}

fn reproduce_one(fig: Figure, dir: &Path) -> CliResult<()> {
    let started = Instant::now();
    let case = registry_case(fig.case_id())?;
    let order = series_order(&case);
    let t = case.tend;
    let (entries, tables, ham): (_, Vec<(&str, Table)>, Option<SeriesRun>) = match fig {
        Figure::Fig1 | Figure::Fig3a | Figure::Fig5 | Figure::Fig7 => {
            let (grid, label) = plot_grid(&case)?;
            let c = final_curves(&case, &grid)?;
            let ham_sum = c.ham.solution.truncated_sum(order, t)?;
            let ahpm_sum = c.ahpm.solution.truncated_sum(order, t)?;
            let mut table = concentration_table();
            let name = if fig == Figure::Fig7 {
                for (m, o, a, g) in [
                    ("fvm", None, None, &c.fvm),
                    ("ham", Some(order), c.ham.alpha, &ham_sum),
                    ("ahpm", Some(order), None, &ahpm_sum),
                ] {
                    push_concentration(
                        &mut table,
                        &case.id,
                        m,
                        o,
                        a,
                        t,
                        &abs_error_grid(g, &case, t)?,
                    );
                }
                "abs_error.csv"
            } else {
                push_concentration(&mut table, &case.id, "fvm", None, None, t, &c.fvm);
                push_concentration(
                    &mut table,
                    &case.id,
                    "ham",
                    Some(order),
                    c.ham.alpha,
                    t,
                    &ham_sum,
                );
                push_concentration(
                    &mut table,
                    &case.id,
                    "ahpm",
                    Some(order),
                    None,
                    t,
                    &ahpm_sum,
                );
                if case.has_exact_concentration() {
                    let exact = GridFunction::from_fn(grid.clone(), |e| {
                        case.exact_concentration(t, e).expect("positive midpoint")
                    });
                    push_concentration(&mut table, &case.id, "exact", None, None, t, &exact);
                }
                "concentration.csv"
            };
            (
                entries(fig, &case, &label, &[]),
                vec![(name, table)],
                Some(c.ham),
            )
        }
        Figure::Fig2 | Figure::Fig4 | Figure::Fig6 => {
            let grid = build_grid(case.rmax, FIGURE_CELLS, GridScheme::Uniform)?;
            let times = snapshot_times(&case);
            let fvm = run_fvm(&case, &grid, &times)?;
            let ham = run_series(&case, &grid, Method::Ham, order, AlphaMode::Auto)?;
            let ahpm = run_series(&case, &grid, Method::Ahpm, order, AlphaMode::Auto)?;
            let mut table = moment_table();
            push_moments(&mut table, &case.id, "fvm", &fvm.moments);
            push_moments(&mut table, &case.id, "ham", &series_moments(&ham, &times)?);
            push_moments(
                &mut table,
                &case.id,
                "ahpm",
                &series_moments(&ahpm, &times)?,
            );
            push_exact_moments(&mut table, &case, &times);
            (
                entries(fig, &case, "uniform", &[]),
                vec![("moments.csv", table)],
                Some(ham),
            )
        }
        Figure::Fig3b => {
            let grid = build_grid(case.rmax, FIGURE_CELLS, GridScheme::Uniform)?;
            let ham = run_series(&case, &grid, Method::Ham, order, AlphaMode::Auto)?;
            let ahpm = run_series(&case, &grid, Method::Ahpm, order, AlphaMode::Auto)?;
            let mut table = Table::new(&["case", "method", "m", "norm"]);
            for (name, run) in [("ham", &ham), ("ahpm", &ahpm)] {
                for m in 1..=order {
                    let norm = consecutive_term_norm(&run.solution, m, t)?;
                    table.push(vec![
                        case.id.as_str().into(),
                        name.into(),
                        m.into(),
                        norm.into(),
                    ]);
                }
            }
            (
                entries(fig, &case, "uniform", &[]),
                vec![("term_norms.csv", table)],
                Some(ham),
            )
        }
        Figure::Table1 => {
            let mut s = Settings::new();
            s.insert("case".into(), case.id.clone());
            s.insert("order".into(), order.to_string());
            let cfg = EocConfig::from_settings(&s)?;
            let (reports, ham) = eoc_reports(&cfg)?;
            let mut e = cfg.entries();
            e.insert(0, ("figure".into(), fig.id().into()));
            (e, vec![("eoc.csv", eoc_rows(&reports))], ham)
        }
    };

    let hash = hash_text(&canonical(&entries));
    let rendered = tables
        .iter()
        .map(|(name, t)| t.render(&hash).map(|text| (*name, text)))
        .collect::<CliResult<Vec<_>>>()?;
    for (name, text) in rendered {
        crate::output::write_file(&dir.join(name), &text)?;
    }
    RunRecord::new(&format!("reproduce {}", fig.id()), &entries, started)
        .with_series(ham.as_ref())
        .write(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_and_expand() {
        assert_eq!(parse_ids(&["all".into()]).unwrap().len(), 9);
        let ids = parse_ids(&["table1".into(), "fig6".into(), "fig6".into()]).unwrap();
        assert_eq!(ids, vec![Figure::Fig6, Figure::Table1]);
        assert_eq!(parse_ids(&["fig9".into()]).unwrap_err().code(), 2);
        assert!(parse_ids(&[]).is_err());
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
    }
}
