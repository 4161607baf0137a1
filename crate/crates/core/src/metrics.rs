//! Moments, error measures, convergence orders and series diagnostics.

use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::fvm::{FvmSolution, MomentRow};
use crate::grid::{Grid, GridFunction};
use crate::problem::CaseSpec;
use crate::quadrature::GaussRule;
use crate::series::SeriesSolution;

/// Relative tolerance on mass drift used to flag a moment table.
pub const MASS_DRIFT_TOL: f64 = 1e-2;

/// Moments 0..2 of one solution over time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub case_id: String,
    pub method: String,
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    /// Largest `|M1(t)/M1(0) - 1|` over the rows.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows
            .iter()
            .map(|r| (r.m1 / first.m1 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn mass_flagged(&self) -> bool {
        self.mass_drift() > MASS_DRIFT_TOL
    }

    pub fn row_at(&self, time: f64) -> Option<&MomentRow> {
        self.rows
            .iter()
            .find(|r| (r.time - time).abs() <= 1e-12 * time.abs().max(1.0))
    }
}

/// What to take moments of.
pub enum MomentSource<'a> {
    Fvm(&'a FvmSolution),
    /// Truncated series of the given order.
    Series(&'a SeriesSolution, usize),
}

/// Moment table at the solution's own snapshot times (FVM) or at `times`
/// (series). `times` must be ascending.
pub fn moments_over_time(
    case_id: &str,
    method: &str,
    source: MomentSource<'_>,
    times: &[f64],
) -> Result<MomentTable> {
    let rows = match source {
        MomentSource::Fvm(sol) => sol.moments.clone(),
        MomentSource::Series(series, order) => {
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CbeError::InvalidArgument("moment times must ascend".into()));
            }
            times
                .iter()
                .map(|&t| Ok(MomentRow::of(t, &series.truncated_sum(order, t)?)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(MomentTable {
        case_id: case_id.to_string(),
        method: method.to_string(),
        rows,
    })
}

/// `|approx - exact|` at the cell midpoints.
pub fn abs_error_grid(approx: &GridFunction, case: &CaseSpec, t: f64) -> Result<GridFunction> {
    let grid = approx.grid();
    let values = approx
        .values()
        .iter()
        .zip(grid.midpoints())
        .map(|(a, &e)| Ok((a - case.exact_concentration(t, e)?).abs()))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid.clone(), values)
}

/// Cell averages of the exact solution, by 20-point Gauss-Legendre per cell.
pub fn exact_cell_averages(case: &CaseSpec, grid: &Arc<Grid>, t: f64) -> Result<GridFunction> {
    if !case.has_exact_concentration() {
        return Err(CbeError::NoExactConcentration(case.id.clone()));
    }
    let rule = GaussRule::new(20);
    let values = grid
        .edges()
        .windows(2)
        .map(|w| {
            rule.integrate(
                |e| case.exact_concentration(t, e).unwrap_or(f64::NAN),
                w[0],
                w[1],
            ) / (w[1] - w[0])
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// Total-number error `|N_E - N_I|` with `N_E` the exact number in `(0, R]`
/// and `N_I = Σ approx_i Δe_i`.
pub fn number_error(approx: &GridFunction, case: &CaseSpec, t: f64) -> Result<f64> {
    let exact = exact_cell_averages(case, approx.grid(), t)?;
    let widths = approx.grid().widths();
    let n_exact: f64 = exact.values().iter().zip(widths).map(|(v, w)| v * w).sum();
    let n_approx: f64 = approx.values().iter().zip(widths).map(|(v, w)| v * w).sum();
    Ok((n_exact - n_approx).abs())
}

/// `ln(coarse/fine) / ln 2`.
pub fn eoc(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite()) {
        return Err(CbeError::UndefinedEoc { coarse, fine });
    }
    Ok((coarse / fine).ln() / std::f64::consts::LN_2)
}

/// One refinement row; `eoc` is absent on the coarsest grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocRow {
    pub cells: usize,
    pub error: f64,
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocReport {
    pub case_id: String,
    pub method: String,
    pub rows: Vec<EocRow>,
}

impl EocReport {
    /// Builds the table from `(cells, error)` pairs whose cell counts double.
    pub fn from_errors(case_id: &str, method: &str, errors: &[(usize, f64)]) -> Result<Self> {
        check_doubling(&errors.iter().map(|p| p.0).collect::<Vec<_>>())?;
        let mut rows = Vec::with_capacity(errors.len());
        for (k, &(cells, error)) in errors.iter().enumerate() {
            let eoc = if k == 0 {
                None
            } else {
                Some(eoc(errors[k - 1].1, error)?)
            };
            rows.push(EocRow { cells, error, eoc });
        }
        Ok(Self {
            case_id: case_id.to_string(),
            method: method.to_string(),
            rows,
        })
    }

    pub fn final_eoc(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.eoc)
    }

    pub fn errors_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Cell counts must be non-empty, positive and each twice the previous.
pub fn check_doubling(cells: &[usize]) -> Result<()> {
    if cells.is_empty() || cells[0] == 0 {
        return Err(CbeError::InvalidArgument(
            "need at least one positive cell count".into(),
        ));
    }
    if let Some(w) = cells.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(CbeError::InvalidArgument(format!(
            "cell counts must double: {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `Σ_i |f_m(T, e_i)| Δe_i` at the case end time `T`.
pub fn consecutive_term_norm(series: &SeriesSolution, m: usize, tend: f64) -> Result<f64> {
    if m > series.order() {
        return Err(CbeError::OrderTooLarge {
            requested: m,
            available: series.order(),
        });
    }
    Ok(series.terms[m].eval(tend).l1_norm())
}

/// `c^m / (1 - c) · ‖f_1‖`.
pub fn geometric_error_bound(contraction: f64, m: u32, f1_norm: f64) -> Result<f64> {
    if !(contraction > 0.0 && contraction < 1.0) {
        return Err(CbeError::Domain(format!(
            "contraction constant must lie in (0, 1), got {contraction}"
        )));
    }
    if !(f1_norm >= 0.0) {
        return Err(CbeError::Domain(format!(
            "norm must be non-negative, got {f1_norm}"
        )));
    }
    Ok(contraction.powi(m as i32) / (1.0 - contraction) * f1_norm)
}

/// Contraction factor of the HAM iteration, `ξ|α| + |1 + α|`.
pub fn ham_contraction(xi: f64, alpha: f64) -> f64 {
    xi * alpha.abs() + (1.0 + alpha).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, project_initial, GridScheme};
    use crate::problem::registry_case;
    use crate::series::{ahpm_terms, ham_terms};
    use proptest::prelude::*;

    #[test]
    fn eoc_examples() {
        assert!((eoc(0.1, 0.05).unwrap() - 1.0).abs() < 1e-14);
        assert!((eoc(0.1, 0.025).unwrap() - 2.0).abs() < 1e-14);
        assert!(eoc(0.0, 0.1).is_err());
        assert!(eoc(0.1, -1.0).is_err());
    }

    #[test]
    fn eoc_report_layout() {
        let r =
            EocReport::from_errors("ex1", "fvm", &[(30, 0.08), (60, 0.04), (120, 0.01)]).unwrap();
        assert_eq!(r.rows[0].eoc, None);
        assert!((r.rows[1].eoc.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.final_eoc().unwrap() - 2.0).abs() < 1e-12);
        assert!(r.errors_decreasing());
        assert!(EocReport::from_errors("ex1", "fvm", &[(30, 0.1), (50, 0.05)]).is_err());
    }

    #[test]
    fn number_error_vanishes_on_exact_averages() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 37, GridScheme::Uniform).unwrap();
        let exact = exact_cell_averages(&case, &g, 1.0).unwrap();
        assert!(number_error(&exact, &case, 1.0).unwrap() <= 1e-10);
        let doubled =
            GridFunction::new(g.clone(), exact.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        let n: f64 = exact
            .values()
            .iter()
            .zip(g.widths())
            .map(|(v, w)| v * w)
            .sum();
        assert!((number_error(&doubled, &case, 1.0).unwrap() - n).abs() < 1e-10);
    }

    #[test]
    fn number_error_needs_exact_reference() {
        let case = registry_case("ex2").unwrap();
        let g = build_grid(case.rmax, 10, GridScheme::Uniform).unwrap();
        let f = project_initial(&case.init, &g);
        assert!(matches!(
            number_error(&f, &case, 1.0),
            Err(CbeError::NoExactConcentration(_))
        ));
        assert!(abs_error_grid(&f, &case, 1.0).is_err());
    }

    #[test]
    fn abs_error_of_exact_samples_is_zero() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 20, GridScheme::Uniform).unwrap();
        let f = GridFunction::from_fn(g, |e| case.exact_concentration(0.7, e).unwrap());
        let err = abs_error_grid(&f, &case, 0.7).unwrap();
        assert!(err.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn initial_term_norm_is_unit_mass() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 200, GridScheme::Uniform).unwrap();
        let s = ahpm_terms(&case, &g, 2).unwrap();
        let n0 = consecutive_term_norm(&s, 0, 1.0).unwrap();
        assert!((n0 - (1.0 - (-10f64).exp())).abs() < 1e-12);
        assert!(consecutive_term_norm(&s, 3, 1.0).is_err());
    }

    #[test]
    fn term_norm_equals_distance_of_truncations() {
        let case = registry_case("ex2").unwrap();
        let g = build_grid(case.rmax, 80, GridScheme::Uniform).unwrap();
        for s in [
            ham_terms(&case, &g, 4, -0.95).unwrap(),
            ahpm_terms(&case, &g, 4).unwrap(),
        ] {
            for m in 1..=4 {
                let a = s.truncated_sum(m, case.tend).unwrap();
                let b = s.truncated_sum(m - 1, case.tend).unwrap();
                let d = a.l1_distance(&b).unwrap();
                assert!((d - consecutive_term_norm(&s, m, case.tend).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bound_examples() {
        assert!((geometric_error_bound(0.5, 3, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((ham_contraction(0.3, -0.9) - 0.37).abs() < 1e-15);
        assert!(geometric_error_bound(1.0, 3, 1.0).is_err());
        assert!(geometric_error_bound(0.5, 3, -1.0).is_err());
    }

    #[test]
    fn moment_table_from_series() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 100, GridScheme::Uniform).unwrap();
        let s = ahpm_terms(&case, &g, 2).unwrap();
        let tab =
            moments_over_time("ex1", "ahpm", MomentSource::Series(&s, 2), &[0.0, 0.5]).unwrap();
        let f0 = project_initial(&case.init, &g);
        assert_eq!(tab.rows[0], MomentRow::of(0.0, &f0));
        assert!(tab.row_at(0.5).is_some());
        assert!(
            moments_over_time("ex1", "ahpm", MomentSource::Series(&s, 2), &[0.5, 0.1]).is_err()
        );
    }

    proptest! {
        #[test]
        fn eoc_is_scale_invariant(a in 1e-8f64..1.0, b in 1e-8f64..1.0, c in 1e-6f64..1e6) {
            let base = eoc(a, b).unwrap();
            prop_assert!((eoc(c * a, c * b).unwrap() - base).abs() < 1e-9);
        }

        #[test]
        fn bound_monotone(c in 0.01f64..0.98, m in 0u32..30, n in 0.0f64..10.0) {
            let here = geometric_error_bound(c, m, n + 1e-3).unwrap();
            prop_assert!(geometric_error_bound(c, m + 1, n + 1e-3).unwrap() < here);
            prop_assert!(geometric_error_bound(c + 0.01, m, n + 1e-3).unwrap() > here);
        }
    }
}
