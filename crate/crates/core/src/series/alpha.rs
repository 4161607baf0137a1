//! Residual of truncated series and selection of the HAM convergence-control
//! parameter by minimising the averaged squared residual.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{CbeError, Result};
use crate::grid::{interp_eval, Grid, GridFunction};
use crate::problem::CaseSpec;

use super::operators::CollisionOperator;
use super::poly::TimePoly;
use super::terms::{check_alpha, SeriesBuilder};
use super::SeriesSolution;

/// `N[Θ](t) = Θ(t) - f_in - L⁻¹[(birth - death)(Θ, Θ)](t)` as a time
/// polynomial, with `Θ` the order-`m` partial sum.
pub fn residual_poly(
    op: &CollisionOperator,
    series: &SeriesSolution,
    m: usize,
) -> Result<TimePoly> {
    let theta = series.partial_poly(m)?;
    let net = op.net(&theta, &theta)?;
    theta.sub(&series.terms[0])?.sub(&net.antiderivative())
}

/// Residual of the order-`m` truncated series at time `t`.
pub fn residual(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    series: &SeriesSolution,
    m: usize,
    t: f64,
) -> Result<GridFunction> {
    if !(0.0..=case.tend).contains(&t) {
        return Err(CbeError::Domain(format!(
            "residual time {t} outside [0, {}]",
            case.tend
        )));
    }
    let op = CollisionOperator::new(grid.clone(), case.kernel.clone(), case.breakage.clone());
    Ok(residual_poly(&op, series, m)?.eval(t))
}

/// Collocation nodes for the averaged residual.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSpec {
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl CollocationSpec {
    /// `n` uniform times `t_m = m T / n` and `n` log-spaced sizes in `[R·10⁻³, R]`.
    pub fn default_for(n: usize, tend: f64, rmax: f64) -> Self {
        let n = n.max(1);
        let times = (1..=n).map(|m| m as f64 * tend / n as f64).collect();
        let lo = (rmax * 1e-3).ln();
        let hi = rmax.ln();
        let sizes = if n == 1 {
            vec![rmax]
        } else {
            (0..n)
                .map(|r| (lo + (hi - lo) * r as f64 / (n - 1) as f64).exp().min(rmax))
                .collect()
        };
        Self { times, sizes }
    }

    pub fn validate(&self, tend: f64, rmax: f64) -> Result<()> {
        if self.times.is_empty() || self.sizes.is_empty() {
            return Err(CbeError::InvalidArgument("collocation needs nodes".into()));
        }
        if self.times.iter().any(|t| !(*t > 0.0 && *t <= tend)) {
            return Err(CbeError::Domain(format!(
                "collocation times must lie in (0, {tend}]"
            )));
        }
        if self.sizes.iter().any(|e| !(*e > 0.0 && *e <= rmax)) {
            return Err(CbeError::Domain(format!(
                "collocation sizes must lie in (0, {rmax}]"
            )));
        }
        Ok(())
    }
}

/// `A = 1/(n_t n_e) Σ_m Σ_r N[Θ](t_m, e_r)²` for an already built series.
pub fn averaged_residual_of(
    op: &CollisionOperator,
    series: &SeriesSolution,
    colloc: &CollocationSpec,
) -> Result<f64> {
    let res = residual_poly(op, series, series.order())?;
    let mut acc = 0.0;
    for &t in &colloc.times {
        let r = res.eval(t);
        for &e in &colloc.sizes {
            let v = interp_eval(&r, e);
            acc += v * v;
        }
    }
    Ok(acc / (colloc.times.len() * colloc.sizes.len()) as f64)
}

/// Averaged squared residual of the order-`order` HAM series built at `alpha`.
pub fn averaged_residual(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    order: usize,
    alpha: f64,
    colloc: &CollocationSpec,
) -> Result<f64> {
    let builder = SeriesBuilder::new(case, grid);
    let series = builder.ham(order, alpha)?;
    averaged_residual_of(builder.operator(), &series, colloc)
}

/// Coarse scan followed by golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSearch {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub tol: f64,
}

impl Default for AlphaSearch {
    fn default() -> Self {
        Self {
            lo: -1.0,
            hi: -0.01,
            step: 0.005,
            tol: 1e-4,
        }
    }
}

/// Result of the alpha search.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaOptimum {
    pub alpha: f64,
    pub value: f64,
    /// `(alpha, A(alpha))` for every coarse-scan candidate.
    pub scan: Vec<(f64, f64)>,
}

/// Minimises `A(alpha)` over `[search.lo, search.hi]`.
pub fn optimize_alpha(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    order: usize,
    colloc: &CollocationSpec,
    search: AlphaSearch,
) -> Result<AlphaOptimum> {
    if order == 0 {
        return Err(CbeError::InvalidArgument(
            "alpha search needs order >= 1".into(),
        ));
    }
    check_alpha(search.lo)?;
    check_alpha(search.hi)?;
    if !(search.lo < search.hi && search.step > 0.0 && search.tol > 0.0) {
        return Err(CbeError::InvalidArgument(format!(
            "bad alpha search {search:?}"
        )));
    }
    let builder = SeriesBuilder::new(case, grid);
    let objective = |alpha: f64| -> Result<f64> {
        let series = builder.ham(order, alpha)?;
        let a = averaged_residual_of(builder.operator(), &series, colloc)?;
        if a.is_finite() {
            Ok(a)
        } else {
            Err(CbeError::NonFiniteResidual { alpha })
        }
    };

    let count = ((search.hi - search.lo) / search.step + 1e-9).floor() as usize + 1;
    let candidates: Vec<f64> = (0..count)
        .map(|k| (search.lo + k as f64 * search.step).min(search.hi))
        .collect();
    let scan = candidates
        .par_iter()
        .map(|&a| objective(a).map(|v| (a, v)))
        .collect::<Result<Vec<_>>>()?;

    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap();
    let left = candidates[best.saturating_sub(1)];
    let right = candidates[(best + 1).min(count - 1)];
    let (ga, gv) = golden_section(&objective, left, right, search.tol)?;

    let (alpha, value) = if gv <= scan[best].1 {
        (ga, gv)
    } else {
        scan[best]
    };
    Ok(AlphaOptimum { alpha, value, scan })
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridScheme};
    use crate::problem::registry_case;
    use crate::series::ahpm_terms;

    #[test]
    fn default_collocation_layout() {
        let c = CollocationSpec::default_for(5, 1.0, 10.0);
        for (t, want) in c.times.iter().zip([0.2, 0.4, 0.6, 0.8, 1.0]) {
            assert!((t - want).abs() < 1e-15);
        }
        assert!((c.sizes[0] - 0.01).abs() < 1e-15);
        assert!((c.sizes[4] - 10.0).abs() < 1e-12);
        assert!((c.sizes[2] - (0.01f64 * 10.0).sqrt()).abs() < 1e-12);
        c.validate(1.0, 10.0).unwrap();
        assert!(c.validate(0.5, 10.0).is_err());
    }

    #[test]
    fn residual_vanishes_at_time_zero() {
        let case = registry_case("ex3").unwrap();
        let g = build_grid(case.rmax, 40, GridScheme::Uniform).unwrap();
        let s = ahpm_terms(&case, &g, 3).unwrap();
        for m in 0..=3 {
            let r = residual(&case, &g, &s, m, 0.0).unwrap();
            assert!(r.values().iter().all(|v| *v == 0.0));
        }
        assert!(residual(&case, &g, &s, 3, 0.6).is_err());
    }

    #[test]
    fn zero_order_residual_tends_to_zero_with_time() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 100, GridScheme::Uniform).unwrap();
        let builder = SeriesBuilder::new(&case, &g);
        let s = builder.ham(0, -0.5).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e-1, 1e-2, 1e-3] {
            let colloc = CollocationSpec {
                times: vec![t],
                sizes: vec![0.5, 1.0, 2.0],
            };
            let a = averaged_residual_of(builder.operator(), &s, &colloc).unwrap();
            assert!(a >= 0.0 && a < last);
            last = a;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) =
            golden_section(&|a: f64| Ok((a + 0.37).powi(2) + 1.0), -1.0, 0.0, 1e-8).unwrap();
        assert!((x + 0.37).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn search_rejects_bad_parameters() {
        let case = registry_case("ex1").unwrap();
        let g = build_grid(case.rmax, 20, GridScheme::Uniform).unwrap();
        let c = CollocationSpec::default_for(2, 1.0, 10.0);
        assert!(optimize_alpha(&case, &g, 0, &c, AlphaSearch::default()).is_err());
        let bad = AlphaSearch {
            lo: -2.0,
            ..AlphaSearch::default()
        };
        assert!(optimize_alpha(&case, &g, 2, &c, bad).is_err());
    }
}
