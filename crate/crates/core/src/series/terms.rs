//! Term recurrences for HAM and AHPM.

use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::grid::{project_initial, Grid};
use crate::problem::CaseSpec;

use super::operators::{CollisionOperator, Partner};
use super::poly::TimePoly;
use super::{SeriesMethod, SeriesSolution};

/// Reusable term generator for one case and grid.
///
/// Holds the collision operator so that repeated builds (for instance across
/// an alpha scan) share interpolation stencils.
#[derive(Debug, Clone)]
pub struct SeriesBuilder {
    case_id: String,
    op: CollisionOperator,
    f0: TimePoly,
}

impl SeriesBuilder {
    pub fn new(case: &CaseSpec, grid: &Arc<Grid>) -> Self {
        let op = CollisionOperator::new(grid.clone(), case.kernel.clone(), case.breakage.clone());
        let f0 = TimePoly::constant(&project_initial(&case.init, grid));
        Self {
            case_id: case.id.clone(),
            op,
            f0,
        }
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.op
    }

    pub fn initial(&self) -> &TimePoly {
        &self.f0
    }

    /// HAM terms:
    ///
    /// ```text
    /// f_1 = -α L⁻¹[Ω_0]
    /// f_m = (1+α) f_{m-1} - α L⁻¹[Ω_{m-1}],   Ω_{m-1} = Σ_{k<m} (birth - death)(f_k, f_{m-1-k})
    /// ```
    pub fn ham(&self, order: usize, alpha: f64) -> Result<SeriesSolution> {
        check_alpha(alpha)?;
        let mut terms = vec![self.f0.clone()];
        let mut partners: Vec<Vec<Partner>> = vec![self.op.partners(&self.f0)];
        for m in 1..=order {
            let mut omega = TimePoly::zero(self.op.grid().clone());
            for k in 0..m {
                omega = omega.add(&self.op.net_cached(&terms[k], &partners[m - 1 - k]))?;
            }
            let mut fm = omega.antiderivative().scale(-alpha);
            if m > 1 {
                fm = fm.add_scaled(&terms[m - 1], 1.0 + alpha)?;
            }
            partners.push(self.op.partners(&fm));
            terms.push(fm);
        }
        Ok(SeriesSolution {
            method: SeriesMethod::Ham { alpha },
            case_id: self.case_id.clone(),
            terms,
        })
    }

    /// AHPM terms:
    ///
    /// ```text
    /// f_n = L⁻¹[(birth - death)(S, S)] - Σ_{i=1}^{n-1} f_i,   S = Σ_{i<n} f_i
    /// ```
    ///
    /// Time powers above `n` produced by the products are kept.
    pub fn ahpm(&self, order: usize) -> Result<SeriesSolution> {
        let mut terms = vec![self.f0.clone()];
        let mut partial = self.f0.clone();
        for _ in 1..=order {
            let net = self.op.net_cached(&partial, &self.op.partners(&partial));
            // S - f_0 = Σ_{i=1}^{n-1} f_i
            let corrections = partial.sub(&self.f0)?;
            let fn_ = net.antiderivative().sub(&corrections)?;
            partial = partial.add(&fn_)?;
            terms.push(fn_);
        }
        Ok(SeriesSolution {
            method: SeriesMethod::Ahpm,
            case_id: self.case_id.clone(),
            terms,
        })
    }

    pub fn build(&self, method: SeriesMethod, order: usize) -> Result<SeriesSolution> {
        match method {
            SeriesMethod::Ham { alpha } => self.ham(order, alpha),
            SeriesMethod::Ahpm => self.ahpm(order),
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (-1.0..0.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CbeError::Domain(format!(
            "convergence-control parameter must lie in [-1, 0), got {alpha}"
        )))
    }
}

pub fn ham_terms(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    order: usize,
    alpha: f64,
) -> Result<SeriesSolution> {
    check_alpha(alpha)?;
    SeriesBuilder::new(case, grid).ham(order, alpha)
}

pub fn ahpm_terms(case: &CaseSpec, grid: &Arc<Grid>, order: usize) -> Result<SeriesSolution> {
    SeriesBuilder::new(case, grid).ahpm(order)
}
