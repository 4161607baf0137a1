//! Homotopy series solutions.
//!
//! Both schemes work on the time-integrated form of the equation
//!
//! ```text
//! f(t) = f_in + ∫₀^t [birth(f,f) - death(f,f)] ds
//! ```
//!
//! and build terms `f_m(t, e)` that are polynomials in `t` with grid-function
//! coefficients. Size integrals use the midpoint rule; time integrals are
//! exact polynomial antiderivatives.

mod alpha;
mod operators;
mod oracle;
mod poly;
mod terms;

pub use alpha::{
    averaged_residual, averaged_residual_of, optimize_alpha, residual, residual_poly, AlphaOptimum,
    AlphaSearch, CollocationSpec,
};
pub use operators::{birth_apply, death_apply, CollisionOperator, Partner};
pub use oracle::{oracle_terms, OracleKey, ORACLE_TABLE};
pub use poly::{poly_antiderivative, poly_mul, TimePoly};
pub use terms::{ahpm_terms, ham_terms, SeriesBuilder};

use std::fmt;
use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::grid::{Grid, GridFunction};

/// Series scheme together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesMethod {
    Ham { alpha: f64 },
    Ahpm,
}

impl SeriesMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ham { .. } => "ham",
            Self::Ahpm => "ahpm",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Self::Ham { alpha } => Some(*alpha),
            Self::Ahpm => None,
        }
    }
}

impl fmt::Display for SeriesMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ham { alpha } => write!(f, "HAM(alpha={alpha})"),
            Self::Ahpm => write!(f, "AHPM"),
        }
    }
}

/// Terms `f_0 … f_n` of a truncated series.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    pub method: SeriesMethod,
    pub case_id: String,
    pub terms: Vec<TimePoly>,
}

impl SeriesSolution {
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.terms[0].grid()
    }

    /// `Σ_{k ≤ m} f_k` as a time polynomial.
    pub fn partial_poly(&self, m: usize) -> Result<TimePoly> {
        self.check_order(m)?;
        let mut acc = self.terms[0].clone();
        for t in &self.terms[1..=m] {
            acc = acc.add(t)?;
        }
        Ok(acc)
    }

    /// Truncated solution of order `m` at time `t`.
    pub fn truncated_sum(&self, m: usize, t: f64) -> Result<GridFunction> {
        self.check_order(m)?;
        let n = self.grid().cells();
        let mut acc = vec![0.0; n];
        for term in &self.terms[..=m] {
            for (i, a) in acc.iter_mut().enumerate() {
                *a += term.eval_cell(t, i);
            }
        }
        GridFunction::new(self.grid().clone(), acc).map_err(|_| CbeError::Divergence { time: t })
    }

    fn check_order(&self, m: usize) -> Result<()> {
        if m > self.order() {
            Err(CbeError::OrderTooLarge {
                requested: m,
                available: self.order(),
            })
        } else {
            Ok(())
        }
    }
}

/// Free-function form of [`SeriesSolution::truncated_sum`].
pub fn truncated_sum(series: &SeriesSolution, m: usize, t: f64) -> Result<GridFunction> {
    series.truncated_sum(m, t)
}
