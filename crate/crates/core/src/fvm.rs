//! Semi-discrete finite-volume scheme for the collision-induced breakage
//! equation.
//!
//! For cell averages `f_i` the scheme integrates
//!
//! ```text
//! df_i/dt = 1/Δe_i Σ_l Σ_{j≥i} K(e_j,e_l) f_j f_l Δe_j Δe_l w[i][j]
//!         - Σ_j K(e_i,e_j) f_i f_j Δe_j
//! ```
//!
//! where `w[i][j] = ∫_{e_{i-1/2}}^{λ_j^i} b(e, e_j, ·) de` and the upper limit
//! `λ_j^i` is the cell midpoint `e_i` when `j = i` and the right edge
//! `e_{i+1/2}` otherwise.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{CbeError, Result};
use crate::grid::{project_initial, quad_moment, Grid, GridFunction};
use crate::ode::{Integrator, StepStats, Stepper};
use crate::problem::{BreakageSpec, CaseSpec, KernelSpec};

/// Packed upper-triangular table of fragment weights `w[i][j]`, `i ≤ j`.
#[derive(Debug, Clone)]
pub struct FragWeights {
    grid: Arc<Grid>,
    // row i holds w[i][i..]
    rows: Vec<Vec<f64>>,
}

impl FragWeights {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `w[i][j]`, zero below the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.rows[i][j - i]
        }
    }
}

/// Tabulates `w[i][j]` for every pair of cells.
pub fn precompute_weights(grid: &Arc<Grid>, breakage: &BreakageSpec) -> FragWeights {
    let edges = grid.edges();
    let mids = grid.midpoints();
    let n = grid.cells();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = edges[i];
            (i..n)
                .map(|j| {
                    let upper = if j == i { mids[i] } else { edges[i + 1] };
                    breakage.fragments_in(lo, upper, mids[j])
                })
                .collect()
        })
        .collect();
    FragWeights {
        grid: grid.clone(),
        rows,
    }
}

/// Precomputed operator for the semi-discrete right-hand side.
#[derive(Debug, Clone)]
pub struct FvmOperator {
    grid: Arc<Grid>,
    kernel: KernelSpec,
    weights: FragWeights,
}

impl FvmOperator {
    pub fn new(grid: Arc<Grid>, kernel: KernelSpec, breakage: &BreakageSpec) -> Self {
        let weights = precompute_weights(&grid, breakage);
        Self {
            grid,
            kernel,
            weights,
        }
    }

    pub fn weights(&self) -> &FragWeights {
        &self.weights
    }

    /// Writes `df/dt` for state `f` into `out`.
    pub fn rhs_into(&self, f: &[f64], out: &mut [f64]) {
        let mids = self.grid.midpoints();
        let widths = self.grid.widths();
        let mass: Vec<f64> = f.iter().zip(widths).map(|(v, w)| v * w).collect();
        // collision frequency of cell j with the whole population
        let freq = self.kernel.weighted_sums(mids, mids, &mass);
        // parent breakage rate weighted by cell size
        let parent: Vec<f64> = freq.iter().zip(&mass).map(|(c, m)| c * m).collect();
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.weights.rows[i];
            let birth: f64 = row.iter().zip(&parent[i..]).map(|(w, p)| w * p).sum();
            *o = birth / widths[i] - f[i] * freq[i];
        });
    }

    pub fn rhs(&self, f: &GridFunction) -> Result<GridFunction> {
        if !crate::grid::same_grid(f.grid(), &self.grid) {
            return Err(CbeError::GridMismatch);
        }
        let mut out = vec![0.0; self.grid.cells()];
        self.rhs_into(f.values(), &mut out);
        Ok(GridFunction::from_raw(self.grid.clone(), out))
    }
}

/// One-shot evaluation of the semi-discrete right-hand side.
pub fn fvm_rhs(
    grid: &Arc<Grid>,
    weights: &FragWeights,
    kernel: &KernelSpec,
    f: &GridFunction,
) -> Result<GridFunction> {
    if !crate::grid::same_grid(grid, weights.grid()) {
        return Err(CbeError::GridMismatch);
    }
    let op = FvmOperator {
        grid: grid.clone(),
        kernel: kernel.clone(),
        weights: weights.clone(),
    };
    op.rhs(f)
}

/// Moments 0..2 at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub time: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

impl MomentRow {
    pub fn of(time: f64, g: &GridFunction) -> Self {
        Self {
            time,
            m0: quad_moment(g, 0),
            m1: quad_moment(g, 1),
            m2: quad_moment(g, 2),
        }
    }

    pub fn get(&self, order: usize) -> f64 {
        match order {
            0 => self.m0,
            1 => self.m1,
            2 => self.m2,
            _ => panic!("moment order {order} not tracked"),
        }
    }
}

/// Time-stamped finite-volume snapshots.
#[derive(Debug, Clone)]
pub struct FvmSolution {
    pub grid: Arc<Grid>,
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub moments: Vec<MomentRow>,
    /// Smallest cell value per snapshot; negative entries are kept, not clipped.
    pub min_values: Vec<f64>,
    pub stats: StepStats,
}

impl FvmSolution {
    pub fn at(&self, time: f64) -> Option<&GridFunction> {
        self.times
            .iter()
            .position(|t| (t - time).abs() <= 1e-12 * time.abs().max(1.0))
            .map(|k| &self.snapshots[k])
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().unwrap()
    }
}

/// Integrates the semi-discrete system from the projected initial condition
/// and records a snapshot at each requested time.
pub fn integrate(
    case: &CaseSpec,
    grid: &Arc<Grid>,
    times: &[f64],
    stepper: Stepper,
) -> Result<FvmSolution> {
    if times.first() != Some(&0.0) {
        return Err(CbeError::InvalidArgument(
            "output times must start at 0".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CbeError::InvalidArgument(
            "output times must be strictly ascending".into(),
        ));
    }
    let op = FvmOperator::new(grid.clone(), case.kernel.clone(), &case.breakage);
    let f0 = project_initial(&case.init, grid);
    let mut state = f0.values().to_vec();

    let mut integ = Integrator::new(|y: &[f64], d: &mut [f64]| op.rhs_into(y, d), stepper);
    let mut snapshots = vec![f0];
    for w in times.windows(2) {
        integ.advance(&mut state, w[0], w[1])?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(CbeError::Divergence { time: w[1] });
        }
        snapshots.push(GridFunction::from_raw(grid.clone(), state.clone()));
    }
    let stats = integ.stats;
    let moments = times
        .iter()
        .zip(&snapshots)
        .map(|(t, g)| MomentRow::of(*t, g))
        .collect();
    let min_values = snapshots.iter().map(GridFunction::min_value).collect();
    Ok(FvmSolution {
        grid: grid.clone(),
        times: times.to_vec(),
        snapshots,
        moments,
        min_values,
        stats,
    })
}
