//! Cell partitions of the truncated size domain `(0, R]` and per-cell data.

use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::problem::InitialCondition;
use crate::quadrature::GaussRule;

/// Edge placement rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridScheme {
    Uniform,
    /// Edges `0, e_min, e_min q, e_min q², …, R` with the ratio `q` chosen so
    /// that the last edge lands on `R`.
    Geometric {
        eps_min: f64,
    },
}

/// Partition `0 = e_{1/2} < e_{3/2} < … < e_{I+1/2} = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    edges: Vec<f64>,
    mids: Vec<f64>,
    widths: Vec<f64>,
    scheme: GridScheme,
}

impl Grid {
    pub fn new(rmax: f64, cells: usize, scheme: GridScheme) -> Result<Self> {
        if !(rmax.is_finite() && rmax > 0.0) {
            return Err(CbeError::InvalidGrid(format!(
                "R must be positive, got {rmax}"
            )));
        }
        if cells < 2 {
            return Err(CbeError::InvalidGrid(format!(
                "need at least 2 cells, got {cells}"
            )));
        }
        let edges: Vec<f64> = match scheme {
            GridScheme::Uniform => (0..=cells)
                .map(|k| {
                    if k == cells {
                        rmax
                    } else {
                        rmax * k as f64 / cells as f64
                    }
                })
                .collect(),
            GridScheme::Geometric { eps_min } => {
                if !(eps_min > 0.0 && eps_min < rmax) {
                    return Err(CbeError::InvalidGrid(format!(
                        "geometric grid needs 0 < eps_min < R, got {eps_min}"
                    )));
                }
                let ratio = (rmax / eps_min).powf(1.0 / (cells - 1) as f64);
                let mut edges = Vec::with_capacity(cells + 1);
                edges.push(0.0);
                edges.extend((0..cells - 1).map(|k| eps_min * ratio.powi(k as i32)));
                edges.push(rmax);
                edges
            }
        };
        Self::from_edges_with_scheme(edges, scheme)
    }

    pub fn uniform(rmax: f64, cells: usize) -> Result<Self> {
        Self::new(rmax, cells, GridScheme::Uniform)
    }

    /// Builds a grid from explicit edges; the first edge must be exactly 0.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        Self::from_edges_with_scheme(edges, GridScheme::Uniform)
    }

    fn from_edges_with_scheme(edges: Vec<f64>, scheme: GridScheme) -> Result<Self> {
        if edges.len() < 3 {
            return Err(CbeError::InvalidGrid("need at least 2 cells".into()));
        }
        if edges[0] != 0.0 {
            return Err(CbeError::InvalidGrid(format!(
                "first edge must be 0, got {}",
                edges[0]
            )));
        }
        if let Some(w) = edges
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(CbeError::InvalidGrid(format!(
                "edges must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        let mids = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            edges,
            mids,
            widths,
            scheme,
        })
    }

    pub fn cells(&self) -> usize {
        self.mids.len()
    }

    pub fn rmax(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.mids
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    /// Index of the cell `[e_{i-1/2}, e_{i+1/2})` holding `e`, if inside.
    pub fn locate(&self, e: f64) -> Option<usize> {
        if !(e >= 0.0 && e <= self.rmax()) {
            return None;
        }
        let k = self.edges.partition_point(|&x| x <= e);
        Some(k.saturating_sub(1).min(self.cells() - 1))
    }
}

/// Per-cell values on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(CbeError::InvalidArgument(format!(
                "grid has {} cells, got {} values",
                grid.cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CbeError::InvalidArgument(
                "grid function values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; used by solvers that check state separately.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.cells();
        Self::from_raw(grid, vec![0.0; n])
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.midpoints().iter().map(|&e| f(e)).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    /// `Σ_i e_i^n g_i Δe_i`, the midpoint-rule moment on `(0, R]`.
    pub fn moment(&self, order: u32) -> f64 {
        quad_moment(self, order)
    }

    /// `Σ_i |g_i| Δe_i`.
    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.widths())
            .map(|(v, w)| v.abs() * w)
            .sum()
    }

    /// `Σ_i |g_i - h_i| Δe_i`.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(CbeError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.widths())
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum())
    }

    /// Piecewise-linear interpolation between midpoints.
    ///
    /// Values are held constant between the outer midpoints and the domain
    /// boundary, and are zero beyond `R`.
    pub fn interp(&self, e: f64) -> f64 {
        interp_eval(self, e)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.edges == b.edges
}

/// Builds a grid; see [`Grid::new`].
pub fn build_grid(rmax: f64, cells: usize, scheme: GridScheme) -> Result<Arc<Grid>> {
    Grid::new(rmax, cells, scheme).map(Arc::new)
}

/// Cell averages of the initial condition.
///
/// Closed-form antiderivatives for the shipped profiles, 5-point
/// Gauss-Legendre per cell for custom ones.
pub fn project_initial(init: &InitialCondition, grid: &Arc<Grid>) -> GridFunction {
    let rule = GaussRule::new(5);
    let values = grid
        .edges()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let integral = init
                .integral(a, b)
                .unwrap_or_else(|| rule.integrate(|e| init.eval(e), a, b));
            integral / (b - a)
        })
        .collect();
    GridFunction::from_raw(grid.clone(), values)
}

/// `Σ_i e_i^n g_i Δe_i`.
pub fn quad_moment(g: &GridFunction, order: u32) -> f64 {
    let grid = &g.grid;
    g.values
        .iter()
        .zip(grid.midpoints())
        .zip(grid.widths())
        .map(|((v, e), w)| e.powi(order as i32) * v * w)
        .sum()
}

/// See [`GridFunction::interp`].
pub fn interp_eval(g: &GridFunction, e: f64) -> f64 {
    let grid = &g.grid;
    let mids = grid.midpoints();
    let n = mids.len();
    if e > grid.rmax() {
        return 0.0;
    }
    if e <= mids[0] {
        return g.values[0];
    }
    if e >= mids[n - 1] {
        return g.values[n - 1];
    }
    // first midpoint strictly above e; 1 <= k <= n-1
    let k = mids.partition_point(|&m| m <= e);
    let (x0, x1) = (mids[k - 1], mids[k]);
    let t = (e - x0) / (x1 - x0);
    g.values[k - 1] + t * (g.values[k] - g.values[k - 1])
}

/// `Σ_i (e_i^r + e_i^{-2s}) |g_i| Δe_i`, the discrete counterpart of the
/// weighted L¹ norm used in the convergence estimates.
pub fn weighted_norm(g: &GridFunction, r: f64, s: f64) -> Result<f64> {
    if !(r >= 1.0) || !(s >= 0.0) {
        return Err(CbeError::Domain(format!(
            "weighted norm needs r >= 1 and s >= 0, got r={r}, s={s}"
        )));
    }
    let grid = &g.grid;
    Ok(g.values
        .iter()
        .zip(grid.midpoints())
        .zip(grid.widths())
        .map(|((v, e), w)| (e.powf(r) + e.powf(-2.0 * s)) * v.abs() * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_grid_example() {
        let g = Grid::uniform(1.0, 4).unwrap();
        assert_eq!(g.edges(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.midpoints(), &[0.125, 0.375, 0.625, 0.875]);
        assert!(g.widths().iter().all(|w| *w == 0.25));
    }

    #[test]
    fn geometric_grid_example() {
        let g = Grid::new(1.0, 3, GridScheme::Geometric { eps_min: 0.25 }).unwrap();
        let expect = [0.0, 0.25, 0.5, 1.0];
        for (a, b) in g.edges().iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
        assert_eq!(g.edges()[3], 1.0);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::uniform(1.0, 1).is_err());
        assert!(Grid::uniform(0.0, 4).is_err());
        assert!(Grid::new(1.0, 4, GridScheme::Geometric { eps_min: 1.5 }).is_err());
        assert!(Grid::new(1.0, 4, GridScheme::Geometric { eps_min: 0.0 }).is_err());
        assert!(Grid::from_edges(vec![0.1, 0.5, 1.0]).is_err());
        assert!(Grid::from_edges(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn grid_construction_is_bit_deterministic() {
        for scheme in [GridScheme::Uniform, GridScheme::Geometric { eps_min: 1e-3 }] {
            let a = Grid::new(7.3, 333, scheme).unwrap();
            let b = Grid::new(7.3, 333, scheme).unwrap();
            let bits = |g: &Grid| g.edges().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn locate_uses_half_open_cells() {
        let g = Grid::uniform(1.0, 4).unwrap();
        assert_eq!(g.locate(0.0), Some(0));
        assert_eq!(g.locate(0.25), Some(1));
        assert_eq!(g.locate(0.2499), Some(0));
        assert_eq!(g.locate(1.0), Some(3));
        assert_eq!(g.locate(1.01), None);
    }

    #[test]
    fn projection_examples() {
        let g = build_grid(1.0, 4, GridScheme::Uniform).unwrap();
        let p = project_initial(&InitialCondition::Exponential, &g);
        let expect = (1.0 - (-0.25f64).exp()) / 0.25;
        assert!(close(p.values()[0], expect, 1e-14));
        assert!(close(p.values()[0], 0.884797, 1e-6));

        let w = project_initial(&InitialCondition::WeightedExponential, &g);
        let expect = (1.0 - 1.25 * (-0.25f64).exp()) / 0.25;
        assert!(close(w.values()[0], expect, 1e-14));
        assert!(close(w.values()[0], 0.105996, 1e-6));

        let one = project_initial(&InitialCondition::custom("one", |_| 1.0), &g);
        assert!(one.values().iter().all(|v| close(*v, 1.0, 1e-14)));
    }

    #[test]
    fn custom_projection_uses_gauss_rule() {
        // degree-9 polynomial is integrated exactly by 5 points
        let g = build_grid(2.0, 3, GridScheme::Uniform).unwrap();
        let p = project_initial(&InitialCondition::custom("e^3", |e| e.powi(3)), &g);
        for (k, v) in p.values().iter().enumerate() {
            let (a, b) = (g.edges()[k], g.edges()[k + 1]);
            let exact = (b.powi(4) - a.powi(4)) / 4.0 / (b - a);
            assert!(close(*v, exact, 1e-13));
        }
    }

    #[test]
    fn moment_examples() {
        let g = build_grid(1.0, 4, GridScheme::Uniform).unwrap();
        let one = GridFunction::new(g.clone(), vec![1.0; 4]).unwrap();
        assert!(close(quad_moment(&one, 0), 1.0, 1e-15));
        assert!(close(quad_moment(&one, 1), 0.5, 1e-15));

        let g = build_grid(10.0, 1000, GridScheme::Uniform).unwrap();
        let p = project_initial(&InitialCondition::Exponential, &g);
        assert!(close(quad_moment(&p, 0), 1.0 - (-10.0f64).exp(), 1e-4));
    }

    #[test]
    fn projected_mass_matches_exact_integral() {
        for cells in [200, 400] {
            let g = build_grid(10.0, cells, GridScheme::Uniform).unwrap();
            let r: f64 = 10.0;
            // ∫₀^R e e^{-e} = 1 - (R+1)e^{-R}; ∫₀^R e² e^{-e} = 2 - (R²+2R+2)e^{-R}
            let exact_exp = 1.0 - (r + 1.0) * (-r).exp();
            let exact_wexp = 2.0 - (r * r + 2.0 * r + 2.0) * (-r).exp();
            let m = quad_moment(&project_initial(&InitialCondition::Exponential, &g), 1);
            assert!(((m - exact_exp) / exact_exp).abs() < 1e-3);
            let m = quad_moment(
                &project_initial(&InitialCondition::WeightedExponential, &g),
                1,
            );
            assert!(((m - exact_wexp) / exact_wexp).abs() < 1e-3);
        }
    }

    #[test]
    fn interpolation_examples() {
        let g = build_grid(1.0, 4, GridScheme::Uniform).unwrap();
        let f = GridFunction::new(g, vec![2.0, 4.0, 1.0, 3.0]).unwrap();
        assert_eq!(interp_eval(&f, 0.375), 4.0);
        assert_eq!(interp_eval(&f, 2.0), 0.0);
        assert!(close(interp_eval(&f, 0.25), 3.0, 1e-15));
        assert_eq!(interp_eval(&f, 0.01), 2.0);
        assert_eq!(interp_eval(&f, 0.95), 3.0);
        assert_eq!(interp_eval(&f, 1.0), 3.0);
    }

    #[test]
    fn weighted_norm_examples() {
        let g = build_grid(1.0, 4, GridScheme::Uniform).unwrap();
        assert_eq!(
            weighted_norm(&GridFunction::zeros(g.clone()), 1.0, 0.0).unwrap(),
            0.0
        );
        let one = GridFunction::new(g.clone(), vec![1.0; 4]).unwrap();
        assert!(close(weighted_norm(&one, 1.0, 0.0).unwrap(), 1.5, 1e-15));
        assert!(weighted_norm(&one, 0.5, 0.0).is_err());
        assert!(weighted_norm(&one, 1.0, -1.0).is_err());
    }

    #[test]
    fn weighted_norm_converges_to_reference_quadrature() {
        // ∫₀^10 (e + 1/e) e^{-e} de diverges logarithmically at 0 for s = 0.5,
        // so compare against the same discrete sum on a 10⁴-cell grid; the
        // difference shrinks under refinement.
        let fine = build_grid(10.0, 10_000, GridScheme::Uniform).unwrap();
        let reference = weighted_norm(
            &project_initial(&InitialCondition::Exponential, &fine),
            1.0,
            0.5,
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for cells in [100, 1000] {
            let g = build_grid(10.0, cells, GridScheme::Uniform).unwrap();
            let v = weighted_norm(
                &project_initial(&InitialCondition::Exponential, &g),
                1.0,
                0.5,
            )
            .unwrap();
            assert!(v.is_finite() && v > 0.0);
            let gap = (v - reference).abs();
            assert!(gap < last);
            last = gap;
        }
    }

    proptest! {
        #[test]
        fn interpolation_is_exact_on_nodes_and_monotone(
            vals in proptest::collection::vec(0.0f64..10.0, 3..20),
            t in 0.0f64..1.0,
        ) {
            let mut sorted = vals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let g = build_grid(3.0, sorted.len(), GridScheme::Uniform).unwrap();
            let f = GridFunction::new(g.clone(), sorted.clone()).unwrap();
            for (m, v) in g.midpoints().iter().zip(&sorted) {
                prop_assert_eq!(interp_eval(&f, *m), *v);
            }
            let e0 = t * 3.0;
            let e1 = (e0 + 0.05).min(3.0);
            prop_assert!(interp_eval(&f, e0) <= interp_eval(&f, e1) + 1e-12);
        }

        #[test]
        fn widths_sum_to_rmax(r in 0.1f64..50.0, n in 2usize..500, frac in 1e-4f64..0.5) {
            for scheme in [GridScheme::Uniform, GridScheme::Geometric { eps_min: frac * r }] {
                let g = Grid::new(r, n, scheme).unwrap();
                prop_assert_eq!(g.edges()[0], 0.0);
                prop_assert_eq!(*g.edges().last().unwrap(), r);
                prop_assert!(g.widths().iter().all(|w| *w > 0.0));
                let total: f64 = g.widths().iter().sum();
                prop_assert!((total - r).abs() < 1e-10 * r);
            }
        }
    }
}
