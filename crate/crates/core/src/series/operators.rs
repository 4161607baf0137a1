//! Midpoint-rule birth and death integrals on a grid.
//!
//! Both operators are bilinear. For two grid functions `g` (the breaking
//! particle) and `h` (its collision partner):
//!
//! ```text
//! death(g,h)_i = g_i Σ_j K(e_i,e_j) h_j Δe_j
//! birth(g,h)_i = Σ_{j ≥ i} ω_ij Σ_l K(e_j,e_l) b(e_i,e_j,e_l) g_j h_l Δe_j Δe_l    (smooth b)
//!              = Σ_k a_k⁻¹ g(e_i/a_k) Σ_l K(e_i/a_k, e_l) h_l Δe_l                 (Dirac fragments)
//! ```
//!
//! The smooth-b sum is the midpoint rule for `∫_{e_i}^R … dr`. The lower limit
//! sits at the midpoint of cell `i`, so only half of that cell lies inside the
//! integration range: `ω_ii = 1/2` and `ω_ij = 1` for `j > i`.
//!
//! Off-grid values `g(e_i/a_k)` come from linear interpolation between
//! midpoints and vanish beyond `R`.

use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::grid::{same_grid, Grid, GridFunction};
use crate::problem::{BreakageSpec, KernelSpec};

use super::poly::TimePoly;

/// Linear-interpolation stencil for one off-grid probe.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    lo: usize,
    hi: usize,
    t: f64,
}

#[derive(Debug, Clone)]
struct Fragment {
    inv_ratio: f64,
    // probe sizes e_i / a_k, only for probes inside (0, R]
    points: Vec<f64>,
    stencils: Vec<Stencil>,
}

/// Birth/death operator for one grid, kernel and breakage distribution.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    grid: Arc<Grid>,
    kernel: KernelSpec,
    breakage: BreakageSpec,
    fragments: Vec<Fragment>,
}

/// Collision frequencies `Σ_l K(·, e_l) h_l Δe_l` of one partner density,
/// cached for reuse across many products.
#[derive(Debug, Clone)]
pub struct Partner {
    on_grid: Vec<f64>,
    at_probes: Vec<Vec<f64>>,
}

impl CollisionOperator {
    pub fn new(grid: Arc<Grid>, kernel: KernelSpec, breakage: BreakageSpec) -> Self {
        let fragments = match &breakage {
            BreakageSpec::MassUniform => Vec::new(),
            BreakageSpec::DiscreteFragments(ratios) => ratios
                .iter()
                .map(|a| {
                    let rmax = grid.rmax();
                    let points: Vec<f64> = grid
                        .midpoints()
                        .iter()
                        .map(|e| e / a)
                        .take_while(|p| *p <= rmax)
                        .collect();
                    let stencils = points.iter().map(|p| stencil(&grid, *p)).collect();
                    Fragment {
                        inv_ratio: 1.0 / a,
                        points,
                        stencils,
                    }
                })
                .collect(),
        };
        Self {
            grid,
            kernel,
            breakage,
            fragments,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn mass(&self, h: &[f64]) -> Vec<f64> {
        h.iter()
            .zip(self.grid.widths())
            .map(|(v, w)| v * w)
            .collect()
    }

    /// Caches the collision frequencies generated by partner density `h`.
    pub fn partner(&self, h: &[f64]) -> Partner {
        let mids = self.grid.midpoints();
        let mass = self.mass(h);
        let on_grid = self.kernel.weighted_sums(mids, mids, &mass);
        let at_probes = self
            .fragments
            .iter()
            .map(|fr| self.kernel.weighted_sums(&fr.points, mids, &mass))
            .collect();
        Partner { on_grid, at_probes }
    }

    /// Adds `scale * birth(g, h)` to `out`, with `h` given through its cached frequencies.
    pub fn add_birth(&self, g: &[f64], h: &Partner, scale: f64, out: &mut [f64]) {
        match &self.breakage {
            BreakageSpec::MassUniform => {
                let mids = self.grid.midpoints();
                let widths = self.grid.widths();
                // suffix sums of (2/e_j) g_j Δe_j freq_j over j > i, plus half of j = i
                let mut acc = 0.0;
                for i in (0..g.len()).rev() {
                    let own = 2.0 / mids[i] * g[i] * widths[i] * h.on_grid[i];
                    out[i] += scale * (acc + 0.5 * own);
                    acc += own;
                }
            }
            BreakageSpec::DiscreteFragments(_) => {
                for (fr, freq) in self.fragments.iter().zip(&h.at_probes) {
                    for (i, (st, c)) in fr.stencils.iter().zip(freq).enumerate() {
                        let gv = g[st.lo] + st.t * (g[st.hi] - g[st.lo]);
                        out[i] += scale * fr.inv_ratio * gv * c;
                    }
                }
            }
        }
    }

    /// Adds `scale * death(g, h)` to `out`.
    pub fn add_death(&self, g: &[f64], h: &Partner, scale: f64, out: &mut [f64]) {
        for ((o, gi), c) in out.iter_mut().zip(g).zip(&h.on_grid) {
            *o += scale * gi * c;
        }
    }

    fn check(&self, g: &GridFunction) -> Result<()> {
        if same_grid(g.grid(), &self.grid) {
            Ok(())
        } else {
            Err(CbeError::GridMismatch)
        }
    }

    pub fn birth_apply(&self, g: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        self.check(h)?;
        let mut out = vec![0.0; self.grid.cells()];
        self.add_birth(g.values(), &self.partner(h.values()), 1.0, &mut out);
        Ok(GridFunction::from_raw(self.grid.clone(), out))
    }

    pub fn death_apply(&self, g: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
        self.check(g)?;
        self.check(h)?;
        let mut out = vec![0.0; self.grid.cells()];
        self.add_death(g.values(), &self.partner(h.values()), 1.0, &mut out);
        Ok(GridFunction::from_raw(self.grid.clone(), out))
    }

    /// Partner caches for every coefficient of `q`.
    pub fn partners(&self, q: &TimePoly) -> Vec<Partner> {
        q.coeffs().iter().map(|c| self.partner(c)).collect()
    }

    /// `birth(p, q) - death(p, q)` as a time polynomial, with `q` pre-cached.
    pub fn net_cached(&self, p: &TimePoly, q: &[Partner]) -> TimePoly {
        let n = self.grid.cells();
        let mut out = vec![vec![0.0; n]; p.coeffs().len() + q.len() - 1];
        for (a, pa) in p.coeffs().iter().enumerate() {
            if pa.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (b, qb) in q.iter().enumerate() {
                self.add_birth(pa, qb, 1.0, &mut out[a + b]);
                self.add_death(pa, qb, -1.0, &mut out[a + b]);
            }
        }
        TimePoly::from_blocks(self.grid.clone(), out)
    }

    pub fn net(&self, p: &TimePoly, q: &TimePoly) -> Result<TimePoly> {
        if !same_grid(p.grid(), &self.grid) || !same_grid(q.grid(), &self.grid) {
            return Err(CbeError::GridMismatch);
        }
        Ok(self.net_cached(p, &self.partners(q)))
    }

    pub fn birth_poly(&self, p: &TimePoly, q: &TimePoly) -> Result<TimePoly> {
        self.bilinear(p, q, true)
    }

    pub fn death_poly(&self, p: &TimePoly, q: &TimePoly) -> Result<TimePoly> {
        self.bilinear(p, q, false)
    }

    fn bilinear(&self, p: &TimePoly, q: &TimePoly, birth: bool) -> Result<TimePoly> {
        if !same_grid(p.grid(), &self.grid) || !same_grid(q.grid(), &self.grid) {
            return Err(CbeError::GridMismatch);
        }
        let qs = self.partners(q);
        let n = self.grid.cells();
        let mut out = vec![vec![0.0; n]; p.coeffs().len() + qs.len() - 1];
        for (a, pa) in p.coeffs().iter().enumerate() {
            for (b, qb) in qs.iter().enumerate() {
                if birth {
                    self.add_birth(pa, qb, 1.0, &mut out[a + b]);
                } else {
                    self.add_death(pa, qb, 1.0, &mut out[a + b]);
                }
            }
        }
        Ok(TimePoly::from_blocks(self.grid.clone(), out))
    }
}

fn stencil(grid: &Grid, e: f64) -> Stencil {
    let mids = grid.midpoints();
    let n = mids.len();
    if e <= mids[0] {
        return Stencil {
            lo: 0,
            hi: 0,
            t: 0.0,
        };
    }
    if e >= mids[n - 1] {
        return Stencil {
            lo: n - 1,
            hi: n - 1,
            t: 0.0,
        };
    }
    let k = mids.partition_point(|&m| m <= e);
    Stencil {
        lo: k - 1,
        hi: k,
        t: (e - mids[k - 1]) / (mids[k] - mids[k - 1]),
    }
}

/// `death(g, h)` for kernel `K`.
pub fn death_apply(
    kernel: &KernelSpec,
    g: &GridFunction,
    h: &GridFunction,
) -> Result<GridFunction> {
    // breakage plays no role in the loss term
    CollisionOperator::new(g.grid().clone(), kernel.clone(), BreakageSpec::MassUniform)
        .death_apply(g, h)
}

/// `birth(g, h)` for kernel `K` and breakage distribution `b`.
pub fn birth_apply(
    kernel: &KernelSpec,
    breakage: &BreakageSpec,
    g: &GridFunction,
    h: &GridFunction,
) -> Result<GridFunction> {
    CollisionOperator::new(g.grid().clone(), kernel.clone(), breakage.clone()).birth_apply(g, h)
}
