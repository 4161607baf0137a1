//! Polynomials in time whose coefficients are grid functions.

use std::sync::Arc;

use crate::error::{CbeError, Result};
use crate::grid::{same_grid, Grid, GridFunction};

/// `p(t, e_i) = Σ_k c_k[i] t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePoly {
    grid: Arc<Grid>,
    coeffs: Vec<Vec<f64>>,
}

impl TimePoly {
    /// Builds a polynomial from raw coefficient blocks (`coeffs[k]` multiplies `t^k`).
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.cells();
        if coeffs.iter().any(|c| c.len() != n) {
            return Err(CbeError::InvalidArgument(format!(
                "every coefficient block needs {n} values"
            )));
        }
        Ok(Self::from_blocks(grid, coeffs))
    }

    pub(crate) fn from_blocks(grid: Arc<Grid>, mut coeffs: Vec<Vec<f64>>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().iter().all(|v| *v == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(vec![0.0; grid.cells()]);
        }
        Self { grid, coeffs }
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        Self::from_blocks(grid, Vec::new())
    }

    /// Time-independent polynomial.
    pub fn constant(g: &GridFunction) -> Self {
        Self::from_blocks(g.grid().clone(), vec![g.values().to_vec()])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Coefficient of `t^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> GridFunction {
        let values = self
            .coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.grid.cells()]);
        GridFunction::from_raw(self.grid.clone(), values)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|v| *v == 0.0))
    }

    /// Horner evaluation at time `t`.
    pub fn eval(&self, t: f64) -> GridFunction {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            for (a, ck) in acc.iter_mut().zip(c) {
                *a = *a * t + ck;
            }
        }
        GridFunction::from_raw(self.grid.clone(), acc)
    }

    /// Value at one cell and time.
    pub fn eval_cell(&self, t: f64, i: usize) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c[i])
    }

    fn check(&self, other: &TimePoly) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(CbeError::GridMismatch)
        }
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &TimePoly, scale: f64) -> Result<TimePoly> {
        self.check(other)?;
        let len = self.coeffs.len().max(other.coeffs.len());
        let n = self.grid.cells();
        let coeffs = (0..len)
            .map(|k| {
                let mut c = self.coeffs.get(k).cloned().unwrap_or_else(|| vec![0.0; n]);
                if let Some(o) = other.coeffs.get(k) {
                    for (a, b) in c.iter_mut().zip(o) {
                        *a += scale * b;
                    }
                }
                c
            })
            .collect();
        Ok(Self::from_blocks(self.grid.clone(), coeffs))
    }

    pub fn add(&self, other: &TimePoly) -> Result<TimePoly> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &TimePoly) -> Result<TimePoly> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, s: f64) -> TimePoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.iter().map(|v| v * s).collect())
            .collect();
        Self::from_blocks(self.grid.clone(), coeffs)
    }

    /// Cauchy product in `t`, pointwise per cell.
    pub fn mul(&self, other: &TimePoly) -> Result<TimePoly> {
        self.check(other)?;
        let n = self.grid.cells();
        let mut out = vec![vec![0.0; n]; self.coeffs.len() + other.coeffs.len() - 1];
        for (a, pa) in self.coeffs.iter().enumerate() {
            for (b, qb) in other.coeffs.iter().enumerate() {
                for ((o, x), y) in out[a + b].iter_mut().zip(pa).zip(qb) {
                    *o += x * y;
                }
            }
        }
        Ok(Self::from_blocks(self.grid.clone(), out))
    }

    /// `∫₀^t p(s) ds`.
    pub fn antiderivative(&self) -> TimePoly {
        let n = self.grid.cells();
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(vec![0.0; n]);
        for (k, c) in self.coeffs.iter().enumerate() {
            let d = (k + 1) as f64;
            coeffs.push(c.iter().map(|v| v / d).collect());
        }
        Self::from_blocks(self.grid.clone(), coeffs)
    }

    /// `dp/dt`.
    pub fn derivative(&self) -> TimePoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.iter().map(|v| v * k as f64).collect())
            .collect();
        Self::from_blocks(self.grid.clone(), coeffs)
    }

    /// Largest absolute coefficient value at powers above `k`.
    pub fn max_abs_above(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .skip(k + 1)
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Free-function form of [`TimePoly::mul`].
pub fn poly_mul(p: &TimePoly, q: &TimePoly) -> Result<TimePoly> {
    p.mul(q)
}

/// Free-function form of [`TimePoly::antiderivative`].
pub fn poly_antiderivative(p: &TimePoly) -> TimePoly {
    p.antiderivative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridScheme};
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        build_grid(1.0, 3, GridScheme::Uniform).unwrap()
    }

    #[test]
    fn multiplying_by_one_is_identity() {
        let g = grid();
        let one = TimePoly::new(g.clone(), vec![vec![1.0; 3]]).unwrap();
        let q = TimePoly::new(g, vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.0, -1.0]]).unwrap();
        assert_eq!(one.mul(&q).unwrap(), q);
    }

    #[test]
    fn monomial_product() {
        let g = grid();
        let a = TimePoly::new(g.clone(), vec![vec![0.0; 3], vec![1.0, 2.0, 3.0]]).unwrap();
        let b = TimePoly::new(g, vec![vec![0.0; 3], vec![4.0, 5.0, 6.0]]).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs()[2], vec![4.0, 10.0, 18.0]);
        assert!(p.coeffs()[0]
            .iter()
            .chain(&p.coeffs()[1])
            .all(|v| *v == 0.0));
    }

    #[test]
    fn antiderivative_examples() {
        let g = grid();
        let c = TimePoly::new(g.clone(), vec![vec![2.0; 3]]).unwrap();
        let ac = c.antiderivative();
        assert_eq!(ac.coeffs(), &[vec![0.0; 3], vec![2.0; 3]]);
        let aac = ac.antiderivative();
        assert_eq!(aac.coeffs()[2], vec![1.0; 3]);
        assert_eq!(aac.degree(), 2);
    }

    #[test]
    fn trailing_zero_blocks_are_trimmed() {
        let g = grid();
        let p = TimePoly::new(g.clone(), vec![vec![1.0; 3], vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert_eq!(p.degree(), 0);
        assert!(TimePoly::zero(g.clone()).is_zero());
        let q = TimePoly::new(g, vec![vec![1.0; 3], vec![2.0; 3]]).unwrap();
        assert_eq!(q.sub(&q).unwrap().degree(), 0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let p = TimePoly::zero(grid());
        let q = TimePoly::zero(build_grid(2.0, 3, GridScheme::Uniform).unwrap());
        assert_eq!(p.mul(&q).unwrap_err(), CbeError::GridMismatch);
        assert_eq!(p.add(&q).unwrap_err(), CbeError::GridMismatch);
    }

    fn arb_poly(deg: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), deg + 1)
    }

    proptest! {
        #[test]
        fn product_matches_pointwise_evaluation(p in arb_poly(2), q in arb_poly(3)) {
            let g = grid();
            let (p, q) = (TimePoly::new(g.clone(), p).unwrap(), TimePoly::new(g, q).unwrap());
            let pq = p.mul(&q).unwrap();
            for k in 0..7 {
                let t = -1.0 + k as f64 / 3.0;
                let (a, b, c) = (p.eval(t), q.eval(t), pq.eval(t));
                for i in 0..3 {
                    let expect = a.values()[i] * b.values()[i];
                    prop_assert!((c.values()[i] - expect).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn antiderivative_inverts_finite_difference(p in arb_poly(3), t in 0.1f64..1.5) {
            let g = grid();
            let p = TimePoly::new(g, p).unwrap();
            let a = p.antiderivative();
            let h = 1e-5;
            let (up, dn, mid) = (a.eval(t + h), a.eval(t - h), p.eval(t));
            for i in 0..3 {
                let fd = (up.values()[i] - dn.values()[i]) / (2.0 * h);
                prop_assert!((fd - mid.values()[i]).abs() < 1e-7);
            }
            prop_assert!(a.eval(0.0).values().iter().all(|v| *v == 0.0));
        }
    }
}
