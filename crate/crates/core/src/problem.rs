//! Collision kernels, breakage distributions, initial data and the benchmark
//! case registry.
//!
//! The collision-induced breakage equation reads
//!
//! ```text
//! df/dt(e) = ∫₀^∞ ∫_e^∞ K(r,s) b(e,r,s) f(r) f(s) dr ds  -  f(e) ∫₀^∞ K(e,r) f(r) dr
//! ```
//!
//! with a symmetric non-negative kernel `K` and a breakage distribution `b`
//! supported on `e < r` that returns the parent's mass, `∫₀^r e b de = r`.

use std::fmt;
use std::sync::Arc;

use crate::error::{CbeError, Result};

type PointFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type PointFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Collision kernel `K(e, r)`.
#[derive(Clone)]
pub enum KernelSpec {
    /// `K = c`.
    Constant(f64),
    /// `K = c e r`.
    ScaledProduct(f64),
    /// Pointwise evaluation contract; the caller guarantees symmetry and
    /// non-negativity.
    Custom { name: String, eval: PointFn2 },
}

impl KernelSpec {
    pub fn constant(c: f64) -> Result<Self> {
        check_rate(c)?;
        Ok(Self::Constant(c))
    }

    pub fn scaled_product(c: f64) -> Result<Self> {
        check_rate(c)?;
        Ok(Self::ScaledProduct(c))
    }

    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// Evaluates the kernel, rejecting non-positive sizes.
    pub fn eval(&self, e: f64, r: f64) -> Result<f64> {
        if !(e > 0.0 && r > 0.0) {
            return Err(CbeError::Domain(format!(
                "kernel arguments must be positive, got ({e}, {r})"
            )));
        }
        Ok(self.rate(e, r))
    }

    /// Unchecked evaluation for solver inner loops (sizes are grid midpoints).
    #[inline]
    pub fn rate(&self, e: f64, r: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::ScaledProduct(c) => c * (e * r),
            Self::Custom { eval, .. } => eval(e, r),
        }
    }

    /// `Σ_l K(p, x_l) w_l` for every probe size `p`.
    ///
    /// The shipped kernels are separable, so this costs `O(points + nodes)`;
    /// custom kernels fall back to the double loop.
    pub fn weighted_sums(&self, points: &[f64], nodes: &[f64], weights: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant(c) => {
                let s: f64 = weights.iter().sum();
                vec![c * s; points.len()]
            }
            Self::ScaledProduct(c) => {
                let s: f64 = nodes.iter().zip(weights).map(|(x, w)| x * w).sum();
                points.iter().map(|p| c * p * s).collect()
            }
            Self::Custom { eval, .. } => points
                .iter()
                .map(|&p| {
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(&x, w)| eval(p, x) * w)
                        .sum()
                })
                .collect(),
        }
    }
}

fn check_rate(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(CbeError::Domain(format!(
            "kernel rate must be finite and non-negative, got {c}"
        )))
    }
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::ScaledProduct(c) => write!(f, "ScaledProduct({c})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Breakage distribution `b(e, r, s)`. Neither shipped variant depends on the
/// collision partner `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum BreakageSpec {
    /// `b = 2 / r` on `0 < e < r`.
    MassUniform,
    /// `b = Σ_k δ(e - a_k r)` with `Σ a_k = 1`.
    DiscreteFragments(Vec<f64>),
}

impl BreakageSpec {
    /// Builds a discrete-fragment distribution, enforcing `a_k ∈ (0, 1)`,
    /// at least two fragments and mass conservation `Σ a_k = 1`.
    pub fn discrete(ratios: Vec<f64>) -> Result<Self> {
        if ratios.len() < 2 {
            return Err(CbeError::InvalidBreakage(format!(
                "need at least two fragments, got {}",
                ratios.len()
            )));
        }
        if let Some(a) = ratios.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(CbeError::InvalidBreakage(format!(
                "fragment ratio {a} outside (0, 1)"
            )));
        }
        let total: f64 = ratios.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CbeError::InvalidBreakage(format!(
                "fragment ratios sum to {total}, mass condition needs 1"
            )));
        }
        Ok(Self::DiscreteFragments(ratios))
    }

    /// `|∫₀^r e b(e, r, ·) de - r|`, evaluated in closed form.
    pub fn mass_residual(&self, r: f64) -> f64 {
        let mass = match self {
            // ∫₀^r e (2/r) de = (2/r)(r²/2), which simplifies to r
            Self::MassUniform => r,
            Self::DiscreteFragments(a) => a.iter().sum::<f64>() * r,
        };
        (mass - r).abs()
    }

    /// Number of fragments `N̄(r, s) = ∫₀^r b de`.
    pub fn fragment_count(&self, r: f64, _s: f64) -> f64 {
        match self {
            Self::MassUniform => (2.0 / r) * r,
            Self::DiscreteFragments(a) => a.len() as f64,
        }
    }

    /// `∫_lo^hi b(e, parent, ·) de` for a sub-interval of `(0, parent]`.
    ///
    /// Deltas are counted on the half-open interval `[lo, hi)`.
    pub fn fragments_in(&self, lo: f64, hi: f64, parent: f64) -> f64 {
        match self {
            Self::MassUniform => {
                let hi = hi.min(parent);
                if hi <= lo {
                    0.0
                } else {
                    2.0 * (hi - lo) / parent
                }
            }
            Self::DiscreteFragments(a) => a
                .iter()
                .filter(|ak| {
                    let x = *ak * parent;
                    x >= lo && x < hi
                })
                .count() as f64,
        }
    }
}

/// Initial concentration `f(0, e)`.
#[derive(Clone)]
pub enum InitialCondition {
    /// `e^{-e}`
    Exponential,
    /// `e e^{-e}`
    WeightedExponential,
    /// Non-negative pointwise contract with finite moments 0..2.
    Custom { name: String, eval: PointFn1 },
}

impl InitialCondition {
    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, e: f64) -> f64 {
        match self {
            Self::Exponential => (-e).exp(),
            Self::WeightedExponential => e * (-e).exp(),
            Self::Custom { eval, .. } => eval(e),
        }
    }

    /// Closed-form `∫_a^b f dε` where available.
    pub fn integral(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Self::Exponential => Some((-a).exp() - (-b).exp()),
            // antiderivative of e e^{-e} is -(e + 1) e^{-e}
            Self::WeightedExponential => Some((a + 1.0) * (-a).exp() - (b + 1.0) * (-b).exp()),
            Self::Custom { .. } => None,
        }
    }
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential => write!(f, "Exponential"),
            Self::WeightedExponential => write!(f, "WeightedExponential"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Exact moment as a function of time.
pub type MomentFn = fn(f64) -> f64;

/// Closed-form references known for a case.
#[derive(Clone, Copy, Default)]
pub struct ExactReference {
    pub concentration: Option<fn(f64, f64) -> f64>,
    pub moments: [Option<MomentFn>; 3],
}

impl fmt::Debug for ExactReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactReference")
            .field("concentration", &self.concentration.is_some())
            .field("moments", &self.moments.map(|m| m.is_some()))
            .finish()
    }
}

/// A fully specified benchmark problem.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub id: String,
    pub kernel: KernelSpec,
    pub breakage: BreakageSpec,
    pub init: InitialCondition,
    pub rmax: f64,
    pub tend: f64,
    pub exact: ExactReference,
    /// Reference convergence-control parameter reported for this case.
    pub reference_alpha: Option<f64>,
}

impl CaseSpec {
    /// Returns a copy with a different truncation size `R`.
    pub fn with_rmax(mut self, rmax: f64) -> Result<Self> {
        self.rmax = rmax;
        self.validate()?;
        Ok(self)
    }

    /// Returns a copy with a different time horizon `T`.
    pub fn with_tend(mut self, tend: f64) -> Result<Self> {
        self.tend = tend;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rmax.is_finite() && self.rmax > 0.0) {
            return Err(CbeError::Domain(format!(
                "rmax must be positive, got {}",
                self.rmax
            )));
        }
        if !(self.tend.is_finite() && self.tend > 0.0) {
            return Err(CbeError::Domain(format!(
                "tend must be positive, got {}",
                self.tend
            )));
        }
        // M0 = 1/(1 - t) blows up at t = 1
        if self.id == "ex3" && self.tend >= 1.0 {
            return Err(CbeError::Domain(format!(
                "ex3 requires tend < 1, got {}",
                self.tend
            )));
        }
        Ok(())
    }

    pub fn has_exact_concentration(&self) -> bool {
        self.exact.concentration.is_some()
    }

    pub fn exact_concentration(&self, t: f64, e: f64) -> Result<f64> {
        let f = self
            .exact
            .concentration
            .ok_or_else(|| CbeError::NoExactConcentration(self.id.clone()))?;
        if !(e > 0.0) {
            return Err(CbeError::Domain(format!("size must be positive, got {e}")));
        }
        Ok(f(t, e))
    }

    pub fn exact_moment(&self, order: usize, t: f64) -> Result<f64> {
        self.exact
            .moments
            .get(order)
            .copied()
            .flatten()
            .map(|m| m(t))
            .ok_or_else(|| CbeError::NoExactMoment {
                case: self.id.clone(),
                order,
            })
    }
}

/// Ids of the shipped benchmark cases.
pub const CASE_IDS: [&str; 3] = ["ex1", "ex2", "ex3"];

fn ex1_concentration(t: f64, e: f64) -> f64 {
    let s = 1.0 + t;
    s * s * (-e * s).exp()
}

/// Looks up one of the three benchmark cases with its default `R` and `T`.
pub fn registry_case(id: &str) -> Result<CaseSpec> {
    let case = match id {
        "ex1" => CaseSpec {
            id: id.into(),
            kernel: KernelSpec::ScaledProduct(1.0),
            breakage: BreakageSpec::MassUniform,
            init: InitialCondition::Exponential,
            rmax: 10.0,
            tend: 1.0,
            exact: ExactReference {
                concentration: Some(ex1_concentration),
                // M_n = n! (1 + t)^{1 - n}
                moments: [Some(|t| 1.0 + t), Some(|_| 1.0), Some(|t| 2.0 / (1.0 + t))],
            },
            reference_alpha: Some(-0.826),
        },
        "ex2" => CaseSpec {
            id: id.into(),
            kernel: KernelSpec::ScaledProduct(1.0 / 20.0),
            breakage: BreakageSpec::MassUniform,
            init: InitialCondition::WeightedExponential,
            rmax: 20.0,
            tend: 1.0,
            exact: ExactReference {
                concentration: None,
                moments: [Some(|t| 1.0 + t / 5.0), Some(|_| 2.0), None],
            },
            reference_alpha: Some(-0.969),
        },
        "ex3" => CaseSpec {
            id: id.into(),
            kernel: KernelSpec::Constant(1.0),
            breakage: BreakageSpec::DiscreteFragments(vec![2.0 / 5.0, 3.0 / 5.0]),
            init: InitialCondition::Exponential,
            rmax: 20.0,
            tend: 0.5,
            exact: ExactReference {
                concentration: None,
                moments: [
                    Some(|t| 1.0 / (1.0 - t)),
                    Some(|_| 1.0),
                    Some(|t| 2.0 * (1.0 - t).powf(0.48)),
                ],
            },
            reference_alpha: Some(-0.829),
        },
        other => return Err(CbeError::UnknownCase(other.to_string())),
    };
    Ok(case)
}
