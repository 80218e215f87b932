//! The collective yes/no measurement on n copies, in analytic form.
//!
//! The yes-projector sums product projectors over all measurement records
//! whose zero-count falls in the typicality window. Its outcome probability
//! on an i.i.d. product state collapses to a binomial mass over the window,
//! so everything here is exact for any n without materializing operators;
//! the dense backend exists solely as an oracle for these formulas.

use rand::Rng;
use serde::Serialize;

use crate::bloch::{DensityOperator, MeasBasis};
use crate::error::{Error, Result};
use crate::types::{error_exponent, typical_mass, TypicalSetSpec};

/// A yes/no measurement acting jointly on n copies: a basis diameter plus a
/// frequency window always centered on q = 1/2 (the center of the Bloch
/// ball).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectiveMeasurement {
    basis: MeasBasis,
    spec: TypicalSetSpec,
}

impl CollectiveMeasurement {
    pub fn new(basis: MeasBasis, n: u64, eps: f64) -> Result<Self> {
        Ok(Self {
            basis,
            spec: TypicalSetSpec::centered(n, eps)?,
        })
    }

    pub fn basis(&self) -> &MeasBasis {
        &self.basis
    }

    pub fn spec(&self) -> &TypicalSetSpec {
        &self.spec
    }

    pub fn n(&self) -> u64 {
        self.spec.n()
    }

    pub fn eps(&self) -> f64 {
        self.spec.eps()
    }
}

/// Probability of "yes" on rho^(x)n: the window mass of the projected
/// distribution. Exact to numerical precision for any n.
pub fn p_yes(rho: &DensityOperator, m: &CollectiveMeasurement) -> f64 {
    typical_mass(m.spec(), &m.basis().project(rho))
}

/// Entanglement fidelity of the two-outcome measurement at yes-probability
/// p: F = p^2 + (1-p)^2. Whenever min(p, 1-p) <= delta, F >= 1 - 2 delta.
pub fn entanglement_fidelity(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    p * p + (1.0 - p) * (1.0 - p)
}

/// Which side of the layer the state is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerSide {
    /// Layer distance <= eps: "yes" dominates as n grows.
    Inside,
    /// Layer distance > eps: "yes" decays exponentially in n.
    Outside,
}

/// Exact outcome data plus the side-dependent bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeStats {
    pub p_yes: f64,
    /// p^2 + (1-p)^2, the exact entanglement fidelity.
    pub fidelity: f64,
    pub side: LayerSide,
    /// Inside: a lower bound on p_yes (mass of the nested window centered on
    /// the projected q0). Outside: the (n+1) 2^(-n min D) upper bound.
    pub exponent_bound: f64,
}

/// Classification of a state against a measurement's layer, with the
/// matching certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop1Classification {
    pub layer_distance: f64,
    pub stats: OutcomeStats,
}

/// Classifies by layer distance vs eps and attaches the side's bound:
/// a nested-window lower bound inside, the exponent upper bound outside.
pub fn prop1_classify(rho: &DensityOperator, m: &CollectiveMeasurement) -> Prop1Classification {
    let dist = m.basis().project(rho);
    let distance = m.basis().layer_distance(rho);
    let p = typical_mass(m.spec(), &dist);
    let side = if distance <= m.eps() {
        LayerSide::Inside
    } else {
        LayerSide::Outside
    };
    let exponent_bound = match side {
        LayerSide::Inside => {
            // Nested window of width eps' = eps - 2|q0 - 1/2| centered on q0
            // sits entirely inside the measured window, so its mass bounds
            // p_yes from below.
            let eps_prime = m.eps() - distance;
            if eps_prime <= 0.0 {
                0.0
            } else {
                match TypicalSetSpec::new(m.n(), eps_prime, dist.q0()) {
                    Ok(nested) => typical_mass(&nested, &dist),
                    Err(_) => 0.0,
                }
            }
        }
        LayerSide::Outside => match error_exponent(m.spec(), &dist) {
            Ok(e) => e.finite_n_bound,
            // Empty window: p_yes is exactly zero.
            Err(Error::EmptyWindow { .. }) => 0.0,
            Err(_) => unreachable!("exponent only fails on empty windows"),
        },
    };
    Prop1Classification {
        layer_distance: distance,
        stats: OutcomeStats {
            p_yes: p,
            fidelity: entanglement_fidelity(p),
            side,
            exponent_bound,
        },
    }
}

/// Measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Yes,
    No,
}

/// Born-rule sample: "yes" with probability p, deterministic given the RNG
/// state.
pub fn sample_outcome<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Outcome {
    debug_assert!((0.0..=1.0).contains(&p));
    if rng.random::<f64>() < p {
        Outcome::Yes
    } else {
        Outcome::No
    }
}
