//! One-step conditional risk measures and their nested composition.
//!
//! A one-step measure maps a time-`t+1` vector to a time-`t` vector by
//! applying a law-invariant functional to the conditional law on the
//! children of every time-`t` atom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};

/// The supported one-step risk measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskKind {
    Expectation,
    /// Conditional value-at-risk at level `alpha ∈ [0, 1)`, on the upper tail.
    Cvar {
        alpha: f64,
    },
    /// Entropic risk `β⁻¹ log E[e^{βZ}]` with `beta > 0`.
    Entropic {
        beta: f64,
    },
    WorstCase,
}

impl RiskKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RiskKind::Cvar { alpha } if !(0.0..1.0).contains(&alpha) => {
                Err(Error::CvarLevel { alpha })
            }
            RiskKind::Entropic { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::EntropicParameter { beta })
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `cvar(0.9)`.
    pub fn label(&self) -> String {
        match self {
            RiskKind::Expectation => "expectation".to_string(),
            RiskKind::Cvar { alpha } => format!("cvar({alpha})"),
            RiskKind::Entropic { beta } => format!("entropic({beta})"),
            RiskKind::WorstCase => "worst_case".to_string(),
        }
    }

    /// Evaluates the functional on a discrete law given as parallel value and
    /// probability slices.
    pub fn eval(&self, values: &[f64], probs: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), probs.len());
        debug_assert!(!values.is_empty());
        let first = values[0];
        if values.iter().all(|&v| v == first) {
            return first;
        }
        match *self {
            RiskKind::Expectation => expectation(values, probs),
            RiskKind::Cvar { alpha } => cvar(alpha, values, probs),
            RiskKind::Entropic { beta } => entropic(beta, values, probs),
            RiskKind::WorstCase => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Evaluates on a law given as `(value, probability)` pairs.
    pub fn eval_law(&self, law: &[(f64, f64)]) -> f64 {
        let (values, probs): (Vec<f64>, Vec<f64>) = law.iter().copied().unzip();
        self.eval(&values, &probs)
    }

    /// `ρ(λZ) = λρ(Z)` for `λ ≥ 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        !matches!(self, RiskKind::Entropic { .. })
    }

    /// `ρ(Z + W) ≤ ρ(Z) + ρ(W)`.
    pub fn is_subadditive(&self) -> bool {
        self.is_positively_homogeneous()
    }

    /// Whether `self(Z) ≤ other(Z)` holds for every `Z` on every tree.
    ///
    /// Returns `None` for pairs without a pointwise ordering.
    pub fn dominated_by(&self, other: &RiskKind) -> Option<bool> {
        use RiskKind::*;
        match (*self, *other) {
            (Expectation, _) | (_, WorstCase) => Some(true),
            (WorstCase, _) => Some(false),
            (_, Expectation) => Some(false),
            (Cvar { alpha: a }, Cvar { alpha: b }) => Some(a <= b),
            (Entropic { beta: a }, Entropic { beta: b }) => Some(a <= b),
            (Cvar { .. }, Entropic { .. }) | (Entropic { .. }, Cvar { .. }) => None,
        }
    }
}

fn expectation(values: &[f64], probs: &[f64]) -> f64 {
    values.iter().zip(probs).map(|(v, p)| v * p).sum()
}

/// Rockafellar–Uryasev minimization over the support points, which is exact
/// for discrete laws.
fn cvar(alpha: f64, values: &[f64], probs: &[f64]) -> f64 {
    if alpha == 0.0 {
        return expectation(values, probs);
    }
    let scale = 1.0 / (1.0 - alpha);
    values
        .iter()
        .map(|&m| {
            m + scale
                * values
                    .iter()
                    .zip(probs)
                    .map(|(&z, &p)| p * (z - m).max(0.0))
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn entropic(beta: f64, values: &[f64], probs: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values
        .iter()
        .zip(probs)
        .map(|(&z, &p)| p * (beta * (z - top)).exp())
        .sum();
    top + sum.ln() / beta
}

/// Applies `kind` on the children of every time-`t` atom, where `z` lives
/// at time `t + 1`.
pub fn evaluate_one_step(
    kind: &RiskKind,
    tree: &ScenarioTree,
    z: &AdaptedVector,
) -> Result<AdaptedVector> {
    if z.time() == 0 {
        return Err(Error::TimeMismatch {
            expected: 1,
            found: 0,
        });
    }
    tree.check_vector(z, z.time())?;
    let t = z.time() - 1;
    let values = (0..tree.width(t))
        .map(|i| kind.eval(&tree.child_values(z, i), &tree.child_probs(t, i)))
        .collect();
    Ok(AdaptedVector::from_parts(t, values))
}

/// Per-time one-step measures `ρ_0, …, ρ_{T−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskFamily {
    kinds: Vec<RiskKind>,
}

impl RiskFamily {
    pub fn new(kinds: Vec<RiskKind>) -> Result<Self> {
        for kind in &kinds {
            kind.validate()?;
        }
        Ok(Self { kinds })
    }

    /// The same kind at every time `0..horizon`.
    pub fn uniform(kind: RiskKind, horizon: usize) -> Result<Self> {
        Self::new(vec![kind; horizon])
    }

    /// The measure applied at time `t`.
    pub fn at(&self, t: usize) -> &RiskKind {
        &self.kinds[t]
    }

    pub fn kinds(&self) -> &[RiskKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        if self.kinds.len() != horizon {
            return Err(Error::FamilyLength {
                expected: horizon,
                found: self.kinds.len(),
            });
        }
        Ok(())
    }
}

/// `ρ_t(X_{t+1} + ρ_{t+1}(X_{t+2} + ⋯ + ρ_{T−1}(X_T)))`.
pub fn nested_evaluate(
    family: &RiskFamily,
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
) -> Result<AdaptedVector> {
    let horizon = tree.horizon();
    if t >= horizon {
        return Err(Error::TerminalTime { time: t, horizon });
    }
    family.check_horizon(horizon)?;
    tree.check_process(x)?;
    let mut acc = x.at(horizon).clone();
    for s in (t..horizon).rev() {
        acc = evaluate_one_step(family.at(s), tree, &acc)?;
        if s > t {
            acc = &acc + x.at(s);
        }
    }
    Ok(acc)
}

/// Membership of `z` (time `t + 1`) in the one-step acceptance set, per
/// time-`t` atom.
pub fn acceptance_indicator(
    kind: &RiskKind,
    tree: &ScenarioTree,
    z: &AdaptedVector,
    tol: f64,
) -> Result<Vec<bool>> {
    Ok(evaluate_one_step(kind, tree, z)?
        .values()
        .iter()
        .map(|&v| v <= tol)
        .collect())
}
