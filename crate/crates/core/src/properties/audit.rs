//! Consistency audit of time-consistency verdicts against the known
//! implications between the notions.
//!
//! An edge is violated when all of its premises are corroborated and its
//! conclusion has a counterexample. A violation means either a checker
//! defect or a genuine inconsistency; both are worth reporting. Vacuous
//! premises never trigger an edge.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    check_carry_invariance, check_measure_property, check_measure_tc, check_set_tc, CheckSpec,
    MeasureProperty, Status, TcId, Verdict, Witness,
};
use crate::error::{Error, Result};
use crate::robust::{ConsolidatedSet, RobustRiskMeasure};

/// A premise or conclusion of an implication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Tc(TcId),
    /// `R_{t,T}(0) = 0`, equivalently `U_{t+1}(0) = A^ρ_t`.
    Normalised,
    Monotone,
    TranslationInvariant,
    /// `R_{t,T}(0) ≤ 0` at every time.
    ZeroNonPositive,
    /// `0 ∈ U_t(0)` at every time, equivalently `R_{t,T}(0) ≥ 0`.
    ZeroInConsolidated,
    /// `R_{t,T}` is unchanged when an `F_s`-measurable amount moves from
    /// time `s` to time `s + 1`.
    CarryInvariant,
}

impl Condition {
    pub fn name(&self) -> String {
        match self {
            Condition::Tc(id) => id.name().to_string(),
            Condition::Normalised => "normalised".to_string(),
            Condition::Monotone => "monotone".to_string(),
            Condition::TranslationInvariant => "translation_invariant".to_string(),
            Condition::ZeroNonPositive => "zero_nonpositive".to_string(),
            Condition::ZeroInConsolidated => "zero_in_consolidated".to_string(),
            Condition::CarryInvariant => "carry_invariant".to_string(),
        }
    }
}

/// One implication `premises ⇒ conclusion`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub label: &'static str,
    pub premises: &'static [Condition],
    pub conclusion: TcId,
}

use Condition::*;

pub const EDGES: &[Edge] = &[
    Edge {
        label: "i",
        premises: &[Tc(TcId::Strong)],
        conclusion: TcId::WeakRecursive,
    },
    Edge {
        label: "ii",
        premises: &[Normalised, Tc(TcId::WeakRecursive)],
        conclusion: TcId::Strong,
    },
    Edge {
        label: "iii",
        premises: &[Tc(TcId::Strong)],
        conclusion: TcId::ZeroShift,
    },
    Edge {
        label: "iv",
        premises: &[Monotone, Tc(TcId::WeakRecursive)],
        conclusion: TcId::Order,
    },
    Edge {
        label: "v",
        premises: &[TranslationInvariant, CarryInvariant, Tc(TcId::Order)],
        conclusion: TcId::WeakRecursive,
    },
    Edge {
        label: "vi",
        premises: &[ZeroNonPositive, Monotone, Tc(TcId::WeakRecursive)],
        conclusion: TcId::Weak,
    },
    Edge {
        label: "vii",
        premises: &[Monotone, ZeroInConsolidated, Tc(TcId::Weak)],
        conclusion: TcId::Rejection,
    },
    Edge {
        label: "viii",
        premises: &[Tc(TcId::Prudent)],
        conclusion: TcId::Rejection,
    },
    Edge {
        label: "ix",
        premises: &[Normalised, Tc(TcId::Order)],
        conclusion: TcId::Rejection,
    },
];

/// Verdicts and side conditions gathered for one configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerdictTable {
    pub target: String,
    pub conditions: BTreeMap<String, Status>,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl VerdictTable {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            ..Self::default()
        }
    }

    pub fn insert_verdict(&mut self, condition: Condition, verdict: Verdict) {
        self.conditions.insert(condition.name(), verdict.status);
        self.verdicts.insert(condition.name(), verdict);
    }

    pub fn insert_flag(&mut self, condition: Condition, holds: bool) {
        let status = if holds {
            Status::Corroborated
        } else {
            Status::Counterexample
        };
        self.conditions.insert(condition.name(), status);
    }

    fn status(&self, condition: Condition) -> Result<Status> {
        self.conditions
            .get(&condition.name())
            .copied()
            .ok_or_else(|| Error::IncompleteTable {
                property: condition.name(),
            })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub edge: String,
    pub premises: Vec<String>,
    pub conclusion: String,
    /// Counterexample to the conclusion.
    pub witness: Option<Witness>,
}

/// Edges whose premises are corroborated while the conclusion failed.
pub fn audit_implications(table: &VerdictTable) -> Result<Vec<Violation>> {
    let mut violations = Vec::new();
    for edge in EDGES {
        let conclusion = Tc(edge.conclusion);
        let mut premises_hold = true;
        for premise in edge.premises {
            premises_hold &= table.status(*premise)? == Status::Corroborated;
        }
        if premises_hold && table.status(conclusion)? == Status::Counterexample {
            violations.push(Violation {
                edge: edge.label.to_string(),
                premises: edge.premises.iter().map(Condition::name).collect(),
                conclusion: conclusion.name(),
                witness: table
                    .verdicts
                    .get(&conclusion.name())
                    .and_then(|v| v.witness.clone()),
            });
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Audit {
    pub table: VerdictTable,
    pub violations: Vec<Violation>,
}

/// Runs every check the edges need on `measure` and audits the result.
/// Prudence is checked on the consolidated set, all other notions on `R`.
pub fn audit_configuration(measure: &Arc<RobustRiskMeasure>, spec: &CheckSpec) -> Result<Audit> {
    let mut table = VerdictTable::new(measure.describe());
    let tol = spec.tol;
    for id in TcId::MEASURE_LEVEL.iter().chain([&TcId::ZeroShift]) {
        table.insert_verdict(Tc(*id), check_measure_tc(measure, *id, spec)?);
    }
    let consolidated = ConsolidatedSet::new(measure.clone());
    table.insert_verdict(
        Tc(TcId::Prudent),
        check_set_tc(measure, &consolidated, TcId::Prudent, spec)?,
    );
    table.insert_verdict(
        Monotone,
        check_measure_property(measure, MeasureProperty::Monotonicity, spec)?,
    );
    table.insert_verdict(
        TranslationInvariant,
        check_measure_property(measure, MeasureProperty::TranslationInvariance, spec)?,
    );
    table.insert_verdict(CarryInvariant, check_carry_invariance(measure, spec)?);
    let horizon = measure.tree().horizon();
    let zeros = (0..horizon)
        .map(|t| measure.zero_value(t))
        .collect::<Result<Vec<_>>>()?;
    table.insert_flag(Normalised, measure.is_normalised(tol));
    table.insert_flag(
        ZeroNonPositive,
        zeros.iter().all(|z| z.values().iter().all(|&v| v <= tol)),
    );
    table.insert_flag(
        ZeroInConsolidated,
        zeros.iter().all(|z| z.values().iter().all(|&v| v >= -tol)),
    );
    let violations = audit_implications(&table)?;
    Ok(Audit { table, violations })
}
