//! Property matrix of the four built-in uncertainty-set families.
//!
//! Every cell is decided by running the set-property checker. A cell that
//! holds unconditionally is checked on a panel of radius rules and reads
//! `✓` when all of them are corroborated. A conditional cell names the
//! condition on the radius rule; it is confirmed by a rule that satisfies
//! the condition (expected corroborated) and one that does not (expected
//! counterexample). Any other outcome yields `✗` or `inconclusive`.
//!
//! The conditional-KL column uses the one-step KL ball, which is static.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_set_property, CheckSpec, SetProperty, Status};
use crate::error::Result;
use crate::sampling;
use crate::space::ScenarioTree;
use crate::uncertainty::{
    DynamicSet, DynamicUncertaintySet, MeasureSpec, ToleranceRule, UncertaintyKind,
};

pub const CHECK: &str = "✓";
pub const CROSS: &str = "✗";
pub const INCONCLUSIVE: &str = "inconclusive";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    SemiNorm,
    Wasserstein,
    Probability,
    ConditionalKl,
}

impl Column {
    pub const ALL: [Column; 4] = [
        Column::SemiNorm,
        Column::Wasserstein,
        Column::Probability,
        Column::ConditionalKl,
    ];

    pub fn title(&self) -> &'static str {
        match self {
            Column::SemiNorm => "semi-norm",
            Column::Wasserstein => "Wasserstein",
            Column::Probability => "probability",
            Column::ConditionalKl => "cond. KL",
        }
    }
}

pub const ROWS: [SetProperty; 7] = [
    SetProperty::Proper,
    SetProperty::Normalisation,
    SetProperty::OrderPreservation,
    SetProperty::TranslationInvariance,
    SetProperty::Static,
    SetProperty::Locality,
    SetProperty::PositiveHomogeneity,
];

const NORMALISED: &str = "ε_0 = 0";
const NORM_NORMALISED: &str = "norm, ε_0 = 0";
const ORDER: &str = "ε_X ≤ ε_Y";
const TRANSLATION: &str = "ε_{X+Y} = ε_X";
const HOMOGENEOUS: &str = "ε_{λX} = λ ε_X";

/// The published cell for `row` and `column`.
pub fn expected_cell(row: SetProperty, column: Column) -> &'static str {
    use Column::*;
    use SetProperty::*;
    match (row, column) {
        (_, Probability) | (Proper, _) | (Static, _) => CHECK,
        (Normalisation, SemiNorm) => NORM_NORMALISED,
        (Normalisation, Wasserstein) => NORMALISED,
        (OrderPreservation, _) => ORDER,
        (TranslationInvariance, ConditionalKl) => CHECK,
        (TranslationInvariance, _) => TRANSLATION,
        (Locality | PositiveHomogeneity, ConditionalKl) => CHECK,
        (Locality | PositiveHomogeneity, _) => HOMOGENEOUS,
        _ => CHECK,
    }
}

/// Radius rules `(satisfying, violating)` for a conditional cell.
fn rule_pair(row: SetProperty) -> (ToleranceRule, ToleranceRule) {
    use ToleranceRule::*;
    match row {
        SetProperty::Normalisation => (VarScaled { epsilon: 0.5 }, Constant { epsilon: 0.1 }),
        SetProperty::OrderPreservation => (Constant { epsilon: 0.1 }, VarScaled { epsilon: 0.5 }),
        SetProperty::TranslationInvariance => {
            (Constant { epsilon: 0.1 }, NormScaled { epsilon: 0.5 })
        }
        SetProperty::PositiveHomogeneity => {
            (NormScaled { epsilon: 0.5 }, Constant { epsilon: 0.1 })
        }
        SetProperty::Locality => (NormScaled { epsilon: 0.5 }, PooledNorm { epsilon: 0.5 }),
        _ => (Constant { epsilon: 0.1 }, Constant { epsilon: 0.1 }),
    }
}

/// Radius rules that do not depend on `X` for unconditional cells.
const PANEL: [ToleranceRule; 3] = [
    ToleranceRule::Zero,
    ToleranceRule::Constant { epsilon: 0.1 },
    ToleranceRule::Horizon { epsilon: 0.05 },
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellCheck {
    pub set: String,
    pub expected: Status,
    pub found: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub text: String,
    pub expected: String,
    pub checks: Vec<CellCheck>,
}

impl Cell {
    pub fn matches(&self) -> bool {
        self.text == self.expected
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1 {
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl Table1 {
    pub fn matches(&self) -> bool {
        self.cells.iter().flatten().all(Cell::matches)
    }

    /// Aligned text rendering.
    pub fn render(&self) -> String {
        let first = self
            .rows
            .iter()
            .map(|r| r.chars().count())
            .max()
            .unwrap_or(0)
            .max("property".len());
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                self.cells
                    .iter()
                    .map(|row| row[j].text.chars().count())
                    .chain([self.columns[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let pad =
            |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
        let mut out = pad("property", first);
        for (title, w) in self.columns.iter().zip(&widths) {
            out.push_str("  ");
            out.push_str(&pad(title, *w));
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.cells) {
            out.push_str(&pad(name, first));
            for (cell, w) in row.iter().zip(&widths) {
                out.push_str("  ");
                out.push_str(&pad(&cell.text, *w));
            }
            out.push('\n');
        }
        out
    }
}

fn ball(column: Column, rule: ToleranceRule) -> UncertaintyKind {
    match column {
        Column::SemiNorm => UncertaintyKind::SupNormBall { tolerance: rule },
        Column::Wasserstein => UncertaintyKind::WassersteinBall {
            order: 1.0,
            tolerance: rule,
        },
        _ => UncertaintyKind::KlBall { tolerance: rule },
    }
}

/// Two measures with random positive densities and zero penalties.
pub fn sample_measures(tree: &ScenarioTree, seed: u64) -> Vec<MeasureSpec> {
    let horizon = tree.horizon();
    let probs: Vec<f64> = (0..tree.width(horizon))
        .map(|i| tree.path_prob(crate::space::Node::new(horizon, i)))
        .collect();
    (0..2)
        .map(|k| {
            let mut rng = sampling::rng(sampling::trial_seed(seed, 1000 + k));
            let weights: Vec<f64> = probs
                .iter()
                .map(|_| sampling::uniform_value(&mut rng, 0.5, 1.5))
                .collect();
            let mass: f64 = weights.iter().zip(&probs).map(|(w, p)| w * p).sum();
            let density: BTreeMap<String, f64> = tree
                .ids_at(horizon)
                .iter()
                .zip(&weights)
                .map(|(id, w)| (id.clone(), w / mass))
                .collect();
            MeasureSpec {
                density,
                penalty: 0.0,
            }
        })
        .collect()
}

fn run(
    tree: &Arc<ScenarioTree>,
    kind: UncertaintyKind,
    row: SetProperty,
    expected: Status,
    spec: &CheckSpec,
) -> Result<CellCheck> {
    let set = DynamicUncertaintySet::uniform(tree.clone(), kind)?;
    let verdict = check_set_property(&set, row, spec)?;
    Ok(CellCheck {
        set: set.describe(),
        expected,
        found: verdict.status,
        witness: verdict.witness.as_ref().map(|w| w.summary()),
    })
}

fn cell(
    tree: &Arc<ScenarioTree>,
    row: SetProperty,
    column: Column,
    spec: &CheckSpec,
) -> Result<Cell> {
    let expected = expected_cell(row, column);
    let mut checks = Vec::new();
    if column == Column::Probability {
        let kind = UncertaintyKind::MeasureFamily {
            measures: sample_measures(tree, spec.seed),
        };
        checks.push(run(tree, kind, row, Status::Corroborated, spec)?);
    } else if expected == CHECK {
        for rule in PANEL {
            checks.push(run(
                tree,
                ball(column, rule),
                row,
                Status::Corroborated,
                spec,
            )?);
        }
    } else {
        let (good, bad) = rule_pair(row);
        checks.push(run(
            tree,
            ball(column, good),
            row,
            Status::Corroborated,
            spec,
        )?);
        checks.push(run(
            tree,
            ball(column, bad),
            row,
            Status::Counterexample,
            spec,
        )?);
    }
    let text = if checks.iter().all(|c| c.found == c.expected) {
        expected.to_string()
    } else if checks
        .iter()
        .any(|c| c.expected == Status::Corroborated && c.found == Status::Counterexample)
    {
        CROSS.to_string()
    } else {
        INCONCLUSIVE.to_string()
    };
    Ok(Cell {
        text,
        expected: expected.to_string(),
        checks,
    })
}

/// Runs every cell on `tree`.
pub fn table1(tree: Arc<ScenarioTree>, spec: &CheckSpec) -> Result<Table1> {
    let mut cells = Vec::with_capacity(ROWS.len());
    for row in ROWS {
        let mut line = Vec::with_capacity(Column::ALL.len());
        for column in Column::ALL {
            line.push(cell(&tree, row, column, spec)?);
        }
        cells.push(line);
    }
    Ok(Table1 {
        columns: Column::ALL.iter().map(|c| c.title().to_string()).collect(),
        rows: ROWS.iter().map(|r| r.name().to_string()).collect(),
        cells,
    })
}
