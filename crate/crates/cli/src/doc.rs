//! Experiment documents: the JSON schema, parsing with diagnostics, and the
//! validated in-memory model built from a document.
//!
//! A document names a scenario tree, zero or more processes on it, a risk
//! family, an uncertainty set and the sampling settings for checks. Parsing
//! reports JSON syntax and shape errors with their line and column, and
//! semantic errors with the dotted path of the offending field.

use std::collections::BTreeMap;
use std::sync::Arc;

use dynrisk::oracle::GridSpec;
use dynrisk::properties::CheckSpec;
use dynrisk::riskmeasures::{RiskFamily, RiskKind};
use dynrisk::robust::{construct_recursive, RobustRiskMeasure};
use dynrisk::space::{AdaptedProcess, AdaptedVector, AtomSpec, ScenarioTree};
use dynrisk::uncertainty::{DynamicSet, DynamicUncertaintySet, ExpectationBand, UncertaintyKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The only schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema: unsupported version {found}, expected {SCHEMA_VERSION}")]
    Schema { found: u32 },

    #[error("{field}: {source}")]
    Invalid {
        field: String,
        #[source]
        source: dynrisk::Error,
    },

    #[error("{field}: {message}")]
    Reference { field: String, message: String },
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(cut) => message[..cut].to_string(),
            None => message,
        };
        ParseError::Json {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

fn invalid(field: impl Into<String>) -> impl FnOnce(dynrisk::Error) -> ParseError {
    let field = field.into();
    move |source| ParseError::Invalid { field, source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDoc {
    pub schema: u32,
    pub tree: TreeDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub processes: Vec<ProcessDoc>,
    pub risk: RiskDoc,
    pub set: SetDoc,
    #[serde(default)]
    pub construction: Construction,
    #[serde(default)]
    pub check: CheckSpec,
    #[serde(default)]
    pub grid: GridSpec,
    /// Time at which `evaluate` and `accept` report; all times when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<usize>,
    /// Properties for `check`, written `set.<name>` or `measure.<name>`;
    /// every property of both kinds when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub properties: Vec<String>,
    /// Commands executed in order by `run`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeDoc {
    /// Every atom at time `t` has `branching[t]` equally likely children.
    Branching { branching: Vec<usize> },
    /// Every atom at time `t` has children with probabilities `levels[t]`.
    Levels { levels: Vec<Vec<f64>> },
    /// Explicit atom list.
    Atoms {
        horizon: usize,
        atoms: Vec<AtomSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDoc {
    pub name: String,
    pub values: ProcessValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessValues {
    /// One list per time, in the tree's atom order.
    Levels(Vec<Vec<f64>>),
    /// One value per atom id, covering every atom.
    ById(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RiskDoc {
    Uniform(RiskKind),
    PerTime(Vec<RiskKind>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDoc {
    /// The same static set at every time.
    Uniform { base: UncertaintyKind },
    /// `bases[t − 1]` is the static set at time `t`.
    PerTime { bases: Vec<UncertaintyKind> },
    /// Band `{Y ≤ E[Σ_{i≥t} X_i | F_t] + ε_{t−1}}` with `offsets[s]` the
    /// time-`s` offsets in atom order.
    ExpectationBand { offsets: Vec<Vec<f64>> },
}

/// How the robust measure is built from the set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `R^{u,ρ}` of the set itself.
    #[default]
    Plain,
    /// The backward-recursive construction over a static base.
    Recursive,
    /// `R − R(0)`.
    Normalised,
}

/// A parsed and validated document.
#[derive(Clone)]
pub struct Experiment {
    pub doc: ExperimentDoc,
    pub tree: Arc<ScenarioTree>,
    pub processes: Vec<(String, AdaptedProcess)>,
    pub family: RiskFamily,
    /// The set as written in the document, before any construction.
    pub base: Arc<dyn DynamicSet>,
    /// Static kinds per time when the set is a static one.
    pub kinds: Option<Vec<UncertaintyKind>>,
    pub measure: Arc<RobustRiskMeasure>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment")
            .field("doc", &self.doc)
            .field("measure", &self.measure.describe())
            .finish()
    }
}

/// Parses and validates a JSON experiment document.
pub fn parse_experiment(text: &str) -> Result<Experiment, ParseError> {
    let doc: ExperimentDoc = serde_json::from_str(text)?;
    build_experiment(doc)
}

/// Pretty JSON for `experiment`'s document.
pub fn serialize_experiment(experiment: &Experiment) -> String {
    serde_json::to_string_pretty(&experiment.doc).expect("documents always serialize")
}

/// Validates a document and builds the model it describes.
pub fn build_experiment(doc: ExperimentDoc) -> Result<Experiment, ParseError> {
    if doc.schema != SCHEMA_VERSION {
        return Err(ParseError::Schema { found: doc.schema });
    }
    let tree = Arc::new(build_tree(&doc.tree)?);
    let horizon = tree.horizon();
    let processes = doc
        .processes
        .iter()
        .enumerate()
        .map(|(k, p)| {
            Ok((
                p.name.clone(),
                build_process(&tree, &p.values, &format!("processes[{k}]"))?,
            ))
        })
        .collect::<Result<Vec<_>, ParseError>>()?;
    let kinds = match &doc.risk {
        RiskDoc::Uniform(kind) => vec![*kind; horizon],
        RiskDoc::PerTime(kinds) => kinds.clone(),
    };
    let family = RiskFamily::new(kinds).map_err(invalid("risk"))?;
    family.check_horizon(horizon).map_err(invalid("risk"))?;
    let (base, kinds): (Arc<dyn DynamicSet>, _) = match &doc.set {
        SetDoc::Uniform { base } => {
            let set = DynamicUncertaintySet::uniform(tree.clone(), base.clone())
                .map_err(invalid("set.base"))?;
            let kinds = set.kinds().to_vec();
            (Arc::new(set), Some(kinds))
        }
        SetDoc::PerTime { bases } => {
            let set = DynamicUncertaintySet::new(tree.clone(), bases.clone())
                .map_err(invalid("set.bases"))?;
            (Arc::new(set), Some(bases.clone()))
        }
        SetDoc::ExpectationBand { offsets } => {
            let offsets = offsets
                .iter()
                .enumerate()
                .map(|(s, values)| {
                    AdaptedVector::new(&tree, s, values.clone())
                        .map_err(invalid(format!("set.offsets[{s}]")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let band =
                ExpectationBand::new(tree.clone(), offsets).map_err(invalid("set.offsets"))?;
            (Arc::new(band), None)
        }
    };
    let measure = match doc.construction {
        Construction::Plain => RobustRiskMeasure::new(family.clone(), base.clone()),
        Construction::Recursive => construct_recursive(base.clone(), family.clone()),
        Construction::Normalised => {
            RobustRiskMeasure::new(family.clone(), base.clone()).and_then(|m| m.normalize())
        }
    }
    .map_err(invalid("construction"))?;
    doc.check.validate().map_err(invalid("check"))?;
    if let Some(t) = doc.time {
        if t >= horizon {
            return Err(ParseError::Reference {
                field: "time".to_string(),
                message: format!("time {t} must lie below the horizon {horizon}"),
            });
        }
    }
    Ok(Experiment {
        doc,
        tree,
        processes,
        family,
        base,
        kinds,
        measure: Arc::new(measure),
    })
}

fn build_tree(doc: &TreeDoc) -> Result<ScenarioTree, ParseError> {
    match doc {
        TreeDoc::Branching { branching } => {
            if let Some(t) = branching.iter().position(|&b| b == 0) {
                return Err(ParseError::Reference {
                    field: format!("tree.branching[{t}]"),
                    message: "every atom needs at least one child".to_string(),
                });
            }
            ScenarioTree::uniform(branching)
        }
        TreeDoc::Levels { levels } => ScenarioTree::from_levels(levels),
        TreeDoc::Atoms { horizon, atoms } => ScenarioTree::new(*horizon, atoms.clone()),
    }
    .map_err(invalid("tree"))
}

fn build_process(
    tree: &ScenarioTree,
    values: &ProcessValues,
    field: &str,
) -> Result<AdaptedProcess, ParseError> {
    match values {
        ProcessValues::Levels(levels) => AdaptedProcess::from_values(tree, levels.clone())
            .map_err(invalid(format!("{field}.values"))),
        ProcessValues::ById(map) => {
            let mut slices = vec![BTreeMap::new(); tree.horizon() + 1];
            for (id, v) in map {
                let node = tree.node(id).ok_or_else(|| ParseError::Reference {
                    field: format!("{field}.values.{id}"),
                    message: format!("unknown atom `{id}`"),
                })?;
                slices[node.time].insert(id.clone(), *v);
            }
            let parts = slices
                .iter()
                .enumerate()
                .map(|(t, slice)| {
                    AdaptedVector::from_ids(tree, t, slice)
                        .map_err(invalid(format!("{field}.values")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            AdaptedProcess::new(tree, parts).map_err(invalid(format!("{field}.values")))
        }
    }
}
