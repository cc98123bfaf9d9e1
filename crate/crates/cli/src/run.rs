//! Command runners. Each runner turns an experiment into a [`Report`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use dynrisk::oracle::{grid_worst_case, kl_simplex_sup};
use dynrisk::properties::audit::audit_configuration;
use dynrisk::properties::table1::table1;
use dynrisk::properties::{
    check_measure_property, check_measure_tc, check_set_property, check_set_tc, CheckSpec,
    MeasureProperty, SetProperty, Status, TcId, Verdict,
};
use dynrisk::riskmeasures::RiskKind;
use dynrisk::robust::{construct_recursive, nested_robust_evaluate, ConsolidatedSet};
use dynrisk::sampling::{random_process, rng};
use dynrisk::space::{AdaptedProcess, ScenarioTree};
use dynrisk::uncertainty::UncertaintyKind;
use serde_json::json;
use thiserror::Error;

use crate::doc::{Experiment, ParseError};
use crate::report::{num, Outcome, Report, Table};

/// Branching of the tree `table1` uses when no document is given.
pub const DEFAULT_TABLE1_BRANCHING: [usize; 3] = [2, 3, 2];

/// Resolution of the KL simplex oracle in `oracle-compare`.
pub const SIMPLEX_RESOLUTION: f64 = 1e-3;

/// Allowed gap between the KL dual solver and the simplex oracle.
pub const SIMPLEX_AGREEMENT: f64 = 1e-4;

/// Random processes added to the document's own in `construct`.
pub const CONSTRUCT_SAMPLES: usize = 200;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dynrisk::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Every error is a usage or input problem.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Command {
    Evaluate,
    Accept,
    Check,
    CheckTc,
    Construct,
    Audit,
    Table1,
    OracleCompare,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Evaluate,
        Command::Accept,
        Command::Check,
        Command::CheckTc,
        Command::Construct,
        Command::Audit,
        Command::Table1,
        Command::OracleCompare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Evaluate => "evaluate",
            Command::Accept => "accept",
            Command::Check => "check",
            Command::CheckTc => "check-tc",
            Command::Construct => "construct",
            Command::Audit => "audit",
            Command::Table1 => "table1",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown command `{s}`")))
    }
}

/// Command-line settings; each one that is present wins over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub time: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    /// Append grid-oracle comparisons to `evaluate`.
    pub oracle: bool,
}

impl Overrides {
    /// The document's check settings with the overrides applied.
    pub fn check_spec(&self, experiment: Option<&Experiment>) -> Result<CheckSpec, CliError> {
        let mut spec = experiment.map(|e| e.doc.check.clone()).unwrap_or_default();
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(trials) = self.trials {
            spec.trials = trials;
        }
        if let Some(tol) = self.tol {
            spec.tol = tol;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn times(&self, experiment: &Experiment) -> Result<Vec<usize>, CliError> {
        let horizon = experiment.tree.horizon();
        match self.time.or(experiment.doc.time) {
            Some(t) if t >= horizon => Err(CliError::Usage(format!(
                "--time {t} must lie below the horizon {horizon}"
            ))),
            Some(t) => Ok(vec![t]),
            None => Ok((0..horizon).collect()),
        }
    }
}

/// Runs `command`. Only `table1` accepts a missing experiment, in which case
/// it uses a uniform tree with [`DEFAULT_TABLE1_BRANCHING`].
pub fn run_command(
    command: Command,
    experiment: Option<&Experiment>,
    overrides: &Overrides,
) -> Result<Report, CliError> {
    let spec = overrides.check_spec(experiment)?;
    if command == Command::Table1 {
        return run_table1(experiment, &spec);
    }
    let experiment =
        experiment.ok_or_else(|| CliError::Usage(format!("`{command}` needs --input")))?;
    match command {
        Command::Evaluate => run_evaluate(experiment, overrides),
        Command::Accept => run_accept(experiment, overrides, &spec),
        Command::Check => run_check(experiment, &spec),
        Command::CheckTc => run_check_tc(experiment, &spec),
        Command::Construct => run_construct(experiment, &spec),
        Command::Audit => run_audit(experiment, &spec),
        Command::OracleCompare => run_oracle_compare(experiment, overrides, &spec),
        Command::Table1 => unreachable!("handled above"),
    }
}

/// Runs the document's `commands` in order and returns one report each.
pub fn run_document(
    experiment: &Experiment,
    overrides: &Overrides,
) -> Result<Vec<Report>, CliError> {
    if experiment.doc.commands.is_empty() {
        return Err(CliError::Usage(
            "the document lists no commands".to_string(),
        ));
    }
    experiment
        .doc
        .commands
        .iter()
        .map(|name| run_command(name.parse()?, Some(experiment), overrides))
        .collect()
}

fn require_processes(experiment: &Experiment) -> Result<&[(String, AdaptedProcess)], CliError> {
    if experiment.processes.is_empty() {
        return Err(CliError::Usage(
            "the document lists no processes".to_string(),
        ));
    }
    Ok(&experiment.processes)
}

fn report(
    command: Command,
    experiment: &Experiment,
    outcome: Outcome,
    tables: Vec<Table>,
    notes: Vec<String>,
    details: serde_json::Value,
) -> Report {
    Report {
        command: command.name().to_string(),
        target: experiment.measure.describe(),
        outcome,
        tables,
        notes,
        details,
    }
}

fn verdict_row(table: &mut Table, scope: &str, verdict: &Verdict) {
    table.push(vec![
        scope.to_string(),
        verdict.property.clone(),
        verdict.status.to_string(),
        verdict.trials.to_string(),
        verdict.witness().map(|w| w.summary()).unwrap_or_default(),
    ]);
}

fn verdict_table(title: &str) -> Table {
    Table::new(title, &["scope", "property", "status", "trials", "witness"])
}

fn any_counterexample<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> bool {
    verdicts.into_iter().any(Verdict::is_counterexample)
}

fn run_evaluate(experiment: &Experiment, overrides: &Overrides) -> Result<Report, CliError> {
    let tree = &experiment.tree;
    let mut table = Table::new(
        "robust values R_{t,T}(X)",
        &["process", "t", "atom", "value"],
    );
    let mut details: BTreeMap<String, BTreeMap<usize, BTreeMap<String, f64>>> = BTreeMap::new();
    for (name, x) in require_processes(experiment)? {
        for t in overrides.times(experiment)? {
            let value = experiment.measure.robust_value(t, x)?;
            for (id, v) in tree.ids_at(t).iter().zip(value.values()) {
                table.push(vec![name.clone(), t.to_string(), id.clone(), num(*v)]);
            }
            details
                .entry(name.clone())
                .or_default()
                .insert(t, value.to_ids(tree));
        }
    }
    let mut tables = vec![table];
    let mut outcome = Outcome::Pass;
    let mut details = json!({ "values": details });
    if overrides.oracle {
        let (oracle, ok, rows) = oracle_table(experiment, overrides)?;
        outcome = Outcome::from_failure(!ok);
        tables.push(oracle);
        details["oracle"] = rows;
    }
    Ok(report(
        Command::Evaluate,
        experiment,
        outcome,
        tables,
        Vec::new(),
        details,
    ))
}

fn run_accept(
    experiment: &Experiment,
    overrides: &Overrides,
    spec: &CheckSpec,
) -> Result<Report, CliError> {
    let tree = &experiment.tree;
    let mut table = Table::new(
        "robust acceptance R_{t,T}(X) <= 0",
        &["process", "t", "atom", "value", "accepted"],
    );
    let mut details: BTreeMap<String, BTreeMap<usize, BTreeMap<String, bool>>> = BTreeMap::new();
    for (name, x) in require_processes(experiment)? {
        for t in overrides.times(experiment)? {
            let value = experiment.measure.robust_value(t, x)?;
            let accepted = experiment.measure.robust_accepts(t, x, spec.tol)?;
            let mut row = BTreeMap::new();
            for ((id, v), a) in tree.ids_at(t).iter().zip(value.values()).zip(&accepted) {
                table.push(vec![
                    name.clone(),
                    t.to_string(),
                    id.clone(),
                    num(*v),
                    a.to_string(),
                ]);
                row.insert(id.clone(), *a);
            }
            details.entry(name.clone()).or_default().insert(t, row);
        }
    }
    Ok(report(
        Command::Accept,
        experiment,
        Outcome::Pass,
        vec![table],
        Vec::new(),
        json!({ "accepted": details }),
    ))
}

enum Requested {
    Set(SetProperty),
    Measure(MeasureProperty),
}

fn requested_properties(experiment: &Experiment) -> Result<Vec<Requested>, CliError> {
    if experiment.doc.properties.is_empty() {
        return Ok(SetProperty::ALL
            .iter()
            .map(|p| Requested::Set(*p))
            .chain(MeasureProperty::ALL.iter().map(|p| Requested::Measure(*p)))
            .collect());
    }
    experiment
        .doc
        .properties
        .iter()
        .map(|name| match name.split_once('.') {
            Some(("set", p)) => Ok(Requested::Set(p.parse()?)),
            Some(("measure", p)) => Ok(Requested::Measure(p.parse()?)),
            _ => Err(CliError::Usage(format!(
                "property `{name}` must read set.<name> or measure.<name>"
            ))),
        })
        .collect()
}

fn run_check(experiment: &Experiment, spec: &CheckSpec) -> Result<Report, CliError> {
    let measure = &experiment.measure;
    let mut table = verdict_table("property checks");
    let mut verdicts = Vec::new();
    for requested in requested_properties(experiment)? {
        let (scope, verdict) = match requested {
            Requested::Set(p) => ("set", check_set_property(measure.set().as_ref(), p, spec)?),
            Requested::Measure(p) => ("measure", check_measure_property(measure, p, spec)?),
        };
        verdict_row(&mut table, scope, &verdict);
        verdicts.push(json!({ "scope": scope, "verdict": verdict }));
    }
    let failed = verdicts
        .iter()
        .any(|v| v["verdict"]["status"] == json!(Status::Counterexample));
    Ok(report(
        Command::Check,
        experiment,
        Outcome::from_failure(failed),
        vec![table],
        Vec::new(),
        json!({ "settings": spec, "verdicts": verdicts }),
    ))
}

/// Set-level notions reported by `check-tc`.
const SET_LEVEL: [TcId; 6] = [
    TcId::Strong,
    TcId::Order,
    TcId::Rejection,
    TcId::WeakRecursive,
    TcId::Weak,
    TcId::Prudent,
];

fn run_check_tc(experiment: &Experiment, spec: &CheckSpec) -> Result<Report, CliError> {
    let measure = &experiment.measure;
    let consolidated = ConsolidatedSet::new(measure.clone());
    let mut table = verdict_table("time-consistency checks");
    let mut all = Vec::new();
    for id in TcId::MEASURE_LEVEL {
        all.push(("measure", check_measure_tc(measure, *id, spec)?));
    }
    for id in SET_LEVEL {
        all.push((
            "set",
            check_set_tc(measure, measure.set().as_ref(), id, spec)?,
        ));
    }
    for id in SET_LEVEL {
        all.push((
            "consolidated",
            check_set_tc(measure, &consolidated, id, spec)?,
        ));
    }
    for (scope, verdict) in &all {
        verdict_row(&mut table, scope, verdict);
    }
    let failed = any_counterexample(all.iter().map(|(_, v)| v));
    let details: Vec<_> = all
        .iter()
        .map(|(scope, v)| json!({ "scope": scope, "verdict": v }))
        .collect();
    Ok(report(
        Command::CheckTc,
        experiment,
        Outcome::from_failure(failed),
        vec![table],
        Vec::new(),
        json!({ "settings": spec, "verdicts": details }),
    ))
}

fn run_construct(experiment: &Experiment, spec: &CheckSpec) -> Result<Report, CliError> {
    let base = experiment.base.clone();
    let recursive = Arc::new(construct_recursive(
        base.clone(),
        experiment.family.clone(),
    )?);
    let tree = &experiment.tree;
    let mut r = rng(spec.seed);
    let (lo, hi) = spec.value_range;
    let samples: Vec<AdaptedProcess> = (0..CONSTRUCT_SAMPLES)
        .map(|_| random_process(&mut r, tree, lo, hi))
        .collect();
    let processes = experiment.processes.iter().map(|(_, x)| x).chain(&samples);
    let mut gap = 0.0_f64;
    let mut count = 0;
    for x in processes {
        count += 1;
        for t in 0..tree.horizon() {
            let direct = recursive.robust_value(t, x)?;
            let nested = nested_robust_evaluate(base.as_ref(), &experiment.family, x, t)?;
            gap = gap.max(direct.max_abs_diff(&nested));
        }
    }
    let agrees = gap <= spec.tol;
    let mut agreement = Table::new(
        "recursive construction vs nested evaluation",
        &["processes", "max gap", "tolerance", "agrees"],
    );
    agreement.push(vec![
        count.to_string(),
        format!("{gap:.3e}"),
        format!("{:.1e}", spec.tol),
        agrees.to_string(),
    ]);
    let verdicts = [
        check_measure_tc(&recursive, TcId::Strong, spec)?,
        check_measure_tc(&recursive, TcId::WeakRecursive, spec)?,
    ];
    let mut checks = verdict_table("time-consistency of the construction");
    let mut notes = Vec::new();
    for verdict in &verdicts {
        verdict_row(&mut checks, "measure", verdict);
        let mut note = format!(
            "{} t.c.: {} ({} trials)",
            verdict.property.replace('_', "-"),
            verdict.status,
            verdict.trials
        );
        if let Some(w) = verdict.witness() {
            note.push_str(&format!("; {}", w.summary()));
        }
        notes.push(note);
    }
    let failed = !agrees || any_counterexample(&verdicts);
    let mut out = report(
        Command::Construct,
        experiment,
        Outcome::from_failure(failed),
        vec![agreement, checks],
        notes,
        json!({ "settings": spec, "max_gap": gap, "processes": count, "verdicts": verdicts }),
    );
    out.target = recursive.describe();
    Ok(out)
}

fn run_audit(experiment: &Experiment, spec: &CheckSpec) -> Result<Report, CliError> {
    let audit = audit_configuration(&experiment.measure, spec)?;
    let mut conditions = Table::new("conditions", &["condition", "status", "witness"]);
    for (name, status) in &audit.table.conditions {
        let witness = audit
            .table
            .verdicts
            .get(name)
            .and_then(|v| v.witness())
            .map(|w| w.summary());
        conditions.push(vec![
            name.clone(),
            status.to_string(),
            witness.unwrap_or_default(),
        ]);
    }
    let mut violations = Table::new("violated implications", &["edge", "premises", "conclusion"]);
    for v in &audit.violations {
        violations.push(vec![
            v.edge.clone(),
            v.premises.join(" + "),
            v.conclusion.clone(),
        ]);
    }
    Ok(report(
        Command::Audit,
        experiment,
        Outcome::from_failure(!audit.violations.is_empty()),
        vec![conditions, violations],
        Vec::new(),
        json!({ "settings": spec, "audit": audit }),
    ))
}

fn run_table1(experiment: Option<&Experiment>, spec: &CheckSpec) -> Result<Report, CliError> {
    let tree = match experiment {
        Some(e) => e.tree.clone(),
        None => Arc::new(ScenarioTree::uniform(&DEFAULT_TABLE1_BRANCHING)?),
    };
    let result = table1(tree, spec)?;
    let mut header = vec!["property"];
    header.extend(result.columns.iter().map(String::as_str));
    let mut table = Table::new("uncertainty-set properties", &header);
    let mut notes = Vec::new();
    for (row, cells) in result.rows.iter().zip(&result.cells) {
        let mut line = vec![row.clone()];
        for (column, cell) in result.columns.iter().zip(cells) {
            line.push(cell.text.clone());
            if !cell.matches() {
                notes.push(format!(
                    "{row} / {column}: found `{}`, expected `{}`",
                    cell.text, cell.expected
                ));
            }
        }
        table.push(line);
    }
    Ok(Report {
        command: Command::Table1.name().to_string(),
        target: format!(
            "scenario tree with horizon {}",
            experiment.map_or(DEFAULT_TABLE1_BRANCHING.len(), |e| e.tree.horizon())
        ),
        outcome: Outcome::from_failure(!result.matches()),
        tables: vec![table],
        notes,
        details: json!({ "settings": spec, "table": result }),
    })
}

fn run_oracle_compare(
    experiment: &Experiment,
    overrides: &Overrides,
    spec: &CheckSpec,
) -> Result<Report, CliError> {
    let (table, ok, rows) = oracle_table(experiment, overrides)?;
    Ok(report(
        Command::OracleCompare,
        experiment,
        Outcome::from_failure(!ok),
        vec![table],
        Vec::new(),
        json!({ "tol": spec.tol, "grid": experiment.doc.grid, "rows": rows }),
    ))
}

/// Production supremum of the static base against the grid oracle on each
/// parent atom, plus the KL simplex oracle for expectation probes. A row
/// passes when `production − grid ∈ [−tol, bound]`.
fn oracle_table(
    experiment: &Experiment,
    overrides: &Overrides,
) -> Result<(Table, bool, serde_json::Value), CliError> {
    let kinds = experiment.kinds.as_ref().ok_or_else(|| {
        CliError::Usage("the grid oracle needs a uniform or per-time static set".to_string())
    })?;
    let tol = overrides.check_spec(Some(experiment))?.tol;
    let tree = &experiment.tree;
    let mut table = Table::new(
        "solver vs grid oracle",
        &[
            "process",
            "t",
            "atom",
            "production",
            "grid",
            "bound",
            "gap",
            "simplex",
            "ok",
        ],
    );
    let mut rows = Vec::new();
    let mut all_ok = true;
    for (name, x) in require_processes(experiment)? {
        for t in overrides.times(experiment)? {
            let kind = &kinds[t];
            let rho = experiment.family.at(t);
            let production = experiment.base.sup(t + 1, rho, x)?;
            let grid = grid_worst_case(kind, rho, tree, x, t, &experiment.doc.grid)?;
            for (i, (p, g)) in production.iter().zip(&grid).enumerate() {
                let p = p.ok_or_else(|| {
                    CliError::Usage(format!("no supremum for {} at time {}", rho.label(), t + 1))
                })?;
                let gap = p - g.value;
                let simplex = simplex_value(kind, rho, tree, x, t, i)?;
                let ok = gap >= -tol
                    && gap <= g.bound + tol
                    && simplex.is_none_or(|s| (p - s).abs() <= SIMPLEX_AGREEMENT);
                all_ok &= ok;
                let atom = tree.ids_at(t)[i].clone();
                table.push(vec![
                    name.clone(),
                    t.to_string(),
                    atom.clone(),
                    num(p),
                    num(g.value),
                    format!("{:.3e}", g.bound),
                    format!("{gap:.3e}"),
                    simplex.map(num).unwrap_or_else(|| "-".to_string()),
                    ok.to_string(),
                ]);
                rows.push(json!({
                    "process": name, "t": t, "atom": atom, "production": p,
                    "grid": g, "simplex": simplex, "ok": ok,
                }));
            }
        }
    }
    Ok((table, all_ok, serde_json::Value::Array(rows)))
}

fn simplex_value(
    kind: &UncertaintyKind,
    rho: &RiskKind,
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
    i: usize,
) -> Result<Option<f64>, CliError> {
    let UncertaintyKind::KlBall { tolerance } = kind else {
        return Ok(None);
    };
    if *rho != RiskKind::Expectation {
        return Ok(None);
    }
    let radius = tolerance.radii(tree, x.at(t + 1))[i];
    let xs = tree.child_values(x.at(t + 1), i);
    Ok(Some(kl_simplex_sup(
        &xs,
        &tree.child_probs(t, i),
        radius,
        SIMPLEX_RESOLUTION,
    )?))
}
