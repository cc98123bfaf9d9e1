//! Randomized falsification of axioms and time-consistency notions.
//!
//! A check draws random processes (and scalings, shifts or events as the
//! property requires), evaluates both sides of the defining identity or
//! inclusion, and stops at the first violation that exceeds the tolerance.
//! A verdict is therefore either a replayable counterexample or
//! "corroborated on the sample", never a proof. Set identities are decided
//! by comparing suprema of a probe panel and by sampled membership of
//! interior and boundary members in both directions.
//!
//! Trial `k` draws its randomness from `trial_seed(seed, k)`, so any trial
//! can be replayed on its own by running a `CheckSpec` with `first_trial = k` and
//! `trials = 1`.

pub mod adversarial;
pub mod audit;
pub mod table1;
mod tc;
mod view;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::RobustRiskMeasure;
use crate::sampling::{self, CrateRng};
use crate::space::{mix, AdaptedProcess, AdaptedVector, EventSet, ScenarioTree};
use crate::uncertainty::DynamicSet;

pub use tc::{check_carry_invariance, check_measure_tc, check_set_tc, TcId};
use view::{dominance, equality, inclusion, threshold, Finding, Part, SetView, PROBES};

/// Deliberate checker defects used to test the implication auditor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// The weak-recursiveness checker omits the `− R_{s,T}(0)` term and so
    /// tests strong time-consistency instead.
    ForgetZeroOffset,
}

/// Sampling configuration shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSpec {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    /// Box for sampled process values.
    pub value_range: (f64, f64),
    /// Upper end of sampled scalings `λ`.
    pub lambda_max: f64,
    /// Probability that an atom belongs to a sampled event.
    pub event_density: f64,
    /// Membership probes per set comparison, spread over the trials with at
    /// least two per trial.
    pub members: usize,
    /// Index of the first trial; with `trials = 1` this replays one trial.
    pub first_trial: usize,
    #[serde(skip)]
    pub mutation: Mutation,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            trials: 500,
            seed: 0,
            tol: crate::space::DEFAULT_TOLERANCE,
            value_range: (-1.0, 1.0),
            lambda_max: 2.0,
            event_density: 0.5,
            members: 500,
            first_trial: 0,
            mutation: Mutation::None,
        }
    }
}

impl CheckSpec {
    pub fn with_trials(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        let (lo, hi) = self.value_range;
        let finite = [lo, hi, self.lambda_max, self.event_density, self.tol]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || lo > hi
            || self.tol < 0.0
            || self.lambda_max < 0.0
            || !(0.0..=1.0).contains(&self.event_density)
        {
            return Err(Error::InvalidCheckSpec);
        }
        Ok(())
    }

    pub(crate) fn members_per_trial(&self) -> usize {
        self.members.div_ceil(self.trials).max(2)
    }

    pub(crate) fn process(&self, rng: &mut CrateRng, tree: &ScenarioTree) -> AdaptedProcess {
        sampling::random_process(rng, tree, self.value_range.0, self.value_range.1)
    }

    /// Adds `U[0, 1]` to a random half of the atoms of every component from
    /// time `from` onwards.
    pub(crate) fn raise(
        &self,
        rng: &mut CrateRng,
        tree: &ScenarioTree,
        x: &AdaptedProcess,
        from: usize,
    ) -> AdaptedProcess {
        let parts = x
            .parts()
            .iter()
            .map(|v| {
                if v.time() < from {
                    v.clone()
                } else {
                    v.map(|a| {
                        if rng.gen_bool(0.5) {
                            a + sampling::uniform_value(rng, 0.0, 1.0)
                        } else {
                            a
                        }
                    })
                }
            })
            .collect();
        AdaptedProcess::new(tree, parts).expect("raised process keeps its shape")
    }

    /// Per-atom scaling in `[0, max]`, exactly zero on about a fifth of the
    /// atoms.
    pub(crate) fn scaling(
        &self,
        rng: &mut CrateRng,
        tree: &ScenarioTree,
        t: usize,
        max: f64,
    ) -> AdaptedVector {
        AdaptedVector::constant(tree, t, 0.0).map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                sampling::uniform_value(rng, 0.0, max)
            }
        })
    }

    pub(crate) fn event(&self, rng: &mut CrateRng, tree: &ScenarioTree, t: usize) -> EventSet {
        let members = (0..tree.width(t))
            .map(|_| rng.gen_bool(self.event_density))
            .collect();
        EventSet::new(tree, t, members).expect("event on an existing slice")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Corroborated,
    Counterexample,
    /// No trial could test the property (for example, an empty range of
    /// intermediate times).
    Vacuous,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Corroborated => "corroborated",
            Status::Counterexample => "counterexample",
            Status::Vacuous => "vacuous",
        })
    }
}

/// Data that reproduces a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub time: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub processes: Vec<AdaptedProcess>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<AdaptedVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<AdaptedVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<AdaptedVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<EventSet>,
    pub gap: f64,
    pub detail: String,
}

impl Witness {
    pub(crate) fn new(
        time: usize,
        processes: Vec<AdaptedProcess>,
        gap: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            trial: 0,
            time,
            horizon: None,
            processes,
            candidate: None,
            lambda: None,
            shift: None,
            event: None,
            gap,
            detail: detail.into(),
        }
    }

    fn from_finding(time: usize, processes: Vec<AdaptedProcess>, finding: Finding) -> Self {
        let mut w = Self::new(time, processes, finding.gap, finding.detail);
        w.candidate = finding.candidate;
        w
    }

    pub(crate) fn at_horizon(mut self, s: usize) -> Self {
        self.horizon = Some(s);
        self
    }

    pub fn summary(&self) -> String {
        let s = self
            .horizon
            .map(|s| format!(", s = {s}"))
            .unwrap_or_default();
        format!(
            "trial {} at t = {}{s}: {} (gap {:.3e})",
            self.trial, self.time, self.detail, self.gap
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: String,
    pub target: String,
    pub status: Status,
    /// Trials that tested the property.
    pub trials: usize,
    /// Trials whose premise could not be established.
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }

    pub fn is_corroborated(&self) -> bool {
        self.status == Status::Corroborated
    }

    pub fn is_counterexample(&self) -> bool {
        self.status == Status::Counterexample
    }

    pub fn line(&self) -> String {
        let mut line = format!("{}: {} ({} trials", self.property, self.status, self.trials);
        if self.skipped > 0 {
            line.push_str(&format!(", {} skipped", self.skipped));
        }
        line.push(')');
        if let Some(w) = &self.witness {
            line.push_str(&format!("; {}", w.summary()));
        }
        line
    }
}

// Failures are rare, so the unboxed witness costs nothing in practice.
#[allow(clippy::large_enum_variant)]
pub(crate) enum Outcome {
    Pass,
    Skip,
    Fail(Witness),
}

impl Outcome {
    fn from_finding(time: usize, processes: Vec<AdaptedProcess>, finding: Option<Finding>) -> Self {
        match finding {
            None => Outcome::Pass,
            Some(f) => Outcome::Fail(Witness::from_finding(time, processes, f)),
        }
    }
}

/// Runs trials in index order and stops at the first failure.
pub(crate) fn run_trials(
    property: impl Into<String>,
    target: impl Into<String>,
    spec: &CheckSpec,
    mut trial: impl FnMut(&mut CrateRng) -> Result<Outcome>,
) -> Result<Verdict> {
    spec.validate()?;
    let mut verdict = Verdict {
        property: property.into(),
        target: target.into(),
        status: Status::Vacuous,
        trials: 0,
        skipped: 0,
        witness: None,
    };
    for k in spec.first_trial..spec.first_trial + spec.trials {
        let mut rng = sampling::rng(sampling::trial_seed(spec.seed, k as u64));
        match trial(&mut rng)? {
            Outcome::Pass => verdict.trials += 1,
            Outcome::Skip => verdict.skipped += 1,
            Outcome::Fail(mut w) => {
                verdict.trials += 1;
                w.trial = k;
                verdict.status = Status::Counterexample;
                verdict.witness = Some(w);
                return Ok(verdict);
            }
        }
    }
    if verdict.trials > 0 {
        verdict.status = Status::Corroborated;
    }
    Ok(verdict)
}

/// Per-atom comparison of two vectors: the first atom where `ok` fails.
pub(crate) fn first_violation(
    a: &AdaptedVector,
    b: &AdaptedVector,
    ok: impl Fn(f64, f64) -> bool,
) -> Option<(usize, f64, f64)> {
    a.values()
        .iter()
        .zip(b.values())
        .enumerate()
        .find(|(_, (x, y))| !ok(**x, **y))
        .map(|(i, (x, y))| (i, *x, *y))
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ::serde::Serialize, ::serde::Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(&self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.name())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> ::std::result::Result<Self, Self::Err> {
                let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
                $name::ALL
                    .iter()
                    .copied()
                    .find(|p| p.name() == key)
                    .ok_or_else(|| $crate::error::Error::UnknownProperty { name: s.to_string() })
            }
        }
    };
}
pub(crate) use named_enum;

named_enum! {
    /// Axioms of a time-`t` uncertainty set.
    SetProperty {
        Proper => "proper",
        Normalisation => "normalisation",
        OrderPreservation => "order_preservation",
        Monotonicity => "monotonicity",
        TranslationInvariance => "translation_invariance",
        Static => "static",
        Locality => "locality",
        PositiveHomogeneity => "positive_homogeneity",
        StarShapedness => "star_shapedness",
    }
}

named_enum! {
    /// Axioms of a conditional robust risk measure.
    MeasureProperty {
        Normalisation => "normalisation",
        Monotonicity => "monotonicity",
        TranslationInvariance => "translation_invariance",
        Locality => "locality",
        PositiveHomogeneity => "positive_homogeneity",
        Convexity => "convexity",
        SubAdditivity => "sub_additivity",
        Concavity => "concavity",
        SuperAdditivity => "super_additivity",
        Additivity => "additivity",
        StarShapedness => "star_shapedness",
    }
}

fn random_set_time(rng: &mut CrateRng, tree: &ScenarioTree) -> usize {
    rng.gen_range(1..=tree.horizon())
}

/// Checks one axiom of `set` at randomly drawn times `t ∈ 1..=T`.
pub fn check_set_property(
    set: &dyn DynamicSet,
    property: SetProperty,
    spec: &CheckSpec,
) -> Result<Verdict> {
    let tree = set.tree().clone();
    let members = spec.members_per_trial();
    let tol = spec.tol;
    run_trials(property.name(), set.describe(), spec, |rng| {
        let t = random_set_time(rng, &tree);
        let x = spec.process(rng, &tree);
        let outcome = match property {
            SetProperty::Proper => {
                let sup = set.sup(t, &PROBES[0], &x)?;
                if let Some(i) = sup.iter().position(|v| !v.is_some_and(f64::is_finite)) {
                    Outcome::Fail(Witness::new(
                        t,
                        vec![x],
                        f64::INFINITY,
                        format!("supremum of the expectation is not finite at parent {i}"),
                    ))
                } else if let Some(y) = {
                    let boundary = rng.gen_bool(0.5);
                    set.sample_member(t, &x, rng, boundary)?
                } {
                    let inside = set.contains(t, &y, &x, tol)?;
                    match inside.iter().position(|b| !b) {
                        None => Outcome::Pass,
                        Some(i) => {
                            let gap = threshold(tol, |band| Ok(set.contains(t, &y, &x, band)?[i]))?;
                            let mut w = Witness::new(
                                t,
                                vec![x],
                                gap,
                                format!("sampled member rejected at parent {i}"),
                            );
                            w.candidate = Some(y);
                            Outcome::Fail(w)
                        }
                    }
                } else {
                    Outcome::Pass
                }
            }
            SetProperty::Normalisation => {
                let zero = AdaptedProcess::zeros(&tree);
                let view = SetView::plain(set, t, zero.clone());
                let mut finding = None;
                for probe in &PROBES {
                    for (i, v) in view.sup(probe)?.into_iter().enumerate() {
                        if let Some(v) = v {
                            if v.abs() > tol && finding.is_none() {
                                finding = Some(Finding {
                                    gap: v.abs(),
                                    detail: format!(
                                        "sup of {} over u_t(0) is {v} at parent {i}",
                                        probe.label()
                                    ),
                                    candidate: None,
                                });
                            }
                        }
                    }
                }
                if finding.is_none() {
                    for k in 0..members {
                        if let Some(y) = view.sample(rng, k % 5 == 0)? {
                            if y.max_abs() > tol {
                                finding = Some(Finding {
                                    gap: y.max_abs(),
                                    detail: "non-zero member of u_t(0)".to_string(),
                                    candidate: Some(y),
                                });
                                break;
                            }
                        }
                    }
                }
                if finding.is_none() {
                    let origin = AdaptedVector::zeros(&tree, t);
                    if let Some(i) = view.contains(&origin, tol)?.iter().position(|b| !b) {
                        let gap = threshold(tol, |band| Ok(view.contains(&origin, band)?[i]))?;
                        finding = Some(Finding {
                            gap,
                            detail: format!("0 is not a member of u_t(0) at parent {i}"),
                            candidate: Some(origin),
                        });
                    }
                }
                Outcome::from_finding(t, vec![zero], finding)
            }
            SetProperty::OrderPreservation | SetProperty::Monotonicity => {
                let y = spec.raise(rng, &tree, &x, t);
                let left = SetView::plain(set, t, x.clone());
                let right = SetView::plain(set, t, y.clone());
                let finding = if property == SetProperty::OrderPreservation {
                    dominance(&left, &right, members, tol, rng)?
                } else {
                    inclusion(&left, &right, members, tol, rng)?
                };
                Outcome::from_finding(t, vec![x, y], finding)
            }
            SetProperty::TranslationInvariance => {
                let s = rng.gen_range(0..t);
                let z =
                    sampling::random_vector(rng, &tree, s, spec.value_range.0, spec.value_range.1);
                let shift = tree.lift(&z, t - 1);
                let moved = x.with_added(&tree.lift(&z, t));
                let left = SetView::plain(set, t, moved.clone());
                let parts = shift
                    .values()
                    .iter()
                    .map(|&c| Part {
                        source: 0,
                        scale: 1.0,
                        shift: c,
                    })
                    .collect();
                let right = SetView::new(set, t, vec![x.clone()], parts);
                let finding = equality(&left, &right, members, tol, rng)?;
                match Outcome::from_finding(t, vec![x, moved], finding) {
                    Outcome::Fail(mut w) => {
                        w.shift = Some(z);
                        w.horizon = Some(s);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            SetProperty::Static => {
                let current = x.slice(0, t)?;
                let left = SetView::plain(set, t, x.clone());
                let right = SetView::plain(set, t, current.clone());
                Outcome::from_finding(
                    t,
                    vec![x, current],
                    equality(&left, &right, members, tol, rng)?,
                )
            }
            SetProperty::Locality => {
                let y = spec.process(rng, &tree);
                let event = spec.event(rng, &tree, t - 1);
                let mixed = mix(&tree, &event, &x, &y)?;
                let left = SetView::plain(set, t, mixed);
                let parts = event
                    .members()
                    .iter()
                    .map(|&inside| Part::identity(if inside { 0 } else { 1 }))
                    .collect();
                let right = SetView::new(set, t, vec![x.clone(), y.clone()], parts);
                match Outcome::from_finding(
                    t,
                    vec![x, y],
                    equality(&left, &right, members, tol, rng)?,
                ) {
                    Outcome::Fail(mut w) => {
                        w.event = Some(event);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            SetProperty::PositiveHomogeneity | SetProperty::StarShapedness => {
                let max = if property == SetProperty::PositiveHomogeneity {
                    spec.lambda_max
                } else {
                    1.0
                };
                let lambda = spec.scaling(rng, &tree, t - 1, max);
                let scaled = x.scaled_by(&tree, &lambda);
                let left = SetView::plain(set, t, scaled);
                let parts = lambda
                    .values()
                    .iter()
                    .map(|&l| {
                        if l > 0.0 {
                            Part {
                                source: 0,
                                scale: l,
                                shift: 0.0,
                            }
                        } else {
                            Part::identity(1)
                        }
                    })
                    .collect();
                let right =
                    SetView::new(set, t, vec![x.clone(), AdaptedProcess::zeros(&tree)], parts);
                let finding = if property == SetProperty::PositiveHomogeneity {
                    equality(&left, &right, members, tol, rng)?
                } else {
                    inclusion(&left, &right, members, tol, rng)?
                };
                match Outcome::from_finding(t, vec![x], finding) {
                    Outcome::Fail(mut w) => {
                        w.lambda = Some(lambda);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
        };
        Ok(outcome)
    })
}

fn compare(
    t: usize,
    processes: Vec<AdaptedProcess>,
    lhs: &AdaptedVector,
    rhs: &AdaptedVector,
    relation: &str,
    tol: f64,
) -> Outcome {
    let ok = |a: f64, b: f64| match relation {
        "<=" => a <= b + tol,
        ">=" => a + tol >= b,
        _ => (a - b).abs() <= tol,
    };
    match first_violation(lhs, rhs, ok) {
        None => Outcome::Pass,
        Some((i, a, b)) => Outcome::Fail(Witness::new(
            t,
            processes,
            (a - b).abs(),
            format!("left side {a} {relation} right side {b} fails at atom {i}"),
        )),
    }
}

/// Checks one axiom of the conditional robust measures `R_{t,T}` at
/// randomly drawn times `t ∈ 0..T`.
pub fn check_measure_property(
    measure: &RobustRiskMeasure,
    property: MeasureProperty,
    spec: &CheckSpec,
) -> Result<Verdict> {
    let tree = measure.tree().clone();
    let tol = spec.tol;
    run_trials(property.name(), measure.describe(), spec, |rng| {
        let t = rng.gen_range(0..tree.horizon());
        let x = spec.process(rng, &tree);
        let r = |p: &AdaptedProcess| measure.robust_value(t, p);
        let outcome = match property {
            MeasureProperty::Normalisation => {
                let zero = AdaptedProcess::zeros(&tree);
                compare(
                    t,
                    vec![zero.clone()],
                    &r(&zero)?,
                    &AdaptedVector::zeros(&tree, t),
                    "=",
                    tol,
                )
            }
            MeasureProperty::Monotonicity => {
                let y = spec.raise(rng, &tree, &x, t + 1);
                compare(t, vec![x.clone(), y.clone()], &r(&x)?, &r(&y)?, "<=", tol)
            }
            MeasureProperty::TranslationInvariance => {
                let c =
                    sampling::random_vector(rng, &tree, t, spec.value_range.0, spec.value_range.1);
                let moved = x.with_added(&tree.lift(&c, t + 1));
                let out = compare(
                    t,
                    vec![x.clone(), moved.clone()],
                    &r(&moved)?,
                    &(&r(&x)? + &c),
                    "=",
                    tol,
                );
                with_shift(out, c)
            }
            MeasureProperty::Locality => {
                let y = spec.process(rng, &tree);
                let event = spec.event(rng, &tree, t);
                let mixed = mix(&tree, &event, &x, &y)?;
                let rhs = crate::space::mix_vectors(&tree, &event, &r(&x)?, &r(&y)?);
                match compare(t, vec![x, y], &r(&mixed)?, &rhs, "=", tol) {
                    Outcome::Fail(mut w) => {
                        w.event = Some(event);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            MeasureProperty::PositiveHomogeneity | MeasureProperty::StarShapedness => {
                let max = if property == MeasureProperty::PositiveHomogeneity {
                    spec.lambda_max
                } else {
                    1.0
                };
                let lambda = spec.scaling(rng, &tree, t, max);
                let lhs = r(&x.scaled_by(&tree, &lambda))?;
                let base = r(&x)?;
                let zero = measure.zero_value(t)?;
                let rhs = AdaptedVector::from_parts(
                    t,
                    (0..tree.width(t))
                        .map(|i| {
                            let l = lambda.value(i);
                            if l == 0.0 {
                                zero.value(i)
                            } else {
                                l * base.value(i)
                            }
                        })
                        .collect(),
                );
                let relation = if property == MeasureProperty::PositiveHomogeneity {
                    "="
                } else {
                    "<="
                };
                match compare(t, vec![x], &lhs, &rhs, relation, tol) {
                    Outcome::Fail(mut w) => {
                        w.lambda = Some(lambda);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            MeasureProperty::Convexity | MeasureProperty::Concavity => {
                let y = spec.process(rng, &tree);
                let lambda =
                    AdaptedVector::zeros(&tree, t).map(|_| sampling::uniform_value(rng, 0.0, 1.0));
                let complement = lambda.map(|l| 1.0 - l);
                let combo = &x.scaled_by(&tree, &lambda) + &y.scaled_by(&tree, &complement);
                let rx = r(&x)?;
                let ry = r(&y)?;
                let rhs = AdaptedVector::from_parts(
                    t,
                    (0..tree.width(t))
                        .map(|i| lambda.value(i) * rx.value(i) + complement.value(i) * ry.value(i))
                        .collect(),
                );
                let relation = if property == MeasureProperty::Convexity {
                    "<="
                } else {
                    ">="
                };
                match compare(t, vec![x, y], &r(&combo)?, &rhs, relation, tol) {
                    Outcome::Fail(mut w) => {
                        w.lambda = Some(lambda);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            MeasureProperty::SubAdditivity
            | MeasureProperty::SuperAdditivity
            | MeasureProperty::Additivity => {
                let y = spec.process(rng, &tree);
                let relation = match property {
                    MeasureProperty::SubAdditivity => "<=",
                    MeasureProperty::SuperAdditivity => ">=",
                    _ => "=",
                };
                compare(
                    t,
                    vec![x.clone(), y.clone()],
                    &r(&(&x + &y))?,
                    &(&r(&x)? + &r(&y)?),
                    relation,
                    tol,
                )
            }
        };
        Ok(outcome)
    })
}

fn with_shift(outcome: Outcome, shift: AdaptedVector) -> Outcome {
    match outcome {
        Outcome::Fail(mut w) => {
            w.shift = Some(shift);
            Outcome::Fail(w)
        }
        other => other,
    }
}
