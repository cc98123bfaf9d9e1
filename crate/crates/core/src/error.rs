//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised while building or evaluating scenario trees, risk measures
/// and uncertainty sets.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("horizon must be at least 1")]
    EmptyHorizon,

    #[error("expected exactly one root atom at time 0, found {count}")]
    RootCount { count: usize },

    #[error("duplicate atom id `{id}`")]
    DuplicateAtom { id: String },

    #[error("atom `{id}` has time {time}, outside 0..={horizon}")]
    AtomTime {
        id: String,
        time: usize,
        horizon: usize,
    },

    #[error("atom `{id}` at time 0 must not have a parent")]
    RootWithParent { id: String },

    #[error("atom `{id}` at time {time} has no parent")]
    MissingParent { id: String, time: usize },

    #[error("atom `{id}` references unknown parent `{parent}`")]
    UnknownParent { id: String, parent: String },

    #[error("atom `{id}` at time {time} has parent `{parent}` at time {parent_time}, expected time {expected}")]
    ParentTime {
        id: String,
        time: usize,
        parent: String,
        parent_time: usize,
        expected: usize,
    },

    #[error("measure not absolutely continuous w.r.t. base: atom `{id}` has conditional probability {prob}")]
    NonPositiveProbability { id: String, prob: f64 },

    #[error("children of atom `{parent}` have probabilities summing to {sum}, expected 1")]
    ProbabilitySum { parent: String, sum: f64 },

    #[error("atom `{id}` at time {time} has no children but the horizon is {horizon}")]
    DeadEnd {
        id: String,
        time: usize,
        horizon: usize,
    },

    #[error("terminal atom `{id}` has no children")]
    TerminalAtom { id: String },

    #[error("unknown atom `{id}`")]
    UnknownAtom { id: String },

    #[error("time {time} outside 0..={horizon}")]
    TimeIndex { time: usize, horizon: usize },

    #[error("invalid index range: start {start} exceeds end {end}")]
    IndexRange { start: usize, end: usize },

    #[error("expected a vector at time {expected}, got time {found}")]
    TimeMismatch { expected: usize, found: usize },

    #[error("vector at time {time} has {found} values but the tree has {expected} atoms there")]
    Shape {
        time: usize,
        expected: usize,
        found: usize,
    },

    #[error("process has {found} components, expected {expected}")]
    ProcessLength { expected: usize, found: usize },

    #[error("non-finite value {value} at time {time}")]
    NonFinite { time: usize, value: f64 },

    #[error("objects built on different scenario trees")]
    TreeMismatch,

    #[error("CVaR level must lie in [0, 1), got {alpha}")]
    CvarLevel { alpha: f64 },

    #[error("entropic parameter must be positive and finite, got {beta}")]
    EntropicParameter { beta: f64 },

    #[error("risk family has {found} entries, expected {expected}")]
    FamilyLength { expected: usize, found: usize },

    #[error("tolerance radius must be non-negative and finite, got {epsilon}")]
    NegativeRadius { epsilon: f64 },

    #[error("Wasserstein order must be at least 1, got {order}")]
    WassersteinOrder { order: f64 },

    #[error("measure not absolutely continuous w.r.t. base: density {density} at atom `{id}`")]
    NotAbsolutelyContinuous { id: String, density: f64 },

    #[error("measure density missing for terminal atom `{id}`")]
    MissingDensity { id: String },

    #[error("measure density is given for `{id}`, which is not a terminal atom")]
    NonTerminalDensity { id: String },

    #[error("measure density integrates to {mass}, expected 1")]
    DensityMass { mass: f64 },

    #[error("measure penalty must be non-negative and finite, got {penalty}")]
    NegativePenalty { penalty: f64 },

    #[error("measure family must contain at least one measure")]
    EmptyFamily,

    #[error("uncertainty set lists {found} time slices, expected {expected}")]
    SetLength { expected: usize, found: usize },

    #[error("robust value requested at time {time}, which must be below the horizon {horizon}")]
    TerminalTime { time: usize, horizon: usize },

    #[error("uncertainty set at time {time} must lie in 1..={horizon}")]
    SetTime { time: usize, horizon: usize },

    #[error("robust value at time {time} is unbounded")]
    Unbounded { time: usize },

    #[error("uncertainty set `{set}` cannot evaluate the supremum of {probe} at time {time}")]
    SupremumUnavailable {
        set: String,
        probe: String,
        time: usize,
    },

    #[error("the base set of a recursive construction must be static")]
    NonStaticBase,

    #[error("adversarial flavor `{flavor}` does not apply: {reason}")]
    FlavorInapplicable { flavor: String, reason: String },

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: f64, cap: f64 },

    #[error("atom with {children} children exceeds the oracle cap of {cap}")]
    TooManyChildren { children: usize, cap: usize },

    #[error("oracle resolution {resolution} is coarser than the maximum {max}")]
    CoarseResolution { resolution: f64, max: f64 },

    #[error("unknown property `{name}`")]
    UnknownProperty { name: String },

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error("check settings need finite values, an ordered value range, non-negative tolerance and scale, and an event density in [0, 1]")]
    InvalidCheckSpec,

    #[error("verdict table lacks `{property}`")]
    IncompleteTable { property: String },

    #[error("static representation refused: weak-recursiveness check failed ({detail})")]
    NotWeaklyRecursive { detail: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
