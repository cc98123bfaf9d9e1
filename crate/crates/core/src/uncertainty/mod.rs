//! Dynamic uncertainty sets.
//!
//! A time-`t` uncertainty set maps the tail `X_{t:T}` of a process to a set
//! of time-`t` random variables. Every set in this crate is local to the
//! time-`t−1` atoms: membership, suprema and dominance decompose over the
//! children of each parent atom, so all queries return one answer per
//! parent.
//!
//! Ball radii come from a [`ToleranceRule`] evaluated on `X_t`. The KL ball
//! and the measure family are defined on conditional laws; their suprema are
//! taken over all laws in the set, and a tree vector is a member whenever
//! its conditional law belongs to the set.

pub mod band;
pub mod distance;
pub mod solver;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riskmeasures::RiskKind;
use crate::sampling::CrateRng;
use crate::space::{discrete_law, AdaptedProcess, AdaptedVector, ScenarioTree};

pub use band::ExpectationBand;

/// Child counts up to which tree members are enumerated exhaustively when
/// deciding dominance for law-based sets.
pub const MAX_MAP_CHILDREN: usize = 6;

/// Rule producing the radius `ε_{X_t}`, one non-negative value per parent
/// atom at time `t−1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ToleranceRule {
    /// `ε` everywhere.
    Constant {
        epsilon: f64,
    },
    /// `ε·(T − t)`.
    Horizon {
        epsilon: f64,
    },
    /// `ε·Var(X_t | F_{t−1})`.
    VarScaled {
        epsilon: f64,
    },
    /// `ε·max |X_t|` over the children of each parent.
    NormScaled {
        epsilon: f64,
    },
    /// `ε·max |X_t|` over the whole time-`t` slice; the same value on every
    /// parent, so it mixes information across atoms.
    PooledNorm {
        epsilon: f64,
    },
    Zero,
}

impl ToleranceRule {
    pub fn validate(&self) -> Result<()> {
        let epsilon = self.base();
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::NegativeRadius { epsilon });
        }
        Ok(())
    }

    /// The base radius parameter (0 for [`ToleranceRule::Zero`]).
    pub fn base(&self) -> f64 {
        match *self {
            ToleranceRule::Constant { epsilon }
            | ToleranceRule::Horizon { epsilon }
            | ToleranceRule::VarScaled { epsilon }
            | ToleranceRule::NormScaled { epsilon }
            | ToleranceRule::PooledNorm { epsilon } => epsilon,
            ToleranceRule::Zero => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ToleranceRule::Constant { epsilon } => format!("constant({epsilon})"),
            ToleranceRule::Horizon { epsilon } => format!("horizon({epsilon})"),
            ToleranceRule::VarScaled { epsilon } => format!("var_scaled({epsilon})"),
            ToleranceRule::NormScaled { epsilon } => format!("norm_scaled({epsilon})"),
            ToleranceRule::PooledNorm { epsilon } => format!("pooled_norm({epsilon})"),
            ToleranceRule::Zero => "zero".to_string(),
        }
    }

    /// Radius per parent atom for the time-`t` component `x_t`.
    pub fn radii(&self, tree: &ScenarioTree, x_t: &AdaptedVector) -> Vec<f64> {
        let t = x_t.time();
        let parents = tree.width(t - 1);
        match *self {
            ToleranceRule::Constant { epsilon } => vec![epsilon; parents],
            ToleranceRule::Horizon { epsilon } => {
                vec![epsilon * (tree.horizon() - t) as f64; parents]
            }
            ToleranceRule::Zero => vec![0.0; parents],
            ToleranceRule::VarScaled { epsilon } => (0..parents)
                .map(|i| {
                    let values = tree.child_values(x_t, i);
                    let probs = tree.child_probs(t - 1, i);
                    let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
                    let var: f64 = values
                        .iter()
                        .zip(&probs)
                        .map(|(v, p)| p * (v - mean).powi(2))
                        .sum();
                    epsilon * var
                })
                .collect(),
            ToleranceRule::NormScaled { epsilon } => (0..parents)
                .map(|i| {
                    epsilon
                        * tree
                            .child_values(x_t, i)
                            .iter()
                            .fold(0.0_f64, |m, v| m.max(v.abs()))
                })
                .collect(),
            ToleranceRule::PooledNorm { epsilon } => vec![epsilon * x_t.max_abs(); parents],
        }
    }
}

/// `ε_{X_t}` as a time-`t−1` vector.
pub fn tolerance_eval(
    rule: &ToleranceRule,
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
) -> Result<AdaptedVector> {
    check_set_time(tree, t)?;
    tree.check_process(x)?;
    Ok(AdaptedVector::from_parts(t - 1, rule.radii(tree, x.at(t))))
}

/// One measure of a family: a density on the terminal atoms and a penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    /// Radon–Nikodym density with respect to the base measure, keyed by
    /// terminal atom id.
    pub density: BTreeMap<String, f64>,
    #[serde(default)]
    pub penalty: f64,
}

/// A validated measure: conditional densities on every atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    node_density: Vec<Vec<f64>>,
    penalty: f64,
}

impl Measure {
    pub fn compile(tree: &ScenarioTree, spec: &MeasureSpec) -> Result<Self> {
        if !(spec.penalty >= 0.0 && spec.penalty.is_finite()) {
            return Err(Error::NegativePenalty {
                penalty: spec.penalty,
            });
        }
        let horizon = tree.horizon();
        for id in spec.density.keys() {
            match tree.node(id) {
                None => return Err(Error::UnknownAtom { id: id.clone() }),
                Some(node) if node.time != horizon => {
                    return Err(Error::NonTerminalDensity { id: id.clone() })
                }
                _ => {}
            }
        }
        let mut terminal = Vec::with_capacity(tree.width(horizon));
        for id in tree.ids_at(horizon) {
            let d = *spec
                .density
                .get(id)
                .ok_or_else(|| Error::MissingDensity { id: id.clone() })?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NotAbsolutelyContinuous {
                    id: id.clone(),
                    density: d,
                });
            }
            terminal.push(d);
        }
        let d_vec = AdaptedVector::from_parts(horizon, terminal);
        let mass = tree.conditional_expectation(&d_vec, 0).value(0);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::DensityMass { mass });
        }
        let node_density = (0..=horizon)
            .map(|t| tree.conditional_expectation(&d_vec, t).values().to_vec())
            .collect();
        Ok(Self {
            node_density,
            penalty: spec.penalty,
        })
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// Conditional probabilities of the children of atom `(t, index)` under
    /// this measure.
    pub fn child_probs(&self, tree: &ScenarioTree, t: usize, index: usize) -> Vec<f64> {
        let parent = self.node_density[t][index];
        tree.child_indices(t, index)
            .iter()
            .zip(tree.child_probs(t, index))
            .map(|(&k, p)| p * self.node_density[t + 1][k] / parent)
            .collect()
    }
}

/// Serializable description of a static time-`t` uncertainty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UncertaintyKind {
    /// `{X_t}`: no robustification.
    Identity,
    /// `{Y : max |Y − X_t| ≤ ε}` per parent.
    SupNormBall { tolerance: ToleranceRule },
    /// `{Y : W_p(Y, X_t | F_{t−1}) ≤ ε}`.
    WassersteinBall {
        order: f64,
        tolerance: ToleranceRule,
    },
    /// `{Y : law(Y) is a reweighting q of law(X_t) with KL(q‖p) ≤ ε}`.
    KlBall { tolerance: ToleranceRule },
    /// `{Y : law_P(Y) = law_Q(X_t − penalty_Q) for a listed Q}`.
    MeasureFamily { measures: Vec<MeasureSpec> },
}

impl UncertaintyKind {
    pub fn label(&self) -> String {
        match self {
            UncertaintyKind::Identity => "identity".to_string(),
            UncertaintyKind::SupNormBall { tolerance } => {
                format!("sup_norm_ball[{}]", tolerance.label())
            }
            UncertaintyKind::WassersteinBall { order, tolerance } => {
                format!("wasserstein_ball[p={order}, {}]", tolerance.label())
            }
            UncertaintyKind::KlBall { tolerance } => format!("kl_ball[{}]", tolerance.label()),
            UncertaintyKind::MeasureFamily { measures } => {
                format!("measure_family[{} measures]", measures.len())
            }
        }
    }

    pub fn tolerance(&self) -> Option<&ToleranceRule> {
        match self {
            UncertaintyKind::SupNormBall { tolerance }
            | UncertaintyKind::WassersteinBall { tolerance, .. }
            | UncertaintyKind::KlBall { tolerance } => Some(tolerance),
            _ => None,
        }
    }
}

/// Outcome of asking whether some member dominates a given vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Yes,
    No,
    Unknown,
}

/// Queries every dynamic uncertainty set answers. Time arguments are the
/// set's own index `t ∈ 1..=T`; `x` is a full process of which only the
/// tail `X_{t:T}` is read. Results hold one entry per time-`t−1` atom.
pub trait DynamicSet: Send + Sync {
    fn describe(&self) -> String;

    fn tree(&self) -> &Arc<ScenarioTree>;

    /// Whether `u_t(X_{t:T})` depends on `X_t` only.
    fn is_static(&self) -> bool;

    /// Membership of `y` (time `t`) in `u_t(X_{t:T})`.
    fn contains(
        &self,
        t: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>>;

    /// `sup {probe(Y) : Y ∈ u_t(X_{t:T})}`. `None` marks parents where the
    /// set cannot evaluate this probe; the value may be `+∞`.
    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>>;

    /// A random member; `boundary` favours members on the edge of the set.
    /// `None` when no tree member could be produced on some parent.
    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>>;

    /// Whether some member `W` satisfies `z ≤ W` on the children of each
    /// parent.
    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>>;
}

pub(crate) fn check_set_time(tree: &ScenarioTree, t: usize) -> Result<()> {
    if t == 0 || t > tree.horizon() {
        return Err(Error::SetTime {
            time: t,
            horizon: tree.horizon(),
        });
    }
    Ok(())
}

pub(crate) fn check_member_args(
    tree: &ScenarioTree,
    t: usize,
    y: &AdaptedVector,
    x: &AdaptedProcess,
) -> Result<()> {
    check_set_time(tree, t)?;
    tree.check_vector(y, t)?;
    tree.check_process(x)
}

/// Writes a per-parent block of child values into a time-`t` vector.
pub(crate) fn assemble(tree: &ScenarioTree, t: usize, blocks: Vec<Vec<f64>>) -> AdaptedVector {
    let mut values = vec![0.0; tree.width(t)];
    for (i, block) in blocks.into_iter().enumerate() {
        for (&k, v) in tree.child_indices(t - 1, i).iter().zip(block) {
            values[k] = v;
        }
    }
    AdaptedVector::from_parts(t, values)
}

#[derive(Debug, Clone, PartialEq)]
enum Compiled {
    Identity,
    SupNorm(ToleranceRule),
    Wasserstein(f64, ToleranceRule),
    Kl(ToleranceRule),
    Family(Vec<Measure>),
}

/// A static dynamic uncertainty set: one [`UncertaintyKind`] per time
/// `1..=T`, bound to a tree.
#[derive(Debug, Clone)]
pub struct DynamicUncertaintySet {
    tree: Arc<ScenarioTree>,
    kinds: Vec<UncertaintyKind>,
    compiled: Vec<Compiled>,
}

impl DynamicUncertaintySet {
    /// `kinds[t − 1]` is the set used at time `t`.
    pub fn new(tree: Arc<ScenarioTree>, kinds: Vec<UncertaintyKind>) -> Result<Self> {
        if kinds.len() != tree.horizon() {
            return Err(Error::SetLength {
                expected: tree.horizon(),
                found: kinds.len(),
            });
        }
        let compiled = kinds
            .iter()
            .map(|kind| {
                Ok(match kind {
                    UncertaintyKind::Identity => Compiled::Identity,
                    UncertaintyKind::SupNormBall { tolerance } => {
                        tolerance.validate()?;
                        Compiled::SupNorm(*tolerance)
                    }
                    UncertaintyKind::WassersteinBall { order, tolerance } => {
                        tolerance.validate()?;
                        if !(*order >= 1.0 && order.is_finite()) {
                            return Err(Error::WassersteinOrder { order: *order });
                        }
                        Compiled::Wasserstein(*order, *tolerance)
                    }
                    UncertaintyKind::KlBall { tolerance } => {
                        tolerance.validate()?;
                        Compiled::Kl(*tolerance)
                    }
                    UncertaintyKind::MeasureFamily { measures } => {
                        if measures.is_empty() {
                            return Err(Error::EmptyFamily);
                        }
                        Compiled::Family(
                            measures
                                .iter()
                                .map(|m| Measure::compile(&tree, m))
                                .collect::<Result<Vec<_>>>()?,
                        )
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tree,
            kinds,
            compiled,
        })
    }

    /// The same kind at every time.
    pub fn uniform(tree: Arc<ScenarioTree>, kind: UncertaintyKind) -> Result<Self> {
        let kinds = vec![kind; tree.horizon()];
        Self::new(tree, kinds)
    }

    pub fn kinds(&self) -> &[UncertaintyKind] {
        &self.kinds
    }

    /// Radius per parent at time `t` for the component `x_t`, or zeros for
    /// variants without a radius.
    pub fn radii(&self, t: usize, x_t: &AdaptedVector) -> Vec<f64> {
        match &self.compiled[t - 1] {
            Compiled::SupNorm(rule) | Compiled::Wasserstein(_, rule) | Compiled::Kl(rule) => {
                rule.radii(&self.tree, x_t)
            }
            _ => vec![0.0; self.tree.width(t - 1)],
        }
    }

    /// Membership of `y` in the time-`t` set built around the component
    /// `x_t` alone.
    pub fn contains_static(&self, y: &AdaptedVector, x_t: &AdaptedVector, tol: f64) -> Vec<bool> {
        let t = x_t.time();
        let tree = &self.tree;
        let radii = self.radii(t, x_t);
        (0..tree.width(t - 1))
            .map(|i| {
                let ys = tree.child_values(y, i);
                let xs = tree.child_values(x_t, i);
                let probs = tree.child_probs(t - 1, i);
                match &self.compiled[t - 1] {
                    Compiled::Identity => ys.iter().zip(&xs).all(|(a, b)| (a - b).abs() <= tol),
                    Compiled::SupNorm(_) => ys
                        .iter()
                        .zip(&xs)
                        .all(|(a, b)| (a - b).abs() <= radii[i] + tol),
                    Compiled::Wasserstein(order, _) => {
                        distance::wasserstein_law(*order, &zip(&ys, &probs), &zip(&xs, &probs))
                            <= radii[i] + tol
                    }
                    Compiled::Kl(_) => distance::law_divergence(&ys, &xs, &probs, tol)
                        .is_some_and(|d| d <= radii[i] + tol),
                    Compiled::Family(measures) => measures.iter().any(|m| {
                        let q = m.child_probs(tree, t - 1, i);
                        let shifted: Vec<f64> = xs.iter().map(|v| v - m.penalty()).collect();
                        laws_match(&zip(&ys, &probs), &zip(&shifted, &q), tol)
                    }),
                }
            })
            .collect()
    }

    /// Supremum of `probe` over the time-`t` set built around `x_t`.
    pub fn sup_static(&self, probe: &RiskKind, x_t: &AdaptedVector) -> Vec<f64> {
        let t = x_t.time();
        let tree = &self.tree;
        let radii = self.radii(t, x_t);
        (0..tree.width(t - 1))
            .map(|i| {
                let xs = tree.child_values(x_t, i);
                let probs = tree.child_probs(t - 1, i);
                match &self.compiled[t - 1] {
                    Compiled::Identity => probe.eval(&xs, &probs),
                    Compiled::SupNorm(_) => probe.eval(&xs, &probs) + radii[i],
                    Compiled::Wasserstein(order, _) => {
                        solver::wasserstein_sup(&xs, &probs, *order, radii[i], probe).value
                    }
                    Compiled::Kl(_) => solver::kl_sup(&xs, &probs, radii[i], probe),
                    Compiled::Family(measures) => measures
                        .iter()
                        .map(|m| probe.eval(&xs, &m.child_probs(tree, t - 1, i)) - m.penalty())
                        .fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect()
    }

    /// Random member of the time-`t` set built around `x_t`.
    pub fn sample_static(
        &self,
        x_t: &AdaptedVector,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Option<AdaptedVector> {
        let t = x_t.time();
        let tree = &self.tree;
        let radii = self.radii(t, x_t);
        let mut blocks = Vec::with_capacity(tree.width(t - 1));
        for (i, &radius) in radii.iter().enumerate() {
            let xs = tree.child_values(x_t, i);
            let probs = tree.child_probs(t - 1, i);
            let block = match &self.compiled[t - 1] {
                Compiled::Identity => Some(xs),
                Compiled::SupNorm(_) => Some(sample_sup_norm(&xs, radius, rng, boundary)),
                Compiled::Wasserstein(order, _) => Some(sample_wasserstein(
                    &xs, &probs, *order, radius, rng, boundary,
                )),
                Compiled::Kl(_) => Some(sample_kl(&xs, &probs, radius, rng, boundary)),
                Compiled::Family(measures) => {
                    let mut order: Vec<usize> = (0..measures.len()).collect();
                    order.shuffle(rng);
                    order.into_iter().find_map(|j| {
                        let m = &measures[j];
                        let q = m.child_probs(tree, t - 1, i);
                        let shifted: Vec<f64> = xs.iter().map(|v| v - m.penalty()).collect();
                        realize_law(&probs, &discrete_law(&shifted, &q), rng)
                    })
                }
            };
            blocks.push(block?);
        }
        Some(assemble(tree, t, blocks))
    }

    /// Dominance decision for the time-`t` set built around `x_t`.
    pub fn dominated_static(
        &self,
        z: &AdaptedVector,
        x_t: &AdaptedVector,
        tol: f64,
    ) -> Vec<Dominance> {
        let t = x_t.time();
        let tree = &self.tree;
        let radii = self.radii(t, x_t);
        (0..tree.width(t - 1))
            .map(|i| {
                let zs = tree.child_values(z, i);
                let xs = tree.child_values(x_t, i);
                let probs = tree.child_probs(t - 1, i);
                let below = |w: &[f64]| zs.iter().zip(w).all(|(a, b)| *a <= *b + tol);
                match &self.compiled[t - 1] {
                    Compiled::Identity => yes_no(below(&xs)),
                    Compiled::SupNorm(_) => {
                        let top: Vec<f64> = xs.iter().map(|v| v + radii[i]).collect();
                        yes_no(below(&top))
                    }
                    Compiled::Wasserstein(order, _) => {
                        let reference = zip(&xs, &probs);
                        let excess =
                            distance::quantile_excess(*order, &zip(&zs, &probs), &reference);
                        if excess > radii[i] + tol {
                            return Dominance::No;
                        }
                        let lifted: Vec<f64> = zs.iter().zip(&xs).map(|(a, b)| a.max(*b)).collect();
                        if distance::wasserstein_law(*order, &zip(&lifted, &probs), &reference)
                            <= radii[i] + tol
                        {
                            return Dominance::Yes;
                        }
                        Dominance::Unknown
                    }
                    Compiled::Kl(_) => decide_by_maps(&xs, &zs, tol, |w| {
                        distance::law_divergence(w, &xs, &probs, tol)
                            .is_some_and(|d| d <= radii[i] + tol)
                    }),
                    Compiled::Family(measures) => {
                        let mut verdict = Dominance::No;
                        for m in measures {
                            let q = m.child_probs(tree, t - 1, i);
                            let shifted: Vec<f64> = xs.iter().map(|v| v - m.penalty()).collect();
                            let target = zip(&shifted, &q);
                            match decide_by_maps(&shifted, &zs, tol, |w| {
                                laws_match(&zip(w, &probs), &target, tol)
                            }) {
                                Dominance::Yes => return Dominance::Yes,
                                Dominance::Unknown => verdict = Dominance::Unknown,
                                Dominance::No => {}
                            }
                        }
                        verdict
                    }
                }
            })
            .collect()
    }
}

impl DynamicSet for DynamicUncertaintySet {
    fn describe(&self) -> String {
        let first = self.kinds[0].label();
        if self.kinds.iter().all(|k| k.label() == first) {
            first
        } else {
            self.kinds
                .iter()
                .map(UncertaintyKind::label)
                .collect::<Vec<_>>()
                .join(" | ")
        }
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        &self.tree
    }

    fn is_static(&self) -> bool {
        true
    }

    fn contains(
        &self,
        t: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        check_member_args(&self.tree, t, y, x)?;
        Ok(self.contains_static(y, x.at(t), tol))
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(&self.tree, t)?;
        self.tree.check_process(x)?;
        Ok(self
            .sup_static(probe, x.at(t))
            .into_iter()
            .map(Some)
            .collect())
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        check_set_time(&self.tree, t)?;
        self.tree.check_process(x)?;
        Ok(self.sample_static(x.at(t), rng, boundary))
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        check_member_args(&self.tree, t, z, x)?;
        Ok(self.dominated_static(z, x.at(t), tol))
    }
}

fn yes_no(flag: bool) -> Dominance {
    if flag {
        Dominance::Yes
    } else {
        Dominance::No
    }
}

pub(crate) fn zip(values: &[f64], probs: &[f64]) -> Vec<(f64, f64)> {
    values.iter().copied().zip(probs.iter().copied()).collect()
}

/// Groups sorted values lying within `tol` of their predecessor.
fn cluster(law: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let mut sorted = law.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (v, p) in sorted {
        match out.last_mut() {
            Some(last) if v - last.2 <= tol => {
                last.1 += p;
                last.2 = v;
            }
            _ => out.push((v, p, v)),
        }
    }
    out.into_iter().map(|(v, p, _)| (v, p)).collect()
}

/// Whether two discrete laws coincide up to `tol` in values and `1e-9` in
/// probability mass.
pub(crate) fn laws_match(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> bool {
    let ca = cluster(a, tol);
    let cb = cluster(b, tol);
    ca.len() == cb.len()
        && ca
            .iter()
            .zip(&cb)
            .all(|(u, v)| (u.0 - v.0).abs() <= 2.0 * tol && (u.1 - v.1).abs() <= 1e-9)
}

fn sample_sup_norm(xs: &[f64], radius: f64, rng: &mut CrateRng, boundary: bool) -> Vec<f64> {
    let mut y: Vec<f64> = xs
        .iter()
        .map(|v| v + radius * rng.gen_range(-1.0..=1.0))
        .collect();
    if boundary {
        if rng.gen_bool(0.5) {
            y = xs.iter().map(|v| v + radius).collect();
        } else {
            let k = rng.gen_range(0..y.len());
            y[k] = xs[k] + if rng.gen_bool(0.5) { radius } else { -radius };
        }
    }
    y
}

fn sample_wasserstein(
    xs: &[f64],
    probs: &[f64],
    order: f64,
    radius: f64,
    rng: &mut CrateRng,
    boundary: bool,
) -> Vec<f64> {
    if radius <= 0.0 {
        return xs.to_vec();
    }
    if boundary && rng.gen_bool(0.3) {
        let probes = [
            RiskKind::Expectation,
            RiskKind::Cvar { alpha: 0.5 },
            RiskKind::Cvar { alpha: 0.9 },
            RiskKind::WorstCase,
        ];
        let probe = probes[rng.gen_range(0..probes.len())];
        return solver::wasserstein_sup(xs, probs, order, radius, &probe).candidate;
    }
    let direction: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let target = if boundary {
        radius
    } else {
        radius * rng.gen::<f64>()
    };
    let reference = zip(xs, probs);
    let dist = |s: f64| {
        let y: Vec<f64> = xs.iter().zip(&direction).map(|(x, d)| x + s * d).collect();
        distance::wasserstein_law(order, &zip(&y, probs), &reference)
    };
    let mut hi = radius;
    while dist(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return xs.to_vec();
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    xs.iter().zip(&direction).map(|(x, d)| x + lo * d).collect()
}

fn sample_kl(
    xs: &[f64],
    probs: &[f64],
    radius: f64,
    rng: &mut CrateRng,
    boundary: bool,
) -> Vec<f64> {
    let n = xs.len();
    let mut feasible: Vec<(f64, Vec<f64>)> = vec![(0.0, xs.to_vec())];
    for _ in 0..64 {
        let y: Vec<f64> = (0..n).map(|_| xs[rng.gen_range(0..n)]).collect();
        if let Some(d) = distance::law_divergence(&y, xs, probs, 0.0) {
            if d <= radius {
                feasible.push((d, y));
            }
        }
    }
    if boundary {
        feasible
            .into_iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, y)| y)
            .unwrap_or_else(|| xs.to_vec())
    } else {
        let k = rng.gen_range(0..feasible.len());
        feasible.swap_remove(k).1
    }
}

/// Assigns each child (with probability `probs[i]`) a support point of
/// `target` so that the induced law equals `target`. Randomized
/// backtracking with a step cap.
fn realize_law(probs: &[f64], target: &[(f64, f64)], rng: &mut CrateRng) -> Option<Vec<f64>> {
    let n = probs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let mut remaining: Vec<f64> = target.iter().map(|t| t.1).collect();
    let mut choice = vec![0usize; n];
    let mut cluster_order: Vec<usize> = (0..target.len()).collect();
    cluster_order.shuffle(rng);
    let mut steps = 0usize;
    fn go(
        pos: usize,
        order: &[usize],
        probs: &[f64],
        remaining: &mut [f64],
        choice: &mut [usize],
        clusters: &[usize],
        steps: &mut usize,
    ) -> bool {
        *steps += 1;
        if *steps > 200_000 {
            return false;
        }
        if pos == order.len() {
            return remaining.iter().all(|r| r.abs() <= 1e-9);
        }
        let child = order[pos];
        for &c in clusters {
            if remaining[c] + 1e-9 >= probs[child] {
                remaining[c] -= probs[child];
                choice[child] = c;
                if go(pos + 1, order, probs, remaining, choice, clusters, steps) {
                    return true;
                }
                remaining[c] += probs[child];
            }
        }
        false
    }
    if go(
        0,
        &order,
        probs,
        &mut remaining,
        &mut choice,
        &cluster_order,
        &mut steps,
    ) {
        Some(choice.iter().map(|&c| target[c].0).collect())
    } else {
        None
    }
}

/// Dominance for sets whose tree members take values in `support` only:
/// every candidate `w` with `w_i ∈ support` is enumerated when the atom is
/// small enough, otherwise the answer is `Unknown` unless a member is found
/// among the pointwise-smallest dominating choices.
fn decide_by_maps(
    support: &[f64],
    z: &[f64],
    tol: f64,
    member: impl Fn(&[f64]) -> bool,
) -> Dominance {
    let n = z.len();
    let options: Vec<Vec<f64>> = z
        .iter()
        .map(|&zi| {
            let mut o: Vec<f64> = support.iter().copied().filter(|&s| zi <= s + tol).collect();
            o.sort_by(f64::total_cmp);
            o.dedup();
            o
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Dominance::No;
    }
    if n > MAX_MAP_CHILDREN {
        let smallest: Vec<f64> = options.iter().map(|o| o[0]).collect();
        return if member(&smallest) {
            Dominance::Yes
        } else {
            Dominance::Unknown
        };
    }
    let mut idx = vec![0usize; n];
    let mut w: Vec<f64> = options.iter().map(|o| o[0]).collect();
    loop {
        if member(&w) {
            return Dominance::Yes;
        }
        let mut k = 0;
        loop {
            if k == n {
                return Dominance::No;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                w[k] = options[k][idx[k]];
                break;
            }
            idx[k] = 0;
            w[k] = options[k][0];
            k += 1;
        }
    }
}
