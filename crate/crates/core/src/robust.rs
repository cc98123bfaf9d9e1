//! Dynamic robust risk measures.
//!
//! `R_{t,T}(X) = sup {ρ_t(Y) : Y ∈ u_{t+1}(X_{t+1:T})}` for a family of
//! one-step measures `ρ_t` and a dynamic uncertainty set `u`. This module
//! also provides the consolidated set `U_{t+1}(X) = {Y : ρ_t(Y) ≤ R_{t,T}(X)}`,
//! the normalised version `R − R(0)`, the backward recursive construction
//! from a static base set and its nested evaluation, and the static
//! representation of a weakly recursive measure.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::properties::{self, CheckSpec, TcId};
use crate::riskmeasures::{evaluate_one_step, RiskFamily, RiskKind};
use crate::sampling::{self, CrateRng};
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};
use crate::uncertainty::{check_member_args, check_set_time, Dominance, DynamicSet};

/// Turns per-parent suprema into a time-`t` vector, rejecting missing or
/// infinite entries.
pub(crate) fn required_sup(
    set: &dyn DynamicSet,
    t: usize,
    probe: &RiskKind,
    x: &AdaptedProcess,
) -> Result<AdaptedVector> {
    let values = set
        .sup(t + 1, probe, x)?
        .into_iter()
        .map(|v| match v {
            None => Err(Error::SupremumUnavailable {
                set: set.describe(),
                probe: probe.label(),
                time: t + 1,
            }),
            Some(v) if !v.is_finite() => Err(Error::Unbounded { time: t }),
            Some(v) => Ok(v),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptedVector::from_parts(t, values))
}

/// A dynamic robust risk measure `R^{u,ρ}` with memoized zero values.
#[derive(Clone)]
pub struct RobustRiskMeasure {
    tree: Arc<ScenarioTree>,
    family: RiskFamily,
    set: Arc<dyn DynamicSet>,
    zero: Vec<AdaptedVector>,
}

impl std::fmt::Debug for RobustRiskMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobustRiskMeasure")
            .field("family", &self.family)
            .field("set", &self.set.describe())
            .finish()
    }
}

impl RobustRiskMeasure {
    pub fn new(family: RiskFamily, set: Arc<dyn DynamicSet>) -> Result<Self> {
        let tree = set.tree().clone();
        family.check_horizon(tree.horizon())?;
        let zeros = AdaptedProcess::zeros(&tree);
        let zero = (0..tree.horizon())
            .map(|t| required_sup(set.as_ref(), t, family.at(t), &zeros))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tree,
            family,
            set,
            zero,
        })
    }

    pub fn tree(&self) -> &Arc<ScenarioTree> {
        &self.tree
    }

    pub fn family(&self) -> &RiskFamily {
        &self.family
    }

    pub fn set(&self) -> &Arc<dyn DynamicSet> {
        &self.set
    }

    pub fn describe(&self) -> String {
        let kinds: Vec<String> = self.family.kinds().iter().map(RiskKind::label).collect();
        let first = &kinds[0];
        let family = if kinds.iter().all(|k| k == first) {
            first.clone()
        } else {
            kinds.join(",")
        };
        format!("R[{family}; {}]", self.set.describe())
    }

    fn check_time(&self, t: usize) -> Result<()> {
        let horizon = self.tree.horizon();
        if t >= horizon {
            return Err(Error::TerminalTime { time: t, horizon });
        }
        Ok(())
    }

    /// `R_{t,T}(X_{t+1:T})` as a time-`t` vector.
    pub fn robust_value(&self, t: usize, x: &AdaptedProcess) -> Result<AdaptedVector> {
        self.check_time(t)?;
        self.tree.check_process(x)?;
        required_sup(self.set.as_ref(), t, self.family.at(t), x)
    }

    /// Memoized `R_{t,T}(0)`.
    pub fn zero_value(&self, t: usize) -> Result<&AdaptedVector> {
        self.check_time(t)?;
        Ok(&self.zero[t])
    }

    /// `R_{t,T}(X_{t+1:T}) + X_t`, the convention that includes the current
    /// component.
    pub fn tilde_value(&self, t: usize, x: &AdaptedProcess) -> Result<AdaptedVector> {
        Ok(&self.robust_value(t, x)? + x.at(t))
    }

    /// Robust acceptance per time-`t` atom.
    pub fn robust_accepts(&self, t: usize, x: &AdaptedProcess, tol: f64) -> Result<Vec<bool>> {
        Ok(self
            .robust_value(t, x)?
            .values()
            .iter()
            .map(|&v| v <= tol)
            .collect())
    }

    /// `ρ_t(Y) ≤ R_{t,T}(X)` per time-`t` atom, for `y` at time `t + 1`.
    pub fn consolidated_contains(
        &self,
        t1: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        check_member_args(&self.tree, t1, y, x)?;
        let t = t1 - 1;
        let r = self.robust_value(t, x)?;
        let risk = evaluate_one_step(self.family.at(t), &self.tree, y)?;
        Ok(risk
            .values()
            .iter()
            .zip(r.values())
            .map(|(a, b)| *a <= *b + tol)
            .collect())
    }

    /// `Y ∈ A^ρ_t + R_{t,T}(X)`, i.e. `ρ_t(Y − R_{t,T}(X)) ≤ 0`.
    pub fn consolidated_contains_repr(
        &self,
        t1: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        check_member_args(&self.tree, t1, y, x)?;
        let t = t1 - 1;
        let r = self.robust_value(t, x)?;
        let shifted = y - &self.tree.lift(&r, t1);
        Ok(evaluate_one_step(self.family.at(t), &self.tree, &shifted)?
            .values()
            .iter()
            .map(|&v| v <= tol)
            .collect())
    }

    /// `R̃_{t,T}(X) = R_{t,T}(X) − R_{t,T}(0)`, realised as the robust measure
    /// of the set shifted down by the zero values.
    pub fn normalize(&self) -> Result<RobustRiskMeasure> {
        let shifts = self.zero.iter().map(|z| -z).collect();
        let set = ShiftedSet {
            inner: self.set.clone(),
            shifts,
        };
        RobustRiskMeasure::new(self.family.clone(), Arc::new(set))
    }

    /// Whether `R_{t,T}(0) = 0` within `tol` at every time.
    pub fn is_normalised(&self, tol: f64) -> bool {
        self.zero.iter().all(|z| z.max_abs() <= tol)
    }
}

/// `u_τ(X) + c_{τ−1}`: the set translated by a time-`τ−1` vector.
#[derive(Clone)]
pub struct ShiftedSet {
    inner: Arc<dyn DynamicSet>,
    /// `shifts[τ − 1]` is added to every member of `u_τ`.
    shifts: Vec<AdaptedVector>,
}

impl ShiftedSet {
    fn shift(&self, t: usize) -> AdaptedVector {
        self.inner.tree().lift(&self.shifts[t - 1], t)
    }
}

impl DynamicSet for ShiftedSet {
    fn describe(&self) -> String {
        format!("shifted({})", self.inner.describe())
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        self.inner.tree()
    }

    fn is_static(&self) -> bool {
        self.inner.is_static()
    }

    fn contains(
        &self,
        t: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        check_member_args(self.tree(), t, y, x)?;
        self.inner.contains(t, &(y - &self.shift(t)), x, tol)
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(self.tree(), t)?;
        Ok(self
            .inner
            .sup(t, probe, x)?
            .into_iter()
            .zip(self.shifts[t - 1].values())
            .map(|(v, c)| v.map(|v| v + c))
            .collect())
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        check_set_time(self.tree(), t)?;
        Ok(self
            .inner
            .sample_member(t, x, rng, boundary)?
            .map(|y| &y + &self.shift(t)))
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        check_member_args(self.tree(), t, z, x)?;
        self.inner.dominated(t, &(z - &self.shift(t)), x, tol)
    }
}

/// Consolidated set `U_{t+1}(X) = {Y : ρ_t(Y) ≤ R_{t,T}(X)}`.
#[derive(Clone)]
pub struct ConsolidatedSet {
    measure: Arc<RobustRiskMeasure>,
}

impl ConsolidatedSet {
    pub fn new(measure: Arc<RobustRiskMeasure>) -> Self {
        Self { measure }
    }

    pub fn measure(&self) -> &Arc<RobustRiskMeasure> {
        &self.measure
    }
}

/// `sup {probe(Y) : ρ(Y) ≤ r}` on one parent with `children` children.
fn acceptance_sup(probe: &RiskKind, rho: &RiskKind, children: usize, r: f64) -> Option<f64> {
    if children == 1 || probe == rho {
        return Some(r);
    }
    match probe.dominated_by(rho) {
        Some(true) => Some(r),
        Some(false) if probe.is_positively_homogeneous() && rho.is_positively_homogeneous() => {
            Some(f64::INFINITY)
        }
        _ => None,
    }
}

impl DynamicSet for ConsolidatedSet {
    fn describe(&self) -> String {
        format!("consolidated({})", self.measure.set.describe())
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        &self.measure.tree
    }

    fn is_static(&self) -> bool {
        false
    }

    fn contains(
        &self,
        t: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        self.measure.consolidated_contains(t, y, x, tol)
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(self.tree(), t)?;
        let r = self.measure.robust_value(t - 1, x)?;
        let rho = self.measure.family.at(t - 1);
        let tree = self.tree();
        Ok((0..tree.width(t - 1))
            .map(|i| acceptance_sup(probe, rho, tree.child_indices(t - 1, i).len(), r.value(i)))
            .collect())
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        check_set_time(self.tree(), t)?;
        let tree = self.tree();
        let r = self.measure.robust_value(t - 1, x)?;
        let z = sampling::random_vector(rng, tree, t, -1.0, 1.0);
        let risk = evaluate_one_step(self.measure.family.at(t - 1), tree, &z)?;
        let slack = if boundary {
            AdaptedVector::zeros(tree, t - 1)
        } else {
            r.map(|_| rng.gen::<f64>())
        };
        let offset = &(&r - &risk) - &slack;
        Ok(Some(&z + &tree.lift(&offset, t)))
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        Ok(self
            .contains(t, z, x, tol)?
            .into_iter()
            .map(|inside| {
                if inside {
                    Dominance::Yes
                } else {
                    Dominance::No
                }
            })
            .collect())
    }
}

/// Set defined backwards from a static base:
/// `u_t(X_{t:T}) = u^ς_t(X_t + R_{t,T}(X_{t+1:T}) − R_{t,T}(0))`, `u_T = u^ς_T`.
#[derive(Clone)]
pub struct DerivedDynamicSet {
    base: Arc<dyn DynamicSet>,
    family: RiskFamily,
    zero: Vec<AdaptedVector>,
}

impl DerivedDynamicSet {
    pub fn new(base: Arc<dyn DynamicSet>, family: RiskFamily) -> Result<Self> {
        if !base.is_static() {
            return Err(Error::NonStaticBase);
        }
        let tree = base.tree().clone();
        family.check_horizon(tree.horizon())?;
        let zeros = AdaptedProcess::zeros(&tree);
        // With X = 0 the recursive shift cancels, so R_{t,T}(0) is the base
        // set's robust value at zero.
        let zero = (0..tree.horizon())
            .map(|t| required_sup(base.as_ref(), t, family.at(t), &zeros))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, family, zero })
    }

    pub fn base(&self) -> &Arc<dyn DynamicSet> {
        &self.base
    }

    /// `R_{t,T}(X)` of the constructed measure, computed backwards.
    fn robust_at(&self, t: usize, x: &AdaptedProcess) -> Result<AdaptedVector> {
        let horizon = self.base.tree().horizon();
        let mut next: Option<AdaptedVector> = None;
        for s in (t..horizon).rev() {
            let argument = match &next {
                None => x.at(s + 1).clone(),
                Some(r) => &(x.at(s + 1) + r) - &self.zero[s + 1],
            };
            next = Some(required_sup(
                self.base.as_ref(),
                s,
                self.family.at(s),
                &x.with_part(argument),
            )?);
        }
        Ok(next.expect("t below the horizon"))
    }

    /// The process whose time-`t` component is the shifted base argument.
    fn shifted(&self, t: usize, x: &AdaptedProcess) -> Result<AdaptedProcess> {
        let tree = self.base.tree();
        check_set_time(tree, t)?;
        tree.check_process(x)?;
        if t == tree.horizon() {
            return Ok(x.clone());
        }
        let r = self.robust_at(t, x)?;
        Ok(x.with_part(&(x.at(t) + &r) - &self.zero[t]))
    }
}

impl DynamicSet for DerivedDynamicSet {
    fn describe(&self) -> String {
        format!("derived({})", self.base.describe())
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        self.base.tree()
    }

    fn is_static(&self) -> bool {
        false
    }

    fn contains(
        &self,
        t: usize,
        y: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<bool>> {
        let shifted = self.shifted(t, x)?;
        self.base.contains(t, y, &shifted, tol)
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        let shifted = self.shifted(t, x)?;
        self.base.sup(t, probe, &shifted)
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        let shifted = self.shifted(t, x)?;
        self.base.sample_member(t, &shifted, rng, boundary)
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        let shifted = self.shifted(t, x)?;
        self.base.dominated(t, z, &shifted, tol)
    }
}

/// Robust measure of the set constructed backwards from a static base.
pub fn construct_recursive(
    base: Arc<dyn DynamicSet>,
    family: RiskFamily,
) -> Result<RobustRiskMeasure> {
    let derived = DerivedDynamicSet::new(base, family.clone())?;
    RobustRiskMeasure::new(family, Arc::new(derived))
}

/// `R^ς_t(Y_{t+1} + R^ς_{t+1}(Y_{t+2} + ⋯))` with `Y_i = X_i − R^ς_i(0)` for
/// `i < T` and `Y_T = X_T`, where `R^ς` is the robust measure of the static
/// base set.
pub fn nested_robust_evaluate(
    base: &dyn DynamicSet,
    family: &RiskFamily,
    x: &AdaptedProcess,
    t: usize,
) -> Result<AdaptedVector> {
    if !base.is_static() {
        return Err(Error::NonStaticBase);
    }
    let tree = base.tree();
    let horizon = tree.horizon();
    if t >= horizon {
        return Err(Error::TerminalTime { time: t, horizon });
    }
    family.check_horizon(horizon)?;
    tree.check_process(x)?;
    let zeros = AdaptedProcess::zeros(tree);
    let static_value =
        |s: usize, v: AdaptedVector| required_sup(base, s, family.at(s), &zeros.with_part(v));
    let mut acc = static_value(horizon - 1, x.at(horizon).clone())?;
    for s in (t..horizon - 1).rev() {
        let offset = static_value(s + 1, AdaptedVector::zeros(tree, s + 2))?;
        let y = x.at(s + 1) - &offset;
        acc = static_value(s, &y + &acc)?;
    }
    Ok(acc)
}

/// Static set `U^ς_{t+1}(V) = U_{t+1}(V, 0, …, 0)` read off the consolidated
/// set of a weakly recursive measure. Rebuilding recursively from it
/// reproduces the measure.
#[derive(Clone)]
pub struct StaticRepresentation {
    consolidated: ConsolidatedSet,
}

impl StaticRepresentation {
    fn truncated(&self, t: usize, x: &AdaptedProcess) -> AdaptedProcess {
        AdaptedProcess::zeros(self.tree()).with_part(x.at(t).clone())
    }
}

impl DynamicSet for StaticRepresentation {
    fn describe(&self) -> String {
        format!(
            "static_representation({})",
            self.consolidated.measure.set.describe()
        )
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        self.consolidated.tree()
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
        check_member_args(self.tree(), t, y, x)?;
        self.consolidated.contains(t, y, &self.truncated(t, x), tol)
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(self.tree(), t)?;
        self.consolidated.sup(t, probe, &self.truncated(t, x))
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        check_set_time(self.tree(), t)?;
        self.consolidated
            .sample_member(t, &self.truncated(t, x), rng, boundary)
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        check_member_args(self.tree(), t, z, x)?;
        self.consolidated
            .dominated(t, z, &self.truncated(t, x), tol)
    }
}

/// Static representation of `measure`, refused when the R-level
/// weak-recursiveness check finds a counterexample.
pub fn static_representation(
    measure: Arc<RobustRiskMeasure>,
    spec: &CheckSpec,
) -> Result<StaticRepresentation> {
    let verdict = properties::check_measure_tc(&measure, TcId::WeakRecursive, spec)?;
    if let Some(witness) = verdict.witness() {
        return Err(Error::NotWeaklyRecursive {
            detail: witness.summary(),
        });
    }
    Ok(StaticRepresentation {
        consolidated: ConsolidatedSet::new(measure),
    })
}
