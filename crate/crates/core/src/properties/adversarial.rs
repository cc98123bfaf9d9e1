//! Uncertainty sets that produce the same robust values as a given one
//! while breaking a chosen set axiom.
//!
//! Robust values only see the consolidated set, so set-level axioms are not
//! determined by `R`. Each flavor here keeps `R` fixed and fails one
//! property check.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_set_property, CheckSpec, SetProperty};
use crate::error::{Error, Result};
use crate::riskmeasures::{evaluate_one_step, RiskKind};
use crate::robust::{ConsolidatedSet, RobustRiskMeasure};
use crate::sampling::CrateRng;
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};
use crate::uncertainty::{check_member_args, check_set_time, Dominance, DynamicSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    BreakNormalisation,
    BreakOrder,
    BreakTranslation,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [
        Flavor::BreakNormalisation,
        Flavor::BreakOrder,
        Flavor::BreakTranslation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Flavor::BreakNormalisation => "break-normalisation",
            Flavor::BreakOrder => "break-order",
            Flavor::BreakTranslation => "break-translation",
        }
    }

    /// The set property the flavor breaks.
    pub fn target(&self) -> SetProperty {
        match self {
            Flavor::BreakNormalisation => SetProperty::Normalisation,
            Flavor::BreakOrder => SetProperty::OrderPreservation,
            Flavor::BreakTranslation => SetProperty::TranslationInvariance,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Flavor::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::UnknownProperty {
                name: s.to_string(),
            })
    }
}

/// Largest tail value for which [`Flavor::BreakTranslation`] keeps the
/// original set.
pub const TRANSLATION_SWITCH: f64 = 0.75;

/// A set `u*` with `R^{u*} = R^u` that fails `flavor`'s target property.
///
/// * break-normalisation: `u* = U`, the consolidated set. Applies only when
///   `u` passes the normalisation check under `spec`.
/// * break-order: the singleton `{R_{t−1}(X) + G − ρ_{t−1}(G)}` with
///   `G = −2 X_t`, whose members decrease when `X` increases.
/// * break-translation: `u` while every tail value is at most
///   [`TRANSLATION_SWITCH`], `U` otherwise.
pub fn adversarial_equivalent_set(
    measure: &Arc<RobustRiskMeasure>,
    flavor: Flavor,
    spec: &CheckSpec,
) -> Result<Arc<dyn DynamicSet>> {
    let consolidated = ConsolidatedSet::new(measure.clone());
    Ok(match flavor {
        Flavor::BreakNormalisation => {
            let verdict =
                check_set_property(measure.set().as_ref(), SetProperty::Normalisation, spec)?;
            if verdict.is_counterexample() {
                return Err(Error::FlavorInapplicable {
                    flavor: flavor.name().to_string(),
                    reason: "the set is already not normalised".to_string(),
                });
            }
            Arc::new(consolidated)
        }
        Flavor::BreakOrder => Arc::new(ReversedSingleton {
            measure: measure.clone(),
        }),
        Flavor::BreakTranslation => Arc::new(SwitchedSet {
            inner: measure.set().clone(),
            consolidated,
            switch: TRANSLATION_SWITCH,
        }),
    })
}

struct ReversedSingleton {
    measure: Arc<RobustRiskMeasure>,
}

impl ReversedSingleton {
    fn member(&self, t: usize, x: &AdaptedProcess) -> Result<AdaptedVector> {
        check_set_time(self.tree(), t)?;
        let tree = self.tree();
        let g = x.at(t) * -2.0;
        let risk = evaluate_one_step(self.measure.family().at(t - 1), tree, &g)?;
        let r = self.measure.robust_value(t - 1, x)?;
        Ok(&g + &tree.lift(&(&r - &risk), t))
    }
}

impl DynamicSet for ReversedSingleton {
    fn describe(&self) -> String {
        format!("reversed_singleton({})", self.measure.set().describe())
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        self.measure.tree()
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
        check_member_args(self.tree(), t, y, x)?;
        let m = self.member(t, x)?;
        let tree = self.tree();
        Ok((0..tree.width(t - 1))
            .map(|i| {
                tree.child_indices(t - 1, i)
                    .iter()
                    .all(|&k| (y.value(k) - m.value(k)).abs() <= tol)
            })
            .collect())
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        let m = self.member(t, x)?;
        Ok(evaluate_one_step(probe, self.tree(), &m)?
            .values()
            .iter()
            .map(|v| Some(*v))
            .collect())
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        _rng: &mut CrateRng,
        _boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        Ok(Some(self.member(t, x)?))
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        check_member_args(self.tree(), t, z, x)?;
        let m = self.member(t, x)?;
        let tree = self.tree();
        Ok((0..tree.width(t - 1))
            .map(|i| {
                let below = tree
                    .child_indices(t - 1, i)
                    .iter()
                    .all(|&k| z.value(k) <= m.value(k) + tol);
                if below {
                    Dominance::Yes
                } else {
                    Dominance::No
                }
            })
            .collect())
    }
}

struct SwitchedSet {
    inner: Arc<dyn DynamicSet>,
    consolidated: ConsolidatedSet,
    switch: f64,
}

impl SwitchedSet {
    fn pick(&self, t: usize, x: &AdaptedProcess) -> &dyn DynamicSet {
        let small = x.parts()[t..]
            .iter()
            .all(|v| v.values().iter().all(|&a| a <= self.switch));
        if small {
            self.inner.as_ref()
        } else {
            &self.consolidated
        }
    }
}

impl DynamicSet for SwitchedSet {
    fn describe(&self) -> String {
        format!("switched({}, above {})", self.inner.describe(), self.switch)
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        self.inner.tree()
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
        check_member_args(self.tree(), t, y, x)?;
        self.pick(t, x).contains(t, y, x, tol)
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(self.tree(), t)?;
        self.pick(t, x).sup(t, probe, x)
    }

    fn sample_member(
        &self,
        t: usize,
        x: &AdaptedProcess,
        rng: &mut CrateRng,
        boundary: bool,
    ) -> Result<Option<AdaptedVector>> {
        check_set_time(self.tree(), t)?;
        self.pick(t, x).sample_member(t, x, rng, boundary)
    }

    fn dominated(
        &self,
        t: usize,
        z: &AdaptedVector,
        x: &AdaptedProcess,
        tol: f64,
    ) -> Result<Vec<Dominance>> {
        check_member_args(self.tree(), t, z, x)?;
        self.pick(t, x).dominated(t, z, x, tol)
    }
}
