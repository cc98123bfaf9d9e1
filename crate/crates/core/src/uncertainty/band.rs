//! Upper band around the conditional expectation of the remaining sum.
//!
//! `u_t(X_{t:T}) = {Y : Y ≤ E[Σ_{i≥t} X_i | F_t] + ε_{t−1}}` with an
//! arbitrary real offset `ε_{t−1}` per time-`t−1` atom. The set depends on
//! the whole tail, so it is not static. Under the expectation its robust
//! measure is `R_{t,T}(X) = E[Σ_{i>t} X_i | F_t] + ε_t`, which is strongly
//! time-consistent exactly when every later offset has zero conditional
//! mean.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::riskmeasures::RiskKind;
use crate::sampling::CrateRng;
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};

use super::{assemble, check_member_args, check_set_time, Dominance, DynamicSet};

#[derive(Debug, Clone)]
pub struct ExpectationBand {
    tree: Arc<ScenarioTree>,
    offsets: Vec<AdaptedVector>,
}

impl ExpectationBand {
    /// `offsets[s]` is `ε_s`, a time-`s` vector, for `s ∈ 0..T`.
    pub fn new(tree: Arc<ScenarioTree>, offsets: Vec<AdaptedVector>) -> Result<Self> {
        if offsets.len() != tree.horizon() {
            return Err(Error::SetLength {
                expected: tree.horizon(),
                found: offsets.len(),
            });
        }
        for (s, v) in offsets.iter().enumerate() {
            tree.check_vector(v, s)?;
        }
        Ok(Self { tree, offsets })
    }

    pub fn offsets(&self) -> &[AdaptedVector] {
        &self.offsets
    }

    /// Upper edge `E[Σ_{i≥t} X_i | F_t] + ε_{t−1}` as a time-`t` vector.
    pub fn ceiling(&self, t: usize, x: &AdaptedProcess) -> AdaptedVector {
        let tree = &self.tree;
        let mut acc = AdaptedVector::zeros(tree, t);
        for i in t..=tree.horizon() {
            acc = &acc + &tree.conditional_expectation(x.at(i), t);
        }
        &acc + &tree.lift(&self.offsets[t - 1], t)
    }

    /// Whether `E[ε_s | F_t] = 0` for all `t < s ≤ T−1`, within `tol`.
    pub fn offsets_centered(&self, tol: f64) -> bool {
        (1..self.tree.horizon()).all(|s| {
            (0..s).all(|t| {
                self.tree
                    .conditional_expectation(&self.offsets[s], t)
                    .values()
                    .iter()
                    .all(|v| v.abs() <= tol)
            })
        })
    }
}

impl DynamicSet for ExpectationBand {
    fn describe(&self) -> String {
        "expectation_band".to_string()
    }

    fn tree(&self) -> &Arc<ScenarioTree> {
        &self.tree
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
        check_member_args(&self.tree, t, y, x)?;
        let top = self.ceiling(t, x);
        Ok((0..self.tree.width(t - 1))
            .map(|i| {
                self.tree
                    .child_values(y, i)
                    .iter()
                    .zip(self.tree.child_values(&top, i))
                    .all(|(a, b)| *a <= b + tol)
            })
            .collect())
    }

    fn sup(&self, t: usize, probe: &RiskKind, x: &AdaptedProcess) -> Result<Vec<Option<f64>>> {
        check_set_time(&self.tree, t)?;
        self.tree.check_process(x)?;
        let top = self.ceiling(t, x);
        Ok((0..self.tree.width(t - 1))
            .map(|i| {
                Some(probe.eval(
                    &self.tree.child_values(&top, i),
                    &self.tree.child_probs(t - 1, i),
                ))
            })
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
        let top = self.ceiling(t, x);
        let blocks = (0..self.tree.width(t - 1))
            .map(|i| {
                self.tree
                    .child_values(&top, i)
                    .into_iter()
                    .map(|v| {
                        if boundary && rng.gen_bool(0.7) {
                            v
                        } else {
                            v - rng.gen::<f64>()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Some(assemble(&self.tree, t, blocks)))
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
