//! Transformed views of a time-`t` uncertainty set and sampled set
//! comparisons.
//!
//! A view assigns to every time-`t−1` parent a source process, a scale
//! `λ ≥ 0` and a shift `c`, and stands for the set whose block on that
//! parent is `λ·u_t(source) + c`. Scale zero means the singleton `{c}`.
//! Views express the right-hand sides of the set axioms (shifted sets,
//! scaled sets, sets glued along an event) without materializing them.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::riskmeasures::RiskKind;
use crate::sampling::CrateRng;
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};
use crate::uncertainty::{assemble, Dominance, DynamicSet};

/// Probes whose suprema are compared between sets. All are positively
/// homogeneous, so suprema transform exactly under scaling.
pub(crate) const PROBES: [RiskKind; 4] = [
    RiskKind::Expectation,
    RiskKind::Cvar { alpha: 0.5 },
    RiskKind::Cvar { alpha: 0.9 },
    RiskKind::WorstCase,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Part {
    pub source: usize,
    pub scale: f64,
    pub shift: f64,
}

impl Part {
    pub fn identity(source: usize) -> Self {
        Self {
            source,
            scale: 1.0,
            shift: 0.0,
        }
    }
}

pub(crate) struct SetView<'a> {
    set: &'a dyn DynamicSet,
    t: usize,
    sources: Vec<AdaptedProcess>,
    parts: Vec<Part>,
}

/// A failed comparison: how far the violation exceeds the tolerance band,
/// what failed, and the offending candidate if there is one.
#[derive(Debug, Clone)]
pub(crate) struct Finding {
    pub gap: f64,
    pub detail: String,
    pub candidate: Option<AdaptedVector>,
}

impl<'a> SetView<'a> {
    pub fn plain(set: &'a dyn DynamicSet, t: usize, x: AdaptedProcess) -> Self {
        let parts = vec![Part::identity(0); set.tree().width(t - 1)];
        Self::new(set, t, vec![x], parts)
    }

    pub fn new(
        set: &'a dyn DynamicSet,
        t: usize,
        sources: Vec<AdaptedProcess>,
        parts: Vec<Part>,
    ) -> Self {
        debug_assert_eq!(parts.len(), set.tree().width(t - 1));
        Self {
            set,
            t,
            sources,
            parts,
        }
    }

    fn tree(&self) -> &ScenarioTree {
        self.set.tree()
    }

    /// Parents with positive scale grouped by (source, scale).
    fn groups(&self) -> BTreeMap<(usize, u64), Vec<usize>> {
        let mut groups: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
        for (i, part) in self.parts.iter().enumerate() {
            if part.scale > 0.0 {
                groups
                    .entry((part.source, part.scale.to_bits()))
                    .or_default()
                    .push(i);
            }
        }
        groups
    }

    /// `(v − c)/λ` on the children of `parents`, `v` elsewhere.
    fn preimage(&self, v: &AdaptedVector, parents: &[usize]) -> AdaptedVector {
        let tree = self.tree();
        let mut values = v.values().to_vec();
        for &i in parents {
            let part = self.parts[i];
            for &k in tree.child_indices(self.t - 1, i) {
                values[k] = (values[k] - part.shift) / part.scale;
            }
        }
        AdaptedVector::from_parts(self.t, values)
    }

    pub fn contains(&self, y: &AdaptedVector, tol: f64) -> Result<Vec<bool>> {
        let tree = self.tree();
        let mut out = vec![false; tree.width(self.t - 1)];
        for (i, part) in self.parts.iter().enumerate() {
            if part.scale == 0.0 {
                out[i] = tree
                    .child_values(y, i)
                    .iter()
                    .all(|v| (v - part.shift).abs() <= tol);
            }
        }
        for ((source, bits), parents) in self.groups() {
            let scale = f64::from_bits(bits);
            let pre = self.preimage(y, &parents);
            let inside = self
                .set
                .contains(self.t, &pre, &self.sources[source], tol / scale)?;
            for i in parents {
                out[i] = inside[i];
            }
        }
        Ok(out)
    }

    pub fn sup(&self, probe: &RiskKind) -> Result<Vec<Option<f64>>> {
        let mut per_source: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.parts.len());
        for (i, part) in self.parts.iter().enumerate() {
            if part.scale == 0.0 {
                out.push(Some(part.shift));
                continue;
            }
            if let Entry::Vacant(slot) = per_source.entry(part.source) {
                slot.insert(self.set.sup(self.t, probe, &self.sources[part.source])?);
            }
            out.push(per_source[&part.source][i].map(|v| part.scale * v + part.shift));
        }
        Ok(out)
    }

    pub fn sample(&self, rng: &mut CrateRng, boundary: bool) -> Result<Option<AdaptedVector>> {
        let tree = self.tree();
        let mut members: BTreeMap<usize, AdaptedVector> = BTreeMap::new();
        let mut blocks = Vec::with_capacity(self.parts.len());
        for (i, part) in self.parts.iter().enumerate() {
            let n = tree.child_indices(self.t - 1, i).len();
            if part.scale == 0.0 {
                blocks.push(vec![part.shift; n]);
                continue;
            }
            if let Entry::Vacant(slot) = members.entry(part.source) {
                match self
                    .set
                    .sample_member(self.t, &self.sources[part.source], rng, boundary)?
                {
                    Some(member) => {
                        slot.insert(member);
                    }
                    None => return Ok(None),
                }
            }
            let block = tree
                .child_values(&members[&part.source], i)
                .into_iter()
                .map(|v| part.scale * v + part.shift)
                .collect();
            blocks.push(block);
        }
        Ok(Some(assemble(tree, self.t, blocks)))
    }

    pub fn dominated(&self, z: &AdaptedVector, tol: f64) -> Result<Vec<Dominance>> {
        let tree = self.tree();
        let mut out = vec![Dominance::No; tree.width(self.t - 1)];
        for (i, part) in self.parts.iter().enumerate() {
            if part.scale == 0.0
                && tree
                    .child_values(z, i)
                    .iter()
                    .all(|v| *v <= part.shift + tol)
            {
                out[i] = Dominance::Yes;
            }
        }
        for ((source, bits), parents) in self.groups() {
            let scale = f64::from_bits(bits);
            let pre = self.preimage(z, &parents);
            let verdict = self
                .set
                .dominated(self.t, &pre, &self.sources[source], tol / scale)?;
            for i in parents {
                out[i] = verdict[i];
            }
        }
        Ok(out)
    }
}

/// Smallest tolerance at which `accepts` holds, searched upwards from `tol`.
/// Infinite when even a huge band does not help.
pub(crate) fn threshold(tol: f64, mut accepts: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    let mut lo = tol;
    let mut hi = (2.0 * tol).max(1e-6);
    while !accepts(hi)? {
        lo = hi;
        hi *= 4.0;
        if hi > 1e6 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if accepts(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn probe_excess(left: &SetView, right: &SetView, tol: f64) -> Result<Option<Finding>> {
    for probe in &PROBES {
        let a = left.sup(probe)?;
        let b = right.sup(probe)?;
        for (i, (sa, sb)) in a.iter().zip(&b).enumerate() {
            if let (Some(sa), Some(sb)) = (sa, sb) {
                if *sa > *sb + tol {
                    return Ok(Some(Finding {
                        gap: sa - sb,
                        detail: format!(
                            "sup of {} is {sa} on the left but {sb} on the right at parent {i}",
                            probe.label()
                        ),
                        candidate: None,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Sampled test of `left ⊆ right`: probe suprema, then members of `left`
/// (every fifth drawn at the boundary) tested for membership in `right`.
pub(crate) fn inclusion(
    left: &SetView,
    right: &SetView,
    members: usize,
    tol: f64,
    rng: &mut CrateRng,
) -> Result<Option<Finding>> {
    if let Some(finding) = probe_excess(left, right, tol)? {
        return Ok(Some(finding));
    }
    for k in 0..members {
        let Some(y) = left.sample(rng, k % 5 == 0)? else {
            continue;
        };
        let inside = right.contains(&y, tol)?;
        if let Some(i) = inside.iter().position(|b| !b) {
            let gap = threshold(tol, |band| Ok(right.contains(&y, band)?[i]))?;
            return Ok(Some(Finding {
                gap,
                detail: format!("member of the left set lies outside the right set at parent {i}"),
                candidate: Some(y),
            }));
        }
    }
    Ok(None)
}

/// Sampled set equality: inclusion both ways.
pub(crate) fn equality(
    left: &SetView,
    right: &SetView,
    members: usize,
    tol: f64,
    rng: &mut CrateRng,
) -> Result<Option<Finding>> {
    if let Some(finding) = inclusion(left, right, members, tol, rng)? {
        return Ok(Some(finding));
    }
    Ok(inclusion(right, left, members, tol, rng)?.map(|mut f| {
        f.detail = format!("reverse inclusion: {}", f.detail);
        f
    }))
}

/// Sampled test that every member of `left` is dominated by a member of
/// `right`. Monotone probes refute it through suprema; sampled members are
/// refuted only on a definite `No` from the dominance oracle.
pub(crate) fn dominance(
    left: &SetView,
    right: &SetView,
    members: usize,
    tol: f64,
    rng: &mut CrateRng,
) -> Result<Option<Finding>> {
    if let Some(finding) = probe_excess(left, right, tol)? {
        return Ok(Some(finding));
    }
    for k in 0..members {
        let Some(z) = left.sample(rng, k % 5 == 0)? else {
            continue;
        };
        let verdict = right.dominated(&z, tol)?;
        if let Some(i) = verdict.iter().position(|d| *d == Dominance::No) {
            let gap = threshold(tol, |band| {
                Ok(right.dominated(&z, band)?[i] != Dominance::No)
            })?;
            return Ok(Some(Finding {
                gap,
                detail: format!("no member of the right set dominates a left member at parent {i}"),
                candidate: Some(z),
            }));
        }
    }
    Ok(None)
}
