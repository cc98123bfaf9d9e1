//! Finite filtered probability spaces.
//!
//! A [`ScenarioTree`] stores the atoms of every time slice together with
//! their parent links and conditional probabilities. Atoms at time `t` are
//! the cells of the partition generating the information available at `t`;
//! inside a slice they are indexed `0..width(t)` in lexicographic id order.
//!
//! [`AdaptedVector`] holds one value per atom of a slice, [`AdaptedProcess`]
//! one vector per time `0..=T`. Every type here is immutable once built and
//! safe to share across threads.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for value comparisons unless a caller overrides it.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Allowed deviation of a sibling probability sum from one.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Input record describing one atom of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// Opaque identifier, unique across the tree.
    pub id: String,
    /// Time slice the atom belongs to.
    pub time: usize,
    /// Identifier of the parent atom; absent exactly for the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    /// Probability of the atom conditional on its parent (1 for the root).
    pub prob: f64,
}

/// Position of an atom: its time slice and its index inside the slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub time: usize,
    pub index: usize,
}

impl Node {
    pub fn new(time: usize, index: usize) -> Self {
        Self { time, index }
    }
}

/// A finite scenario tree with a single root and strictly positive
/// conditional probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    horizon: usize,
    ids: Vec<Vec<String>>,
    parents: Vec<Vec<usize>>,
    probs: Vec<Vec<f64>>,
    children: Vec<Vec<Vec<usize>>>,
    path_probs: Vec<Vec<f64>>,
}

impl ScenarioTree {
    /// Validates the atom list and builds the tree.
    ///
    /// The root probability is ignored (it is always one).
    pub fn new(horizon: usize, atoms: Vec<AtomSpec>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        let mut seen = HashMap::new();
        for atom in &atoms {
            if atom.time > horizon {
                return Err(Error::AtomTime {
                    id: atom.id.clone(),
                    time: atom.time,
                    horizon,
                });
            }
            if seen.insert(atom.id.clone(), atom.time).is_some() {
                return Err(Error::DuplicateAtom {
                    id: atom.id.clone(),
                });
            }
        }
        let roots = atoms.iter().filter(|a| a.time == 0).count();
        if roots != 1 {
            return Err(Error::RootCount { count: roots });
        }

        let mut ids: Vec<Vec<String>> = vec![Vec::new(); horizon + 1];
        for atom in &atoms {
            ids[atom.time].push(atom.id.clone());
        }
        for slice in &mut ids {
            slice.sort();
        }
        let position: HashMap<&str, usize> = ids
            .iter()
            .flat_map(|slice| slice.iter().enumerate().map(|(i, id)| (id.as_str(), i)))
            .collect();

        let mut parents: Vec<Vec<usize>> = ids.iter().map(|s| vec![0; s.len()]).collect();
        let mut probs: Vec<Vec<f64>> = ids.iter().map(|s| vec![1.0; s.len()]).collect();
        for atom in &atoms {
            let index = position[atom.id.as_str()];
            if atom.time == 0 {
                if atom.parent.is_some() {
                    return Err(Error::RootWithParent {
                        id: atom.id.clone(),
                    });
                }
                continue;
            }
            let parent = atom.parent.as_ref().ok_or_else(|| Error::MissingParent {
                id: atom.id.clone(),
                time: atom.time,
            })?;
            let parent_time = *seen.get(parent).ok_or_else(|| Error::UnknownParent {
                id: atom.id.clone(),
                parent: parent.clone(),
            })?;
            if parent_time + 1 != atom.time {
                return Err(Error::ParentTime {
                    id: atom.id.clone(),
                    time: atom.time,
                    parent: parent.clone(),
                    parent_time,
                    expected: atom.time - 1,
                });
            }
            if !(atom.prob > 0.0 && atom.prob <= 1.0 && atom.prob.is_finite()) {
                return Err(Error::NonPositiveProbability {
                    id: atom.id.clone(),
                    prob: atom.prob,
                });
            }
            parents[atom.time][index] = position[parent.as_str()];
            probs[atom.time][index] = atom.prob;
        }

        let mut children: Vec<Vec<Vec<usize>>> =
            ids.iter().map(|s| vec![Vec::new(); s.len()]).collect();
        for t in 1..=horizon {
            for (i, &parent) in parents[t].iter().enumerate() {
                children[t - 1][parent].push(i);
            }
        }
        for t in 0..horizon {
            for (i, kids) in children[t].iter().enumerate() {
                if kids.is_empty() {
                    return Err(Error::DeadEnd {
                        id: ids[t][i].clone(),
                        time: t,
                        horizon,
                    });
                }
                let sum: f64 = kids.iter().map(|&k| probs[t + 1][k]).sum();
                if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    return Err(Error::ProbabilitySum {
                        parent: ids[t][i].clone(),
                        sum,
                    });
                }
            }
        }

        let mut path_probs = vec![vec![1.0]];
        for t in 1..=horizon {
            let row = (0..ids[t].len())
                .map(|i| path_probs[t - 1][parents[t][i]] * probs[t][i])
                .collect();
            path_probs.push(row);
        }

        Ok(Self {
            horizon,
            ids,
            parents,
            probs,
            children,
            path_probs,
        })
    }

    /// Builds a tree where every atom at time `t` has `branching[t]` equally
    /// likely children. Ids are dotted paths such as `r.0.1`.
    pub fn uniform(branching: &[usize]) -> Result<Self> {
        let levels: Vec<Vec<f64>> = branching
            .iter()
            .map(|&b| vec![1.0 / b.max(1) as f64; b])
            .collect();
        Self::from_levels(&levels)
    }

    /// Builds a tree where every atom at time `t` has children with the
    /// conditional probabilities `levels[t]`.
    pub fn from_levels(levels: &[Vec<f64>]) -> Result<Self> {
        let mut atoms = vec![AtomSpec {
            id: "r".to_string(),
            time: 0,
            parent: None,
            prob: 1.0,
        }];
        let mut frontier = vec!["r".to_string()];
        for (t, probs) in levels.iter().enumerate() {
            let mut next = Vec::new();
            for parent in &frontier {
                for (k, &p) in probs.iter().enumerate() {
                    let id = child_id(parent, k, probs.len());
                    atoms.push(AtomSpec {
                        id: id.clone(),
                        time: t + 1,
                        parent: Some(parent.clone()),
                        prob: p,
                    });
                    next.push(id);
                }
            }
            frontier = next;
        }
        Self::new(levels.len(), atoms)
    }

    /// The atom records in deterministic (time, id) order.
    pub fn atom_specs(&self) -> Vec<AtomSpec> {
        let mut out = Vec::new();
        for t in 0..=self.horizon {
            for i in 0..self.width(t) {
                out.push(AtomSpec {
                    id: self.ids[t][i].clone(),
                    time: t,
                    parent: (t > 0).then(|| self.ids[t - 1][self.parents[t][i]].clone()),
                    prob: self.probs[t][i],
                });
            }
        }
        out
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of atoms at time `t`.
    pub fn width(&self, t: usize) -> usize {
        self.ids[t].len()
    }

    /// Total number of atoms.
    pub fn size(&self) -> usize {
        self.ids.iter().map(Vec::len).sum()
    }

    pub fn id(&self, node: Node) -> &str {
        &self.ids[node.time][node.index]
    }

    /// Ids of the atoms at time `t`, in index order.
    pub fn ids_at(&self, t: usize) -> &[String] {
        &self.ids[t]
    }

    /// Looks an atom up by id.
    pub fn node(&self, id: &str) -> Option<Node> {
        self.ids.iter().enumerate().find_map(|(t, slice)| {
            slice
                .binary_search_by(|probe| probe.as_str().cmp(id))
                .ok()
                .map(|i| Node::new(t, i))
        })
    }

    /// Probability of the atom conditional on its parent.
    pub fn cond_prob(&self, node: Node) -> f64 {
        self.probs[node.time][node.index]
    }

    /// Unconditional probability of the atom.
    pub fn path_prob(&self, node: Node) -> f64 {
        self.path_probs[node.time][node.index]
    }

    pub fn parent(&self, node: Node) -> Option<Node> {
        (node.time > 0).then(|| Node::new(node.time - 1, self.parents[node.time][node.index]))
    }

    /// Indices (inside slice `t + 1`) of the children of atom `(t, index)`.
    /// Empty for terminal atoms.
    pub fn child_indices(&self, t: usize, index: usize) -> &[usize] {
        if t >= self.horizon {
            &[]
        } else {
            &self.children[t][index]
        }
    }

    /// Conditional probabilities of the children of atom `(t, index)`.
    pub fn child_probs(&self, t: usize, index: usize) -> Vec<f64> {
        self.child_indices(t, index)
            .iter()
            .map(|&k| self.probs[t + 1][k])
            .collect()
    }

    /// Children of an atom together with their conditional probabilities.
    pub fn children(&self, node: Node) -> Result<Vec<(Node, f64)>> {
        if node.time >= self.horizon {
            return Err(Error::TerminalAtom {
                id: self.id(node).to_string(),
            });
        }
        Ok(self.children[node.time][node.index]
            .iter()
            .map(|&k| (Node::new(node.time + 1, k), self.probs[node.time + 1][k]))
            .collect())
    }

    /// Index at time `s` of the ancestor of atom `(t, index)`; `s <= t`.
    pub fn ancestor(&self, t: usize, index: usize, s: usize) -> usize {
        debug_assert!(s <= t);
        let mut i = index;
        for time in (s + 1..=t).rev() {
            i = self.parents[time][i];
        }
        i
    }

    /// Largest number of children of any non-terminal atom.
    pub fn max_branching(&self) -> usize {
        self.children
            .iter()
            .flat_map(|slice| slice.iter().map(Vec::len))
            .max()
            .unwrap_or(0)
    }

    /// Re-expresses a time-`s` vector as a time-`t` vector (`t >= s`): each
    /// atom receives the value of its time-`s` ancestor.
    pub fn lift(&self, v: &AdaptedVector, t: usize) -> AdaptedVector {
        assert!(
            t >= v.time,
            "cannot lift time {} to earlier time {t}",
            v.time
        );
        let values = (0..self.width(t))
            .map(|i| v.values[self.ancestor(t, i, v.time)])
            .collect();
        AdaptedVector { time: t, values }
    }

    /// Conditional expectation of a time-`s` vector given the information
    /// at time `t <= s`, by backward one-step averaging.
    pub fn conditional_expectation(&self, z: &AdaptedVector, t: usize) -> AdaptedVector {
        assert!(
            t <= z.time,
            "conditioning time {t} exceeds vector time {}",
            z.time
        );
        let mut current = z.clone();
        while current.time > t {
            let s = current.time - 1;
            let values = (0..self.width(s))
                .map(|i| {
                    self.children[s][i]
                        .iter()
                        .map(|&k| self.probs[s + 1][k] * current.values[k])
                        .sum()
                })
                .collect();
            current = AdaptedVector { time: s, values };
        }
        current
    }

    /// Values of `v` (time `t + 1`) on the children of atom `(t, index)`.
    pub fn child_values(&self, v: &AdaptedVector, index: usize) -> Vec<f64> {
        debug_assert!(v.time >= 1);
        self.child_indices(v.time - 1, index)
            .iter()
            .map(|&k| v.values[k])
            .collect()
    }

    pub(crate) fn check_vector(&self, v: &AdaptedVector, time: usize) -> Result<()> {
        if v.time != time {
            return Err(Error::TimeMismatch {
                expected: time,
                found: v.time,
            });
        }
        if v.values.len() != self.width(time) {
            return Err(Error::Shape {
                time,
                expected: self.width(time),
                found: v.values.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_process(&self, x: &AdaptedProcess) -> Result<()> {
        if x.parts.len() != self.horizon + 1 {
            return Err(Error::ProcessLength {
                expected: self.horizon + 1,
                found: x.parts.len(),
            });
        }
        for (t, part) in x.parts.iter().enumerate() {
            self.check_vector(part, t)?;
        }
        Ok(())
    }
}

pub(crate) fn child_id(parent: &str, k: usize, siblings: usize) -> String {
    // Zero-pad so lexicographic order matches numeric order.
    let digits = siblings.saturating_sub(1).to_string().len();
    format!("{parent}.{k:0digits$}")
}

/// A random variable measurable with respect to the time-`t` partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedVector {
    time: usize,
    values: Vec<f64>,
}

impl AdaptedVector {
    /// Builds a vector, validating its shape against the tree and requiring
    /// finite values.
    pub fn new(tree: &ScenarioTree, time: usize, values: Vec<f64>) -> Result<Self> {
        if time > tree.horizon() {
            return Err(Error::TimeIndex {
                time,
                horizon: tree.horizon(),
            });
        }
        if let Some(&value) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time, value });
        }
        let v = Self { time, values };
        tree.check_vector(&v, time)?;
        Ok(v)
    }

    /// Builds a vector from raw parts without validation; used internally
    /// where shapes are correct by construction.
    pub(crate) fn from_parts(time: usize, values: Vec<f64>) -> Self {
        Self { time, values }
    }

    pub fn zeros(tree: &ScenarioTree, time: usize) -> Self {
        Self::constant(tree, time, 0.0)
    }

    pub fn constant(tree: &ScenarioTree, time: usize, c: f64) -> Self {
        Self {
            time,
            values: vec![c; tree.width(time)],
        }
    }

    /// Builds a vector from a map atom id → value covering the whole slice.
    pub fn from_ids(tree: &ScenarioTree, time: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        let values = tree
            .ids_at(time)
            .iter()
            .map(|id| {
                map.get(id)
                    .copied()
                    .ok_or_else(|| Error::UnknownAtom { id: id.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        if map.len() != values.len() {
            let stray = map
                .keys()
                .find(|k| tree.node(k).map(|n| n.time) != Some(time))
                .cloned()
                .unwrap_or_default();
            return Err(Error::UnknownAtom { id: stray });
        }
        Self::new(tree, time, values)
    }

    /// The values keyed by atom id.
    pub fn to_ids(&self, tree: &ScenarioTree) -> BTreeMap<String, f64> {
        tree.ids_at(self.time)
            .iter()
            .cloned()
            .zip(self.values.iter().copied())
            .collect()
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            time: self.time,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two vectors of the same slice elementwise.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(
            self.time, other.time,
            "vectors live on different time slices"
        );
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "vector shapes differ"
        );
        Self {
            time: self.time,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for &AdaptedVector {
    type Output = AdaptedVector;
    fn add(self, rhs: Self) -> AdaptedVector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &AdaptedVector {
    type Output = AdaptedVector;
    fn sub(self, rhs: Self) -> AdaptedVector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &AdaptedVector {
    type Output = AdaptedVector;
    fn mul(self, rhs: f64) -> AdaptedVector {
        self.map(|v| v * rhs)
    }
}

impl Neg for &AdaptedVector {
    type Output = AdaptedVector;
    fn neg(self) -> AdaptedVector {
        self.map(|v| -v)
    }
}

/// An adapted process `(X_0, ..., X_T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedProcess {
    parts: Vec<AdaptedVector>,
}

impl AdaptedProcess {
    /// The zero process.
    pub fn zeros(tree: &ScenarioTree) -> Self {
        Self {
            parts: (0..=tree.horizon())
                .map(|t| AdaptedVector::zeros(tree, t))
                .collect(),
        }
    }

    /// Builds a process from its components; component `t` must live at time `t`.
    pub fn new(tree: &ScenarioTree, parts: Vec<AdaptedVector>) -> Result<Self> {
        let x = Self { parts };
        tree.check_process(&x)?;
        Ok(x)
    }

    /// Builds a process from per-time value lists.
    pub fn from_values(tree: &ScenarioTree, values: Vec<Vec<f64>>) -> Result<Self> {
        let parts = values
            .into_iter()
            .enumerate()
            .map(|(t, v)| AdaptedVector::new(tree, t, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tree, parts)
    }

    pub(crate) fn from_parts(parts: Vec<AdaptedVector>) -> Self {
        Self { parts }
    }

    pub fn horizon(&self) -> usize {
        self.parts.len() - 1
    }

    /// Component at time `t`.
    pub fn at(&self, t: usize) -> &AdaptedVector {
        &self.parts[t]
    }

    pub fn parts(&self) -> &[AdaptedVector] {
        &self.parts
    }

    /// Projection `X_{t:s}`: components outside `[t, s]` are set to zero.
    pub fn slice(&self, t: usize, s: usize) -> Result<Self> {
        if t > s {
            return Err(Error::IndexRange { start: t, end: s });
        }
        if s > self.horizon() {
            return Err(Error::TimeIndex {
                time: s,
                horizon: self.horizon(),
            });
        }
        Ok(Self {
            parts: self
                .parts
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if (t..=s).contains(&i) {
                        v.clone()
                    } else {
                        v.map(|_| 0.0)
                    }
                })
                .collect(),
        })
    }

    /// Projection `X_{t:T}`.
    pub fn tail(&self, t: usize) -> Self {
        let horizon = self.horizon();
        self.slice(t.min(horizon), horizon)
            .expect("tail index within horizon")
    }

    /// Copy with component `t` replaced.
    pub fn with_part(&self, v: AdaptedVector) -> Self {
        let mut parts = self.parts.clone();
        let t = v.time();
        parts[t] = v;
        Self { parts }
    }

    /// Copy with `v` added to the component at `v`'s time.
    pub fn with_added(&self, v: &AdaptedVector) -> Self {
        let t = v.time();
        let sum = &self.parts[t] + v;
        self.with_part(sum)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        Self {
            parts: self.parts.iter().map(|v| v.map(f)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Self {
        assert_eq!(
            self.parts.len(),
            other.parts.len(),
            "process lengths differ"
        );
        Self {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.zip_with(b, f))
                .collect(),
        }
    }

    /// Multiplies component `i >= t` by the time-`t` scalar field `lambda`,
    /// lifted to each later slice.
    pub fn scaled_by(&self, tree: &ScenarioTree, lambda: &AdaptedVector) -> Self {
        let t = lambda.time();
        Self {
            parts: self
                .parts
                .iter()
                .map(|v| {
                    if v.time() < t {
                        v.clone()
                    } else {
                        v.zip_with(&tree.lift(lambda, v.time()), |a, l| a * l)
                    }
                })
                .collect(),
        }
    }

    /// Largest absolute componentwise difference over all times.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// True when every component of `self` is at most the matching one of
    /// `other`, within `tol`.
    pub fn le(&self, other: &Self, tol: f64) -> bool {
        self.parts.iter().zip(&other.parts).all(|(a, b)| {
            a.values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| *x <= *y + tol)
        })
    }
}

impl Add for &AdaptedProcess {
    type Output = AdaptedProcess;
    fn add(self, rhs: Self) -> AdaptedProcess {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &AdaptedProcess {
    type Output = AdaptedProcess;
    fn sub(self, rhs: Self) -> AdaptedProcess {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &AdaptedProcess {
    type Output = AdaptedProcess;
    fn mul(self, rhs: f64) -> AdaptedProcess {
        self.map(move |v| v * rhs)
    }
}

/// An event of the time-`t` partition: a subset of the atoms at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    time: usize,
    members: Vec<bool>,
}

impl EventSet {
    pub fn new(tree: &ScenarioTree, time: usize, members: Vec<bool>) -> Result<Self> {
        if time > tree.horizon() {
            return Err(Error::TimeIndex {
                time,
                horizon: tree.horizon(),
            });
        }
        if members.len() != tree.width(time) {
            return Err(Error::Shape {
                time,
                expected: tree.width(time),
                found: members.len(),
            });
        }
        Ok(Self { time, members })
    }

    pub fn full(tree: &ScenarioTree, time: usize) -> Self {
        Self {
            time,
            members: vec![true; tree.width(time)],
        }
    }

    pub fn empty(tree: &ScenarioTree, time: usize) -> Self {
        Self {
            time,
            members: vec![false; tree.width(time)],
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members[index]
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    /// Indicator vector `1_B` at the event's time.
    pub fn indicator(&self) -> AdaptedVector {
        AdaptedVector::from_parts(
            self.time,
            self.members
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

/// Children of an atom with their conditional probabilities.
pub fn children(tree: &ScenarioTree, node: Node) -> Result<Vec<(Node, f64)>> {
    tree.children(node)
}

/// `1_B X + 1_{B^c} Y`: on atoms descending from `B` the result follows `x`,
/// elsewhere (including all times before `B`'s) it follows `y`.
pub fn mix(
    tree: &ScenarioTree,
    event: &EventSet,
    x: &AdaptedProcess,
    y: &AdaptedProcess,
) -> Result<AdaptedProcess> {
    tree.check_process(x)?;
    tree.check_process(y)?;
    let parts = (0..=tree.horizon())
        .map(|t| {
            let values = (0..tree.width(t))
                .map(|i| {
                    let inside = t >= event.time && event.members[tree.ancestor(t, i, event.time)];
                    if inside {
                        x.at(t).value(i)
                    } else {
                        y.at(t).value(i)
                    }
                })
                .collect();
            AdaptedVector::from_parts(t, values)
        })
        .collect();
    Ok(AdaptedProcess::from_parts(parts))
}

/// Mixes two vectors of the same slice along an event of an earlier or
/// equal slice.
pub fn mix_vectors(
    tree: &ScenarioTree,
    event: &EventSet,
    x: &AdaptedVector,
    y: &AdaptedVector,
) -> AdaptedVector {
    let t = x.time();
    let values = (0..tree.width(t))
        .map(|i| {
            if event.members[tree.ancestor(t, i, event.time)] {
                x.value(i)
            } else {
                y.value(i)
            }
        })
        .collect();
    AdaptedVector::from_parts(t, values)
}

/// Conditional supremum norm `‖X_{t:s}‖`: on each time-`t` atom, the largest
/// `|X_i|` over descendants at times `i ∈ [t, s]`.
pub fn sup_norm(
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
    s: usize,
) -> Result<AdaptedVector> {
    if t > s {
        return Err(Error::IndexRange { start: t, end: s });
    }
    if s > tree.horizon() {
        return Err(Error::TimeIndex {
            time: s,
            horizon: tree.horizon(),
        });
    }
    tree.check_process(x)?;
    let mut out = vec![0.0f64; tree.width(t)];
    for i in t..=s {
        for (k, v) in x.at(i).values().iter().enumerate() {
            let a = tree.ancestor(i, k, t);
            out[a] = out[a].max(v.abs());
        }
    }
    Ok(AdaptedVector::from_parts(t, out))
}

/// Conditional law of a time-`t` vector on the children of `parent`
/// (a time-`t−1` atom): distinct values in ascending order with their
/// aggregated conditional probabilities.
pub fn conditional_law(
    tree: &ScenarioTree,
    x: &AdaptedVector,
    parent: Node,
) -> Result<Vec<(f64, f64)>> {
    if x.time() == 0 || parent.time + 1 != x.time() {
        return Err(Error::TimeMismatch {
            expected: parent.time + 1,
            found: x.time(),
        });
    }
    tree.check_vector(x, x.time())?;
    let values = tree.child_values(x, parent.index);
    let probs = tree.child_probs(parent.time, parent.index);
    Ok(discrete_law(&values, &probs))
}

/// Sorts `(value, prob)` pairs by value and merges equal values.
pub fn discrete_law(values: &[f64], probs: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut law: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (v, p) in pairs {
        match law.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => law.push((v, p)),
        }
    }
    law
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(depth: usize) -> ScenarioTree {
        ScenarioTree::uniform(&vec![2; depth]).unwrap()
    }

    #[test]
    fn binary_root_has_two_equal_children() {
        let tree = binary(2);
        let kids = children(&tree, Node::new(0, 0)).unwrap();
        assert_eq!(kids.len(), 2);
        assert!(kids.iter().all(|(_, p)| (*p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn chain_has_single_child() {
        let tree = ScenarioTree::uniform(&[1, 1]).unwrap();
        let kids = children(&tree, Node::new(1, 0)).unwrap();
        assert_eq!(kids, vec![(Node::new(2, 0), 1.0)]);
    }

    #[test]
    fn terminal_atom_has_no_children() {
        let tree = binary(1);
        let err = children(&tree, Node::new(1, 0)).unwrap_err();
        assert!(matches!(err, Error::TerminalAtom { .. }));
        assert!(err.to_string().contains("terminal atom"));
    }

    #[test]
    fn rejects_bad_probability_sum_naming_parent() {
        let atoms = vec![
            AtomSpec {
                id: "r".into(),
                time: 0,
                parent: None,
                prob: 1.0,
            },
            AtomSpec {
                id: "a".into(),
                time: 1,
                parent: Some("r".into()),
                prob: 0.5,
            },
            AtomSpec {
                id: "b".into(),
                time: 1,
                parent: Some("r".into()),
                prob: 0.6,
            },
        ];
        let err = ScenarioTree::new(1, atoms).unwrap_err();
        assert_eq!(
            err,
            Error::ProbabilitySum {
                parent: "r".into(),
                sum: 1.1
            }
        );
    }

    #[test]
    fn rejects_zero_probability() {
        let atoms = vec![
            AtomSpec {
                id: "r".into(),
                time: 0,
                parent: None,
                prob: 1.0,
            },
            AtomSpec {
                id: "a".into(),
                time: 1,
                parent: Some("r".into()),
                prob: 1.0,
            },
            AtomSpec {
                id: "b".into(),
                time: 1,
                parent: Some("r".into()),
                prob: 0.0,
            },
        ];
        let err = ScenarioTree::new(1, atoms).unwrap_err();
        assert!(err.to_string().contains("not absolutely continuous"));
    }

    #[test]
    fn rejects_two_roots_and_dead_ends() {
        let atoms = vec![
            AtomSpec {
                id: "r".into(),
                time: 0,
                parent: None,
                prob: 1.0,
            },
            AtomSpec {
                id: "s".into(),
                time: 0,
                parent: None,
                prob: 1.0,
            },
        ];
        assert_eq!(
            ScenarioTree::new(1, atoms).unwrap_err(),
            Error::RootCount { count: 2 }
        );
        let atoms = vec![AtomSpec {
            id: "r".into(),
            time: 0,
            parent: None,
            prob: 1.0,
        }];
        assert!(matches!(
            ScenarioTree::new(1, atoms).unwrap_err(),
            Error::DeadEnd { .. }
        ));
    }

    #[test]
    fn ids_are_sorted_lexicographically_within_slices() {
        let atoms = vec![
            AtomSpec {
                id: "root".into(),
                time: 0,
                parent: None,
                prob: 1.0,
            },
            AtomSpec {
                id: "z".into(),
                time: 1,
                parent: Some("root".into()),
                prob: 0.25,
            },
            AtomSpec {
                id: "a".into(),
                time: 1,
                parent: Some("root".into()),
                prob: 0.75,
            },
        ];
        let tree = ScenarioTree::new(1, atoms).unwrap();
        assert_eq!(tree.ids_at(1), ["a".to_string(), "z".to_string()]);
        assert_eq!(tree.cond_prob(Node::new(1, 0)), 0.75);
        let round = ScenarioTree::new(1, tree.atom_specs()).unwrap();
        assert_eq!(round, tree);
    }

    #[test]
    fn mix_full_and_empty_events() {
        let tree = binary(2);
        let x = AdaptedProcess::zeros(&tree).map(|_| 1.0);
        let y = AdaptedProcess::zeros(&tree);
        assert_eq!(
            mix(&tree, &EventSet::full(&tree, 1), &x, &y)
                .unwrap()
                .parts()[1..],
            x.parts()[1..]
        );
        assert_eq!(mix(&tree, &EventSet::empty(&tree, 1), &x, &y).unwrap(), y);
    }

    #[test]
    fn mix_left_half_gives_subtree_indicator() {
        let tree = binary(2);
        let x = AdaptedProcess::zeros(&tree).map(|_| 1.0);
        let y = AdaptedProcess::zeros(&tree);
        let left = EventSet::new(&tree, 1, vec![true, false]).unwrap();
        let m = mix(&tree, &left, &x, &y).unwrap();
        assert_eq!(m.at(0).values(), &[0.0]);
        assert_eq!(m.at(1).values(), &[1.0, 0.0]);
        assert_eq!(m.at(2).values(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sup_norm_takes_descendant_maximum() {
        let tree = binary(2);
        let x = AdaptedProcess::from_values(
            &tree,
            vec![vec![0.0], vec![-2.0, 0.5], vec![1.0, -0.5, 0.25, 3.0]],
        )
        .unwrap();
        let n = sup_norm(&tree, &x, 1, 2).unwrap();
        assert_eq!(n.values(), &[2.0, 3.0]);
        let zero = sup_norm(&tree, &AdaptedProcess::zeros(&tree), 0, 2).unwrap();
        assert_eq!(zero.values(), &[0.0]);
        assert!(matches!(
            sup_norm(&tree, &x, 2, 1),
            Err(Error::IndexRange { .. })
        ));
    }

    #[test]
    fn sup_norm_same_time_lifts_children_maximum() {
        let tree = binary(1);
        let x = AdaptedProcess::from_values(&tree, vec![vec![0.0], vec![0.3, 0.7]]).unwrap();
        // Norm over [1,1] evaluated at time 1 is |X_1| itself.
        assert_eq!(sup_norm(&tree, &x, 1, 1).unwrap().values(), &[0.3, 0.7]);
        // Over [0,1] at the root it is the maximum over children.
        assert_eq!(sup_norm(&tree, &x, 0, 1).unwrap().values(), &[0.7]);
    }

    #[test]
    fn conditional_law_merges_duplicates() {
        let tree = ScenarioTree::from_levels(&[vec![0.25, 0.25, 0.5]]).unwrap();
        let x = AdaptedVector::new(&tree, 1, vec![2.0, 2.0, 5.0]).unwrap();
        let law = conditional_law(&tree, &x, Node::new(0, 0)).unwrap();
        assert_eq!(law, vec![(2.0, 0.5), (5.0, 0.5)]);
        let c = AdaptedVector::constant(&tree, 1, 4.0);
        assert_eq!(
            conditional_law(&tree, &c, Node::new(0, 0)).unwrap(),
            vec![(4.0, 1.0)]
        );
    }

    #[test]
    fn slice_pads_with_zeros() {
        let tree = binary(2);
        let x = AdaptedProcess::zeros(&tree).map(|_| 2.0);
        let s = x.slice(1, 1).unwrap();
        assert_eq!(s.at(0).values(), &[0.0]);
        assert_eq!(s.at(1).values(), &[2.0, 2.0]);
        assert!(s.at(2).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conditional_expectation_enumerates_paths() {
        let tree = ScenarioTree::from_levels(&[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let z = AdaptedVector::new(&tree, 2, vec![1.0, 3.0, 0.0, 4.0]).unwrap();
        let e = tree.conditional_expectation(&z, 0);
        assert!((e.value(0) - (0.25 * 2.0 + 0.75 * 2.0)).abs() < 1e-15);
    }
}
