//! Worst-case solvers for Wasserstein and Kullback–Leibler balls on the
//! children of one parent atom.
//!
//! Wasserstein balls are searched over tree-realizable candidates (one value
//! per child). For a fixed ranking of the children the candidate's quantile
//! function is a step function on known intervals, and the transport cost
//! to the reference law becomes a separable convex function of the values.
//! Dropping the ranking constraint keeps every candidate feasible (the
//! implied coupling costs at least the optimal one), so maximizing over all
//! rankings of the relaxed problem gives the exact supremum.
//!
//! KL balls are handled at the level of laws through the convex dual of the
//! worst-case expectation.

use std::collections::HashSet;

use rand::Rng;

use crate::riskmeasures::RiskKind;
use crate::sampling;

/// Largest child count for which every ranking is enumerated; wider atoms
/// use the comonotone ranking only.
pub const MAX_ENUMERATED_CHILDREN: usize = 7;

const BISECTION_STEPS: usize = 200;

/// Optimal value and maximizing candidate (one value per child).
#[derive(Debug, Clone, PartialEq)]
pub struct Maximizer {
    pub value: f64,
    pub candidate: Vec<f64>,
}

/// Supremum of `probe` over candidates within `p`-Wasserstein distance
/// `radius` of the law `(values, probs)`.
pub fn wasserstein_sup(
    values: &[f64],
    probs: &[f64],
    order: f64,
    radius: f64,
    probe: &RiskKind,
) -> Maximizer {
    if radius <= 0.0 {
        return Maximizer {
            value: probe.eval(values, probs),
            candidate: values.to_vec(),
        };
    }
    if let RiskKind::Expectation = probe {
        let candidate: Vec<f64> = values.iter().map(|v| v + radius).collect();
        let value = probe.eval(values, probs) + radius;
        return Maximizer { value, candidate };
    }
    let budget = radius.powf(order);
    let mut best = Maximizer {
        value: probe.eval(values, probs),
        candidate: values.to_vec(),
    };
    for ranking in rankings(values, probs) {
        let problem = RankedProblem::new(values, probs, &ranking, order);
        let found = match probe {
            RiskKind::Entropic { beta } => problem.maximize_entropic(*beta, budget),
            _ => {
                let weights = problem.linear_weights(probe);
                problem.maximize_linear(&weights, budget)
            }
        };
        if let Some(v) = found {
            let candidate = problem.to_candidate(&v);
            let value = probe.eval(&candidate, probs);
            if value > best.value {
                best = Maximizer { value, candidate };
            }
        }
    }
    best
}

/// Rankings of the children (lowest value first), deduplicated by the
/// sequence of probabilities they induce.
fn rankings(values: &[f64], probs: &[f64]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut comonotone: Vec<usize> = (0..n).collect();
    comonotone.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if n > MAX_ENUMERATED_CHILDREN {
        return vec![comonotone];
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |perm: &[usize]| {
        let key: Vec<u64> = perm.iter().map(|&i| probs[i].to_bits()).collect();
        if seen.insert(key) {
            out.push(perm.to_vec());
        }
    };
    push(&comonotone);
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut push);
    out
}

fn permutations(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permutations(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Transport problem for a fixed ranking of the candidate's children.
struct RankedProblem {
    ranking: Vec<usize>,
    order: f64,
    /// Quantile interval `[lo, hi]` of each ranked position.
    intervals: Vec<(f64, f64)>,
    /// For each position, the reference values it overlaps and the overlap
    /// lengths.
    overlaps: Vec<Vec<(f64, f64)>>,
}

impl RankedProblem {
    fn new(values: &[f64], probs: &[f64], ranking: &[usize], order: f64) -> Self {
        let mut reference: Vec<(f64, f64)> =
            values.iter().copied().zip(probs.iter().copied()).collect();
        reference.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ref_intervals = Vec::with_capacity(reference.len());
        let mut acc = 0.0;
        for &(v, p) in &reference {
            ref_intervals.push((acc, acc + p, v));
            acc += p;
        }
        let mut intervals = Vec::with_capacity(ranking.len());
        let mut overlaps = Vec::with_capacity(ranking.len());
        let mut acc = 0.0;
        for &child in ranking {
            let (lo, hi) = (acc, acc + probs[child]);
            acc = hi;
            intervals.push((lo, hi));
            let cover: Vec<(f64, f64)> = ref_intervals
                .iter()
                .filter_map(|&(a, b, v)| {
                    let len = hi.min(b) - lo.max(a);
                    (len > 1e-15).then_some((v, len))
                })
                .collect();
            overlaps.push(cover);
        }
        Self {
            ranking: ranking.to_vec(),
            order,
            intervals,
            overlaps,
        }
    }

    fn to_candidate(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; v.len()];
        for (k, &child) in self.ranking.iter().enumerate() {
            y[child] = v[k];
        }
        y
    }

    /// Tail weights making `Σ c_k v_k` equal the probe on ranked candidates
    /// and a lower bound on unranked ones.
    fn linear_weights(&self, probe: &RiskKind) -> Vec<f64> {
        let n = self.intervals.len();
        match *probe {
            RiskKind::Expectation => self.intervals.iter().map(|(a, b)| b - a).collect(),
            RiskKind::Cvar { alpha } => self
                .intervals
                .iter()
                .map(|&(a, b)| (b.min(1.0) - a.max(alpha)).max(0.0) / (1.0 - alpha))
                .collect(),
            RiskKind::WorstCase => (0..n).map(|k| if k + 1 == n { 1.0 } else { 0.0 }).collect(),
            RiskKind::Entropic { .. } => {
                unreachable!("entropic probes use successive linearization")
            }
        }
    }

    fn cost(&self, k: usize, v: f64) -> f64 {
        self.overlaps[k]
            .iter()
            .map(|&(x, w)| w * (v - x).abs().powf(self.order))
            .sum()
    }

    fn cost_slope(&self, k: usize, v: f64) -> f64 {
        let p = self.order;
        self.overlaps[k]
            .iter()
            .map(|&(x, w)| {
                let d = v - x;
                if d == 0.0 {
                    0.0
                } else {
                    w * p * d.abs().powf(p - 1.0) * d.signum()
                }
            })
            .sum()
    }

    /// Maximizes `Σ c_k v_k` subject to `Σ cost_k(v_k) ≤ budget`.
    fn maximize_linear(&self, weights: &[f64], budget: f64) -> Option<Vec<f64>> {
        if self.order == 1.0 {
            self.maximize_linear_order_one(weights, budget)
        } else {
            self.maximize_linear_smooth(weights, budget)
        }
    }

    /// Piecewise-linear costs: fill cost segments greedily by value per unit
    /// of budget.
    fn maximize_linear_order_one(&self, weights: &[f64], budget: f64) -> Option<Vec<f64>> {
        let n = weights.len();
        let mut v = vec![0.0; n];
        let mut segments = Vec::new();
        let mut spent = 0.0;
        for k in 0..n {
            let mut points = self.overlaps[k].clone();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let width: f64 = points.iter().map(|p| p.1).sum();
            // Rightmost minimizer: first breakpoint where the slope to its
            // right becomes positive.
            let mut below = 0.0;
            let mut start = points[points.len() - 1].0;
            let mut start_idx = points.len() - 1;
            for (idx, &(x, w)) in points.iter().enumerate() {
                below += w;
                if below - (width - below) > 1e-15 {
                    start = x;
                    start_idx = idx;
                    break;
                }
            }
            v[k] = start;
            spent += self.cost(k, start);
            if weights[k] > 0.0 {
                let mut slope_below: f64 = points[..=start_idx].iter().map(|p| p.1).sum();
                for idx in start_idx + 1..points.len() {
                    let slope = slope_below - (width - slope_below);
                    segments.push((k, slope, points[idx].0 - points[idx - 1].0));
                    slope_below += points[idx].1;
                }
                segments.push((k, width, f64::INFINITY));
            }
        }
        if spent > budget + 1e-15 {
            return None;
        }
        let mut left = (budget - spent).max(0.0);
        segments.sort_by(|a, b| (weights[b.0] / b.1).total_cmp(&(weights[a.0] / a.1)));
        for (k, slope, length) in segments {
            if left <= 0.0 {
                break;
            }
            let need = slope * length;
            if need <= left {
                v[k] += length;
                left -= need;
            } else {
                v[k] += left / slope;
                left = 0.0;
            }
        }
        Some(v)
    }

    /// Smooth strictly convex costs: Lagrangian stationarity
    /// `cost_k'(v_k) = c_k / λ`, with `λ` set by bisection so the budget binds.
    fn maximize_linear_smooth(&self, weights: &[f64], budget: f64) -> Option<Vec<f64>> {
        let span_lo = self
            .overlaps
            .iter()
            .flatten()
            .map(|o| o.0)
            .fold(f64::INFINITY, f64::min);
        let span_hi = self
            .overlaps
            .iter()
            .flatten()
            .map(|o| o.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let solve = |lambda: f64| -> Vec<f64> {
            (0..weights.len())
                .map(|k| {
                    let target = if weights[k] > 0.0 {
                        weights[k] / lambda
                    } else {
                        0.0
                    };
                    let width = self.intervals[k].1 - self.intervals[k].0;
                    let reach = (target / (width * self.order)).powf(1.0 / (self.order - 1.0));
                    let (mut lo, mut hi) = (span_lo, span_hi + reach + 1.0);
                    for _ in 0..BISECTION_STEPS {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if self.cost_slope(k, mid) < target {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if target > 0.0 {
                        lo
                    } else {
                        0.5 * (lo + hi)
                    }
                })
                .collect()
        };
        let total =
            |v: &[f64]| -> f64 { v.iter().enumerate().map(|(k, &x)| self.cost(k, x)).sum() };
        let floor = solve(f64::INFINITY);
        if total(&floor) > budget * (1.0 + 1e-12) + 1e-15 {
            return None;
        }
        // Bracket λ: large λ is feasible, small λ overspends.
        let mut hi_l = 1.0f64;
        while total(&solve(hi_l)) > budget {
            hi_l *= 4.0;
            if hi_l > 1e300 {
                return Some(floor);
            }
        }
        let mut lo_l = hi_l;
        while total(&solve(lo_l)) <= budget {
            lo_l /= 4.0;
            if lo_l < 1e-300 {
                return Some(solve(lo_l * 4.0));
            }
        }
        for _ in 0..BISECTION_STEPS {
            let mid = (lo_l * hi_l).sqrt();
            if mid <= lo_l || mid >= hi_l {
                break;
            }
            if total(&solve(mid)) <= budget {
                hi_l = mid;
            } else {
                lo_l = mid;
            }
        }
        Some(solve(hi_l))
    }

    /// Successive linearization of the convex entropic objective from a
    /// panel of starting weights; each step cannot decrease the objective.
    fn maximize_entropic(&self, beta: f64, budget: f64) -> Option<Vec<f64>> {
        let n = self.intervals.len();
        let widths: Vec<f64> = self.intervals.iter().map(|(a, b)| b - a).collect();
        let objective = |v: &[f64]| RiskKind::Entropic { beta }.eval(v, &widths);
        let mut starts: Vec<Vec<f64>> = vec![widths.clone()];
        for k in 0..n {
            starts.push((0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect());
        }
        starts.push(self.linear_weights(&RiskKind::Cvar { alpha: 0.5 }));
        let mut rng = sampling::rng(0x5EED);
        for _ in 0..5 {
            let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
            let total: f64 = raw.iter().sum();
            starts.push(raw.iter().map(|r| r / total).collect());
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for weights in starts {
            let mut v = self.maximize_linear(&weights, budget)?;
            let mut value = objective(&v);
            for _ in 0..200 {
                let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let raw: Vec<f64> = v
                    .iter()
                    .zip(&widths)
                    .map(|(x, w)| w * (beta * (x - top)).exp())
                    .collect();
                let total: f64 = raw.iter().sum();
                let gradient: Vec<f64> = raw.iter().map(|r| r / total).collect();
                let Some(next) = self.maximize_linear(&gradient, budget) else {
                    break;
                };
                let next_value = objective(&next);
                if next_value <= value + 1e-13 {
                    if next_value > value {
                        v = next;
                        value = next_value;
                    }
                    break;
                }
                v = next;
                value = next_value;
            }
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, v));
            }
        }
        best.map(|(_, v)| v)
    }
}

/// Supremum of the expectation over reweightings `q` of `probs` with
/// `KL(q‖probs) ≤ radius`, via the dual
/// `inf_{τ>0} τ log Σ p e^{x/τ} + τ·radius`.
pub fn kl_sup_expectation(values: &[f64], probs: &[f64], radius: f64) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
    if radius <= 0.0 || top - mean <= 0.0 {
        return RiskKind::Expectation.eval(values, probs);
    }
    let dual = |tau: f64| -> f64 {
        if tau <= 0.0 {
            return top;
        }
        let sum: f64 = values
            .iter()
            .zip(probs)
            .map(|(v, p)| p * ((v - top) / tau).exp())
            .sum();
        top + tau * sum.ln() + tau * radius
    };
    let upper = (top - mean) / radius;
    let (_, best) = golden_min(dual, 0.0, upper);
    best.min(top)
}

/// Supremum of `probe` over laws `(values, q)` with `KL(q‖probs) ≤ radius`.
pub fn kl_sup(values: &[f64], probs: &[f64], radius: f64, probe: &RiskKind) -> f64 {
    if radius <= 0.0 {
        return probe.eval(values, probs);
    }
    match *probe {
        RiskKind::Expectation => kl_sup_expectation(values, probs, radius),
        RiskKind::WorstCase => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        RiskKind::Entropic { beta } => {
            let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let shifted: Vec<f64> = values.iter().map(|v| (beta * (v - top)).exp()).collect();
            top + kl_sup_expectation(&shifted, probs, radius).ln() / beta
        }
        RiskKind::Cvar { alpha } => {
            // Minimax over the Rockafellar–Uryasev threshold.
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let excess = |m: f64| -> f64 {
                let tail: Vec<f64> = values.iter().map(|v| (v - m).max(0.0)).collect();
                m + kl_sup_expectation(&tail, probs, radius) / (1.0 - alpha)
            };
            let (_, best) = golden_min(excess, lo, hi);
            best.min(excess(lo)).min(excess(hi))
        }
    }
}

/// Golden-section minimization of a convex function on `[lo, hi]`.
/// Returns the best abscissa and value seen, endpoints included.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    let fb = f(hi);
    if fb < best.1 {
        best = (hi, fb);
    }
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..BISECTION_STEPS {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx < best.1 {
                best = (x, fx);
            }
        }
    }
    best
}
