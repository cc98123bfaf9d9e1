//! Brute-force reference solvers for validating the production solvers.
//!
//! Everything here enumerates: grids of candidate child values for ball
//! suprema, grids of probability vectors for KL suprema, sorted tails for
//! CVaR and path sums for nested expectations. The grids are exponential in
//! the number of children, so they refuse atoms with more than
//! [`GridSpec::max_children`] children and grids above [`GridSpec::cap`]
//! points.
//!
//! Grid maxima are feasible-point maxima and therefore lower bounds. The
//! reported `bound` is the allowance for the upper side: for value grids
//! with spacing `h`, shrinking the optimum towards the centre by a factor
//! `1 − h/ε` and rounding to the grid gives a feasible point within
//! `h·(1 + p_min^{−1/p})` in sup norm, and the probes are 1-Lipschitz in
//! sup norm. For probability grids the allowance is
//! `n·h·(max x − min x)`, with `h` the simplex spacing, plus the same term
//! for the shrink towards the reference law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riskmeasures::RiskKind;
use crate::space::{AdaptedProcess, AdaptedVector, Node, ScenarioTree};
use crate::uncertainty::{ToleranceRule, UncertaintyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Grid points per coordinate.
    pub points: usize,
    /// Largest admissible total number of grid points.
    pub cap: f64,
    pub max_children: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 41,
            cap: 1e7,
            max_children: 3,
        }
    }
}

impl GridSpec {
    fn check(&self, children: usize, points: f64) -> Result<()> {
        if children > self.max_children {
            return Err(Error::TooManyChildren {
                children,
                cap: self.max_children,
            });
        }
        if points > self.cap {
            return Err(Error::GridTooLarge {
                points,
                cap: self.cap,
            });
        }
        Ok(())
    }
}

/// Grid maximum on one parent atom with its upper allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub value: f64,
    pub spacing: f64,
    pub bound: f64,
}

/// `p`-Wasserstein distance between two laws by integrating the difference
/// of their quantile functions over the merged cumulative breakpoints.
pub fn wasserstein_reference(order: f64, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let sorted = |law: &[(f64, f64)]| {
        let mut law: Vec<(f64, f64)> = law.iter().copied().filter(|(_, p)| *p > 0.0).collect();
        law.sort_by(|u, v| u.0.total_cmp(&v.0));
        law
    };
    let a = sorted(a);
    let b = sorted(b);
    let cumulative = |law: &[(f64, f64)]| {
        law.iter()
            .scan(0.0, |acc, (_, p)| {
                *acc += p;
                Some(*acc)
            })
            .collect::<Vec<f64>>()
    };
    let ca = cumulative(&a);
    let cb = cumulative(&b);
    let quantile = |law: &[(f64, f64)], cum: &[f64], u: f64| {
        let k = cum.iter().position(|&c| u < c).unwrap_or(law.len() - 1);
        law[k].0
    };
    let mut cuts: Vec<f64> = ca.iter().chain(&cb).copied().filter(|&c| c < 1.0).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        if width <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        total += width
            * (quantile(&a, &ca, mid) - quantile(&b, &cb, mid))
                .abs()
                .powf(order);
    }
    total.powf(1.0 / order)
}

/// CVaR as the average of the upper `1 − α` tail of the sorted law.
pub fn cvar_tail_average(alpha: f64, values: &[f64], probs: &[f64]) -> f64 {
    let mut law: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
    law.sort_by(|u, v| v.0.total_cmp(&u.0));
    let mut remaining = 1.0 - alpha;
    let mut total = 0.0;
    for (v, p) in law {
        let take = p.min(remaining);
        total += take * v;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    total / (1.0 - alpha)
}

fn zip(values: &[f64], probs: &[f64]) -> Vec<(f64, f64)> {
    values.iter().copied().zip(probs.iter().copied()).collect()
}

fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(q, _)| **q > 0.0)
        .map(|(q, p)| q * (q / p).ln())
        .sum()
}

/// Grid maximum of `probe` over a sup-norm or Wasserstein ball around the
/// child values `xs` with probabilities `probs`.
pub fn grid_ball_sup(
    kind: &UncertaintyKind,
    radius: f64,
    probe: &RiskKind,
    xs: &[f64],
    probs: &[f64],
    grid: &GridSpec,
) -> Result<GridValue> {
    let n = xs.len();
    let points = grid.points.max(2);
    grid.check(n, (points as f64).powi(n as i32))?;
    let (order, sup_norm) = match kind {
        UncertaintyKind::SupNormBall { .. } => (f64::INFINITY, true),
        UncertaintyKind::WassersteinBall { order, .. } => (*order, false),
        UncertaintyKind::Identity => {
            return Ok(GridValue {
                value: probe.eval(xs, probs),
                spacing: 0.0,
                bound: 0.0,
            })
        }
        _ => {
            return Err(Error::UnknownProperty {
                name: format!("grid for {}", kind.label()),
            })
        }
    };
    let p_min = probs.iter().copied().fold(1.0_f64, f64::min);
    let reach = if sup_norm {
        radius
    } else {
        radius / p_min.powf(1.0 / order)
    };
    let half = (2.0 * radius).max(reach);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - half;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + half;
    let spacing = (hi - lo) / (points - 1) as f64;
    let centre = zip(xs, probs);
    let mut best = f64::NEG_INFINITY;
    let mut index = vec![0usize; n];
    let mut y = vec![0.0; n];
    loop {
        for (k, &i) in index.iter().enumerate() {
            y[k] = lo + spacing * i as f64;
        }
        let feasible = if sup_norm {
            y.iter().zip(xs).all(|(a, b)| (a - b).abs() <= radius)
        } else {
            wasserstein_reference(order, &zip(&y, probs), &centre) <= radius
        };
        if feasible {
            best = best.max(probe.eval(&y, probs));
        }
        let mut k = 0;
        loop {
            if k == n {
                let bound = if radius > 0.0 {
                    spacing * (1.0 + reach / radius)
                } else {
                    0.0
                };
                let value = if best.is_finite() {
                    best
                } else {
                    probe.eval(xs, probs)
                };
                return Ok(GridValue {
                    value,
                    spacing,
                    bound,
                });
            }
            index[k] += 1;
            if index[k] < points {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

/// Grid maximum of `probe` under reweightings `q` of the child law with
/// `KL(q‖p) ≤ radius`, over the simplex grid of spacing `1/(points − 1)`.
pub fn grid_kl_sup(
    radius: f64,
    probe: &RiskKind,
    xs: &[f64],
    probs: &[f64],
    grid: &GridSpec,
) -> Result<GridValue> {
    let n = xs.len();
    let steps = grid.points.max(2) - 1;
    grid.check(n, ((steps + 1) as f64).powi(n as i32 - 1))?;
    let spacing = 1.0 / steps as f64;
    let mut best = probe.eval(xs, probs);
    let mut counts = vec![0usize; n];
    simplex_walk(&mut counts, 0, steps, &mut |c| {
        let q: Vec<f64> = c.iter().map(|&k| k as f64 * spacing).collect();
        if kl_divergence(&q, probs) <= radius {
            let (v, w): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(&q)
                .filter(|(_, q)| **q > 0.0)
                .map(|(a, b)| (*a, *b))
                .unzip();
            best = best.max(probe.eval(&v, &w));
        }
    });
    let range = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GridValue {
        value: best,
        spacing,
        bound: 2.0 * n as f64 * spacing * range,
    })
}

fn simplex_walk(counts: &mut Vec<usize>, k: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if k + 1 == counts.len() {
        counts[k] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[k] = c;
        simplex_walk(counts, k + 1, left - c, visit);
    }
}

/// `sup {ρ_t(Y) : Y ∈ u_{t+1}(X)}` per time-`t` atom by grid search, where
/// `u_{t+1}` is the static set `kind` around `X_{t+1}`.
pub fn grid_worst_case(
    kind: &UncertaintyKind,
    rho: &RiskKind,
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
    grid: &GridSpec,
) -> Result<Vec<GridValue>> {
    if t >= tree.horizon() {
        return Err(Error::TerminalTime {
            time: t,
            horizon: tree.horizon(),
        });
    }
    let x_next = x.at(t + 1);
    let radii = match kind.tolerance() {
        Some(rule) => rule.radii(tree, x_next),
        None => ToleranceRule::Zero.radii(tree, x_next),
    };
    (0..tree.width(t))
        .map(|i| {
            let xs = tree.child_values(x_next, i);
            let probs = tree.child_probs(t, i);
            match kind {
                UncertaintyKind::KlBall { .. } => grid_kl_sup(radii[i], rho, &xs, &probs, grid),
                _ => grid_ball_sup(kind, radii[i], rho, &xs, &probs, grid),
            }
        })
        .collect()
}

/// `max {Σ q x : KL(q‖p) ≤ radius}` with the weights of the `n − 2`
/// lowest-valued outcomes on a grid of spacing `resolution` and the split of
/// the remaining mass between the two highest-valued outcomes found by
/// bisection.
pub fn kl_simplex_sup(xs: &[f64], probs: &[f64], radius: f64, resolution: f64) -> Result<f64> {
    const MAX_RESOLUTION: f64 = 1e-3;
    if !(resolution > 0.0 && resolution <= MAX_RESOLUTION) {
        return Err(Error::CoarseResolution {
            resolution,
            max: MAX_RESOLUTION,
        });
    }
    let n = xs.len();
    if n == 1 {
        return Ok(xs[0]);
    }
    let steps = (1.0 / resolution).round() as usize;
    GridSpec::default().check(n, (steps as f64).powi(n as i32 - 2))?;
    // Sort by value: the gridded coordinates are the low-valued ones, whose
    // optimal weights sit away from the feasibility boundary, and moving mass
    // to the final coordinate increases the objective.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let x: Vec<f64> = order.iter().map(|&k| xs[k]).collect();
    let p: Vec<f64> = order.iter().map(|&k| probs[k]).collect();
    let mut best = f64::NEG_INFINITY;
    let mut visit = |fixed: Vec<f64>| {
        let used: f64 = fixed.iter().sum();
        let rest = 1.0 - used;
        if rest < -1e-12 {
            return;
        }
        let rest = rest.max(0.0);
        let q_of = |share: f64| {
            let mut q = fixed.clone();
            q.push(rest * (1.0 - share));
            q.push(rest * share);
            q
        };
        let value = |share: f64| q_of(share).iter().zip(&x).map(|(q, v)| q * v).sum::<f64>();
        // KL along the segment is convex in the share; find its minimizer,
        // then the largest feasible share above it.
        let kl_at = |share: f64| kl_divergence(&q_of(share), &p);
        let (centre, low) = crate::uncertainty::solver::golden_min(kl_at, 0.0, 1.0);
        if low > radius + 1e-12 {
            return;
        }
        let radius = radius.max(low);
        let share = if kl_at(1.0) <= radius {
            1.0
        } else {
            let (mut a, mut b) = (centre, 1.0);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if kl_at(m) <= radius {
                    a = m;
                } else {
                    b = m;
                }
            }
            a
        };
        best = best.max(value(share));
    };
    // The reference law itself is always a candidate, so small radii never
    // leave the grid without a feasible point.
    visit(p[..n - 2].to_vec());
    if n > 2 {
        let k = n - 2;
        let mut head = vec![0usize; k + 1];
        simplex_walk(&mut head, 0, steps, &mut |c| {
            visit(c[..k].iter().map(|&j| j as f64 * resolution).collect());
        });
    }
    Ok(best)
}

/// `E[Σ_{i>t} X_i | F_t]` per time-`t` atom by summing over every
/// descendant with its conditional path probability.
pub fn enumerate_conditional_expectation(
    tree: &ScenarioTree,
    x: &AdaptedProcess,
    t: usize,
) -> Result<AdaptedVector> {
    tree.check_process(x)?;
    let horizon = tree.horizon();
    if t > horizon {
        return Err(Error::TimeIndex { time: t, horizon });
    }
    let values = (0..tree.width(t))
        .map(|i| {
            let base = tree.path_prob(Node::new(t, i));
            let mut total = 0.0;
            for s in t + 1..=horizon {
                for j in 0..tree.width(s) {
                    if tree.ancestor(s, j, t) == i {
                        total += tree.path_prob(Node::new(s, j)) / base * x.at(s).value(j);
                    }
                }
            }
            total
        })
        .collect();
    AdaptedVector::new(tree, t, values)
}
