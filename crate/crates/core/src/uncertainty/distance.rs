//! Conditional Wasserstein and Kullback–Leibler distance kernels.

use crate::error::{Error, Result};
use crate::space::{discrete_law, AdaptedVector, Node, ScenarioTree};

/// `p`-Wasserstein distance between two discrete laws on the real line,
/// computed exactly by merging the breakpoints of their quantile functions.
///
/// Both laws are `(value, probability)` lists; they need not be sorted.
pub fn wasserstein_law(order: f64, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    quantile_integral(a, b, |d| d.abs().powf(order)).powf(1.0 / order)
}

/// `(∫ ((F_a⁻¹ − F_b⁻¹)⁺)^p)^{1/p}`: how far the quantiles of `a` exceed
/// those of `b`. Any variable dominating a variable with law `a` lies at
/// least this far from `b` in `p`-Wasserstein distance.
pub fn quantile_excess(order: f64, a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    quantile_integral(a, b, |d| d.max(0.0).powf(order)).powf(1.0 / order)
}

/// `∫₀¹ f(F_a⁻¹(u) − F_b⁻¹(u)) du` for left-continuous quantile functions
/// of two discrete laws.
fn quantile_integral(a: &[(f64, f64)], b: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|u, v| u.0.total_cmp(&v.0));
    b.sort_by(|u, v| u.0.total_cmp(&v.0));
    let (mut i, mut j) = (0, 0);
    let (mut left_a, mut left_b) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let step = left_a.min(left_b);
        let gap = a[i].0 - b[j].0;
        if gap != 0.0 {
            total += step * f(gap);
        }
        left_a -= step;
        left_b -= step;
        let a_done = left_a <= 1e-15;
        let b_done = left_b <= 1e-15;
        if a_done {
            i += 1;
        }
        if b_done {
            j += 1;
        }
        if i >= a.len() || j >= b.len() {
            break;
        }
        if a_done {
            left_a = a[i].1;
        }
        if b_done {
            left_b = b[j].1;
        }
    }
    total
}

/// Conditional `p`-Wasserstein distance between `y` and `z` (both at time
/// `t`) given the time-`t−1` information, one value per parent atom.
pub fn conditional_wasserstein(
    order: f64,
    tree: &ScenarioTree,
    y: &AdaptedVector,
    z: &AdaptedVector,
) -> Result<AdaptedVector> {
    if !(order >= 1.0 && order.is_finite()) {
        return Err(Error::WassersteinOrder { order });
    }
    let t = y.time();
    if t == 0 {
        return Err(Error::TimeMismatch {
            expected: 1,
            found: 0,
        });
    }
    tree.check_vector(y, t)?;
    tree.check_vector(z, t)?;
    let values = (0..tree.width(t - 1))
        .map(|i| {
            let probs = tree.child_probs(t - 1, i);
            let ly: Vec<(f64, f64)> = tree
                .child_values(y, i)
                .into_iter()
                .zip(probs.iter().copied())
                .collect();
            let lz: Vec<(f64, f64)> = tree
                .child_values(z, i)
                .into_iter()
                .zip(probs.iter().copied())
                .collect();
            wasserstein_law(order, &ly, &lz)
        })
        .collect();
    Ok(AdaptedVector::from_parts(t - 1, values))
}

/// `Σ q_i log(q_i / p_i)` with the convention `0 · log 0 = 0`.
pub fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(qi, _)| **qi > 0.0)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Divergence of a reweighting `q` of the children of `parent` from their
/// conditional probabilities.
pub fn conditional_kl(tree: &ScenarioTree, q: &[f64], parent: Node) -> Result<f64> {
    let p = tree.child_probs(parent.time, parent.index);
    if p.is_empty() {
        return Err(Error::TerminalAtom {
            id: tree.id(parent).to_string(),
        });
    }
    if q.len() != p.len() {
        return Err(Error::Shape {
            time: parent.time + 1,
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(kl(q, &p))
}

/// Divergence of the law of `y_values` (under `probs`) from the law of
/// `x_values` (under the same `probs`), both merged over equal values.
///
/// Returns `None` when some value of `y` is not within `tol` of a value of
/// `x`, in which case no reweighting of `x`'s law produces `y`'s law.
pub fn law_divergence(y_values: &[f64], x_values: &[f64], probs: &[f64], tol: f64) -> Option<f64> {
    let x_law = discrete_law(x_values, probs);
    let mut target = vec![0.0; x_law.len()];
    for (&v, &p) in y_values.iter().zip(probs) {
        let k = x_law.iter().position(|(xv, _)| (xv - v).abs() <= tol)?;
        target[k] += p;
    }
    let base: Vec<f64> = x_law.iter().map(|(_, p)| *p).collect();
    Some(kl(&target, &base))
}
