//! Time-consistency checks for robust measures and for uncertainty sets.
//!
//! Measure-level notions compare `R_{t,T}` values for `s ∈ {t+1, …, T−1}`;
//! set-level notions compare sets `u_t` for `s ∈ {t, …, T−1}`. The set-level
//! range includes `s = t`, where a static set already fails the strong
//! notion unless `R_{t,T}(X) = 0`. Trees with `T = 1` give vacuous verdicts.

use rand::Rng;

use super::view::{equality, inclusion, threshold, SetView};
use super::{first_violation, run_trials, CheckSpec, Mutation, Outcome, Verdict, Witness};
use crate::error::{Error, Result};
use crate::robust::RobustRiskMeasure;
use crate::sampling::{self, CrateRng};
use crate::space::{AdaptedProcess, AdaptedVector, ScenarioTree};
use crate::uncertainty::DynamicSet;

super::named_enum! {
    /// Time-consistency notions. `ZeroShift` is the invariance
    /// `R_{t,T}(X + λ R_{s,T}(0)) = R_{t,T}(X)` for integer `λ`, which strong
    /// time-consistency implies.
    TcId {
        Strong => "strong",
        Order => "order",
        Rejection => "rejection",
        WeakRecursive => "weak_recursive",
        Weak => "weak",
        Prudent => "prudent",
        ZeroShift => "zero_shift",
    }
}

/// `X` up to time `s` with `add` added at time `s` and zeros afterwards.
fn substitute(x: &AdaptedProcess, add: &AdaptedVector) -> Result<AdaptedProcess> {
    Ok(x.slice(0, add.time())?.with_added(add))
}

/// `X` up to time `s` followed by the tail of `y`.
fn splice(x: &AdaptedProcess, y: &AdaptedProcess, s: usize) -> AdaptedProcess {
    let parts = x
        .parts()
        .iter()
        .zip(y.parts())
        .map(|(a, b)| if a.time() <= s { a.clone() } else { b.clone() })
        .collect();
    AdaptedProcess::from_parts(parts)
}

fn all_le(a: &AdaptedVector, b: &AdaptedVector) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x <= y)
}

fn equal_values(
    t: usize,
    s: usize,
    processes: Vec<AdaptedProcess>,
    lhs: &AdaptedVector,
    rhs: &AdaptedVector,
    what: &str,
    tol: f64,
) -> Outcome {
    match first_violation(lhs, rhs, |a, b| (a - b).abs() <= tol) {
        None => Outcome::Pass,
        Some((i, a, b)) => Outcome::Fail(
            Witness::new(
                t,
                processes,
                (a - b).abs(),
                format!("{what}: {a} vs {b} at atom {i}"),
            )
            .at_horizon(s),
        ),
    }
}

fn draw_measure_times(rng: &mut CrateRng, tree: &ScenarioTree) -> Option<(usize, usize)> {
    let horizon = tree.horizon();
    if horizon < 2 {
        return None;
    }
    let t = rng.gen_range(0..=horizon - 2);
    let s = rng.gen_range(t + 1..=horizon - 1);
    Some((t, s))
}

/// Checks a time-consistency notion of `R_{t,T}` on random processes.
/// Weak recursiveness is tested twice per trial: by direct substitution
/// and through the equivalent characterization that equal values of
/// `X_{t+1:s} + R_{s,T}(X_{s+1:T})` force equal `R_{t,T}`.
pub fn check_measure_tc(
    measure: &RobustRiskMeasure,
    id: TcId,
    spec: &CheckSpec,
) -> Result<Verdict> {
    if id == TcId::Prudent {
        return Err(Error::UnknownProperty {
            name: "prudent (defined for uncertainty sets only)".to_string(),
        });
    }
    let tree = measure.tree().clone();
    let tol = spec.tol;
    run_trials(id.name(), measure.describe(), spec, |rng| {
        let Some((t, s)) = draw_measure_times(rng, &tree) else {
            return Ok(Outcome::Skip);
        };
        let x = spec.process(rng, &tree);
        let r_t = measure.robust_value(t, &x)?;
        let outcome = match id {
            TcId::Strong | TcId::WeakRecursive | TcId::Weak => {
                let r_s = measure.robust_value(s, &x)?;
                let recentre =
                    id == TcId::WeakRecursive && spec.mutation != Mutation::ForgetZeroOffset;
                let add = if recentre {
                    &r_s - measure.zero_value(s)?
                } else {
                    r_s
                };
                let substituted = substitute(&x, &add)?;
                let rhs = measure.robust_value(t, &substituted)?;
                let processes = vec![x.clone(), substituted];
                let primary = if id == TcId::Weak {
                    match first_violation(&rhs, &r_t, |a, b| a <= b + tol) {
                        None => Outcome::Pass,
                        Some((i, a, b)) => Outcome::Fail(
                            Witness::new(
                                t,
                                processes,
                                a - b,
                                format!("substituted value {a} exceeds {b} at atom {i}"),
                            )
                            .at_horizon(s),
                        ),
                    }
                } else {
                    equal_values(
                        t,
                        s,
                        processes,
                        &r_t,
                        &rhs,
                        "original vs substituted value",
                        tol,
                    )
                };
                if id == TcId::WeakRecursive && matches!(primary, Outcome::Pass) {
                    characterization_trial(measure, spec, rng, &x, &r_t, t, s)?
                } else {
                    primary
                }
            }
            TcId::ZeroShift => {
                let lambda = [-2.0, -1.0, 1.0, 2.0][rng.gen_range(0..4)];
                let shifted = x.with_added(&(measure.zero_value(s)? * lambda));
                let rhs = measure.robust_value(t, &shifted)?;
                let out = equal_values(
                    t,
                    s,
                    vec![x, shifted],
                    &r_t,
                    &rhs,
                    "value moved by a multiple of R(0)",
                    tol,
                );
                match out {
                    Outcome::Fail(mut w) => {
                        w.detail = format!("{} (lambda = {lambda})", w.detail);
                        Outcome::Fail(w)
                    }
                    other => other,
                }
            }
            TcId::Order => {
                let other = if rng.gen_bool(0.5) {
                    spec.raise(rng, &tree, &x, s + 1)
                } else {
                    splice(&x, &spec.process(rng, &tree), s)
                };
                let rx = measure.robust_value(s, &x)?;
                let ry = measure.robust_value(s, &other)?;
                let (low, high) = if all_le(&rx, &ry) {
                    (x, other)
                } else if all_le(&ry, &rx) {
                    (other, x)
                } else {
                    return Ok(Outcome::Skip);
                };
                let a = measure.robust_value(t, &low)?;
                let b = measure.robust_value(t, &high)?;
                match first_violation(&a, &b, |p, q| p <= q + tol) {
                    None => Outcome::Pass,
                    Some((i, p, q)) => Outcome::Fail(
                        Witness::new(
                            t,
                            vec![low, high],
                            p - q,
                            format!("lower tail risk at s but R_t {p} exceeds {q} at atom {i}"),
                        )
                        .at_horizon(s),
                    ),
                }
            }
            TcId::Rejection => {
                let Some(x) = rejection_premise(measure, spec, rng, &tree, x, t)? else {
                    return Ok(Outcome::Skip);
                };
                let r = measure.robust_value(t, &x)?;
                match r.values().iter().position(|&v| v < -tol) {
                    None => Outcome::Pass,
                    Some(i) => {
                        let v = r.value(i);
                        Outcome::Fail(Witness::new(
                            t,
                            vec![x],
                            -v,
                            format!("R_t+1 is non-negative but R_t = {v} at atom {i}"),
                        ))
                    }
                }
            }
            TcId::Prudent => unreachable!("rejected above"),
        };
        Ok(outcome)
    })
}

/// Checks that `R_{t,T}` does not depend on whether an `F_s`-measurable
/// amount is paid at time `s` or carried to time `s + 1`, for
/// `s ∈ {t+1, …, T−1}`. The implication from order time-consistency and
/// translation invariance to weak recursiveness compares the two
/// placements, so it needs this invariance as well.
pub fn check_carry_invariance(measure: &RobustRiskMeasure, spec: &CheckSpec) -> Result<Verdict> {
    let tree = measure.tree().clone();
    run_trials("carry_invariant", measure.describe(), spec, |rng| {
        let Some((t, s)) = draw_measure_times(rng, &tree) else {
            return Ok(Outcome::Skip);
        };
        let x = spec.process(rng, &tree);
        let amount = spec.process(rng, &tree).at(s).clone();
        let now = x.with_added(&amount);
        let carried = x.with_added(&tree.lift(&amount, s + 1));
        let a = measure.robust_value(t, &now)?;
        let b = measure.robust_value(t, &carried)?;
        Ok(equal_values(
            t,
            s,
            vec![now, carried],
            &a,
            &b,
            "amount paid at s vs carried to s+1",
            spec.tol,
        ))
    })
}

/// Builds `Y` agreeing with `X` before `s`, with a random tail after `s`,
/// and `Y_s = X_s + R_{s,T}(X) − R_{s,T}(Y)`, so that both processes have
/// the same substituted value at `s`. Weak recursiveness forces
/// `R_{t,T}(X) = R_{t,T}(Y)`.
fn characterization_trial(
    measure: &RobustRiskMeasure,
    spec: &CheckSpec,
    rng: &mut CrateRng,
    x: &AdaptedProcess,
    r_t: &AdaptedVector,
    t: usize,
    s: usize,
) -> Result<Outcome> {
    let tree = measure.tree();
    let tail = spec.process(rng, tree);
    let spliced = splice(x, &tail, s);
    let correction = &measure.robust_value(s, x)? - &measure.robust_value(s, &spliced)?;
    let y = spliced.with_added(&correction);
    let r_y = measure.robust_value(t, &y)?;
    let outcome = equal_values(
        t,
        s,
        vec![x.clone(), y],
        r_t,
        &r_y,
        "equal substituted values, different R_t",
        spec.tol,
    );
    Ok(match outcome {
        Outcome::Fail(mut w) => {
            w.detail = format!("characterization: {}", w.detail);
            Outcome::Fail(w)
        }
        other => other,
    })
}

/// Adjusts `x` so that `X_{t+1} ≥ 0` and `R_{t+1,T}(X) ≥ 0` hold, or gives
/// up. At `t + 1 = T` the second condition reads `X_T ≥ 0`.
fn rejection_premise(
    measure: &RobustRiskMeasure,
    spec: &CheckSpec,
    rng: &mut CrateRng,
    tree: &ScenarioTree,
    x: AdaptedProcess,
    t: usize,
) -> Result<Option<AdaptedProcess>> {
    let mut x = x.with_part(x.at(t + 1).map(f64::abs));
    if t + 1 == tree.horizon() {
        return Ok(Some(x));
    }
    for _ in 0..4 {
        let r = measure.robust_value(t + 1, &x)?;
        let deficit = r.values().iter().fold(0.0_f64, |m, v| m.max(-v));
        if deficit == 0.0 {
            return Ok(Some(x));
        }
        let bump = deficit * (1.0 + sampling::uniform_value(rng, 0.0, 0.5)) + spec.tol;
        let lifted = AdaptedVector::constant(tree, t + 2, bump);
        x = x.with_added(&lifted);
    }
    Ok(None)
}

fn draw_set_times(rng: &mut CrateRng, tree: &ScenarioTree) -> Option<(usize, usize)> {
    let horizon = tree.horizon();
    if horizon < 2 {
        return None;
    }
    let t = rng.gen_range(1..=horizon - 1);
    let s = rng.gen_range(t..=horizon - 1);
    Some((t, s))
}

/// Checks a time-consistency notion of the sets `u_t`, where the `R` values
/// in the definitions are those of `measure`. Passing the consolidated set
/// of `measure` checks the consolidated notions.
pub fn check_set_tc(
    measure: &RobustRiskMeasure,
    set: &dyn DynamicSet,
    id: TcId,
    spec: &CheckSpec,
) -> Result<Verdict> {
    if id == TcId::ZeroShift {
        return check_measure_tc(measure, id, spec);
    }
    let tree = measure.tree().clone();
    let tol = spec.tol;
    let members = spec.members_per_trial();
    run_trials(id.name(), set.describe(), spec, |rng| {
        let x = spec.process(rng, &tree);
        let outcome = match id {
            TcId::Strong | TcId::WeakRecursive | TcId::Weak => {
                let Some((t, s)) = draw_set_times(rng, &tree) else {
                    return Ok(Outcome::Skip);
                };
                let r_s = measure.robust_value(s, &x)?;
                let add =
                    if id == TcId::WeakRecursive && spec.mutation != Mutation::ForgetZeroOffset {
                        &r_s - measure.zero_value(s)?
                    } else {
                        r_s
                    };
                let substituted = substitute(&x, &add)?;
                let original = SetView::plain(set, t, x.clone());
                let replaced = SetView::plain(set, t, substituted.clone());
                let finding = if id == TcId::Weak {
                    inclusion(&replaced, &original, members, tol, rng)?
                } else {
                    equality(&original, &replaced, members, tol, rng)?
                };
                finding_outcome(t, s, vec![x, substituted], finding)
            }
            TcId::Order => {
                let Some((t, s)) = draw_set_times(rng, &tree) else {
                    return Ok(Outcome::Skip);
                };
                let y = if rng.gen_bool(0.5) {
                    spec.raise(rng, &tree, &x, s + 1)
                } else {
                    splice(&x, &spec.process(rng, &tree), s)
                };
                let premise = inclusion(
                    &SetView::plain(set, s + 1, x.clone()),
                    &SetView::plain(set, s + 1, y.clone()),
                    members,
                    tol,
                    rng,
                )?;
                if premise.is_some() {
                    return Ok(Outcome::Skip);
                }
                let finding = inclusion(
                    &SetView::plain(set, t, x.clone()),
                    &SetView::plain(set, t, y.clone()),
                    members,
                    tol,
                    rng,
                )?;
                finding_outcome(t, s, vec![x, y], finding)
            }
            TcId::Rejection => {
                let horizon = tree.horizon();
                if horizon < 2 {
                    return Ok(Outcome::Skip);
                }
                let t = rng.gen_range(1..=horizon - 1);
                let next = match rng.gen_range(0..3) {
                    0 => x.at(t + 1).clone(),
                    1 => x.at(t + 1) * sampling::uniform_value(rng, 0.0, 0.1),
                    _ => AdaptedVector::zeros(&tree, t + 1),
                };
                let x = x.with_part(x.at(t).map(f64::abs)).with_part(next);
                let origin_next = AdaptedVector::zeros(&tree, t + 1);
                if !set
                    .contains(t + 1, &origin_next, &x, tol)?
                    .iter()
                    .all(|b| *b)
                {
                    return Ok(Outcome::Skip);
                }
                let origin = AdaptedVector::zeros(&tree, t);
                let inside = set.contains(t, &origin, &x, tol)?;
                match inside.iter().position(|b| !b) {
                    None => Outcome::Pass,
                    Some(i) => {
                        let gap =
                            threshold(tol, |band| Ok(set.contains(t, &origin, &x, band)?[i]))?;
                        Outcome::Fail(Witness::new(
                            t,
                            vec![x],
                            gap,
                            format!("0 lies in u_t+1 but not in u_t at parent {i}"),
                        ))
                    }
                }
            }
            TcId::Prudent => {
                let horizon = tree.horizon();
                let t = rng.gen_range(1..=horizon);
                let candidate = if t == horizon {
                    x.at(t).clone()
                } else {
                    &(x.at(t) + &measure.robust_value(t, &x)?) - measure.zero_value(t)?
                };
                let inside = set.contains(t, &candidate, &x, tol)?;
                match inside.iter().position(|b| !b) {
                    None => Outcome::Pass,
                    Some(i) => {
                        let gap =
                            threshold(tol, |band| Ok(set.contains(t, &candidate, &x, band)?[i]))?;
                        let mut w = Witness::new(
                            t,
                            vec![x],
                            gap,
                            format!("recentred risk is not a member at parent {i}"),
                        );
                        w.candidate = Some(candidate);
                        Outcome::Fail(w)
                    }
                }
            }
            TcId::ZeroShift => unreachable!("delegated above"),
        };
        Ok(outcome)
    })
}

fn finding_outcome(
    t: usize,
    s: usize,
    processes: Vec<AdaptedProcess>,
    finding: Option<super::view::Finding>,
) -> Outcome {
    match Outcome::from_finding(t, processes, finding) {
        Outcome::Fail(w) => Outcome::Fail(w.at_horizon(s)),
        other => other,
    }
}

impl TcId {
    /// Notions that have a measure-level counterpart.
    pub const MEASURE_LEVEL: &'static [TcId] = &[
        TcId::Strong,
        TcId::Order,
        TcId::Rejection,
        TcId::WeakRecursive,
        TcId::Weak,
    ];
}
