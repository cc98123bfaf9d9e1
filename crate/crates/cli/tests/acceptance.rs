//! Acceptance suite: one PASS/FAIL line per criterion, each with its pinned
//! tolerance. Runs without the libtest harness so every criterion reports
//! even when an earlier one fails; the process exits non-zero on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dynrisk::oracle::{
    cvar_tail_average, enumerate_conditional_expectation, grid_worst_case, kl_simplex_sup, GridSpec,
};
use dynrisk::properties::adversarial::{adversarial_equivalent_set, Flavor};
use dynrisk::properties::audit::audit_configuration;
use dynrisk::properties::table1::sample_measures;
use dynrisk::properties::{
    check_measure_tc, check_set_property, check_set_tc, CheckSpec, Mutation, TcId,
};
use dynrisk::riskmeasures::{acceptance_indicator, evaluate_one_step, RiskFamily, RiskKind};
use dynrisk::robust::{construct_recursive, nested_robust_evaluate, RobustRiskMeasure};
use dynrisk::sampling::{random_process, random_tree, random_vector, rng, CrateRng};
use dynrisk::space::{mix_vectors, AdaptedVector, EventSet, ScenarioTree};
use dynrisk::uncertainty::{DynamicSet, DynamicUncertaintySet, ToleranceRule, UncertaintyKind};
use dynrisk_cli::{load_experiment, run_command, Command, Experiment, Outcome, Overrides};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> Experiment {
    load_experiment(&fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn static_set(tree: &Arc<ScenarioTree>, kind: UncertaintyKind) -> Arc<dyn DynamicSet> {
    Arc::new(DynamicUncertaintySet::uniform(tree.clone(), kind).expect("valid set"))
}

fn constant(epsilon: f64) -> ToleranceRule {
    ToleranceRule::Constant { epsilon }
}

fn elapsed_within(start: Instant, limit: Duration) -> Check {
    let spent = start.elapsed();
    ensure!(spent < limit, "took {spent:.1?}, limit {limit:?}");
    Ok(format!("{spent:.1?}"))
}

/// Independent per-parent reference values of the one-step measures.
fn reference_risk(kind: &RiskKind, values: &[f64], probs: &[f64]) -> f64 {
    match *kind {
        RiskKind::Expectation => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        RiskKind::Cvar { alpha } => cvar_tail_average(alpha, values, probs),
        RiskKind::Entropic { beta } => {
            values
                .iter()
                .zip(probs)
                .map(|(v, p)| p * (beta * v).exp())
                .sum::<f64>()
                .ln()
                / beta
        }
        RiskKind::WorstCase => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut r = rng(101);
    let kinds = [
        RiskKind::Expectation,
        RiskKind::Cvar { alpha: 0.9 },
        RiskKind::Entropic { beta: 1.0 },
        RiskKind::WorstCase,
    ];
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let horizon = r.gen_range(1..=3);
        let tree = Arc::new(random_tree(&mut r, horizon, 1, 3));
        let epsilon = r.gen_range(0.0..0.5);
        // Alternate a constant radius with one that depends on X_{t+1}.
        let rule = if k % 2 == 0 {
            constant(epsilon)
        } else {
            ToleranceRule::NormScaled { epsilon }
        };
        let set = static_set(&tree, UncertaintyKind::SupNormBall { tolerance: rule });
        for kind in kinds {
            let measure =
                RobustRiskMeasure::new(RiskFamily::uniform(kind, horizon).unwrap(), set.clone())
                    .unwrap();
            for _ in 0..200 {
                let x = random_process(&mut r, &tree, -1.0, 1.0);
                for t in 0..horizon {
                    let value = measure.robust_value(t, &x).map_err(|e| e.to_string())?;
                    for i in 0..tree.width(t) {
                        let xs = tree.child_values(x.at(t + 1), i);
                        let radius = match rule {
                            ToleranceRule::NormScaled { epsilon } => {
                                epsilon * xs.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
                            }
                            _ => epsilon,
                        };
                        let expected = reference_risk(&kind, &xs, &tree.child_probs(t, i)) + radius;
                        worst = worst.max((value.value(i) - expected).abs());
                    }
                }
            }
        }
    }
    ensure!(worst <= 1e-9, "largest deviation {worst:.3e}");
    let time = elapsed_within(start, Duration::from_secs(30))?;
    Ok(format!("largest deviation {worst:.1e}; {time}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut r = rng(202);
    let grid = GridSpec::default();
    let mut comparisons = 0;
    for k in 0..100 {
        let tree = Arc::new(random_tree(&mut r, 1, 2, 3));
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let epsilon = if k % 2 == 0 { 0.1 } else { 0.25 };
        let kinds = [
            UncertaintyKind::WassersteinBall {
                order: 1.0,
                tolerance: constant(epsilon),
            },
            UncertaintyKind::WassersteinBall {
                order: 2.0,
                tolerance: constant(epsilon),
            },
            UncertaintyKind::KlBall {
                tolerance: constant(epsilon),
            },
        ];
        for kind in kinds {
            for probe in [RiskKind::Expectation, RiskKind::Cvar { alpha: 0.5 }] {
                let production = static_set(&tree, kind.clone())
                    .sup(1, &probe, &x)
                    .map_err(|e| e.to_string())?;
                let oracle = grid_worst_case(&kind, &probe, &tree, &x, 0, &grid)
                    .map_err(|e| e.to_string())?;
                for (p, g) in production.iter().zip(&oracle) {
                    let p = p.ok_or("missing supremum")?;
                    let gap = p - g.value;
                    ensure!(
                        (-1e-9..=g.bound).contains(&gap),
                        "instance {k}, {} with {}: gap {gap:.3e} outside [-1e-9, {:.3e}]",
                        kind.label(),
                        probe.label(),
                        g.bound
                    );
                    comparisons += 1;
                }
            }
        }
    }
    let time = elapsed_within(start, Duration::from_secs(120))?;
    Ok(format!(
        "{comparisons} atom comparisons on 100 instances; {time}"
    ))
}

fn criterion_3() -> Check {
    let mut r = rng(303);
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let tree = Arc::new(random_tree(&mut r, 1, 2, 3));
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let epsilon = match k % 4 {
            0 => 0.0,
            1 => 10.0,
            _ => r.gen_range(0.001..1.0),
        };
        let set = static_set(
            &tree,
            UncertaintyKind::KlBall {
                tolerance: constant(epsilon),
            },
        );
        let dual = set
            .sup(1, &RiskKind::Expectation, &x)
            .map_err(|e| e.to_string())?[0]
            .ok_or("missing supremum")?;
        let xs = tree.child_values(x.at(1), 0);
        let probs = tree.child_probs(0, 0);
        let simplex = kl_simplex_sup(&xs, &probs, epsilon, 1e-3).map_err(|e| e.to_string())?;
        worst = worst.max((dual - simplex).abs());
        ensure!(
            (dual - simplex).abs() <= 1e-4,
            "instance {k}, epsilon {epsilon}: dual {dual} vs simplex {simplex}"
        );
        if epsilon == 0.0 {
            let mean = reference_risk(&RiskKind::Expectation, &xs, &probs);
            ensure!(
                (dual - mean).abs() <= 1e-9,
                "epsilon 0: dual {dual} vs mean {mean}"
            );
        }
        if epsilon == 10.0 {
            let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ensure!(
                (simplex - top).abs() <= 1e-3,
                "epsilon 10: simplex {simplex} vs max child {top}"
            );
        }
    }
    Ok(format!("largest dual/simplex gap {worst:.1e}"))
}

fn criterion_4() -> Check {
    let mut r = rng(404);
    let tree = Arc::new(random_tree(&mut r, 2, 2, 3));
    let tol = 1e-9;
    let bases = [
        UncertaintyKind::SupNormBall {
            tolerance: constant(0.2),
        },
        UncertaintyKind::WassersteinBall {
            order: 1.0,
            tolerance: constant(0.1),
        },
        UncertaintyKind::KlBall {
            tolerance: constant(0.1),
        },
    ];
    let rhos = [
        RiskKind::Expectation,
        RiskKind::Cvar { alpha: 0.7 },
        RiskKind::Entropic { beta: 2.0 },
    ];
    let mut configurations = 0;
    let mut in_band = 0;
    for base in &bases {
        for rho in rhos {
            let family = RiskFamily::uniform(rho, 2).unwrap();
            let set = static_set(&tree, base.clone());
            let measures = [
                RobustRiskMeasure::new(family.clone(), set.clone()).unwrap(),
                construct_recursive(set, family).unwrap(),
            ];
            for measure in measures {
                configurations += 1;
                for k in 0..1000 {
                    let x = random_process(&mut r, &tree, -1.0, 1.0);
                    let t = r.gen_range(0..2);
                    let risk = measure.robust_value(t, &x).map_err(|e| e.to_string())?;
                    let mut y = random_vector(&mut r, &tree, t + 1, -1.5, 1.5);
                    let boundary = k % 2 == 0;
                    if boundary {
                        let own = evaluate_one_step(&rho, &tree, &y).unwrap();
                        let nudge = if k % 4 == 0 { 1e-10 } else { -1e-10 };
                        y = &(&y - &tree.lift(&own, t + 1))
                            + &tree.lift(&risk.map(|v| v + nudge), t + 1);
                    }
                    let dual = measure
                        .consolidated_contains(t + 1, &y, &x, tol)
                        .map_err(|e| e.to_string())?;
                    let repr = measure
                        .consolidated_contains_repr(t + 1, &y, &x, tol)
                        .map_err(|e| e.to_string())?;
                    let own = evaluate_one_step(&rho, &tree, &y).unwrap();
                    for i in 0..dual.len() {
                        let distance = (own.value(i) - risk.value(i)).abs();
                        if dual[i] != repr[i] {
                            ensure!(
                                distance <= tol,
                                "{}: disagreement {distance:.3e} away from the boundary",
                                measure.describe()
                            );
                            in_band += 1;
                        }
                        ensure!(
                            !boundary || (dual[i] && repr[i]),
                            "{}: boundary member rejected",
                            measure.describe()
                        );
                    }
                }
            }
        }
    }
    Ok(format!(
        "{configurations} configurations x 1000 Y; {in_band} disagreements inside the band"
    ))
}

fn criterion_5() -> Check {
    let mut r = rng(505);
    let tree = Arc::new(random_tree(&mut r, 3, 2, 3));
    let bases = [
        UncertaintyKind::Identity,
        UncertaintyKind::SupNormBall {
            tolerance: constant(0.1),
        },
        UncertaintyKind::SupNormBall {
            tolerance: ToleranceRule::Horizon { epsilon: 0.05 },
        },
        UncertaintyKind::SupNormBall {
            tolerance: ToleranceRule::VarScaled { epsilon: 0.5 },
        },
        UncertaintyKind::WassersteinBall {
            order: 1.0,
            tolerance: constant(0.1),
        },
        UncertaintyKind::WassersteinBall {
            order: 2.0,
            tolerance: ToleranceRule::NormScaled { epsilon: 0.2 },
        },
        UncertaintyKind::KlBall {
            tolerance: constant(0.1),
        },
        UncertaintyKind::KlBall {
            tolerance: ToleranceRule::Zero,
        },
        UncertaintyKind::MeasureFamily {
            measures: sample_measures(&tree, 5),
        },
    ];
    let mut worst = 0.0_f64;
    for base in &bases {
        for rho in [RiskKind::Expectation, RiskKind::Cvar { alpha: 0.5 }] {
            let family = RiskFamily::uniform(rho, 3).unwrap();
            let set = static_set(&tree, base.clone());
            let measure = construct_recursive(set.clone(), family.clone()).unwrap();
            for _ in 0..200 {
                let x = random_process(&mut r, &tree, -1.0, 1.0);
                for t in 0..3 {
                    let a = measure.robust_value(t, &x).map_err(|e| e.to_string())?;
                    let b = nested_robust_evaluate(set.as_ref(), &family, &x, t)
                        .map_err(|e| e.to_string())?;
                    worst = worst.max(a.max_abs_diff(&b));
                }
            }
            ensure!(
                worst <= 1e-9,
                "{} with {}: gap {worst:.3e}",
                base.label(),
                rho.label()
            );
        }
    }
    Ok(format!(
        "{} base variants x 2 families x 200 processes; largest gap {worst:.1e}",
        bases.len()
    ))
}

fn criterion_6() -> Check {
    let tree = Arc::new(ScenarioTree::uniform(&[2, 3, 2]).unwrap());
    let cvar = RiskFamily::uniform(RiskKind::Cvar { alpha: 0.5 }, 3).unwrap();
    let expectation = RiskFamily::uniform(RiskKind::Expectation, 3).unwrap();
    let ball = UncertaintyKind::SupNormBall {
        tolerance: constant(0.1),
    };

    let normalised = construct_recursive(
        static_set(
            &tree,
            UncertaintyKind::KlBall {
                tolerance: constant(0.1),
            },
        ),
        expectation,
    )
    .unwrap();
    let a = check_measure_tc(&normalised, TcId::Strong, &CheckSpec::with_trials(500, 1))
        .map_err(|e| e.to_string())?;
    ensure!(a.is_corroborated() && a.trials == 500, "(a) {}", a.line());

    let spec = CheckSpec::with_trials(500, 2);
    let constant_base = construct_recursive(static_set(&tree, ball.clone()), cvar.clone()).unwrap();
    let weak =
        check_measure_tc(&constant_base, TcId::WeakRecursive, &spec).map_err(|e| e.to_string())?;
    let strong =
        check_measure_tc(&constant_base, TcId::Strong, &spec).map_err(|e| e.to_string())?;
    ensure!(weak.is_corroborated(), "(b) {}", weak.line());
    ensure!(strong.is_counterexample(), "(b) {}", strong.line());

    let plain = RobustRiskMeasure::new(cvar, static_set(&tree, ball)).unwrap();
    let c = check_set_tc(
        &plain,
        plain.set().as_ref(),
        TcId::Strong,
        &CheckSpec::with_trials(100, 3),
    )
    .map_err(|e| e.to_string())?;
    let witness = c.witness().ok_or_else(|| format!("(c) {}", c.line()))?;
    ensure!(
        witness.horizon == Some(witness.time),
        "(c) witness at s = {:?}, t = {}",
        witness.horizon,
        witness.time
    );
    Ok(format!(
        "(a) strong corroborated in 500; (b) strong counterexample at trial {}; (c) counterexample at s = t = {}",
        strong.witness().map_or(0, |w| w.trial),
        witness.time
    ))
}

fn criterion_7() -> Check {
    let mut r = rng(707);
    let mut worst = 0.0_f64;
    let mut verdicts = Vec::new();
    for name in ["expectation_band.json", "expectation_band_uncentred.json"] {
        let experiment = fixture(name);
        let tree = &experiment.tree;
        let dynrisk_cli::doc::SetDoc::ExpectationBand { offsets } = &experiment.doc.set else {
            return Err(format!("{name} is not a band fixture"));
        };
        let offsets: Vec<AdaptedVector> = offsets
            .iter()
            .enumerate()
            .map(|(s, v)| AdaptedVector::new(tree, s, v.clone()).unwrap())
            .collect();
        let samples: Vec<_> = (0..100)
            .map(|_| random_process(&mut r, tree, -1.0, 1.0))
            .collect();
        for x in experiment.processes.iter().map(|(_, x)| x).chain(&samples) {
            for (t, offset) in offsets.iter().enumerate() {
                let value = experiment
                    .measure
                    .robust_value(t, x)
                    .map_err(|e| e.to_string())?;
                let mean = enumerate_conditional_expectation(tree, x, t).unwrap();
                let expected = &mean + offset;
                worst = worst.max(value.max_abs_diff(&expected));
            }
        }
        ensure!(worst <= 1e-12, "{name}: closed-form gap {worst:.3e}");
        // E[ε_s | F_t] = 0 for all t < s ≤ T−1.
        let centred = (1..offsets.len()).all(|s| {
            (0..s).all(|t| tree.conditional_expectation(&offsets[s], t).max_abs() <= 1e-12)
        });
        let strong = check_measure_tc(&experiment.measure, TcId::Strong, &experiment.doc.check)
            .map_err(|e| e.to_string())?;
        ensure!(
            strong.is_corroborated() == centred && strong.is_counterexample() == !centred,
            "{name}: centred {centred} but {}",
            strong.line()
        );
        verdicts.push(format!(
            "{name}: centred {centred}, strong {}",
            strong.status
        ));
    }
    Ok(format!(
        "closed-form gap {worst:.1e}; {}",
        verdicts.join("; ")
    ))
}

fn criterion_8() -> Check {
    let overrides = Overrides {
        seed: Some(7),
        trials: Some(500),
        ..Overrides::default()
    };
    let report = run_command(Command::Table1, None, &overrides).map_err(|e| e.to_string())?;
    ensure!(
        report.outcome == Outcome::Pass,
        "mismatched cells: {}",
        report.notes.join("; ")
    );
    let cells: usize = report.tables[0].rows.len() * (report.tables[0].header.len() - 1);
    Ok(format!(
        "{cells} cells match on a [2,3,2] tree with 500 trials"
    ))
}

fn criterion_9() -> Check {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .map_err(|e| e.to_string())?
        .map(|entry| entry.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    ensure!(!paths.is_empty(), "no fixtures");
    for path in &paths {
        let experiment = load_experiment(path).map_err(|e| e.to_string())?;
        let audit = audit_configuration(&experiment.measure, &experiment.doc.check)
            .map_err(|e| e.to_string())?;
        ensure!(
            audit.violations.is_empty(),
            "{}: violated edges {:?}",
            path.display(),
            audit.violations.iter().map(|v| &v.edge).collect::<Vec<_>>()
        );
    }
    let experiment = fixture("sup_norm_recursive.json");
    let mut broken = experiment.doc.check.clone();
    broken.mutation = Mutation::ForgetZeroOffset;
    let audit = audit_configuration(&experiment.measure, &broken).map_err(|e| e.to_string())?;
    ensure!(
        !audit.violations.is_empty(),
        "the broken checker went unnoticed"
    );
    let edges: Vec<_> = audit.violations.iter().map(|v| v.edge.as_str()).collect();
    Ok(format!(
        "{} fixtures clean; mutant flagged on edges {}",
        paths.len(),
        edges.join(",")
    ))
}

fn criterion_10() -> Check {
    let tree = Arc::new(ScenarioTree::uniform(&[2, 3, 2]).unwrap());
    let family = RiskFamily::uniform(RiskKind::Cvar { alpha: 0.5 }, 3).unwrap();
    let spec = CheckSpec::with_trials(200, 8);
    let measure = Arc::new(
        RobustRiskMeasure::new(family.clone(), static_set(&tree, UncertaintyKind::Identity))
            .unwrap(),
    );
    let mut r = rng(1010);
    let processes: Vec<_> = (0..200)
        .map(|_| random_process(&mut r, &tree, -1.0, 1.0))
        .collect();
    let mut summary = Vec::new();
    for flavor in Flavor::ALL {
        let set = adversarial_equivalent_set(&measure, flavor, &spec).map_err(|e| e.to_string())?;
        let twin =
            RobustRiskMeasure::new(family.clone(), set.clone()).map_err(|e| e.to_string())?;
        let mut gap = 0.0_f64;
        for x in &processes {
            for t in 0..3 {
                let a = measure.robust_value(t, x).map_err(|e| e.to_string())?;
                let b = twin.robust_value(t, x).map_err(|e| e.to_string())?;
                gap = gap.max(a.max_abs_diff(&b));
            }
        }
        ensure!(gap <= 1e-9, "{flavor}: value gap {gap:.3e}");
        let before = check_set_property(measure.set().as_ref(), flavor.target(), &spec)
            .map_err(|e| e.to_string())?;
        let after =
            check_set_property(set.as_ref(), flavor.target(), &spec).map_err(|e| e.to_string())?;
        ensure!(
            before.is_corroborated(),
            "{flavor}: original {}",
            before.line()
        );
        ensure!(
            after.is_counterexample(),
            "{flavor}: adversarial {}",
            after.line()
        );
        summary.push(format!("{flavor} gap {gap:.1e}"));
    }
    Ok(summary.join(", "))
}

fn random_event(r: &mut impl Rng, tree: &ScenarioTree, t: usize) -> EventSet {
    let members = (0..tree.width(t)).map(|_| r.gen_bool(0.5)).collect();
    EventSet::new(tree, t, members).unwrap()
}

fn criterion_11() -> Check {
    let kinds = [
        RiskKind::Expectation,
        RiskKind::Cvar { alpha: 0.5 },
        RiskKind::Cvar { alpha: 0.9 },
        RiskKind::Entropic { beta: 1.0 },
        RiskKind::WorstCase,
    ];
    let tol = 1e-9;
    let mut r = rng(1111);
    let mut literal_cases = 0;
    for kind in kinds {
        for trial in 0..500 {
            let horizon = r.gen_range(1..=3);
            let tree = random_tree(&mut r, horizon, 1, 3);
            let t = r.gen_range(0..horizon);
            let eval = |z: &AdaptedVector| evaluate_one_step(&kind, &tree, z).unwrap();
            let zero = eval(&AdaptedVector::zeros(&tree, t + 1));
            ensure!(
                zero.values().iter().all(|v| *v == 0.0),
                "{}: rho(0) = {:?}",
                kind.label(),
                zero.values()
            );
            let z = random_vector(&mut r, &tree, t + 1, -1.0, 1.0);
            let bump = random_vector(&mut r, &tree, t + 1, 0.0, 1.0);
            let w = &z + &bump;
            let (rz, rw) = (eval(&z), eval(&w));
            ensure!(
                rz.values()
                    .iter()
                    .zip(rw.values())
                    .all(|(a, b)| *a <= b + tol),
                "{}: monotonicity, trial {trial}",
                kind.label()
            );
            let c = random_vector(&mut r, &tree, t, -1.0, 1.0);
            let shifted = eval(&(&z + &tree.lift(&c, t + 1)));
            ensure!(
                shifted.max_abs_diff(&(&rz + &c)) <= tol,
                "{}: translation invariance, trial {trial}",
                kind.label()
            );
            let event = random_event(&mut r, &tree, t);
            let mixed = eval(&mix_vectors(&tree, &event, &z, &w));
            ensure!(
                mixed.max_abs_diff(&mix_vectors(&tree, &event, &rz, &rw)) <= tol,
                "{}: locality, trial {trial}",
                kind.label()
            );
            if kind.is_subadditive() {
                // Accepted pairs: shift each position below its own risk.
                let accepted = |v: &AdaptedVector, rng: &mut CrateRng| {
                    let own = eval(v);
                    let slack = random_vector(rng, &tree, t, 0.0, 0.5);
                    v - &tree.lift(&(&own + &slack), t + 1)
                };
                let a = accepted(&z, &mut r);
                let b = accepted(&w, &mut r);
                ensure!(
                    acceptance_indicator(&kind, &tree, &a, tol)
                        .unwrap()
                        .iter()
                        .all(|v| *v),
                    "{}: sampled position not accepted",
                    kind.label()
                );
                let sum = acceptance_indicator(&kind, &tree, &(&a + &b), tol).unwrap();
                ensure!(
                    sum.iter().all(|v| *v),
                    "{}: A + A not inside A, trial {trial}",
                    kind.label()
                );
            }
        }
    }
    for trial in 0..500 {
        let horizon = r.gen_range(1..=3);
        let tree = random_tree(&mut r, horizon, 1, 3);
        let t = r.gen_range(0..horizon);
        let z = random_vector(&mut r, &tree, t + 1, -1.0, 1.0);
        let small = evaluate_one_step(&RiskKind::Entropic { beta: 1e-4 }, &tree, &z).unwrap();
        let mean = evaluate_one_step(&RiskKind::Expectation, &tree, &z).unwrap();
        ensure!(
            small.max_abs_diff(&mean) <= 1e-2,
            "entropic beta 1e-4, trial {trial}"
        );
        let large = evaluate_one_step(&RiskKind::Entropic { beta: 50.0 }, &tree, &z).unwrap();
        let top = evaluate_one_step(&RiskKind::WorstCase, &tree, &z).unwrap();
        for i in 0..tree.width(t) {
            let xs = tree.child_values(&z, i);
            let probs = tree.child_probs(t, i);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let p_max: f64 = xs
                .iter()
                .zip(&probs)
                .filter(|(v, _)| **v == max)
                .map(|(_, p)| p)
                .sum();
            let gap = top.value(i) - large.value(i);
            ensure!(
                gap >= -tol && gap <= (1.0 / p_max).ln() / 50.0 + tol,
                "entropic beta 50, trial {trial}: gap {gap}"
            );
            if p_max >= (-0.5_f64).exp() {
                literal_cases += 1;
                ensure!(
                    gap <= 1e-2,
                    "entropic beta 50, trial {trial}: gap {gap} with p_max {p_max}"
                );
            }
        }
    }
    Ok(format!("5 kinds x 500 trials; entropic limits on 500 trials ({literal_cases} atoms at the literal 1e-2)"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        (
            "sup-norm ball closed form",
            "1e-9 per atom, < 30 s",
            criterion_1,
        ),
        (
            "oracle sandwich",
            "gap in [-1e-9, grid bound], < 2 min",
            criterion_2,
        ),
        (
            "KL dual vs simplex grid",
            "1e-4 at resolution 1e-3",
            criterion_3,
        ),
        (
            "consolidated duality",
            "membership tolerance 1e-9, boundary nudge 1e-10",
            criterion_4,
        ),
        ("recursion identity", "1e-9 per atom", criterion_5),
        ("time-consistency suite", "500/500/100 trials", criterion_6),
        (
            "expectation band closed form",
            "1e-12 per atom",
            criterion_7,
        ),
        (
            "uncertainty-set property table",
            "exact cell match",
            criterion_8,
        ),
        (
            "implication-lattice audit",
            "empty violation list",
            criterion_9,
        ),
        (
            "adversarial equivalent sets",
            "1e-9 on 200 processes",
            criterion_10,
        ),
        (
            "risk-measure axioms",
            "1e-9; entropic limits 1e-2 and log(1/p_max)/50",
            criterion_11,
        ),
    ];
    let mut failed = 0;
    for (k, (name, tolerance, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match result {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name} [{tolerance}]: {detail}",
                k + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} FAIL  {name} [{tolerance}]: {detail}",
                    k + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
