use std::sync::Arc;

use dynrisk::properties::adversarial::{adversarial_equivalent_set, Flavor};
use dynrisk::properties::audit::{
    audit_configuration, audit_implications, Condition, VerdictTable,
};
use dynrisk::properties::table1::table1;
use dynrisk::properties::{
    check_measure_property, check_measure_tc, check_set_property, check_set_tc, CheckSpec,
    MeasureProperty, Mutation, SetProperty, Status, TcId, Verdict,
};
use dynrisk::riskmeasures::{RiskFamily, RiskKind};
use dynrisk::robust::{construct_recursive, ConsolidatedSet, RobustRiskMeasure};
use dynrisk::sampling::{random_process, rng};
use dynrisk::space::ScenarioTree;
use dynrisk::uncertainty::{DynamicSet, DynamicUncertaintySet, ToleranceRule, UncertaintyKind};
use dynrisk::Error;

fn tree() -> Arc<ScenarioTree> {
    Arc::new(ScenarioTree::uniform(&[2, 3, 2]).unwrap())
}

fn static_set(tree: &Arc<ScenarioTree>, kind: UncertaintyKind) -> Arc<dyn DynamicSet> {
    Arc::new(DynamicUncertaintySet::uniform(tree.clone(), kind).unwrap())
}

fn constant_ball(epsilon: f64) -> UncertaintyKind {
    UncertaintyKind::SupNormBall {
        tolerance: ToleranceRule::Constant { epsilon },
    }
}

fn cvar_family() -> RiskFamily {
    RiskFamily::uniform(RiskKind::Cvar { alpha: 0.5 }, 3).unwrap()
}

#[test]
fn normalised_construction_is_strongly_time_consistent() {
    let tree = tree();
    let base = static_set(
        &tree,
        UncertaintyKind::KlBall {
            tolerance: ToleranceRule::Zero,
        },
    );
    let measure =
        construct_recursive(base, RiskFamily::uniform(RiskKind::Expectation, 3).unwrap()).unwrap();
    let verdict =
        check_measure_tc(&measure, TcId::Strong, &CheckSpec::with_trials(500, 1)).unwrap();
    assert!(verdict.is_corroborated(), "{}", verdict.line());
    assert_eq!(verdict.trials, 500);
}

#[test]
fn non_normalised_construction_is_weakly_recursive_but_not_strong() {
    let tree = tree();
    let measure =
        construct_recursive(static_set(&tree, constant_ball(0.1)), cvar_family()).unwrap();
    let spec = CheckSpec::with_trials(500, 2);
    assert!(check_measure_tc(&measure, TcId::WeakRecursive, &spec)
        .unwrap()
        .is_corroborated());
    let strong = check_measure_tc(&measure, TcId::Strong, &spec).unwrap();
    let witness = strong.witness().expect("strong time-consistency fails");
    assert!(witness.gap > spec.tol);
}

#[test]
fn plain_static_set_fails_at_the_current_time() {
    let tree = tree();
    let measure =
        RobustRiskMeasure::new(cvar_family(), static_set(&tree, constant_ball(0.1))).unwrap();
    let verdict = check_set_tc(
        &measure,
        measure.set().as_ref(),
        TcId::Strong,
        &CheckSpec::with_trials(100, 3),
    )
    .unwrap();
    let witness = verdict
        .witness()
        .expect("static sets are not strongly time-consistent");
    assert_eq!(witness.horizon, Some(witness.time));
}

#[test]
fn short_horizons_are_vacuous() {
    let tree = Arc::new(ScenarioTree::uniform(&[3]).unwrap());
    let measure = RobustRiskMeasure::new(
        RiskFamily::uniform(RiskKind::Expectation, 1).unwrap(),
        static_set(&tree, constant_ball(0.1)),
    )
    .unwrap();
    let verdict = check_measure_tc(&measure, TcId::Strong, &CheckSpec::with_trials(20, 1)).unwrap();
    assert_eq!(verdict.status, Status::Vacuous);
}

#[test]
fn witnesses_replay_with_the_same_seed() {
    let tree = tree();
    let measure =
        construct_recursive(static_set(&tree, constant_ball(0.1)), cvar_family()).unwrap();
    let spec = CheckSpec::with_trials(200, 9);
    let a = check_measure_tc(&measure, TcId::Strong, &spec).unwrap();
    let b = check_measure_tc(&measure, TcId::Strong, &spec).unwrap();
    assert_eq!(
        a.witness().map(|w| w.summary()),
        b.witness().map(|w| w.summary())
    );
    let mut replay = spec.clone();
    replay.first_trial = a.witness().unwrap().trial;
    replay.trials = 1;
    let c = check_measure_tc(&measure, TcId::Strong, &replay).unwrap();
    assert_eq!(
        a.witness().map(|w| w.summary()),
        c.witness().map(|w| w.summary())
    );
}

#[test]
fn measure_and_consolidated_verdicts_agree() {
    let tree = tree();
    let spec = CheckSpec::with_trials(150, 4);
    let measures = [
        construct_recursive(static_set(&tree, constant_ball(0.1)), cvar_family()).unwrap(),
        RobustRiskMeasure::new(cvar_family(), static_set(&tree, constant_ball(0.1))).unwrap(),
        construct_recursive(static_set(&tree, UncertaintyKind::Identity), cvar_family()).unwrap(),
    ];
    for measure in measures {
        let measure = Arc::new(measure);
        let consolidated = ConsolidatedSet::new(measure.clone());
        for id in TcId::MEASURE_LEVEL {
            let r = check_measure_tc(&measure, *id, &spec).unwrap();
            let u = check_set_tc(&measure, &consolidated, *id, &spec).unwrap();
            assert_eq!(
                r.status,
                u.status,
                "{} {}: {} vs {}",
                measure.describe(),
                id,
                r.line(),
                u.line()
            );
        }
    }
}

#[test]
fn measure_properties_follow_the_set() {
    let tree = tree();
    let spec = CheckSpec::with_trials(300, 5);
    let constant =
        RobustRiskMeasure::new(cvar_family(), static_set(&tree, constant_ball(0.1))).unwrap();
    assert!(
        check_measure_property(&constant, MeasureProperty::TranslationInvariance, &spec)
            .unwrap()
            .is_corroborated()
    );
    let normalisation =
        check_measure_property(&constant, MeasureProperty::Normalisation, &spec).unwrap();
    assert!((normalisation.witness().unwrap().gap - 0.1).abs() < 1e-9);
    let family = RiskFamily::uniform(RiskKind::Expectation, 3).unwrap();
    let probability = UncertaintyKind::MeasureFamily {
        measures: dynrisk::properties::table1::sample_measures(&tree, 1)[..1].to_vec(),
    };
    let additive = RobustRiskMeasure::new(family, static_set(&tree, probability)).unwrap();
    for property in [
        MeasureProperty::Monotonicity,
        MeasureProperty::Locality,
        MeasureProperty::Additivity,
    ] {
        assert!(
            check_measure_property(&additive, property, &spec)
                .unwrap()
                .is_corroborated(),
            "{property}"
        );
    }
}

#[test]
fn set_checker_classifies_known_fixtures() {
    let tree = tree();
    let spec = CheckSpec::with_trials(200, 6);
    let check = |kind: UncertaintyKind, property| {
        check_set_property(static_set(&tree, kind).as_ref(), property, &spec).unwrap()
    };
    let normalisation = check(constant_ball(0.1), SetProperty::Normalisation);
    assert!(normalisation.is_counterexample());
    assert!(check(
        UncertaintyKind::KlBall {
            tolerance: ToleranceRule::Zero
        },
        SetProperty::Normalisation
    )
    .is_corroborated());
    assert!(check(UncertaintyKind::Identity, SetProperty::Static).is_corroborated());
    let derived =
        construct_recursive(static_set(&tree, constant_ball(0.1)), cvar_family()).unwrap();
    assert!(
        check_set_property(derived.set().as_ref(), SetProperty::Static, &spec)
            .unwrap()
            .is_counterexample()
    );
}

#[test]
fn table_matches_published_pattern() {
    let table = table1(tree(), &CheckSpec::with_trials(200, 7)).unwrap();
    for (row, cells) in table.rows.iter().zip(&table.cells) {
        for cell in cells {
            assert!(
                cell.matches(),
                "{row}: {} instead of {} ({:?})",
                cell.text,
                cell.expected,
                cell.checks
            );
        }
    }
}

#[test]
fn adversarial_sets_keep_values_and_break_their_target() {
    let tree = tree();
    let spec = CheckSpec::with_trials(200, 8);
    let family = cvar_family();
    for kind in [UncertaintyKind::Identity, constant_ball(0.1)] {
        let measure =
            Arc::new(RobustRiskMeasure::new(family.clone(), static_set(&tree, kind)).unwrap());
        for flavor in Flavor::ALL {
            let set = match adversarial_equivalent_set(&measure, flavor, &spec) {
                Ok(set) => set,
                Err(Error::FlavorInapplicable { .. }) => {
                    assert!(
                        check_set_property(measure.set().as_ref(), flavor.target(), &spec)
                            .unwrap()
                            .is_counterexample()
                    );
                    continue;
                }
                Err(e) => panic!("{e}"),
            };
            let twin = RobustRiskMeasure::new(family.clone(), set.clone()).unwrap();
            let mut r = rng(31);
            for _ in 0..50 {
                let x = random_process(&mut r, &tree, -1.0, 1.0);
                for t in 0..3 {
                    let gap = measure
                        .robust_value(t, &x)
                        .unwrap()
                        .max_abs_diff(&twin.robust_value(t, &x).unwrap());
                    assert!(gap <= 1e-9, "{flavor}: gap {gap}");
                }
            }
            let before =
                check_set_property(measure.set().as_ref(), flavor.target(), &spec).unwrap();
            let after = check_set_property(set.as_ref(), flavor.target(), &spec).unwrap();
            assert!(
                before.is_corroborated() && after.is_counterexample(),
                "{flavor}: {} / {}",
                before.line(),
                after.line()
            );
        }
    }
}

#[test]
fn audit_is_clean_and_catches_a_broken_checker() {
    let tree = tree();
    let spec = CheckSpec::with_trials(200, 10);
    let bases = [
        UncertaintyKind::Identity,
        constant_ball(0.1),
        UncertaintyKind::KlBall {
            tolerance: ToleranceRule::Zero,
        },
    ];
    for base in &bases {
        let set = static_set(&tree, base.clone());
        for measure in [
            RobustRiskMeasure::new(cvar_family(), set.clone()).unwrap(),
            construct_recursive(set, cvar_family()).unwrap(),
        ] {
            let audit = audit_configuration(&Arc::new(measure), &spec).unwrap();
            assert!(
                audit.violations.is_empty(),
                "{}: {:?}",
                audit.table.target,
                audit.violations
            );
        }
    }
    let mut broken = spec.clone();
    broken.mutation = Mutation::ForgetZeroOffset;
    let measure =
        construct_recursive(static_set(&tree, constant_ball(0.1)), cvar_family()).unwrap();
    let audit = audit_configuration(&Arc::new(measure), &broken).unwrap();
    assert!(!audit.violations.is_empty());
}

fn verdict(status: Status) -> Verdict {
    Verdict {
        property: String::new(),
        target: String::new(),
        status,
        trials: 1,
        skipped: 0,
        witness: None,
    }
}

#[test]
fn audit_edges_fire_on_synthetic_tables() {
    let mut table = VerdictTable::new("synthetic");
    for id in TcId::ALL {
        table.insert_verdict(Condition::Tc(*id), verdict(Status::Corroborated));
    }
    for flag in [
        Condition::Normalised,
        Condition::Monotone,
        Condition::TranslationInvariant,
        Condition::ZeroNonPositive,
        Condition::ZeroInConsolidated,
        Condition::CarryInvariant,
    ] {
        table.insert_flag(flag, true);
    }
    assert!(audit_implications(&table).unwrap().is_empty());
    let mut broken = table.clone();
    broken.insert_verdict(
        Condition::Tc(TcId::WeakRecursive),
        verdict(Status::Counterexample),
    );
    let edges: Vec<String> = audit_implications(&broken)
        .unwrap()
        .into_iter()
        .map(|v| v.edge)
        .collect();
    assert!(edges.contains(&"i".to_string()) && edges.contains(&"v".to_string()));
    let mut strong = table.clone();
    strong.insert_verdict(Condition::Tc(TcId::Strong), verdict(Status::Counterexample));
    let edges: Vec<String> = audit_implications(&strong)
        .unwrap()
        .into_iter()
        .map(|v| v.edge)
        .collect();
    assert_eq!(edges, vec!["ii".to_string()]);
    let mut incomplete = VerdictTable::new("incomplete");
    incomplete.insert_flag(Condition::Normalised, true);
    assert!(matches!(
        audit_implications(&incomplete),
        Err(Error::IncompleteTable { .. })
    ));
}
