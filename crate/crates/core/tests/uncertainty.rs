use std::sync::Arc;

use dynrisk::properties::table1::sample_measures;
use dynrisk::riskmeasures::RiskKind;
use dynrisk::sampling::{random_process, random_tree, random_vector, rng};
use dynrisk::space::{mix, AdaptedProcess, EventSet, ScenarioTree};
use dynrisk::uncertainty::distance::conditional_wasserstein;
use dynrisk::uncertainty::{
    tolerance_eval, DynamicSet, DynamicUncertaintySet, MeasureSpec, ToleranceRule, UncertaintyKind,
};
use proptest::prelude::*;
use rand::Rng;

fn tree_from(seed: u64) -> Arc<ScenarioTree> {
    let mut r = rng(seed);
    let horizon = r.gen_range(1..=3);
    Arc::new(random_tree(&mut r, horizon, 1, 3))
}

fn balls(epsilon: f64) -> Vec<UncertaintyKind> {
    let tolerance = ToleranceRule::Constant { epsilon };
    vec![
        UncertaintyKind::SupNormBall { tolerance },
        UncertaintyKind::WassersteinBall {
            order: 1.0,
            tolerance,
        },
        UncertaintyKind::WassersteinBall {
            order: 2.0,
            tolerance,
        },
        UncertaintyKind::KlBall { tolerance },
    ]
}

const PROBES: [RiskKind; 3] = [
    RiskKind::Expectation,
    RiskKind::Cvar { alpha: 0.5 },
    RiskKind::WorstCase,
];

#[test]
fn tolerance_examples() {
    let tree = ScenarioTree::uniform(&[2, 2, 2]).unwrap();
    let x = AdaptedProcess::zeros(&tree).map(|_| 0.4);
    let horizon = tolerance_eval(&ToleranceRule::Horizon { epsilon: 0.1 }, &tree, &x, 2).unwrap();
    assert!(horizon.values().iter().all(|v| (v - 0.1).abs() < 1e-15));
    let var = tolerance_eval(&ToleranceRule::VarScaled { epsilon: 3.0 }, &tree, &x, 1).unwrap();
    assert_eq!(var.values(), &[0.0]);
    assert!(ToleranceRule::Constant { epsilon: -0.1 }
        .validate()
        .is_err());
}

#[test]
fn sup_norm_membership_example() {
    let tree = Arc::new(ScenarioTree::uniform(&[2]).unwrap());
    let set = DynamicUncertaintySet::uniform(tree.clone(), balls(0.1).remove(0)).unwrap();
    let x = AdaptedProcess::from_values(&tree, vec![vec![0.0], vec![0.5, -0.5]]).unwrap();
    let far = x.at(1).map(|v| v + 0.2);
    assert_eq!(set.contains(1, &far, &x, 1e-9).unwrap(), vec![false]);
    let identity = DynamicUncertaintySet::uniform(tree, UncertaintyKind::Identity).unwrap();
    assert_eq!(
        identity
            .contains(1, &x.at(1).map(|v| v + 1e-12), &x, 1e-9)
            .unwrap(),
        vec![true]
    );
}

#[test]
fn measure_family_requires_positive_densities() {
    let tree = Arc::new(ScenarioTree::uniform(&[2]).unwrap());
    let density = tree
        .ids_at(1)
        .iter()
        .zip([2.0, 0.0])
        .map(|(id, d)| (id.clone(), d))
        .collect();
    let kind = UncertaintyKind::MeasureFamily {
        measures: vec![MeasureSpec {
            density,
            penalty: 0.0,
        }],
    };
    assert!(DynamicUncertaintySet::uniform(tree, kind).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn centre_is_a_member_and_bounds_the_supremum(seed in any::<u64>(), epsilon in 0.0..0.5f64) {
        let tree = tree_from(seed);
        let mut r = rng(seed);
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let t = r.gen_range(1..=tree.horizon());
        for kind in balls(epsilon) {
            let set = DynamicUncertaintySet::uniform(tree.clone(), kind.clone()).unwrap();
            prop_assert!(set.contains(t, x.at(t), &x, 1e-9).unwrap().iter().all(|b| *b));
            for probe in PROBES {
                let centre = dynrisk::riskmeasures::evaluate_one_step(&probe, &tree, x.at(t)).unwrap();
                let sup = set.sup(t, &probe, &x).unwrap();
                for (s, c) in sup.iter().zip(centre.values()) {
                    prop_assert!(s.unwrap() >= c - 1e-9);
                }
            }
        }
    }

    #[test]
    fn supremum_grows_with_the_radius(seed in any::<u64>(), a in 0.0..0.4f64, b in 0.0..0.4f64) {
        let tree = tree_from(seed);
        let mut r = rng(seed);
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        for (k_small, k_large) in balls(small).into_iter().zip(balls(large)) {
            let s = DynamicUncertaintySet::uniform(tree.clone(), k_small).unwrap();
            let l = DynamicUncertaintySet::uniform(tree.clone(), k_large).unwrap();
            for probe in PROBES {
                let vs = s.sup(1, &probe, &x).unwrap();
                let vl = l.sup(1, &probe, &x).unwrap();
                for (p, q) in vs.iter().zip(&vl) {
                    prop_assert!(p.unwrap() <= q.unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn constant_radius_suprema_are_translation_covariant(seed in any::<u64>()) {
        let tree = tree_from(seed);
        let mut r = rng(seed);
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let c = random_vector(&mut r, &tree, 0, -1.0, 1.0);
        let shifted = x.with_added(&tree.lift(&c, 1));
        for kind in balls(0.2) {
            let set = DynamicUncertaintySet::uniform(tree.clone(), kind).unwrap();
            for probe in PROBES {
                let a = set.sup(1, &probe, &x).unwrap();
                let b = set.sup(1, &probe, &shifted).unwrap();
                prop_assert!((b[0].unwrap() - a[0].unwrap() - c.value(0)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn wasserstein_triangle_inequality(seed in any::<u64>(), order in 1.0..3.0f64) {
        let tree = tree_from(seed);
        let mut r = rng(seed);
        let t = r.gen_range(1..=tree.horizon());
        let a = random_vector(&mut r, &tree, t, -1.0, 1.0);
        let b = random_vector(&mut r, &tree, t, -1.0, 1.0);
        let c = random_vector(&mut r, &tree, t, -1.0, 1.0);
        let ab = conditional_wasserstein(order, &tree, &a, &b).unwrap();
        let bc = conditional_wasserstein(order, &tree, &b, &c).unwrap();
        let ac = conditional_wasserstein(order, &tree, &a, &c).unwrap();
        let ba = conditional_wasserstein(order, &tree, &b, &a).unwrap();
        prop_assert!(ab.max_abs_diff(&ba) <= 1e-12);
        for i in 0..ac.len() {
            prop_assert!(ac.value(i) <= ab.value(i) + bc.value(i) + 1e-9);
        }
    }

    #[test]
    fn suprema_are_local_on_parent_events(seed in any::<u64>()) {
        let tree = tree_from(seed);
        let mut r = rng(seed);
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let t = r.gen_range(1..=tree.horizon());
        let members: Vec<bool> = (0..tree.width(t - 1)).map(|_| r.gen_bool(0.5)).collect();
        let event = EventSet::new(&tree, t - 1, members.clone()).unwrap();
        let masked = mix(&tree, &event, &x, &AdaptedProcess::zeros(&tree)).unwrap();
        let measures = sample_measures(&tree, seed);
        let mut kinds = balls(0.2);
        kinds.push(UncertaintyKind::Identity);
        kinds.push(UncertaintyKind::MeasureFamily { measures });
        for kind in kinds {
            let set = DynamicUncertaintySet::uniform(tree.clone(), kind).unwrap();
            for probe in PROBES {
                let full = set.sup(t, &probe, &x).unwrap();
                let local = set.sup(t, &probe, &masked).unwrap();
                for (i, inside) in members.iter().enumerate() {
                    if *inside {
                        prop_assert!((full[i].unwrap() - local[i].unwrap()).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
