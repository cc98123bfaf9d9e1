use std::sync::Arc;

use dynrisk::oracle::{grid_worst_case, kl_simplex_sup, GridSpec};
use dynrisk::riskmeasures::{evaluate_one_step, RiskFamily, RiskKind};
use dynrisk::robust::RobustRiskMeasure;
use dynrisk::sampling::{random_process, random_tree, rng};
use dynrisk::space::{AdaptedProcess, ScenarioTree};
use dynrisk::uncertainty::{DynamicSet, DynamicUncertaintySet, ToleranceRule, UncertaintyKind};
use dynrisk::Error;
use rand::Rng;

fn production(
    kind: &UncertaintyKind,
    rho: RiskKind,
    tree: &Arc<ScenarioTree>,
    x: &AdaptedProcess,
) -> Vec<f64> {
    let set = DynamicUncertaintySet::uniform(tree.clone(), kind.clone()).unwrap();
    set.sup(1, &rho, x)
        .unwrap()
        .into_iter()
        .map(|v| v.unwrap())
        .collect()
}

/// `grid ≤ production + 1e−9` and `production ≤ grid + bound` on every atom.
fn sandwich(kind: &UncertaintyKind, rho: RiskKind, tree: &Arc<ScenarioTree>, x: &AdaptedProcess) {
    let prod = production(kind, rho, tree, x);
    let grid = grid_worst_case(kind, &rho, tree, x, 0, &GridSpec::default()).unwrap();
    for (p, g) in prod.iter().zip(&grid) {
        let gap = p - g.value;
        assert!(
            gap >= -1e-9 && gap <= g.bound,
            "{} with {}: production {p}, grid {} (bound {})",
            kind.label(),
            rho.label(),
            g.value,
            g.bound
        );
    }
}

#[test]
fn ball_solvers_are_sandwiched_by_the_grid() {
    let mut r = rng(11);
    for _ in 0..12 {
        let tree = Arc::new(random_tree(&mut r, 1, 2, 3));
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        for epsilon in [0.1, 0.25] {
            let rule = ToleranceRule::Constant { epsilon };
            for rho in [RiskKind::Expectation, RiskKind::Cvar { alpha: 0.5 }] {
                sandwich(
                    &UncertaintyKind::SupNormBall { tolerance: rule },
                    rho,
                    &tree,
                    &x,
                );
                for order in [1.0, 2.0] {
                    sandwich(
                        &UncertaintyKind::WassersteinBall {
                            order,
                            tolerance: rule,
                        },
                        rho,
                        &tree,
                        &x,
                    );
                }
                sandwich(&UncertaintyKind::KlBall { tolerance: rule }, rho, &tree, &x);
            }
        }
    }
}

#[test]
fn identity_grid_is_the_centre() {
    let tree = Arc::new(ScenarioTree::uniform(&[3]).unwrap());
    let x = AdaptedProcess::from_values(&tree, vec![vec![0.0], vec![0.3, -0.2, 0.9]]).unwrap();
    let grid = grid_worst_case(
        &UncertaintyKind::Identity,
        &RiskKind::Expectation,
        &tree,
        &x,
        0,
        &GridSpec::default(),
    )
    .unwrap();
    assert!((grid[0].value - (0.3 - 0.2 + 0.9) / 3.0).abs() < 1e-15);
}

#[test]
fn grid_refuses_wide_atoms_and_large_grids() {
    let tree = Arc::new(ScenarioTree::uniform(&[4]).unwrap());
    let x = AdaptedProcess::zeros(&tree);
    let kind = UncertaintyKind::SupNormBall {
        tolerance: ToleranceRule::Constant { epsilon: 0.1 },
    };
    let err = grid_worst_case(
        &kind,
        &RiskKind::Expectation,
        &tree,
        &x,
        0,
        &GridSpec::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::TooManyChildren { children: 4, .. }));
    let grid = GridSpec {
        points: 1000,
        max_children: 4,
        ..GridSpec::default()
    };
    let err = grid_worst_case(&kind, &RiskKind::Expectation, &tree, &x, 0, &grid).unwrap_err();
    assert!(matches!(err, Error::GridTooLarge { .. }));
}

#[test]
fn kl_dual_matches_simplex_search() {
    let mut r = rng(5);
    for k in 0..30 {
        let tree = Arc::new(random_tree(&mut r, 1, 2, 3));
        let x = random_process(&mut r, &tree, -1.0, 1.0);
        let epsilon = match k % 3 {
            0 => 0.0,
            1 => 10.0,
            _ => r.gen_range(0.001..0.5),
        };
        let dual = production(
            &UncertaintyKind::KlBall {
                tolerance: ToleranceRule::Constant { epsilon },
            },
            RiskKind::Expectation,
            &tree,
            &x,
        )[0];
        let xs = tree.child_values(x.at(1), 0);
        let probs = tree.child_probs(0, 0);
        let grid = kl_simplex_sup(&xs, &probs, epsilon, 1e-3).unwrap();
        assert!(
            (dual - grid).abs() <= 1e-4,
            "epsilon {epsilon}: dual {dual} vs simplex {grid}"
        );
        if epsilon == 0.0 {
            let mean = evaluate_one_step(&RiskKind::Expectation, &tree, x.at(1))
                .unwrap()
                .value(0);
            assert!((dual - mean).abs() <= 1e-9);
        }
    }
}

#[test]
fn kl_simplex_rejects_coarse_resolution() {
    assert!(matches!(
        kl_simplex_sup(&[0.0, 1.0], &[0.5, 0.5], 0.1, 0.01),
        Err(Error::CoarseResolution { .. })
    ));
}

#[test]
fn kl_example_value_lies_between_mean_and_max() {
    let tree = Arc::new(ScenarioTree::uniform(&[2]).unwrap());
    let x = AdaptedProcess::from_values(&tree, vec![vec![0.0], vec![0.0, 1.0]]).unwrap();
    let family = RiskFamily::uniform(RiskKind::Expectation, 1).unwrap();
    let kind = UncertaintyKind::KlBall {
        tolerance: ToleranceRule::Constant { epsilon: 0.02 },
    };
    let set = Arc::new(DynamicUncertaintySet::uniform(tree.clone(), kind).unwrap());
    let measure = RobustRiskMeasure::new(family, set).unwrap();
    let v = measure.robust_value(0, &x).unwrap().value(0);
    assert!(v > 0.5 && v < 1.0);
    let grid = kl_simplex_sup(&[0.0, 1.0], &[0.5, 0.5], 0.02, 1e-4).unwrap();
    assert!((v - grid).abs() <= 1e-4);
}

#[test]
fn wasserstein_expectation_example() {
    let tree = Arc::new(ScenarioTree::uniform(&[2]).unwrap());
    let x = AdaptedProcess::from_values(&tree, vec![vec![0.0], vec![0.0, 2.0]]).unwrap();
    let kind = UncertaintyKind::WassersteinBall {
        order: 1.0,
        tolerance: ToleranceRule::Constant { epsilon: 0.5 },
    };
    assert!((production(&kind, RiskKind::Expectation, &tree, &x)[0] - 1.5).abs() < 1e-12);
    let grid = grid_worst_case(
        &kind,
        &RiskKind::Expectation,
        &tree,
        &x,
        0,
        &GridSpec::default(),
    )
    .unwrap();
    assert!((grid[0].value - 1.5).abs() <= grid[0].bound);
}
