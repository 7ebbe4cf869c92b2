mod common;

use std::path::PathBuf;

use common::random_dataset;
use proptest::prelude::*;
use tlnp::oracle::{solve_procedure8, solve_target_hat, FiniteClass, OracleFixture, RiskTable};
use tlnp::{Arch, Model, ModelKind, Role, SurrogateLoss};

fn class(seed: u64, m: usize) -> FiniteClass {
    let models = (0..m)
        .map(|i| {
            let mut model = Model::init(ModelKind::Linear, Arch::new(2), seed.wrapping_add(i as u64)).unwrap();
            for p in model.params.iter_mut() {
                *p *= 150.0;
            }
            let last = model.params.len() - 1;
            model.params[last] = -1.0 - (i % 5) as f64;
            model
        })
        .collect();
    FiniteClass::new(models).unwrap()
}

fn table(seed: u64, m: usize, same_source: bool) -> RiskTable {
    let normal = random_dataset(seed, 60, 2, 0.0, Role::Normal);
    let target = random_dataset(seed + 1, 15, 2, 0.7, Role::TargetAbnormal);
    let source = if same_source {
        target.clone().with_role(Role::SourceAbnormal)
    } else {
        random_dataset(seed + 2, 40, 2, 0.3, Role::SourceAbnormal)
    };
    RiskTable::compute(&class(seed, m), &SurrogateLoss::exponential(), &normal, &target, &source).unwrap()
}

fn loose_alpha(t: &RiskTable) -> f64 {
    t.type1.iter().copied().fold(f64::INFINITY, f64::min) + 0.2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn source_risk_is_non_increasing_in_slack(seed in 0u64..10_000, m in 2usize..60) {
        let t = table(seed, m, false);
        let alpha = loose_alpha(&t);
        let mut previous = f64::INFINITY;
        for c in [0.0, 0.05, 0.2, 1.0, 5.0] {
            let sol = solve_procedure8(&t, alpha, 0.02, c).unwrap();
            prop_assert!(t.type1[sol.selected] <= alpha + 0.01);
            prop_assert!(t.source[sol.selected] <= previous);
            previous = t.source[sol.selected];
        }
    }

    #[test]
    fn identical_source_with_zero_slack_minimizes_target(seed in 0u64..10_000, m in 2usize..60) {
        let t = table(seed, m, true);
        let alpha = loose_alpha(&t);
        let sol = solve_procedure8(&t, alpha, 0.02, 0.0).unwrap();
        let hat = solve_target_hat(&t, alpha, 0.02).unwrap();
        prop_assert!((t.target[sol.selected] - t.target[hat]).abs() <= 1e-12);
    }
}

#[test]
fn infeasible_cap_is_reported() {
    let t = table(1, 10, false);
    let min = t.type1.iter().copied().fold(f64::INFINITY, f64::min);
    match solve_target_hat(&t, min / 2.0, min / 10.0) {
        Err(tlnp::Error::Infeasible { min_type1 }) => assert_eq!(min_type1, min),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn bundled_fixture_solves() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/oracle_small.json");
    let fixture = OracleFixture::load_json(&path).unwrap();
    let report = fixture.solve().unwrap();
    let s = report.solution;
    assert!(report.risks.type1[s.selected] <= s.type1_cap);
    assert!(report.risks.target[s.selected] <= s.target_bound);
    let exp = report.exponent.unwrap();
    assert!(exp.rho > 0.0 && exp.c.is_finite());
}
