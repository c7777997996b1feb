mod common;

use common::*;
use gibbs_core::haar::*;
use gibbs_core::sft::{LevelFunction, SubshiftSpec, Word};
use gibbs_core::thermo::{solve_thermo, Measure, Potential, SolveOptions};
use proptest::prelude::*;

fn gram_deviation(basis: &[BasisVector], masses: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let g: f64 = a.values.iter().zip(&b.values).zip(masses).map(|((x, y), m)| x * y * m).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

#[test]
fn gram_identity_at_depth_eight() {
    for r in ALL {
        let s = solve(r);
        let plan = HaarPlan::new(&s);
        let g = plan.gram_matrix(8).unwrap();
        assert_eq!(g.dimension as u128, s.spec().count_words(9));
        assert!(g.deviation < 1e-10, "{r:?} {}", g.deviation);
    }
}

#[test]
fn gram_against_closed_form_masses() {
    // μ = ν for these two, so the closed-form chain gives the weights.
    for r in [Ref::Uniform, Ref::Bernoulli] {
        let s = solve(r);
        let basis = HaarPlan::new(&s).basis(6).unwrap();
        let masses: Vec<f64> = s.spec().enumerate_cylinders(7).iter().map(|w| oracle_mass(r, w.symbols())).collect();
        assert!(gram_deviation(&basis, &masses) < 1e-10, "{r:?}");
    }
}

#[test]
fn other_child_orders_stay_orthonormal() {
    let spec = SubshiftSpec::full(3).unwrap();
    let pot = Potential::from_fn(&spec, 1, |w| [-0.9, 0.3, 0.1][w[0] as usize]).unwrap();
    let s = solve_thermo(&spec, &pot, SolveOptions::default()).unwrap();
    for order in [ChildOrder::Ascending, ChildOrder::Descending, ChildOrder::Rank(vec![1, 2, 0])] {
        let plan = HaarPlan::new(&s).ordered(order.clone());
        let g = plan.gram_matrix(4).unwrap();
        assert!(g.deviation < 1e-10, "{order:?} {}", g.deviation);
        for e in plan.elements(&Word::new(vec![2, 0])).unwrap() {
            assert!(e.mean().abs() < 1e-14);
        }
    }
    let lit = HaarPlan::new(&s).rule(UxRule::Literal);
    assert!(lit.gram_matrix(2).unwrap().deviation > 1e-3);
}

#[test]
fn orthonormal_under_equilibrium_measure() {
    let s = solve(Ref::Golden);
    let g = HaarPlan::with_measure(&s, Measure::Equilibrium).gram_matrix(7).unwrap();
    assert!(g.deviation < 1e-10);
}

fn random_function(which: usize, seed_values: &[f64]) -> (usize, LevelFunction) {
    let r = ALL[which];
    let spec = spec(r);
    let n = spec.enumerate_cylinders(6).len();
    let values = seed_values.iter().cycle().take(n).copied().collect();
    (which, LevelFunction::new(&spec, 6, values).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn parseval_and_reconstruction(which in 0usize..3, vals in proptest::collection::vec(-5.0f64..5.0, 64)) {
        let (which, f) = random_function(which, &vals);
        let s = solve(ALL[which]);
        let plan = HaarPlan::new(&s);
        let c = plan.expand(&f).unwrap();
        let masses = s.level_masses(Measure::Eigen, 6);
        let l2: f64 = f.values.iter().zip(&masses).map(|(v, m)| v * v * m).sum();
        let sum_sq: f64 = c.values.iter().map(|x| x * x).sum();
        prop_assert!((l2 - sum_sq).abs() < 1e-10 * l2.max(1.0));
        let back = plan.reconstruct(&c).unwrap();
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
