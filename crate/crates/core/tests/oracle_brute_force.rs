mod common;

use common::*;
use epsgood::oracle::{best_response, Case, Oracle};
use epsgood::{BanditInstance, Mode, SimplexWeights};

#[test]
fn matches_brute_force_on_random_instances() {
    let mut r = rng(11);
    for i in 0..60 {
        let k = 2 + i % 3;
        let eps = if i % 2 == 0 { 0.1 } else { 0.3 };
        let mode = if i % 4 < 2 {
            Mode::Additive
        } else {
            Mode::Multiplicative
        };
        let inst = random_instance(&mut r, k, eps, mode, 1e-3);
        let w = random_weights(&mut r, k, 0.02);
        let br = best_response(&inst, &w).unwrap();
        let bf = brute_force_value(inst.means(), eps, mode, w.as_slice());
        assert!(
            rel_close(br.cost, bf, 1e-6),
            "instance {:?} {mode:?} eps {eps} w {:?}: oracle {} brute force {}",
            inst.means(),
            w.as_slice(),
            br.cost,
            bf
        );
    }
}

#[test]
fn best_response_is_an_alternative_with_the_reported_cost() {
    let mut r = rng(12);
    for i in 0..200 {
        let k = 2 + i % 5;
        let mode = if i % 3 == 0 {
            Mode::Multiplicative
        } else {
            Mode::Additive
        };
        let inst = random_instance(&mut r, k, 0.2, mode, 1e-3);
        let w = random_weights(&mut r, k, 0.01);
        let br = best_response(&inst, &w).unwrap();
        assert!(
            in_alt_closure(inst.means(), 0.2, mode, &br.lambda),
            "{:?} {:?}",
            inst.means(),
            br
        );
        let cost = weighted_cost(inst.means(), &br.lambda, w.as_slice());
        assert!(rel_close(cost, br.cost, 1e-9));
    }
}

#[test]
fn supergradient_matches_lambda() {
    let inst = BanditInstance::additive(vec![0.9, 0.85, 0.5, 0.3], 0.1).unwrap();
    let w = SimplexWeights::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let oracle = Oracle::new(&inst);
    let br = oracle.best_response(&w).unwrap();
    let mut grad = vec![0.0; 4];
    let v = oracle
        .value_and_supergradient(w.as_slice(), &mut grad)
        .unwrap();
    assert_eq!(v, br.cost);
    assert_eq!(grad, br.supergradient(inst.means()));
    let dot: f64 = grad.iter().zip(w.as_slice()).map(|(g, w)| g * w).sum();
    assert!((dot - v).abs() < 1e-15);
}

#[test]
fn every_arm_good_has_no_promotion_case() {
    let inst = BanditInstance::additive(vec![0.5, 0.45, 0.48], 0.1).unwrap();
    let w = SimplexWeights::uniform(3);
    assert_eq!(best_response(&inst, &w).unwrap().case, Case::GoodMadeBad);
}
