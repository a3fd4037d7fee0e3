//! The tau map from equivariant cyclic chains to twisted forms, checked as a chain map.

use eqtwist::extension::klein_four_cocycle;
use eqtwist::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};
use eqtwist::hkr::{curved_fixture, flat_fixture, verify_chain_map};

fn main() {
    let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
    let theta = klein_four_cocycle(base.groupoid());
    let omega = flat_fixture(&base, &theta, &[0]).unwrap();
    for g in 0..4 {
        let r = verify_chain_map(&omega.fixture("k4", g).unwrap(), 20, g as u64, 3);
        println!(
            "flat K4 sector {}: {}/{} chains",
            base.group().name(g),
            r.passed,
            r.trials
        );
    }

    let curved = curved_fixture(3, 3).unwrap();
    let r = verify_chain_map(&curved, 20, 7, 3);
    println!(
        "curved 3x3 matrix fixture: {}/{} chains, compared to order {} in X",
        r.passed, r.trials, r.compared_order
    );
    println!("trace convention: {}", r.convention);
}

#[test]
fn runs() {
    main();
}
