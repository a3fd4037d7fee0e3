//! Twisted groupoid algebras from 2-cocycles, and the bundle gerbe of a cover.

use eqtwist::extension::{klein_four_cocycle, BundleGerbe, TwistedAlgebra};
use eqtwist::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};

fn main() {
    let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
    let theta = klein_four_cocycle(base.groupoid());
    let report = theta.validate(Some(&base.conjugation_action()));
    println!(
        "K4 cocycle valid: {}, trivial: {}",
        report.is_valid(),
        theta.is_trivial()
    );

    let alg = TwistedAlgebra::with_counting(theta.clone()).unwrap();
    let h = alg.groupoid();
    for a in 0..h.arrows() {
        for b in 0..h.arrows() {
            let (c, v) = alg.structure(a, b).unwrap();
            print!("{}*{} = {v} {}   ", h.label(a), h.label(b), h.label(c));
        }
        println!();
    }

    let twisted = theta.apply_coboundary(4, &[0, 1, 2, 3]).unwrap();
    println!(
        "after a coboundary: valid {}",
        twisted.validate(None).is_valid()
    );
    let gerbe = BundleGerbe::new(&base, &theta, &[0]).unwrap();
    println!(
        "gerbe over the identity cover: {} arrows",
        gerbe.h1().arrows()
    );
}

#[test]
fn runs() {
    main();
}
