//! Periodic cyclic homology of twisted group algebras, plain and equivariant.

use eqtwist::cyclic::{crossed_product, periodic_dims, AlgebraData, EquivariantAlgebra, Mode};
use eqtwist::extension::{klein_four_cocycle, ExtensionCocycle, MonomialAction, TwistedAlgebra};
use eqtwist::groupoid::{FiniteGroup, FiniteGroupoid};

fn main() {
    let k4 = FiniteGroupoid::from_group(&FiniteGroup::klein_four());
    for (name, theta) in [
        ("untwisted", ExtensionCocycle::trivial(&k4)),
        ("twisted", klein_four_cocycle(&k4)),
    ] {
        let alg = AlgebraData::from_twisted(&TwistedAlgebra::with_counting(theta).unwrap());
        let r = periodic_dims(&EquivariantAlgebra::plain(alg), 6, Mode::Normalized).unwrap();
        println!(
            "HP of the {name} K4 algebra: ({}, {}), stable {}",
            r.even, r.odd, r.stable
        );
    }

    let s3 = FiniteGroup::symmetric(3);
    let field = AlgebraData::field();
    let ea = EquivariantAlgebra::new(field.clone(), MonomialAction::trivial(s3, &field));
    let r = periodic_dims(&ea, 4, Mode::Normalized).unwrap();
    let cp = periodic_dims(
        &EquivariantAlgebra::plain(crossed_product(&ea).unwrap()),
        4,
        Mode::Normalized,
    )
    .unwrap();
    println!(
        "HP^S3 of a point: ({}, {}); crossed product: ({}, {})",
        r.even, r.odd, cp.even, cp.odd
    );
}

#[test]
fn runs() {
    main();
}
