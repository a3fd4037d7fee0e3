//! Flat line families on fixed-point sectors, transgressed from a gerbe cocycle.

use eqtwist::extension::klein_four_cocycle;
use eqtwist::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};
use eqtwist::transgression::{compare_families, transgress, Comparison};

fn main() {
    let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
    let theta = klein_four_cocycle(base.groupoid());
    let grp = base.group();
    for g in 0..grp.order() {
        let fam = transgress(&base, &theta, g).unwrap();
        for ch in fam.orbit_characters() {
            println!(
                "sector {}: character {:?}, invariant sections {}",
                grp.name(g),
                ch.values,
                fam.invariant_sections()
            );
        }
    }
    let other = theta.apply_coboundary(4, &[0, 1, 2, 3]).unwrap();
    let a = grp.element_by_name("a").unwrap();
    match compare_families(
        &transgress(&base, &theta, a).unwrap(),
        &transgress(&base, &other, a).unwrap(),
    )
    .unwrap()
    {
        Comparison::Isomorphic(w) => {
            let w: Vec<String> = w.iter().map(|(x, c)| format!("{x} -> {c}")).collect();
            println!("cohomologous twist: isomorphic, witness {}", w.join(", "));
        }
        Comparison::Obstructed { x, h } => println!("obstructed at ({x}, {h})"),
    }
}

#[test]
fn runs() {
    main();
}
