//! Action groupoids, their nerves and the simplicial coboundary.

use eqtwist::groupoid::{pullback_groupoid, ActionGroupoid, GroupAction};

fn main() {
    let base = ActionGroupoid::new(
        GroupAction::permutation_action(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap(),
    );
    let h = base.groupoid();
    println!(
        "S3 acting on 3 points: {} objects, {} arrows",
        h.objects(),
        h.arrows()
    );
    for q in 0..3 {
        println!("nerve degree {q}: {} simplices", h.nerve(q).len());
        let dd = h
            .coboundary_matrix(q + 1)
            .mul(&h.coboundary_matrix(q))
            .unwrap();
        assert!(dd.is_zero());
    }
    println!("loops (inertia objects): {}", h.loops().len());
    let pb = pullback_groupoid(h, &[0, 0, 1, 2]).unwrap();
    println!(
        "pullback along a cover of one point: {} arrows",
        pb.groupoid.arrows()
    );
}

#[test]
fn runs() {
    main();
}
