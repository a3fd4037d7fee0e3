//! Twisted Cartan complexes: the 3-sphere with an H-flux, and a rotating circle.

use eqtwist::cartan::{cartan_complex, exp_conjugation, CDGAModel, Generator, TwistData};

fn generator(name: &str, degree: i32) -> Generator {
    Generator {
        name: name.into(),
        degree,
        nilpotency: None,
    }
}

fn main() {
    let sphere = CDGAModel::new(vec![generator("x3", 3)], &[], 0).unwrap();
    for k in [0, 1, 3] {
        let twist = TwistData {
            eta_hat: sphere.parse_equivariant(&format!("{k}*x3")).unwrap(),
            connection: None,
        };
        let h = cartan_complex(sphere.algebra(), 1, Some(&twist), None)
            .unwrap()
            .cohomology_dims()
            .unwrap();
        println!("S^3 with flux {k}: even {}, odd {}", h.even, h.odd);
    }

    let mut circle = CDGAModel::new(vec![generator("dt", 1)], &[], 1).unwrap();
    circle.set_contraction(0, "dt", "1").unwrap();
    let c = cartan_complex(circle.algebra(), 3, None, None).unwrap();
    let h = c.cohomology_dims().unwrap();
    println!(
        "rotating circle, truncation 3: {:?} (sensitive {:?})",
        h.by_degree, h.sensitive_degrees
    );

    let b = circle
        .parse_equivariant("dt")
        .unwrap()
        .d_g(circle.algebra(), 3);
    let e = exp_conjugation(&c, &b).unwrap();
    println!("exp(u) intertwines: {}", e.intertwines);
}

#[test]
fn runs() {
    main();
}
