//! Exact ranks and kernels over cyclotomic fields.

use eqtwist::linalg::SparseMatrix;
use eqtwist::{Rational, Scalar};

fn main() {
    // Characters of Z/3 as rows: rank 3 over Q(zeta_3).
    let z = |k| Scalar::root_of_unity(3, k);
    let trip = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j, z((i * j) as i64))))
        .collect();
    let chars = SparseMatrix::from_triplets(3, 3, trip).unwrap();
    println!("rank of the Z/3 character table: {}", chars.rank());

    let s = &(&z(0) + &z(1)) + &z(2);
    println!("1 + zeta_3 + zeta_3^2 = {s}");
    let inv = Scalar::from_coeffs(5, vec![Rational::from_int(1), Rational::from_int(2)]).inv();
    println!("(1 + 2 zeta_5)^-1 = {inv}");

    let m = SparseMatrix::from_triplets(
        2,
        3,
        vec![
            (0, 0, 1.into()),
            (0, 1, 2.into()),
            (1, 0, 2.into()),
            (1, 1, 4.into()),
        ],
    )
    .unwrap();
    let null = m.to_dense().nullspace();
    println!("rank {}, nullity {}", m.rank(), null.len());
}

#[test]
fn runs() {
    main();
}
