use eqtwist::cartan::{CDGAModel, EqElement, Generator};
use eqtwist::cyclic::{add_term, AlgebraData, Chain, EquivariantAlgebra, Mode, SectorOperators};
use eqtwist::extension::{klein_four_cocycle, ExtensionCocycle, TwistedAlgebra};
use eqtwist::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};
use eqtwist::linalg::SparseMatrix;
use eqtwist::transgression::transgress;
use eqtwist::{Rational, Scalar};
use proptest::prelude::*;

const ORDERS: [u32; 7] = [1, 3, 4, 5, 6, 8, 12];

fn scalar() -> impl Strategy<Value = Scalar> {
    (
        0..ORDERS.len(),
        prop::collection::vec((-5i64..6, 1i64..4), 1..6),
    )
        .prop_map(|(o, cs)| {
            Scalar::from_coeffs(
                ORDERS[o],
                cs.into_iter().map(|(n, d)| Rational::new(n, d)).collect(),
            )
        })
}

fn matrix() -> impl Strategy<Value = SparseMatrix> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::option::weighted(0.4, -3i64..4), r * c).prop_map(move |es| {
            let trip = es
                .into_iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|v| (i / c, i % c, Scalar::from_int(v))))
                .collect();
            SparseMatrix::from_triplets(r, c, trip).unwrap()
        })
    })
}

fn action_groupoid(kind: usize, points: usize, seed: u64) -> ActionGroupoid {
    match kind {
        0 => ActionGroupoid::new(GroupAction::trivial(FiniteGroup::cyclic(3), points)),
        1 => ActionGroupoid::new(GroupAction::regular(FiniteGroup::klein_four())),
        2 => ActionGroupoid::new(
            GroupAction::permutation_action(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap(),
        ),
        _ => {
            let gens = if seed.is_multiple_of(2) {
                vec![vec![1, 0, 2, 3], vec![0, 1, 3, 2]]
            } else {
                vec![vec![1, 2, 3, 0]]
            };
            ActionGroupoid::new(GroupAction::permutation_action(4, &gens).unwrap())
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scalars_form_a_field(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        if !a.is_zero() {
            prop_assert!((&a * &a.inv()).is_one());
        }
    }

    #[test]
    fn embedding_and_galois_are_homomorphisms(a in scalar(), b in scalar(), j in 0usize..4) {
        let n = 120;
        prop_assert_eq!((&a * &b).embed(n), &a.embed(n) * &b.embed(n));
        let unit = [1u32, 7, 11, 13][j];
        let (x, y) = (a.embed(n), b.embed(n));
        prop_assert_eq!((&x * &y).galois(unit), &x.galois(unit) * &y.galois(unit));
        prop_assert_eq!((&x + &y).galois(unit), &x.galois(unit) + &y.galois(unit));
    }

    #[test]
    fn roots_of_unity_multiply_by_adding_exponents(n in 1u32..13, i in -20i64..20, j in -20i64..20) {
        let z = |k| Scalar::root_of_unity(n, k);
        prop_assert_eq!(&z(i) * &z(j), z(i + j));
        prop_assert!(z(n as i64).is_one());
    }

    #[test]
    fn row_rank_equals_column_rank(m in matrix()) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
        prop_assert_eq!(m.rank(), m.to_dense().rank());
    }

    #[test]
    fn rank_nullity(m in matrix()) {
        let null = m.to_dense().nullspace();
        prop_assert_eq!(m.rank() + null.len(), m.cols());
        for v in null {
            let sv: Vec<_> = v.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect();
            prop_assert!(m.apply(&sv).is_empty());
        }
    }

    #[test]
    fn product_rank_is_bounded(a in matrix(), b in matrix()) {
        if let Ok(p) = a.mul(&b) {
            prop_assert!(p.rank() <= a.rank().min(b.rank()));
        }
    }

    #[test]
    fn nerve_coboundary_squares_to_zero(kind in 0usize..4, points in 1usize..3, seed in 0u64..4, q in 0usize..3) {
        let base = action_groupoid(kind, points, seed);
        let h = base.groupoid();
        let d0 = h.coboundary_matrix(q);
        let d1 = h.coboundary_matrix(q + 1);
        prop_assert!(d1.mul(&d0).unwrap().is_zero());
    }

    #[test]
    fn coboundary_twists_stay_valid_and_invert(kind in 0usize..4, seed in 0u64..4, raw in prop::collection::vec(0i64..6, 64)) {
        let base = action_groupoid(kind, 1, seed);
        let h = base.groupoid();
        let theta = ExtensionCocycle::trivial(h);
        let c: Vec<i64> = (0..h.arrows()).map(|a| if h.is_unit(a) { 0 } else { raw[a % raw.len()] }).collect();
        let twisted = theta.apply_coboundary(6, &c).unwrap();
        prop_assert!(twisted.validate(None).is_valid());
        let neg: Vec<i64> = c.iter().map(|x| -x).collect();
        let back = twisted.apply_coboundary(6, &neg).unwrap();
        for a in 0..h.arrows() {
            for b in 0..h.arrows() {
                if h.compose(a, b).is_some() {
                    prop_assert_eq!(back.value(a, b), theta.value(a, b));
                }
            }
        }
    }

    #[test]
    fn cohomologous_twists_transgress_to_isomorphic_lines(raw in prop::collection::vec(0i64..4, 4)) {
        let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
        let h = base.groupoid();
        let theta = klein_four_cocycle(h);
        let c: Vec<i64> = (0..h.arrows()).map(|a| if h.is_unit(a) { 0 } else { raw[a] }).collect();
        let other = theta.apply_coboundary(4, &c).unwrap();
        for g in 0..4 {
            let (f1, f2) = (transgress(&base, &theta, g).unwrap(), transgress(&base, &other, g).unwrap());
            prop_assert_eq!(f1.invariant_sections(), f2.invariant_sections());
            prop_assert!(f2.flatness_violations().is_empty());
        }
    }

    #[test]
    fn hochschild_and_connes_operators_anticommute(g in 0usize..4, k in 1usize..5, picks in prop::collection::vec((0usize..1000, -3i64..4), 1..6)) {
        let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
        let t = TwistedAlgebra::with_counting(klein_four_cocycle(base.groupoid())).unwrap();
        let ma = t.induced_action(&base.conjugation_action()).unwrap();
        let ea = EquivariantAlgebra::new(AlgebraData::from_twisted(&t), ma);
        let ops = SectorOperators::new(&ea, g, Mode::Normalized).unwrap();
        let basis = ops.basis(k);
        let mut c = Chain::new();
        for (i, v) in picks {
            add_term(&mut c, basis[i % basis.len()].clone(), Scalar::from_int(v));
        }
        prop_assert!(ops.b(&ops.b(&c)).is_empty());
        prop_assert!(ops.big_b(&ops.big_b(&c)).is_empty());
        let mut anti = ops.b(&ops.big_b(&c));
        for (key, v) in ops.big_b(&ops.b(&c)) {
            add_term(&mut anti, key, v);
        }
        prop_assert!(anti.is_empty());
    }

    #[test]
    fn cartan_differential_is_a_derivation(i in 0usize..64, j in 0usize..64, pu in 0u16..2) {
        let gens = vec![
            Generator { name: "a".into(), degree: 2, nilpotency: Some(3) },
            Generator { name: "c".into(), degree: 1, nilpotency: None },
            Generator { name: "e".into(), degree: 1, nilpotency: None },
        ];
        let mut m = CDGAModel::new(gens, &[], 1).unwrap();
        m.set_differential("c", "a").unwrap();
        m.set_contraction(0, "e", "1").unwrap();
        prop_assert!(m.validate().is_empty());
        let alg = m.algebra();
        let (i, j) = (i % alg.dim(), j % alg.dim());
        let n = 3;
        let mut x = EqElement::from_model(1, &[(i, Scalar::one())]);
        if pu == 1 {
            x = x.mul(&m.parse_equivariant("u").unwrap(), alg, n);
        }
        let y = EqElement::from_model(1, &[(j, Scalar::one())]);
        let sign = if alg.degree(i) % 2 == 0 { Scalar::one() } else { Scalar::from_int(-1) };
        let lhs = x.mul(&y, alg, n).d_g(alg, n);
        let rhs = x.d_g(alg, n).mul(&y, alg, n).add(&x.mul(&y.d_g(alg, n), alg, n).scale(&sign));
        prop_assert_eq!(lhs, rhs);
    }
}
