use eqtwist::cartan::{CDGAModel, EqElement, Generator};
use eqtwist::cyclic::UNIT;
use eqtwist::extension::{klein_four_cocycle, BundleGerbe, ExtensionCocycle};
use eqtwist::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};
use eqtwist::hkr::{
    curved_fixture, flat_fixture, matrix_fixture, simplex_integrate, tau_family, verify_chain_map,
    CurvedDGA, HkrChain, HkrFixture,
};
use eqtwist::linalg::{axpy, SparseVec};
use eqtwist::{Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;
use std::time::Instant;

fn unit_vec(i: usize) -> SparseVec {
    vec![(i, Scalar::one())]
}

fn k4_point(twisted: bool) -> (ActionGroupoid, ExtensionCocycle) {
    let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
    let th = if twisted {
        klein_four_cocycle(base.groupoid())
    } else {
        ExtensionCocycle::trivial(base.groupoid())
    };
    (base, th)
}

fn gens(list: &[(&str, i32)]) -> Vec<Generator> {
    list.iter()
        .map(|(n, d)| Generator {
            name: n.to_string(),
            degree: *d,
            nilpotency: None,
        })
        .collect()
}

/// `M_2(Lambda(e))` with `iota e = 1` and `A = e E_22`: flat, torus weights `k_i - k_j`.
fn flat_torus(truncation: usize) -> HkrFixture {
    let mut m = CDGAModel::new(gens(&[("e", 1)]), &[], 1).unwrap();
    m.set_contraction(0, "e", "1").unwrap();
    matrix_fixture("flat-torus", &m, 2, &[(1, 1, "e")], truncation).unwrap()
}

/// `M_3(Lambda(e1, e2))`, no torus, `A = e1 E_11 + e2 E_22`: flat with two independent 1-forms.
fn flat_two_forms() -> HkrFixture {
    let m = CDGAModel::new(gens(&[("e1", 1), ("e2", 1)]), &[], 0).unwrap();
    matrix_fixture("flat-two-forms", &m, 3, &[(0, 0, "e1"), (1, 1, "e2")], 0).unwrap()
}

fn single(f: &HkrFixture, key: &[u32]) -> HkrChain {
    let mut c = HkrChain::default();
    c.add(
        SmallVec::from_slice(key),
        vec![0; f.omega().rank()],
        Scalar::one(),
    );
    c
}

fn constant(f: &HkrFixture, v: &SparseVec) -> EqElement {
    EqElement::from_model(f.omega().rank(), v)
}

#[test]
fn simplex_integrals_match_iterated_integration() {
    assert_eq!(simplex_integrate(&[]), Rational::one());
    assert_eq!(simplex_integrate(&[0, 0]), Rational::new(1, 2));
    assert_eq!(simplex_integrate(&[1, 0]), Rational::new(1, 6));
    // Independent oracle: int_{Delta_k} prod t_i^{a_i} = prod_i 1 / (i + a_1 + .. + a_i).
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let k = rng.gen_range(0..5);
        let a: Vec<u32> = (0..k).map(|_| rng.gen_range(0..4)).collect();
        let mut den = 1i64;
        let mut s = 0i64;
        for (i, &x) in a.iter().enumerate() {
            s += x as i64;
            den *= s + i as i64 + 1;
        }
        assert_eq!(simplex_integrate(&a), Rational::new(1, den), "{a:?}");
    }
}

#[test]
fn nabla_t_without_curvature_or_torus_is_nabla() {
    let (base, th) = k4_point(true);
    let go = flat_fixture(&base, &th, &[0]).unwrap();
    let f = go.fixture("k4", 1).unwrap();
    for &a in f.algebra() {
        let nt = f.nabla_t(&unit_vec(a));
        let expected = f.omega().nabla().column(a).to_vec();
        if expected.is_empty() {
            assert!(nt.terms.is_empty());
        } else {
            assert_eq!(nt.terms.len(), 1);
            assert_eq!(nt.terms.get(&(0, Vec::new())), Some(&expected));
        }
    }
}

#[test]
fn nabla_t_first_order_in_torus() {
    let f = flat_torus(1);
    assert!(f.omega().theta().is_empty());
    let om = f.omega();
    let mut nonzero = 0;
    for &b in f.algebra() {
        let w = om.weight(b)[0];
        let nb = om.nabla().column(b).to_vec();
        // nabla(b) - t nabla(X . b), with X . b = w u b.
        let mut expected = std::collections::BTreeMap::new();
        if !nb.is_empty() {
            expected.insert((0u32, vec![0u16]), nb.clone());
            if w != 0 {
                expected.insert((1u32, vec![1u16]), axpy(&[], &Scalar::from_int(-w), &nb));
                nonzero += 1;
            }
        }
        assert_eq!(f.nabla_t(&unit_vec(b)).terms, expected, "{}", om.label(b));
    }
    assert!(nonzero > 0);
    let e12 = (0..om.dim()).find(|&i| om.label(i) == "E12*1").unwrap();
    assert_eq!(om.weight(e12), vec![-1]);
}

#[test]
fn derivative_formula_on_every_fixture() {
    let (base, th) = k4_point(true);
    let go = flat_fixture(&base, &th, &[0]).unwrap();
    let fixtures = vec![
        go.fixture("k4", 2).unwrap(),
        flat_torus(3),
        flat_two_forms(),
        curved_fixture(3, 3).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for f in &fixtures {
        for _ in 0..25 {
            let alg = f.algebra();
            let beta: SparseVec = eqtwist::linalg::collect_sparse(
                (0..3)
                    .map(|_| {
                        (
                            alg[rng.gen_range(0..alg.len())],
                            Scalar::from_int(rng.gen_range(-3..4)),
                        )
                    })
                    .collect::<Vec<_>>(),
            );
            assert!(
                f.derivative_failures(&beta).is_empty(),
                "{}: {:?}",
                f.name,
                f.derivative_failures(&beta)
            );
        }
    }
}

#[test]
fn tau_low_degrees_on_the_flat_groupoid() {
    let (base, th) = k4_point(true);
    let go = flat_fixture(&base, &th, &[0]).unwrap();
    for g in 0..4 {
        let f = go.fixture("k4", g).unwrap();
        let tr = |v: &SparseVec| f.trace().trace.apply(v);
        let om = f.omega();
        for &a0 in f.algebra() {
            assert_eq!(
                f.tau(&single(&f, &[a0 as u32])),
                constant(&f, &tr(&unit_vec(a0)))
            );
            for &a1 in f.algebra().iter().step_by(3) {
                let expected = tr(&om.mul(&unit_vec(a0), om.nabla().column(a1)));
                assert_eq!(
                    f.tau(&single(&f, &[a0 as u32, a1 as u32])),
                    constant(&f, &expected)
                );
            }
        }
        let a1 = f.algebra()[1];
        let with_unit = f.tau(&single(&f, &[UNIT, a1 as u32]));
        assert_eq!(
            with_unit,
            constant(&f, &tr(&om.nabla().column(a1).to_vec()))
        );
    }
}

#[test]
fn tau_degree_two_is_half_the_trace() {
    let f = flat_two_forms();
    let om = f.omega();
    let half = Scalar::from_ratio(1, 2);
    let mut nonzero = 0;
    for &a0 in f.algebra() {
        for &a1 in f.algebra() {
            for &a2 in f.algebra() {
                let prod = om.mul(
                    &om.mul(&unit_vec(a0), om.nabla().column(a1)),
                    om.nabla().column(a2),
                );
                let expected = axpy(&[], &half, &f.trace().trace.apply(&prod));
                if !expected.is_empty() {
                    nonzero += 1;
                }
                assert_eq!(
                    f.tau(&single(&f, &[a0 as u32, a1 as u32, a2 as u32])),
                    constant(&f, &expected)
                );
            }
        }
    }
    assert!(nonzero > 0);
}

#[test]
fn trivial_twist_identity_trace_sums_units_over_fibres() {
    let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::cyclic(2), 1));
    let th = ExtensionCocycle::trivial(base.groupoid());
    let gb = BundleGerbe::new(&base, &th, &[0]).unwrap();
    let go = flat_fixture(&base, &th, &[0]).unwrap();
    let td = go.trace(0).unwrap();
    let h = go.groupoid();
    let loops = go.loops(0);
    let dl = go.aux().dim();
    let one = (0..dl).find(|&l| go.aux().label(l) == "1").unwrap();
    let coeffs: Vec<i64> = (0..h.objects()).map(|x| 2 * x as i64 + 1).collect();
    let omega: SparseVec = (0..h.objects())
        .map(|x| (go.arrow_index(h.unit(x), one), Scalar::from_int(coeffs[x])))
        .collect();
    let out = td.trace.apply(&omega);
    for (li, &gamma) in loops.iter().enumerate() {
        assert!(h.is_unit(gamma));
        let y = h.target(gamma);
        let expected: i64 = (0..h.objects())
            .filter(|&x| gb.sigma(x) == gb.sigma(y))
            .map(|x| coeffs[x])
            .sum();
        let got = out
            .iter()
            .find(|(i, _)| *i == li * dl + one)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Scalar::zero);
        assert_eq!(got, Scalar::from_int(expected));
    }
}

#[test]
fn groupoid_omega_is_an_associative_flat_algebra() {
    for twisted in [false, true] {
        let (base, th) = k4_point(twisted);
        let go = flat_fixture(&base, &th, &[0]).unwrap();
        assert!(CurvedDGA::failures(go.omega().data()).is_empty());
        let sq = go.omega().nabla().mul(go.omega().nabla()).unwrap();
        assert!(sq.is_zero());
        assert_eq!(go.omega().dim(), 60);
        assert_eq!(go.algebra_indices().len(), 32);
    }
    let base = ActionGroupoid::new(
        GroupAction::permutation_action(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap(),
    );
    let th = ExtensionCocycle::trivial(base.groupoid());
    let go = flat_fixture(&base, &th, &[0, 1, 2]).unwrap();
    assert!(CurvedDGA::failures(go.omega().data()).is_empty());
}

#[test]
fn tau_families_on_small_fixtures() {
    let z2 = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::cyclic(2), 1));
    let fam = tau_family(&z2, &ExtensionCocycle::trivial(z2.groupoid()), &[0], 5, 1).unwrap();
    assert!(fam.ok(), "{fam:?}");
    assert_eq!(fam.sectors.len(), 2);
    assert!(fam
        .sectors
        .iter()
        .all(|s| !s.empty && s.invariant_trace_rank == 1));

    let (base, th) = k4_point(true);
    let fam = tau_family(&base, &th, &[0], 5, 2).unwrap();
    assert!(fam.ok(), "{fam:?}");
    let ranks: Vec<usize> = fam.sectors.iter().map(|s| s.invariant_trace_rank).collect();
    assert_eq!(ranks, vec![1, 0, 0, 0]);
    assert!(fam.sectors.iter().all(|s| s.higher_degrees_vanish));

    let s3 = FiniteGroup::symmetric(3);
    let reg = ActionGroupoid::new(GroupAction::regular(s3));
    let th = ExtensionCocycle::trivial(reg.groupoid());
    let fam = tau_family(&reg, &th, &[0, 1, 2, 3, 4, 5], 2, 3).unwrap();
    assert!(fam.ok(), "{fam:?}");
    let nonempty: Vec<&str> = fam
        .sectors
        .iter()
        .filter(|s| !s.empty)
        .map(|s| s.g.as_str())
        .collect();
    assert_eq!(nonempty, vec![reg.group().name(reg.group().identity())]);
}

#[test]
fn chain_map_on_flat_fixtures() {
    let (base, th) = k4_point(true);
    let go = flat_fixture(&base, &th, &[0]).unwrap();
    for g in 0..4 {
        let rep = verify_chain_map(&go.fixture("k4", g).unwrap(), 100, 40 + g as u64, 3);
        assert!(rep.ok(), "{rep:?}");
    }
    let base = ActionGroupoid::new(
        GroupAction::permutation_action(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap(),
    );
    let th = ExtensionCocycle::trivial(base.groupoid());
    let go = flat_fixture(&base, &th, &[0, 1, 2]).unwrap();
    for g in base.group().class_representatives() {
        let rep = verify_chain_map(&go.fixture("s3", g).unwrap(), 100, 9, 2);
        assert!(rep.ok(), "{rep:?}");
    }
    let rep = verify_chain_map(&flat_torus(3), 100, 3, 3);
    assert!(rep.ok(), "{rep:?}");
}

#[test]
fn chain_map_on_curved_fixture_within_budget() {
    let start = Instant::now();
    let f = curved_fixture(3, 3).unwrap();
    assert!(!f.omega().theta().is_empty());
    let rep = verify_chain_map(&f, 100, 7, 3);
    assert!(rep.ok(), "{rep:?}");
    assert_eq!(rep.compared_order, 2);
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn chain_map_detects_a_wrong_differential() {
    let f = curved_fixture(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut caught = 0;
    for k in 1..4 {
        for _ in 0..10 {
            let c = f.random_invariant_chain(&mut rng, k);
            let lhs = f.tau(&f.operator_b(&c));
            let rhs = f.localized_differential(&f.tau(&c));
            if lhs != rhs {
                caught += 1;
            }
        }
    }
    assert!(caught > 0, "dropping B must break the identity");
}
