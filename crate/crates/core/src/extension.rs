//! Root-of-unity 2-cocycles on finite groupoids, Haar weights, twisted convolution
//! algebras and the finite bundle-gerbe construction over a cover.

use crate::error::{Error, Result};
use crate::groupoid::{ActionGroupoid, FiniteGroup, FiniteGroupoid, GroupoidAction};
use crate::linalg::SparseVec;
use crate::scalar::Scalar;
use serde::Serialize;
use std::collections::HashMap;

/// Normalized 2-cocycle with values `zeta_order^k`, stored as exponents on composable pairs.
#[derive(Clone, Debug)]
pub struct ExtensionCocycle {
    groupoid: FiniteGroupoid,
    order: u32,
    exps: HashMap<(usize, usize), i64>,
}

/// Violations found by [`ExtensionCocycle::validate`]. Empty lists mean valid.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct ValidationReport {
    pub normalization: Vec<(String, String)>,
    pub cocycle: Vec<(String, String, String)>,
    pub invariance: Vec<(String, String, String)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.normalization.is_empty() && self.cocycle.is_empty() && self.invariance.is_empty()
    }
}

impl ExtensionCocycle {
    /// Builds a cocycle from an exponent function on composable pairs. Not validated.
    pub fn from_fn(
        groupoid: &FiniteGroupoid,
        order: u32,
        f: impl Fn(usize, usize) -> i64,
    ) -> ExtensionCocycle {
        assert!(order >= 1);
        let mut exps = HashMap::new();
        for a in 0..groupoid.arrows() {
            for b in 0..groupoid.arrows() {
                if groupoid.compose(a, b).is_some() {
                    let e = f(a, b).rem_euclid(order as i64);
                    if e != 0 {
                        exps.insert((a, b), e);
                    }
                }
            }
        }
        ExtensionCocycle {
            groupoid: groupoid.clone(),
            order,
            exps,
        }
    }

    pub fn trivial(groupoid: &FiniteGroupoid) -> ExtensionCocycle {
        ExtensionCocycle {
            groupoid: groupoid.clone(),
            order: 1,
            exps: HashMap::new(),
        }
    }

    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.groupoid
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Exponent `k` with `theta(a, b) = zeta_order^k`, for a composable pair.
    pub fn exponent(&self, a: usize, b: usize) -> i64 {
        debug_assert!(self.groupoid.compose(a, b).is_some());
        self.exps.get(&(a, b)).copied().unwrap_or(0)
    }

    pub fn value(&self, a: usize, b: usize) -> Scalar {
        Scalar::root_of_unity(self.order, self.exponent(a, b))
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.is_empty()
    }

    /// Checks normalization, the cocycle identity and, if given, invariance under an action.
    pub fn validate(&self, action: Option<&GroupoidAction>) -> ValidationReport {
        let h = &self.groupoid;
        let n = self.order as i64;
        let mut rep = ValidationReport::default();
        for a in 0..h.arrows() {
            let (u_t, u_s) = (h.unit(h.target(a)), h.unit(h.source(a)));
            if self.exponent(u_t, a) != 0 {
                rep.normalization
                    .push((h.label(u_t).into(), h.label(a).into()));
            }
            if self.exponent(a, u_s) != 0 {
                rep.normalization
                    .push((h.label(a).into(), h.label(u_s).into()));
            }
        }
        for a in 0..h.arrows() {
            for b in 0..h.arrows() {
                let Some(ab) = h.compose(a, b) else { continue };
                for c in 0..h.arrows() {
                    let Some(bc) = h.compose(b, c) else { continue };
                    let lhs = self.exponent(a, b) + self.exponent(ab, c);
                    let rhs = self.exponent(a, bc) + self.exponent(b, c);
                    if (lhs - rhs).rem_euclid(n) != 0 {
                        rep.cocycle
                            .push((h.label(a).into(), h.label(b).into(), h.label(c).into()));
                    }
                }
            }
        }
        if let Some(act) = action {
            for k in 0..act.group().order() {
                for a in 0..h.arrows() {
                    for b in 0..h.arrows() {
                        if h.compose(a, b).is_none() {
                            continue;
                        }
                        let (ak, bk) = (act.act(a, k), act.act(b, k));
                        if (self.exponent(ak, bk) - self.exponent(a, b)).rem_euclid(n) != 0 {
                            rep.invariance.push((
                                h.label(a).into(),
                                h.label(b).into(),
                                act.group().name(k).into(),
                            ));
                        }
                    }
                }
            }
        }
        rep.invariance.sort();
        rep.invariance.dedup();
        rep
    }

    /// `theta'(a, b) = theta(a, b) c(a) c(b) / c(ab)` for `c(a) = zeta_m^{exps[a]}` with `c(units) = 1`.
    pub fn apply_coboundary(&self, m: u32, c: &[i64]) -> Result<ExtensionCocycle> {
        let h = &self.groupoid;
        if c.len() != h.arrows() {
            return Err(Error::DimensionMismatch(format!(
                "1-cochain has {} values for {} arrows",
                c.len(),
                h.arrows()
            )));
        }
        for x in 0..h.objects() {
            if c[h.unit(x)].rem_euclid(m as i64) != 0 {
                return Err(Error::NotNormalized(format!(
                    "1-cochain is nonzero on the unit of object {x}"
                )));
            }
        }
        let l = lcm(self.order, m);
        let (s1, s2) = ((l / self.order) as i64, (l / m) as i64);
        Ok(ExtensionCocycle::from_fn(h, l, |a, b| {
            self.exponent(a, b) * s1 + (c[a] + c[b] - c[h.mul(a, b)]) * s2
        }))
    }

    /// Pullback along a functor given on arrows.
    pub fn pullback(&self, new: &FiniteGroupoid, arrow_map: &[usize]) -> ExtensionCocycle {
        ExtensionCocycle::from_fn(new, self.order, |a, b| {
            self.exponent(arrow_map[a], arrow_map[b])
        })
    }

    /// Exponents for all composable pairs, sorted, for serialization.
    pub fn exponent_table(&self) -> Vec<(usize, usize, i64)> {
        let mut v: Vec<_> = self.exps.iter().map(|(&(a, b), &e)| (a, b, e)).collect();
        v.sort();
        v
    }
}

pub fn lcm(a: u32, b: u32) -> u32 {
    use num_integer::Integer;
    a.lcm(&b)
}

/// The bicharacter cocycle on `Z/2 x Z/2`: `theta(x, y) = (-1)^(x_a * y_b)`.
pub fn klein_four_cocycle(g: &FiniteGroupoid) -> ExtensionCocycle {
    ExtensionCocycle::from_fn(g, 2, |x, y| ((x & 1) * ((y >> 1) & 1)) as i64)
}

/// Left-invariant weights: `w(a b) = w(b)` for composable pairs, all nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarWeights {
    weights: Vec<Scalar>,
}

impl HaarWeights {
    pub fn counting(h: &FiniteGroupoid) -> HaarWeights {
        HaarWeights {
            weights: vec![Scalar::one(); h.arrows()],
        }
    }

    /// Weights determined by a nonzero value per object, assigned to arrows by their source.
    pub fn from_objects(h: &FiniteGroupoid, per_object: &[Scalar]) -> Result<HaarWeights> {
        if per_object.len() != h.objects() {
            return Err(Error::DimensionMismatch(
                "one weight per object expected".into(),
            ));
        }
        HaarWeights::new(
            h,
            (0..h.arrows())
                .map(|a| per_object[h.source(a)].clone())
                .collect(),
        )
    }

    pub fn new(h: &FiniteGroupoid, weights: Vec<Scalar>) -> Result<HaarWeights> {
        if weights.len() != h.arrows() {
            return Err(Error::DimensionMismatch(
                "one weight per arrow expected".into(),
            ));
        }
        if let Some(a) = weights.iter().position(|w| w.is_zero()) {
            return Err(Error::InvalidStructure(format!(
                "weight of {} is zero",
                h.label(a)
            )));
        }
        for a in 0..h.arrows() {
            for b in 0..h.arrows() {
                if let Some(ab) = h.compose(a, b) {
                    if weights[ab] != weights[b] {
                        return Err(Error::NotInvariant(format!(
                            "weights are not left-invariant: w({}) != w({})",
                            h.label(ab),
                            h.label(b)
                        )));
                    }
                }
            }
        }
        Ok(HaarWeights { weights })
    }

    pub fn weight(&self, a: usize) -> &Scalar {
        &self.weights[a]
    }
}

/// Finite-dimensional associative algebra with a chosen basis.
pub trait Algebra {
    fn dim(&self) -> usize;
    /// Product of basis elements `i * j`.
    fn mul_basis(&self, i: usize, j: usize) -> SparseVec;
    fn unit(&self) -> SparseVec;
    fn basis_label(&self, i: usize) -> String {
        format!("e{i}")
    }
}

/// Twisted convolution algebra `C(H, theta)` with basis `delta_a`:
/// `delta_a * delta_b = w(a) theta(a, b) delta_{ab}` when `(a, b)` is composable.
#[derive(Clone, Debug)]
pub struct TwistedAlgebra {
    theta: ExtensionCocycle,
    weights: HaarWeights,
}

impl TwistedAlgebra {
    pub fn new(theta: ExtensionCocycle, weights: HaarWeights) -> Result<TwistedAlgebra> {
        let rep = theta.validate(None);
        if !rep.is_valid() {
            return Err(Error::NotACocycle(format!("{:?}", rep)));
        }
        Ok(TwistedAlgebra { theta, weights })
    }

    pub fn with_counting(theta: ExtensionCocycle) -> Result<TwistedAlgebra> {
        let w = HaarWeights::counting(theta.groupoid());
        TwistedAlgebra::new(theta, w)
    }

    pub fn groupoid(&self) -> &FiniteGroupoid {
        self.theta.groupoid()
    }

    pub fn cocycle(&self) -> &ExtensionCocycle {
        &self.theta
    }

    pub fn weights(&self) -> &HaarWeights {
        &self.weights
    }

    /// Structure constant of `delta_a * delta_b`, if nonzero.
    pub fn structure(&self, a: usize, b: usize) -> Option<(usize, Scalar)> {
        let h = self.groupoid();
        h.compose(a, b)
            .map(|ab| (ab, self.weights.weight(a) * &self.theta.value(a, b)))
    }

    /// Left action `k . delta_a = delta_{a . k^-1}` induced by a right action on arrows.
    /// Requires `theta` and the weights to be invariant.
    pub fn induced_action(&self, act: &GroupoidAction) -> Result<MonomialAction> {
        let rep = self.theta.validate(Some(act));
        if !rep.invariance.is_empty() {
            let (a, b, k) = &rep.invariance[0];
            return Err(Error::NotInvariant(format!(
                "theta({a}, {b}) changes under {k}"
            )));
        }
        let h = self.groupoid();
        for k in 0..act.group().order() {
            for a in 0..h.arrows() {
                if self.weights.weight(act.act(a, k)) != self.weights.weight(a) {
                    return Err(Error::NotInvariant(format!(
                        "weight of {} changes under {}",
                        h.label(a),
                        act.group().name(k)
                    )));
                }
            }
        }
        let g = act.group();
        let perms = (0..g.order())
            .map(|k| (0..h.arrows()).map(|a| act.act(a, g.inv(k))).collect())
            .collect();
        let scalars = vec![vec![Scalar::one(); h.arrows()]; g.order()];
        MonomialAction::new(g.clone(), self, perms, scalars)
    }
}

impl Algebra for TwistedAlgebra {
    fn dim(&self) -> usize {
        self.groupoid().arrows()
    }

    fn mul_basis(&self, i: usize, j: usize) -> SparseVec {
        match self.structure(i, j) {
            Some((k, v)) => vec![(k, v)],
            None => Vec::new(),
        }
    }

    fn unit(&self) -> SparseVec {
        let h = self.groupoid();
        let mut u: SparseVec = (0..h.objects())
            .map(|x| (h.unit(x), self.weights.weight(h.unit(x)).inv()))
            .collect();
        u.sort_by_key(|e| e.0);
        u
    }

    fn basis_label(&self, i: usize) -> String {
        self.groupoid().label(i).to_string()
    }
}

/// Left action of a finite group on an algebra by monomial automorphisms:
/// `k . e_i = scalars[k][i] e_{perms[k][i]}`.
#[derive(Clone, Debug)]
pub struct MonomialAction {
    group: FiniteGroup,
    perms: Vec<Vec<usize>>,
    scalars: Vec<Vec<Scalar>>,
}

impl MonomialAction {
    pub fn new<A: Algebra + ?Sized>(
        group: FiniteGroup,
        alg: &A,
        perms: Vec<Vec<usize>>,
        scalars: Vec<Vec<Scalar>>,
    ) -> Result<MonomialAction> {
        let n = group.order();
        let d = alg.dim();
        if perms.len() != n || scalars.len() != n || perms.iter().any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch(
                "monomial action has the wrong shape".into(),
            ));
        }
        let act = MonomialAction {
            group,
            perms,
            scalars,
        };
        for k in 0..n {
            for i in 0..d {
                if act.scalars[k][i].is_zero() {
                    return Err(Error::InvalidStructure(
                        "zero scalar in monomial action".into(),
                    ));
                }
            }
            let mut seen = vec![false; d];
            for &p in &act.perms[k] {
                if p >= d || seen[p] {
                    return Err(Error::InvalidStructure(
                        "monomial action is not a permutation".into(),
                    ));
                }
                seen[p] = true;
            }
            for i in 0..d {
                for j in 0..d {
                    let lhs = act.apply_vec(k, &alg.mul_basis(i, j));
                    let (pi, si) = act.apply(k, i);
                    let (pj, sj) = act.apply(k, j);
                    let c = &si * &sj;
                    let rhs: SparseVec = alg
                        .mul_basis(pi, pj)
                        .into_iter()
                        .map(|(t, v)| (t, &v * &c))
                        .collect();
                    if lhs != rhs {
                        return Err(Error::InvalidStructure(format!(
                            "{} does not act by an algebra automorphism on ({}, {})",
                            act.group.name(k),
                            alg.basis_label(i),
                            alg.basis_label(j)
                        )));
                    }
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                let kl = act.group.mul(k, l);
                for i in 0..d {
                    let (p1, s1) = act.apply(l, i);
                    let (p2, s2) = act.apply(k, p1);
                    let (p3, s3) = act.apply(kl, i);
                    if p2 != p3 || &s1 * &s2 != s3 {
                        return Err(Error::InvalidStructure(
                            "monomial maps do not form a left action".into(),
                        ));
                    }
                }
            }
        }
        Ok(act)
    }

    pub fn trivial<A: Algebra + ?Sized>(group: FiniteGroup, alg: &A) -> MonomialAction {
        let d = alg.dim();
        let n = group.order();
        MonomialAction {
            group,
            perms: vec![(0..d).collect(); n],
            scalars: vec![vec![Scalar::one(); d]; n],
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// `k . e_i = s e_p`, returned as `(p, s)`.
    pub fn apply(&self, k: usize, i: usize) -> (usize, Scalar) {
        (self.perms[k][i], self.scalars[k][i].clone())
    }

    pub fn apply_vec(&self, k: usize, v: &[(usize, Scalar)]) -> SparseVec {
        let mut out: SparseVec = v
            .iter()
            .map(|(i, x)| (self.perms[k][*i], x * &self.scalars[k][*i]))
            .collect();
        out.sort_by_key(|e| e.0);
        out
    }
}

/// Finite model of the twisted bundle gerbe over a cover `p: M' -> M` of an action groupoid.
///
/// Objects `H0 = M' x G` with `sigma(x, g) = p(x) . g`; arrows of `H1` are pairs in the same
/// `sigma`-fibre; the cocycle is pulled back along `nu((x, g), (y, h)) = (p(x), g h^-1)`.
/// `G` acts on `H0` by `(x, h) . k = (x, h k)` and diagonally on `H1`.
#[derive(Clone, Debug)]
pub struct BundleGerbe {
    base: ActionGroupoid,
    cover: Vec<usize>,
    h0: usize,
    sigma: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    pair_index: HashMap<(usize, usize), usize>,
    h1: FiniteGroupoid,
    theta: ExtensionCocycle,
    action: GroupoidAction,
}

impl BundleGerbe {
    pub fn new(
        base: &ActionGroupoid,
        theta: &ExtensionCocycle,
        cover: &[usize],
    ) -> Result<BundleGerbe> {
        let act = base.action();
        let g = base.group();
        let n = g.order();
        if cover.iter().any(|&u| u >= act.points()) {
            return Err(Error::InvalidStructure("cover lands outside M".into()));
        }
        if theta.groupoid() != base.groupoid() {
            return Err(Error::InvalidStructure(
                "cocycle lives on a different groupoid".into(),
            ));
        }
        let h0 = cover.len() * n;
        let sigma: Vec<usize> = (0..h0).map(|i| act.act(cover[i / n], i % n)).collect();
        let mut pairs = Vec::new();
        for a in 0..h0 {
            for b in 0..h0 {
                if sigma[a] == sigma[b] {
                    pairs.push((a, b));
                }
            }
        }
        let pair_index: HashMap<(usize, usize), usize> =
            pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let h1 = FiniteGroupoid::new(
            h0,
            pairs.iter().map(|p| p.1).collect(),
            pairs.iter().map(|p| p.0).collect(),
            pairs
                .iter()
                .map(|(a, b)| format!("[{},{}]", h0_label(cover, g, *a), h0_label(cover, g, *b)))
                .collect(),
            |i, j| pair_index[&(pairs[i].0, pairs[j].1)],
        )?;
        let nu = |i: usize| -> usize {
            let (a, b) = pairs[i];
            let (x, ga) = (a / n, a % n);
            let hb = b % n;
            base.arrow(cover[x], g.mul(ga, g.inv(hb)))
        };
        let theta_h =
            ExtensionCocycle::from_fn(&h1, theta.order(), |i, j| theta.exponent(nu(i), nu(j)));
        let perms = (0..n)
            .map(|k| {
                (0..pairs.len())
                    .map(|i| {
                        let (a, b) = pairs[i];
                        let ak = (a / n) * n + g.mul(a % n, k);
                        let bk = (b / n) * n + g.mul(b % n, k);
                        pair_index[&(ak, bk)]
                    })
                    .collect()
            })
            .collect();
        let action = GroupoidAction::new(g.clone(), &h1, perms)?;
        Ok(BundleGerbe {
            base: base.clone(),
            cover: cover.to_vec(),
            h0,
            sigma,
            pairs,
            pair_index,
            h1,
            theta: theta_h,
            action,
        })
    }

    pub fn base(&self) -> &ActionGroupoid {
        &self.base
    }

    pub fn group(&self) -> &FiniteGroup {
        self.base.group()
    }

    pub fn cover(&self) -> &[usize] {
        &self.cover
    }

    pub fn h0(&self) -> usize {
        self.h0
    }

    pub fn sigma(&self, x: usize) -> usize {
        self.sigma[x]
    }

    /// `x . k` on `H0`.
    pub fn act_h0(&self, x: usize, k: usize) -> usize {
        let n = self.group().order();
        (x / n) * n + self.group().mul(x % n, k)
    }

    pub fn h1(&self) -> &FiniteGroupoid {
        &self.h1
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        self.pairs[i]
    }

    pub fn pair_arrow(&self, a: usize, b: usize) -> Option<usize> {
        self.pair_index.get(&(a, b)).copied()
    }

    pub fn cocycle(&self) -> &ExtensionCocycle {
        &self.theta
    }

    pub fn action(&self) -> &GroupoidAction {
        &self.action
    }
}

fn h0_label(cover: &[usize], g: &FiniteGroup, a: usize) -> String {
    let n = g.order();
    if cover.len() == 1 {
        g.name(a % n).to_string()
    } else {
        format!("{}{}", a / n, g.name(a % n))
    }
}
