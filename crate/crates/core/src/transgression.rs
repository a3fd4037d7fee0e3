//! Transgression of a 2-cocycle on `M x| G` to flat line families on fixed-point sets.
//!
//! For `x` in `M^g` and `h` in the centralizer `G^g`, the transport
//! `tau(g; x, h) = theta((x,g),(x.g,h)) / theta((x,h),(x.h,h^-1 g h))`
//! is the scalar by which conjugation by the arrow `(x, h)` moves the lifted loop.

use crate::error::{Error, Result};
use crate::extension::{lcm, ExtensionCocycle};
use crate::groupoid::{pullback_groupoid, ActionGroupoid, FiniteGroup, FiniteGroupoid};
use crate::scalar::Scalar;
use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

/// Flat line family on `M^g` with a `G^g`-action, as root-of-unity exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFamily {
    pub g: usize,
    pub fixed: Vec<usize>,
    pub centralizer: Vec<usize>,
    pub order: u32,
    /// `(x, h) -> k` meaning `zeta_order^k`, for `x` in `fixed` and `h` in `centralizer`.
    pub transport: BTreeMap<(usize, usize), i64>,
    group: FiniteGroup,
    action: Vec<usize>,
    points: usize,
}

/// Character of the stabilizer of one `G^g`-orbit in `M^g`.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct OrbitCharacter {
    pub orbit: Vec<usize>,
    pub representative: usize,
    /// `(h, k)`: `h` in the stabilizer acts by `zeta_order^k`.
    pub values: Vec<(String, i64)>,
    pub trivial: bool,
}

impl LineFamily {
    fn act(&self, x: usize, h: usize) -> usize {
        self.action[x * self.group.order() + h]
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn value(&self, x: usize, h: usize) -> Scalar {
        Scalar::root_of_unity(self.order, self.transport[&(x, h)])
    }

    /// Violations of the cocycle (flatness) identity and of `g` acting trivially.
    pub fn flatness_violations(&self) -> Vec<String> {
        let n = self.order as i64;
        let mut out = Vec::new();
        for &x in &self.fixed {
            for &h1 in &self.centralizer {
                for &h2 in &self.centralizer {
                    let h12 = self.group.mul(h1, h2);
                    let lhs = self.transport[&(x, h12)];
                    let rhs = self.transport[&(x, h1)] + self.transport[&(self.act(x, h1), h2)];
                    if (lhs - rhs).rem_euclid(n) != 0 {
                        out.push(format!(
                            "x={x}, h1={}, h2={}",
                            self.group.name(h1),
                            self.group.name(h2)
                        ));
                    }
                }
            }
            if self.transport[&(x, self.g)].rem_euclid(n) != 0 {
                out.push(format!("g acts nontrivially at x={x}"));
            }
        }
        out
    }

    /// Orbits of `G^g` on `M^g` with their stabilizer characters.
    pub fn orbit_characters(&self) -> Vec<OrbitCharacter> {
        let n = self.order as i64;
        let mut seen = vec![false; self.points];
        let mut out = Vec::new();
        for &x in &self.fixed {
            if seen[x] {
                continue;
            }
            let mut orbit: Vec<usize> = self.centralizer.iter().map(|&h| self.act(x, h)).collect();
            orbit.sort();
            orbit.dedup();
            for &y in &orbit {
                seen[y] = true;
            }
            let values: Vec<(String, i64)> = self
                .centralizer
                .iter()
                .filter(|&&h| self.act(x, h) == x)
                .map(|&h| {
                    (
                        self.group.name(h).to_string(),
                        self.transport[&(x, h)].rem_euclid(n),
                    )
                })
                .collect();
            let trivial = values.iter().all(|v| v.1 == 0);
            out.push(OrbitCharacter {
                orbit,
                representative: x,
                values,
                trivial,
            });
        }
        out
    }

    /// Dimension of the `G^g`-invariant sections of the line family over `M^g`.
    pub fn invariant_sections(&self) -> usize {
        self.orbit_characters().iter().filter(|o| o.trivial).count()
    }
}

/// Transgression of `theta` at `g`.
pub fn transgress(base: &ActionGroupoid, theta: &ExtensionCocycle, g: usize) -> Result<LineFamily> {
    let rep = theta.validate(None);
    if !rep.is_valid() {
        return Err(Error::NotACocycle(format!("{rep:?}")));
    }
    if theta.groupoid() != base.groupoid() {
        return Err(Error::InvalidStructure(
            "cocycle lives on a different groupoid".into(),
        ));
    }
    let grp = base.group();
    if g >= grp.order() {
        return Err(Error::InvalidStructure(format!("no group element {g}")));
    }
    let act = base.action();
    let fixed = act.fixed_points(g);
    let centralizer = grp.centralizer(g);
    let mut transport = BTreeMap::new();
    for &x in &fixed {
        for h in 0..grp.order() {
            if centralizer.contains(&h) {
                transport.insert((x, h), conjugation_exponent(base, theta, g, x, h));
            }
        }
    }
    Ok(LineFamily {
        g,
        fixed,
        centralizer,
        order: theta.order(),
        transport,
        group: grp.clone(),
        action: act.table().to_vec(),
        points: act.points(),
    })
}

/// Exponent of the scalar relating the lift of `(x,h)^-1 (x,g) (x,h)` to the lifted loop at
/// `(x.h, h^-1 g h)`; valid for any `h`.
pub fn conjugation_exponent(
    base: &ActionGroupoid,
    theta: &ExtensionCocycle,
    g: usize,
    x: usize,
    h: usize,
) -> i64 {
    let grp = base.group();
    let act = base.action();
    let xg = act.act(x, g);
    let xh = act.act(x, h);
    let a1 = theta.exponent(base.arrow(x, g), base.arrow(xg, h));
    let a2 = theta.exponent(base.arrow(x, h), base.arrow(xh, grp.conj(g, h)));
    (a1 - a2).rem_euclid(theta.order() as i64)
}

/// Family at `h^-1 g h` together with the fibrewise witness `x -> tau(g; x, h)` carrying
/// `L^g_x` to `L^{h^-1 g h}_{x.h}`.
pub fn conjugation_transport(
    base: &ActionGroupoid,
    theta: &ExtensionCocycle,
    g: usize,
    h: usize,
) -> Result<(LineFamily, LineFamily, BTreeMap<usize, i64>)> {
    let f = transgress(base, theta, g)?;
    let g2 = base.group().conj(g, h);
    let f2 = transgress(base, theta, g2)?;
    let witness = f
        .fixed
        .iter()
        .map(|&x| (x, conjugation_exponent(base, theta, g, x, h)))
        .collect();
    Ok((f, f2, witness))
}

/// Checks `w(x) tau'(x.h, h^-1 k h) = tau(x, k) w(x.k)` for the conjugation witness.
pub fn witness_intertwines(
    f: &LineFamily,
    f2: &LineFamily,
    h: usize,
    witness: &BTreeMap<usize, i64>,
) -> Vec<String> {
    let grp = &f.group;
    let n = lcm(f.order, f2.order) as i64;
    let (s1, s2) = (n / f.order as i64, n / f2.order as i64);
    let mut bad = Vec::new();
    for &x in &f.fixed {
        for &k in &f.centralizer {
            let xh = f.act(x, h);
            let k2 = grp.conj(k, h);
            let lhs = witness[&x] * s1 + f2.transport[&(xh, k2)] * s2;
            let rhs = f.transport[&(x, k)] * s1 + witness[&f.act(x, k)] * s1;
            if (lhs - rhs).rem_euclid(n) != 0 {
                bad.push(format!("x={x}, k={}", grp.name(k)));
            }
        }
    }
    bad
}

/// Outcome of [`compare_families`].
#[derive(Clone, Debug, PartialEq)]
pub enum Comparison {
    /// `c(x.h) tau1(x, h) = tau2(x, h) c(x)` for all `x, h`.
    Isomorphic(BTreeMap<usize, Scalar>),
    /// The pair `(x, h)` where no rescaling can match the two transports.
    Obstructed { x: usize, h: usize },
}

/// Decides whether two line families on the same `M^g` are isomorphic as `G^g`-equivariant
/// flat families, returning a witness or a failing pair.
pub fn compare_families(f1: &LineFamily, f2: &LineFamily) -> Result<Comparison> {
    if f1.fixed != f2.fixed || f1.centralizer != f2.centralizer || f1.g != f2.g {
        return Err(Error::InvalidStructure(
            "families live over different sectors".into(),
        ));
    }
    let ratio = |x: usize, h: usize| -> Scalar { &f2.value(x, h) / &f1.value(x, h) };
    let mut c: BTreeMap<usize, Scalar> = BTreeMap::new();
    for &x0 in &f1.fixed {
        if c.contains_key(&x0) {
            continue;
        }
        c.insert(x0, Scalar::one());
        let mut queue = VecDeque::from([x0]);
        while let Some(x) = queue.pop_front() {
            for &h in &f1.centralizer {
                let y = f1.act(x, h);
                let want = &ratio(x, h) * &c[&x];
                match c.get(&y) {
                    Some(v) => {
                        if *v != want {
                            return Ok(Comparison::Obstructed { x, h });
                        }
                    }
                    None => {
                        c.insert(y, want);
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    Ok(Comparison::Isomorphic(c))
}

/// Checks that `c` intertwines `f1` and `f2`; returns failing pairs.
pub fn check_witness(
    f1: &LineFamily,
    f2: &LineFamily,
    c: &BTreeMap<usize, Scalar>,
) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for &x in &f1.fixed {
        for &h in &f1.centralizer {
            let lhs = &c[&f1.act(x, h)] * &f1.value(x, h);
            let rhs = &f2.value(x, h) * &c[&x];
            if lhs != rhs {
                bad.push((x, h));
            }
        }
    }
    bad
}

/// Family on `M^g` obtained by pulling `theta` back along a cover `p: M' -> M`, transgressing on
/// the pullback groupoid, and descending through a chosen lift of each point.
pub fn pullback_family(
    base: &ActionGroupoid,
    theta: &ExtensionCocycle,
    p: &[usize],
    g: usize,
) -> Result<LineFamily> {
    let pb = pullback_groupoid(base.groupoid(), p)?;
    let th = theta.pullback(&pb.groupoid, &pb.arrow_map);
    let rep = th.validate(None);
    if !rep.is_valid() {
        return Err(Error::NotACocycle(format!("pulled back cocycle: {rep:?}")));
    }
    let mut f = transgress(base, theta, g)?;
    let lift: BTreeMap<usize, usize> = f
        .fixed
        .iter()
        .map(|&u| {
            (
                u,
                p.iter().position(|&q| q == u).expect("cover is surjective"),
            )
        })
        .collect();
    let find = |x: usize, a: usize, y: usize| -> usize {
        pb.triples
            .iter()
            .position(|t| *t == (x, a, y))
            .expect("arrow of the pullback")
    };
    for &u in &f.fixed.clone() {
        for &h in &f.centralizer.clone() {
            let uh = base.action().act(u, h);
            let loop_ = find(lift[&u], base.arrow(u, g), lift[&u]);
            let delta = find(lift[&u], base.arrow(u, h), lift[&uh]);
            f.transport
                .insert((u, h), inertia_exponent(&pb.groupoid, &th, loop_, delta));
        }
    }
    Ok(f)
}

/// On any groupoid: exponent relating the lift of `d^-1 l d` to the conjugated lift of the loop `l`.
pub fn inertia_exponent(h: &FiniteGroupoid, theta: &ExtensionCocycle, l: usize, d: usize) -> i64 {
    let conj = h.conjugate(l, d);
    (theta.exponent(l, d) - theta.exponent(d, conj)).rem_euclid(theta.order() as i64)
}

/// Largest violation of "additive rational 1-cocycles vanish on loops": returns the loops on
/// which some basis cocycle is nonzero.
pub fn additive_cocycles_on_loops(h: &FiniteGroupoid) -> Vec<usize> {
    let basis = h.additive_one_cocycles();
    h.loops()
        .into_iter()
        .filter(|&l| basis.iter().any(|c| !c[l].is_zero()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::klein_four_cocycle;
    use crate::groupoid::GroupAction;

    fn k4_point() -> (ActionGroupoid, ExtensionCocycle) {
        let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
        let th = klein_four_cocycle(base.groupoid());
        (base, th)
    }

    #[test]
    fn klein_characters_nontrivial_off_identity() {
        let (base, th) = k4_point();
        for g in 0..4 {
            let f = transgress(&base, &th, g).unwrap();
            assert!(f.flatness_violations().is_empty());
            assert_eq!(f.invariant_sections(), usize::from(g == 0));
        }
    }

    #[test]
    fn coboundary_gives_isomorphic_family() {
        let (base, th) = k4_point();
        let th2 = th.apply_coboundary(4, &[0, 1, 2, 3]).unwrap();
        for g in 0..4 {
            let f1 = transgress(&base, &th, g).unwrap();
            let f2 = transgress(&base, &th2, g).unwrap();
            assert!(matches!(
                compare_families(&f1, &f2).unwrap(),
                Comparison::Isomorphic(_)
            ));
        }
    }
}
