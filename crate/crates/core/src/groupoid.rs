//! Finite groups, right actions, finite groupoids and their nerve cochains.
//!
//! Composition convention: `(g1, g2)` is composable when `source(g1) == target(g2)`,
//! and the product `g1 g2` goes from `source(g2)` to `target(g1)`.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scalar::Scalar;
use std::collections::{BTreeSet, HashMap};

/// Finite group given by its multiplication table. Element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    inverse: Vec<usize>,
    names: Vec<String>,
}

impl FiniteGroup {
    /// Builds a group from a Cayley table (`table[a * n + b] = ab`) with identity 0.
    pub fn from_table(table: Vec<usize>, names: Vec<String>) -> Result<FiniteGroup> {
        let n = names.len();
        if n == 0 || table.len() != n * n {
            return Err(Error::InvalidStructure(format!(
                "table of size {} for {} elements",
                table.len(),
                n
            )));
        }
        if table.iter().any(|&x| x >= n) {
            return Err(Error::InvalidStructure("table entry out of range".into()));
        }
        for a in 0..n {
            if table[a] != a || table[a * n] != a {
                return Err(Error::InvalidStructure(format!(
                    "element 0 is not an identity for {}",
                    names[a]
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a * n + b] * n + c] != table[a * n + table[b * n + c]] {
                        return Err(Error::InvalidStructure(format!(
                            "associativity fails on ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            match (0..n).find(|&b| table[a * n + b] == 0) {
                Some(b) => inverse[a] = b,
                None => {
                    return Err(Error::InvalidStructure(format!(
                        "{} has no inverse",
                        names[a]
                    )))
                }
            }
        }
        Ok(FiniteGroup {
            order: n,
            table,
            inverse,
            names,
        })
    }

    /// Group generated by permutations of `0..m`, with `(pq)[x] = q[p[x]]`.
    pub fn from_permutations(m: usize, generators: &[Vec<usize>]) -> Result<FiniteGroup> {
        Ok(FiniteGroup::permutation_group(m, generators)?.0)
    }

    /// Like [`FiniteGroup::from_permutations`], also returning each element as a permutation.
    pub fn permutation_group(
        m: usize,
        generators: &[Vec<usize>],
    ) -> Result<(FiniteGroup, Vec<Vec<usize>>)> {
        for g in generators {
            let set: BTreeSet<usize> = g.iter().copied().collect();
            if g.len() != m || set.len() != m || set.iter().any(|&x| x >= m) {
                return Err(Error::InvalidStructure(format!(
                    "{g:?} is not a permutation of {m} points"
                )));
            }
        }
        let id: Vec<usize> = (0..m).collect();
        let mut elems = vec![id.clone()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(id, 0)]);
        let mut frontier = 0;
        while frontier < elems.len() {
            let p = elems[frontier].clone();
            frontier += 1;
            for g in generators {
                let pg: Vec<usize> = (0..m).map(|x| g[p[x]]).collect();
                if !index.contains_key(&pg) {
                    index.insert(pg.clone(), elems.len());
                    elems.push(pg);
                }
            }
        }
        let n = elems.len();
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                let ab: Vec<usize> = (0..m).map(|x| elems[b][elems[a][x]]).collect();
                table[a * n + b] = index[&ab];
            }
        }
        let names = elems.iter().map(|p| perm_name(p)).collect();
        Ok((FiniteGroup::from_table(table, names)?, elems))
    }

    pub fn cyclic(n: usize) -> FiniteGroup {
        let table = (0..n * n).map(|i| (i / n + i % n) % n).collect();
        let names = (0..n)
            .map(|k| {
                if k == 0 {
                    "e".to_string()
                } else {
                    format!("r{k}")
                }
            })
            .collect();
        FiniteGroup::from_table(table, names).expect("cyclic group")
    }

    /// `Z/2 x Z/2` with elements `e, a, b, c = ab`; element index is the bit pattern.
    pub fn klein_four() -> FiniteGroup {
        let table = (0..16).map(|i| (i / 4) ^ (i % 4)).collect();
        let names = ["e", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        FiniteGroup::from_table(table, names).expect("klein four")
    }

    /// Symmetric group on `m` points, generated by a transposition and an m-cycle.
    pub fn symmetric(m: usize) -> FiniteGroup {
        if m <= 1 {
            return FiniteGroup::cyclic(1);
        }
        let mut t: Vec<usize> = (0..m).collect();
        t.swap(0, 1);
        let c: Vec<usize> = (0..m).map(|x| (x + 1) % m).collect();
        FiniteGroup::from_permutations(m, &[t, c]).expect("symmetric group")
    }

    pub fn trivial() -> FiniteGroup {
        FiniteGroup::cyclic(1)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// `h^-1 g h`.
    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(self.inv(h), g), h)
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn element_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn centralizer(&self, g: usize) -> Vec<usize> {
        (0..self.order)
            .filter(|&h| self.mul(g, h) == self.mul(h, g))
            .collect()
    }

    /// Conjugacy classes, each sorted, ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut out = Vec::new();
        for g in 0..self.order {
            if seen[g] {
                continue;
            }
            let class: BTreeSet<usize> = (0..self.order).map(|h| self.conj(g, h)).collect();
            for &x in &class {
                seen[x] = true;
            }
            out.push(class.into_iter().collect());
        }
        out
    }

    pub fn class_representatives(&self) -> Vec<usize> {
        self.conjugacy_classes().into_iter().map(|c| c[0]).collect()
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }
}

fn perm_name(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for s in 0..p.len() {
        if seen[s] || p[s] == s {
            continue;
        }
        let mut cyc = vec![s];
        seen[s] = true;
        let mut x = p[s];
        while x != s {
            cyc.push(x);
            seen[x] = true;
            x = p[x];
        }
        out.push('(');
        out.push_str(
            &cyc.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push(')');
    }
    if out.is_empty() {
        "e".into()
    } else {
        out
    }
}

/// Right action `x . g` of a finite group on `0..points`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAction {
    group: FiniteGroup,
    points: usize,
    table: Vec<usize>,
}

impl GroupAction {
    /// `table[x * |G| + g] = x . g`.
    pub fn new(group: FiniteGroup, points: usize, table: Vec<usize>) -> Result<GroupAction> {
        let n = group.order();
        if table.len() != points * n || table.iter().any(|&y| y >= points) {
            return Err(Error::InvalidStructure(
                "action table has the wrong shape".into(),
            ));
        }
        for x in 0..points {
            if table[x * n] != x {
                return Err(Error::InvalidStructure(format!("identity moves point {x}")));
            }
            for g in 0..n {
                for h in 0..n {
                    if table[table[x * n + g] * n + h] != table[x * n + group.mul(g, h)] {
                        return Err(Error::InvalidStructure(format!(
                            "(x.g).h != x.(gh) for x={x}, g={}, h={}",
                            group.name(g),
                            group.name(h)
                        )));
                    }
                }
            }
        }
        Ok(GroupAction {
            group,
            points,
            table,
        })
    }

    pub fn trivial(group: FiniteGroup, points: usize) -> GroupAction {
        let n = group.order();
        let table = (0..points * n).map(|i| i / n).collect();
        GroupAction {
            group,
            points,
            table,
        }
    }

    /// Natural right action `x . p = p[x]` of a permutation group.
    pub fn permutation_action(m: usize, generators: &[Vec<usize>]) -> Result<GroupAction> {
        let (group, elems) = FiniteGroup::permutation_group(m, generators)?;
        let n = group.order();
        let table = (0..m * n).map(|i| elems[i % n][i / n]).collect();
        GroupAction::new(group, m, table)
    }

    /// Right multiplication of a group on itself.
    pub fn regular(group: FiniteGroup) -> GroupAction {
        let n = group.order();
        let table = (0..n * n).map(|i| group.mul(i / n, i % n)).collect();
        GroupAction {
            group,
            points: n,
            table,
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn act(&self, x: usize, g: usize) -> usize {
        self.table[x * self.group.order() + g]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Points fixed by `g`.
    pub fn fixed_points(&self, g: usize) -> Vec<usize> {
        (0..self.points).filter(|&x| self.act(x, g) == x).collect()
    }

    /// Orbits of a subgroup (given as a list of elements) on a set of points.
    pub fn orbits_of(&self, subgroup: &[usize], points: &[usize]) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &x in points {
            if seen.contains(&x) {
                continue;
            }
            let orbit: BTreeSet<usize> = subgroup.iter().map(|&h| self.act(x, h)).collect();
            seen.extend(orbit.iter().copied());
            out.push(orbit.into_iter().collect());
        }
        out
    }
}

const NONE: u32 = u32::MAX;

/// Finite groupoid with a dense composition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroupoid {
    objects: usize,
    source: Vec<usize>,
    target: Vec<usize>,
    compose: Vec<u32>,
    units: Vec<usize>,
    inverse: Vec<usize>,
    labels: Vec<String>,
}

impl FiniteGroupoid {
    /// Builds and validates a groupoid. `compose(a, b)` is consulted for composable pairs only.
    pub fn new(
        objects: usize,
        source: Vec<usize>,
        target: Vec<usize>,
        labels: Vec<String>,
        compose: impl Fn(usize, usize) -> usize,
    ) -> Result<FiniteGroupoid> {
        let n = source.len();
        if target.len() != n || labels.len() != n {
            return Err(Error::InvalidStructure(
                "source/target/labels lengths differ".into(),
            ));
        }
        if source.iter().chain(target.iter()).any(|&o| o >= objects) {
            return Err(Error::InvalidStructure(
                "arrow endpoint out of range".into(),
            ));
        }
        let mut table = vec![NONE; n * n];
        for a in 0..n {
            for b in 0..n {
                if source[a] == target[b] {
                    let c = compose(a, b);
                    if c >= n || source[c] != source[b] || target[c] != target[a] {
                        return Err(Error::InvalidStructure(format!(
                            "composite of {} and {} has wrong endpoints",
                            labels[a], labels[b]
                        )));
                    }
                    table[a * n + b] = c as u32;
                }
            }
        }
        let mut units = vec![usize::MAX; objects];
        for x in 0..objects {
            let cand = (0..n).find(|&u| {
                source[u] == x
                    && target[u] == x
                    && (0..n).all(|a| {
                        (source[a] != x || table[a * n + u] == a as u32)
                            && (target[a] != x || table[u * n + a] == a as u32)
                    })
            });
            match cand {
                Some(u) => units[x] = u,
                None => return Err(Error::InvalidStructure(format!("object {x} has no unit"))),
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = table[a * n + b];
                if ab == NONE {
                    continue;
                }
                for c in 0..n {
                    let bc = table[b * n + c];
                    if bc == NONE {
                        continue;
                    }
                    if table[ab as usize * n + c] != table[a * n + bc as usize] {
                        return Err(Error::InvalidStructure(format!(
                            "associativity fails on ({}, {}, {})",
                            labels[a], labels[b], labels[c]
                        )));
                    }
                }
            }
        }
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            let inv = (0..n).find(|&b| {
                source[b] == target[a]
                    && target[b] == source[a]
                    && table[a * n + b] == units[target[a]] as u32
                    && table[b * n + a] == units[source[a]] as u32
            });
            match inv {
                Some(b) => inverse[a] = b,
                None => {
                    return Err(Error::InvalidStructure(format!(
                        "{} has no inverse",
                        labels[a]
                    )))
                }
            }
        }
        Ok(FiniteGroupoid {
            objects,
            source,
            target,
            compose: table,
            units,
            inverse,
            labels,
        })
    }

    /// One-object groupoid of a group.
    pub fn from_group(g: &FiniteGroup) -> FiniteGroupoid {
        let n = g.order();
        FiniteGroupoid::new(1, vec![0; n], vec![0; n], g.names().to_vec(), |a, b| {
            g.mul(a, b)
        })
        .expect("group groupoid")
    }

    /// Pair groupoid on `n` objects; arrow `(x, y)` has target `x`, source `y`, index `x * n + y`.
    pub fn pair(n: usize) -> FiniteGroupoid {
        let source = (0..n * n).map(|i| i % n).collect();
        let target = (0..n * n).map(|i| i / n).collect();
        let labels = (0..n * n)
            .map(|i| format!("({},{})", i / n, i % n))
            .collect();
        FiniteGroupoid::new(n, source, target, labels, |a, b| (a / n) * n + b % n)
            .expect("pair groupoid")
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn arrows(&self) -> usize {
        self.source.len()
    }

    pub fn source(&self, a: usize) -> usize {
        self.source[a]
    }

    pub fn target(&self, a: usize) -> usize {
        self.target[a]
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn compose(&self, a: usize, b: usize) -> Option<usize> {
        let c = self.compose[a * self.arrows() + b];
        (c != NONE).then_some(c as usize)
    }

    /// Composite of a composable pair; panics otherwise.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.compose(a, b).unwrap_or_else(|| {
            panic!(
                "{} and {} are not composable",
                self.labels[a], self.labels[b]
            )
        })
    }

    pub fn unit(&self, x: usize) -> usize {
        self.units[x]
    }

    pub fn is_unit(&self, a: usize) -> bool {
        self.units[self.source[a]] == a
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_loop(&self, a: usize) -> bool {
        self.source[a] == self.target[a]
    }

    /// Arrows with the given target.
    pub fn arrows_into(&self, x: usize) -> Vec<usize> {
        (0..self.arrows())
            .filter(|&a| self.target[a] == x)
            .collect()
    }

    /// Composable `q`-tuples (the nerve in degree `q`). Degree 0 lists objects as 1-tuples.
    pub fn nerve(&self, q: usize) -> Vec<Vec<usize>> {
        if q == 0 {
            return (0..self.objects).map(|x| vec![x]).collect();
        }
        let mut out: Vec<Vec<usize>> = (0..self.arrows()).map(|a| vec![a]).collect();
        for _ in 1..q {
            let mut next = Vec::new();
            for t in &out {
                let last = *t.last().unwrap();
                for b in 0..self.arrows() {
                    if self.source[last] == self.target[b] {
                        let mut u = t.clone();
                        u.push(b);
                        next.push(u);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Faces `d_0, .., d_q` of a composable `q`-tuple, `q >= 1`.
    pub fn faces(&self, t: &[usize]) -> Vec<Vec<usize>> {
        let q = t.len();
        if q == 1 {
            return vec![vec![self.source[t[0]]], vec![self.target[t[0]]]];
        }
        let mut out = Vec::with_capacity(q + 1);
        out.push(t[1..].to_vec());
        for i in 0..q - 1 {
            let mut f = t[..i].to_vec();
            f.push(self.mul(t[i], t[i + 1]));
            f.extend_from_slice(&t[i + 2..]);
            out.push(f);
        }
        out.push(t[..q - 1].to_vec());
        out
    }

    /// Matrix of the simplicial coboundary `C^q -> C^(q+1)` on nerve cochains with
    /// coordinates indexed by [`FiniteGroupoid::nerve`].
    pub fn coboundary_matrix(&self, q: usize) -> SparseMatrix {
        let src = self.nerve(q);
        let index: HashMap<&Vec<usize>, usize> =
            src.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let tgt = self.nerve(q + 1);
        let mut rows: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); src.len()];
        for (r, t) in tgt.iter().enumerate() {
            for (i, f) in self.faces(t).iter().enumerate() {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                rows[index[f]].push((r, Scalar::from_int(sign)));
            }
        }
        SparseMatrix::from_columns(tgt.len(), rows).expect("coboundary shape")
    }

    /// Basis of rational additive 1-cocycles `c(g h) = c(g) + c(h)`, as dense vectors over arrows.
    pub fn additive_one_cocycles(&self) -> Vec<Vec<Scalar>> {
        self.coboundary_matrix(1).to_dense().nullspace()
    }

    /// Conjugation `k^-1 g k` of a loop `g` by an arrow `k` with `target(k) == source(g)`.
    pub fn conjugate(&self, g: usize, k: usize) -> usize {
        self.mul(self.mul(self.inverse(k), g), k)
    }

    /// Loops of the groupoid (the objects of the inertia groupoid).
    pub fn loops(&self) -> Vec<usize> {
        (0..self.arrows()).filter(|&a| self.is_loop(a)).collect()
    }
}

/// Action groupoid `M x| G` of a right action: arrow `(x, g)` goes from `x.g` to `x`.
#[derive(Clone, Debug)]
pub struct ActionGroupoid {
    action: GroupAction,
    groupoid: FiniteGroupoid,
}

impl ActionGroupoid {
    pub fn new(action: GroupAction) -> ActionGroupoid {
        let n = action.group().order();
        let m = action.points();
        let source = (0..m * n).map(|i| action.act(i / n, i % n)).collect();
        let target = (0..m * n).map(|i| i / n).collect();
        let labels = (0..m * n)
            .map(|i| format!("({},{})", i / n, action.group().name(i % n)))
            .collect();
        let g = action.group().clone();
        let groupoid = FiniteGroupoid::new(m, source, target, labels, |a, b| {
            (a / n) * n + g.mul(a % n, b % n)
        })
        .expect("action groupoid");
        ActionGroupoid { action, groupoid }
    }

    pub fn action(&self) -> &GroupAction {
        &self.action
    }

    pub fn group(&self) -> &FiniteGroup {
        self.action.group()
    }

    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.groupoid
    }

    pub fn arrow(&self, x: usize, g: usize) -> usize {
        x * self.group().order() + g
    }

    /// `(x, g)` for an arrow index.
    pub fn decode(&self, a: usize) -> (usize, usize) {
        let n = self.group().order();
        (a / n, a % n)
    }

    /// Conjugation action of `G` on arrows: `(x, g).k = (x.k, k^-1 g k)`.
    pub fn conjugation_action(&self) -> GroupoidAction {
        let g = self.group().clone();
        let n = g.order();
        let perms = (0..n)
            .map(|k| {
                (0..self.groupoid.arrows())
                    .map(|a| self.arrow(self.action.act(a / n, k), g.conj(a % n, k)))
                    .collect()
            })
            .collect();
        GroupoidAction::new(g, &self.groupoid, perms).expect("conjugation action")
    }
}

/// Right action of a finite group on a groupoid by automorphisms, stored on arrows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupoidAction {
    group: FiniteGroup,
    perms: Vec<Vec<usize>>,
    object_perms: Vec<Vec<usize>>,
}

impl GroupoidAction {
    /// `perms[k][a] = a . k`; validated as a right action by functors.
    pub fn new(
        group: FiniteGroup,
        h: &FiniteGroupoid,
        perms: Vec<Vec<usize>>,
    ) -> Result<GroupoidAction> {
        let n = group.order();
        if perms.len() != n
            || perms
                .iter()
                .any(|p| p.len() != h.arrows() || p.iter().any(|&b| b >= h.arrows()))
        {
            return Err(Error::InvalidStructure(
                "groupoid action has the wrong shape".into(),
            ));
        }
        let mut object_perms = vec![vec![0; h.objects()]; n];
        for k in 0..n {
            for x in 0..h.objects() {
                let u = perms[k][h.unit(x)];
                if !h.is_unit(u) {
                    return Err(Error::InvalidStructure(
                        "action does not preserve units".into(),
                    ));
                }
                object_perms[k][x] = h.source(u);
            }
            for a in 0..h.arrows() {
                let b = perms[k][a];
                if h.source(b) != object_perms[k][h.source(a)]
                    || h.target(b) != object_perms[k][h.target(a)]
                {
                    return Err(Error::InvalidStructure(
                        "action does not commute with source/target".into(),
                    ));
                }
                for c in 0..h.arrows() {
                    if let Some(ac) = h.compose(a, c) {
                        if h.compose(b, perms[k][c]) != Some(perms[k][ac]) {
                            return Err(Error::InvalidStructure("action is not a functor".into()));
                        }
                    }
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                for a in 0..h.arrows() {
                    if perms[l][perms[k][a]] != perms[group.mul(k, l)][a] {
                        return Err(Error::InvalidStructure("not a right action".into()));
                    }
                }
            }
        }
        if perms[0].iter().enumerate().any(|(a, &b)| a != b) {
            return Err(Error::InvalidStructure("identity acts nontrivially".into()));
        }
        Ok(GroupoidAction {
            group,
            perms,
            object_perms,
        })
    }

    pub fn trivial(group: FiniteGroup, h: &FiniteGroupoid) -> GroupoidAction {
        let perms = vec![(0..h.arrows()).collect(); group.order()];
        GroupoidAction::new(group, h, perms).expect("trivial action")
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn act(&self, a: usize, k: usize) -> usize {
        self.perms[k][a]
    }

    pub fn act_object(&self, x: usize, k: usize) -> usize {
        self.object_perms[k][x]
    }
}

/// Pullback of a groupoid along a map `p` from a new object set.
/// Arrow `(x, a, y)` exists when `p(x) = target(a)` and `p(y) = source(a)`.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub groupoid: FiniteGroupoid,
    /// Arrow of the base groupoid under each new arrow.
    pub arrow_map: Vec<usize>,
    /// `(x, a, y)` for each new arrow.
    pub triples: Vec<(usize, usize, usize)>,
}

pub fn pullback_groupoid(base: &FiniteGroupoid, p: &[usize]) -> Result<Pullback> {
    if p.iter().any(|&o| o >= base.objects()) {
        return Err(Error::InvalidStructure(
            "map lands outside the base objects".into(),
        ));
    }
    let covered: BTreeSet<usize> = p.iter().copied().collect();
    if covered.len() != base.objects() {
        return Err(Error::InvalidStructure(
            "map is not surjective on objects".into(),
        ));
    }
    let mut triples = Vec::new();
    for x in 0..p.len() {
        for a in 0..base.arrows() {
            if base.target(a) != p[x] {
                continue;
            }
            for y in 0..p.len() {
                if base.source(a) == p[y] {
                    triples.push((x, a, y));
                }
            }
        }
    }
    let index: HashMap<(usize, usize, usize), usize> =
        triples.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let source = triples.iter().map(|t| t.2).collect();
    let target = triples.iter().map(|t| t.0).collect();
    let labels = triples
        .iter()
        .map(|(x, a, y)| format!("({x},{},{y})", base.label(*a)))
        .collect();
    let groupoid = FiniteGroupoid::new(p.len(), source, target, labels, |i, j| {
        let (x, a, _) = triples[i];
        let (_, b, z) = triples[j];
        index[&(x, base.mul(a, b), z)]
    })?;
    let arrow_map = triples.iter().map(|t| t.1).collect();
    Ok(Pullback {
        groupoid,
        arrow_map,
        triples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_groups() {
        assert_eq!(FiniteGroup::symmetric(3).order(), 6);
        assert_eq!(FiniteGroup::symmetric(3).conjugacy_classes().len(), 3);
        assert_eq!(FiniteGroup::klein_four().conjugacy_classes().len(), 4);
        assert!(!FiniteGroup::symmetric(3).is_abelian());
    }

    #[test]
    fn coboundary_squares_to_zero() {
        let act = GroupAction::regular(FiniteGroup::symmetric(3));
        let h = ActionGroupoid::new(act);
        for q in 0..3 {
            let a = h.groupoid().coboundary_matrix(q);
            let b = h.groupoid().coboundary_matrix(q + 1);
            assert!(b.mul(&a).unwrap().is_zero());
        }
    }

    #[test]
    fn bad_table_rejected() {
        let r = FiniteGroup::from_table(vec![0, 1, 1, 1], vec!["e".into(), "x".into()]);
        assert!(r.is_err());
    }

    #[test]
    fn pullback_of_point_is_pair_groupoid() {
        let g = FiniteGroupoid::from_group(&FiniteGroup::trivial());
        let pb = pullback_groupoid(&g, &[0, 0]).unwrap();
        assert_eq!(pb.groupoid.arrows(), 4);
        assert_eq!(pb.groupoid.objects(), 2);
    }
}
