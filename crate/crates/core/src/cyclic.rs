//! Equivariant cyclic chains and the operators `b` and `B`.
//!
//! A chain in sector `g` is a combination of tensors `a_0 (x) a_1 (x) .. (x) a_k` with
//! `a_0` in the unitization (the formal unit is [`UNIT`]) and `a_i` in `A` for `i >= 1`;
//! the twist is `sigma = g^-1` acting on the algebra:
//!
//! ```text
//! b(a_0..a_k) = sum_{i<k} (-1)^i a_0..(a_i a_{i+1})..a_k + (-1)^k (sigma a_k) a_0 a_1..a_{k-1}
//! B(a_0..a_k) = sum_{i=0..k} (-1)^{k i} 1 (sigma a_{k-i+1})..(sigma a_k) a_0..a_{k-i}
//! ```
//!
//! Degree 0 is `A` itself. [`Mode::Normalized`] works modulo degenerate tensors (an object
//! unit in a slot `i >= 1`) and relative to the object idempotents of a groupoid algebra,
//! which gives much smaller complexes with the same homology.

use crate::error::{Error, Result};
use crate::extension::{Algebra, MonomialAction, TwistedAlgebra};
use crate::groupoid::FiniteGroup;
use crate::linalg::{ColumnReducer, SparseMatrix, SparseVec};
use crate::modular::{common_order, PrimeField};
use crate::scalar::Scalar;
use serde::Serialize;
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};

/// Formal unit of the unitization in slot 0.
pub const UNIT: u32 = u32::MAX;

/// Tensor `a_0 (x) .. (x) a_k` of basis indices.
pub type ChainKey = SmallVec<[u32; 9]>;

/// Object structure of a groupoid algebra: basis element `i` goes from `source[i]` to `target[i]`.
#[derive(Clone, Debug)]
pub struct GroupoidStructure {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub is_unit: Vec<bool>,
}

/// Finite-dimensional algebra with explicit structure constants.
#[derive(Clone, Debug)]
pub struct AlgebraData {
    dim: usize,
    mult: Vec<SparseVec>,
    unit: SparseVec,
    labels: Vec<String>,
    groupoid: Option<GroupoidStructure>,
}

impl AlgebraData {
    pub fn from_algebra<A: Algebra + ?Sized>(a: &A) -> AlgebraData {
        let d = a.dim();
        let mut mult = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                mult.push(a.mul_basis(i, j));
            }
        }
        AlgebraData {
            dim: d,
            mult,
            unit: a.unit(),
            labels: (0..d).map(|i| a.basis_label(i)).collect(),
            groupoid: None,
        }
    }

    pub fn from_twisted(t: &TwistedAlgebra) -> AlgebraData {
        let mut a = AlgebraData::from_algebra(t);
        let h = t.groupoid();
        a.groupoid = Some(GroupoidStructure {
            source: (0..h.arrows()).map(|i| h.source(i)).collect(),
            target: (0..h.arrows()).map(|i| h.target(i)).collect(),
            is_unit: (0..h.arrows()).map(|i| h.is_unit(i)).collect(),
        });
        a
    }

    /// The ground field, as the algebra of the one-object trivial groupoid.
    pub fn field() -> AlgebraData {
        AlgebraData {
            dim: 1,
            mult: vec![vec![(0, Scalar::one())]],
            unit: vec![(0, Scalar::one())],
            labels: vec!["1".into()],
            groupoid: Some(GroupoidStructure {
                source: vec![0],
                target: vec![0],
                is_unit: vec![true],
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self, i: usize, j: usize) -> &SparseVec {
        &self.mult[i * self.dim + j]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn groupoid(&self) -> Option<&GroupoidStructure> {
        self.groupoid.as_ref()
    }

    /// Checks associativity and the unit on all basis triples.
    pub fn check_associative(&self) -> Result<()> {
        let d = self.dim;
        let mul_vec = |x: &SparseVec, j: usize| -> SparseVec {
            crate::linalg::collect_sparse(
                x.iter()
                    .flat_map(|(i, c)| self.structure(*i, j).iter().map(move |(t, v)| (*t, c * v))),
            )
        };
        let vec_mul = |i: usize, y: &SparseVec| -> SparseVec {
            crate::linalg::collect_sparse(
                y.iter()
                    .flat_map(|(j, c)| self.structure(i, *j).iter().map(move |(t, v)| (*t, c * v))),
            )
        };
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let l = mul_vec(self.structure(i, j), k);
                    let r = vec_mul(i, self.structure(j, k));
                    if l != r {
                        return Err(Error::InvalidStructure(format!(
                            "associativity fails on ({}, {}, {})",
                            self.labels[i], self.labels[j], self.labels[k]
                        )));
                    }
                }
            }
            let e = vec![(i, Scalar::one())];
            let mut ui = Vec::new();
            let mut iu = Vec::new();
            for (u, c) in &self.unit {
                ui.extend(self.structure(*u, i).iter().map(|(t, v)| (*t, c * v)));
                iu.extend(self.structure(i, *u).iter().map(|(t, v)| (*t, c * v)));
            }
            if crate::linalg::collect_sparse(ui) != e || crate::linalg::collect_sparse(iu) != e {
                return Err(Error::InvalidStructure(format!(
                    "unit fails on {}",
                    self.labels[i]
                )));
            }
        }
        Ok(())
    }
}

/// Algebra with a monomial action of a finite group.
#[derive(Clone, Debug)]
pub struct EquivariantAlgebra {
    pub algebra: AlgebraData,
    pub action: MonomialAction,
}

impl EquivariantAlgebra {
    pub fn new(algebra: AlgebraData, action: MonomialAction) -> EquivariantAlgebra {
        EquivariantAlgebra { algebra, action }
    }

    /// Algebra with the trivial action of the trivial group.
    pub fn plain(algebra: AlgebraData) -> EquivariantAlgebra {
        let action = MonomialAction::trivial(FiniteGroup::trivial(), &algebra);
        EquivariantAlgebra { algebra, action }
    }

    pub fn group(&self) -> &FiniteGroup {
        self.action.group()
    }
}

impl Algebra for AlgebraData {
    fn dim(&self) -> usize {
        self.dim
    }
    fn mul_basis(&self, i: usize, j: usize) -> SparseVec {
        self.mult[i * self.dim + j].clone()
    }
    fn unit(&self) -> SparseVec {
        self.unit.clone()
    }
    fn basis_label(&self, i: usize) -> String {
        self.labels[i].clone()
    }
}

/// Which chain complex to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Unitization in slot 0, arbitrary basis tensors elsewhere.
    Unitized,
    /// Normalized complex relative to the object idempotents of a groupoid algebra.
    Normalized,
}

/// Sparse chain in one sector.
pub type Chain = HashMap<ChainKey, Scalar>;

pub fn add_term(c: &mut Chain, k: ChainKey, v: Scalar) {
    if v.is_zero() {
        return;
    }
    match c.get_mut(&k) {
        Some(x) => {
            *x += &v;
            if x.is_zero() {
                c.remove(&k);
            }
        }
        None => {
            c.insert(k, v);
        }
    }
}

/// Operators `b` and `B` in the sector of `g`.
pub struct SectorOperators<'a> {
    alg: &'a AlgebraData,
    action: &'a MonomialAction,
    g: usize,
    sigma: usize,
    mode: Mode,
    /// Flips the sign of the wrap-around term of `b`; only for negative controls.
    pub flip_wrap_sign: bool,
}

impl<'a> SectorOperators<'a> {
    pub fn new(ea: &'a EquivariantAlgebra, g: usize, mode: Mode) -> Result<SectorOperators<'a>> {
        if mode == Mode::Normalized && ea.algebra.groupoid.is_none() {
            return Err(Error::Unsupported(
                "normalized complex needs a groupoid algebra".into(),
            ));
        }
        let sigma = ea.group().inv(g);
        Ok(SectorOperators {
            alg: &ea.algebra,
            action: &ea.action,
            g,
            sigma,
            mode,
            flip_wrap_sign: false,
        })
    }

    pub fn sector(&self) -> usize {
        self.g
    }

    fn sigma(&self, a: u32) -> (u32, Scalar) {
        let (p, s) = self.action.apply(self.sigma, a as usize);
        (p as u32, s)
    }

    /// Whether a key is a basis tensor of the complex in this mode.
    pub fn admissible(&self, key: &[u32]) -> bool {
        match self.mode {
            Mode::Unitized => key.len() > 1 || key[0] != UNIT,
            Mode::Normalized => {
                let gs = self.alg.groupoid.as_ref().unwrap();
                if key[0] == UNIT {
                    return false;
                }
                for w in key.windows(2) {
                    if gs.source[w[0] as usize] != gs.target[w[1] as usize] {
                        return false;
                    }
                }
                if key[1..].iter().any(|&a| gs.is_unit[a as usize]) {
                    return false;
                }
                let last = *key.last().unwrap() as usize;
                let (pl, _) = self.action.apply(self.sigma, last);
                gs.source[pl] == gs.target[key[0] as usize]
            }
        }
    }

    fn emit(&self, out: &mut Chain, key: ChainKey, v: Scalar) {
        if self.mode == Mode::Normalized && !self.admissible(&key) {
            return;
        }
        add_term(out, key, v);
    }

    /// `b` on a basis tensor.
    pub fn b_key(&self, key: &[u32], coeff: &Scalar, out: &mut Chain) {
        let k = key.len() - 1;
        if k == 0 {
            return;
        }
        for i in 0..k {
            let sign = if i % 2 == 0 { coeff.clone() } else { -coeff };
            let (x, y) = (key[i], key[i + 1]);
            if x == UNIT {
                let mut nk: ChainKey = SmallVec::new();
                nk.push(y);
                nk.extend_from_slice(&key[2..]);
                self.emit(out, nk, sign);
                continue;
            }
            for (t, v) in self.alg.structure(x as usize, y as usize) {
                let mut nk: ChainKey = SmallVec::new();
                nk.extend_from_slice(&key[..i]);
                nk.push(*t as u32);
                nk.extend_from_slice(&key[i + 2..]);
                self.emit(out, nk, &sign * v);
            }
        }
        let mut sign = if k.is_multiple_of(2) {
            coeff.clone()
        } else {
            -coeff
        };
        if self.flip_wrap_sign {
            sign = -sign;
        }
        let (sa, ss) = self.sigma(key[k]);
        let sign = &sign * &ss;
        if key[0] == UNIT {
            let mut nk: ChainKey = SmallVec::new();
            nk.push(sa);
            nk.extend_from_slice(&key[1..k]);
            self.emit(out, nk, sign);
        } else {
            for (t, v) in self.alg.structure(sa as usize, key[0] as usize) {
                let mut nk: ChainKey = SmallVec::new();
                nk.push(*t as u32);
                nk.extend_from_slice(&key[1..k]);
                self.emit(out, nk, &sign * v);
            }
        }
    }

    /// `B` on a basis tensor.
    pub fn big_b_key(&self, key: &[u32], coeff: &Scalar, out: &mut Chain) {
        if key[0] == UNIT {
            return;
        }
        let k = key.len() - 1;
        let wrapped: Vec<(u32, Scalar)> = key.iter().map(|&a| self.sigma(a)).collect();
        for i in 0..=k {
            let sign = if (k * i).is_multiple_of(2) {
                coeff.clone()
            } else {
                -coeff
            };
            let mut tail: ChainKey = SmallVec::new();
            let mut c = sign;
            for j in (k + 1 - i)..=k {
                tail.push(wrapped[j].0);
                c = &c * &wrapped[j].1;
            }
            tail.extend_from_slice(&key[..=k - i]);
            match self.mode {
                Mode::Unitized => {
                    let mut nk: ChainKey = SmallVec::new();
                    nk.push(UNIT);
                    nk.extend_from_slice(&tail);
                    add_term(out, nk, c);
                }
                Mode::Normalized => {
                    for (u, w) in &self.alg.unit {
                        let mut nk: ChainKey = SmallVec::new();
                        nk.push(*u as u32);
                        nk.extend_from_slice(&tail);
                        self.emit(out, nk, &c * w);
                    }
                }
            }
        }
    }

    pub fn b(&self, c: &Chain) -> Chain {
        let mut out = Chain::new();
        for (k, v) in c {
            self.b_key(k, v, &mut out);
        }
        out
    }

    pub fn big_b(&self, c: &Chain) -> Chain {
        let mut out = Chain::new();
        for (k, v) in c {
            self.big_b_key(k, v, &mut out);
        }
        out
    }

    /// Diagonal action of `h` (in the centralizer) on a basis tensor.
    pub fn act_key(&self, h: usize, key: &[u32]) -> (ChainKey, Scalar) {
        let mut nk: ChainKey = SmallVec::new();
        let mut s = Scalar::one();
        for &a in key {
            if a == UNIT {
                nk.push(UNIT);
            } else {
                let (p, c) = self.action.apply(h, a as usize);
                nk.push(p as u32);
                s = &s * &c;
            }
        }
        (nk, s)
    }

    /// All basis tensors of degree `k`, in a fixed order.
    pub fn basis(&self, k: usize) -> Vec<ChainKey> {
        let d = self.alg.dim as u32;
        let mut out = Vec::new();
        match self.mode {
            Mode::Unitized => {
                let first: Vec<u32> = if k == 0 {
                    (0..d).collect()
                } else {
                    std::iter::once(UNIT).chain(0..d).collect()
                };
                let mut cur: Vec<ChainKey> = first
                    .into_iter()
                    .map(|a| SmallVec::from_slice(&[a]))
                    .collect();
                for _ in 0..k {
                    let mut next = Vec::with_capacity(cur.len() * d as usize);
                    for c in &cur {
                        for a in 0..d {
                            let mut n = c.clone();
                            n.push(a);
                            next.push(n);
                        }
                    }
                    cur = next;
                }
                out = cur;
            }
            Mode::Normalized => {
                let gs = self.alg.groupoid.as_ref().unwrap();
                let mut by_target: Vec<Vec<u32>> =
                    vec![Vec::new(); gs.target.iter().copied().max().map_or(0, |m| m + 1)];
                for a in 0..d {
                    if !gs.is_unit[a as usize] {
                        by_target[gs.target[a as usize]].push(a);
                    }
                }
                let mut cur: Vec<ChainKey> = (0..d).map(|a| SmallVec::from_slice(&[a])).collect();
                for _ in 0..k {
                    let mut next = Vec::new();
                    for c in &cur {
                        let s = gs.source[*c.last().unwrap() as usize];
                        for &a in &by_target[s] {
                            let mut n = c.clone();
                            n.push(a);
                            next.push(n);
                        }
                    }
                    cur = next;
                }
                for c in cur {
                    if self.admissible(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Chain on all of `G`: terms indexed by a group element and a basis tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicChain {
    pub degree: usize,
    pub terms: BTreeMap<(usize, ChainKey), Scalar>,
}

impl CyclicChain {
    pub fn new(degree: usize) -> CyclicChain {
        CyclicChain {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, g: usize, key: &[u32], v: Scalar) -> Result<()> {
        if key.len() != self.degree + 1 {
            return Err(Error::DimensionMismatch(format!(
                "tensor of length {} in degree {}",
                key.len(),
                self.degree
            )));
        }
        let e = self
            .terms
            .entry((g, SmallVec::from_slice(key)))
            .or_insert_with(Scalar::zero);
        *e += &v;
        if e.is_zero() {
            self.terms.remove(&(g, SmallVec::from_slice(key)));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `k . (g, a_0..a_k) = (k g k^-1, k.a_0 .. k.a_k)`.
    pub fn act(&self, ea: &EquivariantAlgebra, k: usize) -> CyclicChain {
        let grp = ea.group();
        let mut out = CyclicChain::new(self.degree);
        for ((g, key), v) in &self.terms {
            let mut nk: ChainKey = SmallVec::new();
            let mut s = v.clone();
            for &a in key.iter() {
                if a == UNIT {
                    nk.push(UNIT);
                } else {
                    let (p, c) = ea.action.apply(k, a as usize);
                    nk.push(p as u32);
                    s = &s * &c;
                }
            }
            let g2 = grp.mul(grp.mul(k, *g), grp.inv(k));
            out.add(g2, &nk, s).expect("same degree");
        }
        out
    }

    /// Average over the group.
    pub fn average(&self, ea: &EquivariantAlgebra) -> CyclicChain {
        let n = ea.group().order();
        let mut out = CyclicChain::new(self.degree);
        let w = Scalar::from_ratio(1, n as i64);
        for k in 0..n {
            for ((g, key), v) in self.act(ea, k).terms {
                out.add(g, &key, &v * &w).expect("same degree");
            }
        }
        out
    }

    pub fn is_invariant(&self, ea: &EquivariantAlgebra) -> bool {
        (0..ea.group().order()).all(|k| &self.act(ea, k) == self)
    }
}

fn apply_sectorwise(
    ea: &EquivariantAlgebra,
    c: &CyclicChain,
    mode: Mode,
    degree: usize,
    f: impl Fn(&SectorOperators<'_>, &[u32], &Scalar, &mut Chain),
) -> Result<CyclicChain> {
    let mut out = CyclicChain::new(degree);
    let mut by_g: BTreeMap<usize, Vec<(&ChainKey, &Scalar)>> = BTreeMap::new();
    for ((g, key), v) in &c.terms {
        by_g.entry(*g).or_default().push((key, v));
    }
    for (g, terms) in by_g {
        let ops = SectorOperators::new(ea, g, mode)?;
        let mut acc = Chain::new();
        for (key, v) in terms {
            f(&ops, key, v, &mut acc);
        }
        for (key, v) in acc {
            out.add(g, &key, v)?;
        }
    }
    Ok(out)
}

/// `b` on a chain over all of `G`; zero in degree 0.
pub fn operator_b(ea: &EquivariantAlgebra, c: &CyclicChain, mode: Mode) -> Result<CyclicChain> {
    if c.degree == 0 {
        return Ok(CyclicChain::new(0));
    }
    apply_sectorwise(ea, c, mode, c.degree - 1, |ops, k, v, acc| {
        ops.b_key(k, v, acc)
    })
}

/// `B` on an invariant chain over all of `G`.
pub fn operator_big_b(ea: &EquivariantAlgebra, c: &CyclicChain, mode: Mode) -> Result<CyclicChain> {
    if !c.is_invariant(ea) {
        return Err(Error::NotInvariant("B needs an invariant chain".into()));
    }
    apply_sectorwise(ea, c, mode, c.degree + 1, |ops, k, v, acc| {
        ops.big_b_key(k, v, acc)
    })
}

/// Invariant basis of one degree: orbit sums of basis tensors under the centralizer.
pub struct InvariantBasis {
    /// Orbit vectors.
    pub vectors: Vec<Vec<(ChainKey, Scalar)>>,
    /// Representative key of each orbit and the coefficient of the representative.
    reps: HashMap<ChainKey, (usize, Scalar)>,
    member: HashMap<ChainKey, usize>,
}

impl InvariantBasis {
    pub fn build(
        ops: &SectorOperators<'_>,
        centralizer: &[usize],
        keys: Vec<ChainKey>,
    ) -> InvariantBasis {
        let mut vectors = Vec::new();
        let mut reps = HashMap::new();
        let mut member: HashMap<ChainKey, usize> = HashMap::new();
        let mut done: HashMap<ChainKey, ()> = HashMap::new();
        for key in keys {
            if done.contains_key(&key) {
                continue;
            }
            let mut coeffs: BTreeMap<ChainKey, Scalar> = BTreeMap::new();
            for &h in centralizer {
                let (nk, s) = ops.act_key(h, &key);
                let e = coeffs.entry(nk).or_insert_with(Scalar::zero);
                *e += &s;
            }
            for k in coeffs.keys() {
                done.insert(k.clone(), ());
            }
            let rep_coeff = coeffs[&key].clone();
            if rep_coeff.is_zero() {
                continue;
            }
            let idx = vectors.len();
            for k in coeffs.keys() {
                member.insert(k.clone(), idx);
            }
            reps.insert(key.clone(), (idx, rep_coeff));
            vectors.push(coeffs.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        }
        InvariantBasis {
            vectors,
            reps,
            member,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Coordinates of an invariant chain.
    pub fn coordinates(&self, c: &Chain) -> Result<SparseVec> {
        let mut out = Vec::new();
        for (k, v) in c {
            if let Some((idx, rc)) = self.reps.get(k) {
                out.push((*idx, v / rc));
            } else if !self.member.contains_key(k) {
                return Err(Error::InvalidStructure(
                    "chain leaves the invariant subspace".into(),
                ));
            }
        }
        out.sort_by_key(|e| e.0);
        Ok(out)
    }
}

/// Matrices of `b` and `B` on the invariant subcomplex of one sector, degrees `0..=kmax`.
pub struct SectorComplex {
    pub sector: usize,
    pub dims: Vec<usize>,
    /// `b[k]: C_k -> C_{k-1}` for `k >= 1` (`b[0]` is empty).
    pub b: Vec<SparseMatrix>,
    /// `bb[k]: C_k -> C_{k+1}` for `k < kmax`.
    pub big_b: Vec<SparseMatrix>,
}

impl SectorComplex {
    pub fn build(
        ea: &EquivariantAlgebra,
        g: usize,
        kmax: usize,
        mode: Mode,
    ) -> Result<SectorComplex> {
        let ops = SectorOperators::new(ea, g, mode)?;
        let cent = ea.group().centralizer(g);
        let bases: Vec<InvariantBasis> = (0..=kmax)
            .map(|k| InvariantBasis::build(&ops, &cent, ops.basis(k)))
            .collect();
        let dims: Vec<usize> = bases.iter().map(|b| b.len()).collect();
        let mut b = vec![SparseMatrix::zeros(0, dims[0])];
        let mut big_b = Vec::new();
        for k in 0..=kmax {
            if k >= 1 {
                let cols = bases[k]
                    .vectors
                    .iter()
                    .map(|v| bases[k - 1].coordinates(&ops.b(&v.iter().cloned().collect())))
                    .collect::<Result<Vec<_>>>()?;
                b.push(SparseMatrix::from_columns(dims[k - 1], cols)?);
            }
            if k < kmax {
                let cols = bases[k]
                    .vectors
                    .iter()
                    .map(|v| bases[k + 1].coordinates(&ops.big_b(&v.iter().cloned().collect())))
                    .collect::<Result<Vec<_>>>()?;
                big_b.push(SparseMatrix::from_columns(dims[k + 1], cols)?);
            }
        }
        Ok(SectorComplex {
            sector: g,
            dims,
            b,
            big_b,
        })
    }

    /// Checks `b^2 = 0`, `B^2 = 0`, `bB + Bb = 0` as matrix identities within the built range.
    pub fn identity_failures(&self) -> Vec<String> {
        let kmax = self.dims.len() - 1;
        let mut out = Vec::new();
        for k in 2..=kmax {
            if !self.b[k - 1].mul(&self.b[k]).unwrap().is_zero() {
                out.push(format!("b^2 != 0 on degree {k}"));
            }
        }
        for k in 0..kmax.saturating_sub(1) {
            if !self.big_b[k + 1].mul(&self.big_b[k]).unwrap().is_zero() {
                out.push(format!("B^2 != 0 on degree {k}"));
            }
        }
        for k in 0..kmax {
            // C_k -> C_k: b_{k+1} B_k + B_{k-1} b_k.
            let mut m = self.b[k + 1].mul(&self.big_b[k]).unwrap();
            if k >= 1 {
                m = m.add(&self.big_b[k - 1].mul(&self.b[k]).unwrap()).unwrap();
            }
            if !m.is_zero() {
                out.push(format!("bB + Bb != 0 on degree {k}"));
            }
        }
        out
    }

    /// `(even, odd)` dimensions of the truncation at `kt <= kmax`: the quotient of the total
    /// complex by `ker(b_kt)` plus all degrees above `kt`.
    pub fn truncated_dims(&self, kt: usize) -> Result<(usize, usize)> {
        let kmax = self.dims.len() - 1;
        if kt > kmax || kt == 0 {
            return Err(Error::InvalidStructure(format!(
                "truncation {kt} outside 1..={kmax}"
            )));
        }
        // Basis of W = im b_kt inside C_{kt-1}.
        let piv = self.image_pivots(kt)?;
        let w_cols: Vec<SparseVec> = piv.iter().map(|&j| self.b[kt].column(j).to_vec()).collect();
        let wdim = w_cols.len();
        // Blocks: C_0..C_{kt-1} then W.
        let mut block_dim: Vec<usize> = self.dims[..kt].to_vec();
        block_dim.push(self.dims[kt - 1]); // W in ambient coordinates of C_{kt-1}
        let parity = |blk: usize| -> usize {
            if blk == kt {
                kt % 2
            } else {
                blk % 2
            }
        };
        let mut offset = vec![[0usize; 2]; kt + 1];
        let mut total = [0usize; 2];
        for blk in 0..=kt {
            let p = parity(blk);
            offset[blk][p] = total[p];
            total[p] += block_dim[blk];
        }
        let mut cols: [Vec<SparseVec>; 2] = [Vec::new(), Vec::new()];
        let mut side_dim = [0usize; 2];
        for k in 0..kt {
            let p = k % 2;
            side_dim[p] += self.dims[k];
            for j in 0..self.dims[k] {
                let mut col: Vec<(usize, Scalar)> = Vec::new();
                if k >= 1 {
                    for (r, v) in self.b[k].column(j) {
                        col.push((offset[k - 1][1 - p] + r, v.clone()));
                    }
                }
                if k + 1 < kt {
                    for (r, v) in self.big_b[k].column(j) {
                        col.push((offset[k + 1][1 - p] + r, v.clone()));
                    }
                } else {
                    let img = self.b[kt].apply(self.big_b[k].column(j));
                    for (r, v) in img {
                        col.push((offset[kt][1 - p] + r, v));
                    }
                }
                col.sort_by_key(|e| e.0);
                cols[p].push(col);
            }
        }
        let pw = kt % 2;
        side_dim[pw] += wdim;
        for w in w_cols {
            cols[pw].push(
                w.iter()
                    .map(|(r, v)| (offset[kt - 1][1 - pw] + r, v.clone()))
                    .collect(),
            );
        }
        let (dim_e, dim_o) = (side_dim[0], side_dim[1]);
        let ord = common_order(cols.iter().flatten().flatten().map(|(_, v)| v));
        let field = PrimeField::for_order(ord);
        let reduced: Option<Vec<Vec<Vec<(usize, u64)>>>> = cols
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|c| {
                        c.iter()
                            .map(|(i, v)| field.image(v).map(|x| (*i, x)))
                            .filter(|e| e.as_ref().is_none_or(|(_, x)| *x != 0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        if let Some(red) = reduced {
            // Modular ranks bound the homology from above; the Euler characteristic is exact.
            let r0 = field.rank(total[1], &red[0]);
            let r1 = field.rank(total[0], &red[1]);
            let (he, ho) = (dim_e - r0 - r1, dim_o - r0 - r1);
            if ho == 0 {
                return Ok((dim_e - dim_o, 0));
            }
            if he == 0 {
                return Ok((0, dim_o - dim_e));
            }
        }
        let rank = |p: usize| -> usize {
            let mut red = ColumnReducer::new(total[1 - p]);
            for c in &cols[p] {
                red.insert(c.clone());
            }
            red.rank()
        };
        let (r0, r1) = (rank(0), rank(1));
        Ok((dim_e - r0 - r1, dim_o - r1 - r0))
    }

    /// Columns of `b_kt` forming a basis of its image. A modular rank profile is accepted
    /// when it meets the bound `rank b_kt <= dim C_{kt-1} - rank b_{kt-1}`.
    fn image_pivots(&self, kt: usize) -> Result<Vec<usize>> {
        let ord = common_order(
            (0..self.b[kt].cols())
                .flat_map(|j| self.b[kt].column(j))
                .chain((0..self.b[kt - 1].cols()).flat_map(|j| self.b[kt - 1].column(j)))
                .map(|(_, v)| v),
        );
        let field = PrimeField::for_order(ord);
        if let (Some(top), Some(below)) = (
            field.reduce_matrix(&self.b[kt]),
            field.reduce_matrix(&self.b[kt - 1]),
        ) {
            let piv = field.rank_profile(self.b[kt].rows(), &top);
            let below_rank = field.rank(self.b[kt - 1].rows(), &below);
            if piv.len() + below_rank == self.dims[kt - 1] {
                let nonzero = self.b[kt - 1].mul(&self.b[kt])?.nnz();
                if nonzero != 0 {
                    return Err(Error::NotAComplex { nonzero });
                }
                return Ok(piv);
            }
        }
        Ok(self.b[kt].rank_profile())
    }
}

/// Periodic dimensions of one sector.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SectorHp {
    pub sector: String,
    pub even: usize,
    pub odd: usize,
    pub previous: (usize, usize),
    pub chain_dims: Vec<usize>,
}

/// Result of [`periodic_dims`].
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HpResult {
    pub even: usize,
    pub odd: usize,
    pub kmax: usize,
    /// Dimensions at `kmax - 2` agree with those at `kmax`.
    pub stable: bool,
    pub sectors: Vec<SectorHp>,
}

/// `dim HP^G_even, HP^G_odd` via sectors over conjugacy-class representatives.
pub fn periodic_dims(ea: &EquivariantAlgebra, kmax: usize, mode: Mode) -> Result<HpResult> {
    if kmax < 3 {
        return Err(Error::InvalidStructure("kmax must be at least 3".into()));
    }
    let mut sectors = Vec::new();
    let (mut even, mut odd, mut stable) = (0, 0, true);
    for g in ea.group().class_representatives() {
        let sc = SectorComplex::build(ea, g, kmax, mode)?;
        let (e, o) = sc.truncated_dims(kmax)?;
        let prev = sc.truncated_dims(kmax - 2)?;
        stable &= prev == (e, o);
        even += e;
        odd += o;
        sectors.push(SectorHp {
            sector: ea.group().name(g).to_string(),
            even: e,
            odd: o,
            previous: prev,
            chain_dims: sc.dims,
        });
    }
    Ok(HpResult {
        even,
        odd,
        kmax,
        stable,
        sectors,
    })
}

/// Crossed product `A x| G` of a groupoid algebra with a monomial action induced by
/// groupoid automorphisms: basis `a (x) k`, product `(a k)(b l) = a (k.b) (x) kl`.
pub fn crossed_product(ea: &EquivariantAlgebra) -> Result<AlgebraData> {
    let a = &ea.algebra;
    let gs = a
        .groupoid
        .as_ref()
        .ok_or_else(|| Error::Unsupported("crossed product needs a groupoid algebra".into()))?;
    let grp = ea.group();
    let n = grp.order();
    let d = a.dim;
    let dim = d * n;
    let mut mult = vec![Vec::new(); dim * dim];
    for i in 0..d {
        for k in 0..n {
            for j in 0..d {
                let (pj, sj) = ea.action.apply(k, j);
                for l in 0..n {
                    let kl = grp.mul(k, l);
                    mult[(i * n + k) * dim + j * n + l] = a
                        .structure(i, pj)
                        .iter()
                        .map(|(t, v)| (t * n + kl, v * &sj))
                        .collect();
                }
            }
        }
    }
    let unit = a.unit.iter().map(|(u, v)| (u * n, v.clone())).collect();
    let mut obj_of_unit: HashMap<usize, usize> = HashMap::new();
    for i in 0..d {
        if gs.is_unit[i] {
            obj_of_unit.insert(gs.source[i], i);
        }
    }
    // Object permutation of k: the unit basis element of x goes to that of pi_k(x).
    let obj_perm =
        |k: usize, x: usize| -> usize { gs.source[ea.action.apply(k, obj_of_unit[&x]).0] };
    let mut source = Vec::with_capacity(dim);
    let mut target = Vec::with_capacity(dim);
    let mut is_unit = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    for i in 0..d {
        for k in 0..n {
            target.push(gs.target[i]);
            let kinv = grp.inv(k);
            source.push(obj_perm(kinv, gs.source[i]));
            is_unit.push(gs.is_unit[i] && k == 0);
            labels.push(format!("{}#{}", a.labels[i], grp.name(k)));
        }
    }
    let out = AlgebraData {
        dim,
        mult,
        unit,
        labels,
        groupoid: Some(GroupoidStructure {
            source,
            target,
            is_unit,
        }),
    };
    out.check_associative()?;
    Ok(out)
}

/// Group algebra of a finite group twisted by nothing: the crossed product of the field.
pub fn group_algebra(g: &FiniteGroup) -> AlgebraData {
    let f = AlgebraData::field();
    let action = MonomialAction::trivial(g.clone(), &f);
    let ea = EquivariantAlgebra::new(f, action);
    crossed_product(&ea).expect("group algebra")
}

/// Degree-`k` chain count in a sector, useful for sizing.
pub fn chain_dimension(ea: &EquivariantAlgebra, g: usize, k: usize, mode: Mode) -> Result<usize> {
    let ops = SectorOperators::new(ea, g, mode)?;
    Ok(ops.basis(k).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::ExtensionCocycle;
    use crate::groupoid::FiniteGroupoid;

    fn z2_sign() -> EquivariantAlgebra {
        let a = group_algebra(&FiniteGroup::cyclic(2));
        let g = FiniteGroup::cyclic(2);
        let perms = vec![vec![0, 1], vec![0, 1]];
        let scalars = vec![
            vec![Scalar::one(), Scalar::one()],
            vec![Scalar::one(), Scalar::from_int(-1)],
        ];
        let act = MonomialAction::new(g, &a, perms, scalars).unwrap();
        EquivariantAlgebra::new(a, act)
    }

    #[test]
    fn field_and_group_algebra() {
        let f = EquivariantAlgebra::plain(AlgebraData::field());
        let r = periodic_dims(&f, 4, Mode::Normalized).unwrap();
        assert_eq!((r.even, r.odd), (1, 0));
        let r = periodic_dims(&f, 4, Mode::Unitized).unwrap();
        assert_eq!((r.even, r.odd), (1, 0));
        let z2 = EquivariantAlgebra::plain(group_algebra(&FiniteGroup::cyclic(2)));
        for mode in [Mode::Normalized, Mode::Unitized] {
            let r = periodic_dims(&z2, 5, mode).unwrap();
            assert_eq!((r.even, r.odd, r.stable), (2, 0, true), "{mode:?}");
        }
    }

    #[test]
    fn identities_hold_and_sign_flip_is_caught() {
        let ea = z2_sign();
        for g in 0..2 {
            for mode in [Mode::Normalized, Mode::Unitized] {
                let sc = SectorComplex::build(&ea, g, 4, mode).unwrap();
                assert!(
                    sc.identity_failures().is_empty(),
                    "{:?}",
                    sc.identity_failures()
                );
            }
        }
        let mut ops = SectorOperators::new(&ea, 1, Mode::Unitized).unwrap();
        ops.flip_wrap_sign = true;
        let bad = ops.basis(2).into_iter().any(|k| {
            let c: Chain = [(k, Scalar::one())].into_iter().collect();
            !ops.b(&ops.b(&c)).is_empty()
        });
        assert!(bad);
    }

    #[test]
    fn pair_groupoid_is_morita_trivial() {
        let h = FiniteGroupoid::pair(2);
        let t = TwistedAlgebra::with_counting(ExtensionCocycle::trivial(&h)).unwrap();
        let ea = EquivariantAlgebra::plain(AlgebraData::from_twisted(&t));
        let r = periodic_dims(&ea, 5, Mode::Normalized).unwrap();
        assert_eq!((r.even, r.odd), (1, 0));
        let r = periodic_dims(&ea, 4, Mode::Unitized).unwrap();
        assert_eq!((r.even, r.odd), (1, 0));
    }

    #[test]
    fn hochschild_boundary_examples() {
        let h = FiniteGroupoid::pair(2);
        let t = TwistedAlgebra::with_counting(ExtensionCocycle::trivial(&h)).unwrap();
        let ea = EquivariantAlgebra::plain(AlgebraData::from_twisted(&t));
        let mut c = CyclicChain::new(1);
        c.add(0, &[1, 2], Scalar::one()).unwrap();
        let bc = operator_b(&ea, &c, Mode::Unitized).unwrap();
        let mut want = CyclicChain::new(0);
        want.add(0, &[0], Scalar::one()).unwrap();
        want.add(0, &[3], Scalar::from_int(-1)).unwrap();
        assert_eq!(bc, want);

        // Z/2 acting trivially on its group algebra: s (x) s is a cycle.
        let a = group_algebra(&FiniteGroup::cyclic(2));
        let triv = EquivariantAlgebra::new(
            a.clone(),
            MonomialAction::trivial(FiniteGroup::cyclic(2), &a),
        );
        let mut c = CyclicChain::new(1);
        c.add(1, &[1, 1], Scalar::one()).unwrap();
        assert!(operator_b(&triv, &c, Mode::Unitized).unwrap().is_zero());
        // With s -> -s the wrap-around term changes sign: b = 2e.
        let bc = operator_b(&z2_sign(), &c, Mode::Unitized).unwrap();
        let mut want = CyclicChain::new(0);
        want.add(1, &[0], Scalar::from_int(2)).unwrap();
        assert_eq!(bc, want);

        let mut c = CyclicChain::new(0);
        c.add(1, &[1], Scalar::one()).unwrap();
        let bc = operator_big_b(&triv, &c, Mode::Unitized).unwrap();
        let mut want = CyclicChain::new(1);
        want.add(1, &[UNIT, 1], Scalar::one()).unwrap();
        assert_eq!(bc, want);
        assert!(operator_big_b(&triv, &bc, Mode::Unitized)
            .unwrap()
            .is_zero());
        assert!(c.add(0, &[0, 1], Scalar::one()).is_err());
    }

    #[test]
    fn averaging_projects_onto_invariants() {
        let ea = z2_sign();
        let mut c = CyclicChain::new(1);
        c.add(0, &[1, 0], Scalar::one()).unwrap();
        assert!(!c.is_invariant(&ea));
        let avg = c.average(&ea);
        assert!(avg.is_zero());
        assert!(operator_big_b(&ea, &c, Mode::Unitized).is_err());
        let mut c = CyclicChain::new(1);
        c.add(1, &[1, 1], Scalar::one()).unwrap();
        assert_eq!(c.average(&ea), c);
    }

    #[test]
    fn pullback_is_morita_invariant() {
        let k4 = FiniteGroupoid::from_group(&FiniteGroup::klein_four());
        let theta = crate::extension::klein_four_cocycle(&k4);
        let base = EquivariantAlgebra::plain(AlgebraData::from_twisted(
            &TwistedAlgebra::with_counting(theta.clone()).unwrap(),
        ));
        let pb = crate::groupoid::pullback_groupoid(&k4, &[0, 0]).unwrap();
        let theta2 = theta.pullback(&pb.groupoid, &pb.arrow_map);
        let up = EquivariantAlgebra::plain(AlgebraData::from_twisted(
            &TwistedAlgebra::with_counting(theta2).unwrap(),
        ));
        assert_eq!(up.algebra.dim(), 16);
        let r1 = periodic_dims(&base, 4, Mode::Normalized).unwrap();
        let r2 = periodic_dims(&up, 4, Mode::Normalized).unwrap();
        assert_eq!((r1.even, r1.odd), (1, 0));
        assert_eq!((r1.even, r1.odd), (r2.even, r2.odd));
    }

    #[test]
    fn equivariant_sign_action() {
        let r = periodic_dims(&z2_sign(), 5, Mode::Normalized).unwrap();
        let u = periodic_dims(&z2_sign(), 5, Mode::Unitized).unwrap();
        assert_eq!((r.even, r.odd), (u.even, u.odd));
    }
}
