//! Finite-dimensional models of differential forms and truncated Cartan complexes.
//!
//! A model is a graded-commutative algebra with a differential `d` and contractions
//! `iota_1..iota_r` (one per torus coordinate). The Cartan complex in a sector is
//! `Q[u_1..u_r]/(deg > N) (x) model` with
//!
//! ```text
//! D = d + sum_i u_i iota_i + a - eta_hat
//! ```
//!
//! where `a` is a flat connection form and `eta_hat` an equivariantly closed odd element,
//! both acting by left multiplication. Total degree is `2 |p| + deg(m)`.

use crate::error::{Error, Result};
use crate::groupoid::GroupAction;
use crate::linalg::{axpy, collect_sparse, ColumnReducer, SparseMatrix, SparseVec};
use crate::scalar::{Rational, Scalar};
use crate::transgression::LineFamily;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

/// Exponents of `u_1..u_r`.
pub type PolyKey = Vec<u16>;

/// Graded-commutative algebra with differential and contractions, by structure constants.
#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    labels: Vec<String>,
    degrees: Vec<i32>,
    mult: Vec<SparseVec>,
    unit: SparseVec,
    d: SparseMatrix,
    iota: Vec<SparseMatrix>,
}

fn sign(odd: bool) -> Scalar {
    if odd {
        Scalar::from_int(-1)
    } else {
        Scalar::one()
    }
}

fn scale_vec(v: &[(usize, Scalar)], c: &Scalar) -> SparseVec {
    if c.is_zero() {
        return Vec::new();
    }
    v.iter().map(|(i, x)| (*i, x * c)).collect()
}

impl GradedAlgebra {
    pub fn new(
        labels: Vec<String>,
        degrees: Vec<i32>,
        mult: Vec<SparseVec>,
        unit: SparseVec,
        d: SparseMatrix,
        iota: Vec<SparseMatrix>,
    ) -> Result<GradedAlgebra> {
        let n = degrees.len();
        if labels.len() != n || mult.len() != n * n || d.rows() != n || d.cols() != n {
            return Err(Error::DimensionMismatch(
                "graded algebra tables have inconsistent sizes".into(),
            ));
        }
        if iota.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::DimensionMismatch(
                "contraction has the wrong size".into(),
            ));
        }
        Ok(GradedAlgebra {
            labels,
            degrees,
            mult,
            unit,
            d,
            iota,
        })
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Number of contractions.
    pub fn rank(&self) -> usize {
        self.iota.len()
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.degrees[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn unit(&self) -> &SparseVec {
        &self.unit
    }

    pub fn d(&self) -> &SparseMatrix {
        &self.d
    }

    pub fn iota(&self, i: usize) -> &SparseMatrix {
        &self.iota[i]
    }

    pub fn mul_basis(&self, i: usize, j: usize) -> &SparseVec {
        &self.mult[i * self.dim() + j]
    }

    pub fn mul(&self, x: &[(usize, Scalar)], y: &[(usize, Scalar)]) -> SparseVec {
        let mut terms = Vec::new();
        for (i, a) in x {
            for (j, b) in y {
                let c = a * b;
                terms.extend(self.mul_basis(*i, *j).iter().map(|(k, v)| (*k, v * &c)));
            }
        }
        collect_sparse(terms)
    }

    /// Matrix of left multiplication by `x`.
    pub fn left_mult(&self, x: &[(usize, Scalar)]) -> SparseMatrix {
        let cols = (0..self.dim())
            .map(|j| self.mul(x, &[(j, Scalar::one())]))
            .collect();
        SparseMatrix::from_columns(self.dim(), cols).expect("square")
    }

    /// Degree of a homogeneous element, `None` for zero or mixed elements.
    pub fn homogeneous_degree(&self, x: &[(usize, Scalar)]) -> Option<i32> {
        let mut it = x.iter().map(|(i, _)| self.degrees[*i]);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Overwrites one entry of `d`; used to plant defects in negative controls.
    pub fn set_d_entry(&mut self, row: usize, col: usize, v: Scalar) {
        let mut t: Vec<(usize, usize, Scalar)> = Vec::new();
        for j in 0..self.d.cols() {
            for (i, x) in self.d.column(j) {
                if (*i, j) != (row, col) {
                    t.push((*i, j, x.clone()));
                }
            }
        }
        if !v.is_zero() {
            t.push((row, col, v));
        }
        self.d = SparseMatrix::from_triplets(self.dim(), self.dim(), t).expect("no duplicates");
    }

    /// All violated axioms, each naming the basis elements involved.
    pub fn validate(&self) -> Vec<String> {
        let n = self.dim();
        let mut out = Vec::new();
        let e = |i: usize| -> SparseVec { vec![(i, Scalar::one())] };
        for i in 0..n {
            if self.mul(&self.unit, &e(i)) != e(i) || self.mul(&e(i), &self.unit) != e(i) {
                out.push(format!("unit law fails on {}", self.labels[i]));
            }
            for j in 0..n {
                let ab = self.mul_basis(i, j);
                let s = sign(self.degrees[i] * self.degrees[j] % 2 != 0);
                if *ab != scale_vec(self.mul_basis(j, i), &s) {
                    out.push(format!(
                        "graded commutativity fails on ({}, {})",
                        self.labels[i], self.labels[j]
                    ));
                }
                if ab
                    .iter()
                    .any(|(k, _)| self.degrees[*k] != self.degrees[i] + self.degrees[j])
                {
                    out.push(format!(
                        "product ({}, {}) is not homogeneous",
                        self.labels[i], self.labels[j]
                    ));
                }
                for k in 0..n {
                    if self.mul(ab, &e(k)) != self.mul(&e(i), self.mul_basis(j, k)) {
                        out.push(format!(
                            "associativity fails on ({}, {}, {})",
                            self.labels[i], self.labels[j], self.labels[k]
                        ));
                    }
                }
            }
        }
        let mut ops: Vec<(String, &SparseMatrix, i32)> = vec![("d".into(), &self.d, 1)];
        for (k, m) in self.iota.iter().enumerate() {
            ops.push((format!("iota_{}", k + 1), m, -1));
        }
        for (name, m, shift) in &ops {
            for j in 0..n {
                if m.column(j)
                    .iter()
                    .any(|(i, _)| self.degrees[*i] != self.degrees[j] + shift)
                {
                    out.push(format!(
                        "{name} does not shift the degree of {} by {shift}",
                        self.labels[j]
                    ));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let lhs = m.apply(self.mul_basis(i, j));
                    let t1 = self.mul(m.column(i), &e(j));
                    let t2 = self.mul(&e(i), m.column(j));
                    let rhs = axpy(&t1, &sign(self.degrees[i] % 2 != 0), &t2);
                    if lhs != rhs {
                        out.push(format!(
                            "Leibniz rule for {name} fails on ({}, {})",
                            self.labels[i], self.labels[j]
                        ));
                    }
                }
            }
        }
        if !self.d.mul(&self.d).expect("square").is_zero() {
            out.push("d^2 != 0".into());
        }
        for a in 0..self.iota.len() {
            for b in a..self.iota.len() {
                let m = self.iota[a]
                    .mul(&self.iota[b])
                    .unwrap()
                    .add(&self.iota[b].mul(&self.iota[a]).unwrap())
                    .unwrap();
                if !m.is_zero() {
                    out.push(format!(
                        "iota_{} iota_{} + iota_{} iota_{} != 0",
                        a + 1,
                        b + 1,
                        b + 1,
                        a + 1
                    ));
                }
            }
            let m = self
                .d
                .mul(&self.iota[a])
                .unwrap()
                .add(&self.iota[a].mul(&self.d).unwrap())
                .unwrap();
            if !m.is_zero() {
                out.push(format!("d iota_{} + iota_{} d != 0", a + 1, a + 1));
            }
        }
        out
    }

    /// `Fun({0..n}) (x) self`, basis `(y, m)` at index `y * dim + m`.
    pub fn copies(&self, points: &[String]) -> GradedAlgebra {
        let n = points.len();
        let dm = self.dim();
        let dim = n * dm;
        let mut mult = vec![Vec::new(); dim * dim];
        for y in 0..n {
            for i in 0..dm {
                for j in 0..dm {
                    mult[(y * dm + i) * dim + y * dm + j] = self
                        .mul_basis(i, j)
                        .iter()
                        .map(|(k, v)| (y * dm + k, v.clone()))
                        .collect();
                }
            }
        }
        let block = |m: &SparseMatrix| -> SparseMatrix {
            let cols = (0..dim)
                .map(|c| {
                    m.column(c % dm)
                        .iter()
                        .map(|(i, v)| ((c / dm) * dm + i, v.clone()))
                        .collect()
                })
                .collect();
            SparseMatrix::from_columns(dim, cols).expect("block diagonal")
        };
        GradedAlgebra {
            labels: (0..dim)
                .map(|c| format!("[{}]{}", points[c / dm], self.labels[c % dm]))
                .collect(),
            degrees: (0..dim).map(|c| self.degrees[c % dm]).collect(),
            mult,
            unit: (0..n)
                .flat_map(|y| self.unit.iter().map(move |(k, v)| (y * dm + k, v.clone())))
                .collect(),
            d: block(&self.d),
            iota: self.iota.iter().map(block).collect(),
        }
    }

    /// Violations of `m: self -> target` being a unital algebra map commuting with `d` and `iota`.
    pub fn check_morphism(&self, target: &GradedAlgebra, m: &SparseMatrix) -> Vec<String> {
        let mut out = Vec::new();
        if m.rows() != target.dim() || m.cols() != self.dim() || self.rank() != target.rank() {
            return vec!["morphism has the wrong shape".into()];
        }
        if m.apply(&self.unit) != target.unit {
            out.push("unit is not preserved".into());
        }
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if m.apply(self.mul_basis(i, j)) != target.mul(m.column(i), m.column(j)) {
                    out.push(format!(
                        "product ({}, {}) is not preserved",
                        self.labels[i], self.labels[j]
                    ));
                }
            }
        }
        if m.mul(&self.d).unwrap() != target.d.mul(m).unwrap() {
            out.push("d is not preserved".into());
        }
        for k in 0..self.rank() {
            if m.mul(&self.iota[k]).unwrap() != target.iota[k].mul(m).unwrap() {
                out.push(format!("iota_{} is not preserved", k + 1));
            }
        }
        out
    }
}

/// Generator of a [`CDGAModel`].
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct Generator {
    pub name: String,
    pub degree: i32,
    /// For even generators: the smallest power that vanishes.
    #[serde(default)]
    pub nilpotency: Option<u32>,
}

/// Free graded-commutative algebra on generators modulo monomial relations.
#[derive(Clone, Debug)]
pub struct CDGAModel {
    generators: Vec<Generator>,
    relations: Vec<Vec<u32>>,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    d_gen: Vec<SparseVec>,
    iota_gen: Vec<Vec<SparseVec>>,
    alg: GradedAlgebra,
}

fn is_poly_var(name: &str) -> Option<usize> {
    if name == "u" {
        return Some(0);
    }
    let rest = name.strip_prefix('u')?;
    let k: usize = rest.parse().ok()?;
    (k >= 1).then_some(k - 1)
}

impl CDGAModel {
    /// Builds the monomial basis; `d` and the contractions start at zero.
    pub fn new(generators: Vec<Generator>, relations: &[&str], r: usize) -> Result<CDGAModel> {
        for g in &generators {
            if is_poly_var(&g.name).is_some()
                || g.name.is_empty()
                || !g.name.chars().all(|c| c.is_alphanumeric() || c == '_')
            {
                return Err(Error::Parse(format!("invalid generator name {:?}", g.name)));
            }
            if g.degree < 0 || (g.degree == 0 && g.nilpotency.is_none()) {
                return Err(Error::InvalidStructure(format!(
                    "generator {} needs positive degree or a nilpotency",
                    g.name
                )));
            }
        }
        let names: HashMap<&str, usize> = generators
            .iter()
            .enumerate()
            .map(|(i, g)| (g.name.as_str(), i))
            .collect();
        if names.len() != generators.len() {
            return Err(Error::InvalidStructure("duplicate generator names".into()));
        }
        let k = generators.len();
        let mut relations_exp = Vec::new();
        for r in relations {
            let mut e = vec![0u32; k];
            for f in r.split('*') {
                let (name, pow) = match f.trim().split_once('^') {
                    Some((a, b)) => (
                        a.trim(),
                        b.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad power in {r}")))?,
                    ),
                    None => (f.trim(), 1),
                };
                let i = *names.get(name).ok_or_else(|| {
                    Error::Parse(format!("unknown generator {name} in relation {r}"))
                })?;
                e[i] += pow;
            }
            relations_exp.push(e);
        }
        let mut caps = Vec::with_capacity(k);
        for (i, g) in generators.iter().enumerate() {
            let cap = if g.degree % 2 != 0 {
                2
            } else if let Some(n) = g.nilpotency {
                n
            } else {
                relations_exp
                    .iter()
                    .filter(|e| e.iter().enumerate().all(|(j, &x)| (j == i) == (x > 0)))
                    .map(|e| e[i])
                    .min()
                    .ok_or_else(|| {
                        Error::InvalidStructure(format!(
                            "even generator {} needs a nilpotency",
                            g.name
                        ))
                    })?
            };
            caps.push(cap);
        }
        let mut basis: Vec<Vec<u32>> = vec![Vec::new()];
        for i in 0..k {
            let mut next = Vec::new();
            for b in &basis {
                for p in 0..caps[i] {
                    let mut e = b.clone();
                    e.push(p);
                    next.push(e);
                }
            }
            basis = next;
        }
        let divisible = |e: &[u32], r: &[u32]| e.iter().zip(r).all(|(a, b)| a >= b);
        basis.retain(|e| !relations_exp.iter().any(|r| divisible(e, r)));
        let deg = |e: &[u32]| -> i32 {
            e.iter()
                .zip(&generators)
                .map(|(&p, g)| p as i32 * g.degree)
                .sum()
        };
        basis.sort_by(|a, b| deg(a).cmp(&deg(b)).then_with(|| b.cmp(a)));
        let index: HashMap<Vec<u32>, usize> = basis
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let n = basis.len();
        let mut mult = vec![Vec::new(); n * n];
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let e: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&t) = index.get(&e) {
                    if e.iter()
                        .enumerate()
                        .any(|(q, &x)| generators[q].degree % 2 != 0 && x > 1)
                    {
                        continue;
                    }
                    // Moving each odd generator of b past the odd generators of a with larger index.
                    let mut swaps = 0;
                    for q in 0..k {
                        if generators[q].degree % 2 != 0 && b[q] == 1 {
                            swaps += (q + 1..k)
                                .filter(|&p| generators[p].degree % 2 != 0 && a[p] == 1)
                                .count();
                        }
                    }
                    mult[i * n + j] = vec![(t, sign(swaps % 2 == 1))];
                }
            }
        }
        let labels = basis
            .iter()
            .map(|e| {
                let parts: Vec<String> = e
                    .iter()
                    .zip(&generators)
                    .filter(|(p, _)| **p > 0)
                    .map(|(p, g)| {
                        if *p == 1 {
                            g.name.clone()
                        } else {
                            format!("{}^{}", g.name, p)
                        }
                    })
                    .collect();
                if parts.is_empty() {
                    "1".to_string()
                } else {
                    parts.join("*")
                }
            })
            .collect();
        let alg = GradedAlgebra {
            labels,
            degrees: basis.iter().map(|e| deg(e)).collect(),
            mult,
            unit: vec![(index[&vec![0; k]], Scalar::one())],
            d: SparseMatrix::zeros(n, n),
            iota: vec![SparseMatrix::zeros(n, n); r],
        };
        Ok(CDGAModel {
            d_gen: vec![Vec::new(); k],
            iota_gen: vec![vec![Vec::new(); k]; r],
            generators,
            relations: relations_exp,
            basis,
            index,
            alg,
        })
    }

    /// The model of a point.
    pub fn point(r: usize) -> CDGAModel {
        CDGAModel::new(Vec::new(), &[], r).expect("point model")
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn algebra(&self) -> &GradedAlgebra {
        &self.alg
    }

    /// Mutable access for planting defects.
    pub fn algebra_mut(&mut self) -> &mut GradedAlgebra {
        &mut self.alg
    }

    pub fn validate(&self) -> Vec<String> {
        self.alg.validate()
    }

    fn generator_index(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::Parse(format!("unknown generator {name}")))
    }

    pub fn set_differential(&mut self, gen: &str, value: &str) -> Result<()> {
        let i = self.generator_index(gen)?;
        self.d_gen[i] = self.parse(value)?;
        self.rebuild();
        Ok(())
    }

    /// Sets `iota_k(gen)` for `k` counted from 0.
    pub fn set_contraction(&mut self, k: usize, gen: &str, value: &str) -> Result<()> {
        let i = self.generator_index(gen)?;
        if k >= self.iota_gen.len() {
            return Err(Error::DimensionMismatch(format!(
                "contraction {} of {}",
                k + 1,
                self.iota_gen.len()
            )));
        }
        self.iota_gen[k][i] = self.parse(value)?;
        self.rebuild();
        Ok(())
    }

    /// Extends generator values to the basis by the Leibniz rule for odd derivations.
    fn derivation(&self, on_gens: &[SparseVec]) -> SparseMatrix {
        let n = self.basis.len();
        let gen_elem = |q: usize| -> SparseVec {
            let mut e = vec![0u32; self.generators.len()];
            e[q] = 1;
            vec![(self.index[&e], Scalar::one())]
        };
        let cols = self
            .basis
            .iter()
            .map(|e| {
                let factors: Vec<usize> = e
                    .iter()
                    .enumerate()
                    .flat_map(|(q, &p)| std::iter::repeat_n(q, p as usize))
                    .collect();
                let mut acc: SparseVec = Vec::new();
                let mut prefix_deg = 0;
                for j in 0..factors.len() {
                    let mut term: SparseVec = self.alg.unit.clone();
                    for (l, &q) in factors.iter().enumerate() {
                        let f = if l == j {
                            on_gens[q].clone()
                        } else {
                            gen_elem(q)
                        };
                        term = self.alg.mul(&term, &f);
                    }
                    acc = axpy(&acc, &sign(prefix_deg % 2 != 0), &term);
                    prefix_deg += self.generators[factors[j]].degree;
                }
                acc
            })
            .collect();
        SparseMatrix::from_columns(n, cols).expect("square")
    }

    fn rebuild(&mut self) {
        self.alg.d = self.derivation(&self.d_gen);
        self.alg.iota = self.iota_gen.iter().map(|g| self.derivation(g)).collect();
    }

    /// Parses `2*x1*y2 - 1/2*y2^2 + 1`.
    pub fn parse(&self, expr: &str) -> Result<SparseVec> {
        let e = self.parse_equivariant(expr)?;
        if e.terms.keys().any(|(p, _)| p.iter().any(|&x| x > 0)) {
            return Err(Error::Parse(format!(
                "{expr} contains equivariant variables"
            )));
        }
        Ok(e.terms.into_iter().map(|((_, m), v)| (m, v)).collect())
    }

    /// Parses an element of `Q[u_1..u_r] (x) model`; `u` is `u1`.
    pub fn parse_equivariant(&self, expr: &str) -> Result<EqElement> {
        let r = self.alg.rank();
        let mut out = EqElement::zero(r);
        let s = expr.replace(' ', "");
        if s.is_empty() || s == "0" {
            return Ok(out);
        }
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (pos, ch) in s.chars().enumerate() {
            if (ch == '+' || ch == '-') && pos > 0 && !cur.ends_with('^') && !cur.is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else if (ch == '+' || ch == '-') && cur.is_empty() {
                neg ^= ch == '-';
            } else {
                cur.push(ch);
            }
        }
        terms.push((neg, cur));
        for (neg, t) in terms {
            let mut coeff = Rational::from_int(if neg { -1 } else { 1 });
            let mut poly = vec![0u16; r];
            let mut elem: SparseVec = self.alg.unit.clone();
            for f in t.split('*') {
                if f.is_empty() {
                    return Err(Error::Parse(format!("empty factor in {expr}")));
                }
                if f.chars().next().unwrap().is_ascii_digit() {
                    let q = Rational::parse(f)
                        .ok_or_else(|| Error::Parse(format!("bad coefficient {f}")))?;
                    coeff = &coeff * &q;
                    continue;
                }
                let (name, pow) = match f.split_once('^') {
                    Some((a, b)) => (
                        a,
                        b.parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad power in {f}")))?,
                    ),
                    None => (f, 1),
                };
                if let Some(k) = is_poly_var(name) {
                    if k >= r {
                        return Err(Error::Parse(format!("{name} exceeds the torus rank {r}")));
                    }
                    poly[k] += pow as u16;
                    continue;
                }
                let q = self.generator_index(name)?;
                let mut e = vec![0u32; self.generators.len()];
                e[q] = 1;
                let g = vec![(self.index[&e], Scalar::one())];
                for _ in 0..pow {
                    elem = self.alg.mul(&elem, &g);
                }
            }
            let c = Scalar::from_rational(coeff);
            for (m, v) in elem {
                out.add_term(poly.clone(), m, &v * &c);
            }
        }
        Ok(out)
    }

    /// Relation monomials as exponent vectors.
    pub fn relations(&self) -> &[Vec<u32>] {
        &self.relations
    }
}

/// Element of `Q[u_1..u_r] (x) model`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqElement {
    pub r: usize,
    pub terms: BTreeMap<(PolyKey, usize), Scalar>,
}

impl EqElement {
    pub fn zero(r: usize) -> EqElement {
        EqElement {
            r,
            terms: BTreeMap::new(),
        }
    }

    /// Constant polynomial times a model element.
    pub fn from_model(r: usize, v: &[(usize, Scalar)]) -> EqElement {
        let mut e = EqElement::zero(r);
        for (m, x) in v {
            e.add_term(vec![0; r], *m, x.clone());
        }
        e
    }

    pub fn add_term(&mut self, p: PolyKey, m: usize, v: Scalar) {
        if v.is_zero() {
            return;
        }
        let k = (p, m);
        let e = self.terms.entry(k.clone()).or_insert_with(Scalar::zero);
        *e += &v;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &EqElement) -> EqElement {
        let mut out = self.clone();
        for ((p, m), v) in &o.terms {
            out.add_term(p.clone(), *m, v.clone());
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> EqElement {
        let mut out = EqElement::zero(self.r);
        for ((p, m), v) in &self.terms {
            out.add_term(p.clone(), *m, v * c);
        }
        out
    }

    /// Product truncated at polynomial degree `n`.
    pub fn mul(&self, o: &EqElement, alg: &GradedAlgebra, n: usize) -> EqElement {
        let mut out = EqElement::zero(self.r);
        for ((p, m), v) in &self.terms {
            for ((q, l), w) in &o.terms {
                let pq: PolyKey = p.iter().zip(q).map(|(a, b)| a + b).collect();
                if pq.iter().map(|&x| x as usize).sum::<usize>() > n {
                    continue;
                }
                let c = v * w;
                for (k, x) in alg.mul_basis(*m, *l) {
                    out.add_term(pq.clone(), *k, x * &c);
                }
            }
        }
        out
    }

    /// `d_G = d + sum_i u_i iota_i`, truncated at polynomial degree `n`.
    pub fn d_g(&self, alg: &GradedAlgebra, n: usize) -> EqElement {
        let mut out = EqElement::zero(self.r);
        for ((p, m), v) in &self.terms {
            for (k, x) in alg.d().column(*m) {
                out.add_term(p.clone(), *k, x * v);
            }
            if p.iter().map(|&x| x as usize).sum::<usize>() < n {
                for i in 0..self.r {
                    let mut q = p.clone();
                    q[i] += 1;
                    for (k, x) in alg.iota(i).column(*m) {
                        out.add_term(q.clone(), *k, x * v);
                    }
                }
            }
        }
        out
    }

    /// Total degrees `2|p| + deg(m)` occurring in the element.
    pub fn degrees(&self, alg: &GradedAlgebra) -> Vec<i32> {
        let mut d: Vec<i32> = self
            .terms
            .keys()
            .map(|(p, m)| 2 * p.iter().map(|&x| x as i32).sum::<i32>() + alg.degree(*m))
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Applies a model-level linear map to the model factor.
    pub fn map_model(&self, m: &SparseMatrix) -> EqElement {
        let mut out = EqElement::zero(self.r);
        for ((p, l), v) in &self.terms {
            for (k, x) in m.column(*l) {
                out.add_term(p.clone(), *k, x * v);
            }
        }
        out
    }

    pub fn display(&self, alg: &GradedAlgebra) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|((p, m), v)| {
                let mut f: Vec<String> = vec![format!("({v})")];
                for (i, &e) in p.iter().enumerate() {
                    if e > 0 {
                        let name = if self.r == 1 {
                            "u".to_string()
                        } else {
                            format!("u{}", i + 1)
                        };
                        f.push(if e == 1 { name } else { format!("{name}^{e}") });
                    }
                }
                f.push(alg.label(*m).to_string());
                f.join("*")
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Twist of a Cartan complex.
#[derive(Clone, Debug)]
pub struct TwistData {
    /// Odd, equivariantly closed element of total degree 3 on the ambient model.
    pub eta_hat: EqElement,
    /// Closed degree-1 element on the sector model with vanishing contractions.
    pub connection: Option<SparseVec>,
}

/// Fixed-point sector: a model of `M^g`, the restriction map, and the symmetry of `G^g`.
#[derive(Clone, Debug)]
pub struct Sector {
    pub label: String,
    pub model: GradedAlgebra,
    pub restriction: SparseMatrix,
    /// Matrices of the centralizer acting on the sector model (averaged to get invariants).
    pub symmetry: Vec<SparseMatrix>,
}

/// Grading of an assembled complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Grading {
    Integer,
    Parity,
}

/// Truncated Cartan complex.
#[derive(Clone, Debug)]
pub struct EquivariantComplex {
    pub model: GradedAlgebra,
    pub truncation: usize,
    pub polys: Vec<PolyKey>,
    poly_index: HashMap<PolyKey, usize>,
    pub degrees: Vec<i32>,
    pub differential: SparseMatrix,
    pub grading: Grading,
    pub eta_hat: EqElement,
    pub connection: SparseVec,
    /// Basis elements whose image under the untruncated operator leaves the truncation.
    pub truncated_image: Vec<bool>,
    pub symmetry: Vec<SparseMatrix>,
}

fn polys_up_to(r: usize, n: usize) -> Vec<PolyKey> {
    let mut out: Vec<PolyKey> = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::new();
        for p in &out {
            let s: usize = p.iter().map(|&x| x as usize).sum();
            for e in 0..=(n - s) {
                let mut q = p.clone();
                q.push(e as u16);
                next.push(q);
            }
        }
        out = next;
    }
    out.sort_by_key(|p| {
        (
            p.iter().map(|&x| x as usize).sum::<usize>(),
            std::cmp::Reverse(p.clone()),
        )
    });
    out
}

/// Assembles `D = d + sum u_i iota_i + a - eta_hat` on the (sector) model.
pub fn cartan_complex(
    model: &GradedAlgebra,
    truncation: usize,
    twist: Option<&TwistData>,
    sector: Option<&Sector>,
) -> Result<EquivariantComplex> {
    if truncation < 1 {
        return Err(Error::InvalidStructure(
            "truncation must be at least 1".into(),
        ));
    }
    if let Some(v) = model.validate().first() {
        return Err(Error::InvalidStructure(format!("model: {v}")));
    }
    let r = model.rank();
    let zero = EqElement::zero(r);
    let eta = twist.map_or(&zero, |t| &t.eta_hat);
    if eta.r != r {
        return Err(Error::DimensionMismatch(
            "twist has the wrong number of equivariant variables".into(),
        ));
    }
    if eta.degrees(model).iter().any(|&d| d != 3) {
        return Err(Error::InvalidStructure(
            "eta_hat must have total degree 3".into(),
        ));
    }
    if !eta.d_g(model, truncation).is_zero() {
        return Err(Error::NotClosed(format!(
            "d_G eta_hat = {}",
            eta.d_g(model, truncation).display(model)
        )));
    }
    let (target, eta, symmetry) = match sector {
        Some(s) => {
            if let Some(v) = model.check_morphism(&s.model, &s.restriction).first() {
                return Err(Error::InvalidStructure(format!("restriction: {v}")));
            }
            if let Some(v) = s.model.validate().first() {
                return Err(Error::InvalidStructure(format!("sector model: {v}")));
            }
            (&s.model, eta.map_model(&s.restriction), s.symmetry.clone())
        }
        None => (model, eta.clone(), Vec::new()),
    };
    let a = twist.and_then(|t| t.connection.clone()).unwrap_or_default();
    assemble(target, truncation, eta, a, symmetry)
}

fn assemble(
    model: &GradedAlgebra,
    truncation: usize,
    eta: EqElement,
    a: SparseVec,
    symmetry: Vec<SparseMatrix>,
) -> Result<EquivariantComplex> {
    let r = model.rank();
    if !a.is_empty() {
        if model.homogeneous_degree(&a) != Some(1) {
            return Err(Error::InvalidStructure(
                "connection form must have degree 1".into(),
            ));
        }
        if !model.d().apply(&a).is_empty() || (0..r).any(|i| !model.iota(i).apply(&a).is_empty()) {
            return Err(Error::NotClosed(
                "connection form must be closed with vanishing contractions".into(),
            ));
        }
    }
    for s in &symmetry {
        if s.rows() != model.dim() || s.cols() != model.dim() {
            return Err(Error::InvalidStructure(
                "symmetry has the wrong shape".into(),
            ));
        }
    }
    let polys = polys_up_to(r, truncation);
    let poly_index: HashMap<PolyKey, usize> = polys
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    let dm = model.dim();
    let dim = polys.len() * dm;
    let deg_p = |p: &PolyKey| -> usize { p.iter().map(|&x| x as usize).sum() };
    let degrees: Vec<i32> = (0..dim)
        .map(|c| 2 * deg_p(&polys[c / dm]) as i32 + model.degree(c % dm))
        .collect();
    let mut ops = EqElement::from_model(r, &a).add(&eta.scale(&Scalar::from_int(-1)));
    ops.r = r;
    let mut cols = Vec::with_capacity(dim);
    let mut truncated_image = vec![false; dim];
    for c in 0..dim {
        let p = &polys[c / dm];
        let m = c % dm;
        let mut col: Vec<(usize, Scalar)> = Vec::new();
        let mut dropped = false;
        let mut push = |q: PolyKey, k: usize, v: Scalar| match poly_index.get(&q) {
            Some(&qi) => col.push((qi * dm + k, v)),
            None => dropped |= !v.is_zero(),
        };
        for (k, v) in model.d().column(m) {
            push(p.clone(), *k, v.clone());
        }
        for i in 0..r {
            let mut q = p.clone();
            q[i] += 1;
            for (k, v) in model.iota(i).column(m) {
                push(q.clone(), *k, v.clone());
            }
        }
        for ((q, l), v) in &ops.terms {
            let pq: PolyKey = p.iter().zip(q).map(|(x, y)| x + y).collect();
            for (k, x) in model.mul_basis(*l, m) {
                push(pq.clone(), *k, x * v);
            }
        }
        truncated_image[c] = dropped;
        cols.push(collect_sparse(col));
    }
    let differential = SparseMatrix::from_columns(dim, cols)?;
    let sq = differential.mul(&differential)?;
    if !sq.is_zero() {
        return Err(Error::NotAComplex { nonzero: sq.nnz() });
    }
    let grading = if eta.is_zero() {
        Grading::Integer
    } else {
        Grading::Parity
    };
    let c = EquivariantComplex {
        model: model.clone(),
        truncation,
        polys,
        poly_index,
        degrees,
        differential,
        grading,
        eta_hat: eta,
        connection: a,
        truncated_image,
        symmetry,
    };
    // The centralizer acts on sections of a line, so only commuting with D is required.
    for (k, s) in c.symmetry.iter().enumerate() {
        let l = c.lift_model_map(s);
        let shifts = (0..s.cols()).any(|j| {
            s.column(j)
                .iter()
                .any(|(i, _)| c.model.degree(*i) != c.model.degree(j))
        });
        if shifts || l.mul(&c.differential)? != c.differential.mul(&l)? {
            return Err(Error::InvalidStructure(format!(
                "symmetry {k} does not commute with the differential"
            )));
        }
    }
    Ok(c)
}

/// Cohomology dimensions of a complex.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CohomologyDims {
    pub grading: Grading,
    /// Per total degree (integer grading only).
    pub by_degree: BTreeMap<i32, usize>,
    pub even: usize,
    pub odd: usize,
    /// Degrees whose value may change with the truncation.
    pub sensitive_degrees: Vec<i32>,
    /// Some basis element has an image beyond the truncation.
    pub truncation_sensitive: bool,
}

impl EquivariantComplex {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Lifts a model-level matrix to `id (x) m`.
    pub fn lift_model_map(&self, m: &SparseMatrix) -> SparseMatrix {
        let dm = self.model.dim();
        let cols = (0..self.dim())
            .map(|c| {
                let base = (c / dm) * m.rows();
                m.column(c % dm)
                    .iter()
                    .map(|(k, v)| (base + k, v.clone()))
                    .collect()
            })
            .collect();
        SparseMatrix::from_columns(self.polys.len() * m.rows(), cols).expect("block map")
    }

    /// Left multiplication by an equivariant element, truncated.
    pub fn mult_matrix(&self, e: &EqElement) -> SparseMatrix {
        let dm = self.model.dim();
        let cols = (0..self.dim())
            .map(|c| {
                let basis = EqElement {
                    r: e.r,
                    terms: [((self.polys[c / dm].clone(), c % dm), Scalar::one())]
                        .into_iter()
                        .collect(),
                };
                self.vector(&e.mul(&basis, &self.model, self.truncation))
            })
            .collect();
        SparseMatrix::from_columns(self.dim(), cols).expect("square")
    }

    /// Coordinates of an element in the complex basis.
    pub fn vector(&self, e: &EqElement) -> SparseVec {
        let dm = self.model.dim();
        collect_sparse(
            e.terms.iter().filter_map(|((p, m), v)| {
                self.poly_index.get(p).map(|&pi| (pi * dm + m, v.clone()))
            }),
        )
    }

    fn class_of(&self, c: usize) -> i32 {
        match self.grading {
            Grading::Integer => self.degrees[c],
            Grading::Parity => self.degrees[c].rem_euclid(2),
        }
    }

    /// Columns spanning the (invariant) cochains of each class.
    fn spanning(&self) -> BTreeMap<i32, Vec<SparseVec>> {
        let mut out: BTreeMap<i32, Vec<SparseVec>> = BTreeMap::new();
        let lifted: Vec<SparseMatrix> = self
            .symmetry
            .iter()
            .map(|s| self.lift_model_map(s))
            .collect();
        for c in 0..self.dim() {
            let v: SparseVec = if lifted.is_empty() {
                vec![(c, Scalar::one())]
            } else {
                let w = Scalar::from_ratio(1, lifted.len() as i64);
                collect_sparse(
                    lifted
                        .iter()
                        .flat_map(|m| m.column(c).iter().map(|(i, x)| (*i, x * &w)))
                        .collect::<Vec<_>>(),
                )
            };
            if !v.is_empty() {
                out.entry(self.class_of(c)).or_default().push(v);
            }
        }
        out
    }

    pub fn cohomology_dims(&self) -> Result<CohomologyDims> {
        let sq = self.differential.mul(&self.differential)?;
        if !sq.is_zero() {
            return Err(Error::NotAComplex { nonzero: sq.nnz() });
        }
        let span = self.spanning();
        let n = self.dim();
        let mut rank = BTreeMap::new();
        let mut rank_d = BTreeMap::new();
        for (cls, vs) in &span {
            let mut r1 = ColumnReducer::new(n);
            let mut r2 = ColumnReducer::new(n);
            for v in vs {
                r1.insert(v.clone());
                r2.insert(self.differential.apply(v));
            }
            rank.insert(*cls, r1.rank());
            rank_d.insert(*cls, r2.rank());
        }
        let mut by_degree = BTreeMap::new();
        let (mut even, mut odd) = (0, 0);
        for (&cls, &rk) in &rank {
            let prev = match self.grading {
                Grading::Integer => cls - 1,
                Grading::Parity => 1 - cls,
            };
            let h = rk - rank_d[&cls] - rank_d.get(&prev).copied().unwrap_or(0);
            if self.grading == Grading::Integer {
                by_degree.insert(cls, h);
            }
            if cls.rem_euclid(2) == 0 {
                even += h;
            } else {
                odd += h;
            }
        }
        let mut sensitive: Vec<i32> = Vec::new();
        for c in 0..n {
            if self.truncated_image[c] {
                sensitive.push(self.degrees[c]);
                sensitive.push(self.degrees[c] + 1);
            }
        }
        sensitive.sort_unstable();
        sensitive.dedup();
        Ok(CohomologyDims {
            grading: self.grading,
            by_degree,
            even,
            odd,
            truncation_sensitive: !sensitive.is_empty(),
            sensitive_degrees: if self.grading == Grading::Integer {
                sensitive
            } else {
                Vec::new()
            },
        })
    }

    /// Same model, connection and symmetry with another twist.
    pub fn with_eta_hat(&self, eta: EqElement) -> Result<EquivariantComplex> {
        if !eta.d_g(&self.model, self.truncation).is_zero() {
            return Err(Error::NotClosed(
                "eta_hat is not equivariantly closed".into(),
            ));
        }
        assemble(
            &self.model,
            self.truncation,
            eta,
            self.connection.clone(),
            self.symmetry.clone(),
        )
    }

    /// Basis of cocycles (dense elimination; meant for small complexes).
    pub fn cocycles(&self) -> Vec<SparseVec> {
        let d = self.differential.to_dense();
        d.nullspace()
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .collect()
            })
            .collect()
    }

    pub fn is_coboundary(&self, v: &SparseVec) -> bool {
        let mut red = ColumnReducer::new(self.dim());
        for j in 0..self.dim() {
            red.insert(self.differential.column(j).to_vec());
        }
        red.contains(v.clone())
    }
}

/// Result of [`exp_conjugation`].
#[derive(Clone, Debug)]
pub struct ExpConjugation {
    pub target: EquivariantComplex,
    pub phi: SparseMatrix,
    pub phi_inverse: SparseMatrix,
    pub intertwines: bool,
    pub inverse_ok: bool,
}

fn exp_element(b: &EqElement, alg: &GradedAlgebra, n: usize) -> EqElement {
    let mut unit = EqElement::from_model(b.r, alg.unit());
    unit.r = b.r;
    let mut out = unit.clone();
    let mut pow = unit;
    let mut k = 1i64;
    loop {
        pow = pow.mul(b, alg, n).scale(&Scalar::from_ratio(1, k));
        if pow.is_zero() {
            return out;
        }
        out = out.add(&pow);
        k += 1;
    }
}

/// `Phi_B = exp(B)`: a chain isomorphism from the complex with `eta_1` to the one with
/// `eta_2 = eta_1 + d_G B`.
pub fn exp_conjugation(c: &EquivariantComplex, b: &EqElement) -> Result<ExpConjugation> {
    if b.r != c.model.rank() {
        return Err(Error::DimensionMismatch(
            "B has the wrong number of equivariant variables".into(),
        ));
    }
    if b.degrees(&c.model).iter().any(|&d| d % 2 != 0) {
        return Err(Error::InvalidStructure("B must be even".into()));
    }
    let mb = c.mult_matrix(b);
    let mut pow = mb.clone();
    for _ in 0..=c.dim() {
        if pow.is_zero() {
            break;
        }
        pow = pow.mul(&mb)?;
    }
    if !pow.is_zero() {
        return Err(Error::NotNilpotent(
            "B is not nilpotent; exp(B) would not be a finite sum".into(),
        ));
    }
    let eta2 = c.eta_hat.add(&b.d_g(&c.model, c.truncation));
    let target = c.with_eta_hat(eta2)?;
    let phi = c.mult_matrix(&exp_element(b, &c.model, c.truncation));
    let phi_inverse = c.mult_matrix(&exp_element(
        &b.scale(&Scalar::from_int(-1)),
        &c.model,
        c.truncation,
    ));
    let intertwines = phi.mul(&c.differential)? == target.differential.mul(&phi)?;
    let inverse_ok = phi.mul(&phi_inverse)? == SparseMatrix::identity(c.dim());
    Ok(ExpConjugation {
        target,
        phi,
        phi_inverse,
        intertwines,
        inverse_ok,
    })
}

/// Cocycles `w` of a complex for which `Phi w - w` is not a coboundary.
pub fn identity_on_cohomology_failures(
    c: &EquivariantComplex,
    phi: &SparseMatrix,
) -> Vec<SparseVec> {
    c.cocycles()
        .into_iter()
        .filter(|w| {
            let diff = axpy(&phi.apply(w), &Scalar::from_int(-1), w);
            !diff.is_empty() && !c.is_coboundary(&diff)
        })
        .collect()
}

/// `Fun(X) (x) Lambda` for a finite `G`-set `X`, with `G` acting on `X` only.
#[derive(Clone, Debug)]
pub struct FiniteSetModel {
    pub action: GroupAction,
    pub base: GradedAlgebra,
    pub total: GradedAlgebra,
}

impl FiniteSetModel {
    pub fn new(action: GroupAction, base: GradedAlgebra) -> FiniteSetModel {
        let pts: Vec<String> = (0..action.points()).map(|x| x.to_string()).collect();
        let total = base.copies(&pts);
        FiniteSetModel {
            action,
            base,
            total,
        }
    }

    /// The constant family `sum_x delta_x (x) v`.
    pub fn lift(&self, v: &[(usize, Scalar)]) -> SparseVec {
        let dm = self.base.dim();
        collect_sparse(
            (0..self.action.points())
                .flat_map(|x| v.iter().map(move |(m, c)| (x * dm + m, c.clone()))),
        )
    }

    pub fn lift_equivariant(&self, e: &EqElement) -> EqElement {
        let mut out = EqElement::zero(e.r);
        for ((p, m), v) in &e.terms {
            for (k, x) in self.lift(&[(*m, v.clone())]) {
                out.add_term(p.clone(), k, x);
            }
        }
        out
    }

    /// Sector of `g`: the model on `X^g`, restriction, and the centralizer acting through
    /// the line transport of `line` (trivial line if `None`).
    pub fn sector(&self, g: usize, line: Option<&LineFamily>) -> Result<Sector> {
        let grp = self.action.group();
        let fixed = self.action.fixed_points(g);
        let dm = self.base.dim();
        let names: Vec<String> = fixed.iter().map(|x| x.to_string()).collect();
        let model = self.base.copies(&names);
        let pos: HashMap<usize, usize> = fixed.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let cols = (0..self.total.dim())
            .map(|c| match pos.get(&(c / dm)) {
                Some(&i) => vec![(i * dm + c % dm, Scalar::one())],
                None => Vec::new(),
            })
            .collect();
        let restriction = SparseMatrix::from_columns(model.dim(), cols)?;
        if let Some(l) = line {
            if l.g != g {
                return Err(Error::InvalidStructure(
                    "line family belongs to another sector".into(),
                ));
            }
        }
        let mut symmetry = Vec::new();
        for h in grp.centralizer(g) {
            let cols = (0..model.dim())
                .map(|c| {
                    let x = fixed[c / dm];
                    let y = self.action.act(x, h);
                    let s = line.map_or(Scalar::one(), |l| l.value(x, h));
                    vec![(pos[&y] * dm + c % dm, s)]
                })
                .collect();
            symmetry.push(SparseMatrix::from_columns(model.dim(), cols)?);
        }
        Ok(Sector {
            label: grp.name(g).to_string(),
            model,
            restriction,
            symmetry,
        })
    }

    /// Map from the sector of `g` to the sector of `k^-1 g k`: `delta_x (x) m -> delta_{x.k} (x) m`.
    pub fn conjugation_map(&self, g: usize, k: usize) -> Result<SparseMatrix> {
        let grp = self.action.group();
        let g2 = grp.conj(g, k);
        let f1 = self.action.fixed_points(g);
        let f2 = self.action.fixed_points(g2);
        let pos2: HashMap<usize, usize> = f2.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let dm = self.base.dim();
        let cols = (0..f1.len() * dm)
            .map(|c| {
                vec![(
                    pos2[&self.action.act(f1[c / dm], k)] * dm + c % dm,
                    Scalar::one(),
                )]
            })
            .collect();
        SparseMatrix::from_columns(f2.len() * dm, cols)
    }
}

/// Checks `Phi D_1 = D_2 Phi` for a model-level map lifted to the complexes.
pub fn intertwines(
    c1: &EquivariantComplex,
    c2: &EquivariantComplex,
    model_map: &SparseMatrix,
) -> Result<bool> {
    let phi = c1.lift_model_map(model_map);
    if phi.rows() != c2.dim() {
        return Err(Error::DimensionMismatch(
            "map does not land in the second complex".into(),
        ));
    }
    Ok(phi.mul(&c1.differential)? == c2.differential.mul(&phi)?)
}

/// Direct sum over conjugacy-class representatives of the invariant sector cohomology.
#[derive(Clone, Debug, Serialize)]
pub struct Delocalized {
    pub sectors: Vec<(String, CohomologyDims)>,
    pub even: usize,
    pub odd: usize,
}

/// Assembles sector complexes of a finite-set model; `lines[i]` is the line family of the
/// `i`-th class representative (or `None` for the trivial line).
pub fn delocalized_dims(
    fsm: &FiniteSetModel,
    truncation: usize,
    eta_hat: Option<&EqElement>,
    lines: &[Option<LineFamily>],
) -> Result<Delocalized> {
    let reps = fsm.action.group().class_representatives();
    if lines.len() != reps.len() {
        return Err(Error::DimensionMismatch(
            "one line family per class representative".into(),
        ));
    }
    let mut sectors = Vec::new();
    let (mut even, mut odd) = (0, 0);
    for (g, line) in reps.into_iter().zip(lines) {
        let sec = fsm.sector(g, line.as_ref())?;
        let twist = eta_hat.map(|e| TwistData {
            eta_hat: fsm.lift_equivariant(e),
            connection: None,
        });
        let c = cartan_complex(&fsm.total, truncation, twist.as_ref(), Some(&sec))?;
        let h = c.cohomology_dims()?;
        even += h.even;
        odd += h.odd;
        sectors.push((sec.label.clone(), h));
    }
    Ok(Delocalized { sectors, even, odd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::FiniteGroup;

    fn gen(name: &str, degree: i32) -> Generator {
        Generator {
            name: name.into(),
            degree,
            nilpotency: None,
        }
    }

    fn s3_model() -> CDGAModel {
        CDGAModel::new(vec![gen("x3", 3)], &[], 0).unwrap()
    }

    fn circle(rotating: bool) -> CDGAModel {
        let mut m = CDGAModel::new(vec![gen("dt", 1)], &[], 1).unwrap();
        if rotating {
            m.set_contraction(0, "dt", "1").unwrap();
        }
        m
    }

    #[test]
    fn model_validation() {
        assert!(s3_model().validate().is_empty());
        assert!(circle(true).validate().is_empty());
        let mut m =
            CDGAModel::new(vec![gen("x", 1), gen("y", 1), gen("z", 2)], &["z^2"], 0).unwrap();
        m.set_differential("x", "z").unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        // d(x*y) planted to zero while dx*y = z*y is not.
        let xy = (0..m.algebra().dim())
            .find(|&i| m.algebra().label(i) == "x*y")
            .unwrap();
        let zy = (0..m.algebra().dim())
            .find(|&i| m.algebra().label(i) == "y*z")
            .unwrap();
        m.algebra_mut().set_d_entry(zy, xy, Scalar::zero());
        let v = m.validate();
        assert!(
            v.iter()
                .any(|s| s.contains("Leibniz rule for d fails on (x, y)")),
            "{v:?}"
        );
    }

    #[test]
    fn circle_cohomology() {
        let c = cartan_complex(circle(true).algebra(), 3, None, None).unwrap();
        let h = c.cohomology_dims().unwrap();
        for deg in 0..=6 {
            assert_eq!(h.by_degree[&deg], usize::from(deg == 0), "degree {deg}");
        }
        assert_eq!(h.sensitive_degrees, vec![7, 8]);
        assert_eq!(h.by_degree[&7], 1);
        let c = cartan_complex(circle(false).algebra(), 3, None, None).unwrap();
        let h = c.cohomology_dims().unwrap();
        assert!((0..=7).all(|d| h.by_degree[&d] == 1));
        assert!(!h.truncation_sensitive);
    }

    #[test]
    fn three_sphere_twists() {
        let m = s3_model();
        let h = cartan_complex(m.algebra(), 1, None, None)
            .unwrap()
            .cohomology_dims()
            .unwrap();
        assert_eq!((h.even, h.odd), (1, 1));
        for k in [1, -2, 5] {
            let t = TwistData {
                eta_hat: m.parse_equivariant(&format!("{k}*x3")).unwrap(),
                connection: None,
            };
            let h = cartan_complex(m.algebra(), 1, Some(&t), None)
                .unwrap()
                .cohomology_dims()
                .unwrap();
            assert_eq!((h.even, h.odd), (0, 0));
            assert_eq!(h.grading, Grading::Parity);
        }
        let t = TwistData {
            eta_hat: EqElement::zero(0),
            connection: None,
        };
        let h = cartan_complex(m.algebra(), 1, Some(&t), None)
            .unwrap()
            .cohomology_dims()
            .unwrap();
        assert_eq!((h.even, h.odd), (1, 1));
    }

    #[test]
    fn rejects_open_twist_and_bad_truncation() {
        let mut m = CDGAModel::new(
            vec![gen("x1", 1), gen("y2", 2), gen("w3", 3)],
            &["y2^2", "y2*w3"],
            0,
        )
        .unwrap();
        m.set_differential("y2", "w3").unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        let t = TwistData {
            eta_hat: m.parse_equivariant("x1*y2").unwrap(),
            connection: None,
        };
        assert!(matches!(
            cartan_complex(m.algebra(), 1, Some(&t), None),
            Err(Error::NotClosed(_))
        ));
        assert!(cartan_complex(m.algebra(), 0, None, None).is_err());
    }

    #[test]
    fn exp_conjugation_fixtures() {
        // Lambda(x1) (x) Q[y2, w3]/(y2^2, y2 w3), dy2 = w3, B = y2: eta 0 -> w3.
        let mut m = CDGAModel::new(
            vec![gen("x1", 1), gen("y2", 2), gen("w3", 3)],
            &["y2^2", "y2*w3"],
            0,
        )
        .unwrap();
        m.set_differential("y2", "w3").unwrap();
        let c = cartan_complex(m.algebra(), 1, None, None).unwrap();
        let b = m.parse_equivariant("y2").unwrap();
        let e = exp_conjugation(&c, &b).unwrap();
        assert!(e.intertwines && e.inverse_ok);
        assert_eq!(e.target.eta_hat, m.parse_equivariant("w3").unwrap());
        let h1 = c.cohomology_dims().unwrap();
        let h2 = e.target.cohomology_dims().unwrap();
        assert_eq!((h1.even, h1.odd), (h2.even, h2.odd));

        // Coboundary B = d gamma acts as the identity on cohomology.
        let mut m = CDGAModel::new(
            vec![gen("x1", 1), gen("v1", 1), gen("y2", 2)],
            &["y2^2", "v1*y2"],
            0,
        )
        .unwrap();
        m.set_differential("v1", "y2").unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        let t = TwistData {
            eta_hat: m.parse_equivariant("x1*y2").unwrap(),
            connection: None,
        };
        let c = cartan_complex(m.algebra(), 1, Some(&t), None).unwrap();
        let gamma = m.parse_equivariant("v1").unwrap();
        let b = gamma.d_g(m.algebra(), 1);
        let e = exp_conjugation(&c, &b).unwrap();
        assert!(e.intertwines && e.inverse_ok);
        assert_eq!(e.target.differential, c.differential);
        assert!(identity_on_cohomology_failures(&c, &e.phi).is_empty());

        // Circle rotation: gamma = dt, B = u.
        let m = circle(true);
        let c = cartan_complex(m.algebra(), 3, None, None).unwrap();
        let b = m.parse_equivariant("dt").unwrap().d_g(m.algebra(), 3);
        assert_eq!(b, m.parse_equivariant("u").unwrap());
        let e = exp_conjugation(&c, &b).unwrap();
        assert!(e.intertwines && e.inverse_ok);
        assert!(identity_on_cohomology_failures(&c, &e.phi).is_empty());

        let zero = exp_conjugation(&c, &EqElement::zero(1)).unwrap();
        assert_eq!(zero.phi, SparseMatrix::identity(c.dim()));
    }

    #[test]
    fn non_nilpotent_b_is_rejected() {
        let fsm = FiniteSetModel::new(
            GroupAction::trivial(FiniteGroup::trivial(), 2),
            CDGAModel::point(0).algebra().clone(),
        );
        let c = cartan_complex(&fsm.total, 1, None, None).unwrap();
        let b = EqElement::from_model(0, &[(0, Scalar::one())]);
        assert!(matches!(
            exp_conjugation(&c, &b),
            Err(Error::NotNilpotent(_))
        ));
        let odd = CDGAModel::new(vec![gen("x1", 1)], &[], 0).unwrap();
        let c = cartan_complex(odd.algebra(), 1, None, None).unwrap();
        assert!(exp_conjugation(&c, &odd.parse_equivariant("x1").unwrap()).is_err());
    }

    #[test]
    fn sector_covariance_for_s3_on_three_points() {
        let act = GroupAction::permutation_action(3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        let g = act.group().clone();
        let m = s3_model();
        let fsm = FiniteSetModel::new(act, m.algebra().clone());
        let eta = m.parse_equivariant("x3").unwrap();
        let twist = TwistData {
            eta_hat: fsm.lift_equivariant(&eta),
            connection: None,
        };
        for gg in 0..6 {
            let s1 = fsm.sector(gg, None).unwrap();
            let c1 = cartan_complex(&fsm.total, 1, Some(&twist), Some(&s1)).unwrap();
            for k in 0..6 {
                let g2 = g.conj(gg, k);
                let s2 = fsm.sector(g2, None).unwrap();
                let c2 = cartan_complex(&fsm.total, 1, Some(&twist), Some(&s2)).unwrap();
                let phi = fsm.conjugation_map(gg, k).unwrap();
                assert!(intertwines(&c1, &c2, &phi).unwrap());
            }
        }
    }
}
