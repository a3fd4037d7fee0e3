//! Curved differential graded algebras, trace maps, and the chain map `tau` from equivariant
//! cyclic chains to localized cochains.
//!
//! ```text
//! tau(phi (x) a_0 (x) ... (x) a_k)(X)
//!   = phi(g e^X) int_{Delta_k} Tr(a_0 nabla^{(t_1,X)} a_1 ... nabla^{(t_k,X)} a_k e^{-Theta})
//! nabla^{(t,X)} b = e^{-t Theta} nabla(e^{-tX} b) e^{t Theta}
//! ```
//!
//! Torus directions are polynomials in `u_1..u_r` truncated at total degree `N`; the torus acts
//! diagonally, so `e^{-tX}` scales a basis element of weight `w` by `exp(-t <u, w>)`.

use crate::cartan::{CDGAModel, EqElement, Generator, GradedAlgebra, PolyKey};
use crate::cyclic::{ChainKey, UNIT};
use crate::error::{Error, Result};
use crate::extension::{BundleGerbe, ExtensionCocycle, HaarWeights};
use crate::groupoid::{ActionGroupoid, FiniteGroup, FiniteGroupoid, GroupoidAction};
use crate::linalg::{axpy, collect_sparse, SparseMatrix, SparseVec};
use crate::scalar::{small_rational, Rational, Scalar};
use crate::transgression::transgress;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};

const MAX_MESSAGES: usize = 20;

/// `int_{Delta_k} t_1^{a_1} ... t_k^{a_k} dt` over `0 <= t_1 <= ... <= t_k <= 1`.
pub fn simplex_integrate(exponents: &[u32]) -> Rational {
    let mut acc = Rational::one();
    let mut e: i64 = 0;
    for &a in exponents {
        e += a as i64 + 1;
        acc = &acc * &Rational::new(1, e);
    }
    acc
}

/// Polynomial in `u_1..u_r` with scalar coefficients.
pub type UPoly = BTreeMap<PolyKey, Scalar>;

fn poly_deg(p: &[u16]) -> usize {
    p.iter().map(|&x| x as usize).sum()
}

fn poly_sum(p: &[u16], q: &[u16]) -> PolyKey {
    p.iter().zip(q).map(|(a, b)| a + b).collect()
}

fn poly_add(acc: &mut UPoly, k: PolyKey, v: Scalar) {
    if v.is_zero() {
        return;
    }
    let e = acc.entry(k.clone()).or_insert_with(Scalar::zero);
    *e += &v;
    if e.is_zero() {
        acc.remove(&k);
    }
}

/// All exponent vectors in `r` variables of total degree at most `n`.
fn poly_keys(r: usize, n: usize) -> Vec<PolyKey> {
    let mut out = vec![vec![0u16; r]];
    for i in 0..r {
        let mut next = Vec::new();
        for p in &out {
            for e in 0..=(n - poly_deg(p)) {
                let mut q = p.clone();
                q[i] = e as u16;
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// Coefficients of `exp(-<u, w>)` up to total degree `n`.
fn exp_minus(w: &[i64], n: usize) -> Vec<(PolyKey, Rational)> {
    poly_keys(w.len(), n)
        .into_iter()
        .map(|p| {
            let mut c = Rational::one();
            for (i, &e) in p.iter().enumerate() {
                c = &c * &Rational::new((-w[i]).pow(e as u32), factorial(e as usize));
            }
            (p, c)
        })
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

fn sign(odd: bool) -> Scalar {
    if odd {
        Scalar::from_int(-1)
    } else {
        Scalar::one()
    }
}

fn scale(v: &[(usize, Scalar)], c: &Scalar) -> SparseVec {
    if c.is_zero() {
        return Vec::new();
    }
    v.iter().map(|(i, x)| (*i, x * c)).collect()
}

fn basis_vec(i: usize) -> SparseVec {
    vec![(i, Scalar::one())]
}

fn push_msg(out: &mut Vec<String>, m: String) {
    if out.len() < MAX_MESSAGES {
        out.push(m);
    }
}

/// Raw data of a curved differential graded algebra.
#[derive(Clone, Debug)]
pub struct CurvedData {
    pub labels: Vec<String>,
    pub degrees: Vec<i32>,
    /// Product of basis elements `i * j` at `i * dim + j`.
    pub mult: Vec<SparseVec>,
    pub unit: SparseVec,
    pub nabla: SparseMatrix,
    pub iota: Vec<SparseMatrix>,
    /// Torus weights per coordinate per basis element; `L_i` is diagonal.
    pub weights: Vec<Vec<i64>>,
    pub group: FiniteGroup,
    /// Left action of each group element.
    pub actions: Vec<SparseMatrix>,
    pub theta: SparseVec,
}

/// Validated curved differential graded `G`-algebra.
#[derive(Clone, Debug)]
pub struct CurvedDGA {
    data: CurvedData,
    omega: SparseVec,
    eta: Vec<SparseVec>,
    theta_powers: Vec<SparseVec>,
}

impl CurvedData {
    fn dim(&self) -> usize {
        self.degrees.len()
    }

    fn mul(&self, x: &[(usize, Scalar)], y: &[(usize, Scalar)]) -> SparseVec {
        let n = self.dim();
        let mut items = Vec::new();
        for (i, a) in x {
            for (j, b) in y {
                let m = &self.mult[i * n + j];
                if m.is_empty() {
                    continue;
                }
                let c = a * b;
                items.extend(m.iter().map(|(k, v)| (*k, v * &c)));
            }
        }
        collect_sparse(items)
    }

    fn degree_of(&self, v: &[(usize, Scalar)]) -> Option<i32> {
        let mut d = v.iter().map(|(i, _)| self.degrees[*i]);
        let first = d.next()?;
        d.all(|x| x == first).then_some(first)
    }

    /// `[z, e_i]` in the graded sense for homogeneous `z` of degree `dz`.
    fn graded_commutator(&self, z: &[(usize, Scalar)], dz: i32, i: usize) -> SparseVec {
        let e = basis_vec(i);
        axpy(
            &self.mul(z, &e),
            &-sign(dz * self.degrees[i] % 2 != 0),
            &self.mul(&e, z),
        )
    }

    fn lie(&self, k: usize, v: &[(usize, Scalar)]) -> SparseVec {
        v.iter()
            .filter(|(i, _)| self.weights[k][*i] != 0)
            .map(|(i, x)| (*i, x * &Scalar::from_int(self.weights[k][*i])))
            .collect()
    }

    /// Structural failures, centrality failures, and the powers `Theta^m / m!` if nilpotent.
    fn check(&self) -> (Vec<String>, Vec<String>, Option<Vec<SparseVec>>) {
        let n = self.dim();
        let mut bad = Vec::new();
        let mut central = Vec::new();
        let shapes_ok = self.labels.len() == n
            && self.mult.len() == n * n
            && self.nabla.rows() == n
            && self.nabla.cols() == n
            && self.iota.iter().all(|m| m.rows() == n && m.cols() == n)
            && self.weights.len() == self.iota.len()
            && self.weights.iter().all(|w| w.len() == n)
            && self.actions.len() == self.group.order()
            && self.actions.iter().all(|m| m.rows() == n && m.cols() == n);
        if !shapes_ok {
            bad.push("tables have inconsistent sizes".into());
            return (bad, central, None);
        }
        let lab = |i: usize| self.labels[i].as_str();
        for i in 0..n {
            let e = basis_vec(i);
            if self.mul(&self.unit, &e) != e || self.mul(&e, &self.unit) != e {
                push_msg(&mut bad, format!("unit law fails on {}", lab(i)));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ij = &self.mult[i * n + j];
                if ij
                    .iter()
                    .any(|(k, _)| self.degrees[*k] != self.degrees[i] + self.degrees[j])
                {
                    push_msg(
                        &mut bad,
                        format!("product ({}, {}) is not homogeneous", lab(i), lab(j)),
                    );
                }
                if ij.is_empty() {
                    for k in 0..n {
                        let jk = &self.mult[j * n + k];
                        if !jk.is_empty() && !self.mul(&basis_vec(i), jk).is_empty() {
                            push_msg(
                                &mut bad,
                                format!(
                                    "associativity fails on ({}, {}, {})",
                                    lab(i),
                                    lab(j),
                                    lab(k)
                                ),
                            );
                        }
                    }
                    continue;
                }
                for k in 0..n {
                    let jk = &self.mult[j * n + k];
                    if self.mul(ij, &basis_vec(k)) != self.mul(&basis_vec(i), jk) {
                        push_msg(
                            &mut bad,
                            format!(
                                "associativity fails on ({}, {}, {})",
                                lab(i),
                                lab(j),
                                lab(k)
                            ),
                        );
                    }
                }
            }
        }
        let mut ops: Vec<(String, &SparseMatrix, i32)> = vec![("nabla".into(), &self.nabla, 1)];
        for (k, m) in self.iota.iter().enumerate() {
            ops.push((format!("iota_{}", k + 1), m, -1));
        }
        for (name, m, shift) in &ops {
            for j in 0..n {
                if m.column(j)
                    .iter()
                    .any(|(i, _)| self.degrees[*i] != self.degrees[j] + shift)
                {
                    push_msg(
                        &mut bad,
                        format!("{name} does not shift the degree of {} by {shift}", lab(j)),
                    );
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let lhs = m.apply(&self.mult[i * n + j]);
                    let rhs = axpy(
                        &self.mul(m.column(i), &basis_vec(j)),
                        &sign(self.degrees[i] % 2 != 0),
                        &self.mul(&basis_vec(i), m.column(j)),
                    );
                    if lhs != rhs {
                        push_msg(
                            &mut bad,
                            format!("Leibniz rule for {name} fails on ({}, {})", lab(i), lab(j)),
                        );
                    }
                }
            }
        }
        for a in 0..self.iota.len() {
            for b in a..self.iota.len() {
                let m = self.iota[a]
                    .mul(&self.iota[b])
                    .unwrap()
                    .add(&self.iota[b].mul(&self.iota[a]).unwrap())
                    .unwrap();
                if !m.is_zero() {
                    push_msg(
                        &mut bad,
                        format!("iota_{} and iota_{} do not anticommute", a + 1, b + 1),
                    );
                }
            }
            for j in 0..n {
                let lhs = axpy(
                    &self.nabla.apply(self.iota[a].column(j)),
                    &Scalar::one(),
                    &self.iota[a].apply(self.nabla.column(j)),
                );
                if lhs != self.lie(a, &basis_vec(j)) {
                    push_msg(
                        &mut bad,
                        format!(
                            "nabla iota_{0} + iota_{0} nabla != L_{0} on {1}",
                            a + 1,
                            lab(j)
                        ),
                    );
                }
            }
        }
        if self.degree_of(&self.theta).is_some_and(|d| d != 2) {
            push_msg(&mut bad, "Theta is not of degree 2".into());
        }
        for j in 0..n {
            let lhs = self.nabla.apply(self.nabla.column(j));
            if lhs != self.graded_commutator(&self.theta, 2, j) {
                push_msg(&mut bad, format!("nabla^2 != [Theta, .] on {}", lab(j)));
            }
        }
        for a in 0..self.iota.len() {
            if !self.lie(a, &self.theta).is_empty() {
                push_msg(&mut bad, format!("L_{} Theta != 0", a + 1));
            }
        }
        let id = self.group.identity();
        for k in 0..self.group.order() {
            let m = &self.actions[k];
            let name = self.group.name(k);
            if k == id && *m != SparseMatrix::identity(n) {
                push_msg(&mut bad, "identity acts nontrivially".into());
            }
            for l in 0..self.group.order() {
                if m.mul(&self.actions[l]).unwrap() != self.actions[self.group.mul(k, l)] {
                    push_msg(
                        &mut bad,
                        format!(
                            "actions of {} and {} do not compose",
                            name,
                            self.group.name(l)
                        ),
                    );
                }
            }
            if m.mul(&self.nabla).unwrap() != self.nabla.mul(m).unwrap() {
                push_msg(&mut bad, format!("{name} does not commute with nabla"));
            }
            for (a, io) in self.iota.iter().enumerate() {
                if m.mul(io).unwrap() != io.mul(m).unwrap() {
                    push_msg(
                        &mut bad,
                        format!("{name} does not commute with iota_{}", a + 1),
                    );
                }
            }
            if m.apply(&self.theta) != self.theta {
                push_msg(&mut bad, format!("{name} moves Theta"));
            }
            for i in 0..n {
                if m.column(i).iter().any(|(r, _)| {
                    self.degrees[*r] != self.degrees[i]
                        || self.weights.iter().any(|w| w[*r] != w[i])
                }) {
                    push_msg(
                        &mut bad,
                        format!("{name} does not preserve degree and weight of {}", lab(i)),
                    );
                }
                for j in 0..n {
                    let lhs = m.apply(&self.mult[i * n + j]);
                    if lhs != self.mul(m.column(i), m.column(j)) {
                        push_msg(
                            &mut bad,
                            format!("{name} is not multiplicative on ({}, {})", lab(i), lab(j)),
                        );
                    }
                }
            }
        }
        let omega = self.nabla.apply(&self.theta);
        let mut zs: Vec<(String, SparseVec, i32)> = vec![("nabla Theta".into(), omega, 3)];
        for (a, io) in self.iota.iter().enumerate() {
            zs.push((format!("iota_{} Theta", a + 1), io.apply(&self.theta), 1));
        }
        for (name, z, dz) in &zs {
            for i in 0..n {
                if !self.graded_commutator(z, *dz, i).is_empty() {
                    push_msg(
                        &mut central,
                        format!("{name} is not central: fails against {}", lab(i)),
                    );
                    break;
                }
            }
        }
        let mut powers = vec![self.unit.clone()];
        let mut nilpotent = false;
        for m in 1..=n + 1 {
            let next = scale(
                &self.mul(powers.last().unwrap(), &self.theta),
                &Scalar::from_ratio(1, m as i64),
            );
            if next.is_empty() {
                nilpotent = true;
                break;
            }
            powers.push(next);
        }
        (bad, central, nilpotent.then_some(powers))
    }
}

impl CurvedDGA {
    /// Validates every defining identity; non-central `eta_G` is reported as [`Error::NotCentral`].
    pub fn new(data: CurvedData) -> Result<CurvedDGA> {
        let (bad, central, powers) = data.check();
        if !central.is_empty() {
            return Err(Error::NotCentral(central.join("; ")));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidStructure(bad.join("; ")));
        }
        let theta_powers = powers.ok_or_else(|| Error::NotNilpotent("Theta".into()))?;
        let omega = data.nabla.apply(&data.theta);
        let eta = data.iota.iter().map(|m| m.apply(&data.theta)).collect();
        Ok(CurvedDGA {
            data,
            omega,
            eta,
            theta_powers,
        })
    }

    /// All failed identities, for reporting; empty exactly when [`CurvedDGA::new`] succeeds.
    pub fn failures(data: &CurvedData) -> Vec<String> {
        let (mut bad, central, powers) = data.check();
        bad.extend(central);
        if powers.is_none() {
            bad.push("Theta is not nilpotent".into());
        }
        bad
    }

    pub fn data(&self) -> &CurvedData {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn rank(&self) -> usize {
        self.data.iota.len()
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.data.degrees[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.data.labels[i]
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.data.group
    }

    pub fn unit(&self) -> &SparseVec {
        &self.data.unit
    }

    pub fn nabla(&self) -> &SparseMatrix {
        &self.data.nabla
    }

    pub fn iota(&self, i: usize) -> &SparseMatrix {
        &self.data.iota[i]
    }

    pub fn action(&self, k: usize) -> &SparseMatrix {
        &self.data.actions[k]
    }

    pub fn weight(&self, i: usize) -> Vec<i64> {
        self.data.weights.iter().map(|w| w[i]).collect()
    }

    pub fn theta(&self) -> &SparseVec {
        &self.data.theta
    }

    /// `Omega = nabla Theta`.
    pub fn omega(&self) -> &SparseVec {
        &self.omega
    }

    /// `eta_i = iota_i Theta`.
    pub fn eta(&self, i: usize) -> &SparseVec {
        &self.eta[i]
    }

    pub fn mul(&self, x: &[(usize, Scalar)], y: &[(usize, Scalar)]) -> SparseVec {
        self.data.mul(x, y)
    }

    /// `exp(s Theta)` as `sum_m s^m Theta^m / m!`, returned as `(m, Theta^m / m!)`.
    fn theta_series(&self) -> &[SparseVec] {
        &self.theta_powers
    }
}

/// Trace map `Tr: Omega -> target` twisted by a group element `g`.
#[derive(Clone, Debug)]
pub struct TraceData {
    pub target: GradedAlgebra,
    /// `target.dim() x omega.dim()`.
    pub trace: SparseMatrix,
    pub g: usize,
    /// Images of `nabla Theta` and `iota_i Theta` acting on the target by multiplication.
    pub omega_image: SparseVec,
    pub eta_images: Vec<SparseVec>,
    /// Which twisted-cyclicity convention the trace follows.
    pub convention: String,
}

impl TraceData {
    fn apply(&self, v: &[(usize, Scalar)]) -> SparseVec {
        self.trace.apply(v)
    }

    /// Violations of the trace-map axioms relative to `om`; exhaustive over basis pairs.
    pub fn failures(&self, om: &CurvedDGA) -> Vec<String> {
        let n = om.dim();
        let t = &self.target;
        let mut out = Vec::new();
        if self.trace.cols() != n || self.trace.rows() != t.dim() {
            out.push("trace has the wrong shape".into());
            return out;
        }
        if t.rank() != om.rank() || self.eta_images.len() != om.rank() {
            out.push("target rank differs from the torus rank".into());
            return out;
        }
        if self.g >= om.group().order() {
            out.push("twisting element outside the group".into());
            return out;
        }
        for j in 0..n {
            if self
                .trace
                .column(j)
                .iter()
                .any(|(i, _)| t.degree(*i) != om.degree(j))
            {
                push_msg(
                    &mut out,
                    format!("trace does not preserve the degree of {}", om.label(j)),
                );
            }
        }
        if self.trace.mul(om.nabla()).unwrap() != t.d().mul(&self.trace).unwrap() {
            push_msg(&mut out, "Tr nabla != d Tr".into());
        }
        for a in 0..om.rank() {
            if self.trace.mul(om.iota(a)).unwrap() != t.iota(a).mul(&self.trace).unwrap() {
                push_msg(&mut out, format!("Tr iota_{0} != iota_{0} Tr", a + 1));
            }
        }
        let gi = om.group().inv(self.g);
        let act = om.action(gi);
        for i in 0..n {
            for j in 0..n {
                let lhs = self.apply(&om.mul(&basis_vec(i), &basis_vec(j)));
                let rhs = scale(
                    &self.apply(&om.mul(act.column(j), &basis_vec(i))),
                    &sign(om.degree(i) * om.degree(j) % 2 != 0),
                );
                if lhs != rhs {
                    push_msg(
                        &mut out,
                        format!(
                            "twisted cyclicity fails on ({}, {})",
                            om.label(i),
                            om.label(j)
                        ),
                    );
                }
            }
        }
        let mut zs: Vec<(String, &SparseVec, &SparseVec)> =
            vec![("nabla Theta".into(), om.omega(), &self.omega_image)];
        for a in 0..om.rank() {
            zs.push((
                format!("iota_{} Theta", a + 1),
                om.eta(a),
                &self.eta_images[a],
            ));
        }
        for (name, z, img) in zs {
            for i in 0..n {
                let lhs = self.apply(&om.mul(z, &basis_vec(i)));
                let rhs = t.mul(img, &self.apply(&basis_vec(i)));
                if lhs != rhs {
                    push_msg(
                        &mut out,
                        format!("Tr is not linear over {name} on {}", om.label(i)),
                    );
                    break;
                }
            }
        }
        if !t.d().mul(t.d()).unwrap().is_zero() {
            push_msg(&mut out, "target d^2 != 0".into());
        }
        out
    }
}

/// Equivariant cyclic chain with torus-polynomial coefficients; entries are basis indices of
/// `Omega` spanning `A`, slot 0 may hold the formal unit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HkrChain {
    pub terms: BTreeMap<ChainKey, UPoly>,
}

impl HkrChain {
    pub fn add(&mut self, key: ChainKey, p: PolyKey, v: Scalar) {
        if v.is_zero() {
            return;
        }
        let e = self.terms.entry(key.clone()).or_default();
        poly_add(e, p, v);
        if e.is_empty() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn display(&self, om: &CurvedDGA) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(k, p)| {
                let coeff: Vec<String> = p
                    .iter()
                    .map(|(e, v)| {
                        let mono: Vec<String> = e
                            .iter()
                            .enumerate()
                            .filter(|(_, &x)| x > 0)
                            .map(|(i, x)| format!("u{}^{x}", i + 1))
                            .collect();
                        if mono.is_empty() {
                            format!("{v}")
                        } else {
                            format!("{v}*{}", mono.join("*"))
                        }
                    })
                    .collect();
                let slots: Vec<String> = k
                    .iter()
                    .map(|&a| {
                        if a == UNIT {
                            "1".to_string()
                        } else {
                            om.label(a as usize).to_string()
                        }
                    })
                    .collect();
                format!("({}) {}", coeff.join(" + "), slots.join(" (x) "))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Polynomial in one variable `t` and the torus variables, with coefficients in `Omega`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TPoly {
    pub terms: BTreeMap<(u32, PolyKey), SparseVec>,
}

impl TPoly {
    fn add(&mut self, t: u32, p: PolyKey, v: &[(usize, Scalar)], c: &Scalar) {
        if v.is_empty() || c.is_zero() {
            return;
        }
        let k = (t, p);
        let cur = self.terms.remove(&k).unwrap_or_default();
        let next = axpy(&cur, c, v);
        if !next.is_empty() {
            self.terms.insert(k, next);
        }
    }
}

/// Inputs of the chain map: a curved algebra, a trace, and the subalgebra `A` of `Omega^0`.
#[derive(Clone, Debug)]
pub struct HkrFixture {
    pub name: String,
    omega: CurvedDGA,
    trace: TraceData,
    algebra: Vec<usize>,
    truncation: usize,
    slots: HashMap<usize, Vec<(u32, PolyKey, SparseVec)>>,
    exp_minus_theta: SparseVec,
}

/// Outcome of [`verify_chain_map`].
#[derive(Clone, Debug, Serialize)]
pub struct HkrReport {
    pub fixture: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub max_degree: usize,
    pub truncation: usize,
    /// Coefficients are compared for torus degree at most this.
    pub compared_order: usize,
    pub convention: String,
    pub counterexamples: Vec<String>,
}

impl HkrReport {
    pub fn ok(&self) -> bool {
        self.passed == self.trials && self.counterexamples.is_empty()
    }
}

impl HkrFixture {
    /// `algebra` lists basis indices of `Omega^0` spanning a subalgebra stable under the group.
    pub fn new(
        name: &str,
        omega: CurvedDGA,
        trace: TraceData,
        algebra: Vec<usize>,
        truncation: usize,
    ) -> Result<HkrFixture> {
        let bad = trace.failures(&omega);
        if !bad.is_empty() {
            return Err(Error::InvalidStructure(format!(
                "trace: {}",
                bad.join("; ")
            )));
        }
        let n = omega.dim();
        let mut algebra = algebra;
        algebra.sort_unstable();
        algebra.dedup();
        let inside = |v: &SparseVec| v.iter().all(|(i, _)| algebra.binary_search(i).is_ok());
        for &a in &algebra {
            if a >= n || omega.degree(a) != 0 {
                return Err(Error::InvalidStructure(format!(
                    "algebra element {a} is not in Omega^0"
                )));
            }
            for &b in &algebra {
                if !inside(&omega.mul(&basis_vec(a), &basis_vec(b))) {
                    return Err(Error::InvalidStructure(format!(
                        "algebra not closed on ({}, {})",
                        omega.label(a),
                        omega.label(b)
                    )));
                }
            }
            for k in 0..omega.group().order() {
                if !inside(&omega.action(k).column(a).to_vec()) {
                    return Err(Error::InvalidStructure(format!(
                        "algebra not stable under {}",
                        omega.group().name(k)
                    )));
                }
            }
        }
        let series = omega.theta_series().to_vec();
        let exp_minus_theta = series
            .iter()
            .enumerate()
            .fold(Vec::new(), |acc, (m, v)| axpy(&acc, &sign(m % 2 == 1), v));
        let mut f = HkrFixture {
            name: name.to_string(),
            omega,
            trace,
            algebra,
            truncation,
            slots: HashMap::new(),
            exp_minus_theta,
        };
        let slots = f
            .algebra
            .iter()
            .map(|&a| (a, f.nabla_t_flat(&basis_vec(a))))
            .collect();
        f.slots = slots;
        Ok(f)
    }

    pub fn omega(&self) -> &CurvedDGA {
        &self.omega
    }

    pub fn trace(&self) -> &TraceData {
        &self.trace
    }

    pub fn algebra(&self) -> &[usize] {
        &self.algebra
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn r(&self) -> usize {
        self.omega.rank()
    }

    fn zero_poly(&self) -> PolyKey {
        vec![0; self.r()]
    }

    /// `e^{-tX} beta` as a polynomial in `t` and `u`.
    fn exp_tx(&self, beta: &[(usize, Scalar)]) -> TPoly {
        let mut out = TPoly::default();
        for (j, c) in beta {
            for (p, x) in exp_minus(&self.omega.weight(*j), self.truncation) {
                out.add(
                    poly_deg(&p) as u32,
                    p,
                    &[(*j, c.clone())],
                    &Scalar::from_rational(x),
                );
            }
        }
        out
    }

    /// `e^{-t Theta} y e^{t Theta}`.
    fn conj_theta(&self, y: &TPoly) -> TPoly {
        let series = self.omega.theta_series();
        let mut out = TPoly::default();
        for ((t, p), v) in &y.terms {
            for (l, left) in series.iter().enumerate() {
                let lv = self.omega.mul(left, v);
                if lv.is_empty() {
                    continue;
                }
                for (r, right) in series.iter().enumerate() {
                    out.add(
                        t + (l + r) as u32,
                        p.clone(),
                        &self.omega.mul(&lv, right),
                        &sign(l % 2 == 1),
                    );
                }
            }
        }
        out
    }

    fn nabla_t_flat(&self, beta: &[(usize, Scalar)]) -> Vec<(u32, PolyKey, SparseVec)> {
        let y = self.exp_tx(beta);
        let mut dy = TPoly::default();
        for ((t, p), v) in &y.terms {
            dy.add(*t, p.clone(), &self.omega.nabla().apply(v), &Scalar::one());
        }
        self.conj_theta(&dy)
            .terms
            .into_iter()
            .map(|((t, p), v)| (t, p, v))
            .collect()
    }

    /// `nabla^{(t,X)} beta = e^{-t Theta} nabla(e^{-tX} beta) e^{t Theta}`.
    pub fn nabla_t(&self, beta: &[(usize, Scalar)]) -> TPoly {
        let mut out = TPoly::default();
        for (t, p, v) in self.nabla_t_flat(beta) {
            out.add(t, p, &v, &Scalar::one());
        }
        out
    }

    /// Coefficients where `-d/dt (e^{-t Theta} (e^{-tX} beta) e^{t Theta}) = (nabla + iota_X) nabla^{(t,X)} beta`
    /// fails, up to torus degree `N`.
    pub fn derivative_failures(&self, beta: &[(usize, Scalar)]) -> Vec<String> {
        let n = self.truncation;
        let c = self.conj_theta(&self.exp_tx(beta));
        let mut lhs = TPoly::default();
        for ((t, p), v) in &c.terms {
            if *t > 0 {
                lhs.add(t - 1, p.clone(), v, &Scalar::from_int(-(*t as i64)));
            }
        }
        let nt = self.nabla_t(beta);
        let mut rhs = TPoly::default();
        for ((t, p), v) in &nt.terms {
            rhs.add(*t, p.clone(), &self.omega.nabla().apply(v), &Scalar::one());
            if poly_deg(p) < n {
                for a in 0..self.r() {
                    let mut q = p.clone();
                    q[a] += 1;
                    rhs.add(*t, q, &self.omega.iota(a).apply(v), &Scalar::one());
                }
            }
        }
        let mut out = Vec::new();
        let keys: std::collections::BTreeSet<&(u32, PolyKey)> =
            lhs.terms.keys().chain(rhs.terms.keys()).collect();
        for k in keys {
            if lhs.terms.get(k) != rhs.terms.get(k) {
                push_msg(&mut out, format!("coefficient of t^{} u^{:?}", k.0, k.1));
            }
        }
        out
    }

    /// `sigma(a) = (g e^X)^{-1} a` as `(u-exponent, basis index, coefficient)`.
    pub fn sigma(&self, a: usize) -> Vec<(PolyKey, usize, Scalar)> {
        let gi = self.omega.group().inv(self.trace.g);
        let mut out = Vec::new();
        for (m, v) in self.omega.action(gi).column(a) {
            for (p, x) in exp_minus(&self.omega.weight(*m), self.truncation) {
                out.push((p, *m, v * &Scalar::from_rational(x)));
            }
        }
        out
    }

    fn entry(&self, a: u32) -> SparseVec {
        if a == UNIT {
            self.omega.unit().clone()
        } else {
            basis_vec(a as usize)
        }
    }

    /// Hochschild boundary with the twisted wrap-around term.
    pub fn operator_b(&self, c: &HkrChain) -> HkrChain {
        let n = self.truncation;
        let mut out = HkrChain::default();
        for (key, coef) in &c.terms {
            let k = key.len() - 1;
            if k == 0 {
                continue;
            }
            for i in 0..k {
                let prod = if i == 0 && key[0] == UNIT {
                    basis_vec(key[1] as usize)
                } else {
                    self.omega.mul(&self.entry(key[i]), &self.entry(key[i + 1]))
                };
                let s = sign(i % 2 == 1);
                for (m, v) in prod {
                    let mut nk: ChainKey = key[..i].iter().copied().collect();
                    nk.push(m as u32);
                    nk.extend(key[i + 2..].iter().copied());
                    let f = &v * &s;
                    for (p, x) in coef {
                        out.add(nk.clone(), p.clone(), x * &f);
                    }
                }
            }
            let s = sign(k % 2 == 1);
            for (q, m, v) in self.sigma(key[k] as usize) {
                let prod = if key[0] == UNIT {
                    basis_vec(m)
                } else {
                    self.omega.mul(&basis_vec(m), &basis_vec(key[0] as usize))
                };
                for (l, w) in prod {
                    let mut nk: ChainKey = SmallVec::new();
                    nk.push(l as u32);
                    nk.extend(key[1..k].iter().copied());
                    let f = &(&v * &w) * &s;
                    for (p, x) in coef {
                        let pq = poly_sum(p, &q);
                        if poly_deg(&pq) <= n {
                            out.add(nk.clone(), pq, x * &f);
                        }
                    }
                }
            }
        }
        out
    }

    /// Connes operator; zero on chains whose slot 0 is the formal unit.
    pub fn operator_big_b(&self, c: &HkrChain) -> HkrChain {
        let n = self.truncation;
        let mut out = HkrChain::default();
        for (key, coef) in &c.terms {
            if key[0] == UNIT {
                continue;
            }
            let k = key.len() - 1;
            for i in 0..=k {
                let s = sign((k * i) % 2 == 1);
                let mut partial: Vec<(PolyKey, ChainKey, Scalar)> =
                    vec![(self.zero_poly(), SmallVec::from_slice(&[UNIT]), s)];
                for &a in &key[k + 1 - i..] {
                    let sig = self.sigma(a as usize);
                    let mut next = Vec::new();
                    for (p, ck, v) in &partial {
                        for (q, m, w) in &sig {
                            let pq = poly_sum(p, q);
                            if poly_deg(&pq) <= n {
                                let mut nk = ck.clone();
                                nk.push(*m as u32);
                                next.push((pq, nk, v * w));
                            }
                        }
                    }
                    partial = next;
                }
                for (p, mut ck, v) in partial {
                    ck.extend(key[..=k - i].iter().copied());
                    for (q, x) in coef {
                        let pq = poly_sum(&p, q);
                        if poly_deg(&pq) <= n {
                            out.add(ck.clone(), pq, x * &v);
                        }
                    }
                }
            }
        }
        out
    }

    /// `tau` of a single tensor, as target vectors per torus monomial.
    fn tau_key(&self, key: &ChainKey) -> Vec<(PolyKey, SparseVec)> {
        let n = self.truncation;
        type TExp = SmallVec<[u8; 8]>;
        let mut acc: BTreeMap<(TExp, PolyKey), SparseVec> = BTreeMap::new();
        acc.insert((SmallVec::new(), self.zero_poly()), self.entry(key[0]));
        for &a in &key[1..] {
            let slot = &self.slots[&(a as usize)];
            let mut next: BTreeMap<(TExp, PolyKey), SparseVec> = BTreeMap::new();
            for ((te, p), v) in &acc {
                for (d, q, w) in slot {
                    let pq = poly_sum(p, q);
                    if poly_deg(&pq) > n {
                        continue;
                    }
                    let prod = self.omega.mul(v, w);
                    if prod.is_empty() {
                        continue;
                    }
                    let mut nt = te.clone();
                    nt.push(*d as u8);
                    let e = next.entry((nt, pq)).or_default();
                    *e = axpy(e, &Scalar::one(), &prod);
                }
            }
            next.retain(|_, v| !v.is_empty());
            acc = next;
        }
        let mut by_poly: BTreeMap<PolyKey, SparseVec> = BTreeMap::new();
        for ((te, p), v) in acc {
            let exps: Vec<u32> = te.iter().map(|&x| x as u32).collect();
            let w = self.omega.mul(&v, &self.exp_minus_theta);
            let c = Scalar::from_rational(simplex_integrate(&exps));
            let e = by_poly.entry(p).or_default();
            *e = axpy(e, &c, &w);
        }
        by_poly
            .into_iter()
            .map(|(p, v)| (p, self.trace.apply(&v)))
            .filter(|(_, v)| !v.is_empty())
            .collect()
    }

    fn tau_cached(
        &self,
        c: &HkrChain,
        cache: &mut HashMap<ChainKey, Vec<(PolyKey, SparseVec)>>,
    ) -> EqElement {
        let n = self.truncation;
        let mut out = EqElement::zero(self.r());
        for (key, coef) in &c.terms {
            if !cache.contains_key(key) {
                let v = self.tau_key(key);
                cache.insert(key.clone(), v);
            }
            for (p, v) in &cache[key] {
                for (q, x) in coef {
                    let pq = poly_sum(p, q);
                    if poly_deg(&pq) > n {
                        continue;
                    }
                    for (m, y) in v {
                        out.add_term(pq.clone(), *m, y * x);
                    }
                }
            }
        }
        out
    }

    /// The localized cochain `tau(c)`.
    pub fn tau(&self, c: &HkrChain) -> EqElement {
        self.tau_cached(c, &mut HashMap::new())
    }

    /// `(d + iota_X + eta_G(X))` on localized cochains, truncated at degree `N`.
    pub fn localized_differential(&self, e: &EqElement) -> EqElement {
        let t = &self.trace.target;
        let n = self.truncation;
        let mut eta = EqElement::from_model(self.r(), &self.trace.omega_image);
        for (a, img) in self.trace.eta_images.iter().enumerate() {
            let mut p = self.zero_poly();
            p[a] = 1;
            for (m, v) in img {
                eta.add_term(p.clone(), *m, v.clone());
            }
        }
        e.d_g(t, n).add(&eta.mul(e, t, n))
    }

    /// Left action of a group element on chain entries; the sector moves to `k g k^-1`.
    pub fn act_chain(&self, k: usize, c: &HkrChain) -> HkrChain {
        let m = self.omega.action(k);
        let mut out = HkrChain::default();
        for (key, coef) in &c.terms {
            let mut partial: Vec<(ChainKey, Scalar)> = vec![(SmallVec::new(), Scalar::one())];
            for &a in key.iter() {
                let mut next = Vec::new();
                for (ck, v) in &partial {
                    if a == UNIT {
                        let mut nk = ck.clone();
                        nk.push(UNIT);
                        next.push((nk, v.clone()));
                    } else {
                        for (b, w) in m.column(a as usize) {
                            let mut nk = ck.clone();
                            nk.push(*b as u32);
                            next.push((nk, v * w));
                        }
                    }
                }
                partial = next;
            }
            for (ck, v) in partial {
                for (p, x) in coef {
                    out.add(ck.clone(), p.clone(), x * &v);
                }
            }
        }
        out
    }

    /// Pseudo-random chain of degree `k`, invariant under the centralizer of `g` and the torus.
    pub fn random_invariant_chain<R: Rng>(&self, rng: &mut R, k: usize) -> HkrChain {
        let r = self.r();
        let alg = &self.algebra;
        loop {
            let mut c = HkrChain::default();
            for _ in 0..3 {
                let mut found = None;
                for _ in 0..500 {
                    let mut key: ChainKey = SmallVec::new();
                    key.push(if k >= 1 && rng.gen_range(0..4) == 0 {
                        UNIT
                    } else {
                        alg[rng.gen_range(0..alg.len())] as u32
                    });
                    for _ in 0..k {
                        key.push(alg[rng.gen_range(0..alg.len())] as u32);
                    }
                    let total: Vec<i64> = (0..r)
                        .map(|i| {
                            key.iter()
                                .filter(|&&a| a != UNIT)
                                .map(|&a| self.omega.data.weights[i][a as usize])
                                .sum()
                        })
                        .collect();
                    if total.iter().all(|&w| w == 0) {
                        found = Some(key);
                        break;
                    }
                }
                let Some(key) = found else { continue };
                c.add(
                    key.clone(),
                    self.zero_poly(),
                    Scalar::from_rational(small_rational(rng, 3, 3)),
                );
                if r > 0 && self.truncation > 0 {
                    let mut p = self.zero_poly();
                    p[rng.gen_range(0..r)] = 1;
                    c.add(key, p, Scalar::from_rational(small_rational(rng, 2, 2)));
                }
            }
            let grp = self.omega.group();
            let cent = grp.centralizer(self.trace.g);
            let mut avg = HkrChain::default();
            for &h in &cent {
                for (key, coef) in self.act_chain(h, &c).terms {
                    for (p, x) in coef {
                        avg.add(key.clone(), p, x);
                    }
                }
            }
            if !avg.is_zero() {
                return avg;
            }
        }
    }
}

fn truncate(e: &EqElement, order: usize) -> EqElement {
    EqElement {
        r: e.r,
        terms: e
            .terms
            .iter()
            .filter(|((p, _), _)| poly_deg(p) <= order)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    }
}

/// Checks `tau((b + B) c) = (d + iota + eta_G) tau(c)` on seeded random invariant chains of
/// degrees `0..=kmax`, comparing coefficients of torus degree at most `N - 1`.
pub fn verify_chain_map(f: &HkrFixture, trials: usize, seed: u64, kmax: usize) -> HkrReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = f.truncation.saturating_sub(1);
    let mut cache = HashMap::new();
    let mut passed = 0;
    let mut counterexamples = Vec::new();
    for t in 0..trials {
        let k = t % (kmax + 1);
        let c = f.random_invariant_chain(&mut rng, k);
        let bc = f.operator_b(&c);
        let bbc = f.operator_big_b(&c);
        let lhs = f
            .tau_cached(&bc, &mut cache)
            .add(&f.tau_cached(&bbc, &mut cache));
        let rhs = f.localized_differential(&f.tau_cached(&c, &mut cache));
        if truncate(&lhs, order) == truncate(&rhs, order) {
            passed += 1;
        } else {
            push_msg(
                &mut counterexamples,
                format!("degree {k}: {}", c.display(&f.omega)),
            );
        }
    }
    HkrReport {
        fixture: f.name.clone(),
        seed,
        trials,
        passed,
        max_degree: kmax.min(trials.saturating_sub(1)),
        truncation: f.truncation,
        compared_order: order,
        convention: f.trace.convention.clone(),
        counterexamples,
    }
}

/// The finite instantiation `Omega = (Fun(H_0) + C(H, L)) (x) Lambda` of a twisted groupoid with a
/// `G`-action, where `Lambda` is an auxiliary graded-commutative model with differential.
///
/// Product: `(b1 + w1)(b2 + w2) = b1 b2 + (t^* b1) w2 + w1 (s^* b2) + w1 * w2`;
/// `nabla = 1 (x) d`, so the curving vanishes.
#[derive(Clone, Debug)]
pub struct GroupoidOmega {
    h: FiniteGroupoid,
    theta: ExtensionCocycle,
    weights: HaarWeights,
    action: GroupoidAction,
    aux: GradedAlgebra,
    omega: CurvedDGA,
}

impl GroupoidOmega {
    pub fn new(
        theta: &ExtensionCocycle,
        weights: &HaarWeights,
        action: &GroupoidAction,
        aux: &GradedAlgebra,
    ) -> Result<GroupoidOmega> {
        let rep = theta.validate(Some(action));
        if !rep.is_valid() {
            return Err(Error::NotACocycle(format!("{rep:?}")));
        }
        if aux.rank() != 0 {
            return Err(Error::Unsupported(
                "auxiliary model with torus contractions".into(),
            ));
        }
        let bad = aux.validate();
        if !bad.is_empty() {
            return Err(Error::InvalidStructure(format!(
                "auxiliary model: {}",
                bad.join("; ")
            )));
        }
        let h = theta.groupoid().clone();
        let grp = action.group().clone();
        for k in 0..grp.order() {
            for a in 0..h.arrows() {
                if weights.weight(action.act(a, k)) != weights.weight(a) {
                    return Err(Error::NotInvariant(format!(
                        "Haar weight of {} under {}",
                        h.label(a),
                        grp.name(k)
                    )));
                }
            }
        }
        let (no, na, dl) = (h.objects(), h.arrows(), aux.dim());
        let parts = no + na;
        let dim = parts * dl;
        let idx = |p: usize, l: usize| p * dl + l;
        let part_mul = |p: usize, q: usize| -> Option<(usize, Scalar)> {
            match (p < no, q < no) {
                (true, true) => (p == q).then(|| (p, Scalar::one())),
                (true, false) => (h.target(q - no) == p).then(|| (q, Scalar::one())),
                (false, true) => (h.source(p - no) == q).then(|| (p, Scalar::one())),
                (false, false) => {
                    let (a, b) = (p - no, q - no);
                    h.compose(a, b)
                        .map(|ab| (no + ab, weights.weight(a) * &theta.value(a, b)))
                }
            }
        };
        let mut mult = vec![Vec::new(); dim * dim];
        for p in 0..parts {
            for q in 0..parts {
                let Some((pq, c)) = part_mul(p, q) else {
                    continue;
                };
                for l in 0..dl {
                    for m in 0..dl {
                        mult[idx(p, l) * dim + idx(q, m)] = aux
                            .mul_basis(l, m)
                            .iter()
                            .map(|(k, v)| (idx(pq, *k), v * &c))
                            .collect();
                    }
                }
            }
        }
        let labels: Vec<String> = (0..dim)
            .map(|i| {
                let (p, l) = (i / dl, i % dl);
                let part = if p < no {
                    format!("1_{p}")
                } else {
                    h.label(p - no).to_string()
                };
                if aux.label(l) == "1" {
                    part
                } else {
                    format!("{part}*{}", aux.label(l))
                }
            })
            .collect();
        let degrees = (0..dim).map(|i| aux.degree(i % dl)).collect();
        let unit = (0..no)
            .flat_map(|x| aux.unit().iter().map(move |(k, v)| (idx(x, *k), v.clone())))
            .collect();
        let nabla = SparseMatrix::from_columns(
            dim,
            (0..dim)
                .map(|i| {
                    aux.d()
                        .column(i % dl)
                        .iter()
                        .map(|(k, v)| ((i / dl) * dl + k, v.clone()))
                        .collect()
                })
                .collect(),
        )?;
        let actions = (0..grp.order())
            .map(|k| {
                let ki = grp.inv(k);
                let cols = (0..dim)
                    .map(|i| {
                        let (p, l) = (i / dl, i % dl);
                        let q = if p < no {
                            action.act_object(p, ki)
                        } else {
                            no + action.act(p - no, ki)
                        };
                        vec![(idx(q, l), Scalar::one())]
                    })
                    .collect();
                SparseMatrix::from_columns(dim, cols)
            })
            .collect::<Result<Vec<_>>>()?;
        let data = CurvedData {
            labels,
            degrees,
            mult,
            unit,
            nabla,
            iota: Vec::new(),
            weights: Vec::new(),
            group: grp,
            actions,
            theta: Vec::new(),
        };
        let omega = CurvedDGA::new(data)?;
        Ok(GroupoidOmega {
            h,
            theta: theta.clone(),
            weights: weights.clone(),
            action: action.clone(),
            aux: aux.clone(),
            omega,
        })
    }

    /// The bundle gerbe of an action groupoid with counting Haar weights.
    pub fn from_gerbe(gb: &BundleGerbe, aux: &GradedAlgebra) -> Result<GroupoidOmega> {
        GroupoidOmega::new(
            gb.cocycle(),
            &HaarWeights::counting(gb.h1()),
            gb.action(),
            aux,
        )
    }

    pub fn omega(&self) -> &CurvedDGA {
        &self.omega
    }

    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.h
    }

    pub fn aux(&self) -> &GradedAlgebra {
        &self.aux
    }

    /// Index of `delta_a (x) lambda_l`.
    pub fn arrow_index(&self, a: usize, l: usize) -> usize {
        (self.h.objects() + a) * self.aux.dim() + l
    }

    /// Index of `1_x (x) lambda_l`.
    pub fn object_index(&self, x: usize, l: usize) -> usize {
        x * self.aux.dim() + l
    }

    /// Basis of `C(H, L) (x) Lambda^0`.
    pub fn algebra_indices(&self) -> Vec<usize> {
        let zero: Vec<usize> = (0..self.aux.dim())
            .filter(|&l| self.aux.degree(l) == 0)
            .collect();
        (0..self.h.arrows())
            .flat_map(|a| zero.iter().map(move |&l| (a, l)))
            .map(|(a, l)| self.arrow_index(a, l))
            .collect()
    }

    /// `H_1^g`: arrows `gamma` with `s(gamma) = t(gamma) . g^-1`.
    pub fn loops(&self, g: usize) -> Vec<usize> {
        let gi = self.action.group().inv(g);
        (0..self.h.arrows())
            .filter(|&c| self.h.source(c) == self.action.act_object(self.h.target(c), gi))
            .collect()
    }

    /// `Tr_g` into `Fun(H_1^g) (x) Lambda`:
    /// `(Tr_g delta_beta)_gamma = sum_h w(h) theta(h, beta) theta(h beta, h'^-1) / theta(h', h'^-1)`
    /// over `h` with `t(h) = t(gamma)`, `h' = h . g^-1`, `h^-1 gamma h' = beta`; zero on `Fun(H_0)`.
    pub fn trace(&self, g: usize) -> Result<TraceData> {
        let grp = self.action.group();
        if g >= grp.order() {
            return Err(Error::InvalidStructure(format!("no group element {g}")));
        }
        let gi = grp.inv(g);
        let loops = self.loops(g);
        let dl = self.aux.dim();
        let names: Vec<String> = loops.iter().map(|&c| self.h.label(c).to_string()).collect();
        let target = self.aux.copies(&names);
        let mut triplets = Vec::new();
        for (li, &gamma) in loops.iter().enumerate() {
            for h in self.h.arrows_into(self.h.target(gamma)) {
                let hp = self.action.act(h, gi);
                let hpi = self.h.inverse(hp);
                let beta = self.h.mul(self.h.mul(self.h.inverse(h), gamma), hp);
                let hb = self.h.mul(h, beta);
                let e = self.theta.exponent(h, beta) + self.theta.exponent(hb, hpi)
                    - self.theta.exponent(hp, hpi);
                let c = self.weights.weight(h) * &Scalar::root_of_unity(self.theta.order(), e);
                for l in 0..dl {
                    triplets.push((li * dl + l, self.arrow_index(beta, l), c.clone()));
                }
            }
        }
        let trace = sum_triplets(target.dim(), self.omega.dim(), triplets)?;
        Ok(TraceData {
            target,
            trace,
            g,
            omega_image: Vec::new(),
            eta_images: Vec::new(),
            convention: "Tr(w1 w2) = (-1)^{|w1||w2|} Tr((g^-1 . w2) w1), with k . delta_a = delta_{a . k^-1}".into(),
        })
    }

    /// `phi_h`: target of `Tr_g` to target of `Tr_{h^-1 g h}`, `gamma (x) l -> (gamma . h) (x) l`.
    pub fn conjugation_map(&self, g: usize, h: usize) -> Result<SparseMatrix> {
        let grp = self.action.group();
        let g2 = grp.mul(grp.mul(grp.inv(h), g), h);
        let from = self.loops(g);
        let to = self.loops(g2);
        let dl = self.aux.dim();
        let pos: HashMap<usize, usize> = to.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut cols = Vec::new();
        for &c in &from {
            let j = *pos
                .get(&self.action.act(c, h))
                .ok_or_else(|| Error::InvalidStructure("conjugate loop missing".into()))?;
            for l in 0..dl {
                cols.push(vec![(j * dl + l, Scalar::one())]);
            }
        }
        SparseMatrix::from_columns(to.len() * dl, cols)
    }

    pub fn fixture(&self, name: &str, g: usize) -> Result<HkrFixture> {
        HkrFixture::new(
            name,
            self.omega.clone(),
            self.trace(g)?,
            self.algebra_indices(),
            0,
        )
    }
}

fn sum_triplets(
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, Scalar)>,
) -> Result<SparseMatrix> {
    let mut by_col: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); cols];
    for (r, c, v) in triplets {
        by_col[c].push((r, v));
    }
    SparseMatrix::from_columns(rows, by_col.into_iter().map(collect_sparse).collect())
}

/// `Lambda(f) (x) Q[z] / (z^2, z f)` with `dz = f`: a contractible model with a nonconstant
/// degree-0 element.
pub fn fat_point() -> Result<GradedAlgebra> {
    let mut m = CDGAModel::new(
        vec![
            Generator {
                name: "z".into(),
                degree: 0,
                nilpotency: Some(2),
            },
            Generator {
                name: "f".into(),
                degree: 1,
                nilpotency: None,
            },
        ],
        &["z*f"],
        0,
    )?;
    m.set_differential("z", "f")?;
    Ok(m.algebra().clone())
}

/// Flat fixture on the bundle gerbe of `theta` over a cover, with auxiliary model [`fat_point`].
pub fn flat_fixture(
    base: &ActionGroupoid,
    theta: &ExtensionCocycle,
    cover: &[usize],
) -> Result<GroupoidOmega> {
    let gb = BundleGerbe::new(base, theta, cover)?;
    GroupoidOmega::from_gerbe(&gb, &fat_point()?)
}

/// `M_n(Lambda)` with `nabla = d + [A, .]` for a degree-1 connection form `A` given by
/// `(row, column, expression)` entries, `iota` entrywise, `Theta = dA + A^2`, and torus
/// weights read off the diagonal operator `nabla iota + iota nabla`.
pub fn matrix_data(
    model: &CDGAModel,
    size: usize,
    connection: &[(usize, usize, &str)],
) -> Result<CurvedData> {
    let lam = model.algebra();
    if size < 1 {
        return Err(Error::InvalidStructure(
            "matrix size must be positive".into(),
        ));
    }
    let bad = lam.validate();
    if !bad.is_empty() {
        return Err(Error::InvalidStructure(bad.join("; ")));
    }
    let dl = lam.dim();
    let s = size;
    let dim = s * s * dl;
    let idx = |i: usize, j: usize, l: usize| (i * s + j) * dl + l;
    let mut mult = vec![Vec::new(); dim * dim];
    for i in 0..s {
        for j in 0..s {
            for k in 0..s {
                for l in 0..dl {
                    for m in 0..dl {
                        mult[idx(i, j, l) * dim + idx(j, k, m)] = lam
                            .mul_basis(l, m)
                            .iter()
                            .map(|(q, v)| (idx(i, k, *q), v.clone()))
                            .collect();
                    }
                }
            }
        }
    }
    let labels: Vec<String> = (0..dim)
        .map(|x| {
            format!(
                "E{}{}*{}",
                x / dl / s + 1,
                (x / dl) % s + 1,
                lam.label(x % dl)
            )
        })
        .collect();
    let degrees: Vec<i32> = (0..dim).map(|x| lam.degree(x % dl)).collect();
    let mut items = Vec::new();
    for (i, j, e) in connection {
        if *i >= s || *j >= s {
            return Err(Error::InvalidStructure(format!(
                "connection entry ({i}, {j}) outside the matrix"
            )));
        }
        for (l, v) in model.parse(e)? {
            items.push((idx(*i, *j, l), v));
        }
    }
    let conn = collect_sparse(items);
    let unit: SparseVec = (0..s)
        .flat_map(|i| {
            lam.unit()
                .iter()
                .map(move |(l, v)| (idx(i, i, *l), v.clone()))
        })
        .collect();
    let pre = CurvedData {
        labels,
        degrees: degrees.clone(),
        mult,
        unit,
        nabla: SparseMatrix::zeros(dim, dim),
        iota: Vec::new(),
        weights: Vec::new(),
        group: FiniteGroup::trivial(),
        actions: vec![SparseMatrix::identity(dim)],
        theta: Vec::new(),
    };
    if !conn.is_empty() && pre.degree_of(&conn) != Some(1) {
        return Err(Error::InvalidStructure(
            "connection form must have degree 1".into(),
        ));
    }
    let entrywise = |m: &SparseMatrix| -> Result<SparseMatrix> {
        SparseMatrix::from_columns(
            dim,
            (0..dim)
                .map(|x| {
                    m.column(x % dl)
                        .iter()
                        .map(|(q, v)| ((x / dl) * dl + q, v.clone()))
                        .collect()
                })
                .collect(),
        )
    };
    let d = entrywise(lam.d())?;
    let nabla_cols = (0..dim)
        .map(|x| {
            let e = basis_vec(x);
            let comm = axpy(
                &pre.mul(&conn, &e),
                &-sign(degrees[x] % 2 != 0),
                &pre.mul(&e, &conn),
            );
            axpy(d.column(x), &Scalar::one(), &comm)
        })
        .collect();
    let nabla = SparseMatrix::from_columns(dim, nabla_cols)?;
    let theta = axpy(&d.apply(&conn), &Scalar::one(), &pre.mul(&conn, &conn));
    let iota = (0..lam.rank())
        .map(|k| entrywise(lam.iota(k)))
        .collect::<Result<Vec<_>>>()?;
    // Off-diagonal or non-integer parts are left for validation to report.
    let mut weights = Vec::new();
    for io in &iota {
        let l = nabla.mul(io)?.add(&io.mul(&nabla)?)?;
        let w = (0..dim)
            .map(|x| {
                l.column(x)
                    .iter()
                    .find(|(y, _)| *y == x)
                    .and_then(|(_, c)| c.as_rational())
                    .filter(|r| r.numer_denom().1 == 1.into())
                    .and_then(|r| i64::try_from(r.numer_denom().0).ok())
                    .unwrap_or(0)
            })
            .collect();
        weights.push(w);
    }
    Ok(CurvedData {
        nabla,
        iota,
        weights,
        theta,
        ..pre
    })
}

fn curved_model() -> Result<CDGAModel> {
    let gens = [
        ("e", 1, None),
        ("f", 1, None),
        ("y", 1, None),
        ("w", 1, None),
        ("z", 0, Some(2)),
    ];
    let mut model = CDGAModel::new(
        gens.iter()
            .map(|(n, d, p)| Generator {
                name: n.to_string(),
                degree: *d,
                nilpotency: *p,
            })
            .collect(),
        &["z*f"],
        1,
    )?;
    model.set_differential("z", "-f")?;
    model.set_differential("y", "e*f")?;
    model.set_contraction(0, "e", "1")?;
    model.set_contraction(0, "y", "z")?;
    Ok(model)
}

/// Matrix-valued curved fixture `M_n(Lambda)` with one torus coordinate.
///
/// `Lambda = Lambda(e, f, y, w) (x) Q[z]/(z^2, z f)` with `de = df = dw = 0`, `dz = -f`,
/// `dy = e f`, `iota e = 1`, `iota y = z`. The connection form is
/// `A = y I + e K + f E_12 + w E_21` with `K = diag(0, .., 0, 1)`, so
/// `Theta = dA + A^2 = e f I + f w [E_12, E_21]`, `iota Theta = f I`, and `L = [K, .]`.
/// With `planted`, `y` multiplies `K` instead of `I`, which makes `iota Theta` non-central.
pub fn curved_matrix_data(size: usize, planted: bool) -> Result<(CurvedData, GradedAlgebra)> {
    if size < 2 {
        return Err(Error::InvalidStructure(
            "matrix size must be at least 2".into(),
        ));
    }
    let model = curved_model()?;
    let last = size - 1;
    let mut a: Vec<(usize, usize, &str)> = Vec::new();
    if planted {
        a.push((last, last, "y"));
    } else {
        a.extend((0..size).map(|i| (i, i, "y")));
    }
    a.extend([(last, last, "e"), (0, 1, "f"), (1, 0, "w")]);
    Ok((matrix_data(&model, size, &a)?, model.algebra().clone()))
}

/// A matrix algebra over `model` with the matrix trace into `model`; `A = Omega^0`.
pub fn matrix_fixture(
    name: &str,
    model: &CDGAModel,
    size: usize,
    connection: &[(usize, usize, &str)],
    truncation: usize,
) -> Result<HkrFixture> {
    let omega = CurvedDGA::new(matrix_data(model, size, connection)?)?;
    let lam = model.algebra().clone();
    let dl = lam.dim();
    let dim = omega.dim();
    let s = size;
    let cols = (0..dim)
        .map(|x| {
            if (x / dl) / s == (x / dl) % s {
                vec![(x % dl, Scalar::one())]
            } else {
                Vec::new()
            }
        })
        .collect();
    let trace = SparseMatrix::from_columns(dl, cols)?;
    let inv = Scalar::from_ratio(1, s as i64);
    let omega_image = scale(&trace.apply(omega.omega()), &inv);
    let eta_images = (0..omega.rank())
        .map(|a| scale(&trace.apply(omega.eta(a)), &inv))
        .collect();
    let td = TraceData {
        target: lam,
        trace,
        g: 0,
        omega_image,
        eta_images,
        convention: "matrix trace, g = e".into(),
    };
    let algebra = (0..dim).filter(|&x| omega.degree(x) == 0).collect();
    HkrFixture::new(name, omega, td, algebra, truncation)
}

/// The curved matrix fixture.
pub fn curved_fixture(size: usize, truncation: usize) -> Result<HkrFixture> {
    if size < 2 {
        return Err(Error::InvalidStructure(
            "matrix size must be at least 2".into(),
        ));
    }
    let last = size - 1;
    let mut a: Vec<(usize, usize, &str)> = (0..size).map(|i| (i, i, "y")).collect();
    a.extend([(last, last, "e"), (0, 1, "f"), (1, 0, "w")]);
    matrix_fixture("curved-matrix", &curved_model()?, size, &a, truncation)
}

/// Per-sector data of [`tau_family`].
#[derive(Clone, Debug, Serialize)]
pub struct SectorTrace {
    pub g: String,
    pub loops: usize,
    /// `M^g` is empty, so `Tr_g` is the zero map.
    pub empty: bool,
    /// Rank of `Tr_g` on the centralizer-invariant part of `A`.
    pub invariant_trace_rank: usize,
    /// Invariant sections of the transgressed line family.
    pub transgressed_invariants: usize,
    pub trace_failures: Vec<String>,
    /// `tau_g` vanishes on the sampled chains of degree at least one.
    pub higher_degrees_vanish: bool,
}

/// Family of `tau_g` over class representatives with the covariance check.
#[derive(Clone, Debug, Serialize)]
pub struct TauFamily {
    pub sectors: Vec<SectorTrace>,
    pub covariance_checks: usize,
    pub covariance_failures: Vec<String>,
}

impl TauFamily {
    pub fn ok(&self) -> bool {
        self.covariance_failures.is_empty()
            && self.sectors.iter().all(|s| {
                s.trace_failures.is_empty()
                    && s.higher_degrees_vanish
                    && s.invariant_trace_rank == s.transgressed_invariants
            })
    }
}

/// `tau_g` for the bundle gerbe of `theta` over `cover` with no auxiliary forms, one sector per
/// conjugacy class, and `phi_h tau_g = tau_{h^-1 g h}` on `trials` random chains per pair.
pub fn tau_family(
    base: &ActionGroupoid,
    theta: &ExtensionCocycle,
    cover: &[usize],
    trials: usize,
    seed: u64,
) -> Result<TauFamily> {
    let gb = BundleGerbe::new(base, theta, cover)?;
    let point = CDGAModel::point(0).algebra().clone();
    let go = GroupoidOmega::from_gerbe(&gb, &point)?;
    let grp = base.group().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixtures: Vec<HkrFixture> = (0..grp.order())
        .map(|g| go.fixture(&format!("sector {}", grp.name(g)), g))
        .collect::<Result<_>>()?;
    let mut sectors = Vec::new();
    let mut covariance_failures = Vec::new();
    let mut covariance_checks = 0;
    for g in grp.class_representatives() {
        let f = &fixtures[g];
        let td = go.trace(g)?;
        let cent = grp.centralizer(g);
        let alg = go.algebra_indices();
        let mut cols = Vec::new();
        for &a in &alg {
            let avg = collect_sparse(
                cent.iter()
                    .flat_map(|&h| go.omega().action(h).column(a).to_vec()),
            );
            cols.push(td.trace.apply(&avg));
        }
        let rank = SparseMatrix::from_columns(td.target.dim(), cols)?.rank();
        let fam = transgress(base, theta, g)?;
        let mut vanish = true;
        for k in 1..=2 {
            for _ in 0..trials.min(10) {
                let c = f.random_invariant_chain(&mut rng, k);
                if !f.tau(&c).is_zero() {
                    vanish = false;
                }
            }
        }
        for h in 0..grp.order() {
            let g2 = grp.mul(grp.mul(grp.inv(h), g), h);
            let phi = go.conjugation_map(g, h)?;
            for t in 0..trials {
                let c = f.random_invariant_chain(&mut rng, t % 3);
                let moved = f.act_chain(grp.inv(h), &c);
                let lhs = fixtures[g2].tau(&moved);
                let rhs = f.tau(&c).map_model(&phi);
                covariance_checks += 1;
                if lhs != rhs {
                    push_msg(
                        &mut covariance_failures,
                        format!(
                            "g = {}, h = {}: {}",
                            grp.name(g),
                            grp.name(h),
                            c.display(go.omega())
                        ),
                    );
                }
            }
        }
        sectors.push(SectorTrace {
            g: grp.name(g).to_string(),
            loops: go.loops(g).len(),
            empty: go.loops(g).is_empty(),
            invariant_trace_rank: rank,
            transgressed_invariants: fam.invariant_sections(),
            trace_failures: td.failures(go.omega()),
            higher_degrees_vanish: vanish,
        });
    }
    Ok(TauFamily {
        sectors,
        covariance_checks,
        covariance_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::klein_four_cocycle;
    use crate::groupoid::GroupAction;

    fn k4_point(twisted: bool) -> (ActionGroupoid, ExtensionCocycle) {
        let base = ActionGroupoid::new(GroupAction::trivial(FiniteGroup::klein_four(), 1));
        let th = if twisted {
            klein_four_cocycle(base.groupoid())
        } else {
            ExtensionCocycle::trivial(base.groupoid())
        };
        (base, th)
    }

    #[test]
    fn simplex_values() {
        assert_eq!(simplex_integrate(&[]), Rational::one());
        assert_eq!(simplex_integrate(&[0, 0]), Rational::new(1, 2));
        assert_eq!(simplex_integrate(&[1, 0]), Rational::new(1, 6));
        assert_eq!(simplex_integrate(&[0, 0, 0]), Rational::new(1, 6));
    }

    #[test]
    fn flat_trace_laws_hold_exhaustively() {
        for twisted in [false, true] {
            let (base, th) = k4_point(twisted);
            let go = flat_fixture(&base, &th, &[0]).unwrap();
            for g in 0..4 {
                let td = go.trace(g).unwrap();
                assert!(
                    td.failures(go.omega()).is_empty(),
                    "g = {g}: {:?}",
                    td.failures(go.omega())
                );
            }
        }
    }

    #[test]
    fn flat_chain_map_k4() {
        let (base, th) = k4_point(true);
        let go = flat_fixture(&base, &th, &[0]).unwrap();
        for g in 0..4 {
            let f = go.fixture("k4", g).unwrap();
            let rep = verify_chain_map(&f, 30, 7 + g as u64, 3);
            assert!(rep.ok(), "{rep:?}");
        }
    }

    #[test]
    fn curved_fixture_validates_and_derivative_formula_holds() {
        let f = curved_fixture(3, 3).unwrap();
        assert!(!f.omega().theta().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = f.algebra()[rng.gen_range(0..f.algebra().len())];
            assert!(f.derivative_failures(&basis_vec(a)).is_empty());
        }
    }

    #[test]
    fn curved_chain_map() {
        let f = curved_fixture(3, 3).unwrap();
        let rep = verify_chain_map(&f, 40, 11, 3);
        assert!(rep.ok(), "{rep:?}");
    }

    #[test]
    fn planted_non_central_rejected() {
        let (data, _) = curved_matrix_data(3, true).unwrap();
        assert!(matches!(CurvedDGA::new(data), Err(Error::NotCentral(_))));
    }

    #[test]
    fn tau_family_k4() {
        for twisted in [false, true] {
            let (base, th) = k4_point(twisted);
            let fam = tau_family(&base, &th, &[0], 3, 5).unwrap();
            assert!(fam.ok(), "{fam:?}");
        }
    }
}
