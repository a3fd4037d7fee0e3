//! Exact scalars: rationals and elements of cyclotomic fields `Q(zeta_n)`.
//!
//! A [`Scalar`] stores its coefficients in the power basis `1, z, .., z^(phi(n)-1)`
//! of `Q(zeta_n)` where `z = exp(2 pi i / n)`. Operands with different orders are
//! embedded into the field of the least common multiple.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

/// Exact rational with an `i64` fast path.
#[derive(Clone, Debug)]
pub enum Rational {
    /// Reduced fraction with positive denominator.
    Small(i64, i64),
    Big(BigRational),
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Rational {
        assert!(den != 0, "zero denominator");
        Rational::from_i128(num as i128, den as i128)
    }

    pub fn from_int(n: i64) -> Rational {
        Rational::Small(n, 1)
    }

    fn from_i128(num: i128, den: i128) -> Rational {
        let (mut n, mut d) = (num, den);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd_i128(n, d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        if n == 0 {
            return Rational::Small(0, 1);
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Rational::Small(a, b),
            _ => Rational::Big(BigRational::new(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn from_big(r: BigRational) -> Rational {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(a), Some(b)) => Rational::Small(a, b),
            _ => Rational::Big(r),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(a, b) => BigRational::new_raw(BigInt::from(*a), BigInt::from(*b)),
            Rational::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rational::Small(a, _) => *a == 0,
            Rational::Big(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Rational::Small(a, b) => *a == 1 && *b == 1,
            Rational::Big(r) => r.is_one(),
        }
    }

    pub fn zero() -> Rational {
        Rational::Small(0, 1)
    }

    pub fn one() -> Rational {
        Rational::Small(1, 1)
    }

    pub fn recip(&self) -> Rational {
        match self {
            Rational::Small(a, b) => {
                assert!(*a != 0, "division by zero");
                Rational::from_i128(*b as i128, *a as i128)
            }
            Rational::Big(r) => Rational::from_big(r.recip()),
        }
    }

    pub fn numer_denom(&self) -> (BigInt, BigInt) {
        let r = self.to_big();
        (r.numer().clone(), r.denom().clone())
    }

    pub fn parse(s: &str) -> Option<Rational> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::from_big(BigRational::new(n, d)))
        } else {
            let n: BigInt = s.parse().ok()?;
            Some(Rational::from_big(BigRational::from_integer(n)))
        }
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Rational) -> bool {
        match (self, other) {
            (Rational::Small(a, b), Rational::Small(c, d)) => a == c && b == d,
            _ => self.to_big() == other.to_big(),
        }
    }
}
impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Rational {
    fn cmp(&self, other: &Rational) -> Ordering {
        match (self, other) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, o: &Rational) -> Rational {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    if let Some(s) = a.checked_add(*c) {
                        return Rational::Small(s, 1);
                    }
                }
                let n = (*a as i128) * (*d as i128) + (*c as i128) * (*b as i128);
                let den = (*b as i128) * (*d as i128);
                Rational::from_i128(n, den)
            }
            _ => Rational::from_big(self.to_big() + o.to_big()),
        }
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, o: &Rational) -> Rational {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    if let Some(s) = a.checked_mul(*c) {
                        return Rational::Small(s, 1);
                    }
                }
                Rational::from_i128((*a as i128) * (*c as i128), (*b as i128) * (*d as i128))
            }
            _ => Rational::from_big(self.to_big() * o.to_big()),
        }
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self {
            Rational::Small(a, b) => match a.checked_neg() {
                Some(n) => Rational::Small(n, *b),
                None => Rational::from_big(-self.to_big()),
            },
            Rational::Big(r) => Rational::from_big(-r),
        }
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, o: &Rational) -> Rational {
        self + &(-o)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(a, 1) => write!(f, "{a}"),
            Rational::Small(a, b) => write!(f, "{a}/{b}"),
            Rational::Big(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

type Coeffs = SmallVec<[Rational; 2]>;

/// Euler totient.
pub fn totient(n: u32) -> u32 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u32
}

fn cyclotomic_table() -> &'static Mutex<HashMap<u32, Vec<i64>>> {
    static T: OnceLock<Mutex<HashMap<u32, Vec<i64>>>> = OnceLock::new();
    T.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Integer coefficients (low degree first) of the cyclotomic polynomial `Phi_n`.
pub fn cyclotomic_polynomial(n: u32) -> Vec<i64> {
    assert!(n >= 1);
    if let Some(p) = cyclotomic_table().lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Phi_d for all proper divisors d.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            let den = cyclotomic_polynomial(d);
            num = poly_exact_div(&num, &den);
        }
    }
    cyclotomic_table().lock().unwrap().insert(n, num.clone());
    num
}

fn poly_exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    let lead = *den.last().unwrap();
    let mut q = vec![0i64; r.len() - dd];
    for i in (0..q.len()).rev() {
        let c = r[i + dd] / lead;
        q[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            r[i + j] -= c * dj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Element of `Q(zeta_order)` in the power basis.
#[derive(Clone, Debug)]
pub struct Scalar {
    order: u32,
    coeffs: Coeffs,
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar {
            order: 1,
            coeffs: smallvec::smallvec![Rational::zero()],
        }
    }

    pub fn one() -> Scalar {
        Scalar::from_rational(Rational::one())
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::from_rational(Rational::from_int(n))
    }

    pub fn from_ratio(num: i64, den: i64) -> Scalar {
        Scalar::from_rational(Rational::new(num, den))
    }

    pub fn from_rational(r: Rational) -> Scalar {
        Scalar {
            order: 1,
            coeffs: smallvec::smallvec![r],
        }
    }

    /// Builds an element of `Q(zeta_order)` from power-basis coefficients.
    /// Coefficients beyond `phi(order)` are reduced modulo the cyclotomic polynomial.
    pub fn from_coeffs(order: u32, coeffs: Vec<Rational>) -> Scalar {
        assert!(order >= 1, "field order must be positive");
        if canonical_order(order) != order {
            let mut acc = Scalar::zero();
            for (i, c) in coeffs.into_iter().enumerate() {
                if !c.is_zero() {
                    acc += &Scalar::root_of_unity(order, i as i64).scale(&c);
                }
            }
            return acc;
        }
        Scalar::from_canonical(order, coeffs)
    }

    fn from_canonical(order: u32, coeffs: Vec<Rational>) -> Scalar {
        let mut s = Scalar {
            order,
            coeffs: coeffs.into_iter().collect(),
        };
        if s.coeffs.is_empty() {
            s.coeffs.push(Rational::zero());
        }
        s.reduce();
        s
    }

    /// `zeta_n^k`.
    pub fn root_of_unity(n: u32, k: i64) -> Scalar {
        assert!(n >= 1, "root of unity of order 0");
        let e = k.rem_euclid(n as i64) as usize;
        let order = canonical_order(n);
        if order != n {
            // n = 2m with m odd: zeta_n = -zeta_m^((m+1)/2).
            let m = order as i64;
            let base = Scalar::root_of_unity(order, (m + 1) / 2 * e as i64);
            return if e % 2 == 1 { -&base } else { base };
        }
        let mut c: Vec<Rational> = vec![Rational::zero(); e + 1];
        c[e] = Rational::one();
        Scalar::from_canonical(order, c)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// The rational value if this element lies in `Q`.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn reduce(&mut self) {
        let phi = totient(self.order) as usize;
        if self.coeffs.len() > phi {
            let p = cyclotomic_polynomial(self.order);
            for i in (phi..self.coeffs.len()).rev() {
                let c = std::mem::replace(&mut self.coeffs[i], Rational::zero());
                if c.is_zero() {
                    continue;
                }
                // x^i = x^(i-phi) * x^phi, and x^phi = -sum p_j x^j.
                for (j, &pj) in p.iter().enumerate().take(phi) {
                    if pj != 0 {
                        let t = &c * &Rational::from_int(pj);
                        let idx = i - phi + j;
                        self.coeffs[idx] = &self.coeffs[idx] - &t;
                    }
                }
            }
            self.coeffs.truncate(phi);
        }
        while self.coeffs.len() < phi {
            self.coeffs.push(Rational::zero());
        }
    }

    /// Re-expresses `self` in `Q(zeta_n)`; `self.order` must divide `n`.
    pub fn embed(&self, n: u32) -> Scalar {
        let n = canonical_order(n);
        if n == self.order {
            return self.clone();
        }
        assert!(
            n.is_multiple_of(self.order),
            "cannot embed Q(zeta_{}) into Q(zeta_{})",
            self.order,
            n
        );
        let step = (n / self.order) as usize;
        let mut c = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            c[i * step] = a.clone();
        }
        Scalar::from_canonical(n, c)
    }

    fn common(a: &Scalar, b: &Scalar) -> u32 {
        if a.order == b.order {
            a.order
        } else {
            canonical_order(a.order.lcm(&b.order))
        }
    }

    /// Galois conjugate `zeta -> zeta^j`.
    pub fn galois(&self, j: u32) -> Scalar {
        let n = self.order;
        assert!(j.gcd(&n) == 1);
        let mut c = vec![Rational::zero(); n as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            let idx = (i * j as usize) % n as usize;
            c[idx] = &c[idx] + a;
        }
        Scalar::from_canonical(n, c)
    }

    pub fn inv(&self) -> Scalar {
        assert!(!self.is_zero(), "division by zero");
        if self.order <= 2 || self.as_rational().is_some() {
            return Scalar::from_rational(self.coeffs[0].recip()).embed(self.order);
        }
        let n = self.order;
        let mut prod = Scalar::one();
        for j in 2..n {
            if j.gcd(&n) == 1 {
                prod = &prod * &self.galois(j);
            }
        }
        let norm = &prod * self;
        let r = norm.as_rational().expect("norm is rational").recip();
        prod.scale(&r)
    }

    pub fn scale(&self, r: &Rational) -> Scalar {
        Scalar {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Smallest field order in which this element is representable, by trying divisors.
    pub fn minimal_order(&self) -> u32 {
        if self.as_rational().is_some() {
            return 1;
        }
        let n = self.order;
        let mut best = n;
        for d in 1..n {
            if n.is_multiple_of(d) && canonical_order(d) == d && d < best {
                // Test membership by the image of the embedding: coefficients must sit
                // on the lattice of the subfield basis.
                let cand = self.try_restrict(d);
                if let Some(c) = cand {
                    if c.embed(n) == *self {
                        best = d;
                    }
                }
            }
        }
        best
    }

    fn try_restrict(&self, d: u32) -> Option<Scalar> {
        let n = self.order;
        let step = (n / d) as usize;
        // Solve by linear algebra on the small embedding matrix.
        let phi_d = totient(d) as usize;
        let phi_n = self.coeffs.len();
        let mut rows: Vec<Vec<Rational>> = vec![vec![Rational::zero(); phi_d + 1]; phi_n];
        for j in 0..phi_d {
            let mut c = vec![Rational::zero(); j * step + 1];
            c[j * step] = Rational::one();
            let e = Scalar::from_coeffs(n, c);
            for i in 0..phi_n {
                rows[i][j] = e.coeffs[i].clone();
            }
        }
        for i in 0..phi_n {
            rows[i][phi_d] = self.coeffs[i].clone();
        }
        let sol = solve_small(rows, phi_d)?;
        Some(Scalar::from_coeffs(d, sol))
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut r = Scalar::one();
        for _ in 0..e {
            r = &r * self;
        }
        r
    }
}

fn solve_small(mut m: Vec<Vec<Rational>>, nvars: usize) -> Option<Vec<Rational>> {
    let rows = m.len();
    let mut piv_cols = Vec::new();
    let mut r = 0;
    for c in 0..nvars {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for k in 0..=nvars {
            m[r][k] = &m[r][k] * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for k in 0..=nvars {
                    let t = &f * &m[r][k];
                    m[i][k] = &m[i][k] - &t;
                }
            }
        }
        piv_cols.push(c);
        r += 1;
    }
    if (r..rows).any(|i| !m[i][nvars].is_zero()) {
        return None;
    }
    let mut sol = vec![Rational::zero(); nvars];
    for (i, &c) in piv_cols.iter().enumerate() {
        sol[c] = m[i][nvars].clone();
    }
    Some(sol)
}

/// `Q(zeta_2m) = Q(zeta_m)` for odd `m`; we store such fields with the odd order.
pub fn canonical_order(n: u32) -> u32 {
    if n.is_multiple_of(2) && (n / 2) % 2 == 1 {
        n / 2
    } else {
        n
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let n = Scalar::common(self, other);
        self.embed(n).coeffs == other.embed(n).coeffs
    }
}
impl Eq for Scalar {}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        if self.order == o.order {
            return Scalar {
                order: self.order,
                coeffs: self
                    .coeffs
                    .iter()
                    .zip(o.coeffs.iter())
                    .map(|(a, b)| a + b)
                    .collect(),
            };
        }
        let n = Scalar::common(self, o);
        &self.embed(n) + &o.embed(n)
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        if self.order == o.order {
            return Scalar {
                order: self.order,
                coeffs: self
                    .coeffs
                    .iter()
                    .zip(o.coeffs.iter())
                    .map(|(a, b)| a - b)
                    .collect(),
            };
        }
        let n = Scalar::common(self, o);
        &self.embed(n) - &o.embed(n)
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        if self.order != o.order {
            let n = Scalar::common(self, o);
            return &self.embed(n) * &o.embed(n);
        }
        if self.coeffs.len() == 1 {
            return Scalar {
                order: self.order,
                coeffs: smallvec::smallvec![&self.coeffs[0] * &o.coeffs[0]],
            };
        }
        let mut c = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    c[i + j] = &c[i + j] + &(a * b);
                }
            }
        }
        let mut s = Scalar {
            order: self.order,
            coeffs: c.into_iter().collect(),
        };
        s.reduce();
        s
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, o: &Scalar) -> Scalar {
        self * &o.inv()
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = &*self + o;
    }
}
impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = &*self - o;
    }
}
impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl Default for Scalar {
    fn default() -> Scalar {
        Scalar::zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_int(n)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{r}");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            match i {
                0 => write!(f, "{abs}")?,
                _ => {
                    if !abs.is_one() {
                        write!(f, "{abs}*")?;
                    }
                    if i == 1 {
                        write!(f, "z{}", self.order)?;
                    } else {
                        write!(f, "z{}^{}", self.order, i)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Scalar", 2)?;
        st.serialize_field("order", &self.order)?;
        let c: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        st.serialize_field("coeffs", &c)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            order: u32,
            coeffs: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.order == 0 {
            return Err(serde::de::Error::custom("order must be positive"));
        }
        let mut c = Vec::new();
        for s in &raw.coeffs {
            c.push(
                Rational::parse(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s}")))?,
            );
        }
        Ok(Scalar::from_coeffs(raw.order, c))
    }
}

/// Random small rational in `[-bound, bound]` with denominators up to `den`.
pub fn small_rational<R: rand::Rng>(rng: &mut R, bound: i64, den: i64) -> Rational {
    let d = rng.gen_range(1..=den);
    Rational::new(rng.gen_range(-bound * d..=bound * d), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_multiply() {
        for n in 1..=12u32 {
            let z = Scalar::root_of_unity(n, 1);
            assert!(z.pow(n).is_one(), "zeta_{n}^{n} != 1");
            for k in 1..n {
                if k < n {
                    let zk = Scalar::root_of_unity(n, k as i64);
                    assert_eq!(zk, z.pow(k));
                    if n % k == 0 || k == 1 {
                        assert!(!zk.is_one() || n == 1);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_in_q_zeta_5() {
        let a = Scalar::from_coeffs(
            5,
            vec![
                Rational::new(1, 2),
                Rational::from_int(3),
                Rational::zero(),
                Rational::from_int(-1),
            ],
        );
        let b = a.inv();
        assert!((&a * &b).is_one());
    }

    #[test]
    fn mixed_orders_embed() {
        let i = Scalar::root_of_unity(4, 1);
        let w = Scalar::root_of_unity(3, 1);
        let p = &i * &w;
        assert_eq!(p.order(), 12);
        assert_eq!(p, Scalar::root_of_unity(12, 7));
        assert_eq!(Scalar::root_of_unity(6, 1), Scalar::root_of_unity(12, 2));
        assert_eq!(Scalar::root_of_unity(2, 1), Scalar::from_int(-1));
    }

    #[test]
    fn rational_promotes_to_big() {
        let big = Rational::from_int(i64::MAX);
        let sq = &big * &big;
        assert!(matches!(sq, Rational::Big(_)));
        let back = &sq * &big.recip();
        assert_eq!(back, big);
    }
}
