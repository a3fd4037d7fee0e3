//! Rank computations modulo a prime with a root of unity.
//!
//! Reduction `Z[zeta_N] -> F_p` for `p = 1 mod N` is a ring map, so a nonzero minor mod `p`
//! is nonzero exactly; modular ranks are lower bounds and modular pivot columns are exactly
//! independent. Callers combine this with an exact upper bound to certify a rank.

use crate::linalg::SparseMatrix;
use crate::scalar::{Rational, Scalar};
use num_integer::Integer;
use num_traits::ToPrimitive;
use std::collections::BinaryHeap;

/// The field `F_p` together with a primitive `N`-th root of unity.
#[derive(Clone, Debug)]
pub struct PrimeField {
    p: u64,
    n: u32,
    zeta: u64,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

impl PrimeField {
    /// Largest prime below `2^31` that is `1 mod n`, with `zeta` of exact order `n`.
    pub fn for_order(n: u32) -> PrimeField {
        let n64 = n.max(1) as u64;
        let mut m = ((1u64 << 31) - 1) / n64;
        let p = loop {
            let p = m * n64 + 1;
            if p < (1u64 << 31) && is_prime(p) {
                break p;
            }
            m -= 1;
        };
        let mut factors = Vec::new();
        let mut r = p - 1;
        let mut d = 2;
        while d * d <= r {
            if r % d == 0 {
                factors.push(d);
                while r % d == 0 {
                    r /= d;
                }
            }
            d += 1;
        }
        if r > 1 {
            factors.push(r);
        }
        let g = (2..p)
            .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
            .expect("generator");
        PrimeField {
            p,
            n: n.max(1),
            zeta: pow_mod(g, (p - 1) / n64, p),
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn inv(&self, a: u64) -> u64 {
        pow_mod(a, self.p - 2, self.p)
    }

    fn rational(&self, r: &Rational) -> Option<u64> {
        let p = self.p as i128;
        let (n, d) = match r {
            Rational::Small(a, b) => ((*a as i128).rem_euclid(p), (*b as i128).rem_euclid(p)),
            Rational::Big(_) => {
                let (a, b) = r.numer_denom();
                let pb = num_bigint::BigInt::from(self.p);
                (a.mod_floor(&pb).to_i128()?, b.mod_floor(&pb).to_i128()?)
            }
        };
        if d == 0 {
            return None;
        }
        Some((n as u64) * self.inv(d as u64) % self.p)
    }

    /// Image of a scalar, or `None` if its order does not divide `N` or a denominator vanishes.
    pub fn image(&self, s: &Scalar) -> Option<u64> {
        let ord = s.order();
        if !self.n.is_multiple_of(ord) {
            return None;
        }
        let z = pow_mod(self.zeta, (self.n / ord) as u64, self.p);
        let mut acc = 0u64;
        let mut zi = 1u64;
        for c in s.coeffs() {
            acc = (acc + self.rational(c)? * zi) % self.p;
            zi = zi * z % self.p;
        }
        Some(acc)
    }

    /// Columns of `m` reduced mod `p`.
    pub fn reduce_matrix(&self, m: &SparseMatrix) -> Option<Vec<Vec<(usize, u64)>>> {
        (0..m.cols())
            .map(|j| {
                m.column(j)
                    .iter()
                    .map(|(i, v)| self.image(v).map(|x| (*i, x)))
                    .filter(|e| e.as_ref().is_none_or(|(_, x)| *x != 0))
                    .collect()
            })
            .collect()
    }

    /// Indices of the columns independent of all earlier ones, mod `p`.
    pub fn rank_profile(&self, rows: usize, columns: &[Vec<(usize, u64)>]) -> Vec<usize> {
        let p = self.p;
        let mut owner: Vec<Option<Vec<(usize, u64)>>> = vec![None; rows];
        let mut acc = vec![0u64; rows];
        let mut live = vec![false; rows];
        let mut heap: BinaryHeap<usize> = BinaryHeap::new();
        let mut piv = Vec::new();
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                acc[i] = v;
                live[i] = true;
                heap.push(i);
            }
            let mut found = None;
            while let Some(low) = heap.pop() {
                if !live[low] {
                    continue;
                }
                live[low] = false;
                let v = std::mem::take(&mut acc[low]);
                if v == 0 {
                    continue;
                }
                match &owner[low] {
                    Some(pc) => {
                        let c = p - v;
                        for &(i, x) in &pc[..pc.len() - 1] {
                            if !live[i] {
                                live[i] = true;
                                acc[i] = 0;
                                heap.push(i);
                            }
                            acc[i] = (acc[i] + c * x) % p;
                        }
                    }
                    None => {
                        found = Some((low, v));
                        break;
                    }
                }
            }
            if let Some((low, v)) = found {
                let inv = self.inv(v);
                let mut stored: Vec<(usize, u64)> = Vec::new();
                while let Some(i) = heap.pop() {
                    if live[i] {
                        live[i] = false;
                        let x = std::mem::take(&mut acc[i]);
                        if x != 0 {
                            stored.push((i, x * inv % p));
                        }
                    }
                }
                stored.sort_unstable_by_key(|e| e.0);
                stored.push((low, 1));
                owner[low] = Some(stored);
                piv.push(j);
            }
            heap.clear();
        }
        piv
    }

    pub fn rank(&self, rows: usize, columns: &[Vec<(usize, u64)>]) -> usize {
        self.rank_profile(rows, columns).len()
    }
}

/// Least common multiple of the orders of all entries.
pub fn common_order<'a>(entries: impl IntoIterator<Item = &'a Scalar>) -> u32 {
    entries.into_iter().fold(1u32, |n, s| n.lcm(&s.order()))
}
