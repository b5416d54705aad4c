//! Base rings and their digit-level arithmetic.
//!
//! The two supported complete discrete valuation fields are the p-adic
//! numbers (uniformizer p, digits carry) and Laurent series over a prime
//! field (uniformizer t, digit-wise arithmetic mod q). Both store a unit
//! part as a nonnegative big integer whose base-`b` digits are the series
//! coefficients, so the same scalar machinery drives both backends and only
//! the mantissa operations below differ.

use num::bigint::Sign;
use num::{BigInt, BigUint, Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RingKind {
    Padic,
    LaurentSeries,
}

/// A complete discrete valuation ring identified by its kind and residue
/// characteristic. `base` is the prime p for Q_p and the (prime) field size
/// q for F_q((t)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseRing {
    pub kind: RingKind,
    pub base: u64,
}

impl BaseRing {
    pub fn padic(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Invalid(format!("{p} is not prime")));
        }
        Ok(BaseRing { kind: RingKind::Padic, base: p })
    }

    pub fn laurent(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::Invalid(format!(
                "{q} is not prime (prime power residue fields are out of scope)"
            )));
        }
        Ok(BaseRing { kind: RingKind::LaurentSeries, base: q })
    }

    pub fn uniformizer_symbol(&self) -> &'static str {
        match self.kind {
            RingKind::Padic => "p",
            RingKind::LaurentSeries => "t",
        }
    }

    fn big_base(&self) -> BigInt {
        BigInt::from(self.base)
    }

    /// pi^k as a mantissa (digit 1 in position k for both backends).
    pub fn pi_pow(&self, k: u64) -> BigInt {
        self.big_base().pow(k as u32)
    }

    pub fn mant_add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self.kind {
            RingKind::Padic => a + b,
            RingKind::LaurentSeries => {
                self.from_digits(&zip_digits(&self.digits(a), &self.digits(b), |x, y| {
                    (x + y) % self.base
                }))
            }
        }
    }

    pub fn mant_sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self.kind {
            RingKind::Padic => a - b,
            RingKind::LaurentSeries => {
                self.from_digits(&zip_digits(&self.digits(a), &self.digits(b), |x, y| {
                    (self.base + x - y) % self.base
                }))
            }
        }
    }

    pub fn mant_neg(&self, a: &BigInt) -> BigInt {
        match self.kind {
            RingKind::Padic => -a,
            RingKind::LaurentSeries => self.mant_sub(&BigInt::zero(), a),
        }
    }

    pub fn mant_mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self.kind {
            RingKind::Padic => a * b,
            RingKind::LaurentSeries => {
                let da = self.digits(a);
                let db = self.digits(b);
                if da.is_empty() || db.is_empty() {
                    return BigInt::zero();
                }
                let mut out = vec![0u64; da.len() + db.len() - 1];
                for (i, &x) in da.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in db.iter().enumerate() {
                        out[i + j] = (out[i + j] + x * y) % self.base;
                    }
                }
                self.from_digits(&out)
            }
        }
    }

    /// Number of trailing zero digits, i.e. the pi-adic valuation of the
    /// mantissa. `None` for the zero mantissa.
    pub fn mant_val(&self, a: &BigInt) -> Option<u64> {
        if a.is_zero() {
            return None;
        }
        match self.kind {
            RingKind::Padic => {
                let mut v = 0u64;
                let mut m = a.magnitude().clone();
                let p = BigUint::from(self.base);
                // Strip blocks first to keep the loop count small for deep valuations.
                let p16 = p.pow(16);
                while (&m % &p16).is_zero() {
                    m /= &p16;
                    v += 16;
                }
                while (&m % &p).is_zero() {
                    m /= &p;
                    v += 1;
                }
                Some(v)
            }
            RingKind::LaurentSeries => {
                self.digits(a).iter().position(|&d| d != 0).map(|i| i as u64)
            }
        }
    }

    /// Multiply by pi^k.
    pub fn mant_shift(&self, a: &BigInt, k: u64) -> BigInt {
        if a.is_zero() {
            return BigInt::zero();
        }
        a * self.pi_pow(k)
    }

    /// Divide exactly by pi^k; the mantissa must have valuation >= k.
    pub fn mant_unshift(&self, a: &BigInt, k: u64) -> BigInt {
        if a.is_zero() {
            return BigInt::zero();
        }
        let (q, r) = a.div_rem(&self.pi_pow(k));
        debug_assert!(r.is_zero(), "mantissa not divisible by pi^{k}");
        q
    }

    /// Canonical residue modulo pi^k, with all digits in [0, base).
    pub fn mant_mod(&self, a: &BigInt, k: u64) -> BigInt {
        if k == 0 {
            return BigInt::zero();
        }
        match self.kind {
            RingKind::Padic => a.mod_floor(&self.pi_pow(k)),
            RingKind::LaurentSeries => {
                let mut d = self.digits(a);
                d.truncate(k as usize);
                self.from_digits(&d)
            }
        }
    }

    /// Inverse of a unit mantissa modulo pi^k. The constant digit must be
    /// nonzero.
    pub fn mant_inv_mod(&self, a: &BigInt, k: u64) -> Result<BigInt> {
        if k == 0 {
            return Ok(BigInt::zero());
        }
        match self.kind {
            RingKind::Padic => {
                let m = self.pi_pow(k);
                let e = a.extended_gcd(&m);
                if !e.gcd.is_one() {
                    return Err(Error::DivisionByZero);
                }
                Ok(e.x.mod_floor(&m))
            }
            RingKind::LaurentSeries => {
                let d = self.digits(a);
                let c0 = *d.first().unwrap_or(&0);
                if c0 == 0 {
                    return Err(Error::DivisionByZero);
                }
                let inv0 = inv_mod_u64(c0, self.base);
                // Power-series inversion digit by digit.
                let mut out = vec![0u64; k as usize];
                out[0] = inv0;
                for j in 1..k as usize {
                    let mut acc = 0u64;
                    for i in 1..=j {
                        let ai = *d.get(i).unwrap_or(&0);
                        acc = (acc + ai * out[j - i]) % self.base;
                    }
                    out[j] = (self.base - acc % self.base) % self.base * inv0 % self.base;
                }
                Ok(self.from_digits(&out))
            }
        }
    }

    /// Little-endian digit expansion of a nonnegative mantissa.
    pub fn digits(&self, a: &BigInt) -> Vec<u64> {
        debug_assert!(
            self.kind == RingKind::Padic || a.sign() != Sign::Minus,
            "laurent mantissas are stored nonnegative"
        );
        let mut m = a.magnitude().clone();
        let b = BigUint::from(self.base);
        let mut out = Vec::new();
        while !m.is_zero() {
            let (q, r) = m.div_rem(&b);
            out.push(r.to_u64_digits().first().copied().unwrap_or(0));
            m = q;
        }
        out
    }

    pub fn from_digits(&self, digits: &[u64]) -> BigInt {
        let mut acc = BigInt::zero();
        let b = self.big_base();
        for &d in digits.iter().rev() {
            acc = acc * &b + BigInt::from(d);
        }
        acc
    }

    /// Canonical mantissa of a small integer constant: the integer itself for
    /// Q_p, its image in the residue field for F_q((t)).
    pub fn mant_from_i64(&self, c: i64) -> BigInt {
        match self.kind {
            RingKind::Padic => BigInt::from(c),
            RingKind::LaurentSeries => {
                BigInt::from(c.rem_euclid(self.base as i64))
            }
        }
    }

    /// True if the mantissa is its own canonical residue mod pi^k.
    pub fn mant_is_reduced(&self, a: &BigInt, k: u64) -> bool {
        !a.is_negative() && *a == self.mant_mod(a, k)
    }
}

fn zip_digits(a: &[u64], b: &[u64], f: impl Fn(u64, u64) -> u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| f(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0)))
        .collect()
}

fn inv_mod_u64(a: u64, m: u64) -> u64 {
    // Extended Euclid over i128; m prime and a != 0 mod m.
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    s0.rem_euclid(m as i128) as u64
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}
