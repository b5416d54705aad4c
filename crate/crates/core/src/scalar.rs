//! Scalars of a complete discrete valuation field known at finite (or
//! infinite) absolute precision.
//!
//! A nonzero element is `pi^v * unit` where the unit part is stored as a
//! mantissa in the sense of [`BaseRing`]. Exact elements keep a rational
//! mantissa `num/den` (both units) so that inversion and exact Euclidean
//! division stay exact; inexact elements keep the canonical residue of the
//! unit modulo `pi^(N-v)`. The precision ball `0 + O(pi^N)` and the exact
//! zero are separate states: the former has unknown valuation `>= N`, the
//! latter has valuation `+inf`.

use num::{BigInt, One, Signed, Zero};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ring::{BaseRing, RingKind};

/// A valuation, possibly infinite (the valuation of exact zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

/// What is known about the valuation of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValInfo {
    /// Valuation known exactly.
    Known(i64),
    /// Element indistinguishable from zero: valuation at least this bound.
    AtLeast(i64),
    /// Exact zero.
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    ExactZero,
    /// pi^v * num/den with unit mantissas num, den.
    Exact { v: i64, num: BigInt, den: BigInt },
    /// pi^v * unit + O(pi^prec), unit reduced mod pi^(prec-v), v < prec.
    Ball { v: i64, unit: BigInt, prec: i64 },
    /// 0 + O(pi^prec).
    ZeroBall { prec: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    ring: BaseRing,
    repr: Repr,
}

impl PadicScalar {
    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn zero(ring: BaseRing) -> Self {
        PadicScalar { ring, repr: Repr::ExactZero }
    }

    pub fn one(ring: BaseRing) -> Self {
        Self::from_i64(ring, 1)
    }

    /// The exact image of an integer constant.
    pub fn from_i64(ring: BaseRing, c: i64) -> Self {
        Self::from_mantissa(ring, 0, ring.mant_from_i64(c))
    }

    /// Exact element pi^v * mantissa (mantissa need not be a unit; its
    /// valuation is folded into v).
    pub fn from_mantissa(ring: BaseRing, v: i64, mantissa: BigInt) -> Self {
        Self::make_exact(ring, v, mantissa, BigInt::one())
    }

    /// Exact element pi^v * num/den. `den` must be nonzero with unit part.
    pub fn from_ratio(ring: BaseRing, v: i64, num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if ring.mant_val(&den) != Some(0) {
            return Err(Error::Invalid("denominator mantissa must be a unit".into()));
        }
        Ok(Self::make_exact(ring, v, num, den))
    }

    /// The ball 0 + O(pi^prec).
    pub fn zero_ball(ring: BaseRing, prec: i64) -> Self {
        PadicScalar { ring, repr: Repr::ZeroBall { prec } }
    }

    /// pi^v * mantissa + O(pi^prec). The mantissa is interpreted modulo
    /// pi^(prec-v) and renormalized.
    pub fn from_residue(ring: BaseRing, v: i64, mantissa: BigInt, prec: i64) -> Self {
        Self::make_ball(ring, v, mantissa, prec)
    }

    /// Digits little-endian starting at index v, absolute precision prec
    /// (`None` = exact).
    pub fn from_digits(ring: BaseRing, v: i64, digits: &[u64], prec: Option<i64>) -> Self {
        let m = ring.from_digits(digits);
        match prec {
            None => Self::from_mantissa(ring, v, m),
            Some(n) => Self::make_ball(ring, v, m, n),
        }
    }

    fn make_exact(ring: BaseRing, v: i64, num: BigInt, den: BigInt) -> Self {
        if num.is_zero() {
            return PadicScalar { ring, repr: Repr::ExactZero };
        }
        let k = ring.mant_val(&num).expect("nonzero");
        let mut num = ring.mant_unshift(&num, k);
        let mut den = den;
        let v = v + k as i64;
        if ring.kind == RingKind::Padic {
            // Canonical fraction: positive denominator, reduced.
            if den.is_negative() {
                num = -num;
                den = -den;
            }
            let g = num::Integer::gcd(&num, &den);
            if !g.is_one() {
                num /= &g;
                den /= &g;
            }
        }
        PadicScalar { ring, repr: Repr::Exact { v, num, den } }
    }

    fn make_ball(ring: BaseRing, v: i64, mantissa: BigInt, prec: i64) -> Self {
        if v >= prec {
            return PadicScalar { ring, repr: Repr::ZeroBall { prec } };
        }
        let window = (prec - v) as u64;
        let m = ring.mant_mod(&mantissa, window);
        if m.is_zero() {
            return PadicScalar { ring, repr: Repr::ZeroBall { prec } };
        }
        let k = ring.mant_val(&m).expect("nonzero");
        let v = v + k as i64;
        if v >= prec {
            return PadicScalar { ring, repr: Repr::ZeroBall { prec } };
        }
        let unit = ring.mant_mod(&ring.mant_unshift(&m, k), (prec - v) as u64);
        PadicScalar { ring, repr: Repr::Ball { v, unit, prec } }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::ExactZero | Repr::Exact { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::ExactZero)
    }

    /// True for exact zero and for balls around zero: no nonzero digit is
    /// known.
    pub fn is_zeroish(&self) -> bool {
        matches!(self.repr, Repr::ExactZero | Repr::ZeroBall { .. })
    }

    /// Absolute precision; `None` means exact.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::ExactZero | Repr::Exact { .. } => None,
            Repr::Ball { prec, .. } | Repr::ZeroBall { prec } => Some(*prec),
        }
    }

    /// Relative precision N - v; `None` means exact.
    pub fn rel_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::ExactZero | Repr::Exact { .. } => None,
            Repr::Ball { v, prec, .. } => Some(prec - v),
            Repr::ZeroBall { .. } => Some(0),
        }
    }

    /// Valuation, failing on elements indistinguishable from zero.
    pub fn val(&self) -> Result<Valuation> {
        match &self.repr {
            Repr::ExactZero => Ok(Valuation::Infinite),
            Repr::Exact { v, .. } | Repr::Ball { v, .. } => Ok(Valuation::Finite(*v)),
            Repr::ZeroBall { prec } => Err(Error::IndistinguishableFromZero { bound: *prec }),
        }
    }

    pub fn val_info(&self) -> ValInfo {
        match &self.repr {
            Repr::ExactZero => ValInfo::Infinite,
            Repr::Exact { v, .. } | Repr::Ball { v, .. } => ValInfo::Known(*v),
            Repr::ZeroBall { prec } => ValInfo::AtLeast(*prec),
        }
    }

    fn same_ring(&self, other: &Self) {
        assert_eq!(self.ring, other.ring, "operands belong to different base rings");
    }

    /// Residue mantissa of self / pi^floor modulo pi^(n_abs - floor).
    /// Requires val(self) >= floor and enough stored precision.
    pub fn residue(&self, floor: i64, n_abs: i64) -> Result<BigInt> {
        if n_abs <= floor {
            return Ok(BigInt::zero());
        }
        let window = (n_abs - floor) as u64;
        match &self.repr {
            Repr::ExactZero => Ok(BigInt::zero()),
            Repr::Exact { v, num, den } => {
                if *v < floor {
                    return Err(Error::Invalid(format!(
                        "valuation {v} below requested floor {floor}"
                    )));
                }
                let inv = self.ring.mant_inv_mod(den, window)?;
                let m = self.ring.mant_mul(&self.ring.mant_mod(num, window), &inv);
                Ok(self
                    .ring
                    .mant_mod(&self.ring.mant_shift(&m, (*v - floor) as u64), window))
            }
            Repr::Ball { v, unit, prec } => {
                if *v < floor {
                    return Err(Error::Invalid(format!(
                        "valuation {v} below requested floor {floor}"
                    )));
                }
                if *prec < n_abs {
                    return Err(Error::InsufficientCap { cap: *prec });
                }
                Ok(self
                    .ring
                    .mant_mod(&self.ring.mant_shift(unit, (*v - floor) as u64), window))
            }
            Repr::ZeroBall { prec } => {
                if *prec < n_abs {
                    return Err(Error::InsufficientCap { cap: *prec });
                }
                Ok(BigInt::zero())
            }
        }
    }

    /// The stored center of the ball as an exact element (identity on exact
    /// elements).
    pub fn center(&self) -> Self {
        match &self.repr {
            Repr::ExactZero | Repr::Exact { .. } => self.clone(),
            Repr::Ball { v, unit, .. } => Self::from_mantissa(self.ring, *v, unit.clone()),
            Repr::ZeroBall { .. } => Self::zero(self.ring),
        }
    }

    /// Ball membership: does this precision set contain the given exact
    /// value?
    pub fn ball_contains(&self, value: &Self) -> bool {
        self.same_ring(value);
        let diff = &self.center() - value;
        match self.abs_prec() {
            None => diff.is_exact_zero(),
            Some(n) => match diff.val_info() {
                ValInfo::Infinite => true,
                ValInfo::Known(v) => v >= n,
                ValInfo::AtLeast(_) => unreachable!("difference of exacts is exact"),
            },
        }
    }

    /// Weaken to absolute precision at most n (adding O(pi^n)).
    pub fn truncate(&self, n: i64) -> Self {
        match &self.repr {
            Repr::ExactZero => Self::zero_ball(self.ring, n),
            Repr::Exact { v, num, den } => {
                if *v >= n {
                    return Self::zero_ball(self.ring, n);
                }
                let window = (n - v) as u64;
                let inv = self
                    .ring
                    .mant_inv_mod(den, window)
                    .expect("denominator is a unit");
                let m = self.ring.mant_mul(&self.ring.mant_mod(num, window), &inv);
                Self::make_ball(self.ring, *v, m, n)
            }
            Repr::Ball { v, unit, prec } => {
                if n >= *prec {
                    self.clone()
                } else {
                    Self::make_ball(self.ring, *v, unit.clone(), n)
                }
            }
            Repr::ZeroBall { prec } => Self::zero_ball(self.ring, n.min(*prec)),
        }
    }

    /// Multiply by pi^k: shifts valuation and absolute precision.
    pub fn shift(&self, k: i64) -> Self {
        let ring = self.ring;
        match &self.repr {
            Repr::ExactZero => self.clone(),
            Repr::Exact { v, num, den } => PadicScalar {
                ring,
                repr: Repr::Exact { v: v + k, num: num.clone(), den: den.clone() },
            },
            Repr::Ball { v, unit, prec } => PadicScalar {
                ring,
                repr: Repr::Ball { v: v + k, unit: unit.clone(), prec: prec + k },
            },
            Repr::ZeroBall { prec } => Self::zero_ball(ring, prec + k),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        let ring = self.ring;
        match &self.repr {
            Repr::ExactZero => Err(Error::DivisionByZero),
            Repr::ZeroBall { prec } => {
                Err(Error::IndistinguishableFromZero { bound: *prec })
            }
            Repr::Exact { v, num, den } => {
                Ok(Self::make_exact(ring, -v, den.clone(), num.clone()))
            }
            Repr::Ball { v, unit, prec } => {
                let rel = (prec - v) as u64;
                let inv = ring.mant_inv_mod(unit, rel)?;
                Ok(Self::make_ball(ring, -v, inv, rel as i64 - v))
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Haar-uniform residue modulo pi^n with absolute precision n.
    pub fn random_integral<R: Rng + ?Sized>(ring: BaseRing, n: i64, rng: &mut R) -> Self {
        assert!(n >= 1, "precision must be at least 1");
        let digits: Vec<u64> = (0..n).map(|_| rng.gen_range(0..ring.base)).collect();
        Self::from_digits(ring, 0, &digits, Some(n))
    }

    /// Little-endian digits of the known part, starting at the valuation.
    /// Empty for zero-like elements; `None` when the mantissa is not a plain
    /// digit polynomial (fractional or negative exact elements).
    pub fn known_digits(&self) -> Option<(i64, Vec<u64>)> {
        match &self.repr {
            Repr::ExactZero | Repr::ZeroBall { .. } => Some((0, Vec::new())),
            Repr::Exact { v, num, den } => {
                if den.is_one() && !num.is_negative() {
                    Some((*v, self.ring.digits(num)))
                } else {
                    None
                }
            }
            Repr::Ball { v, unit, .. } => Some((*v, self.ring.digits(unit))),
        }
    }

    fn exact_parts(&self) -> Option<(i64, BigInt, BigInt)> {
        match &self.repr {
            Repr::Exact { v, num, den } => Some((*v, num.clone(), den.clone())),
            Repr::ExactZero => None,
            _ => None,
        }
    }
}

fn add_impl(a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
    a.same_ring(b);
    let ring = a.ring;
    if a.is_exact_zero() {
        return b.clone();
    }
    if b.is_exact_zero() {
        return a.clone();
    }
    match (a.abs_prec(), b.abs_prec()) {
        (None, None) => {
            let (va, na, da) = a.exact_parts().expect("nonzero exact");
            let (vb, nb, db) = b.exact_parts().expect("nonzero exact");
            let v = va.min(vb);
            let ta = ring.mant_shift(&ring.mant_mul(&na, &db), (va - v) as u64);
            let tb = ring.mant_shift(&ring.mant_mul(&nb, &da), (vb - v) as u64);
            PadicScalar::make_exact(ring, v, ring.mant_add(&ta, &tb), ring.mant_mul(&da, &db))
        }
        (pa, pb) => {
            let n = match (pa, pb) {
                (Some(x), Some(y)) => x.min(y),
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => unreachable!(),
            };
            let floor = [a.val_info(), b.val_info()]
                .iter()
                .filter_map(|vi| match vi {
                    ValInfo::Known(v) => Some(*v),
                    _ => None,
                })
                .min()
                .unwrap_or(n)
                .min(n);
            let ra = a.truncate(n).residue(floor, n).expect("within window");
            let rb = b.truncate(n).residue(floor, n).expect("within window");
            PadicScalar::make_ball(ring, floor, ring.mant_add(&ra, &rb), n)
        }
    }
}

fn mul_impl(a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
    a.same_ring(b);
    let ring = a.ring;
    if a.is_exact_zero() || b.is_exact_zero() {
        return PadicScalar::zero(ring);
    }
    match (&a.repr, &b.repr) {
        (Repr::ZeroBall { prec: m }, other) | (other, Repr::ZeroBall { prec: m }) => {
            let bound = match other {
                Repr::ZeroBall { prec } => m + prec,
                Repr::Exact { v, .. } | Repr::Ball { v, .. } => m + v,
                Repr::ExactZero => unreachable!(),
            };
            PadicScalar::zero_ball(ring, bound)
        }
        (Repr::Exact { v: va, num: na, den: da }, Repr::Exact { v: vb, num: nb, den: db }) => {
            PadicScalar::make_exact(ring, va + vb, ring.mant_mul(na, nb), ring.mant_mul(da, db))
        }
        (Repr::Exact { v: ve, num, den }, Repr::Ball { v: vb, unit, prec })
        | (Repr::Ball { v: vb, unit, prec }, Repr::Exact { v: ve, num, den }) => {
            let rel = (prec - vb) as u64;
            let inv = ring.mant_inv_mod(den, rel).expect("denominator is a unit");
            let m = ring.mant_mul(&ring.mant_mul(&ring.mant_mod(num, rel), &inv), unit);
            PadicScalar::make_ball(ring, ve + vb, m, ve + vb + rel as i64)
        }
        (
            Repr::Ball { v: va, unit: ua, prec: pa },
            Repr::Ball { v: vb, unit: ub, prec: pb },
        ) => {
            let rel = (pa - va).min(pb - vb);
            let v = va + vb;
            PadicScalar::make_ball(ring, v, ring.mant_mul(ua, ub), v + rel)
        }
        _ => unreachable!("exact zeros handled above"),
    }
}

fn neg_impl(a: &PadicScalar) -> PadicScalar {
    let ring = a.ring;
    match &a.repr {
        Repr::ExactZero | Repr::ZeroBall { .. } => a.clone(),
        Repr::Exact { v, num, den } => PadicScalar {
            ring,
            repr: Repr::Exact { v: *v, num: ring.mant_neg(num), den: den.clone() },
        },
        Repr::Ball { v, unit, prec } => {
            let window = (prec - v) as u64;
            let m = ring.mant_mod(&ring.mant_neg(unit), window);
            PadicScalar { ring, repr: Repr::Ball { v: *v, unit: m, prec: *prec } }
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl std::ops::$trait for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                $impl(self, rhs)
            }
        }
        impl std::ops::$trait for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                $impl(&self, &rhs)
            }
        }
    };
}

fn sub_impl(a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
    add_impl(a, &neg_impl(b))
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);

impl std::ops::Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        neg_impl(self)
    }
}

impl std::fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sym = self.ring.uniformizer_symbol();
        let base = self.ring.base;
        let term = |d: u64, k: i64| -> String {
            match k {
                0 => format!("{d}"),
                1 => format!("{d}*{base}"),
                _ => format!("{d}*{base}^{k}"),
            }
        };
        let _ = sym;
        match &self.repr {
            Repr::ExactZero => write!(f, "0"),
            Repr::ZeroBall { prec } => write!(f, "O({base}^{prec})"),
            Repr::Ball { v, unit, prec } => {
                let digits = self.ring.digits(unit);
                let terms: Vec<String> = digits
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d != 0)
                    .map(|(i, &d)| term(d, v + i as i64))
                    .collect();
                write!(f, "{} + O({base}^{prec})", terms.join(" + "))
            }
            Repr::Exact { v, num, den } => {
                if den.is_one() && !num.is_negative() {
                    let digits = self.ring.digits(num);
                    let terms: Vec<String> = digits
                        .iter()
                        .enumerate()
                        .filter(|(_, &d)| d != 0)
                        .map(|(i, &d)| term(d, v + i as i64))
                        .collect();
                    write!(f, "{}", terms.join(" + "))
                } else {
                    write!(f, "({num}/{den})*{base}^{v}")
                }
            }
        }
    }
}

impl PadicScalar {
    /// Parse the textual form produced by `Display`, plus plain signed
    /// integers.
    pub fn parse(ring: BaseRing, s: &str) -> Result<Self> {
        let s = s.trim();
        let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.into() };
        if s.is_empty() {
            return Err(err(0, "empty scalar"));
        }
        if s == "0" {
            return Ok(Self::zero(ring));
        }
        // Packed fraction form: (num/den)*b^v
        if let Some(rest) = s.strip_prefix('(') {
            let close = rest.find(')').ok_or_else(|| err(0, "unclosed parenthesis"))?;
            let inner = &rest[..close];
            let (ns, ds) = inner
                .split_once('/')
                .ok_or_else(|| err(1, "expected num/den"))?;
            let num: BigInt = ns.trim().parse().map_err(|_| err(1, "bad numerator"))?;
            let den: BigInt = ds.trim().parse().map_err(|_| err(1, "bad denominator"))?;
            let tail = rest[close + 1..].trim();
            let v = match tail.strip_prefix('*') {
                None if tail.is_empty() => 0,
                Some(t) => parse_power(t, ring.base).ok_or_else(|| err(close, "bad power"))?,
                None => return Err(err(close, "expected *base^v")),
            };
            return Self::from_ratio(ring, v, num, den);
        }
        // Sum of digit terms with optional O(...) tail.
        let mut prec: Option<i64> = None;
        let mut acc: Vec<(u64, i64)> = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            if let Some(rest) = part.strip_prefix("O(") {
                let inner = rest.strip_suffix(')').ok_or_else(|| err(0, "unclosed O("))?;
                let k = parse_power(inner, ring.base).ok_or_else(|| err(0, "bad O(...)"))?;
                prec = Some(k);
            } else if let Some((ds, ps)) = part.split_once('*') {
                let d: i64 = ds.trim().parse().map_err(|_| err(0, "bad digit"))?;
                let k = parse_power(ps.trim(), ring.base).ok_or_else(|| err(0, "bad power"))?;
                acc.push((d as u64, k));
            } else {
                // Bare integer term (may be signed, may exceed the base).
                let n: BigInt = part.parse().map_err(|_| err(0, "bad term"))?;
                if acc.is_empty() && s.split('+').count() == 1 && prec.is_none() {
                    return Ok(Self::from_mantissa(
                        ring,
                        0,
                        match ring.kind {
                            RingKind::Padic => n,
                            RingKind::LaurentSeries => {
                                let b = BigInt::from(ring.base);
                                num::Integer::mod_floor(&n, &b)
                            }
                        },
                    ));
                }
                let d: i64 = part.parse().map_err(|_| err(0, "bad digit"))?;
                acc.push((d as u64, 0));
            }
        }
        let v = acc.iter().map(|&(_, k)| k).min().unwrap_or(0);
        let mut mant = BigInt::zero();
        for (d, k) in acc {
            mant = ring.mant_add(
                &mant,
                &ring.mant_shift(&BigInt::from(d), (k - v) as u64),
            );
        }
        match prec {
            None => Ok(Self::from_mantissa(ring, v, mant)),
            Some(n) => Ok(Self::make_ball(ring, v, mant, n)),
        }
    }
}

/// Parse "b", "b^k" or "b^-k" returning k.
fn parse_power(s: &str, base: u64) -> Option<i64> {
    let s = s.trim();
    match s.split_once('^') {
        None => (s.parse::<u64>().ok()? == base).then_some(1),
        Some((b, e)) => {
            if b.trim().parse::<u64>().ok()? != base {
                return None;
            }
            e.trim().parse::<i64>().ok()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarJson {
    ring: BaseRing,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<serde_json::Value>,
    digits: Vec<u64>,
    #[serde(rename = "N")]
    n: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    num: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    den: Option<String>,
}

impl Serialize for PadicScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::{json, Value};
        let inf = Value::String("inf".into());
        let j = match &self.repr {
            Repr::ExactZero => ScalarJson {
                ring: self.ring,
                v: Some(inf.clone()),
                digits: vec![],
                n: inf,
                num: None,
                den: None,
            },
            Repr::ZeroBall { prec } => ScalarJson {
                ring: self.ring,
                v: None,
                digits: vec![],
                n: json!(prec),
                num: None,
                den: None,
            },
            Repr::Ball { v, unit, prec } => ScalarJson {
                ring: self.ring,
                v: Some(json!(v)),
                digits: self.ring.digits(unit),
                n: json!(prec),
                num: None,
                den: None,
            },
            Repr::Exact { v, num, den } => {
                if den.is_one() && !num.is_negative() {
                    ScalarJson {
                        ring: self.ring,
                        v: Some(json!(v)),
                        digits: self.ring.digits(num),
                        n: inf,
                        num: None,
                        den: None,
                    }
                } else {
                    ScalarJson {
                        ring: self.ring,
                        v: Some(json!(v)),
                        digits: vec![],
                        n: inf,
                        num: Some(num.to_string()),
                        den: Some(den.to_string()),
                    }
                }
            }
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ScalarJson::deserialize(d)?;
        let ring = j.ring;
        let is_inf = |v: &serde_json::Value| v.as_str() == Some("inf");
        let prec = if is_inf(&j.n) {
            None
        } else {
            Some(j.n.as_i64().ok_or_else(|| D::Error::custom("bad N"))?)
        };
        if let (Some(ns), Some(ds)) = (&j.num, &j.den) {
            let v = j.v.as_ref().and_then(|v| v.as_i64()).unwrap_or(0);
            let num: BigInt = ns.parse().map_err(D::Error::custom)?;
            let den: BigInt = ds.parse().map_err(D::Error::custom)?;
            return PadicScalar::from_ratio(ring, v, num, den).map_err(D::Error::custom);
        }
        match &j.v {
            Some(v) if is_inf(v) => Ok(PadicScalar::zero(ring)),
            Some(v) => {
                let v = v.as_i64().ok_or_else(|| D::Error::custom("bad v"))?;
                Ok(PadicScalar::from_digits(ring, v, &j.digits, prec))
            }
            None => match prec {
                Some(n) => Ok(PadicScalar::zero_ball(ring, n)),
                None => Ok(PadicScalar::zero(ring)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn q2() -> BaseRing {
        BaseRing::padic(2).unwrap()
    }

    fn ball(v: i64, digits: &[u64], n: i64) -> PadicScalar {
        PadicScalar::from_digits(q2(), v, digits, Some(n))
    }

    #[test]
    fn val_of_exact_and_balls() {
        let twelve = PadicScalar::from_i64(q2(), 12);
        assert_eq!(twelve.val().unwrap(), Valuation::Finite(2));
        assert_eq!(PadicScalar::zero(q2()).val().unwrap(), Valuation::Infinite);
        let zb = PadicScalar::zero_ball(q2(), 5);
        assert_eq!(zb.val(), Err(Error::IndistinguishableFromZero { bound: 5 }));
    }

    #[test]
    fn add_takes_min_absolute_precision() {
        let x = ball(0, &[1], 5); // 1 + O(2^5)
        let y = ball(1, &[1], 3); // 2 + O(2^3)
        let s = &x + &y;
        assert_eq!(s, ball(0, &[1, 1], 3)); // 3 + O(2^3)
    }

    #[test]
    fn add_exact_identity_and_cancellation() {
        let x = ball(0, &[1, 0, 1], 6);
        assert_eq!(&x + &PadicScalar::zero(q2()), x);
        let two = ball(1, &[1], 3);
        let minus_two = neg_impl(&two);
        assert_eq!(&two + &minus_two, PadicScalar::zero_ball(q2(), 3));
    }

    #[test]
    fn mul_keeps_min_relative_precision() {
        let two = ball(1, &[1], 4); // relative precision 3
        let four = &two * &two;
        assert_eq!(four, ball(2, &[1], 5)); // 4 + O(2^5), relative precision 3
        let one = PadicScalar::one(q2());
        assert_eq!(&two * &one, two);
        for k in 1..6 {
            let u = ball(0, &[1], k);
            assert_eq!(&u * &u, ball(0, &[1], k));
        }
    }

    #[test]
    fn inversion_matches_modular_brute_force() {
        let x = ball(0, &[1], 5);
        assert_eq!(x.inv().unwrap(), x);
        // brute force: the unique u with 3u = 1 mod 16
        let u = (0..16).find(|u| (3 * u) % 16 == 1).unwrap();
        assert_eq!(u, 11);
        let three = ball(0, &[1, 1], 4);
        let inv = three.inv().unwrap();
        assert_eq!(inv, PadicScalar::from_digits(q2(), 0, &[1, 1, 0, 1], Some(4)));
        assert_eq!(&three * &inv, ball(0, &[1], 4));
    }

    #[test]
    fn exact_inverse_stays_exact() {
        let three = PadicScalar::from_i64(q2(), 3);
        let inv = three.inv().unwrap();
        assert!(inv.is_exact());
        assert_eq!(&three * &inv, PadicScalar::one(q2()));
        let twelve = PadicScalar::from_i64(q2(), 12);
        assert_eq!(twelve.div(&three).unwrap(), PadicScalar::from_i64(q2(), 4));
    }

    #[test]
    fn shift_moves_valuation_and_precision() {
        let x = ball(0, &[1], 3);
        assert_eq!(x.shift(2), ball(2, &[1], 5));
    }

    #[test]
    fn random_integral_is_uniform_mod_2() {
        let ring = q2();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let x = PadicScalar::random_integral(ring, 1, &mut rng);
            match x.val_info() {
                ValInfo::AtLeast(1) => seen[0] = true,
                ValInfo::Known(0) => seen[1] = true,
                other => panic!("unexpected draw {other:?}"),
            }
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn random_integral_reproducible() {
        let ring = BaseRing::padic(3).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| PadicScalar::random_integral(ring, 8, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn random_digit_frequency_close_to_uniform() {
        let ring = BaseRing::padic(3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let trials = 10_000;
        let mut counts = [0u64; 3];
        for _ in 0..trials {
            let x = PadicScalar::random_integral(ring, 4, &mut rng);
            if let Some((v, digits)) = x.known_digits() {
                let mut all = vec![0u64; v as usize];
                all.extend(digits);
                all.resize(4, 0);
                for d in all {
                    counts[d as usize] += 1;
                }
            }
        }
        let n = (4 * trials) as f64;
        let p = 1.0 / 3.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma, "digit counts {counts:?}");
        }
    }

    #[test]
    fn ball_semantics_of_arithmetic() {
        // Exact representatives drawn inside the balls of x and y must give
        // results inside the returned balls.
        let ring = q2();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let x = PadicScalar::random_integral(ring, 6, &mut rng).shift(rng.gen_range(-2..3));
            let y = loop {
                let y = PadicScalar::random_integral(ring, 6, &mut rng);
                if !y.is_zeroish() {
                    break y;
                }
            };
            let perturb = |b: &PadicScalar, rng: &mut ChaCha12Rng| {
                let n = b.abs_prec().unwrap();
                let noise = PadicScalar::from_i64(ring, rng.gen_range(-8..8)).shift(n);
                &b.center() + &noise
            };
            let (xe, ye) = (perturb(&x, &mut rng), perturb(&y, &mut rng));
            assert!((&x + &y).ball_contains(&(&xe + &ye)));
            assert!((&x * &y).ball_contains(&(&xe * &ye)));
            let q = x.div(&y).unwrap();
            // Compare against the exact quotient: both sides scaled by ye.
            let delta = &(&q.center() * &ye) - &xe;
            let bound = q.abs_prec().unwrap() + ye.val().unwrap().finite().unwrap();
            match delta.val_info() {
                ValInfo::Infinite => {}
                ValInfo::Known(v) => assert!(v >= bound, "v={v} bound={bound}"),
                ValInfo::AtLeast(_) => unreachable!(),
            }
        }
    }

    #[test]
    fn laurent_addition_is_carry_free() {
        let ring = BaseRing::laurent(2).unwrap();
        let one = PadicScalar::from_digits(ring, 0, &[1], Some(4));
        let s = &one + &one;
        assert_eq!(s, PadicScalar::zero_ball(ring, 4));
        let x = PadicScalar::from_digits(ring, 0, &[1, 1], Some(4));
        let y = PadicScalar::from_digits(ring, 1, &[1], Some(4));
        assert_eq!(&x + &y, PadicScalar::from_digits(ring, 0, &[1], Some(4)));
    }

    #[test]
    fn display_and_parse_round_trip() {
        let samples = vec![
            PadicScalar::zero(q2()),
            PadicScalar::zero_ball(q2(), 5),
            ball(2, &[1, 0, 1], 8),
            ball(-3, &[1, 1], 2),
            PadicScalar::from_i64(q2(), 12),
            PadicScalar::from_i64(q2(), -7),
            PadicScalar::from_i64(q2(), 3).inv().unwrap(),
        ];
        for x in samples {
            let text = x.to_string();
            let back = PadicScalar::parse(q2(), &text).unwrap();
            assert_eq!(back, x, "text form {text}");
            let json = serde_json::to_string(&x).unwrap();
            let back: PadicScalar = serde_json::from_str(&json).unwrap();
            assert_eq!(back, x, "json form {json}");
        }
    }
}
