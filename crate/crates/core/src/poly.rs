//! Dense univariate polynomials over CDVF scalars.
//!
//! Arithmetic is schoolbook throughout (degrees stay small in this crate) and
//! every scalar carries its own precision, so polynomial operations on
//! inexact coefficients are exactly the per-coefficient interval propagation
//! of the jagged model. On exact coefficients the same code path performs
//! exact rational arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::{ExtRat, NewtonFunction, Rat};
use crate::ring::BaseRing;
use crate::scalar::{PadicScalar, ValInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    ring: BaseRing,
    coeffs: Vec<PadicScalar>,
}

impl Poly {
    pub fn new(ring: BaseRing, coeffs: Vec<PadicScalar>) -> Self {
        for c in &coeffs {
            assert_eq!(c.ring(), ring, "coefficient from a different ring");
        }
        Poly { ring, coeffs }
    }

    pub fn zero(ring: BaseRing) -> Self {
        Poly { ring, coeffs: Vec::new() }
    }

    pub fn one(ring: BaseRing) -> Self {
        Poly { ring, coeffs: vec![PadicScalar::one(ring)] }
    }

    /// Exact polynomial with integer coefficients, low degree first.
    pub fn from_i64(ring: BaseRing, coeffs: &[i64]) -> Self {
        Poly {
            ring,
            coeffs: coeffs.iter().map(|&c| PadicScalar::from_i64(ring, c)).collect(),
        }
    }

    pub fn x_pow(ring: BaseRing, k: usize) -> Self {
        let mut coeffs = vec![PadicScalar::zero(ring); k + 1];
        coeffs[k] = PadicScalar::one(ring);
        Poly { ring, coeffs }
    }

    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PadicScalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| PadicScalar::zero(self.ring))
    }

    pub fn set_coeff(&mut self, i: usize, c: PadicScalar) {
        assert_eq!(c.ring(), self.ring);
        if i >= self.coeffs.len() {
            self.coeffs.resize(i + 1, PadicScalar::zero(self.ring));
        }
        self.coeffs[i] = c;
    }

    /// Structural degree: index of the last coefficient that is not exactly
    /// zero (balls around zero count as present). `None` for the zero
    /// polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_exact_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Drop trailing exact zeros.
    pub fn trimmed(&self) -> Self {
        let len = self.degree().map_or(0, |d| d + 1);
        Poly { ring: self.ring, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Coefficients of degree < k.
    pub fn low_part(&self, k: usize) -> Self {
        let len = k.min(self.coeffs.len());
        Poly { ring: self.ring, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Multiply by X^k.
    pub fn shift_degree(&self, k: usize) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut coeffs = vec![PadicScalar::zero(self.ring); k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { ring: self.ring, coeffs }
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Poly { ring: self.ring, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn eval(&self, x: &PadicScalar) -> PadicScalar {
        let mut acc = PadicScalar::zero(self.ring);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Weaken every coefficient to absolute precision n.
    pub fn truncate_flat(&self, n: i64) -> Self {
        Poly { ring: self.ring, coeffs: self.coeffs.iter().map(|c| c.truncate(n)).collect() }
    }

    /// Weaken coefficient i to ceilings[i]; `None` leaves it untouched.
    pub fn truncate_jagged(&self, ceilings: &[Option<i64>]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| match ceilings.get(i).copied().flatten() {
                Some(n) => c.truncate(n),
                None => c.clone(),
            })
            .collect();
        Poly { ring: self.ring, coeffs }
    }

    /// Euclidean division, schoolbook from the highest term down. The
    /// divisor's leading coefficient must be distinguishable from zero.
    pub fn divmod(&self, b: &Poly) -> Result<(Poly, Poly)> {
        assert_eq!(self.ring, b.ring, "operands belong to different base rings");
        let db = match b.degree() {
            None => return Err(Error::DivisionByZero),
            Some(d) => d,
        };
        let lc_inv = b.coeffs[db].inv().map_err(|_| Error::BadLeadingCoefficient)?;
        let da = match self.degree() {
            None => return Ok((Poly::zero(self.ring), Poly::zero(self.ring))),
            Some(d) => d,
        };
        if da < db {
            return Ok((Poly::zero(self.ring), self.trimmed()));
        }
        let mut r: Vec<PadicScalar> = self.coeffs[..=da].to_vec();
        let mut q = vec![PadicScalar::zero(self.ring); da - db + 1];
        for k in (db..=da).rev() {
            let c = &r[k] * &lc_inv;
            if !c.is_exact_zero() {
                for j in 0..db {
                    r[k - db + j] = &r[k - db + j] - &(&c * &b.coeffs[j]);
                }
            }
            q[k - db] = c;
        }
        r.truncate(db);
        Ok((Poly::new(self.ring, q), Poly::new(self.ring, r)))
    }

    /// Remainder modulo b.
    pub fn rem(&self, b: &Poly) -> Result<Poly> {
        Ok(self.divmod(b)?.1)
    }

    /// Newton polygon of the polynomial: lower hull of (i, val a_i) over the
    /// trimmed support. Coefficients indistinguishable from zero are fine as
    /// long as the hull of the known points stays at or below their
    /// precision bound; otherwise the polygon is not determined.
    pub fn newton_function(&self) -> Result<NewtonFunction> {
        let Some(deg) = self.degree() else {
            return Ok(NewtonFunction::infinity(0));
        };
        let mut known = Vec::new();
        let mut unknown = Vec::new();
        for (i, c) in self.coeffs[..=deg].iter().enumerate() {
            match c.val_info() {
                ValInfo::Known(v) => known.push((i as i64, Rat::from_integer(v))),
                ValInfo::AtLeast(b) => unknown.push((i as i64, b)),
                ValInfo::Infinite => {}
            }
        }
        if matches!(self.coeffs[deg].val_info(), ValInfo::AtLeast(_)) {
            return Err(Error::DegeneratePolygon { abscissa: deg as i64 });
        }
        let hull = NewtonFunction::lower_hull(deg as i64, &known);
        for (i, bound) in unknown {
            if hull.eval_int(i) > ExtRat::Fin(Rat::from_integer(bound)) {
                return Err(Error::DegeneratePolygon { abscissa: i });
            }
        }
        Ok(hull)
    }

    /// A guaranteed lower bound for the Newton polygon, using precision
    /// bounds where valuations are unknown. Used for b-functional witnesses.
    pub fn nf_lower_bound(&self) -> NewtonFunction {
        let Some(deg) = self.degree() else {
            return NewtonFunction::infinity(0);
        };
        let pts: Vec<(i64, Rat)> = self.coeffs[..=deg]
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c.val_info() {
                ValInfo::Known(v) => Some((i as i64, Rat::from_integer(v))),
                ValInfo::AtLeast(b) => Some((i as i64, Rat::from_integer(b))),
                ValInfo::Infinite => None,
            })
            .collect();
        NewtonFunction::lower_hull(deg as i64, &pts)
    }

    /// True when every coefficient is exact.
    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_exact())
    }

    /// True when every coefficient ball contains the corresponding
    /// coefficient of the (exact) other polynomial.
    pub fn contains_poly(&self, exact: &Poly) -> bool {
        let n = self.coeffs.len().max(exact.coeffs.len());
        (0..n).all(|i| self.coeff(i).ball_contains(&exact.coeff(i)))
    }
}

fn add_impl(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.ring, b.ring);
    let n = a.coeffs.len().max(b.coeffs.len());
    Poly {
        ring: a.ring,
        coeffs: (0..n).map(|i| &a.coeff(i) + &b.coeff(i)).collect(),
    }
}

fn sub_impl(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.ring, b.ring);
    let n = a.coeffs.len().max(b.coeffs.len());
    Poly {
        ring: a.ring,
        coeffs: (0..n).map(|i| &a.coeff(i) - &b.coeff(i)).collect(),
    }
}

fn mul_impl(a: &Poly, b: &Poly) -> Poly {
    assert_eq!(a.ring, b.ring);
    if a.coeffs.is_empty() || b.coeffs.is_empty() {
        return Poly::zero(a.ring);
    }
    let mut out = vec![PadicScalar::zero(a.ring); a.coeffs.len() + b.coeffs.len() - 1];
    for (i, x) in a.coeffs.iter().enumerate() {
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    Poly { ring: a.ring, coeffs: out }
}

macro_rules! forward_poly_binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl std::ops::$trait for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                $impl(self, rhs)
            }
        }
    };
}

forward_poly_binop!(Add, add, add_impl);
forward_poly_binop!(Sub, sub, sub_impl);
forward_poly_binop!(Mul, mul, mul_impl);

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            ring: self.ring,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let texts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", texts.join(", "))
    }
}

impl Poly {
    /// Parse either the coefficient-list form `[c0, c1, ...]` (scalar syntax
    /// per coefficient) or a symbolic integer polynomial like `X^5+X+2` or
    /// `3*X^2 - 7`.
    pub fn parse(ring: BaseRing, s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or(Error::Parse { pos: s.len(), msg: "unclosed '['".into() })?;
            let mut coeffs = Vec::new();
            if !inner.trim().is_empty() {
                for part in inner.split(',') {
                    coeffs.push(PadicScalar::parse(ring, part)?);
                }
            }
            return Ok(Poly::new(ring, coeffs));
        }
        Self::parse_symbolic(ring, s)
    }

    fn parse_symbolic(ring: BaseRing, s: &str) -> Result<Self> {
        // Split into signed terms at top level.
        let mut terms: Vec<(i64, String)> = Vec::new(); // (sign, body)
        let mut cur = String::new();
        let mut sign = 1i64;
        let mut started = false;
        for ch in s.chars() {
            match ch {
                '+' | '-' if started && !cur.trim().is_empty() => {
                    terms.push((sign, cur.trim().to_string()));
                    cur = String::new();
                    sign = if ch == '-' { -1 } else { 1 };
                }
                '-' if !started || cur.trim().is_empty() => {
                    sign = -sign;
                    started = true;
                }
                '+' if cur.trim().is_empty() => {}
                _ => {
                    cur.push(ch);
                    started = true;
                }
            }
        }
        if !cur.trim().is_empty() {
            terms.push((sign, cur.trim().to_string()));
        }
        if terms.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty polynomial".into() });
        }
        let mut out: Vec<(usize, i64)> = Vec::new();
        for (sign, body) in terms {
            let (coef_str, exp) = match body.find(|c| c == 'X' || c == 'x') {
                None => (body.as_str(), 0usize),
                Some(ix) => {
                    let coef = body[..ix].trim().trim_end_matches('*').trim();
                    let rest = body[ix + 1..].trim();
                    let exp = if let Some(e) = rest.strip_prefix('^') {
                        e.trim().parse::<usize>().map_err(|_| Error::Parse {
                            pos: ix,
                            msg: format!("bad exponent {rest}"),
                        })?
                    } else if rest.is_empty() {
                        1
                    } else {
                        return Err(Error::Parse {
                            pos: ix,
                            msg: format!("unexpected trailing {rest}"),
                        });
                    };
                    (coef, exp)
                }
            };
            let coef: i64 = if coef_str.is_empty() {
                1
            } else {
                coef_str.parse().map_err(|_| Error::Parse {
                    pos: 0,
                    msg: format!("bad coefficient {coef_str}"),
                })?
            };
            out.push((exp, sign * coef));
        }
        let deg = out.iter().map(|&(e, _)| e).max().unwrap();
        let mut coeffs = vec![0i64; deg + 1];
        for (e, c) in out {
            coeffs[e] += c;
        }
        Ok(Poly::from_i64(ring, &coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::rat;
    use num::BigInt;

    fn q2() -> BaseRing {
        BaseRing::padic(2).unwrap()
    }

    #[test]
    fn exact_rational_long_division() {
        let a = Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]); // X^5 + X + 2
        let b = Poly::from_i64(q2(), &[2, 1]); // X + 2
        let (q, r) = a.divmod(&b).unwrap();
        assert_eq!(q, Poly::from_i64(q2(), &[17, -8, 4, -2, 1]));
        assert_eq!(r.trimmed(), Poly::from_i64(q2(), &[-32]));
        // A = Q*B + R exactly
        assert_eq!((&(&q * &b) + &r).trimmed(), a);
    }

    #[test]
    fn divmod_trivial_cases() {
        let a = Poly::from_i64(q2(), &[1, 2, 3]);
        let (q, r) = a.divmod(&a).unwrap();
        assert_eq!(q, Poly::one(q2()));
        assert!(r.is_zero());
        let b = Poly::from_i64(q2(), &[0, 0, 0, 1]);
        let (q, r) = a.divmod(&b).unwrap();
        assert!(q.is_zero());
        assert_eq!(r, a);
    }

    #[test]
    fn divmod_rejects_unresolvable_leading_coefficient() {
        let a = Poly::from_i64(q2(), &[1, 1]);
        let mut b = Poly::from_i64(q2(), &[1]);
        b.set_coeff(1, PadicScalar::zero_ball(q2(), 5));
        assert_eq!(a.divmod(&b), Err(Error::BadLeadingCoefficient));
        assert_eq!(
            a.divmod(&Poly::zero(q2())),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn jagged_division_interval_propagation() {
        // (X^2 + O(2^5)(1 + X + X^2)) div (X + 2): remainder 4 + O(2^5).
        let o = |_: i64| PadicScalar::zero_ball(q2(), 5);
        let one_ball = &PadicScalar::one(q2()) + &o(0);
        let a = Poly::new(q2(), vec![o(0), o(1), one_ball]);
        let b = Poly::from_i64(q2(), &[2, 1]);
        let (_, r) = a.divmod(&b).unwrap();
        assert_eq!(
            r.coeff(0),
            PadicScalar::from_digits(q2(), 2, &[1], Some(5)) // 4 + O(2^5)
        );
    }

    #[test]
    fn polygon_of_small_polynomials() {
        let p = Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]);
        let nf = p.newton_function().unwrap();
        assert_eq!(
            nf.vertices(),
            &[(0, 1.into()), (1, 0.into()), (5, 0.into())]
        );
        let m = Poly::from_i64(q2(), &[0, 0, 0, 0, 0, 1]); // X^5
        let nf = m.newton_function().unwrap();
        assert_eq!(nf.vertices(), &[(5, 0.into())]);
        assert_eq!(nf.eval_int(2), ExtRat::PosInf);
        let e = Poly::from_i64(q2(), &[2, 0, 0, 0, 0, 1]); // X^5 + 2
        let nf = e.newton_function().unwrap();
        assert_eq!(nf.vertices(), &[(0, 1.into()), (5, 0.into())]);
        assert_eq!(nf.eval_int(1), ExtRat::Fin(rat(4, 5)));
    }

    #[test]
    fn degenerate_polygon_detection() {
        // A middle coefficient known only as O(2^0) could dip below the hull
        // of the known points (value 1/2 at abscissa 1).
        let mut p = Poly::from_i64(q2(), &[2, 0, 1]);
        p.set_coeff(1, PadicScalar::zero_ball(q2(), 0));
        assert_eq!(
            p.newton_function(),
            Err(Error::DegeneratePolygon { abscissa: 1 })
        );
        // a bound at or above the hull is harmless
        p.set_coeff(1, PadicScalar::zero_ball(q2(), 3));
        let nf = p.newton_function().unwrap();
        assert_eq!(nf.vertices(), &[(0, 1.into()), (2, 0.into())]);
        // a ball in the +inf prefix is never resolvable: the hull has no
        // finite value there, so any finite bound could create a vertex
        let mut m = Poly::from_i64(q2(), &[0, 0, 1]);
        m.set_coeff(0, PadicScalar::zero_ball(q2(), 40));
        assert_eq!(
            m.newton_function(),
            Err(Error::DegeneratePolygon { abscissa: 0 })
        );
        // unresolvable leading coefficient
        let mut q = Poly::from_i64(q2(), &[1]);
        q.set_coeff(1, PadicScalar::zero_ball(q2(), 4));
        assert_eq!(
            q.newton_function(),
            Err(Error::DegeneratePolygon { abscissa: 1 })
        );
    }

    #[test]
    fn product_polygon_equals_minkowski_sum() {
        let p = Poly::from_i64(q2(), &[2, 1]); // X + 2
        let q = Poly::from_i64(q2(), &[4, 2, 1]); // X^2 + 2X + 4
        let lhs = (&p * &q).newton_function().unwrap();
        let rhs = p
            .newton_function()
            .unwrap()
            .minkowski(&q.newton_function().unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn eval_horner() {
        let a = Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]);
        let x = PadicScalar::from_i64(q2(), -2);
        assert_eq!(a.eval(&x), PadicScalar::from_i64(q2(), -32));
    }

    #[test]
    fn parse_and_display() {
        let p = Poly::parse(q2(), "X^5+X+2").unwrap();
        assert_eq!(p, Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]));
        let p = Poly::parse(q2(), "(X+1)^5 is not supported");
        assert!(p.is_err());
        let p = Poly::parse(q2(), "3*X^2 - 7").unwrap();
        assert_eq!(p, Poly::from_i64(q2(), &[-7, 0, 3]));
        let p = Poly::parse(q2(), "-X^3 + 2*X").unwrap();
        assert_eq!(p, Poly::from_i64(q2(), &[0, 2, 0, -1]));
        let q = Poly::new(
            q2(),
            vec![
                PadicScalar::from_digits(q2(), 0, &[1, 1], Some(6)),
                PadicScalar::from_i64(q2(), -12),
            ],
        );
        let text = q.to_string();
        assert_eq!(Poly::parse(q2(), &text).unwrap(), q);
        let js = serde_json::to_string(&q).unwrap();
        let back: Poly = serde_json::from_str(&js).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn exact_divmod_with_non_unit_leading_coefficient() {
        // denominators stay exact rationals with unit mantissa
        let a = Poly::from_i64(q2(), &[1, 0, 1]); // X^2 + 1
        let b = Poly::from_i64(q2(), &[1, 3]); // 3X + 1
        let (q, r) = a.divmod(&b).unwrap();
        assert_eq!((&(&q * &b) + &r).trimmed(), a);
        assert_eq!(
            q.coeff(1),
            PadicScalar::from_ratio(q2(), 0, BigInt::from(1), BigInt::from(3)).unwrap()
        );
        assert!(r.trimmed().degree().unwrap() < 1);
    }
}
