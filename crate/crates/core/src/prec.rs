//! Precision models for polynomials: flat, jagged and Newton.
//!
//! The jagged model is [`Poly`] itself (every coefficient owns its
//! precision). The Newton model pairs an approximation with a convex
//! precision function and computes Euclidean division by splitting the work
//! into an approximation pipeline and a symbolic precision pipeline on
//! polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::NewtonFunction;
use crate::poly::Poly;

/// Per-coefficient precision: a polynomial of scalars.
pub type JaggedPoly = Poly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecModel {
    Flat,
    Jagged,
    Newton,
    Lattice,
}

impl std::str::FromStr for PrecModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(PrecModel::Flat),
            "jagged" => Ok(PrecModel::Jagged),
            "newton" => Ok(PrecModel::Newton),
            "lattice" => Ok(PrecModel::Lattice),
            other => Err(Error::Invalid(format!("unknown precision model {other}"))),
        }
    }
}

/// All coefficients share one absolute precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatPoly {
    poly: Poly,
    prec: i64,
}

impl FlatPoly {
    pub fn new(poly: Poly, prec: i64) -> Self {
        FlatPoly { poly: poly.truncate_flat(prec), prec }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    fn flatten(poly: Poly) -> Self {
        let prec = poly
            .coeffs()
            .iter()
            .filter_map(|c| c.abs_prec())
            .min()
            .expect("flat result needs at least one inexact coefficient");
        FlatPoly::new(poly, prec)
    }

    pub fn add(&self, other: &Self) -> Self {
        FlatPoly::new(&self.poly + &other.poly, self.prec.min(other.prec))
    }

    pub fn mul(&self, other: &Self) -> Self {
        FlatPoly::new(&self.poly * &other.poly, self.prec.min(other.prec))
    }

    pub fn divmod(&self, other: &Self) -> Result<(Self, Self)> {
        let (q, r) = self.poly.divmod(&other.poly)?;
        Ok((Self::flatten(q), Self::flatten(r)))
    }
}

/// Approximation plus a Newton-function precision datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonPrecPoly {
    approx: Poly,
    prec: NewtonFunction,
}

impl NewtonPrecPoly {
    pub fn new(approx: Poly, prec: NewtonFunction) -> Self {
        NewtonPrecPoly { approx, prec }
    }

    /// An exactly known polynomial: the precision function is +infinity.
    pub fn exact(poly: Poly) -> Self {
        let deg = poly.degree().unwrap_or(0) as i64;
        NewtonPrecPoly { approx: poly, prec: NewtonFunction::infinity(deg) }
    }

    /// Flat precision O(pi^n) seen as a Newton datum.
    pub fn flat(poly: Poly, n: i64) -> Self {
        let deg = poly.degree().unwrap_or(0) as i64;
        NewtonPrecPoly {
            approx: poly,
            prec: NewtonFunction::flat(deg, num::rational::Rational64::from_integer(n)),
        }
    }

    pub fn approx(&self) -> &Poly {
        &self.approx
    }

    pub fn prec(&self) -> &NewtonFunction {
        &self.prec
    }

    pub fn nondegenerate(&self) -> Result<bool> {
        let polygon = self.approx.newton_function()?;
        Ok(self.prec.nondegenerate_over(&polygon))
    }

    /// Read the datum as a jagged polynomial (per-coefficient ceilings).
    pub fn to_jagged(&self) -> Poly {
        self.approx.truncate_jagged(&self.prec.jagged_ceilings())
    }

    pub fn add(&self, other: &Self) -> Self {
        NewtonPrecPoly {
            approx: &self.approx + &other.approx,
            prec: self.prec.min_hull(&other.prec),
        }
    }

    /// Product datum: (phi_P mink NF(Q)) hull-min (NF(P) mink phi_Q).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let nf_p = self.approx.newton_function()?;
        let nf_q = other.approx.newton_function()?;
        let prec = self
            .prec
            .minkowski(&nf_q)
            .min_hull(&nf_p.minkowski(&other.prec));
        Ok(NewtonPrecPoly { approx: &self.approx * &other.approx, prec })
    }

    /// Euclidean division with the Newton-model precision propagation:
    /// with phi = phi_A hull-min [phi_B mink (NF(A) div NF(B))], the quotient
    /// is known at O(phi div NF(B)) and the remainder at O(phi mod NF(B)).
    /// Both input precisions must be nondegenerate.
    pub fn divmod(&self, other: &Self) -> Result<(Self, Self)> {
        let nf_a = self.approx.newton_function()?;
        let nf_b = other.approx.newton_function()?;
        if !self.prec.nondegenerate_over(&nf_a) || !other.prec.nondegenerate_over(&nf_b) {
            return Err(Error::DegeneratePrecision);
        }
        let (da, db) = (nf_a.degree(), nf_b.degree());
        if da < db {
            return Ok((Self::exact(Poly::zero(self.approx.ring())), self.clone()));
        }
        let (q_app, r_app) = self.approx.divmod(&other.approx)?;
        let phi = self
            .prec
            .min_hull(&other.prec.minkowski(&nf_a.div_by(&nf_b)));
        let prec_q = phi.div_by(&nf_b);
        let prec_r = phi.mod_by(&nf_b)?;
        Ok((
            NewtonPrecPoly { approx: q_app, prec: prec_q },
            NewtonPrecPoly { approx: r_app, prec: prec_r },
        ))
    }
}

/// Modular multiplication pipeline in the jagged model: fold
/// P <- (P * P_i) mod M with per-coefficient interval propagation and report
/// the total gain of absolute precision over the input level n.
pub fn modmul_chain_jagged(modulus: &Poly, inputs: &[Poly], n: i64) -> Result<(Poly, i64)> {
    assert!(!inputs.is_empty());
    let d = modulus.degree().expect("modulus is nonzero");
    let mut p = Poly::one(modulus.ring());
    for input in inputs {
        p = (&p * input).rem(modulus)?;
    }
    let mut gain = 0i64;
    for i in 0..d {
        let ni = p.coeff(i).abs_prec().ok_or_else(|| {
            Error::Invalid("chain output has an exactly known coefficient".into())
        })?;
        gain += ni - n;
    }
    Ok((p, gain))
}

/// The same pipeline in the Newton model: approximations are tracked at a
/// working cap, precision functions symbolically; the gain reads off the
/// ceilings of the final precision function.
pub fn modmul_chain_newton(
    modulus: &Poly,
    inputs: &[Poly],
    n: i64,
    cap: i64,
) -> Result<(NewtonPrecPoly, i64)> {
    assert!(!inputs.is_empty());
    let d = modulus.degree().expect("modulus is nonzero") as i64;
    let nf_m = modulus.newton_function()?;
    let mut p_app = Poly::one(modulus.ring());
    let mut phi = NewtonFunction::infinity(d - 1);
    for input in inputs {
        let center = input.truncate_flat(cap);
        let nf_p = p_app.newton_function()?;
        let nf_i = center.newton_function()?;
        let phi_i = NewtonFunction::flat(d - 1, num::rational::Rational64::from_integer(n));
        let prod_prec = phi.minkowski(&nf_i).min_hull(&nf_p.minkowski(&phi_i));
        let prod = &p_app * &center;
        phi = if prod_prec.degree() >= d {
            prod_prec.mod_by(&nf_m)?
        } else {
            prod_prec.with_degree(d - 1)
        };
        p_app = prod.rem(modulus)?.truncate_flat(cap);
    }
    let mut gain = 0i64;
    for i in 0..d {
        let ni = phi.ceil_at(i).ok_or_else(|| {
            Error::Invalid("chain output has an exactly known coefficient".into())
        })?;
        gain += ni - n;
    }
    Ok((NewtonPrecPoly { approx: p_app, prec: phi }, gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{ExtRat, Rat};
    use crate::ring::BaseRing;
    use crate::scalar::{PadicScalar, ValInfo};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn q2() -> BaseRing {
        BaseRing::padic(2).unwrap()
    }

    fn random_unit_poly(rng: &mut ChaCha12Rng, deg: usize, n: i64) -> Poly {
        // jagged poly at flat O(2^n) with exact-valuation coefficients
        let ring = q2();
        let coeffs = (0..=deg)
            .map(|i| {
                let v = if i == deg { 0 } else { rng.gen_range(0..3) };
                let digits: Vec<u64> = (0..(n - v).max(1))
                    .map(|k| if k == 0 { 1 } else { rng.gen_range(0..2) })
                    .collect();
                PadicScalar::from_digits(ring, v, &digits, Some(n))
            })
            .collect();
        Poly::new(ring, coeffs)
    }

    #[test]
    fn newton_mul_specializes_for_exact_factor() {
        // P exact times Q at O(phi_Q): precision NF(P) mink phi_Q
        let p = NewtonPrecPoly::exact(Poly::from_i64(q2(), &[2, 1])); // X + 2
        let q_poly = Poly::from_i64(q2(), &[4, 2, 1]);
        let phi_q = NewtonFunction::flat(2, Rat::from_integer(10));
        let q = NewtonPrecPoly::new(q_poly.clone(), phi_q.clone());
        let prod = p.mul(&q).unwrap();
        let expect = p.approx().newton_function().unwrap().minkowski(&phi_q);
        assert_eq!(prod.prec(), &expect);
    }

    #[test]
    fn jagged_add_with_zero_is_identity() {
        let ring = q2();
        let p = Poly::new(
            ring,
            vec![
                PadicScalar::from_digits(ring, 0, &[1], Some(3)),
                PadicScalar::from_digits(ring, 0, &[1], Some(5)),
            ],
        );
        assert_eq!(&p + &Poly::zero(ring), p);
    }

    #[test]
    fn jagged_mul_ball_membership() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = random_unit_poly(&mut rng, 4, 10);
            let q = random_unit_poly(&mut rng, 4, 10);
            let prod = &p * &q;
            for _ in 0..5 {
                let perturb = |poly: &Poly, rng: &mut ChaCha12Rng| {
                    let coeffs = poly
                        .coeffs()
                        .iter()
                        .map(|c| {
                            let n = c.abs_prec().unwrap();
                            let noise =
                                PadicScalar::from_i64(q2(), rng.gen_range(-4..5)).shift(n);
                            &c.center() + &noise
                        })
                        .collect();
                    Poly::new(q2(), coeffs)
                };
                let pe = perturb(&p, &mut rng);
                let qe = perturb(&q, &mut rng);
                assert!(prod.contains_poly(&(&pe * &qe)));
            }
        }
    }

    #[test]
    fn newton_divmod_formula_for_monic_exact_divisor() {
        // B monic exact, A at flat O(N): phi = flat N, so the quotient and
        // remainder precisions are the plain polygon divisions of flat N.
        let a_poly = Poly::from_i64(q2(), &[6, 3, 1, 1, 2, 1]).truncate_flat(10);
        let a = NewtonPrecPoly::flat(a_poly, 10);
        let b = NewtonPrecPoly::exact(Poly::from_i64(q2(), &[2, 1, 0, 1])); // X^3 + X + 2
        let (q, r) = a.divmod(&b).unwrap();
        let nf_b = b.approx().newton_function().unwrap();
        let flat10 = NewtonFunction::flat(5, Rat::from_integer(10));
        assert_eq!(q.prec(), &flat10.div_by(&nf_b));
        assert_eq!(r.prec(), &flat10.mod_by(&nf_b).unwrap());
    }

    #[test]
    fn newton_divmod_of_equal_operands() {
        let poly = Poly::from_i64(q2(), &[2, 1, 1]);
        let a = NewtonPrecPoly::flat(poly.clone(), 12);
        let (q, r) = a.divmod(&a).unwrap();
        assert_eq!(q.approx().trimmed(), Poly::one(q2()));
        assert!(r.approx().trimmed().is_zero());
        let nf = poly.newton_function().unwrap();
        let phi = a.prec().min_hull(&a.prec().minkowski(&nf.div_by(&nf)));
        assert_eq!(q.prec(), &phi.div_by(&nf));
        assert_eq!(r.prec(), &phi.mod_by(&nf).unwrap());
    }

    #[test]
    fn newton_divmod_rejects_degenerate_precision() {
        let poly = Poly::from_i64(q2(), &[2, 1, 1]);
        // precision equal to the polygon itself fails the strictness test
        let a = NewtonPrecPoly::new(poly.clone(), poly.newton_function().unwrap());
        let b = NewtonPrecPoly::exact(Poly::from_i64(q2(), &[1, 1]));
        assert_eq!(a.divmod(&b), Err(Error::DegeneratePrecision));
    }

    #[test]
    fn newton_divmod_perturbation_soundness() {
        // Monte-Carlo version of the division precision proposition.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a_poly = random_unit_poly(&mut rng, 6, 14).truncate_flat(14);
            let b_poly = random_unit_poly(&mut rng, 3, 14).truncate_flat(14);
            let a = NewtonPrecPoly::new(
                Poly::new(
                    q2(),
                    a_poly.coeffs().iter().map(|c| c.center()).collect(),
                ),
                NewtonFunction::flat(6, Rat::from_integer(14)),
            );
            let b = NewtonPrecPoly::new(
                Poly::new(
                    q2(),
                    b_poly.coeffs().iter().map(|c| c.center()).collect(),
                ),
                NewtonFunction::flat(3, Rat::from_integer(14)),
            );
            if a.nondegenerate().is_err()
                || !a.nondegenerate().unwrap()
                || !b.nondegenerate().unwrap()
            {
                continue;
            }
            let (q, r) = a.divmod(&b).unwrap();
            for _ in 0..20 {
                let perturb = |p: &NewtonPrecPoly, rng: &mut ChaCha12Rng| {
                    let ceilings = p.prec().jagged_ceilings();
                    let coeffs = p
                        .approx()
                        .coeffs()
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let lift = ceilings[i].unwrap();
                            let noise = PadicScalar::from_i64(q2(), rng.gen_range(-4..5))
                                .shift(lift);
                            c + &noise
                        })
                        .collect();
                    Poly::new(q2(), coeffs)
                };
                let ae = perturb(&a, &mut rng);
                let be = perturb(&b, &mut rng);
                let (qe, re) = ae.divmod(&be).unwrap();
                let dq = &qe - q.approx();
                let dr = &re - r.approx();
                assert!(dq.nf_lower_bound().dominates(q.prec()), "quotient escape");
                assert!(dr.nf_lower_bound().dominates(r.prec()), "remainder escape");
            }
        }
    }

    #[test]
    fn chains_of_length_one_gain_nothing() {
        let m = Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let input = Poly::new(
            q2(),
            (0..5)
                .map(|_| PadicScalar::random_integral(q2(), 20, &mut rng))
                .collect(),
        );
        let (_, gj) = modmul_chain_jagged(&m, &[input.clone()], 20).unwrap();
        let (_, gn) = modmul_chain_newton(&m, &[input], 20, 60).unwrap();
        assert_eq!(gj, 0);
        assert_eq!(gn, 0);
    }

    #[test]
    fn jagged_and_newton_gains_agree_per_sample() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for modulus in [
            Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]),  // two slopes
            Poly::from_i64(q2(), &[2, 0, 0, 0, 0, 1]),  // Eisenstein
            Poly::from_i64(q2(), &[1, 0, 1, 0, 0, 1]),  // irreducible mod 2
        ] {
            for _ in 0..10 {
                let n = 30;
                let inputs: Vec<Poly> = (0..10)
                    .map(|_| {
                        Poly::new(
                            q2(),
                            (0..5)
                                .map(|_| PadicScalar::random_integral(q2(), n, &mut rng))
                                .collect(),
                        )
                    })
                    .collect();
                let (_, gj) = modmul_chain_jagged(&modulus, &inputs, n).unwrap();
                let (_, gn) = modmul_chain_newton(&modulus, &inputs, n, n + 80).unwrap();
                assert_eq!(gj, gn, "modulus {modulus}");
            }
        }
    }

    #[test]
    fn flat_model_keeps_single_precision() {
        let a = FlatPoly::new(Poly::from_i64(q2(), &[1, 2, 4]), 8);
        let b = FlatPoly::new(Poly::from_i64(q2(), &[3, 1]), 6);
        assert_eq!(a.add(&b).prec(), 6);
        let m = a.mul(&b);
        assert_eq!(m.prec(), 6);
        for c in m.poly().coeffs() {
            match c.val_info() {
                ValInfo::Known(_) | ValInfo::AtLeast(_) => assert_eq!(c.abs_prec(), Some(6)),
                ValInfo::Infinite => panic!("flat coefficients are inexact"),
            }
        }
        let nf = NewtonFunction::flat(2, Rat::from_integer(8));
        assert_eq!(nf.eval_int(1), ExtRat::Fin(Rat::from_integer(8)));
    }
}
