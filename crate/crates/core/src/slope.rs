//! Slope factorization by Newton iteration.
//!
//! Splitting a polynomial at an extremal abscissa d of its Newton polygon:
//! the sequence A_{i+1} = A_i + (V_i P mod A_i), V_{i+1} = (2V_i - V_i^2
//! B_{i+1}) mod A_{i+1} with B_{i+1} = P div A_{i+1} converges quadratically
//! to the degree-d factor carrying the left part of the polygon. The
//! iteration never scales P into an extension field: the b-functionals
//! measure polygons against reference lines anchored at the break point (for
//! objects that would scale with P) or through the origin (for the inverse
//! and cofactor family, which would not), which gives the same minima as the
//! normalization NF(P)(d) = d*lambda0.

use num::{BigInt, Zero};

use crate::error::{Error, Result};
use crate::lattice::PrecLattice;
use crate::newton::{ExtRat, NewtonFunction, Rat};
use crate::poly::Poly;
use crate::prec::NewtonPrecPoly;
use crate::scalar::PadicScalar;

const MAX_ITERATIONS: u32 = 64;

/// slope * x with the conventions 0 * (+-inf) = 0.
fn ext_mul_int(slope: ExtRat, x: i64) -> ExtRat {
    match slope {
        ExtRat::Fin(s) => ExtRat::Fin(s * Rat::from_integer(x)),
        inf => match x.cmp(&0) {
            std::cmp::Ordering::Equal => ExtRat::Fin(Rat::zero()),
            std::cmp::Ordering::Greater => inf,
            std::cmp::Ordering::Less => {
                if inf == ExtRat::PosInf {
                    ExtRat::NegInf
                } else {
                    ExtRat::PosInf
                }
            }
        },
    }
}

/// 2^i * kappa >= delta, evaluated without overflow.
fn doubling_reaches(i: u32, kappa: Rat, delta: Rat) -> bool {
    if i >= 96 {
        return true;
    }
    let lhs = *kappa.numer() as i128 * *delta.denom() as i128;
    let rhs = *delta.numer() as i128 * *kappa.denom() as i128;
    lhs.saturating_mul(1i128 << i) >= rhs
}

/// Geometry of a polygon break: slopes, convexity gap and the reference
/// function phi (the polygon up to d, extended affinely with slope lambda0).
#[derive(Debug, Clone)]
pub struct SlopeFrame {
    pub d: i64,
    pub nf_p: NewtonFunction,
    pub lambda0: ExtRat,
    pub lambda1: ExtRat,
    pub kappa: ExtRat,
    y_d: Rat,
}

impl SlopeFrame {
    pub fn at_break(nf_p: &NewtonFunction, d: i64) -> Result<Self> {
        let n = nf_p.degree();
        if d < 0 || d > n {
            return Err(Error::NoBreakAt { d });
        }
        let ExtRat::Fin(y_d) = nf_p.eval_int(d) else {
            return Err(Error::NoBreakAt { d });
        };
        let lambda0 = ExtRat::Fin(y_d) - nf_p.eval_int(d - 1);
        let lambda1 = nf_p.eval_int(d + 1) - ExtRat::Fin(y_d);
        // kappa = NF(d+1) + NF(d-1) - 2 NF(d), infinite at the polygon ends
        let kappa = match (lambda0, lambda1) {
            (ExtRat::NegInf, _) | (_, ExtRat::PosInf) => ExtRat::PosInf,
            (l0, l1) => l1 - l0,
        };
        if kappa <= ExtRat::Fin(Rat::zero()) {
            return Err(Error::NoBreakAt { d });
        }
        Ok(SlopeFrame { d, nf_p: nf_p.clone(), lambda0, lambda1, kappa, y_d })
    }

    /// The reference function phi: NF(P) on [0, d], the slope-lambda0 line
    /// through the break point beyond.
    pub fn phi(&self, x: i64) -> ExtRat {
        if x <= self.d {
            self.nf_p.eval_int(x)
        } else {
            ext_mul_int(self.lambda0, x - self.d) + ExtRat::Fin(self.y_d)
        }
    }

    fn line0_anchored(&self, x: i64) -> ExtRat {
        ext_mul_int(self.lambda0, x - self.d) + ExtRat::Fin(self.y_d)
    }

    fn line0_origin(&self, x: i64) -> ExtRat {
        ext_mul_int(self.lambda0, x)
    }

    fn line1_origin(&self, x: i64) -> ExtRat {
        ext_mul_int(self.lambda1, x)
    }

    fn b_against<F: Fn(&Self, i64) -> ExtRat>(&self, q: &Poly, reference: F) -> ExtRat {
        let nf = q.nf_lower_bound();
        if nf.is_infinite() {
            return ExtRat::PosInf;
        }
        let mut best = ExtRat::PosInf;
        for x in 0..=nf.degree() {
            best = best.min(nf.eval_int(x) - reference(self, x));
        }
        best
    }

    /// b_phi for objects in the scaled family (P, A_i, R_i, S_i).
    pub fn b_phi(&self, q: &Poly) -> ExtRat {
        self.b_against(q, Self::phi)
    }

    /// b_0 for objects in the scaled family: the slope-lambda0 line anchored
    /// at the break point.
    pub fn b0_scaled(&self, q: &Poly) -> ExtRat {
        self.b_against(q, Self::line0_anchored)
    }

    /// b_0 for unscaled objects (T_i, Delta B_i, 1 - Q_i): the line through
    /// the origin.
    pub fn b0_plain(&self, q: &Poly) -> ExtRat {
        self.b_against(q, Self::line0_origin)
    }

    /// b_1 for unscaled objects (V_i, B_i).
    pub fn b1_plain(&self, q: &Poly) -> ExtRat {
        self.b_against(q, Self::line1_origin)
    }
}

/// kappa = NF(P)(d+1) + NF(P)(d-1) - 2 NF(P)(d), with the polygon +infinity
/// off its domain; errors when d is not an extremal abscissa.
pub fn kappa(p: &Poly, d: i64) -> Result<ExtRat> {
    let frame = SlopeFrame::at_break(&p.newton_function()?, d)?;
    Ok(frame.kappa)
}

/// The three b-functionals of Q relative to the break (P, d), with the
/// normalization NF(P)(d) = d*lambda0 applied symbolically: Q is measured as
/// a member of the scaled family for b_phi and b_0 (so b_phi(P) = b_0(P) =
/// 0) and as unscaled for b_1 (the inverse family, so b_1(V_i) >= 0).
pub fn b_functionals(q: &Poly, p: &Poly, d: i64) -> Result<(ExtRat, ExtRat, ExtRat)> {
    let frame = SlopeFrame::at_break(&p.newton_function()?, d)?;
    Ok((frame.b_phi(q), frame.b0_scaled(q), frame.b1_plain(q)))
}

/// One state of the iteration, at its working precision.
#[derive(Debug, Clone)]
pub struct IterState {
    pub a: Poly,
    pub v: Poly,
    /// B_i = P div A_i.
    pub b: Poly,
    pub working_prec: i64,
}

/// Per-step convergence witness: a guaranteed lower bound for b_phi(R_i).
#[derive(Debug, Clone)]
pub struct StepWitness {
    pub index: u32,
    pub working_prec: i64,
    pub b_phi_r: ExtRat,
}

#[derive(Debug, Clone)]
pub enum FactorPrecision {
    Newton(NewtonFunction),
    Lattice(PrecLattice),
}

#[derive(Debug, Clone)]
pub struct SlopeFactorResult {
    /// The factor with leading coefficient a_d, carrying NF(P) on [0, d].
    pub a: Poly,
    /// Monic normalization a_d^{-1} A, truncated at the output precision.
    pub a1: Poly,
    /// Monic cofactor a_d (P div A).
    pub b1: Poly,
    /// Inverse of b1 modulo a1 at the final working precision.
    pub v1: Poly,
    pub precision: FactorPrecision,
    pub iterations: u32,
    pub states: Vec<IterState>,
    pub witnesses: Vec<StepWitness>,
    /// Set on lattice-model outputs: correctness of the precision lattice
    /// assumes the input lattice behaves to first order (hypothesis (H)),
    /// which is not algorithmically verified.
    pub first_order_assumed: bool,
}

impl SlopeFactorResult {
    pub fn newton_precision(&self) -> Option<&NewtonFunction> {
        match &self.precision {
            FactorPrecision::Newton(nf) => Some(nf),
            FactorPrecision::Lattice(_) => None,
        }
    }

    pub fn lattice_precision(&self) -> Option<&PrecLattice> {
        match &self.precision {
            FactorPrecision::Lattice(h) => Some(h),
            FactorPrecision::Newton(_) => None,
        }
    }
}

struct Iteration<'a> {
    frame: &'a SlopeFrame,
    p_center: Poly,
    guard: i64,
    base_prec: i64,
}

impl<'a> Iteration<'a> {
    fn new(frame: &'a SlopeFrame, p: &Poly, guard: i64) -> Self {
        let mut hi = 0i64;
        let mut lo = 0i64;
        for &(_, y) in frame.nf_p.vertices() {
            hi = hi.max(y.ceil().to_integer());
            lo = lo.min(y.floor().to_integer());
        }
        if let ExtRat::Fin(l1) = frame.lambda1 {
            hi = hi.max((l1 * Rat::from_integer(frame.d.max(1))).ceil().to_integer());
        }
        let p_center = Poly::new(
            p.ring(),
            p.coeffs().iter().map(|c| c.center()).collect(),
        );
        Iteration { frame, p_center, guard, base_prec: hi - lo }
    }

    fn ceil_pow_kappa(&self, i: u32) -> i64 {
        match self.frame.kappa {
            ExtRat::Fin(k) => {
                let num = *k.numer() as i128 * (1i128 << i.min(96));
                let den = *k.denom() as i128;
                ((num + den - 1) / den) as i64
            }
            // infinite kappa: the iteration is a fixed point, only the
            // initial division runs
            _ => 0,
        }
    }

    fn working_prec(&self, i: u32) -> i64 {
        self.ceil_pow_kappa(i + 1) + self.base_prec + self.guard
    }

    fn initial_state(&self) -> Result<IterState> {
        let d = self.frame.d as usize;
        let n0 = self.working_prec(0);
        let a = self.p_center.low_part(d + 1).truncate_flat(n0);
        let v = Poly::one(self.p_center.ring());
        let p = self.p_center.truncate_flat(n0);
        let b = p.divmod(&a)?.0;
        Ok(IterState { a, v, b, working_prec: n0 })
    }

    /// A_{i+1} = A_i + (V_i P mod A_i); V_{i+1} = (2V_i - V_i^2 B_{i+1})
    /// mod A_{i+1}, computed at the scheduled working precision and
    /// truncated at the precision marks of the algorithm.
    fn step(&self, state: &IterState, i: u32) -> Result<(IterState, StepWitness)> {
        let frame = self.frame;
        let d = frame.d as usize;
        let n_i = self.working_prec(i);
        // line 6 of the iteration: lift the stored representatives to the
        // new working precision
        let lift = |q: &Poly| {
            Poly::new(q.ring(), q.coeffs().iter().map(|c| c.center()).collect())
                .truncate_flat(n_i)
        };
        let p = self.p_center.truncate_flat(n_i);
        let a = lift(&state.a);
        let v = lift(&state.v);
        let r = (&v * &p).rem(&a)?;
        let witness = StepWitness {
            index: i,
            working_prec: n_i,
            b_phi_r: frame.b_phi(&r),
        };
        let a_next = &a + &r;
        // precision marks: O(phi|[0,d-1] + 2^{i+1} kappa) for A
        let bump = self.ceil_pow_kappa(i + 1);
        let mut marks: Vec<Option<i64>> = Vec::with_capacity(d);
        for x in 0..d as i64 {
            let mark = (frame.phi(x) + ExtRat::Fin(Rat::from_integer(bump))).ceil_i64();
            if let (Some(m), Some(have)) = (mark, a_next.coeff(x as usize).abs_prec()) {
                if have < m {
                    return Err(Error::Invalid(format!(
                        "working precision exhausted at step {i}: coefficient {x} has {have} < mark {m}"
                    )));
                }
            }
            marks.push(mark);
        }
        let a_next = a_next.truncate_jagged(&marks);
        let b_next = p.divmod(&a_next)?.0;
        let two = PadicScalar::from_i64(p.ring(), 2);
        let v_next = (&v.scale(&two) - &(&(&v * &v) * &b_next)).rem(&a_next)?;
        // marks for V: O(x -> lambda1 x + 2^{i+1} kappa)
        let v_marks: Vec<Option<i64>> = (0..=v_next.degree().unwrap_or(0) as i64)
            .map(|x| {
                (frame.line1_origin(x) + ExtRat::Fin(Rat::from_integer(bump))).ceil_i64()
            })
            .collect();
        let v_next = v_next.truncate_jagged(&v_marks);
        let next = IterState { a: a_next, v: v_next, b: b_next, working_prec: n_i };
        #[cfg(debug_assertions)]
        self.check_induction(&next, i + 1);
        Ok((next, witness))
    }

    #[cfg(debug_assertions)]
    fn check_induction(&self, state: &IterState, i: u32) {
        let frame = self.frame;
        let zero = ExtRat::Fin(Rat::zero());
        debug_assert!(frame.b1_plain(&state.v) >= zero, "b_1(V_{i}) < 0");
        let t = (&Poly::one(state.a.ring()) - &(&state.v * &state.b))
            .rem(&state.a)
            .expect("reduction by A");
        let threshold = match frame.kappa {
            ExtRat::Fin(k) => {
                ExtRat::Fin(k * Rat::from_integer(1i64 << i.min(40)))
            }
            _ => return,
        };
        debug_assert!(
            frame.b0_plain(&t) >= threshold.min(ExtRat::Fin(Rat::from_integer(
                state.working_prec - self.base_prec
            ))),
            "b_0(T_{i}) below 2^{i} kappa"
        );
    }
}

/// Everything the two model-specific drivers share: frame, delta, the
/// monic-factor target precision and the Newton iteration itself.
fn prepare(
    approx: &Poly,
    prec_at: impl Fn(i64) -> ExtRat,
    d: i64,
) -> Result<(SlopeFrame, Rat, NewtonFunction)> {
    let nf_p = approx.newton_function()?;
    let n = nf_p.degree();
    let frame = SlopeFrame::at_break(&nf_p, d)?;
    // delta = min over [0, n-1] of phi_P(x) - phi(x); terms where phi is
    // infinite (exactly known zero coefficients) impose no constraint.
    let mut delta = ExtRat::PosInf;
    for x in 0..n {
        let phi_x = match frame.phi(x) {
            ExtRat::Fin(y) => y,
            _ => continue,
        };
        delta = delta.min(prec_at(x) - ExtRat::Fin(phi_x));
    }
    let delta = match delta {
        ExtRat::Fin(v) => v,
        ExtRat::PosInf => {
            return Err(Error::Invalid(
                "input precision is infinite; truncate to a working precision first".into(),
            ))
        }
        ExtRat::NegInf => return Err(Error::NonPositiveDelta { delta: "-inf".into() }),
    };
    if delta <= Rat::zero() {
        return Err(Error::NonPositiveDelta { delta: delta.to_string() });
    }
    // phi_{A^(1)} = phi|[0,d-1] - phi(d) + delta
    let phi_restr = if d == 0 {
        NewtonFunction::infinity(0)
    } else {
        let pts: Vec<(i64, Rat)> = (0..d)
            .filter_map(|x| frame.phi(x).finite().map(|y| (x, y)))
            .collect();
        NewtonFunction::lower_hull(d - 1, &pts)
    };
    let offset = delta - frame.nf_p.eval_int(d).finite().expect("break is finite");
    let phi_a1 = phi_restr.translate(offset);
    Ok((frame, delta, phi_a1))
}

fn run_iteration(
    frame: &SlopeFrame,
    approx: &Poly,
    delta: Rat,
) -> Result<(Vec<IterState>, Vec<StepWitness>)> {
    let mut guard = 16 + 2 * Iteration::new(frame, approx, 0).base_prec;
    'retry: for _ in 0..6 {
        let iter = Iteration::new(frame, approx, guard);
        let mut states = vec![iter.initial_state()?];
        let mut witnesses = Vec::new();
        let mut i = 0u32;
        loop {
            match frame.kappa {
                ExtRat::PosInf => break,
                ExtRat::Fin(k) if doubling_reaches(i, k, delta) => break,
                _ => {}
            }
            if i >= MAX_ITERATIONS {
                return Err(Error::IterationGuard { max: MAX_ITERATIONS });
            }
            match iter.step(states.last().unwrap(), i) {
                Ok((next, witness)) => {
                    states.push(next);
                    witnesses.push(witness);
                }
                Err(Error::Invalid(_)) => {
                    guard *= 2;
                    continue 'retry;
                }
                Err(e) => return Err(e),
            }
            i += 1;
        }
        return Ok((states, witnesses));
    }
    Err(Error::IterationGuard { max: MAX_ITERATIONS })
}

fn require_monic(p: &Poly) -> Result<usize> {
    let n = p.degree().ok_or(Error::BadLeadingCoefficient)?;
    if p.coeff(n) != PadicScalar::one(p.ring()) {
        return Err(Error::Invalid("input polynomial must be exactly monic".into()));
    }
    Ok(n)
}

/// Slope factorization in the Newton precision model. The input is monic
/// with a nondegenerate precision datum on its coefficients up to degree
/// n-1; the returned monic factor carries O(phi|[0,d-1] - phi(d) + delta).
pub fn slope_factor_newton_model(p: &NewtonPrecPoly, d: i64) -> Result<SlopeFactorResult> {
    let approx = p.approx();
    require_monic(approx)?;
    let nf_p = approx.newton_function()?;
    if !p.prec().nondegenerate_over(&nf_p) {
        return Err(Error::DegeneratePrecision);
    }
    let (frame, delta, phi_a1) = prepare(approx, |x| p.prec().eval_int(x), d)?;
    let (states, witnesses) = run_iteration(&frame, approx, delta)?;
    let result = finalize(&frame, approx, states, witnesses, FactorPrecision::Newton(phi_a1))?;
    Ok(result)
}

fn finalize(
    frame: &SlopeFrame,
    approx: &Poly,
    states: Vec<IterState>,
    witnesses: Vec<StepWitness>,
    precision: FactorPrecision,
) -> Result<SlopeFactorResult> {
    let ring = approx.ring();
    let d = frame.d as usize;
    let last = states.last().expect("at least the initial state");
    let a = last.a.clone();
    let a_d = approx.coeff(d).center();
    let inv_ad = a_d.inv()?;
    let mut a1 = a.scale(&inv_ad);
    a1.set_coeff(d, PadicScalar::one(ring));
    let a1 = match &precision {
        FactorPrecision::Newton(phi_a1) => {
            let mut marks = phi_a1.jagged_ceilings();
            marks.resize(d + 1, None);
            a1.truncate_jagged(&marks)
        }
        FactorPrecision::Lattice(_) => a1,
    };
    let b1 = last.b.scale(&a_d);
    let v1 = last.v.scale(&inv_ad);
    let iterations = witnesses.len() as u32;
    Ok(SlopeFactorResult {
        a,
        a1,
        b1,
        v1,
        precision,
        iterations,
        states,
        witnesses,
        first_order_assumed: false,
    })
}

/// Slope factorization in the lattice precision model: iterate with the
/// Newton-model schedule as a pre-filter, then insist on the two lattice
/// stopping conditions; the output precision is (V1 . H_P) mod A1.
/// Assumes hypothesis (H) on H_P (flagged on the result, not verified).
pub fn slope_factor_lattice_model(
    p_app: &Poly,
    h_p: &PrecLattice,
    d: i64,
    cap: i64,
) -> Result<SlopeFactorResult> {
    let n = require_monic(p_app)?;
    assert_eq!(h_p.dim(), n, "precision lattice lives in degree <= n-1");
    let ring = p_app.ring();
    let nf_p = p_app.newton_function()?;
    let env = h_p.envelope_exponents();
    // The envelope must dominate the polygon strictly at its vertices for
    // NP(P) to be determined by the approximation.
    for x in 0..n as i64 {
        if ExtRat::Fin(Rat::from_integer(env[x as usize])) < nf_p.eval_int(x) {
            return Err(Error::DegeneratePrecision);
        }
    }
    for &(x, y) in nf_p.vertices() {
        if x < n as i64 && ExtRat::Fin(Rat::from_integer(env[x as usize])) <= ExtRat::Fin(y) {
            return Err(Error::DegeneratePrecision);
        }
    }
    let (frame, delta, _phi_a1) =
        prepare(p_app, |x| ExtRat::Fin(Rat::from_integer(env[x as usize])), d)?;
    let iter_guard = 16 + 2 * Iteration::new(&frame, p_app, 0).base_prec;
    let iter = Iteration::new(&frame, p_app, iter_guard);
    let mut states = vec![iter.initial_state()?];
    let mut witnesses = Vec::new();
    let depth = h_p.diag_valuations().into_iter().max().unwrap_or(0) + cap;
    let mut i = 0u32;
    loop {
        let prefilter_done = match frame.kappa {
            ExtRat::PosInf => true,
            ExtRat::Fin(k) => doubling_reaches(i, k, delta),
            ExtRat::NegInf => unreachable!(),
        };
        if prefilter_done {
            if let Some(result) =
                try_lattice_stop(&frame, p_app, h_p, states.last().unwrap(), depth, cap)?
            {
                let mut out = finalize(
                    &frame,
                    p_app,
                    states,
                    witnesses,
                    FactorPrecision::Lattice(result),
                )?;
                out.first_order_assumed = true;
                return Ok(out);
            }
        }
        if i >= MAX_ITERATIONS {
            return Err(Error::IterationGuard { max: MAX_ITERATIONS });
        }
        let (next, witness) = iter.step(states.last().unwrap(), i)?;
        states.push(next);
        witnesses.push(witness);
        i += 1;
    }
}

/// Check the two stopping conditions; `Ok(None)` means "not decidable or not
/// satisfied yet, keep iterating".
fn try_lattice_stop(
    frame: &SlopeFrame,
    p_app: &Poly,
    h_p: &PrecLattice,
    state: &IterState,
    depth: i64,
    cap: i64,
) -> Result<Option<PrecLattice>> {
    let ring = p_app.ring();
    let d = frame.d as usize;
    let n = p_app.degree().unwrap();
    let a_d = p_app.coeff(d).center();
    let inv_ad = match a_d.inv() {
        Ok(x) => x,
        Err(_) => return Ok(None),
    };
    let mut a1 = state.a.truncate_flat(depth).scale(&inv_ad);
    a1.set_coeff(d, PadicScalar::one(ring));
    let centered = |p: &Poly| Poly::new(ring, p.coeffs().iter().map(|c| c.center()).collect());
    let a1 = centered(&a1);
    let p_work = centered(p_app).truncate_flat(depth + 8);
    let b1 = match p_work.divmod(&a1) {
        Ok((q, _)) => q,
        Err(_) => return Ok(None),
    };
    // (i) membership: A1 * (P div A1) must land inside P_app + H_P
    let prod = &a1 * &b1;
    let diff = &prod - &p_work;
    let coeffs: Vec<PadicScalar> = (0..n).map(|i| diff.coeff(i)).collect();
    match h_p.contains(&coeffs) {
        Ok(true) => {}
        Ok(false) => return Ok(None),
        Err(Error::InsufficientCap { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    // (ii) (B1 V1 . H_P) mod A1 = H_P mod A1
    let v1 = centered(&state.v.truncate_flat(depth).scale(&inv_ad));
    let bv = (&b1 * &v1).rem(&a1)?;
    let lhs = h_p.image(d, cap, |g| (&bv * g).rem(&a1));
    let rhs = h_p.image(d, cap, |g| g.rem(&a1));
    match (lhs, rhs) {
        (Ok(l), Ok(r)) if l == r => {
            let h_a1 = h_p.image(d, cap, |g| (&v1 * g).rem(&a1))?;
            Ok(Some(h_a1))
        }
        (Ok(_), Ok(_)) => Ok(None),
        (Err(Error::InsufficientCap { .. }), _) | (_, Err(Error::InsufficientCap { .. })) => {
            Ok(None)
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Check the seven relations tying two consecutive iteration states at their
/// working precision. Returns the 1-based index of the first relation that
/// fails, if any.
pub fn lemma_relations_check(
    p: &Poly,
    s0: &IterState,
    s1: &IterState,
) -> Result<std::result::Result<(), usize>> {
    let ring = p.ring();
    let w = s1.working_prec.min(s0.working_prec);
    let p = Poly::new(ring, p.coeffs().iter().map(|c| c.center()).collect())
        .truncate_flat(w);
    let one = Poly::one(ring);
    let (a0, v0, b0) = (&s0.a, &s0.v, &s0.b);
    let (a1, v1, b1) = (&s1.a, &s1.v, &s1.b);
    let r0 = (v0 * &p).rem(a0)?;
    let r1 = (v1 * &p).rem(a1)?;
    let s_0 = p.rem(a0)?;
    let s_1 = p.rem(a1)?;
    let t0 = (&one - &(v0 * b0)).rem(a0)?;
    let t1 = (&one - &(v1 * b1)).rem(a1)?;
    let q0 = (v0 * &p).divmod(a0)?.0;
    let db = b1 - b0;
    let ds = &s_1 - &s_0;
    let dv = v1 - v0;
    let zeroish = |q: &Poly| q.coeffs().iter().all(|c| c.is_zeroish());
    let checks: Vec<Poly> = vec![
        // (1) Delta B = -(R_i B_{i+1}) div A_i
        &db - &(-&(&r0 * b1)).divmod(a0)?.0,
        // (2) Delta S = -(R_i B_{i+1}) mod A_i
        &ds - &(-&(&r0 * b1)).rem(a0)?,
        // (3) S_{i+1} = (B_{i+1} R_{i+1} + T_{i+1} S_i + T_{i+1} Delta S_i) mod A_{i+1}
        &s_1 - &(&(&(b1 * &r1) + &(&t1 * &s_0)) + &(&t1 * &ds)).rem(a1)?,
        // (4) Delta V = (V_i T_i - V_i^2 Delta B_i) mod A_i
        &dv - &(&(v0 * &t0) - &(&(v0 * v0) * &db)).rem(a0)?,
        // (5) 1 - Q_i = T_i - (V_i S_i) div A_i
        &(&one - &q0) - &(&t0 - &(v0 * &s_0).divmod(a0)?.0),
        // (6) R_{i+1} = (Delta V S_{i+1} + (1 - Q_i) R_i) mod A_{i+1}
        &r1 - &(&(&dv * &s_1) + &(&(&one - &q0) * &r0)).rem(a1)?,
        // (7) T_{i+1} = (T_i + V_i Delta B_i)^2 mod A_{i+1}
        {
            let u = &t0 + &(v0 * &db);
            &t1 - &(&u * &u).rem(a1)?
        },
    ];
    for (k, diff) in checks.iter().enumerate() {
        if !zeroish(diff) {
            return Ok(Err(k + 1));
        }
    }
    Ok(Ok(()))
}

/// Split at every slope of the polygon, leftmost first: factor off the
/// lowest-slope part, divide, recurse on the cofactor. Returns one result
/// per slope, in ascending slope order.
pub fn full_slope_factorization(p: &NewtonPrecPoly) -> Result<Vec<SlopeFactorResult>> {
    let mut out = Vec::new();
    let mut current = p.clone();
    loop {
        let nf = current.approx().newton_function()?;
        let breaks = nf.break_points();
        if breaks.len() <= 2 {
            // single slope: the polynomial itself, reported via the d = n
            // fixed point
            let n = nf.degree();
            out.push(slope_factor_newton_model(&current, n)?);
            return Ok(out);
        }
        let d = breaks[1].abscissa;
        let result = slope_factor_newton_model(&current, d)?;
        let factor = NewtonPrecPoly::new(
            result.a1.clone(),
            match &result.precision {
                FactorPrecision::Newton(nf) => nf.clone(),
                FactorPrecision::Lattice(_) => unreachable!(),
            },
        );
        let (q, _) = current.divmod(&factor)?;
        out.push(result);
        // the cofactor is monic up to rounding of its leading coefficient
        let mut q_approx = Poly::new(
            q.approx().ring(),
            q.approx().coeffs().iter().map(|c| c.center()).collect(),
        );
        let dq = q_approx.degree().ok_or(Error::BadLeadingCoefficient)?;
        q_approx.set_coeff(dq, PadicScalar::one(q.approx().ring()));
        current = NewtonPrecPoly::new(q_approx, q.prec().restrict(dq as i64 - 1));
        if !current.nondegenerate()? {
            return Err(Error::DegeneratePrecision);
        }
    }
}

/// Differential transport of the input lattice onto all slope factors:
/// dA1 = (V1 dP) mod A1 for the factor and
/// dB1 = (dP - B1 dA1) div A1 for the cofactor, applied recursively.
pub fn full_slope_factorization_lattice(
    p_app: &Poly,
    h_p: &PrecLattice,
    cap: i64,
) -> Result<Vec<SlopeFactorResult>> {
    let mut out = Vec::new();
    let mut current = p_app.clone();
    let mut h = h_p.clone();
    loop {
        let nf = current.newton_function()?;
        let breaks = nf.break_points();
        if breaks.len() <= 2 {
            let n = nf.degree();
            out.push(slope_factor_lattice_model(&current, &h, n, cap)?);
            return Ok(out);
        }
        let d = breaks[1].abscissa;
        let result = slope_factor_lattice_model(&current, &h, d, cap)?;
        let ring = current.ring();
        let centered = |p: &Poly| Poly::new(ring, p.coeffs().iter().map(|c| c.center()).collect());
        let a1 = centered(&result.a1);
        let b1 = centered(&result.b1);
        let v1 = centered(&result.v1);
        let db = b1.degree().ok_or(Error::BadLeadingCoefficient)?;
        let h_b = h.image(db, cap, |g| {
            let da1 = (&v1 * g).rem(&a1)?;
            Ok((g - &(&b1 * &da1)).divmod(&a1)?.0)
        })?;
        out.push(result);
        let mut next = b1;
        next.set_coeff(db, PadicScalar::one(ring));
        current = next;
        h = h_b;
    }
}

pub use crate::prec::NewtonPrecPoly as MonicInput;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::rat;
    use crate::ring::BaseRing;

    fn q2() -> BaseRing {
        BaseRing::padic(2).unwrap()
    }

    fn xxp() -> Poly {
        Poly::from_i64(q2(), &[2, 1, 0, 0, 0, 1]) // X^5 + X + 2
    }

    #[test]
    fn kappa_at_breaks() {
        assert_eq!(kappa(&xxp(), 1).unwrap(), ExtRat::Fin(Rat::from_integer(1)));
        assert_eq!(kappa(&xxp(), 5).unwrap(), ExtRat::PosInf);
        assert_eq!(kappa(&xxp(), 0).unwrap(), ExtRat::PosInf);
        // X^5 + 2 has a single slope: abscissa 2 is not extremal
        let e = Poly::from_i64(q2(), &[2, 0, 0, 0, 0, 1]);
        assert_eq!(kappa(&e, 2), Err(Error::NoBreakAt { d: 2 }));
    }

    #[test]
    fn b_functionals_of_reference_objects() {
        let p = xxp();
        let zero = Poly::zero(q2());
        let (bphi, b0, b1) = b_functionals(&zero, &p, 1).unwrap();
        assert_eq!((bphi, b0, b1), (ExtRat::PosInf, ExtRat::PosInf, ExtRat::PosInf));
        let (bphi, b0, _) = b_functionals(&p, &p, 1).unwrap();
        assert_eq!(bphi, ExtRat::Fin(Rat::zero()));
        assert_eq!(b0, ExtRat::Fin(Rat::zero()));
        // a constant c: b_phi(c) = val(c) - phi(0)
        let c = Poly::from_i64(q2(), &[8]);
        let (bphi, _, _) = b_functionals(&c, &p, 1).unwrap();
        assert_eq!(bphi, ExtRat::Fin(Rat::from_integer(2))); // val 3 - phi(0)=1
    }

    #[test]
    fn fixed_points_at_polygon_ends() {
        let p = NewtonPrecPoly::flat(xxp().low_part(5).is_zero().then(|| unreachable!()).unwrap_or(xxp()), 10);
        // d = n: A = P immediately
        let r = slope_factor_newton_model(&p, 5).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.a.trimmed().degree(), Some(5));
        assert!(r.a1.contains_poly(&xxp()));
        // d = 0: the constant coefficient
        let r = slope_factor_newton_model(&p, 0).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.a.trimmed().degree(), Some(0));
    }

    #[test]
    fn two_slopes_example_with_hensel_oracle() {
        // P = X^5 + X + 2 at O(2^10), d = 1: kappa = 1, delta = 9,
        // phi_{A1} = 10 on [0,0]; 4 iterations; the root is the Hensel lift
        // of -2.
        let p = NewtonPrecPoly::flat(xxp(), 10);
        let r = slope_factor_newton_model(&p, 1).unwrap();
        assert_eq!(r.iterations, 4);
        let phi = r.newton_precision().unwrap();
        assert_eq!(phi.eval_int(0), ExtRat::Fin(Rat::from_integer(10)));
        // independent oracle: Newton-lift the valuation-1 root r of P,
        // starting from -2, in plain modular arithmetic
        let modulus = 1i64 << 12;
        let f = |x: i64| -> i64 {
            (x * x % modulus * x % modulus * x % modulus * x % modulus + x + 2)
                .rem_euclid(modulus)
        };
        let fp = |x: i64| -> i64 { (5 * x * x % modulus * x % modulus * x % modulus + 1).rem_euclid(modulus) };
        let mut root = -2i64;
        for _ in 0..6 {
            let inv = (0..modulus).find(|u| (fp(root) * u).rem_euclid(modulus) == 1).unwrap();
            root = (root - f(root) * inv).rem_euclid(modulus);
        }
        assert_eq!(f(root), 0);
        assert_eq!(root.rem_euclid(32), (-2i64).rem_euclid(32));
        // A1 = X - root within O(2^10)
        let factor = Poly::new(
            q2(),
            vec![
                PadicScalar::from_i64(q2(), -root),
                PadicScalar::from_i64(q2(), 1),
            ],
        );
        assert!(r.a1.contains_poly(&factor), "a1 = {} root {root}", r.a1);
        // P mod A1 vanishes at the output precision
        let rem = xxp().rem(&r.a1).unwrap();
        assert!(rem.coeffs().iter().all(|c| c.is_zeroish()), "rem {rem}");
    }

    #[test]
    fn lemma_relations_hold_on_the_example() {
        let p = NewtonPrecPoly::flat(xxp(), 16);
        let r = slope_factor_newton_model(&p, 1).unwrap();
        assert!(r.states.len() >= 2);
        for w in r.states.windows(2) {
            let verdict = lemma_relations_check(&xxp(), &w[0], &w[1]).unwrap();
            assert_eq!(verdict, Ok(()));
        }
        // d = n fixed point: consecutive states are equal, relations trivial
        let r = slope_factor_newton_model(&p, 5).unwrap();
        let s = &r.states[0];
        assert_eq!(lemma_relations_check(&xxp(), s, s).unwrap(), Ok(()));
    }

    #[test]
    fn full_factorization_degrees_follow_the_slopes() {
        let p = NewtonPrecPoly::flat(xxp(), 12);
        let rs = full_slope_factorization(&p).unwrap();
        let degs: Vec<usize> = rs.iter().map(|r| r.a1.trimmed().degree().unwrap()).collect();
        assert_eq!(degs, vec![1, 4]);
        // single slope: the polynomial itself
        let single = NewtonPrecPoly::flat(Poly::from_i64(q2(), &[2, 0, 0, 0, 0, 1]), 12);
        let rs = full_slope_factorization(&single).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].a1.trimmed().degree(), Some(5));
    }

    #[test]
    fn three_factor_product_splits_by_slope() {
        // (X+2)(X^2+X+1)(X^3+4): slopes -1, 0, -2/3 -> degrees 1, 3, 2
        // in ascending slope order
        let a = Poly::from_i64(q2(), &[2, 1]);
        let b = Poly::from_i64(q2(), &[1, 1, 1]);
        let c = Poly::from_i64(q2(), &[4, 0, 0, 1]);
        let p = &(&a * &b) * &c;
        let nf = p.newton_function().unwrap();
        let slopes: Vec<Rat> = nf
            .break_points()
            .iter()
            .filter_map(|bp| bp.right_slope.finite())
            .collect();
        assert_eq!(slopes, vec![rat(-1, 1), rat(-2, 3), rat(0, 1)]);
        let rs = full_slope_factorization(&NewtonPrecPoly::flat(p.clone(), 20)).unwrap();
        let degs: Vec<usize> = rs.iter().map(|r| r.a1.trimmed().degree().unwrap()).collect();
        assert_eq!(degs, vec![1, 3, 2]);
        // the product of the recovered monic factors reproduces P within the
        // weakest returned precision
        let prod = rs
            .iter()
            .fold(Poly::one(q2()), |acc, r| &acc * &r.a1);
        assert!(prod.contains_poly(&p) || p.contains_poly(&prod.trimmed()) || {
            let diff = &prod - &p;
            diff.coeffs().iter().all(|c| c.is_zeroish())
        });
    }

    #[test]
    fn lattice_model_matches_newton_on_flat_input() {
        let p = xxp();
        let h_p = PrecLattice::scaled_standard(q2(), 5, 10, 60);
        let r = slope_factor_lattice_model(&p, &h_p, 1, 60).unwrap();
        assert!(r.first_order_assumed);
        let h_a1 = r.lattice_precision().unwrap();
        assert_eq!(h_a1.dim(), 1);
        // Newton model on the same input: phi_{A1} = flat 10 restricted
        let newton = slope_factor_newton_model(&NewtonPrecPoly::flat(p, 10), 1).unwrap();
        let phi = newton.newton_precision().unwrap();
        let expected = PrecLattice::diagonal(
            q2(),
            &phi.jagged_ceilings().iter().map(|c| c.unwrap()).collect::<Vec<_>>(),
            60,
        );
        assert_eq!(h_a1, &expected);
        assert!(newton.a1.contains_poly(&r.a1.coeffs().iter().map(|c| c.center()).collect::<Vec<_>>().into_iter().fold(Poly::zero(q2()), |mut acc, c| { let i = acc.coeffs().len(); acc.set_coeff(i, c); acc })));
    }
}
