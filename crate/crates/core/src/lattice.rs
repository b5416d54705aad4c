//! Lattice precision: full-rank W-modules in the space of polynomials of
//! bounded degree, held in a triangular canonical form.
//!
//! A lattice is stored as `pi^shift` times an integral lattice whose basis
//! matrix is upper triangular with diagonal entries `pi^{e_j}` and the
//! off-diagonal entries of row i reduced modulo `pi^{e_i}`. This canonical
//! form is unique, so lattice equality is representation equality.
//! Echelonization works on residues modulo `pi^cap` with valuation pivoting;
//! every division by `pi^{e}` costs `e` digits of certainty, which is
//! accounted for pessimistically and reported as `InsufficientCap` when the
//! budget runs out.

use num::{BigInt, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ring::BaseRing;
use crate::scalar::{PadicScalar, ValInfo};

/// Total precision gain split into its jagged-visible and diffused parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiffusedReport {
    /// Index of the lattice against pi^N times the standard lattice.
    pub g: i64,
    /// Gain visible to a per-coefficient (jagged) datum.
    pub g_nd: i64,
    /// Diffused digits: index of the largest diagonal sublattice.
    pub g_d: i64,
}

#[derive(Debug, Clone)]
pub struct PrecLattice {
    ring: BaseRing,
    dim: usize,
    cap: i64,
    shift: i64,
    /// basis[j] = generator with pivot on coordinate j, entries by row.
    basis: Vec<Vec<BigInt>>,
    /// Valuations of the diagonal entries, relative to `shift`.
    diag: Vec<i64>,
}

impl PartialEq for PrecLattice {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring
            && self.dim == other.dim
            && self.shift == other.shift
            && self.diag == other.diag
            && self.basis == other.basis
    }
}

impl PrecLattice {
    /// Canonical form of the lattice spanned by the given generators
    /// (coordinate vectors of length `dim`). Fails if the generators do not
    /// visibly span a full-rank module at the working cap.
    pub fn from_generators(
        ring: BaseRing,
        dim: usize,
        gens: &[Vec<PadicScalar>],
        cap: i64,
    ) -> Result<Self> {
        assert!(dim > 0 && cap > 0);
        let mut shift = i64::MAX;
        for g in gens {
            assert_eq!(g.len(), dim, "generator has wrong dimension");
            for c in g {
                if let ValInfo::Known(v) = c.val_info() {
                    shift = shift.min(v);
                }
            }
        }
        if shift == i64::MAX {
            return Err(Error::RankDeficient { row: dim as i64 - 1, cap });
        }
        let mut cols: Vec<Vec<BigInt>> = Vec::with_capacity(gens.len());
        for g in gens {
            let mut col = Vec::with_capacity(dim);
            for c in g {
                col.push(c.residue(shift, shift + cap)?);
            }
            cols.push(col);
        }
        Self::normalize(ring, dim, cap, shift, cols)
    }

    pub fn from_poly_generators(
        ring: BaseRing,
        dim: usize,
        gens: &[Poly],
        cap: i64,
    ) -> Result<Self> {
        let vecs: Vec<Vec<PadicScalar>> = gens
            .iter()
            .map(|p| (0..dim).map(|i| p.coeff(i)).collect())
            .collect();
        Self::from_generators(ring, dim, &vecs, cap)
    }

    /// The diagonal lattice spanned by pi^{exps[i]} X^i.
    pub fn diagonal(ring: BaseRing, exps: &[i64], cap: i64) -> Self {
        let dim = exps.len();
        let shift = exps.iter().copied().min().expect("nonempty");
        let mut basis = Vec::with_capacity(dim);
        let mut diag = Vec::with_capacity(dim);
        for (j, &e) in exps.iter().enumerate() {
            let mut col = vec![BigInt::zero(); dim];
            col[j] = ring.pi_pow((e - shift) as u64);
            basis.push(col);
            diag.push(e - shift);
        }
        PrecLattice { ring, dim, cap, shift, basis, diag }
    }

    /// pi^n times the standard lattice.
    pub fn scaled_standard(ring: BaseRing, dim: usize, n: i64, cap: i64) -> Self {
        Self::diagonal(ring, &vec![n; dim], cap)
    }

    fn normalize(
        ring: BaseRing,
        dim: usize,
        cap: i64,
        shift: i64,
        mut cols: Vec<Vec<BigInt>>,
    ) -> Result<Self> {
        // Pessimistic certainty budget: each pivot division by pi^e costs e
        // digits of the cap.
        let mut budget = cap;
        let mut assigned: Vec<Option<Vec<BigInt>>> = vec![None; dim];
        let mut diag = vec![0i64; dim];
        for row in (0..dim).rev() {
            // valuation pivoting: the unassigned column with minimal
            // valuation in this row
            let mut best: Option<(usize, u64)> = None;
            for (k, col) in cols.iter().enumerate() {
                if let Some(v) = ring.mant_val(&col[row]) {
                    if (v as i64) < budget && best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((k, v));
                    }
                }
            }
            let Some((k, e)) = best else {
                return Err(Error::RankDeficient { row: row as i64, cap });
            };
            let mut pivot = cols.swap_remove(k);
            // scale so the pivot entry is exactly pi^e
            let unit = ring.mant_unshift(&pivot[row], e);
            let inv = ring.mant_inv_mod(&unit, cap as u64)?;
            for entry in pivot.iter_mut() {
                *entry = ring.mant_mod(&ring.mant_mul(entry, &inv), cap as u64);
            }
            debug_assert_eq!(pivot[row], ring.pi_pow(e));
            for col in cols.iter_mut() {
                let v = ring.mant_val(&col[row]);
                if v.is_none() {
                    continue;
                }
                let ratio = ring.mant_unshift(&col[row], e);
                for (entry, p) in col.iter_mut().zip(pivot.iter()) {
                    *entry =
                        ring.mant_mod(&ring.mant_sub(entry, &ring.mant_mul(&ratio, p)), cap as u64);
                }
                debug_assert!(col[row].is_zero());
            }
            budget -= e as i64;
            if budget <= 0 {
                return Err(Error::InsufficientCap { cap });
            }
            diag[row] = e as i64;
            assigned[row] = Some(pivot);
        }
        let mut basis: Vec<Vec<BigInt>> =
            assigned.into_iter().map(|c| c.expect("assigned")).collect();
        // Reduce the off-diagonal entries of each row modulo its diagonal.
        for j in 0..dim {
            for i in (0..j).rev() {
                let e_i = diag[i] as u64;
                let rem = ring.mant_mod(&basis[j][i], e_i);
                let mult = ring.mant_unshift(&ring.mant_sub(&basis[j][i], &rem), e_i);
                if mult.is_zero() {
                    continue;
                }
                let col_i = basis[i].clone();
                for (entry, p) in basis[j].iter_mut().zip(col_i.iter()) {
                    *entry =
                        ring.mant_mod(&ring.mant_sub(entry, &ring.mant_mul(&mult, p)), cap as u64);
                }
            }
        }
        // Canonical shift: pull any common pi power into `shift`.
        let mut common = diag.iter().copied().min().unwrap_or(0);
        for col in &basis {
            for entry in col {
                if let Some(v) = ring.mant_val(entry) {
                    common = common.min(v as i64);
                }
            }
        }
        if common > 0 {
            for col in basis.iter_mut() {
                for entry in col.iter_mut() {
                    *entry = ring.mant_unshift(entry, common as u64);
                }
            }
            for d in diag.iter_mut() {
                *d -= common;
            }
        }
        Ok(PrecLattice {
            ring,
            dim,
            cap: budget,
            shift: shift + common,
            basis,
            diag,
        })
    }

    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Valuations of the diagonal entries (absolute, i.e. including the
    /// shift), indexed by coordinate.
    pub fn diag_valuations(&self) -> Vec<i64> {
        self.diag.iter().map(|e| e + self.shift).collect()
    }

    /// Generators as exact coordinate vectors.
    pub fn generators(&self) -> Vec<Vec<PadicScalar>> {
        self.basis
            .iter()
            .map(|col| {
                col.iter()
                    .map(|e| PadicScalar::from_mantissa(self.ring, self.shift, e.clone()))
                    .collect()
            })
            .collect()
    }

    pub fn generator_polys(&self) -> Vec<Poly> {
        self.generators()
            .into_iter()
            .map(|v| Poly::new(self.ring, v))
            .collect()
    }

    /// Membership modulo pi^(shift+cap). The queried vector must carry
    /// enough precision to read its residues at the cap.
    pub fn contains(&self, v: &[PadicScalar]) -> Result<bool> {
        assert_eq!(v.len(), self.dim);
        for c in v {
            if let ValInfo::Known(val) = c.val_info() {
                if val < self.shift {
                    return Ok(false);
                }
            }
        }
        let mut r: Vec<BigInt> = v
            .iter()
            .map(|c| c.residue(self.shift, self.shift + self.cap))
            .collect::<Result<_>>()?;
        for row in (0..self.dim).rev() {
            let Some(val) = self.ring.mant_val(&r[row]) else {
                continue;
            };
            let e = self.diag[row] as u64;
            if val < e {
                return Ok(false);
            }
            let ratio = self.ring.mant_unshift(&r[row], e);
            for (entry, p) in r.iter_mut().zip(self.basis[row].iter()) {
                *entry = self.ring.mant_mod(
                    &self.ring.mant_sub(entry, &self.ring.mant_mul(&ratio, p)),
                    self.cap as u64,
                );
            }
        }
        Ok(true)
    }

    /// Signed covolume index of this lattice against pi^n times the standard
    /// lattice: sum of (n - e_i) over the diagonal valuations e_i. Positive
    /// when the lattice is coarser than pi^n L.
    pub fn index_in_scaled_standard(&self, n: i64) -> i64 {
        self.diag_valuations().iter().map(|e| n - e).sum()
    }

    /// The benchmark's gain of absolute precision: the index of pi^n L in
    /// this lattice, positive when the lattice is finer than pi^n L.
    pub fn gain_vs_scaled_standard(&self, n: i64) -> i64 {
        -self.index_in_scaled_standard(n)
    }

    /// Smallest exponents M_i with pi^{M_i} X^i in the lattice, found by
    /// exact back-substitution over the triangular basis.
    pub fn min_exponents(&self) -> Vec<i64> {
        (0..self.dim)
            .map(|i| {
                // Solve basis * lambda = X^i over K; the needed power of pi
                // is the worst denominator among the lambda_j.
                // Residual tracked exactly as (mantissa vector) * pi^{-depth}.
                let ring = self.ring;
                let mut res: Vec<BigInt> = vec![BigInt::zero(); self.dim];
                res[i] = BigInt::from(1);
                let mut depth = 0i64;
                let mut worst = 0i64;
                for row in (0..=i).rev() {
                    if res[row].is_zero() {
                        continue;
                    }
                    let e = self.diag[row];
                    // lambda_row = res[row] * pi^{-(depth + e)}
                    let lam_val = ring.mant_val(&res[row]).unwrap() as i64 - depth - e;
                    worst = worst.max(-lam_val);
                    // res <- res * pi^e - res[row] * basis[row]
                    let t = res[row].clone();
                    for (entry, p) in res.iter_mut().zip(self.basis[row].iter()) {
                        *entry = ring.mant_sub(
                            &ring.mant_shift(entry, e as u64),
                            &ring.mant_mul(&t, p),
                        );
                    }
                    depth += e;
                    debug_assert!(res[row].is_zero());
                }
                worst + self.shift
            })
            .collect()
    }

    /// Per-coordinate minimum valuations over the lattice: the exponents of
    /// the smallest diagonal lattice containing this one.
    pub fn envelope_exponents(&self) -> Vec<i64> {
        (0..self.dim)
            .map(|i| {
                let mut best = i64::MAX;
                for col in &self.basis {
                    if let Some(v) = self.ring.mant_val(&col[i]) {
                        best = best.min(v as i64);
                    }
                }
                best + self.shift
            })
            .collect()
    }

    /// Gain report against input level n. The non-diffused part is the gain
    /// the smallest enclosing diagonal lattice can certify (the best any
    /// per-coefficient datum can soundly claim); the diffused part is the
    /// index of the lattice inside that envelope, i.e. the digits no jagged
    /// datum can see.
    pub fn diffused_digits(&self, n: i64) -> DiffusedReport {
        let g = self.gain_vs_scaled_standard(n);
        let sum_e: i64 = self.diag_valuations().iter().sum();
        let sum_env: i64 = self.envelope_exponents().iter().sum();
        let g_d = sum_e - sum_env;
        DiffusedReport { g, g_nd: g - g_d, g_d }
    }

    /// Image lattice under a linear map given on generator polynomials.
    pub fn image<F>(&self, out_dim: usize, cap: i64, f: F) -> Result<PrecLattice>
    where
        F: Fn(&Poly) -> Result<Poly>,
    {
        let images: Vec<Poly> = self
            .generator_polys()
            .iter()
            .map(&f)
            .collect::<Result<_>>()?;
        PrecLattice::from_poly_generators(self.ring, out_dim, &images, cap)
    }

    /// JSON dump: canonical basis matrix (row = monomial, column =
    /// generator), diagonal valuations and the shift.
    pub fn to_json(&self) -> serde_json::Value {
        let matrix: Vec<Vec<String>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.basis[j][i].to_string()).collect())
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "shift": self.shift,
            "diag_valuations": self.diag_valuations(),
            "matrix": matrix,
        })
    }
}

/// Quotient/remainder approximations with their precision lattices. The
/// joint lattice lives in the stacked space (quotient coordinates first,
/// then the d remainder coordinates); its projections lose the correlations
/// between quotient and remainder, so all three are returned.
#[derive(Debug, Clone)]
pub struct LatticeDivmod {
    pub q_app: Poly,
    pub r_app: Poly,
    pub h_q: PrecLattice,
    pub h_r: PrecLattice,
    pub joint: PrecLattice,
}

/// Euclidean division with lattice precision: dQ and dR are the quotient and
/// remainder of dX = dA - Q_app dB by B_app, applied to the generators of
/// the input lattices (`None` for an exactly known divisor).
pub fn divmod_lattice(
    a_app: &Poly,
    h_a: &PrecLattice,
    b_app: &Poly,
    h_b: Option<&PrecLattice>,
    cap: i64,
) -> Result<LatticeDivmod> {
    let ring = a_app.ring();
    let n = h_a.dim() - 1; // degree bound of A
    let d = b_app.degree().ok_or(Error::DivisionByZero)?;
    assert!(n >= d && d >= 1);
    let (q_app, r_app) = a_app.divmod(b_app)?;
    let stack = |dx: &Poly| -> Result<Vec<PadicScalar>> {
        let (dq, dr) = dx.divmod(b_app)?;
        let mut v: Vec<PadicScalar> = (0..=(n - d)).map(|i| dq.coeff(i)).collect();
        v.extend((0..d).map(|i| dr.coeff(i)));
        Ok(v)
    };
    let mut joint_gens: Vec<Vec<PadicScalar>> = Vec::new();
    for g in h_a.generator_polys() {
        joint_gens.push(stack(&g)?);
    }
    if let Some(h_b) = h_b {
        for g in h_b.generator_polys() {
            joint_gens.push(stack(&-&(&q_app * &g))?);
        }
    }
    let joint = PrecLattice::from_generators(ring, n + 1, &joint_gens, cap)?;
    let q_gens: Vec<Vec<PadicScalar>> =
        joint_gens.iter().map(|v| v[..=(n - d)].to_vec()).collect();
    let r_gens: Vec<Vec<PadicScalar>> =
        joint_gens.iter().map(|v| v[(n - d + 1)..].to_vec()).collect();
    let h_q = PrecLattice::from_generators(ring, n - d + 1, &q_gens, cap)?;
    let h_r = PrecLattice::from_generators(ring, d, &r_gens, cap)?;
    Ok(LatticeDivmod { q_app, r_app, h_q, h_r, joint })
}

/// Modular multiplication chain in the lattice model. One joint lattice is
/// propagated: each step maps the running lattice through dP -> (P_i dP)
/// mod M and adjoins the fresh input's own precision through
/// dP_i -> (P dP_i) mod M.
pub fn modmul_chain_lattice(
    modulus: &Poly,
    inputs: &[Poly],
    n: i64,
    cap: i64,
) -> Result<(Poly, PrecLattice, DiffusedReport)> {
    assert!(!inputs.is_empty());
    let ring = modulus.ring();
    let d = modulus.degree().expect("modulus is nonzero");
    let value_cap = n + cap;
    let reduce = |p: &Poly| -> Result<Poly> {
        let coeffs: Vec<PadicScalar> = (0..d)
            .map(|i| {
                let c = p.coeff(i).center();
                Ok(PadicScalar::from_mantissa(ring, 0, c.residue(0, value_cap)?))
            })
            .collect::<Result<_>>()?;
        Ok(Poly::new(ring, coeffs))
    };
    let mut p_app = Poly::one(ring);
    let mut h: Option<PrecLattice> = None;
    for input in inputs {
        let center = reduce(&input.trimmed())?;
        let mut gens: Vec<Poly> = Vec::new();
        if let Some(h) = &h {
            for g in h.generator_polys() {
                gens.push((&center * &g).rem(modulus)?);
            }
        }
        for j in 0..d {
            let fresh = p_app.shift_degree(j).rem(modulus)?;
            gens.push(fresh.scale(&PadicScalar::from_mantissa(
                ring,
                n,
                BigInt::from(1),
            )));
        }
        h = Some(PrecLattice::from_poly_generators(ring, d, &gens, cap)?);
        p_app = reduce(&(&p_app * &center).rem(modulus)?)?;
    }
    let h = h.expect("at least one input");
    let report = h.diffused_digits(n);
    Ok((p_app, h, report))
}
