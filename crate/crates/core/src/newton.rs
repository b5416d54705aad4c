//! Convex piecewise-affine Newton functions and their min-plus algebra.
//!
//! A Newton function of degree n is convex on [0, n], finite on a closed
//! subinterval [lo, hi] and +infinity outside it, with extremal points at
//! integral abscissas. The polygon of a nonzero polynomial is finite at its
//! actual degree; precision data may additionally be +infinity on a right
//! segment (exactly known coefficients, e.g. the leading 1 of a monic
//! polynomial). The all-infinite function stands for the polygon of the zero
//! polynomial and for "known exactly".

use num::rational::Rational64;
use num::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rat = Rational64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

/// A rational extended with both infinities (slopes and ordinates).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtRat {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl ExtRat {
    pub fn finite(self) -> Option<Rat> {
        match self {
            ExtRat::Fin(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtRat::Fin(_))
    }

    pub fn ceil_i64(self) -> Option<i64> {
        self.finite().map(|r| r.ceil().to_integer())
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Fin(r)
    }
}

impl From<i64> for ExtRat {
    fn from(n: i64) -> Self {
        ExtRat::Fin(Rat::from_integer(n))
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExtRat::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => std::cmp::Ordering::Equal,
            (NegInf, _) | (_, PosInf) => std::cmp::Ordering::Less,
            (_, NegInf) | (PosInf, _) => std::cmp::Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl std::ops::Add for ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: ExtRat) -> ExtRat {
        use ExtRat::*;
        match (self, rhs) {
            (PosInf, NegInf) | (NegInf, PosInf) => panic!("inf - inf"),
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (Fin(a), Fin(b)) => Fin(a + b),
        }
    }
}

impl std::ops::Sub for ExtRat {
    type Output = ExtRat;
    fn sub(self, rhs: ExtRat) -> ExtRat {
        use ExtRat::*;
        match rhs {
            PosInf => self + NegInf,
            NegInf => self + PosInf,
            Fin(b) => self + Fin(-b),
        }
    }
}

impl std::fmt::Display for ExtRat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtRat::NegInf => write!(f, "-inf"),
            ExtRat::PosInf => write!(f, "+inf"),
            ExtRat::Fin(r) => write!(f, "{r}"),
        }
    }
}

/// An extremal point of a Newton polygon together with the adjacent slopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BreakPoint {
    pub abscissa: i64,
    pub left_slope: ExtRat,
    pub right_slope: ExtRat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonFunction {
    degree: i64,
    /// Extremal points over the finite window; empty means +infinity
    /// everywhere.
    vertices: Vec<(i64, Rat)>,
}

impl NewtonFunction {
    /// The function that is +infinity on all of [0, degree].
    pub fn infinity(degree: i64) -> Self {
        assert!(degree >= 0);
        NewtonFunction { degree, vertices: Vec::new() }
    }

    /// Constant function on [0, degree].
    pub fn flat(degree: i64, value: Rat) -> Self {
        assert!(degree >= 0);
        let mut vertices = vec![(0, value)];
        if degree > 0 {
            vertices.push((degree, value));
        }
        NewtonFunction { degree, vertices }
    }

    pub fn point(x: i64, y: Rat) -> Self {
        NewtonFunction { degree: x, vertices: vec![(x, y)] }
    }

    /// Lower convex hull of a point set; ordinates +infinity are simply
    /// omitted by the caller.
    pub fn lower_hull(degree: i64, points: &[(i64, Rat)]) -> Self {
        assert!(degree >= 0);
        let mut pts: Vec<(i64, Rat)> = points.to_vec();
        pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        pts.dedup_by(|next, prev| next.0 == prev.0); // keep the lowest per abscissa
        let mut hull: Vec<(i64, Rat)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // drop b unless the chain turns strictly left at b
                let cross = Rat::from_integer(b.0 - a.0) * (p.1 - a.1)
                    - (b.1 - a.1) * Rat::from_integer(p.0 - a.0);
                if cross.is_positive() {
                    break;
                }
                hull.pop();
            }
            hull.push(p);
        }
        for &(x, _) in &hull {
            assert!((0..=degree).contains(&x), "abscissa {x} outside [0, {degree}]");
        }
        NewtonFunction { degree, vertices: hull }
    }

    /// Build from checked vertices (must already be strictly convex).
    fn from_vertices(degree: i64, vertices: Vec<(i64, Rat)>) -> Self {
        let nf = NewtonFunction { degree, vertices };
        debug_assert!(nf.check_invariants());
        nf
    }

    fn check_invariants(&self) -> bool {
        if self.degree < 0 {
            return false;
        }
        let v = &self.vertices;
        for w in v.windows(2) {
            if w[0].0 >= w[1].0 {
                return false;
            }
        }
        if let (Some(f), Some(l)) = (v.first(), v.last()) {
            if f.0 < 0 || l.0 > self.degree {
                return false;
            }
        }
        for w in v.windows(3) {
            let s1 = (w[1].1 - w[0].1) / Rat::from_integer(w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / Rat::from_integer(w[2].0 - w[1].0);
            if s1 >= s2 {
                return false;
            }
        }
        true
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn is_infinite(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Left end of the finite window (`None` if infinite everywhere).
    pub fn finite_from(&self) -> Option<i64> {
        self.vertices.first().map(|&(x, _)| x)
    }

    /// Right end of the finite window.
    pub fn finite_until(&self) -> Option<i64> {
        self.vertices.last().map(|&(x, _)| x)
    }

    pub fn vertices(&self) -> &[(i64, Rat)] {
        &self.vertices
    }

    pub fn eval(&self, x: Rat) -> ExtRat {
        let (Some(&(lo, ylo)), Some(&(hi, _))) = (self.vertices.first(), self.vertices.last())
        else {
            return ExtRat::PosInf;
        };
        if x < Rat::from_integer(lo) || x > Rat::from_integer(hi) {
            return ExtRat::PosInf;
        }
        if x == Rat::from_integer(lo) {
            return ExtRat::Fin(ylo);
        }
        let i = self.vertices.partition_point(|&(vx, _)| Rat::from_integer(vx) < x);
        let (x1, y1) = self.vertices[i - 1];
        let (x2, y2) = self.vertices[i];
        let t = (x - Rat::from_integer(x1)) / Rat::from_integer(x2 - x1);
        ExtRat::Fin(y1 + t * (y2 - y1))
    }

    pub fn eval_int(&self, x: i64) -> ExtRat {
        self.eval(Rat::from_integer(x))
    }

    /// ceil(value at an integer abscissa); `None` means exactly known.
    pub fn ceil_at(&self, x: i64) -> Option<i64> {
        self.eval_int(x).ceil_i64()
    }

    /// Add a finite constant.
    pub fn translate(&self, c: Rat) -> Self {
        NewtonFunction {
            degree: self.degree,
            vertices: self.vertices.iter().map(|&(x, y)| (x, y + c)).collect(),
        }
    }

    fn translate_ext(&self, c: ExtRat) -> Self {
        match c {
            ExtRat::Fin(c) => self.translate(c),
            ExtRat::PosInf => Self::infinity(self.degree),
            ExtRat::NegInf => panic!("translate by -inf"),
        }
    }

    /// Restriction to [0, k] (k <= degree), keeping abscissas.
    pub fn restrict(&self, k: i64) -> Self {
        assert!(k >= 0);
        if self.is_infinite() || self.finite_from().unwrap() > k {
            return Self::infinity(k.min(self.degree).max(0));
        }
        let mut vertices: Vec<(i64, Rat)> =
            self.vertices.iter().copied().take_while(|&(x, _)| x < k).collect();
        if let ExtRat::Fin(y) = self.eval_int(k) {
            vertices.push((k, y));
        }
        NewtonFunction::from_vertices(k, vertices)
    }

    /// The function x -> self(x + d) on [0, degree - d].
    pub fn shift_left(&self, d: i64) -> Self {
        assert!(d >= 0 && d <= self.degree);
        let degree = self.degree - d;
        if self.is_infinite() {
            return Self::infinity(degree);
        }
        let mut vertices: Vec<(i64, Rat)> = Vec::new();
        if let ExtRat::Fin(y) = self.eval_int(d) {
            vertices.push((0, y));
        }
        for &(x, y) in &self.vertices {
            if x > d {
                vertices.push((x - d, y));
            }
        }
        // A vertex at d itself would duplicate the evaluated boundary point;
        // collinearity cannot occur because interior vertices stay extremal.
        NewtonFunction::from_vertices(degree, vertices)
    }

    /// Greatest convex function below min(self, other): hull of the union of
    /// epigraphs. Degrees may differ; the result has the larger degree.
    pub fn min_hull(&self, other: &Self) -> Self {
        let degree = self.degree.max(other.degree);
        if self.is_infinite() {
            return NewtonFunction { degree, vertices: other.vertices.clone() };
        }
        if other.is_infinite() {
            return NewtonFunction { degree, vertices: self.vertices.clone() };
        }
        let mut pts = self.vertices.clone();
        pts.extend_from_slice(&other.vertices);
        Self::lower_hull(degree, &pts)
    }

    /// Slope runs (slope, length) between consecutive vertices.
    fn runs(&self) -> Vec<(Rat, i64)> {
        self.vertices
            .windows(2)
            .map(|w| {
                let len = w[1].0 - w[0].0;
                ((w[1].1 - w[0].1) / Rat::from_integer(len), len)
            })
            .collect()
    }

    fn from_start_and_runs(degree: i64, start: (i64, Rat), runs: &[(Rat, i64)]) -> Self {
        let mut vertices = vec![start];
        let (mut x, mut y) = start;
        let mut i = 0;
        while i < runs.len() {
            let slope = runs[i].0;
            let mut len = 0i64;
            while i < runs.len() && runs[i].0 == slope {
                len += runs[i].1;
                i += 1;
            }
            x += len;
            y += slope * Rat::from_integer(len);
            vertices.push((x, y));
        }
        NewtonFunction::from_vertices(degree, vertices)
    }

    /// Minkowski sum of epigraphs (inf-convolution): merge the slope
    /// multisets in increasing order. Result degree is the sum of degrees.
    pub fn minkowski(&self, other: &Self) -> Self {
        let degree = self.degree + other.degree;
        if self.is_infinite() || other.is_infinite() {
            return Self::infinity(degree);
        }
        let (a0, b0) = (self.vertices[0], other.vertices[0]);
        let mut runs = self.runs();
        runs.extend(other.runs());
        runs.sort_by(|a, b| a.0.cmp(&b.0));
        Self::from_start_and_runs(degree, (a0.0 + b0.0, a0.1 + b0.1), &runs)
    }

    /// The slope of the divisor polygon at its right end:
    /// lambda = psi(d) - psi(d-1), with -inf when psi(d-1) = +inf.
    fn last_slope(&self) -> ExtRat {
        let d = self.degree;
        self.eval_int(d) - self.eval_int(d - 1)
    }

    /// Newton-function division: the precision/polygon counterpart of the
    /// polynomial quotient by a divisor with polygon `psi` of degree d.
    ///
    /// For x in [0, n-d] this is inf over h >= 0 of self(x+d+h) - lambda*h,
    /// lowered by psi(d) so that the quotient bound also holds for divisors
    /// whose leading coefficient is not a unit. When psi(d-1) = +inf
    /// (monomial-like divisor) the scan degenerates to self(x+d) - psi(d).
    pub fn div_by(&self, psi: &Self) -> Self {
        let d = psi.degree;
        assert!(self.degree >= d, "quotient polygon needs deg(self) >= deg(psi)");
        let ExtRat::Fin(psi_d) = psi.eval_int(d) else {
            panic!("divisor polygon must be finite at its degree");
        };
        if d == 0 {
            // Division by a scalar shifts the whole polygon.
            return self.translate(-psi_d);
        }
        let g = self.shift_left(d);
        if g.is_infinite() {
            return g;
        }
        match psi.last_slope() {
            ExtRat::NegInf => g.translate(-psi_d),
            ExtRat::Fin(lambda) => {
                // Rightmost minimizer of y - lambda*x over the vertices of g;
                // left of it the function continues affinely with slope lambda.
                let (mut tx, mut ty) = g.vertices[0];
                let mut best = ty - lambda * Rat::from_integer(tx);
                for &(x, y) in &g.vertices[1..] {
                    let c = y - lambda * Rat::from_integer(x);
                    if c <= best {
                        best = c;
                        (tx, ty) = (x, y);
                    }
                }
                let mut vertices = Vec::new();
                if tx > 0 {
                    vertices.push((0, ty - lambda * Rat::from_integer(tx)));
                }
                vertices.push((tx, ty));
                vertices.extend(g.vertices.iter().copied().filter(|&(x, _)| x > tx));
                NewtonFunction::from_vertices(g.degree, vertices).translate(-psi_d)
            }
            ExtRat::PosInf => unreachable!("slopes of a polygon are < +inf"),
        }
    }

    /// Newton-function remainder: self|[0,d-1] hull-min (psi|[0,d-1] + delta)
    /// where delta is the vertical gap between psi(d) and the greatest
    /// affine function of slope lambda below self on [d, n].
    pub fn mod_by(&self, psi: &Self) -> Result<Self> {
        let d = psi.degree;
        if d == 0 {
            return Err(Error::ZeroDegreeModulus);
        }
        assert!(self.degree >= d, "remainder polygon needs deg(self) >= deg(psi)");
        let ExtRat::Fin(psi_d) = psi.eval_int(d) else {
            return Err(Error::BadLeadingCoefficient);
        };
        let left = self.restrict(d - 1);
        let delta = match psi.last_slope() {
            ExtRat::NegInf => ExtRat::PosInf,
            ExtRat::Fin(lambda) => {
                // min over [d, n] of self(x) - lambda*(x - d), attained at a
                // vertex of the restriction or at the boundary point d.
                let mut best = self.eval_int(d) - ExtRat::Fin(Rat::zero());
                for &(x, y) in &self.vertices {
                    if x > d {
                        let c = ExtRat::Fin(y - lambda * Rat::from_integer(x - d));
                        best = best.min(c);
                    }
                }
                best - ExtRat::Fin(psi_d)
            }
            ExtRat::PosInf => unreachable!(),
        };
        Ok(left.min_hull(&psi.restrict(d - 1).translate_ext(delta)))
    }

    /// Definition 2.2: the precision `self` dominates the polygon of the
    /// approximation, strictly at the polygon's extremal points.
    pub fn nondegenerate_over(&self, polygon: &Self) -> bool {
        let n = self.degree.max(polygon.degree);
        for x in 0..=n {
            if self.eval_int(x) < polygon.eval_int(x) {
                return false;
            }
        }
        polygon
            .vertices
            .iter()
            .all(|&(x, y)| self.eval_int(x) > ExtRat::Fin(y))
    }

    /// self >= other pointwise at integer abscissas of [0, max degree].
    pub fn dominates(&self, other: &Self) -> bool {
        let n = self.degree.max(other.degree);
        (0..=n).all(|x| self.eval_int(x) >= other.eval_int(x))
    }

    /// Extremal points with their adjacent slopes; the conventions
    /// NF(-1) = NF(n+1) = +inf make the outermost slopes infinite.
    pub fn break_points(&self) -> Vec<BreakPoint> {
        let runs = self.runs();
        let mut out = Vec::new();
        for (i, &(x, _)) in self.vertices.iter().enumerate() {
            let left_slope = if i == 0 {
                ExtRat::NegInf
            } else {
                ExtRat::Fin(runs[i - 1].0)
            };
            let right_slope = if i + 1 == self.vertices.len() {
                ExtRat::PosInf
            } else {
                ExtRat::Fin(runs[i].0)
            };
            out.push(BreakPoint { abscissa: x, left_slope, right_slope });
        }
        out
    }

    /// Per-coefficient ceilings, `None` for exactly known positions.
    pub fn jagged_ceilings(&self) -> Vec<Option<i64>> {
        (0..=self.degree).map(|i| self.ceil_at(i)).collect()
    }

    /// Reinterpret on the domain [0, degree] (+infinity on the extension);
    /// the finite window must fit.
    pub fn with_degree(&self, degree: i64) -> Self {
        assert!(self.finite_until().unwrap_or(0) <= degree);
        NewtonFunction { degree, vertices: self.vertices.clone() }
    }
}

impl std::fmt::Display for NewtonFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            return write!(f, "+inf on [0,{}]", self.degree);
        }
        let pts: Vec<String> =
            self.vertices.iter().map(|(x, y)| format!("({x},{y})")).collect();
        write!(f, "[{}] deg {}", pts.join(" "), self.degree)
    }
}

#[derive(Serialize, Deserialize)]
struct NfJson {
    degree: i64,
    infinite_prefix_end: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    infinite_suffix_start: Option<i64>,
    vertices: Vec<(i64, String)>,
}

impl Serialize for NewtonFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let j = NfJson {
            degree: self.degree,
            infinite_prefix_end: self.finite_from().unwrap_or(self.degree + 1),
            infinite_suffix_start: match self.finite_until() {
                Some(hi) if hi < self.degree => Some(hi + 1),
                _ => None,
            },
            vertices: self.vertices.iter().map(|(x, y)| (*x, y.to_string())).collect(),
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NewtonFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = NfJson::deserialize(d)?;
        let mut vertices = Vec::new();
        for (x, ys) in j.vertices {
            let y: Rat = ys
                .parse()
                .map_err(|e| D::Error::custom(format!("bad rational {ys}: {e}")))?;
            vertices.push((x, y));
        }
        let nf = NewtonFunction { degree: j.degree, vertices };
        if !nf.check_invariants() {
            return Err(D::Error::custom("vertices do not form a convex chain"));
        }
        Ok(nf)
    }
}
