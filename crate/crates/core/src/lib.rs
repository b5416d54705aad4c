//! Arithmetic over complete discrete valuation fields at finite precision:
//! Newton polygon algebra, Euclidean division under flat/jagged/Newton/lattice
//! precision models, and slope factorization of polynomials by Newton
//! iteration.

pub mod error;
pub mod lattice;
pub mod newton;
pub mod poly;
pub mod prec;
pub mod ring;
pub mod scalar;
pub mod slope;

pub use error::{Error, Result};
pub use lattice::{DiffusedReport, LatticeDivmod, PrecLattice};
pub use poly::Poly;
pub use prec::{FlatPoly, JaggedPoly, NewtonPrecPoly, PrecModel};
pub use slope::{FactorPrecision, SlopeFactorResult};
pub use newton::{BreakPoint, ExtRat, NewtonFunction, Rat};
pub use ring::{BaseRing, RingKind};
pub use scalar::{PadicScalar, ValInfo, Valuation};
