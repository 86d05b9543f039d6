//! Exact arithmetic in truncated generalized Robba rings of uniform pro-p
//! groups: p-adic scalars, noncommutative Laurent series over the generators
//! b_i = h_i - 1, the word-rewriting product, the duality pairing, and
//! microlocalization bounds.

pub mod error;
pub mod group;
pub mod monomial;
pub mod norms;
pub mod duality;
pub mod microloc;
pub mod padic;
pub mod policy;
pub mod rewriter;
pub mod sampling;
pub mod series;

pub use error::{Error, Result};
pub use monomial::MonomialIndex;
pub use norms::{NormValue, RadiusExponent, Rat};
pub use padic::{PadicScalar, PrecisionPolicy};
pub use policy::{ErrBound, TruncationPolicy};
pub use series::{LaurentSeries, SeriesBuilder};
