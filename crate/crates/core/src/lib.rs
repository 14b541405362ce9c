//! Tamagawa numbers, local densities and canonical heights for elliptic curves
//! `y² = x³ + a4·x + a6` over the rationals.

pub mod arith;
pub mod census;
pub mod curve;
pub mod density;
pub mod factor;
pub mod heights;
pub mod tate;
pub mod verify;

pub use curve::{enumerate, Curve, CurveError, HeightBound, LongModel};
pub use tate::{classify, generic_tate, tamagawa_product, KodairaType, LocalReduction};
