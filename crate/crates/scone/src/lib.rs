//! Certificates of non-negativity for sparse functions
//! `Σ c_α |x|^α + Σ d_β x^β` through circuits, AG functions and the S-cone.

pub mod ag;
pub mod circuits;
pub mod decompose;
pub mod dual;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod member;
pub mod num;
pub mod sage;
pub mod oracle;
pub mod sfun;
pub mod univariate;

pub use error::{Result, SconeError};
pub use num::{Num, Rat};
pub use sfun::{evaluate, pair, parse_sfunction, serialize_sfunction, DualVector, Exponent, ExtReal, Parity, SFunction, Support};
