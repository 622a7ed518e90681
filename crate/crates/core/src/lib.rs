pub mod denominator;
pub mod error;
mod linalg;
pub mod quadrature;
pub mod rootfind;
pub mod specfun;
pub mod trace;
pub mod units;

pub use error::{Result, ZrpError};
