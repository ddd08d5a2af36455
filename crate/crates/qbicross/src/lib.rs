//! Exact symbolic engine for deformed Hopf algebras with bicrossproduct
//! structure, their flows and induced representations.

pub mod bicross;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod flows;
pub mod hopf;
pub mod induction;
pub mod multiindex;
pub mod ncalg;
pub mod pairing;
pub mod par;
pub mod paramseries;
pub mod real;
pub mod report;

pub use error::{Error, Result};
