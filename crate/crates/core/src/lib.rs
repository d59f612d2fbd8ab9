//! Numerical laboratory for the open-boundary asymmetric simple exclusion
//! process: exact stationary laws, kinetic Monte Carlo, Askey-Wilson process
//! representations, the tangent process and the Brownian limit fields.

pub mod asep;
pub mod askey_wilson;
pub mod error;
pub mod limits;
pub mod path;
pub mod qseries;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tangent;

pub use asep::{AbcdParams, AsepParams, Centering, HeightQuery, Phase, StationaryTable};
pub use error::{Error, Result};
