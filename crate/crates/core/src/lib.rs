pub mod drawdown_identities;
pub mod error;
pub mod inversion;
pub mod levy_model;
pub mod quadrature;
pub mod roots;
pub mod scale_functions;
pub mod simulator;

pub use error::{Error, Result};
