pub mod classic;
pub mod divisors;
pub mod error;
mod maximize;
pub mod numerics;
pub mod psi;
pub mod rate;
pub mod reference;
pub mod surface;
pub mod vectors;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::Real;
