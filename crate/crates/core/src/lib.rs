pub mod error;
pub mod matnum;
pub mod realization;
pub mod riccati;
pub mod completion;
pub mod dirac;
pub mod inverse;
pub mod odeverify;

pub use error::{Error, Result};
