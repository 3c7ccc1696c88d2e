pub mod error;
pub mod exact_poly;
pub mod gasket;
pub mod dynamics;
pub mod recursion;
pub mod zeros;
pub mod measure;
pub mod pressure;
pub mod verify;

pub use error::{GasketError, Result};
pub use exact_poly::{IntPolynomial, LaurentPolynomial, Rational};
