pub mod classical;
pub mod connection;
pub mod displacement;
pub mod error;
pub mod gram;
pub mod hodlr;
pub mod moments;
pub mod quadrature;

pub use error::{Error, Result};
