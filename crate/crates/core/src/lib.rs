pub mod analytic;
pub mod channel;
pub mod config;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod maxmin;
pub mod montecarlo;
pub mod precoding;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
