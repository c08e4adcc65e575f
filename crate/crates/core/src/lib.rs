pub mod cli;
pub mod error;
pub mod linkmodel;
pub mod majorization;
pub mod montecarlo;
pub mod matdecomp;
pub mod transceiver;

pub use error::{Error, Result};
