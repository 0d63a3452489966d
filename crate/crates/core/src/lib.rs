pub mod berkson;
pub mod causal;
pub mod error;
pub mod matlin;
pub mod pipeline;
pub mod quantum;
pub mod random;
pub mod tomography;
pub mod witness;

pub use error::{Error, Result};
