pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod ideal;
pub mod identification;
pub mod lti;
pub mod network;
pub mod virtual_signals;

pub use error::{Error, Result};
