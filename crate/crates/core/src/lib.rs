pub mod analytic;
pub mod channel;
pub mod cli;
pub mod corrmat;
pub mod error;
pub mod mc;
pub mod oracle;
pub mod quad;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
