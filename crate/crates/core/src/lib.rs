pub mod cli;
pub mod dual;
pub mod error;
pub mod init;
pub mod io;
pub mod metrics;
pub mod optimize;
pub mod render;
pub mod reparam;
pub mod slm;

pub use error::{Error, Result};
