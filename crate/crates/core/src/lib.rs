pub mod cli;
pub mod decomp;
pub mod error;
pub mod flags;
pub mod generate;
pub mod holo;
pub mod io;
pub mod linalg;
pub mod tracial;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::Matrix;
