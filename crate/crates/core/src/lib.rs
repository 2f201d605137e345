pub mod algebra;
pub mod cli;
pub mod error;
pub mod formality;
pub mod graded;
pub mod hochschild;
pub mod koszul;
pub mod linalg;
pub mod operad;
pub mod polyvector;
pub mod tree;

pub use error::{Error, Result};
