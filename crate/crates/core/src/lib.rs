pub mod broadcast;
pub mod channels;
pub mod cli;
pub mod error;
pub mod fisher;
pub mod fock;
pub mod inequalities;
pub mod symplectic;

pub use error::{Error, Result};
