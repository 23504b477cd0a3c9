pub mod backend;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod generate;
pub mod io;
pub mod model;
pub mod reformulation;
pub mod refinement;
pub mod uc;
pub mod worst_case;

pub use error::{Error, Result};
