pub mod chains;
pub mod conditioning;
pub mod decompose;
pub mod error;
pub mod graph;
pub mod io;
pub mod joint_lp;
pub mod local;
pub mod network;
pub mod oracle;
pub mod polytope;
pub mod query;
pub mod simplex;

pub use error::{Error, Result};
