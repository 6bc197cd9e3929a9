//! Exact laws, preimage structure and scaling limits for the generalized
//! Pitman transform `2(M - G)+ - S` of nearest-neighbour random walks.

pub mod conditioning;
pub mod error;
pub mod mc;
pub mod numeric;
pub mod path;
pub mod pitman;
pub mod processes;
pub mod representation;
pub mod scaling;

pub use error::{LabError, Result};
pub use numeric::{Mode, Prob, Rat};
pub use path::{Path, PathStats};
pub use processes::{DistTable, InitialLaw, Params};
