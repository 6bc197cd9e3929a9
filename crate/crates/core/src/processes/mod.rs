//! The step law, walk and chain path probabilities, and the initial-law catalog.

mod chain;
mod initial;
mod params;
mod table;

pub(crate) use chain::FloatKernel;
pub use chain::{chain_increment_law, chain_increment_law_in, chain_path_prob, chain_transition, Route};
pub use initial::{ExactForm, InitialLaw};
pub use params::{step_mean, step_pmf, step_variance, walk_path_prob, Params, StepPmf};
pub use table::{DistTable, TableDiff};

/// `P(X0 = n)` for any catalog law.
pub fn initial_pmf(law: &InitialLaw, n: u64) -> crate::numeric::Prob {
    law.pmf(n)
}
