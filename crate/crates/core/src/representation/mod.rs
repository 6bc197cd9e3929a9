//! Level laws, the law of `2(M - G)+ - S`, and the verification engine
//! for the representation of the chain increments.

mod damage;
mod level;
mod rhs;
mod verify;

pub use damage::{damage_check, poisson_pair_check, DamageReport, PoissonPairReport};
pub use level::{g_law_approx, g_law_from_initial, g_law_truncated, level_q, GeoTail, Level, LevelLaw};
pub use rhs::{rhs_law_enumeration, rhs_law_formula, rhs_law_formula_table, walk_law};
pub use verify::{
    gtilde_convolution_check, verify_thm1, verify_thm1_candidate, verify_two_sided, verify_walk_representation,
    walk_representation_witness, x0_minus_g_law, Comparison, Part, Status, VerifyReport,
};
