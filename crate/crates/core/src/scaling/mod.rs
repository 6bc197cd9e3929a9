//! The regime `rho = 1 - v/sqrt(N)`: the limit level law, convergence of
//! the finite-`N` level, the local kernel limit and the Brownian limit.

mod continuity;
mod kernel;
mod limit_law;
mod process;

pub use continuity::{continuity_check, parse_grid, ContinuityReport, ContinuityRow, ScaledFamily};
pub use kernel::{chain_transition_ln, heat_kernel, kernel_limit, kernel_limit_check, KernelPoint};
pub use limit_law::{LawProperties, LimitLevelLaw, Mu, QUAD_TOL};
pub use process::{
    chain_marginal_samples, donsker_check, donsker_ladder, invariance_check, limit_marginal_samples, limit_process_sample,
    step_moments_check, DonskerLadder, DonskerReport, GammaSampler, InvarianceReport, MomentsReport,
};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::Rat;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub n: u64,
    pub v: f64,
    #[serde(serialize_with = "crate::numeric::serialize_rat")]
    pub sigma: Rat,
}

impl ScalingConfig {
    pub fn new(n: u64, v: f64, sigma: Rat) -> Result<ScalingConfig> {
        if n == 0 {
            return Err(LabError::invalid("N must be positive"));
        }
        if sigma < Rat::from_integer(0.into()) {
            return Err(LabError::invalid("sigma must be nonnegative"));
        }
        if !(1.0 - v / (n as f64).sqrt() > 0.0) {
            return Err(LabError::Regime(format!("rho = 1 - v/sqrt(N) is not positive for v = {v}, N = {n}")));
        }
        Ok(ScalingConfig { n, v, sigma })
    }

    /// `1 - w/sqrt(n)` as a rational: exact when `n` is a perfect square and
    /// `w` has at most nine decimals.
    pub(crate) fn one_minus_over_sqrt(w: f64, n: u64) -> Rat {
        let root = (n as f64).sqrt().round() as u64;
        if root * root == n {
            let scale = 1_000_000_000i64;
            let num = Rat::new(BigInt::from((w * scale as f64).round() as i64), BigInt::from(scale));
            Rat::one() - num / Rat::from_integer(BigInt::from(root))
        } else {
            Rat::from_f64(1.0 - w / (n as f64).sqrt()).expect("finite")
        }
    }

    pub fn rho(&self) -> Rat {
        ScalingConfig::one_minus_over_sqrt(self.v, self.n)
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    pub fn sigma_f64(&self) -> f64 {
        crate::numeric::to_f64(&self.sigma)
    }
}
