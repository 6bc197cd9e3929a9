use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{int, parse_rat, pow, serialize_rat, to_f64, Rat};
use crate::path::Path;

/// Walk parameters `(rho, sigma)`. `q = rho^2` and the normaliser
/// `Z = rho + sigma + 1/rho` are always derived, never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Params {
    #[serde(serialize_with = "serialize_rat")]
    rho: Rat,
    #[serde(serialize_with = "serialize_rat")]
    sigma: Rat,
}

impl Params {
    pub fn new(rho: Rat, sigma: Rat) -> Result<Params> {
        if !rho.is_positive() {
            return Err(LabError::invalid(format!("rho must be > 0, got {rho}")));
        }
        if sigma.is_negative() {
            return Err(LabError::invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Params { rho, sigma })
    }

    pub fn parse(rho: &str, sigma: &str) -> Result<Params> {
        Params::new(parse_rat(rho)?, parse_rat(sigma)?)
    }

    pub fn rho(&self) -> &Rat {
        &self.rho
    }

    pub fn sigma(&self) -> &Rat {
        &self.sigma
    }

    pub fn q(&self) -> Rat {
        &self.rho * &self.rho
    }

    pub fn z(&self) -> Rat {
        &self.rho + &self.sigma + self.rho.recip()
    }

    /// Parameters of the mirrored walk `-S`, i.e. `rho -> 1/rho`.
    pub fn mirrored(&self) -> Params {
        Params { rho: self.rho.recip(), sigma: self.sigma.clone() }
    }

    /// Whether flat steps carry positive probability.
    pub fn has_flats(&self) -> bool {
        !self.sigma.is_zero()
    }

    pub fn step_pmf(&self) -> StepPmf {
        let z = self.z();
        StepPmf {
            up: (&self.rho * &z).recip(),
            flat: &self.sigma / &z,
            down: &self.rho / &z,
        }
    }
}

/// Law of a single walk increment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepPmf {
    #[serde(serialize_with = "serialize_rat")]
    pub up: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub flat: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub down: Rat,
}

impl StepPmf {
    pub fn get(&self, delta: i8) -> &Rat {
        match delta {
            1 => &self.up,
            0 => &self.flat,
            _ => &self.down,
        }
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [to_f64(&self.down), to_f64(&self.flat), to_f64(&self.up)]
    }
}

pub fn step_pmf(params: &Params) -> StepPmf {
    params.step_pmf()
}

/// `P(S = path) = sigma^H rho^{D-U} / Z^t`.
pub fn walk_path_prob(path: &Path, params: &Params) -> Rat {
    let st = path.stats();
    if st.flat > 0 && !params.has_flats() {
        return Rat::zero();
    }
    let num = pow(params.sigma(), st.flat as i64) * pow(params.rho(), st.down as i64 - st.up as i64);
    num / pow(&params.z(), path.horizon() as i64)
}

/// The step-law mean `E xi = (1 - rho^2) / (rho^2 + rho sigma + 1)`.
pub fn step_mean(params: &Params) -> Rat {
    let q = params.q();
    (Rat::one() - &q) / (q + params.rho() * params.sigma() + Rat::one())
}

/// `Var xi = rho (rho^2 sigma + 4 rho + sigma) / (rho^2 + rho sigma + 1)^2`.
pub fn step_variance(params: &Params) -> Rat {
    let (r, s) = (params.rho(), params.sigma());
    let den = params.q() + r * s + Rat::one();
    r * (params.q() * s + int(4) * r + s) / (&den * &den)
}
