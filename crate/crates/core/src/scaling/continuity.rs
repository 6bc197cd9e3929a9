//! Convergence of the rescaled finite-`N` level `G^(N)/sqrt(N)` to `F_mu^v`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{to_f64, Mode, Rat};
use crate::processes::{InitialLaw, Params};
use crate::representation::{g_law_from_initial, Level};

use super::{LimitLevelLaw, Mu, ScalingConfig};

/// Sequences of initial laws indexed by `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScaledFamily {
    /// `X0 = floor(c sqrt(N))`, limit `mu = delta_c`.
    PointSqrt(f64),
    /// `X0 = floor(N^a)` with `a > 1/2`; the level escapes and the limit
    /// is `1 - e^{-2vx}` for `v > 0`.
    PointPower(f64),
    /// `X0 ~ qNB(rho^2, rho0/rho)` with `rho0 = 1 - u/sqrt(N)`, so
    /// `X0/sqrt(N)` tends to the sum of `Exp(u+v)` and `Exp(u-v)`.
    QNegBinomial { u: f64 },
}

impl ScaledFamily {
    /// Limit measure of `X0/sqrt(N)`.
    pub fn mu(&self, v: f64) -> Result<Mu> {
        match *self {
            ScaledFamily::PointSqrt(c) => Ok(Mu::Point(c)),
            ScaledFamily::PointPower(a) if a > 0.5 => Ok(Mu::Point(f64::INFINITY)),
            ScaledFamily::PointPower(a) => Err(LabError::invalid(format!("exponent {a} must exceed 1/2"))),
            ScaledFamily::QNegBinomial { u } if u > v.abs() => Ok(Mu::Hypoexp(u + v, u - v)),
            ScaledFamily::QNegBinomial { u } => Err(LabError::Regime(format!("need u > |v|, got u = {u}, v = {v}"))),
        }
    }

    pub fn initial_law(&self, cfg: &ScalingConfig) -> Result<InitialLaw> {
        let n = cfg.n as f64;
        match *self {
            ScaledFamily::PointSqrt(c) => Ok(InitialLaw::PointMass((c * n.sqrt()).floor() as u64)),
            ScaledFamily::PointPower(a) => Ok(InitialLaw::PointMass(n.powf(a).floor() as u64)),
            ScaledFamily::QNegBinomial { u } => {
                let rho = cfg.rho();
                let rho0 = ScalingConfig::one_minus_over_sqrt(u, cfg.n);
                InitialLaw::q_negative_binomial(&rho * &rho, rho0 / rho)
            }
        }
    }

    /// Picks the family whose rescaled initial law tends to `mu`.
    pub fn for_mu(mu: &Mu, v: f64, exponent: f64) -> Result<ScaledFamily> {
        match *mu {
            Mu::Point(y) if y.is_infinite() => Ok(ScaledFamily::PointPower(exponent)),
            Mu::Point(c) => Ok(ScaledFamily::PointSqrt(c)),
            // hypoexp(a, b) = hypoexp(b, a), so only |a - b| has to match
            Mu::Hypoexp(a, b) if ((a - b).abs() / 2.0 - v.abs()).abs() < 1e-12 => {
                Ok(ScaledFamily::QNegBinomial { u: (a + b) / 2.0 })
            }
            _ => Err(LabError::invalid(format!("no built-in initial family converges to {mu} at v = {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub x: f64,
    pub empirical: f64,
    pub limit: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub n: u64,
    pub v: f64,
    pub rho: String,
    pub initial: String,
    pub mu: Mu,
    pub level_mode: Mode,
    pub rows: Vec<ContinuityRow>,
    pub sup_diff: f64,
}

/// `sup_x |P(G^(N) <= x sqrt(N)) - F_mu^v(x)|` over `grid`, with the
/// finite-`N` law computed from the initial law at `rho_N`.
pub fn continuity_check(cfg: &ScalingConfig, family: &ScaledFamily, grid: &[f64]) -> Result<ContinuityReport> {
    let mu = family.mu(cfg.v)?;
    let limit = LimitLevelLaw::new(cfg.v, mu.clone())?;
    let law = family.initial_law(cfg)?;
    let params = Params::new(cfg.rho(), cfg.sigma.clone())?;
    let g = g_law_from_initial(&law, &params, Level::G)?;
    let sqrt_n = (cfg.n as f64).sqrt();
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        let m = (x * sqrt_n).floor() as u64;
        let empirical = match g.tail(m + 1) {
            crate::numeric::Prob::Exact(r) => to_f64(&(Rat::from_integer(1.into()) - r)),
            p => 1.0 - p.value(),
        };
        let lim = limit.cdf(x)?;
        rows.push(ContinuityRow { x, empirical, limit: lim, diff: (empirical - lim).abs() });
    }
    let sup_diff = rows.iter().map(|r| r.diff).fold(0.0, f64::max);
    Ok(ContinuityReport {
        n: cfg.n,
        v: cfg.v,
        rho: crate::numeric::rat_string(&cfg.rho()),
        initial: law.to_string(),
        mu,
        level_mode: g.mode(),
        rows,
        sup_diff,
    })
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || LabError::Parse(format!("grid must be start:stop:step, got {s:?}"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}
