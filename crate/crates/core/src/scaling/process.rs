//! Sampling `2(sup B^v - gamma)+ - B^v` and comparing it with the rescaled chain.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mc::{ks_critical, ks_two_sample, ChainSampler, DiscreteSampler, McOptions};
use crate::numeric::to_f64;
use crate::processes::{step_mean, step_variance, Params};

use super::{LimitLevelLaw, Mu, ScaledFamily, ScalingConfig};

const GAMMA_GRID: usize = 4096;
/// Mass of `gamma` allowed beyond the tabulated range.
const GAMMA_TAIL: f64 = 1e-10;

/// Inverse-cdf sampler for `gamma ~ F_mu^v`: the atom at zero first, then
/// linear interpolation in a table of `F` on a grid refined near zero.
#[derive(Debug, Clone)]
pub struct GammaSampler {
    atom: f64,
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl GammaSampler {
    pub fn new(law: &LimitLevelLaw) -> Result<GammaSampler> {
        let mut x_max = 1.0;
        while 1.0 - law.cdf(x_max)? > GAMMA_TAIL {
            x_max *= 2.0;
            if x_max > 1e6 {
                return Err(LabError::NotNormalizable(format!("F does not reach 1 for {}", law.mu)));
            }
        }
        let atom = law.atom();
        let xs: Vec<f64> = (0..=GAMMA_GRID).map(|i| x_max * (i as f64 / GAMMA_GRID as f64).powi(2)).collect();
        let fs: Vec<f64> = xs
            .par_iter()
            .map(|&x| if x == 0.0 { Ok(atom) } else { law.cdf(x) })
            .collect::<Result<_>>()?;
        Ok(GammaSampler { atom, xs, fs })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.atom {
            return 0.0;
        }
        let i = self.fs.partition_point(|&f| f < u);
        if i == 0 {
            return 0.0;
        }
        if i >= self.fs.len() {
            return *self.xs.last().expect("nonempty");
        }
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        let w = if f1 > f0 { (u - f0) / (f1 - f0) } else { 0.0 };
        self.xs[i - 1] + w * (self.xs[i] - self.xs[i - 1])
    }
}

/// One path of `2(sup_{s<=t} B_s - gamma)+ - B_t` at the times of `t_grid`,
/// where `B_t = W_{ct} + vct`, `c = 2/(2+sigma)`, on an Euler grid of
/// `steps` points per unit time.
pub fn limit_process_sample<R: Rng + ?Sized>(
    v: f64,
    sigma: f64,
    gamma: &GammaSampler,
    t_grid: &[f64],
    steps: usize,
    rng: &mut R,
) -> Vec<f64> {
    let g = gamma.sample(rng);
    let c = 2.0 / (2.0 + sigma);
    let dt = 1.0 / steps as f64;
    let (drift, sd) = (v * c * dt, (c * dt).sqrt());
    let (mut b, mut sup, mut k) = (0.0f64, 0.0f64, 0usize);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let target = (t * steps as f64).round() as usize;
        while k < target {
            let z: f64 = rng.sample(StandardNormal);
            b += drift + sd * z;
            sup = sup.max(b);
            k += 1;
        }
        out.push(2.0 * (sup - g).max(0.0) - b);
    }
    out
}

pub fn limit_marginal_samples(
    v: f64,
    sigma: f64,
    law: &LimitLevelLaw,
    t: f64,
    steps: usize,
    mc: &McOptions,
) -> Result<Vec<f64>> {
    let gamma = GammaSampler::new(law)?;
    Ok(mc.run(|rng, n| {
        (0..n).map(|_| limit_process_sample(v, sigma, &gamma, &[t], steps, rng)[0]).collect()
    }))
}

/// `(X_{floor(tN)} - X_0)/sqrt(N)` for the chain at `rho_N` started from the family's law.
pub fn chain_marginal_samples(
    cfg: &ScalingConfig,
    family: &ScaledFamily,
    t: f64,
    smooth: bool,
    mc: &McOptions,
) -> Result<Vec<f64>> {
    let params = Params::new(cfg.rho(), cfg.sigma.clone())?;
    let start = DiscreteSampler::from_initial(&family.initial_law(cfg)?)?;
    let chain = ChainSampler::new(&params);
    let horizon = (t * cfg.n as f64).floor() as usize;
    let scale = cfg.sqrt_n();
    // without flat steps the increment lives on a lattice of spacing 2
    let cell = if params.has_flats() { 1.0 } else { 2.0 };
    Ok(mc.run(|rng, n| {
        (0..n)
            .map(|_| {
                let x0 = start.sample(rng);
                let d = chain.run(x0, horizon, rng) as f64 - x0 as f64;
                let jitter = if smooth { cell * (rng.random::<f64>() - 0.5) } else { 0.0 };
                (d + jitter) / scale
            })
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonskerReport {
    pub n: u64,
    pub v: f64,
    pub sigma: f64,
    pub t: f64,
    pub initial: String,
    pub mu: Mu,
    pub samples: usize,
    pub steps: usize,
    pub smoothed: bool,
    pub chain_mean: f64,
    pub limit_mean: f64,
    pub ks: f64,
    pub critical: f64,
    pub alpha: f64,
    pub passed: bool,
}

/// Two-sample KS between the rescaled chain increment and the limit marginal.
/// With `smooth`, each chain draw is spread uniformly over its lattice cell.
pub fn donsker_check(
    cfg: &ScalingConfig,
    family: &ScaledFamily,
    t: f64,
    steps: usize,
    smooth: bool,
    alpha: f64,
    mc: &McOptions,
) -> Result<DonskerReport> {
    Ok(donsker_ladder(cfg, family, t, &[steps], smooth, alpha, mc)?.reports.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonskerLadder {
    pub reports: Vec<DonskerReport>,
    /// Spread of the KS statistic across the Euler grids.
    pub ks_spread: f64,
    /// Every rung passes and the spread is below half the critical value.
    pub stabilized: bool,
}

/// [`donsker_check`] against one chain sample for several Euler grids.
pub fn donsker_ladder(
    cfg: &ScalingConfig,
    family: &ScaledFamily,
    t: f64,
    steps: &[usize],
    smooth: bool,
    alpha: f64,
    mc: &McOptions,
) -> Result<DonskerLadder> {
    let mu = family.mu(cfg.v)?;
    let law = LimitLevelLaw::new(cfg.v, mu.clone())?;
    let chain = chain_marginal_samples(cfg, family, t, smooth, mc)?;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let initial = family.initial_law(cfg)?.to_string();
    let mut reports = Vec::with_capacity(steps.len());
    for &k in steps {
        let limit = limit_marginal_samples(cfg.v, cfg.sigma_f64(), &law, t, k, &mc.partner())?;
        let ks = ks_two_sample(&chain, &limit)?;
        let critical = ks_critical(alpha, chain.len(), Some(limit.len()));
        reports.push(DonskerReport {
            n: cfg.n,
            v: cfg.v,
            sigma: cfg.sigma_f64(),
            t,
            initial: initial.clone(),
            mu: mu.clone(),
            samples: mc.samples,
            steps: k,
            smoothed: smooth,
            chain_mean: mean(&chain),
            limit_mean: mean(&limit),
            ks,
            critical,
            alpha,
            passed: ks < critical,
        });
    }
    let (lo, hi) = reports.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ks), hi.max(r.ks)));
    let ks_spread = hi - lo;
    let stabilized = reports.iter().all(|r| r.passed) && ks_spread <= reports[0].critical / 2.0;
    Ok(DonskerLadder { reports, ks_spread, stabilized })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub v: f64,
    pub sigma: f64,
    pub mu: Mu,
    pub t: f64,
    pub samples: usize,
    pub steps: usize,
    pub ks: f64,
    pub critical: f64,
    pub passed: bool,
}

/// The limit marginal is the same for drifts `v` and `-v` with the same `mu`.
pub fn invariance_check(
    v: f64,
    sigma: f64,
    mu: &Mu,
    t: f64,
    steps: usize,
    alpha: f64,
    mc: &McOptions,
) -> Result<InvarianceReport> {
    let plus = limit_marginal_samples(v, sigma, &LimitLevelLaw::new(v, mu.clone())?, t, steps, mc)?;
    let minus = limit_marginal_samples(-v, sigma, &LimitLevelLaw::new(-v, mu.clone())?, t, steps, &mc.partner())?;
    let ks = ks_two_sample(&plus, &minus)?;
    let critical = ks_critical(alpha, plus.len(), Some(minus.len()));
    Ok(InvarianceReport {
        v,
        sigma,
        mu: mu.clone(),
        t,
        samples: mc.samples,
        steps,
        ks,
        critical,
        passed: ks < critical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsReport {
    pub n: u64,
    pub draws: usize,
    pub exact_mean: f64,
    pub asymptotic_mean: f64,
    pub empirical_mean: f64,
    pub mean_se: f64,
    pub exact_var: f64,
    pub asymptotic_var: f64,
    pub empirical_var: f64,
    pub var_se: f64,
    pub passed: bool,
}

/// Empirical mean and variance of one step at `rho_N` against the exact
/// values, and the exact values against `2v/((2+sigma)sqrt(N))`, `2/(2+sigma)`.
pub fn step_moments_check(cfg: &ScalingConfig, mc: &McOptions) -> Result<MomentsReport> {
    let params = Params::new(cfg.rho(), cfg.sigma.clone())?;
    let [down, flat, _] = params.step_pmf().as_f64();
    let xs: Vec<f64> = mc.run(|rng, n| {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                if u < down {
                    -1.0
                } else if u < down + flat {
                    0.0
                } else {
                    1.0
                }
            })
            .collect()
    });
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let (mean_se, var_se) = ((var / n).sqrt(), ((m4 - m2 * m2) / n).sqrt());
    let s = cfg.sigma_f64();
    let (exact_mean, exact_var) = (to_f64(&step_mean(&params)), to_f64(&step_variance(&params)));
    let asymptotic_mean = 2.0 * cfg.v / ((s + 2.0) * cfg.sqrt_n());
    let asymptotic_var = 2.0 / (s + 2.0);
    // the expansions are accurate to O(v^2/N)
    let order = 4.0 * (1.0 + cfg.v * cfg.v) / cfg.n as f64;
    let passed = (mean - exact_mean).abs() <= 3.0 * mean_se
        && (var - exact_var).abs() <= 3.0 * var_se
        && (exact_mean - asymptotic_mean).abs() <= order
        && (exact_var - asymptotic_var).abs() <= order;
    Ok(MomentsReport {
        n: cfg.n,
        draws: mc.samples,
        exact_mean,
        asymptotic_mean,
        empirical_mean: mean,
        mean_se,
        exact_var,
        asymptotic_var,
        empirical_var: var,
        var_se,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{ks_one_sample, RngStream};
    use crate::numeric::int;

    #[test]
    fn gamma_sampler_matches_cdf() {
        for (v, mu) in [(0.0, "point:1"), (-0.3, "hypoexp:0.7,1.3"), (0.0, "exp:1"), (0.5, "mix:0.3*point:0+0.7*exp:2")] {
            let law = LimitLevelLaw::new(v, mu.parse().unwrap()).unwrap();
            let s = GammaSampler::new(&law).unwrap();
            let mut rng = RngStream::new(1, 0).rng();
            let xs: Vec<f64> = (0..20_000).map(|_| s.sample(&mut rng)).collect();
            let atom = xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64;
            assert!((atom - law.atom()).abs() < 0.02);
            let cont: Vec<f64> = xs.into_iter().filter(|&x| x > 0.0).collect();
            let a = law.atom();
            let d = ks_one_sample(&cont, |x| (law.cdf(x).unwrap() - a) / (1.0 - a)).unwrap();
            assert!(d < ks_critical(0.01, cont.len(), None), "{mu}: {d}");
        }
    }

    #[test]
    fn reflected_path_is_nonnegative_without_level() {
        let law = LimitLevelLaw::new(0.0, Mu::Point(0.0)).unwrap();
        let g = GammaSampler::new(&law).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 10.0).collect();
        for _ in 0..200 {
            assert!(limit_process_sample(0.0, 0.0, &g, &grid, 256, &mut rng).iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn moments_match() {
        let cfg = ScalingConfig::new(2500, 0.5, int(1)).unwrap();
        let rep = step_moments_check(&cfg, &McOptions::new(1_000_000, 1, 8)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
