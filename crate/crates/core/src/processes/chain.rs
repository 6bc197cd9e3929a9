//! The q-deformed birth-death chain on `Z>=0` and its increment laws.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{geometric_bracket_sum, ln_q_bracket_f64, pow, q_bracket, to_f64, Mode, Prob, Rat};
use crate::path::{check_horizon, Path};

use super::{walk_path_prob, DistTable, ExactForm, InitialLaw, Params};

/// How the increment law of the chain is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Closed form in the path statistics, summed over the initial level.
    Formula,
    /// Mixture over the initial level of products of one-step kernels.
    Product,
}

/// `P(X_{j+1} = k + delta | X_j = k) = P(xi = delta) [k+delta+1]_q / [k+1]_q`.
pub fn chain_transition(k: i64, delta: i8, params: &Params) -> Result<Rat> {
    if k < 0 {
        return Err(LabError::invalid(format!("chain state must be >= 0, got {k}")));
    }
    if !(-1..=1).contains(&delta) {
        return Err(LabError::invalid(format!("step {delta} not in {{-1, 0, 1}}")));
    }
    let q = params.q();
    let step = params.step_pmf();
    Ok(step.get(delta) * q_bracket(k + delta as i64 + 1, &q)? / q_bracket(k + 1, &q)?)
}

/// Probability that the chain started at `k` follows the increments of `path`.
pub fn chain_path_prob(k: i64, path: &Path, params: &Params) -> Result<Rat> {
    let mut p = Rat::one();
    let mut x = k;
    for &d in path.steps() {
        p *= chain_transition(x, d, params)?;
        if p.is_zero() {
            return Ok(p);
        }
        x += d as i64;
    }
    Ok(p)
}

/// Law of `(X_j - X_0)_{j <= t}`. Exact whenever the route admits it for
/// this initial law, float with a certified bound otherwise.
pub fn chain_increment_law(t: usize, law: &InitialLaw, params: &Params, route: Route) -> Result<DistTable> {
    let mode = match route {
        Route::Formula if law.supports_exact(&params.q()) => Mode::Exact,
        Route::Product if law.support_max().is_some() => Mode::Exact,
        _ => Mode::Approx,
    };
    chain_increment_law_in(t, law, params, route, mode)
}

/// As [`chain_increment_law`] with the mode forced.
pub fn chain_increment_law_in(
    t: usize,
    law: &InitialLaw,
    params: &Params,
    route: Route,
    mode: Mode,
) -> Result<DistTable> {
    check_horizon(t, params.has_flats())?;
    let q = params.q();
    match (route, mode) {
        (Route::Formula, Mode::Exact) => {
            let form = law.exact_form(&q)?;
            DistTable::build(t, params.has_flats(), mode, |x| formula_exact(x, &form, params).map(Prob::Exact))
        }
        (Route::Formula, Mode::Approx) => {
            let cut = law.truncation_point(crate::numeric::TRUNCATION_EPS)?;
            DistTable::build(t, params.has_flats(), mode, |x| Ok(formula_approx(x, law, params, cut)))
        }
        (Route::Product, Mode::Exact) => {
            let max = law
                .support_max()
                .ok_or_else(|| LabError::UnsupportedMode(format!("product route for {law}")))?;
            DistTable::build(t, params.has_flats(), mode, |x| {
                let mut acc = Rat::zero();
                for k in 0..=max {
                    let p = law.pmf_exact(k).expect("finite laws are rational");
                    if !p.is_zero() {
                        acc += p * chain_path_prob(k as i64, x, params)?;
                    }
                }
                Ok(Prob::Exact(acc))
            })
        }
        (Route::Product, Mode::Approx) => {
            let cut = law.truncation_point(crate::numeric::TRUNCATION_EPS)?;
            let kernel = FloatKernel::new(params);
            DistTable::build(t, params.has_flats(), mode, |x| {
                let mut value = 0.0;
                for k in 0..=cut {
                    let p = law.pmf_f64(k);
                    if p > 0.0 {
                        value += p * kernel.path_prob(k, x);
                    }
                }
                // each neglected start contributes at most its own mass
                let err = law.tail_mass_bound(cut) + 8.0 * (t as f64 + 2.0) * f64::EPSILON * value;
                Ok(Prob::Approx { value, err })
            })
        }
    }
}

/// `sigma^H / (Z^t rho^{x_t}) * sum_{k >= -K} P(X0 = k) [x_t+k+1]_q / [k+1]_q`.
fn formula_exact(x: &Path, form: &ExactForm, params: &Params) -> Result<Rat> {
    let walk = walk_path_prob(x, params);
    if walk.is_zero() {
        return Ok(walk);
    }
    let q = params.q();
    let st = x.stats();
    let lo = -st.global_min();
    let xt = x.end();
    let sum = match form {
        ExactForm::Finite(atoms) => {
            let mut acc = Rat::zero();
            for (k, p) in atoms.iter().filter(|(k, _)| *k as i64 >= lo) {
                let k = *k as i64;
                acc += p * q_bracket(xt + k + 1, &q)? / q_bracket(k + 1, &q)?;
            }
            acc
        }
        // sum_{k >= lo} c r^k [xt+k+1]_q
        ExactForm::Geometric { c, r } => geometric_bracket_sum(&(c * pow(r, lo)), r, xt + lo + 1, &q)?,
    };
    Ok(walk * sum)
}

fn formula_approx(x: &Path, law: &InitialLaw, params: &Params, cut: u64) -> Prob {
    let walk = to_f64(&walk_path_prob(x, params));
    if walk == 0.0 {
        return Prob::Approx { value: 0.0, err: 0.0 };
    }
    let q = to_f64(&params.q());
    let lo = (-x.stats().global_min()) as u64;
    let xt = x.end();
    let mut sum = 0.0;
    for k in lo..=cut {
        let p = law.pmf_f64(k);
        if p > 0.0 {
            let top = (k as i64 + xt + 1) as u64;
            sum += p * (ln_q_bracket_f64(top, q) - ln_q_bracket_f64(k + 1, q)).exp();
        }
    }
    // [k+1+m]_q / [k+1]_q <= (1 + m) max(1, q)^m for m >= 0, and <= 1 for m < 0
    let m = xt.max(0) as f64;
    let ratio_bound = (1.0 + m) * q.max(1.0).powf(m);
    let value = walk * sum;
    let err = walk * law.tail_mass_bound(cut.max(lo)) * ratio_bound + 16.0 * f64::EPSILON * value;
    Prob::Approx { value, err }
}

/// One-step kernel in floating point, used by the approximate product
/// route and by the samplers.
#[derive(Debug, Clone)]
pub(crate) struct FloatKernel {
    pub(crate) step: [f64; 3],
    pub(crate) q: f64,
}

impl FloatKernel {
    pub(crate) fn new(params: &Params) -> FloatKernel {
        FloatKernel { step: params.step_pmf().as_f64(), q: to_f64(&params.q()) }
    }

    /// Transition probabilities `[down, flat, up]` out of state `k`.
    pub(crate) fn row(&self, k: u64) -> [f64; 3] {
        // with b = 1/[k+1]_q: [k+2]/[k+1] = q + b and [k]/[k+1] = (1 - b)/q
        let b = crate::numeric::inv_q_bracket_f64(k + 1, self.q);
        [self.step[0] * (1.0 - b) / self.q, self.step[1], self.step[2] * (self.q + b)]
    }

    pub(crate) fn path_prob(&self, k: u64, x: &Path) -> f64 {
        let mut p = 1.0;
        let mut state = k as i64;
        for &d in x.steps() {
            if state < 0 {
                return 0.0;
            }
            p *= self.row(state as u64)[(d + 1) as usize];
            state += d as i64;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};
    use crate::path::enumerate_paths;

    fn params(rho: Rat, sigma: Rat) -> Params {
        Params::new(rho, sigma).unwrap()
    }

    #[test]
    fn transition_examples() {
        let sym = params(int(1), int(0));
        assert_eq!(chain_transition(1, 1, &sym).unwrap(), rat(3, 4));
        assert_eq!(chain_transition(0, -1, &sym).unwrap(), int(0));
        assert_eq!(chain_transition(0, 1, &params(int(2), int(0))).unwrap(), int(1));
        // the symmetric kernel is (k+2)/(2(k+1)) upward
        for k in 0..10 {
            assert_eq!(chain_transition(k, 1, &sym).unwrap(), rat(k + 2, 2 * (k + 1)));
        }
        assert!(chain_transition(-1, 1, &sym).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        for rho in [rat(1, 2), rat(2, 3), int(1), rat(3, 2), int(2)] {
            for sigma in [int(0), int(1), rat(1, 3)] {
                let p = params(rho.clone(), sigma);
                for k in 0..=20 {
                    let row: Rat = (-1..=1).map(|d| chain_transition(k, d, &p).unwrap()).sum();
                    assert_eq!(row, int(1));
                }
            }
        }
    }

    #[test]
    fn kernel_invariant_under_rho_inversion() {
        for rho in [rat(1, 2), rat(2, 3), rat(5, 2)] {
            let p = params(rho, int(1));
            let m = p.mirrored();
            for k in 0..12 {
                for d in -1..=1 {
                    assert_eq!(chain_transition(k, d, &p).unwrap(), chain_transition(k, d, &m).unwrap());
                }
            }
        }
    }

    #[test]
    fn float_kernel_matches_exact() {
        let p = params(rat(2, 3), int(1));
        let fk = FloatKernel::new(&p);
        for k in 0..30u64 {
            let row = fk.row(k);
            for d in -1..=1i8 {
                let exact = to_f64(&chain_transition(k as i64, d, &p).unwrap());
                assert!((row[(d + 1) as usize] - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn increment_law_examples() {
        let sym = params(int(1), int(0));
        let tab = chain_increment_law(1, &InitialLaw::PointMass(0), &sym, Route::Formula).unwrap();
        assert_eq!(tab.get(&"0,1".parse().unwrap()), Prob::Exact(int(1)));
        assert_eq!(tab.get(&"0,-1".parse().unwrap()), Prob::Exact(int(0)));

        // P((0,1,2)) from X0 = 1: (3/4)(4/6)
        let law = InitialLaw::PointMass(1);
        for route in [Route::Formula, Route::Product] {
            let tab = chain_increment_law(2, &law, &sym, route).unwrap();
            assert_eq!(tab.get(&"0,1,2".parse().unwrap()), Prob::Exact(rat(1, 2)));
            assert_eq!(tab.total_mass(), Prob::Exact(int(1)));
        }
    }

    #[test]
    fn routes_agree_exactly_on_finite_laws() {
        let law = InitialLaw::finite(vec![(0, rat(1, 6)), (2, rat(1, 2)), (3, rat(1, 3))]).unwrap();
        for rho in [rat(1, 2), int(1), rat(3, 2)] {
            for sigma in [int(0), int(1)] {
                let p = params(rho.clone(), sigma);
                for t in 0..=5 {
                    let a = chain_increment_law(t, &law, &p, Route::Formula).unwrap();
                    let b = chain_increment_law(t, &law, &p, Route::Product).unwrap();
                    assert!(a.compare(&b).agrees());
                    assert_eq!(a.total_mass(), Prob::Exact(int(1)));
                }
            }
        }
    }

    #[test]
    fn qnb_formula_matches_truncated_product() {
        let p = params(rat(2, 3), int(1));
        let law = InitialLaw::q_negative_binomial(p.q(), rat(1, 2)).unwrap();
        let exact = chain_increment_law(4, &law, &p, Route::Formula).unwrap();
        assert_eq!(exact.mode(), Mode::Exact);
        assert_eq!(exact.total_mass(), Prob::Exact(int(1)));
        let approx = chain_increment_law(4, &law, &p, Route::Product).unwrap();
        assert_eq!(approx.mode(), Mode::Approx);
        let d = exact.to_approx().compare(&approx);
        assert!(d.agrees(), "{d:?}");
        assert!(d.max_abs_diff < 1e-13);
        let f = chain_increment_law_in(4, &law, &p, Route::Formula, Mode::Approx).unwrap();
        assert!(exact.to_approx().compare(&f).agrees());
    }

    #[test]
    fn flat_paths_vanish_without_flat_steps() {
        let p = params(rat(1, 2), int(0));
        for x in enumerate_paths(3, true).unwrap().filter(|x| x.has_flat()) {
            assert!(formula_exact(&x, &ExactForm::Finite(vec![(1, int(1))]), &p).unwrap().is_zero());
        }
    }
}
