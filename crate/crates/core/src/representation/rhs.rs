//! Law of `2(M - G)+ - S` for a walk `S` independent of the level `G`.

use num_traits::Zero;

use crate::error::Result;
use crate::numeric::{pow, q_bracket, to_f64, Mode, Prob, Rat};
use crate::path::Path;
use crate::pitman::preimage;
use crate::processes::{walk_path_prob, DistTable, Params};

use super::LevelLaw;

/// Closed form: `sigma^H rho^{x_t} / Z^t (P(G >= -K) + P(G = -K) [m]_q q^{-m})`
/// with `m = x_t - K`. The last factor equals `(1 - rho^{2(K - x_t)})/(rho^2 - 1)`
/// and reduces to `m` at `rho = 1`.
pub fn rhs_law_formula(x: &Path, glaw: &LevelLaw, params: &Params) -> Result<Prob> {
    let st = x.stats();
    let lo = (-st.global_min()) as u64;
    let m = x.end() - st.global_min();
    let q = params.q();
    let factor = q_bracket(m, &q)? / pow(&q, m);
    // walk_path_prob(x) carries rho^{-x_t}; the formula wants rho^{+x_t}
    let pre = walk_path_prob(x, params) * pow(&q, x.end());
    match glaw {
        LevelLaw::Exact { .. } => {
            let tail = glaw.tail(lo).into_exact()?;
            let at = glaw.pmf(lo).into_exact()?;
            Ok(Prob::Exact(pre * (tail + at * factor)))
        }
        LevelLaw::Approx { err, .. } => {
            let (pre, factor) = (to_f64(&pre), to_f64(&factor));
            let value = pre * (glaw.tail(lo).value() + glaw.pmf(lo).value() * factor);
            Ok(Prob::Approx { value, err: pre * err * (1.0 + factor) + 8.0 * f64::EPSILON * value })
        }
    }
}

/// [`rhs_law_formula`] evaluated on every path of the horizon.
pub fn rhs_law_formula_table(t: usize, glaw: &LevelLaw, params: &Params) -> Result<DistTable> {
    DistTable::build(t, params.has_flats(), glaw.mode(), |x| rhs_law_formula(x, glaw, params))
}

/// Pushforward of (level, walk) through the inverse images of `T`:
/// `P(G >= -K) P(S = -x) + P(G = -K) sum_{r=K+1}^{x_t} P(S = s^(r))`.
pub fn rhs_law_enumeration(t: usize, glaw: &LevelLaw, params: &Params) -> Result<DistTable> {
    DistTable::build(t, params.has_flats(), glaw.mode(), |x| {
        let set = preimage(x);
        let lo = set.ray.g_min as u64;
        let ray = walk_path_prob(&set.ray.s, params);
        let sporadic: Rat = set.sporadic.iter().map(|m| walk_path_prob(&m.s, params)).sum();
        match glaw.mode() {
            Mode::Exact => {
                let mut p = glaw.tail(lo).into_exact()? * ray;
                if !sporadic.is_zero() {
                    p += glaw.pmf(lo).into_exact()? * sporadic;
                }
                Ok(Prob::Exact(p))
            }
            Mode::Approx => {
                let (ray, sporadic) = (to_f64(&ray), to_f64(&sporadic));
                let value = glaw.tail(lo).value() * ray + glaw.pmf(lo).value() * sporadic;
                Ok(Prob::Approx {
                    value,
                    err: glaw.err() * (ray + sporadic) + 8.0 * f64::EPSILON * value,
                })
            }
        }
    })
}

/// Exact law of the walk itself.
pub fn walk_law(t: usize, params: &Params) -> Result<DistTable> {
    DistTable::build(t, params.has_flats(), Mode::Exact, |x| Ok(Prob::Exact(walk_path_prob(x, params))))
}
