//! The walk conditioned to stay above an independent random level.
//!
//! Part I uses the walk `S` with `rho < 1`; part II uses `S~ = -S` with
//! `rho > 1`, which is part I for the mirrored parameters.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{pow, to_f64, Mode, Prob, Rat, TRUNCATION_EPS};
use crate::path::Path;
use crate::processes::{walk_path_prob, DistTable, ExactForm, InitialLaw, Params};
use crate::representation::{level_q, GeoTail, LevelLaw, Part, VerifyReport};

/// Parameters of the walk that is conditioned, after checking the drift regime.
pub fn conditioned_params(params: &Params, part: Part) -> Result<Params> {
    let walk = part.walk_params(params);
    if *walk.rho() >= Rat::one() {
        let need = match part {
            Part::I => "rho < 1",
            Part::II => "rho > 1",
        };
        return Err(LabError::Regime(format!("part {part:?} needs {need}, got rho = {}", params.rho())));
    }
    Ok(walk)
}

/// `P(inf_u S_u >= -a) = 1 - rho^{2(a+1)}` for a walk with `rho < 1`.
pub fn survival_prob(a: u64, params: &Params) -> Result<Rat> {
    conditioned_params(params, Part::I)?;
    Ok(Rat::one() - pow(&params.q(), a as i64 + 1))
}

/// `P(V = k)` proportional to `P(X0 = k) / [k+1]_q`, with `q = rho^2`
/// (part I) or `1/rho^2` (part II).
pub fn v_law_from_initial(law: &InitialLaw, params: &Params, part: Part) -> Result<LevelLaw> {
    let q = level_q(params, part.level());
    match law.exact_form(&q) {
        Ok(ExactForm::Finite(atoms)) => {
            let max = atoms.last().map(|a| a.0).unwrap_or(0) as usize;
            let mut head = vec![Rat::zero(); max + 1];
            for (k, p) in &atoms {
                head[*k as usize] = p / crate::numeric::q_bracket(*k as i64 + 1, &q)?;
            }
            let total: Rat = head.iter().sum();
            if total.is_zero() {
                return Err(LabError::NotNormalizable("all masses vanish".into()));
            }
            LevelLaw::from_pmf(head.into_iter().map(|p| p / &total).collect())
        }
        // c r^k normalises to geo(r)
        Ok(ExactForm::Geometric { r, .. }) => {
            Ok(LevelLaw::Exact { head: vec![], tail: Some(GeoTail { first: Rat::one() - &r, ratio: r }) })
        }
        Err(LabError::UnsupportedMode(_)) => {
            let qf = to_f64(&q);
            let cut = law.truncation_point(TRUNCATION_EPS)?;
            let raw: Vec<f64> = (0..=cut)
                .map(|k| law.pmf_f64(k) * crate::numeric::inv_q_bracket_f64(k + 1, qf))
                .collect();
            let total: f64 = raw.iter().sum();
            if !(total > 0.0) {
                return Err(LabError::NotNormalizable("all masses vanish".into()));
            }
            // neglected unnormalised mass is at most the law's tail mass
            let tau = law.tail_mass_bound(cut);
            let err = 2.0 * tau / total + 8.0 * f64::EPSILON * raw.len() as f64;
            Ok(LevelLaw::Approx { pmf: raw.into_iter().map(|p| p / total).collect(), err })
        }
        Err(e) => Err(e),
    }
}

/// `P(S = x | inf_u (S_u + V) >= 0)
///   = rho^{-x_t} sigma^H / (c' Z^t) sum_{j >= -K} P(V = j) [j + x_t + 1]_q`
/// with `c' = sum_j P(V = j) [j+1]_q`.
pub fn conditioned_walk_law(t: usize, vlaw: &LevelLaw, params: &Params, part: Part) -> Result<DistTable> {
    let walk = conditioned_params(params, part)?;
    let q = walk.q();
    let norm = vlaw.bracket_moment(0, 1, &q)?;
    DistTable::build(t, walk.has_flats(), vlaw.mode(), |x| {
        let w = walk_path_prob(x, &walk);
        let lo = (-x.stats().global_min()) as u64;
        let s = vlaw.bracket_moment(lo, x.end() + 1, &q)?;
        match (&s, &norm) {
            (Prob::Exact(s), Prob::Exact(c)) => Ok(Prob::Exact(w * s / c)),
            _ => {
                let (w, sv, se, cv, ce) = (to_f64(&w), s.value(), s.err(), norm.value(), norm.err());
                let value = w * sv / cv;
                // |a/b - a'/b'| <= (|a - a'| + (a/b)|b - b'|) / b'
                let err = w * (se + sv / cv * ce) / (cv - ce).max(f64::MIN_POSITIVE) + 8.0 * f64::EPSILON * value;
                Ok(Prob::Approx { value, err })
            }
        }
    })
}

/// Finite-horizon oracle: conditions on `min_{u <= T} (S_u + V) >= 0`
/// by exact dynamic programming in floating point and brackets the
/// infinite-horizon answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonOracle {
    pub horizon: usize,
    pub table: DistTable,
    /// Certified bound on `|oracle - infinite horizon|` for every entry.
    pub bound: f64,
}

/// `f[n][b] = P(min_{u <= n} S_u >= -b)` for `b <= n`; it is 1 for `b >= n`.
fn survival_table(horizon: usize, step: [f64; 3]) -> Vec<Vec<f64>> {
    let [down, flat, up] = step;
    let mut f = Vec::with_capacity(horizon + 1);
    f.push(vec![1.0]);
    for n in 1..=horizon {
        let prev: &Vec<f64> = &f[n - 1];
        let get = |b: i64| -> f64 {
            if b < 0 {
                0.0
            } else if b as usize >= prev.len() {
                1.0
            } else {
                prev[b as usize]
            }
        };
        let row = (0..=n as i64).map(|b| up * get(b + 1) + flat * get(b) + down * get(b - 1)).collect();
        f.push(row);
    }
    f
}

fn survival_at(f: &[Vec<f64>], n: usize, b: i64) -> f64 {
    if b < 0 {
        0.0
    } else if b as usize >= n {
        1.0
    } else {
        f[n][b as usize]
    }
}

pub fn finite_horizon_oracle(
    t: usize,
    vlaw: &LevelLaw,
    params: &Params,
    part: Part,
    extra: usize,
) -> Result<HorizonOracle> {
    let walk = conditioned_params(params, part)?;
    let horizon = t + extra;
    let step = walk.step_pmf().as_f64();
    let f = survival_table(horizon, step);

    // V truncated where its remaining mass is negligible
    let cdf = vlaw.cdf_table(1e-18);
    let tau = (1.0 - cdf.last().copied().unwrap_or(0.0)).max(0.0) + vlaw.err();
    let v: Vec<f64> = (0..cdf.len() as u64).map(|j| vlaw.pmf_f64(j)).collect();

    let rho = to_f64(walk.rho());
    let z = to_f64(&walk.z());
    let sigma = to_f64(walk.sigma());
    let decay = (2.0 + sigma) / z;
    // overshoot of the finite-horizon event past the infinite one, per unit of walk mass
    let horizon_err = |n: usize| rho * rho * decay.powi(n as i32);

    // each DP step is a convex combination, so rounding grows additively;
    // the V sum adds one more rounding per term
    let rounding = 4.0 * (horizon + v.len()) as f64 * f64::EPSILON;
    let denom: f64 = v.iter().enumerate().map(|(j, p)| p * survival_at(&f, horizon, j as i64)).sum();
    let e_den = horizon_err(horizon) + tau + rounding;
    let mut bound: f64 = 0.0;
    let table = DistTable::build(t, walk.has_flats(), Mode::Approx, |x: &Path| {
        let w = to_f64(&walk_path_prob(x, &walk));
        let lo = (-x.stats().global_min()) as usize;
        let xt = x.end();
        let num: f64 = w * v
            .iter()
            .enumerate()
            .skip(lo)
            .map(|(j, p)| p * survival_at(&f, horizon - t, j as i64 + xt))
            .sum::<f64>();
        let e_num = w * (horizon_err(horizon - t) + tau + rounding);
        let value = num / denom;
        let err = (e_num + value * e_den) / (denom - e_den);
        Ok(Prob::Approx { value, err })
    })?;
    for (_, p) in table.iter() {
        bound = bound.max(p.err());
    }
    Ok(HorizonOracle { horizon, table, bound })
}

/// Conditioning theorem at horizon `t`: the chain started from `law`
/// against the walk conditioned on a `V`-distributed level, plus the
/// finite-horizon oracle at horizon `t + extra` within its bound.
pub fn verify_thm2(t: usize, law: &InitialLaw, params: &Params, part: Part, extra: usize) -> Result<VerifyReport> {
    let v = v_law_from_initial(law, params, part)?;
    let conditioned = conditioned_walk_law(t, &v, params, part)?;
    let chain = crate::processes::chain_increment_law(t, law, params, crate::processes::Route::Formula)?;
    let oracle = finite_horizon_oracle(t, &v, params, part, extra)?;
    Ok(VerifyReport::from_tables(
        "thm2",
        t,
        vec![("chain", &chain, "conditioned", &conditioned), ("conditioned", &conditioned, "horizon_oracle", &oracle.table)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};
    use crate::processes::{chain_increment_law, Route};

    #[test]
    fn thm2_report() {
        let p = Params::new(rat(2, 3), int(1)).unwrap();
        let law = InitialLaw::q_negative_binomial(p.q(), rat(1, 2)).unwrap();
        let rep = verify_thm2(4, &law, &p, Part::I, 200).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.comparisons[0].diff.exact_diff, Some(Rat::zero()));
        let p = Params::new(int(1), int(0)).unwrap();
        assert!(matches!(verify_thm2(2, &law, &p, Part::I, 10), Err(LabError::Regime(_))));
    }

    #[test]
    fn survival_examples() {
        let p = Params::new(rat(1, 2), int(0)).unwrap();
        assert_eq!(survival_prob(0, &p).unwrap(), rat(3, 4));
        let p = Params::new(rat(2, 3), int(0)).unwrap();
        assert_eq!(survival_prob(1, &p).unwrap(), rat(65, 81));
        assert!(survival_prob(0, &Params::new(int(1), int(0)).unwrap()).is_err());
        assert!(1.0 - to_f64(&survival_prob(60, &Params::new(rat(1, 2), int(0)).unwrap()).unwrap()) < 1e-30);
    }

    #[test]
    fn survival_matches_dp() {
        // P(inf >= -a) is the limit of the finite-horizon survival
        let p = Params::new(rat(1, 2), int(1)).unwrap();
        let f = survival_table(400, p.step_pmf().as_f64());
        for a in 0..5 {
            let exact = to_f64(&survival_prob(a, &p).unwrap());
            assert!((survival_at(&f, 400, a as i64) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn v_law_examples() {
        let p = Params::new(rat(1, 2), int(0)).unwrap();
        assert_eq!(v_law_from_initial(&InitialLaw::PointMass(3), &p, Part::I).unwrap(), LevelLaw::point(3));
        let law = InitialLaw::finite(vec![(0, rat(1, 2)), (1, rat(1, 2))]).unwrap();
        // masses 1/2 and (1/2)/(5/4) = 2/5, normalised
        let v = v_law_from_initial(&law, &p, Part::I).unwrap();
        assert_eq!(v, LevelLaw::from_pmf(vec![rat(5, 9), rat(4, 9)]).unwrap());
    }

    #[test]
    fn qnb_conditioning_part_ii() {
        let (rho0, rho) = (rat(1, 2), rat(3, 2));
        let p = Params::new(rho.clone(), int(1)).unwrap();
        let law = InitialLaw::q_negative_binomial(p.q(), &rho0 / &rho).unwrap();
        let v = v_law_from_initial(&law, &p, Part::II).unwrap();
        assert_eq!(v, LevelLaw::geometric(&rho0 * &rho).unwrap());
        let chain = chain_increment_law(4, &law, &p, Route::Formula).unwrap();
        let cond = conditioned_walk_law(4, &v, &p, Part::II).unwrap();
        assert!(chain.compare(&cond).agrees());
        assert!(conditioned_walk_law(4, &v, &p, Part::I).is_err());
    }

    #[test]
    fn mismatched_level_has_witness() {
        let p = Params::new(rat(1, 2), int(0)).unwrap();
        let law = InitialLaw::PointMass(1);
        let chain = chain_increment_law(3, &law, &p, Route::Formula).unwrap();
        let ok = conditioned_walk_law(3, &v_law_from_initial(&law, &p, Part::I).unwrap(), &p, Part::I).unwrap();
        assert!(chain.compare(&ok).agrees());
        let bad = conditioned_walk_law(3, &LevelLaw::point(0), &p, Part::I).unwrap();
        assert!(chain.compare(&bad).witness.is_some());
    }

    #[test]
    fn oracle_brackets_exact_law() {
        let p = Params::new(rat(2, 3), int(1)).unwrap();
        let law = InitialLaw::q_negative_binomial(p.q(), rat(1, 2)).unwrap();
        let v = v_law_from_initial(&law, &p, Part::I).unwrap();
        let exact = conditioned_walk_law(3, &v, &p, Part::I).unwrap();
        let oracle = finite_horizon_oracle(3, &v, &p, Part::I, 200).unwrap();
        let d = exact.to_approx().compare(&oracle.table);
        assert!(d.agrees(), "{d:?}");
        assert!(oracle.bound < 1e-5);
    }
}
