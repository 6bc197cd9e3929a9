//! The thinning `P(R = r | N = n) = q^r / [n+1]_q` viewed as a damage model.

use num_traits::One;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::numeric::{pow, q_bracket, Rat};
use crate::processes::{ExactForm, InitialLaw};

/// Result of the independence check for `N ~ qNB(q, theta)`, `R` the
/// surviving part and `D = N - R` the damaged part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DamageReport {
    pub q: String,
    pub theta: String,
    /// Largest `r + d` examined.
    pub support: u64,
    /// `p(r, d) = (1 - q theta)(q theta)^r (1 - theta) theta^d` on the whole triangle.
    pub factorization_holds: bool,
    /// `P(R = r | D = 0) = P(R = r)` for every `r` examined.
    pub rao_rubin_holds: bool,
    /// `R ~ geo(q theta)` and `D ~ geo(theta)`.
    pub marginals_hold: bool,
    /// Whether the opposite assignment `R ~ geo(theta)`, `D ~ geo(q theta)`
    /// also fits; true only when `q = 1`.
    pub swapped_assignment_holds: bool,
    pub first_violation: Option<(u64, u64)>,
}

impl DamageReport {
    pub fn passed(&self) -> bool {
        self.factorization_holds && self.rao_rubin_holds && self.marginals_hold
    }
}

pub fn damage_check(q: &Rat, theta: &Rat, support: u64) -> Result<DamageReport> {
    let law = InitialLaw::q_negative_binomial(q.clone(), theta.clone())?;
    if *theta <= Rat::from_integer(0.into()) {
        return Err(LabError::invalid("theta must be positive"));
    }
    let one = Rat::one();
    let qt = q * theta;
    let geo = |p: &Rat, n: u64| (&one - p) * pow(p, n as i64);
    let joint = |r: u64, d: u64| -> Result<Rat> {
        let n = r + d;
        let pn = law.pmf_exact(n).expect("rational law");
        Ok(pn * pow(q, r as i64) / q_bracket(n as i64 + 1, q)?)
    };

    let mut factorization_holds = true;
    let mut swapped = true;
    let mut first_violation = None;
    for n in 0..=support {
        for r in 0..=n {
            let d = n - r;
            let p = joint(r, d)?;
            if p != geo(&qt, r) * geo(theta, d) {
                factorization_holds = false;
                first_violation.get_or_insert((r, d));
            }
            if p != geo(theta, r) * geo(&qt, d) {
                swapped = false;
            }
        }
    }

    // P(D = 0) = sum_r P(N = r)/[r+1]_q in closed form
    let p_d0 = match law.exact_form(q)? {
        ExactForm::Geometric { c, r } => c / (&one - q * r),
        ExactForm::Finite(_) => unreachable!("qNB has infinite support"),
    };
    let mut rao_rubin_holds = true;
    let mut marginals_hold = true;
    let g = super::level::g_law_exact(&law.exact_form(q)?, q);
    for r in 0..=support {
        let cond = joint(r, 0)? / &p_d0;
        let marginal = g.pmf(r).into_exact()?;
        rao_rubin_holds &= cond == marginal;
        marginals_hold &= marginal == geo(&qt, r);
    }
    marginals_hold &= p_d0 == geo(theta, 0);

    Ok(DamageReport {
        q: crate::numeric::rat_string(q),
        theta: crate::numeric::rat_string(theta),
        support,
        factorization_holds,
        rao_rubin_holds,
        marginals_hold,
        swapped_assignment_holds: swapped,
        first_violation,
    })
}

/// The pair `(G~, G)` for `X0 ~ 1 + Poisson(1)` at `q = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonPairReport {
    pub cut: u64,
    /// `max |p(i,j) - e^{-1}(i+j)/(i+j+1)!|` over `i + j <= cut`.
    pub joint_max_err: f64,
    /// `max_i |P(G~ = i) - e^{-1}/i!|` for `i <= m_max`.
    pub first_marginal_max_err: f64,
    pub second_marginal_max_err: f64,
    /// `max |P(G~ = i | G~ + G = n) - 1/(n+1)|`.
    pub conditional_uniform_max_err: f64,
}

/// Builds the joint law of `(X0 - G, G)` from the thinning kernel and
/// checks it against the closed form and its Poisson marginals.
pub fn poisson_pair_check(m_max: u64, cut: u64) -> PoissonPairReport {
    let law = InitialLaw::ShiftedPoisson(1.0);
    let n_max = cut as usize;
    let mut joint = vec![vec![0.0; n_max + 1]; n_max + 1];
    let mut joint_max_err: f64 = 0.0;
    let mut cond_err: f64 = 0.0;
    for n in 0..=cut {
        let pn = law.pmf_f64(n);
        for m in 0..=n {
            // uniform thinning at q = 1
            let p = pn / (n as f64 + 1.0);
            let (i, j) = ((n - m) as usize, m as usize);
            joint[i][j] = p;
            let closed = if n == 0 { 0.0 } else { (-1.0 + (n as f64).ln() - ln_gamma(n as f64 + 2.0)).exp() };
            joint_max_err = joint_max_err.max((p - closed).abs());
            if pn >= f64::MIN_POSITIVE {
                cond_err = cond_err.max((p / pn - 1.0 / (n as f64 + 1.0)).abs());
            }
        }
    }
    let poisson = |i: u64| (-1.0 - ln_gamma(i as f64 + 1.0)).exp();
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for i in 0..=m_max.min(cut) as usize {
        let a: f64 = (0..=n_max - i).map(|j| joint[i][j]).sum();
        let b: f64 = (0..=n_max - i).map(|j| joint[j][i]).sum();
        first = first.max((a - poisson(i as u64)).abs());
        second = second.max((b - poisson(i as u64)).abs());
    }
    PoissonPairReport {
        cut,
        joint_max_err,
        first_marginal_max_err: first,
        second_marginal_max_err: second,
        conditional_uniform_max_err: cond_err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};

    #[test]
    fn factorization_examples() {
        for (q, th) in [(rat(1, 4), rat(1, 2)), (int(1), rat(1, 2)), (int(4), rat(1, 5))] {
            let rep = damage_check(&q, &th, 30).unwrap();
            assert!(rep.passed(), "{rep:?}");
            assert_eq!(rep.swapped_assignment_holds, q == int(1));
        }
    }

    #[test]
    fn poisson_pair() {
        let rep = poisson_pair_check(20, 200);
        assert!(rep.joint_max_err < 1e-15);
        assert!(rep.first_marginal_max_err < 1e-12, "{rep:?}");
        assert!(rep.second_marginal_max_err < 1e-12, "{rep:?}");
        assert!(rep.conditional_uniform_max_err < 1e-14);
    }
}
