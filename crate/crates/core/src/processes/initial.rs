//! Catalog of initial laws on the non-negative integers.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::numeric::{int, ln_q_bracket_f64, parse_rat, pow, q_bracket, rat_string, to_f64, Prob, Rat};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    PointMass(u64),
    /// Atoms `(n, P(X0 = n))`, sorted by `n`, masses summing to exactly 1.
    FiniteSupport(Vec<(u64, Rat)>),
    /// `P(n) = (1 - p) p^n`
    Geometric(Rat),
    /// `P(n) = [n+1]_q theta^n (1 - theta)(1 - theta q)`
    QNegativeBinomial { q: Rat, theta: Rat },
    /// `P(n) = (1 - rho0)^2 (n + 1) rho0^n`
    NegativeBinomial(Rat),
    /// `1 + Poisson(lambda)`
    ShiftedPoisson(f64),
}

/// How `pmf(k) / [k+1]_q` can be summed exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactForm {
    Finite(Vec<(u64, Rat)>),
    /// `pmf(k) / [k+1]_q = c r^k` for every `k >= 0`.
    Geometric { c: Rat, r: Rat },
}

impl InitialLaw {
    pub fn finite(atoms: Vec<(u64, Rat)>) -> Result<InitialLaw> {
        let law = InitialLaw::FiniteSupport(atoms);
        law.validate()?;
        Ok(law)
    }

    pub fn q_negative_binomial(q: Rat, theta: Rat) -> Result<InitialLaw> {
        let law = InitialLaw::QNegativeBinomial { q, theta };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: &Rat, name: &str| {
            if p.is_negative() || *p >= Rat::one() {
                Err(LabError::invalid(format!("{name} must lie in [0, 1), got {p}")))
            } else {
                Ok(())
            }
        };
        match self {
            InitialLaw::PointMass(_) => Ok(()),
            InitialLaw::FiniteSupport(atoms) => {
                if atoms.is_empty() {
                    return Err(LabError::invalid("finite law with no atoms"));
                }
                if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(LabError::invalid("finite law atoms must be strictly increasing"));
                }
                if atoms.iter().any(|(_, p)| p.is_negative()) {
                    return Err(LabError::invalid("finite law has a negative mass"));
                }
                let total: Rat = atoms.iter().map(|(_, p)| p).sum();
                if !total.is_one() {
                    return Err(LabError::invalid(format!("finite law masses sum to {total}, not 1")));
                }
                Ok(())
            }
            InitialLaw::Geometric(p) => unit(p, "geometric parameter"),
            InitialLaw::QNegativeBinomial { q, theta } => {
                unit(theta, "theta")?;
                if !q.is_positive() {
                    return Err(LabError::invalid(format!("q must be > 0, got {q}")));
                }
                if theta * q >= Rat::one() {
                    return Err(LabError::invalid(format!("need theta q < 1, got {}", theta * q)));
                }
                Ok(())
            }
            InitialLaw::NegativeBinomial(rho0) => unit(rho0, "rho0"),
            InitialLaw::ShiftedPoisson(lambda) => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(LabError::invalid(format!("Poisson rate must be > 0, got {lambda}")))
                }
            }
        }
    }

    /// Largest support point for finitely supported laws.
    pub fn support_max(&self) -> Option<u64> {
        match self {
            InitialLaw::PointMass(n) => Some(*n),
            InitialLaw::FiniteSupport(atoms) => atoms.last().map(|a| a.0),
            InitialLaw::Geometric(p) if p.is_zero() => Some(0),
            InitialLaw::QNegativeBinomial { theta, .. } if theta.is_zero() => Some(0),
            InitialLaw::NegativeBinomial(r) if r.is_zero() => Some(0),
            _ => None,
        }
    }

    pub fn pmf(&self, n: u64) -> Prob {
        match self.pmf_exact(n) {
            Some(r) => Prob::Exact(r),
            None => {
                let value = self.pmf_f64(n);
                Prob::Approx { value, err: 8.0 * f64::EPSILON * value }
            }
        }
    }

    /// Exact pmf for the rational classes; `None` for the Poisson class.
    pub fn pmf_exact(&self, n: u64) -> Option<Rat> {
        let one = Rat::one();
        let k = n as i64;
        Some(match self {
            InitialLaw::PointMass(m) => {
                if *m == n {
                    one
                } else {
                    Rat::zero()
                }
            }
            InitialLaw::FiniteSupport(atoms) => atoms
                .iter()
                .find(|(m, _)| *m == n)
                .map(|(_, p)| p.clone())
                .unwrap_or_else(Rat::zero),
            InitialLaw::Geometric(p) => (&one - p) * pow(p, k),
            InitialLaw::QNegativeBinomial { q, theta } => {
                q_bracket(k + 1, q).ok()? * pow(theta, k) * (&one - theta) * (&one - theta * q)
            }
            InitialLaw::NegativeBinomial(r) => {
                let om = &one - r;
                &om * &om * int(k + 1) * pow(r, k)
            }
            InitialLaw::ShiftedPoisson(_) => return None,
        })
    }

    pub fn pmf_f64(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            InitialLaw::PointMass(_) | InitialLaw::FiniteSupport(_) => {
                self.pmf_exact(n).map(|r| to_f64(&r)).unwrap_or(0.0)
            }
            InitialLaw::Geometric(p) => {
                let p = to_f64(p);
                if n == 0 {
                    1.0 - p
                } else if p == 0.0 {
                    0.0
                } else {
                    (1.0 - p) * (nf * p.ln()).exp()
                }
            }
            InitialLaw::QNegativeBinomial { q, theta } => {
                let (q, th) = (to_f64(q), to_f64(theta));
                if n == 0 {
                    return (1.0 - th) * (1.0 - th * q);
                }
                if th == 0.0 {
                    return 0.0;
                }
                let ln = ln_q_bracket_f64(n + 1, q) + nf * th.ln() + ((1.0 - th) * (1.0 - th * q)).ln();
                ln.exp()
            }
            InitialLaw::NegativeBinomial(r) => {
                let r = to_f64(r);
                if n == 0 {
                    return (1.0 - r) * (1.0 - r);
                }
                if r == 0.0 {
                    return 0.0;
                }
                (2.0 * (1.0 - r).ln() + (nf + 1.0).ln() + nf * r.ln()).exp()
            }
            InitialLaw::ShiftedPoisson(lambda) => {
                if n == 0 {
                    0.0
                } else {
                    (-lambda + (nf - 1.0) * lambda.ln() - ln_gamma(nf)).exp()
                }
            }
        }
    }

    /// Certified upper bound on `sum_{j > cut} pmf(j)`; infinite when the
    /// ratio bound is not yet below one.
    pub fn tail_mass_bound(&self, cut: u64) -> f64 {
        if let Some(max) = self.support_max() {
            return if cut >= max { 0.0 } else { 1.0 };
        }
        let next = cut + 1;
        // sup_{n >= next} pmf(n+1)/pmf(n); each ratio is non-increasing in n
        let ratio = match self {
            InitialLaw::Geometric(p) => return to_f64(p).powf(next as f64),
            InitialLaw::QNegativeBinomial { q, theta } => {
                let q = to_f64(q);
                to_f64(theta) * (q + (-ln_q_bracket_f64(next + 1, q)).exp())
            }
            InitialLaw::NegativeBinomial(r) => to_f64(r) * (next as f64 + 2.0) / (next as f64 + 1.0),
            InitialLaw::ShiftedPoisson(lambda) => lambda / next as f64,
            InitialLaw::PointMass(_) | InitialLaw::FiniteSupport(_) => unreachable!(),
        };
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        self.pmf_f64(next) / (1.0 - ratio) * (1.0 + 1e-12)
    }

    /// Smallest cut whose certified tail mass is below `eps`.
    pub fn truncation_point(&self, eps: f64) -> Result<u64> {
        if let Some(max) = self.support_max() {
            return Ok(max);
        }
        let mut cut = 0u64;
        while self.tail_mass_bound(cut) >= eps {
            cut = if cut < 64 { cut + 1 } else { cut + cut / 8 };
            if cut > 50_000_000 {
                return Err(LabError::invalid(format!("law {self} needs an excessive truncation")));
            }
        }
        // tighten the last geometric jump
        let mut lo = cut - (cut / 9).max(1).min(cut);
        while lo < cut && self.tail_mass_bound(lo) >= eps {
            lo += 1;
        }
        Ok(lo.min(cut))
    }

    /// Closed form for `pmf(k) / [k+1]_q`, if one exists for this `q`.
    pub fn exact_form(&self, q: &Rat) -> Result<ExactForm> {
        let one = Rat::one();
        match self {
            InitialLaw::PointMass(n) => Ok(ExactForm::Finite(vec![(*n, one)])),
            InitialLaw::FiniteSupport(atoms) => Ok(ExactForm::Finite(atoms.clone())),
            InitialLaw::QNegativeBinomial { q: lq, theta } => {
                let c = (&one - theta) * (&one - theta * lq);
                if q == lq {
                    Ok(ExactForm::Geometric { c, r: theta.clone() })
                } else if *q == lq.recip() {
                    // [k+1]_{lq} = lq^k [k+1]_{1/lq}
                    Ok(ExactForm::Geometric { c, r: theta * lq })
                } else {
                    Err(self.no_exact(q))
                }
            }
            InitialLaw::NegativeBinomial(r) if q.is_one() => {
                let om = &one - r;
                Ok(ExactForm::Geometric { c: &om * &om, r: r.clone() })
            }
            InitialLaw::Geometric(p) if p.is_zero() => Ok(ExactForm::Finite(vec![(0, one)])),
            _ => Err(self.no_exact(q)),
        }
    }

    pub fn supports_exact(&self, q: &Rat) -> bool {
        self.exact_form(q).is_ok()
    }

    fn no_exact(&self, q: &Rat) -> LabError {
        LabError::UnsupportedMode(format!("initial law {self} with q = {}", rat_string(q)))
    }
}

impl fmt::Display for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |x: &Rat| {
            if x.is_integer() {
                x.numer().to_string()
            } else {
                rat_string(x)
            }
        };
        match self {
            InitialLaw::PointMass(n) => write!(f, "point:{n}"),
            InitialLaw::FiniteSupport(atoms) => {
                f.write_str("finite:")?;
                for (i, (n, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{n}={}", r(p))?;
                }
                Ok(())
            }
            InitialLaw::Geometric(p) => write!(f, "geo:{}", r(p)),
            InitialLaw::QNegativeBinomial { q, theta } => write!(f, "qnb:q={},theta={}", r(q), r(theta)),
            InitialLaw::NegativeBinomial(r0) => write!(f, "nb:rho0={}", r(r0)),
            InitialLaw::ShiftedPoisson(l) => write!(f, "spoisson:{l}"),
        }
    }
}

impl Serialize for InitialLaw {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for InitialLaw {
    type Err = LabError;

    /// Accepts `point:2`, `finite:0=1/3,2=2/3`, `geo:1/3`,
    /// `qnb:q=1/4,theta=1/2`, `nb:rho0=1/2`, `spoisson:1`.
    fn from_str(s: &str) -> Result<InitialLaw> {
        let bad = |why: &str| LabError::Parse(format!("initial law {s:?}: {why}"));
        let (kind, body) = s.trim().split_once(':').ok_or_else(|| bad("expected kind:args"))?;
        let keyed = |body: &str| -> Result<Vec<(String, String)>> {
            body.split(',')
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| bad("expected key=value"))
                })
                .collect()
        };
        let law = match kind.trim() {
            "point" => InitialLaw::PointMass(body.trim().parse().map_err(|_| bad("bad atom"))?),
            "finite" => {
                let mut atoms = keyed(body)?
                    .into_iter()
                    .map(|(k, v)| Ok((k.parse::<u64>().map_err(|_| bad("bad atom"))?, parse_rat(&v)?)))
                    .collect::<Result<Vec<_>>>()?;
                atoms.sort_by_key(|a| a.0);
                InitialLaw::FiniteSupport(atoms)
            }
            "geo" => InitialLaw::Geometric(parse_rat(body)?),
            "qnb" => {
                let kv = keyed(body)?;
                let get = |name: &str| {
                    kv.iter()
                        .find(|(k, _)| k == name)
                        .ok_or_else(|| bad(&format!("missing {name}")))
                        .and_then(|(_, v)| parse_rat(v))
                };
                InitialLaw::QNegativeBinomial { q: get("q")?, theta: get("theta")? }
            }
            "nb" => {
                let v = body.trim();
                let v = v.strip_prefix("rho0=").unwrap_or(v);
                InitialLaw::NegativeBinomial(parse_rat(v)?)
            }
            "spoisson" => InitialLaw::ShiftedPoisson(body.trim().parse().map_err(|_| bad("bad rate"))?),
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn pmf_examples() {
        let (q, th) = (rat(1, 4), rat(1, 2));
        let law = InitialLaw::q_negative_binomial(q.clone(), th.clone()).unwrap();
        assert_eq!(law.pmf(0), Prob::Exact((int(1) - &th) * (int(1) - &th * &q)));

        let nb = InitialLaw::NegativeBinomial(rat(1, 2));
        for n in 0..6 {
            assert_eq!(nb.pmf_exact(n).unwrap(), rat(1, 4) * int(n as i64 + 1) * pow(&rat(1, 2), n as i64));
        }

        let sp = InitialLaw::ShiftedPoisson(1.0);
        assert!((sp.pmf(1).value() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(sp.pmf(0).value(), 0.0);
    }

    #[test]
    fn rational_laws_sum_to_one() {
        let laws = [
            InitialLaw::Geometric(rat(1, 3)),
            InitialLaw::q_negative_binomial(rat(1, 4), rat(1, 2)).unwrap(),
            InitialLaw::q_negative_binomial(rat(9, 4), rat(1, 3)).unwrap(),
            InitialLaw::NegativeBinomial(rat(2, 5)),
        ];
        for law in laws {
            let cut = law.truncation_point(1e-15).unwrap();
            let head: f64 = (0..=cut).map(|n| law.pmf_f64(n)).sum();
            assert!((head - 1.0).abs() < 1e-13, "{law}: {head}");
            // the certified bound really dominates a much longer tail
            let longer: f64 = (cut + 1..=10 * cut + 50).map(|n| law.pmf_f64(n)).sum();
            assert!(longer <= law.tail_mass_bound(cut), "{law}");
            for n in 0..20 {
                let exact = to_f64(&law.pmf_exact(n).unwrap());
                assert!((law.pmf_f64(n) - exact).abs() <= 1e-14 * exact.max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["point:2", "finite:0=1/3,2=2/3", "geo:1/3", "qnb:q=1/4,theta=1/2", "nb:rho0=1/2", "spoisson:1"] {
            let law: InitialLaw = s.parse().unwrap();
            assert_eq!(law.to_string(), s);
        }
        assert!("finite:0=1/3,2=1/3".parse::<InitialLaw>().is_err());
        assert!("qnb:q=4,theta=1/2".parse::<InitialLaw>().is_err());
        assert!("geo:1".parse::<InitialLaw>().is_err());
        assert!("weird:1".parse::<InitialLaw>().is_err());
    }

    #[test]
    fn exact_forms() {
        let law = InitialLaw::q_negative_binomial(rat(4, 9), rat(1, 2)).unwrap();
        let q = rat(4, 9);
        for form_q in [q.clone(), q.recip()] {
            let ExactForm::Geometric { c, r } = law.exact_form(&form_q).unwrap() else { panic!() };
            for k in 0..8i64 {
                let direct = law.pmf_exact(k as u64).unwrap() / q_bracket(k + 1, &form_q).unwrap();
                assert_eq!(direct, &c * pow(&r, k));
            }
        }
        assert!(law.exact_form(&rat(1, 2)).is_err());
        assert!(InitialLaw::Geometric(rat(1, 2)).exact_form(&int(1)).is_err());
        assert!(InitialLaw::NegativeBinomial(rat(1, 2)).exact_form(&int(1)).is_ok());
    }
}
