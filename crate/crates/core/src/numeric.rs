//! Exact rational arithmetic, q-brackets and the tail sums every law
//! formula is assembled from.
//!
//! Exact values are [`Rat`] (arbitrary precision, always gcd-reduced).
//! Truncated series come back as [`Prob::Approx`] carrying a certified
//! bound on the neglected mass.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::processes::InitialLaw;

/// Exact rational number. `num-rational` reduces after every operation,
/// which keeps path-probability denominators from exploding.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Integer power with a possibly negative exponent.
pub fn pow(base: &Rat, exp: i64) -> Rat {
    if exp == 0 {
        return Rat::one();
    }
    let e = i32::try_from(exp).expect("exponent out of range");
    base.pow(e)
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses "a/b" or "a" into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || LabError::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(LabError::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Canonical "num/den" rendering (the denominator is always printed).
pub fn rat_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn serialize_rat<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rat_string(r))
}

/// Computation mode for laws that admit both an exact and a truncated route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Approx,
}

/// A probability, either exact or a float with a certified error bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(Rat),
    Approx { value: f64, err: f64 },
}

impl Prob {
    pub fn zero(mode: Mode) -> Prob {
        match mode {
            Mode::Exact => Prob::Exact(Rat::zero()),
            Mode::Approx => Prob::Approx { value: 0.0, err: 0.0 },
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Prob::Exact(_) => Mode::Exact,
            Prob::Approx { .. } => Mode::Approx,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Prob::Exact(r) => to_f64(r),
            Prob::Approx { value, .. } => *value,
        }
    }

    pub fn err(&self) -> f64 {
        match self {
            Prob::Exact(_) => 0.0,
            Prob::Approx { err, .. } => *err,
        }
    }

    pub fn exact(&self) -> Option<&Rat> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Approx { .. } => None,
        }
    }

    pub fn into_exact(self) -> Result<Rat> {
        match self {
            Prob::Exact(r) => Ok(r),
            Prob::Approx { .. } => Err(LabError::MixedModes),
        }
    }

    /// Re-expresses an exact value as a float with zero error bound.
    pub fn to_approx(&self) -> Prob {
        Prob::Approx { value: self.value(), err: self.err() }
    }

    pub fn try_add(&self, other: &Prob) -> Result<Prob> {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => Ok(Prob::Exact(a + b)),
            (Prob::Approx { value: a, err: ea }, Prob::Approx { value: b, err: eb }) => {
                Ok(Prob::Approx { value: a + b, err: ea + eb })
            }
            _ => Err(LabError::MixedModes),
        }
    }

    pub fn try_mul(&self, other: &Prob) -> Result<Prob> {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => Ok(Prob::Exact(a * b)),
            (Prob::Approx { value: a, err: ea }, Prob::Approx { value: b, err: eb }) => Ok(Prob::Approx {
                value: a * b,
                err: a.abs() * eb + b.abs() * ea + ea * eb,
            }),
            _ => Err(LabError::MixedModes),
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{}", rat_string(r)),
            Prob::Approx { value, err } => write!(f, "{value:.15e} ± {err:.1e}"),
        }
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Prob::Exact(r) => serialize_rat(r, s),
            Prob::Approx { value, err } => {
                let mut st = s.serialize_struct("Approx", 2)?;
                st.serialize_field("value", value)?;
                st.serialize_field("err", err)?;
                st.end()
            }
        }
    }
}

/// `[n]_q = 1 + q + ... + q^{n-1}`, computed by Horner's rule so `q = 1`
/// needs no special branch.
pub fn q_bracket(n: i64, q: &Rat) -> Result<Rat> {
    if n < 0 {
        return Err(LabError::invalid(format!("q-bracket needs n >= 0, got {n}")));
    }
    if !q.is_positive() {
        return Err(LabError::invalid(format!("q-bracket needs q > 0, got {q}")));
    }
    let mut acc = Rat::zero();
    for _ in 0..n {
        acc = acc * q + Rat::one();
    }
    Ok(acc)
}

/// `ln [n]_q` for `n >= 1`, stable for large `n` on both sides of `q = 1`.
pub fn ln_q_bracket_f64(n: u64, q: f64) -> f64 {
    debug_assert!(n >= 1 && q > 0.0);
    let nf = n as f64;
    let lq = q.ln();
    if lq == 0.0 {
        nf.ln()
    } else if lq > 0.0 {
        // q^n (1 - q^{-n}) / (q - 1)
        nf * lq + (-(-nf * lq).exp_m1()).ln() - lq.exp_m1().ln()
    } else {
        ((nf * lq).exp_m1() / lq.exp_m1()).ln()
    }
}

/// `1 / [n]_q` in floating point, `n >= 1`.
pub fn inv_q_bracket_f64(n: u64, q: f64) -> f64 {
    let nf = n as f64;
    let lq = q.ln();
    if lq == 0.0 {
        1.0 / nf
    } else if lq > 0.0 {
        let tail = -(-nf * lq).exp_m1();
        (-nf * lq).exp() * lq.exp_m1() / tail
    } else {
        lq.exp_m1() / (nf * lq).exp_m1()
    }
}

/// Closed form of `sum_{i>=0} a r^i [base + i]_q` for `0 <= r`, `r < 1`, `r q < 1`.
///
/// This is the shape every "geometric weight times q-bracket" series in
/// the chain and conditioning formulas reduces to.
pub fn geometric_bracket_sum(a: &Rat, r: &Rat, base: i64, q: &Rat) -> Result<Rat> {
    let one = Rat::one();
    if r.is_negative() || *r >= one || r * q >= one {
        return Err(LabError::NotNormalizable(format!(
            "series sum r^i [{base}+i]_q diverges for r = {r}, q = {q}"
        )));
    }
    if a.is_zero() {
        return Ok(Rat::zero());
    }
    if q.is_one() {
        let om = &one - r;
        return Ok(a * (int(base) / &om + r / (&om * &om)));
    }
    // [m]_q = (1 - q^m) / (1 - q)
    let geo = &one / (&one - r);
    let tilted = pow(q, base) / (&one - r * q);
    Ok(a * (geo - tilted) / (&one - q))
}

/// `sum_{j >= n} P(X0 = j) / [j+1]_q`.
///
/// Exact mode is available when the law has finite support or when the
/// q-bracket cancels against the pmf, leaving a geometric series. Every
/// law supports approximate mode, truncated where the certified tail
/// bound drops below `1e-15`.
pub fn tail_sum_ratio(law: &InitialLaw, n: u64, q: &Rat, mode: Mode) -> Result<Prob> {
    match mode {
        Mode::Exact => tail_sum_ratio_exact(law, n, q).map(Prob::Exact),
        Mode::Approx => {
            let cut = law.truncation_point(TRUNCATION_EPS)?;
            Ok(tail_sum_ratio_truncated(law, n, to_f64(q), cut))
        }
    }
}

/// Default certified truncation level for approximate series.
pub const TRUNCATION_EPS: f64 = 1e-15;

pub(crate) fn tail_sum_ratio_exact(law: &InitialLaw, n: u64, q: &Rat) -> Result<Rat> {
    use crate::processes::ExactForm;
    match law.exact_form(q)? {
        ExactForm::Finite(atoms) => {
            let mut acc = Rat::zero();
            for (j, p) in atoms.iter().filter(|(j, _)| *j >= n) {
                acc += p / q_bracket(*j as i64 + 1, q)?;
            }
            Ok(acc)
        }
        // pmf(j)/[j+1]_q = c r^j
        ExactForm::Geometric { c, r } => Ok(&c * pow(&r, n as i64) / (Rat::one() - &r)),
    }
}

/// Truncated float evaluation keeping terms `j <= cut`; the error bound is
/// the law's certified mass beyond `cut` (valid because `1/[j+1]_q <= 1`).
pub fn tail_sum_ratio_truncated(law: &InitialLaw, n: u64, q: f64, cut: u64) -> Prob {
    let mut value = 0.0;
    if n <= cut {
        for j in n..=cut {
            let p = law.pmf_f64(j);
            if p > 0.0 {
                value += p * inv_q_bracket_f64(j + 1, q);
            }
        }
    }
    let err = law.tail_mass_bound(cut) + 4.0 * f64::EPSILON * value;
    Prob::Approx { value, err }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_bracket_examples() {
        assert_eq!(q_bracket(3, &int(2)).unwrap(), int(7));
        assert_eq!(q_bracket(0, &rat(3, 7)).unwrap(), int(0));
        assert_eq!(q_bracket(4, &rat(1, 2)).unwrap(), rat(15, 8));
    }

    #[test]
    fn q_bracket_rejects_bad_input() {
        assert!(q_bracket(-1, &int(2)).is_err());
        assert!(q_bracket(2, &int(0)).is_err());
    }

    #[test]
    fn q_bracket_identities() {
        for q in [rat(1, 3), rat(2, 3), rat(3, 2), int(5)] {
            for n in 0..=64 {
                let lhs = q_bracket(n, &q).unwrap() * (&q - Rat::one());
                assert_eq!(lhs, pow(&q, n) - Rat::one(), "n={n} q={q}");
            }
        }
        for n in 0..=64 {
            assert_eq!(q_bracket(n, &Rat::one()).unwrap(), int(n));
        }
    }

    #[test]
    fn float_brackets_match_exact() {
        for q in [rat(1, 4), rat(99, 100), Rat::one(), rat(101, 100), int(3)] {
            for n in 1..40u64 {
                let exact = to_f64(&q_bracket(n as i64, &q).unwrap());
                let qf = to_f64(&q);
                let inv = inv_q_bracket_f64(n, qf);
                assert!((inv * exact - 1.0).abs() < 1e-12, "n={n} q={q}");
                assert!((ln_q_bracket_f64(n, qf) - exact.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometric_bracket_sum_matches_partial_sums() {
        for (r, q) in [(rat(1, 2), rat(1, 4)), (rat(1, 3), Rat::one()), (rat(1, 5), int(4))] {
            for base in 1..5i64 {
                let closed = to_f64(&geometric_bracket_sum(&int(1), &r, base, &q).unwrap());
                let mut brute = 0.0;
                let (rf, qf) = (to_f64(&r), to_f64(&q));
                for i in 0..400 {
                    brute += rf.powi(i) / inv_q_bracket_f64(base as u64 + i as u64, qf);
                }
                assert!((closed - brute).abs() < 1e-9 * closed, "r={r} q={q} base={base}");
            }
        }
        assert!(geometric_bracket_sum(&int(1), &rat(1, 2), 1, &int(2)).is_err());
    }

    #[test]
    fn parse_and_render() {
        assert_eq!(parse_rat("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rat(" 2 ").unwrap(), int(2));
        assert_eq!(parse_rat("-1/3").unwrap(), rat(-1, 3));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("0.5").is_err());
        assert_eq!(rat_string(&int(1)), "1/1");
        assert_eq!(rat_string(&rat(4, 6)), "2/3");
    }

    #[test]
    fn prob_mode_mixing_is_an_error() {
        let e = Prob::Exact(rat(1, 2));
        let a = Prob::Approx { value: 0.5, err: 1e-16 };
        assert_eq!(e.try_add(&a), Err(LabError::MixedModes));
        assert_eq!(e.try_add(&e).unwrap(), Prob::Exact(int(1)));
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"1/2\"");
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"value":0.5,"err":1e-16}"#);
    }
}
