use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{
    geometric_bracket_sum, inv_q_bracket_f64, pow, q_bracket, serialize_rat, to_f64, Mode, Prob, Rat,
    TRUNCATION_EPS,
};
use crate::processes::{ExactForm, InitialLaw, Params};

/// Geometric continuation `P(n) = first * ratio^(n - start)` for `n >= start`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoTail {
    #[serde(serialize_with = "serialize_rat")]
    pub first: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub ratio: Rat,
}

/// A law on `Z>=0` used for the random levels `G`, `G~` and `V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LevelLaw {
    /// Explicit head followed by an optional geometric tail.
    Exact {
        #[serde(serialize_with = "ser_rats")]
        head: Vec<Rat>,
        tail: Option<GeoTail>,
    },
    /// Float pmf whose total L1 distance to the true law is at most `err`.
    Approx { pmf: Vec<f64>, err: f64 },
}

fn ser_rats<S: serde::Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(crate::numeric::rat_string))
}

/// Which level law of the representation to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    /// `P(G = n) = q^n sum_{j>=n} P(X0=j)/[j+1]_q`, `q = rho^2`.
    G,
    /// The same with `q = 1/rho^2`.
    GTilde,
}

impl LevelLaw {
    pub fn point(n: u64) -> LevelLaw {
        let mut head = vec![Rat::zero(); n as usize + 1];
        head[n as usize] = Rat::one();
        LevelLaw::Exact { head, tail: None }
    }

    /// `geo(p)`: `P(n) = (1 - p) p^n`.
    pub fn geometric(p: Rat) -> Result<LevelLaw> {
        if p < Rat::zero() || p >= Rat::one() {
            return Err(LabError::invalid(format!("geometric parameter must lie in [0, 1), got {p}")));
        }
        Ok(LevelLaw::Exact { head: vec![], tail: Some(GeoTail { first: Rat::one() - &p, ratio: p }) })
    }

    /// A finitely supported exact law; masses must be non-negative and sum to 1.
    pub fn from_pmf(head: Vec<Rat>) -> Result<LevelLaw> {
        LevelLaw::with_tail(head, None)
    }

    pub fn with_tail(head: Vec<Rat>, tail: Option<GeoTail>) -> Result<LevelLaw> {
        if head.iter().any(|p| *p < Rat::zero()) {
            return Err(LabError::invalid("level law has a negative mass"));
        }
        if let Some(t) = &tail {
            if t.first < Rat::zero() || t.ratio < Rat::zero() || t.ratio >= Rat::one() {
                return Err(LabError::invalid("level law tail must be a convergent non-negative series"));
            }
        }
        let law = LevelLaw::Exact { head, tail };
        let total = law.tail(0).into_exact()?;
        if !total.is_one() {
            return Err(LabError::NotNormalizable(format!("level law has total mass {total}")));
        }
        Ok(law)
    }

    pub fn mode(&self) -> Mode {
        match self {
            LevelLaw::Exact { .. } => Mode::Exact,
            LevelLaw::Approx { .. } => Mode::Approx,
        }
    }

    pub fn err(&self) -> f64 {
        match self {
            LevelLaw::Exact { .. } => 0.0,
            LevelLaw::Approx { err, .. } => *err,
        }
    }

    pub fn pmf(&self, n: u64) -> Prob {
        match self {
            LevelLaw::Exact { head, tail } => Prob::Exact(exact_pmf(head, tail, n)),
            LevelLaw::Approx { pmf, err } => {
                Prob::Approx { value: pmf.get(n as usize).copied().unwrap_or(0.0), err: *err }
            }
        }
    }

    /// `P(G >= n)`.
    pub fn tail(&self, n: u64) -> Prob {
        match self {
            LevelLaw::Exact { head, tail } => {
                let n = n as usize;
                let mut acc: Rat = head.iter().skip(n).sum();
                if let Some(t) = tail {
                    let skip = n.saturating_sub(head.len()) as i64;
                    acc += &t.first * pow(&t.ratio, skip) / (Rat::one() - &t.ratio);
                }
                Prob::Exact(acc)
            }
            LevelLaw::Approx { pmf, err } => {
                Prob::Approx { value: pmf.iter().skip(n as usize).sum(), err: *err }
            }
        }
    }

    pub fn pmf_f64(&self, n: u64) -> f64 {
        self.pmf(n).value()
    }

    /// Float view with the same error budget.
    pub fn to_approx(&self, eps: f64) -> LevelLaw {
        match self {
            LevelLaw::Approx { .. } => self.clone(),
            LevelLaw::Exact { head, tail } => {
                let mut pmf: Vec<f64> = head.iter().map(to_f64).collect();
                let mut err = 0.0;
                if let Some(t) = tail {
                    let (first, ratio) = (to_f64(&t.first), to_f64(&t.ratio));
                    let mut p = first;
                    let mut rest = first / (1.0 - ratio);
                    while rest > eps && p > 0.0 {
                        pmf.push(p);
                        rest -= p;
                        p *= ratio;
                    }
                    err = rest.max(0.0) + 4.0 * f64::EPSILON * pmf.len() as f64;
                }
                LevelLaw::Approx { pmf, err }
            }
        }
    }

    /// `sum_{j >= lo} P(j) [j + shift]_q` for `0 < q < 1` (or finite support).
    pub fn bracket_moment(&self, lo: u64, shift: i64, q: &Rat) -> Result<Prob> {
        if lo as i64 + shift < 0 {
            return Err(LabError::invalid("bracket index below zero"));
        }
        match self {
            LevelLaw::Exact { head, tail } => {
                let mut acc = Rat::zero();
                for (j, p) in head.iter().enumerate().skip(lo as usize) {
                    if !p.is_zero() {
                        acc += p * q_bracket(j as i64 + shift, q)?;
                    }
                }
                if let Some(t) = tail {
                    let start = (lo as usize).max(head.len());
                    let a = &t.first * pow(&t.ratio, (start - head.len()) as i64);
                    acc += geometric_bracket_sum(&a, &t.ratio, start as i64 + shift, q)?;
                }
                Ok(Prob::Exact(acc))
            }
            LevelLaw::Approx { pmf, err } => {
                let qf = to_f64(q);
                if qf >= 1.0 {
                    return Err(LabError::Regime(format!("bracket moment needs q < 1, got {qf}")));
                }
                let mut value = 0.0;
                for (j, p) in pmf.iter().enumerate().skip(lo as usize) {
                    let n = j as i64 + shift;
                    if *p > 0.0 && n > 0 {
                        value += p / inv_q_bracket_f64(n as u64, qf);
                    }
                }
                // [n]_q < 1/(1-q)
                Ok(Prob::Approx { value, err: err / (1.0 - qf) + 8.0 * f64::EPSILON * value })
            }
        }
    }

    /// Float cdf on `0..len`, for samplers and distance checks.
    pub fn cdf_table(&self, eps: f64) -> Vec<f64> {
        let LevelLaw::Approx { pmf, .. } = self.to_approx(eps) else { unreachable!() };
        pmf.iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }
}

fn exact_pmf(head: &[Rat], tail: &Option<GeoTail>, n: u64) -> Rat {
    let n = n as usize;
    if n < head.len() {
        return head[n].clone();
    }
    match tail {
        Some(t) => &t.first * pow(&t.ratio, (n - head.len()) as i64),
        None => Rat::zero(),
    }
}

/// The base `q` of the level law.
pub fn level_q(params: &Params, which: Level) -> Rat {
    match which {
        Level::G => params.q(),
        Level::GTilde => params.q().recip(),
    }
}

/// `P(G = n) = q^n sum_{j >= n} P(X0 = j) / [j+1]_q`, exact whenever the
/// bracket cancels or the support is finite.
pub fn g_law_from_initial(law: &InitialLaw, params: &Params, which: Level) -> Result<LevelLaw> {
    let q = level_q(params, which);
    match law.exact_form(&q) {
        Ok(form) => Ok(g_law_exact(&form, &q)),
        Err(LabError::UnsupportedMode(_)) => g_law_approx(law, to_f64(&q)),
        Err(e) => Err(e),
    }
}

pub(crate) fn g_law_exact(form: &ExactForm, q: &Rat) -> LevelLaw {
    match form {
        ExactForm::Finite(atoms) => {
            let max = atoms.last().map(|a| a.0).unwrap_or(0) as usize;
            let mut ratio = vec![Rat::zero(); max + 1];
            let mut bracket = Rat::zero();
            let mut it = atoms.iter().peekable();
            for (j, slot) in ratio.iter_mut().enumerate() {
                bracket = bracket * q + Rat::one();
                if let Some((_, p)) = it.next_if(|a| a.0 as usize == j) {
                    *slot = p / &bracket;
                }
            }
            let mut head = vec![Rat::zero(); max + 1];
            let mut suffix = Rat::zero();
            for n in (0..=max).rev() {
                suffix += &ratio[n];
                head[n] = &suffix * pow(q, n as i64);
            }
            LevelLaw::Exact { head, tail: None }
        }
        // q^n c r^n / (1 - r)
        ExactForm::Geometric { c, r } => LevelLaw::Exact {
            head: vec![],
            tail: Some(GeoTail { first: c / (Rat::one() - r), ratio: q * r }),
        },
    }
}

/// Float level law truncated at the law's certified `1e-15` point.
pub fn g_law_approx(law: &InitialLaw, q: f64) -> Result<LevelLaw> {
    let cut = law.truncation_point(TRUNCATION_EPS)?;
    Ok(g_law_truncated(law, q, cut))
}

/// Float level law keeping initial levels `j <= cut`. The neglected levels
/// carry total mass at most `tail_mass_bound(cut)`, and thinning maps each
/// of them to a sub-probability, so that bound is an L1 bound.
pub fn g_law_truncated(law: &InitialLaw, q: f64, cut: u64) -> LevelLaw {
    let len = cut as usize + 1;
    let a: Vec<f64> = (0..=cut).map(|j| law.pmf_f64(j)).collect();
    let mut pmf = vec![0.0; len];
    if q <= 1.0 {
        // q^n sum_{j>=n} a_j / [j+1]_q, with q^n <= 1
        let mut suffix = 0.0;
        for n in (0..len).rev() {
            suffix += a[n] * inv_q_bracket_f64(n as u64 + 1, q);
            pmf[n] = suffix * q.powi(n as i32);
        }
    } else {
        // with p = 1/q: q^n/[j+1]_q = p^(j-n)/[j+1]_p, so T_n = b_n + p T_{n+1}
        let p = 1.0 / q;
        let mut acc = 0.0;
        for n in (0..len).rev() {
            acc = a[n] * inv_q_bracket_f64(n as u64 + 1, p) + p * acc;
            pmf[n] = acc;
        }
    }
    let rounding = 8.0 * f64::EPSILON * len as f64;
    LevelLaw::Approx { pmf, err: law.tail_mass_bound(cut) + rounding }
}

impl std::str::FromStr for LevelLaw {
    type Err = LabError;

    /// `point:3`, `geo:1/4` (`P(n) = (1-p) p^n`) or `pmf:1/2,1/4,1/4`.
    fn from_str(s: &str) -> Result<LevelLaw> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').ok_or_else(|| LabError::Parse(format!("not a level law: {s:?}")))?;
        match kind {
            "point" => rest
                .trim()
                .parse()
                .map(LevelLaw::point)
                .map_err(|_| LabError::Parse(format!("bad point level: {rest:?}"))),
            "geo" => LevelLaw::geometric(crate::numeric::parse_rat(rest)?),
            "pmf" => LevelLaw::from_pmf(rest.split(',').map(crate::numeric::parse_rat).collect::<Result<_>>()?),
            _ => Err(LabError::Parse(format!("unknown level law kind {kind:?}"))),
        }
    }
}
