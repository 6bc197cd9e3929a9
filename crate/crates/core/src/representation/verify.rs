//! Table-equality checks of the representation theorem and its corollaries.

use num_traits::Zero;
use serde::Serialize;

use crate::error::Result;
use crate::numeric::{q_bracket, Mode, Prob, Rat};
use crate::path::Path;
use crate::processes::{chain_increment_law, DistTable, InitialLaw, Params, Route, TableDiff};

use super::{g_law_from_initial, rhs_law_enumeration, rhs_law_formula_table, walk_law, Level, LevelLaw};

/// Which half of the theorem: the walk `S` with level `G`, or the mirrored
/// walk `S~ = -S` with level `G~`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Part {
    I,
    II,
}

impl Part {
    pub fn level(self) -> Level {
        match self {
            Part::I => Level::G,
            Part::II => Level::GTilde,
        }
    }

    /// Parameters of the walk used on the right-hand side.
    pub fn walk_params(self, params: &Params) -> Params {
        match self {
            Part::I => params.clone(),
            Part::II => params.mirrored(),
        }
    }
}

impl std::str::FromStr for Part {
    type Err = crate::error::LabError;

    fn from_str(s: &str) -> Result<Part> {
        match s {
            "I" | "1" => Ok(Part::I),
            "II" | "2" => Ok(Part::II),
            _ => Err(crate::error::LabError::Parse(format!("part must be I or II, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub lhs: String,
    pub rhs: String,
    #[serde(flatten)]
    pub diff: TableDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub status: Status,
    pub check: String,
    pub t: usize,
    pub mode: Mode,
    pub max_abs_diff: f64,
    pub witness: Option<Path>,
    pub comparisons: Vec<Comparison>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub(crate) fn from_tables(check: &str, t: usize, pairs: Vec<(&str, &DistTable, &str, &DistTable)>) -> VerifyReport {
        let mut comparisons = Vec::with_capacity(pairs.len());
        let mut mode = Mode::Exact;
        for (ln, a, rn, b) in pairs {
            let diff = if a.mode() == b.mode() {
                a.compare(b)
            } else {
                mode = Mode::Approx;
                a.to_approx().compare(&b.to_approx())
            };
            if a.mode() == Mode::Approx {
                mode = Mode::Approx;
            }
            comparisons.push(Comparison { lhs: ln.to_string(), rhs: rn.to_string(), diff });
        }
        let witness = comparisons.iter().find_map(|c| c.diff.witness.clone());
        let max_abs_diff = comparisons.iter().map(|c| c.diff.max_abs_diff).fold(0.0, f64::max);
        VerifyReport {
            status: if witness.is_none() { Status::Pass } else { Status::Fail },
            check: check.to_string(),
            t,
            mode,
            max_abs_diff,
            witness,
            comparisons,
        }
    }
}

/// Forward direction: with the level law built from the initial law, the
/// chain increments, the enumerated pushforward and the closed form agree.
pub fn verify_thm1(t: usize, law: &InitialLaw, params: &Params, part: Part) -> Result<VerifyReport> {
    let glaw = g_law_from_initial(law, params, part.level())?;
    let walk = part.walk_params(params);
    let chain = chain_increment_law(t, law, params, Route::Formula)?;
    let enumerated = rhs_law_enumeration(t, &glaw, &walk)?;
    let formula = rhs_law_formula_table(t, &glaw, &walk)?;
    let mut pairs = vec![
        ("chain", &chain, "rhs_enumeration", &enumerated),
        ("rhs_enumeration", &enumerated, "rhs_formula", &formula),
    ];
    let product;
    if law.support_max().is_some() {
        product = chain_increment_law(t, law, params, Route::Product)?;
        pairs.push(("chain", &chain, "chain_product", &product));
    }
    Ok(VerifyReport::from_tables("thm1", t, pairs))
}

/// Converse direction: compares the chain against the pushforward built
/// from an arbitrary candidate level law and reports the first witness.
pub fn verify_thm1_candidate(
    t: usize,
    law: &InitialLaw,
    params: &Params,
    part: Part,
    candidate: &LevelLaw,
) -> Result<VerifyReport> {
    let chain = chain_increment_law(t, law, params, Route::Formula)?;
    let rhs = rhs_law_enumeration(t, candidate, &part.walk_params(params))?;
    Ok(VerifyReport::from_tables("thm1-candidate", t, vec![("chain", &chain, "rhs_enumeration", &rhs)]))
}

/// `2(M - G)+ - S` and `2(M~ - G~)+ - S~` have the same law.
pub fn verify_two_sided(t: usize, law: &InitialLaw, params: &Params) -> Result<VerifyReport> {
    let g = g_law_from_initial(law, params, Level::G)?;
    let gt = g_law_from_initial(law, params, Level::GTilde)?;
    let a = rhs_law_enumeration(t, &g, params)?;
    let b = rhs_law_enumeration(t, &gt, &params.mirrored())?;
    Ok(VerifyReport::from_tables("two-sided", t, vec![("rhs_G", &a, "rhs_Gtilde", &b)]))
}

/// Compares the pushforward under `glaw` with the walk law itself.
pub fn verify_walk_representation(t: usize, glaw: &LevelLaw, params: &Params) -> Result<VerifyReport> {
    let rhs = rhs_law_enumeration(t, glaw, params)?;
    let walk = walk_law(t, params)?;
    Ok(VerifyReport::from_tables("walk-representation", t, vec![("rhs_enumeration", &rhs, "walk", &walk)]))
}

/// Smallest horizon `<= t_max` at which `glaw` fails to reproduce the walk.
pub fn walk_representation_witness(t_max: usize, glaw: &LevelLaw, params: &Params) -> Result<Option<(usize, Path)>> {
    for t in 0..=t_max {
        let rep = verify_walk_representation(t, glaw, params)?;
        if let Some(w) = rep.witness {
            return Ok(Some((t, w)));
        }
    }
    Ok(None)
}

/// Law of `X0 - G` under the joint thinning coupling
/// `P(X0 = n, G = m) = P(X0 = n) q^m / [n+1]_q`, for finitely supported laws.
pub fn x0_minus_g_law(law: &InitialLaw, params: &Params) -> Result<LevelLaw> {
    let max = law
        .support_max()
        .ok_or_else(|| crate::error::LabError::UnsupportedMode(format!("convolution check for {law}")))?;
    let q = params.q();
    let mut head = vec![Rat::zero(); max as usize + 1];
    for n in 0..=max {
        let p = law.pmf_exact(n).expect("finite laws are rational");
        if p.is_zero() {
            continue;
        }
        let norm = &p / q_bracket(n as i64 + 1, &q)?;
        let mut qm = Rat::from_integer(1.into());
        for m in 0..=n {
            head[(n - m) as usize] += &norm * &qm;
            qm *= &q;
        }
    }
    LevelLaw::from_pmf(head)
}

/// `G~` from its own formula equals `X0 - G` under the coupling.
pub fn gtilde_convolution_check(law: &InitialLaw, params: &Params) -> Result<bool> {
    let direct = g_law_from_initial(law, params, Level::GTilde)?;
    let conv = x0_minus_g_law(law, params)?;
    let max = law.support_max().unwrap_or(0);
    Ok((0..=max + 1).all(|n| direct.pmf(n) == conv.pmf(n)) && direct.tail(max + 1) == Prob::Exact(Rat::zero()))
}
