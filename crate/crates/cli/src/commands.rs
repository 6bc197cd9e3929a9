use rand::Rng;
use serde_json::json;

use pitman_core::conditioning::{v_law_from_initial, verify_thm2 as core_thm2};
use pitman_core::mc::{ChainSampler, DiscreteSampler, McOptions};
use pitman_core::numeric::{parse_rat, rat_string};
use pitman_core::path::enumerate_paths;
use pitman_core::pitman::{preimage as core_preimage, tropical_compose_check, TropicalReport};
use pitman_core::processes::{chain_increment_law, InitialLaw, Route};
use pitman_core::representation::{
    damage_check, g_law_from_initial, rhs_law_formula_table, verify_thm1 as core_thm1,
    verify_two_sided as core_two_sided, walk_law, Level, LevelLaw, Part, VerifyReport,
};
use pitman_core::scaling::{
    continuity_check, donsker_ladder, invariance_check, kernel_limit_check, limit_marginal_samples, parse_grid,
    LimitLevelLaw, Mu, ScaledFamily, ScalingConfig,
};
use pitman_core::{DistTable, LabError, Params, Path, Prob, Result};

use crate::report::Report;
use crate::*;

fn params(w: &WalkArgs) -> Result<Params> {
    Params::parse(&w.rho, &w.sigma)
}

fn mc(a: &McArgs) -> McOptions {
    McOptions::new(a.samples, a.seed, a.streams)
}

fn prob_cells(p: &Prob) -> [String; 2] {
    match p {
        Prob::Exact(r) => [rat_string(r), "0".into()],
        Prob::Approx { value, err } => [format!("{value:e}"), format!("{err:e}")],
    }
}

fn verify_report(command: &'static str, args: &impl serde::Serialize, rep: &VerifyReport) -> Report {
    let rows = rep
        .comparisons
        .iter()
        .map(|c| {
            vec![
                c.lhs.clone(),
                c.rhs.clone(),
                c.diff.max_abs_diff.to_string(),
                c.diff.tolerance.to_string(),
                c.diff.exact_diff.as_ref().map(rat_string).unwrap_or_default(),
                c.diff.witness.as_ref().map(Path::to_string).unwrap_or_default(),
                c.diff.entries.to_string(),
            ]
        })
        .collect();
    Report::new(command, args, rep.passed(), rep).table(
        vec!["lhs", "rhs", "max_abs_diff", "tolerance", "exact_diff", "witness", "entries"],
        rows,
    )
}

fn table_report(command: &'static str, args: &impl serde::Serialize, table: &DistTable) -> Report {
    let rows = table
        .iter()
        .map(|(path, p)| {
            let [v, e] = prob_cells(p);
            vec![path.to_string(), v, e]
        })
        .collect();
    let total = table.total_mass();
    let result = json!({ "horizon": table.horizon(), "mode": table.mode(), "total_mass": total, "table": table });
    Report::new(command, args, true, &result).table(vec!["path", "prob", "err"], rows)
}

pub fn verify_thm1(a: &Thm1Args) -> Result<Report> {
    let p = params(&a.walk)?;
    let law: InitialLaw = a.initial.parse()?;
    let rep = core_thm1(a.t, &law, &p, a.part.parse()?)?;
    Ok(verify_report("verify thm1", a, &rep))
}

pub fn verify_thm2(a: &Thm2Args) -> Result<Report> {
    let b = &a.base;
    let p = params(&b.walk)?;
    let law: InitialLaw = b.initial.parse()?;
    let rep = core_thm2(b.t, &law, &p, b.part.parse()?, a.extra)?;
    Ok(verify_report("verify thm2", a, &rep))
}

pub fn verify_two_sided(a: &TwoSidedArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let law: InitialLaw = a.initial.parse()?;
    let rep = core_two_sided(a.t, &law, &p)?;
    Ok(verify_report("verify two-sided", a, &rep))
}

fn tropical_row(x: &Path, g1: i64, g2: i64, r: &TropicalReport) -> Vec<String> {
    vec![
        x.to_string(),
        g1.to_string(),
        g2.to_string(),
        r.max_identity.len().to_string(),
        r.composition.len().to_string(),
        r.pitman_invariance.len().to_string(),
    ]
}

pub fn verify_tropical(a: &TropicalArgs) -> Result<Report> {
    let header = vec!["path", "g1", "g2", "max_identity", "composition", "pitman_invariance"];
    if let Some(s) = &a.path {
        let x: Path = s.parse()?;
        let r = tropical_compose_check(&x, a.g1, a.g2)?;
        let row = tropical_row(&x, a.g1, a.g2, &r);
        return Ok(Report::new("verify tropical", a, r.violations() == 0, &r).table(header, vec![row]));
    }
    let mut cases = Vec::new();
    for t in 0..=a.t {
        for x in enumerate_paths(t, true)? {
            for g1 in 0..=t as i64 + 1 {
                for g2 in 0..=t as i64 + 1 {
                    cases.push((x.clone(), g1, g2));
                }
            }
        }
    }
    let mut rng = pitman_core::mc::RngStream::new(a.seed, 0).rng();
    for _ in 0..a.random {
        let steps = (0..a.random_t).map(|_| rng.random_range(-1i8..=1)).collect();
        let x = Path::from_steps(steps)?;
        cases.push((x, rng.random_range(0..=a.g_max), rng.random_range(0..=a.g_max)));
    }
    let mut rows = Vec::new();
    let mut violations = 0;
    for (x, g1, g2) in &cases {
        let r = tropical_compose_check(x, *g1, *g2)?;
        if r.violations() > 0 {
            violations += r.violations();
            rows.push(tropical_row(x, *g1, *g2, &r));
        }
    }
    let result = json!({ "cases": cases.len(), "violations": violations, "failing": rows.len() });
    Ok(Report::new("verify tropical", a, violations == 0, &result).table(header, rows))
}

pub fn verify_damage(a: &DamageArgs) -> Result<Report> {
    let rep = damage_check(&parse_rat(&a.q)?, &parse_rat(&a.theta)?, a.support)?;
    let row = vec![
        rep.q.clone(),
        rep.theta.clone(),
        rep.support.to_string(),
        rep.factorization_holds.to_string(),
        rep.rao_rubin_holds.to_string(),
        rep.marginals_hold.to_string(),
        rep.swapped_assignment_holds.to_string(),
    ];
    Ok(Report::new("verify damage", a, rep.passed(), &rep).table(
        vec!["q", "theta", "support", "factorization", "rao_rubin", "marginals", "swapped_assignment"],
        vec![row],
    ))
}

pub fn preimage(a: &PreimageArgs) -> Result<Report> {
    let x: Path = a.path.parse()?;
    let set = core_preimage(&x);
    let mut rows = vec![vec!["ray".to_string(), format!("{}+", set.ray.g_min), set.ray.s.to_string()]];
    rows.extend(set.sporadic.iter().map(|m| vec!["sporadic".to_string(), m.g.to_string(), m.s.to_string()]));
    Ok(Report::new("preimage", a, true, &set).table(vec!["kind", "g", "s"], rows))
}

pub fn law_chain(a: &ChainLawArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let law: InitialLaw = a.initial.parse()?;
    let route = match a.route {
        RouteArg::Formula => Route::Formula,
        RouteArg::Product => Route::Product,
    };
    Ok(table_report("law chain", a, &chain_increment_law(a.t, &law, &p, route)?))
}

pub fn law_walk(a: &WalkLawArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    Ok(table_report("law walk", a, &walk_law(a.t, &p)?))
}

pub fn law_rhs(a: &RhsArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let part: Part = a.part.parse()?;
    let glaw: LevelLaw = match (&a.level, &a.initial) {
        (Some(l), None) => l.parse()?,
        (None, Some(i)) => g_law_from_initial(&i.parse()?, &p, part.level())?,
        _ => return Err(LabError::InvalidArgument("give exactly one of --level and --initial".into())),
    };
    Ok(table_report("law rhs", a, &rhs_law_formula_table(a.t, &glaw, &part.walk_params(&p))?))
}

pub fn law_level(a: &LevelArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let law: InitialLaw = a.initial.parse()?;
    let level = match a.which {
        WhichLevel::G => g_law_from_initial(&law, &p, Level::G)?,
        WhichLevel::Gtilde => g_law_from_initial(&law, &p, Level::GTilde)?,
        WhichLevel::V => v_law_from_initial(&law, &p, a.part.parse()?)?,
    };
    let rows = (0..=a.max)
        .map(|n| {
            let [v, e] = prob_cells(&level.pmf(n));
            vec![n.to_string(), v, e]
        })
        .collect();
    let pmf: Vec<Prob> = (0..=a.max).map(|n| level.pmf(n)).collect();
    let result = json!({ "mode": level.mode(), "law": level, "pmf": pmf });
    Ok(Report::new("law level", a, true, &result).table(vec!["n", "pmf", "err"], rows))
}

fn family(s: &ScaledArgs) -> Result<(Mu, ScaledFamily)> {
    let mu: Mu = s.mu.parse()?;
    let fam = ScaledFamily::for_mu(&mu, s.v, s.exponent)?;
    Ok((mu, fam))
}

pub fn scaling_continuity(a: &ContinuityArgs) -> Result<Report> {
    let cfg = ScalingConfig::new(a.scaled.n, a.scaled.v, parse_rat(&a.sigma)?)?;
    let (_, fam) = family(&a.scaled)?;
    let rep = continuity_check(&cfg, &fam, &parse_grid(&a.grid)?)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![r.x.to_string(), r.empirical.to_string(), r.limit.to_string(), r.diff.to_string()])
        .collect();
    let passed = rep.sup_diff <= a.tol;
    Ok(Report::new("scaling continuity", a, passed, &rep).table(vec!["x", "empirical", "limit", "diff"], rows))
}

pub fn scaling_kernel(a: &KernelArgs) -> Result<Report> {
    if a.n.is_empty() {
        return Err(LabError::InvalidArgument("--N needs at least one value".into()));
    }
    let points = a
        .n
        .iter()
        .map(|&n| kernel_limit_check(n, a.t, a.x, a.y, a.v))
        .collect::<Result<Vec<_>>>()?;
    let largest = points.iter().max_by_key(|p| p.n).expect("nonempty");
    let passed = largest.rel_err <= a.tol;
    let rows = points
        .iter()
        .map(|p| vec![p.n.to_string(), p.finite.to_string(), p.limit.to_string(), p.rel_err.to_string()])
        .collect();
    Ok(Report::new("scaling kernel", a, passed, &points).table(vec!["N", "finite", "limit", "rel_err"], rows))
}

pub fn scaling_donsker(a: &DonskerArgs) -> Result<Report> {
    let cfg = ScalingConfig::new(a.scaled.n, a.scaled.v, parse_rat(&a.sigma)?)?;
    let (mu, fam) = family(&a.scaled)?;
    let opts = mc(&a.mc);
    let ladder = donsker_ladder(&cfg, &fam, a.t, &a.steps, !a.no_smooth, a.alpha, &opts)?;
    let mut passed = ladder.reports.iter().all(|r| r.passed) && (a.steps.len() < 2 || ladder.stabilized);
    let invariance = if a.invariance {
        let steps = *a.steps.last().expect("at least one step count");
        let inv = invariance_check(a.scaled.v, cfg.sigma_f64(), &mu, a.t, steps, a.alpha, &opts)?;
        passed &= inv.passed;
        Some(inv)
    } else {
        None
    };
    let rows = ladder
        .reports
        .iter()
        .map(|r| {
            vec![
                r.steps.to_string(),
                r.ks.to_string(),
                r.critical.to_string(),
                r.passed.to_string(),
                r.chain_mean.to_string(),
                r.limit_mean.to_string(),
            ]
        })
        .collect();
    let result = json!({ "ladder": ladder, "invariance": invariance });
    Ok(Report::new("scaling donsker", a, passed, &result)
        .table(vec!["steps", "ks", "critical", "passed", "chain_mean", "limit_mean"], rows))
}

pub fn sample_walk(a: &SampleWalkArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let paths: Vec<Path> = mc(&a.mc).run(|rng, n| (0..n).map(|_| pitman_core::mc::sample_walk(a.t, &p, rng)).collect());
    let rows = paths.iter().enumerate().map(|(i, x)| vec![i.to_string(), x.to_string()]).collect();
    Ok(Report::new("sample walk", a, true, &json!({ "paths": paths })).table(vec!["index", "path"], rows))
}

pub fn sample_chain(a: &SampleChainArgs) -> Result<Report> {
    let p = params(&a.walk)?;
    let law: InitialLaw = a.initial.parse()?;
    let start = DiscreteSampler::from_initial(&law)?;
    let chain = ChainSampler::new(&p);
    let draws: Vec<(u64, Path)> = mc(&a.mc).run(|rng, n| {
        (0..n)
            .map(|_| {
                let x0 = start.sample(rng);
                (x0, chain.path(x0, a.t, rng))
            })
            .collect()
    });
    let rows = draws.iter().enumerate().map(|(i, (x0, x))| vec![i.to_string(), x0.to_string(), x.to_string()]).collect();
    let result: Vec<_> = draws.iter().map(|(x0, x)| json!({ "x0": x0, "increments": x })).collect();
    Ok(Report::new("sample chain", a, true, &result).table(vec!["index", "x0", "increments"], rows))
}

pub fn sample_limit(a: &SampleLimitArgs) -> Result<Report> {
    let mu: Mu = a.mu.parse()?;
    let law = LimitLevelLaw::new(a.v, mu)?;
    let xs = limit_marginal_samples(a.v, a.sigma, &law, a.t, a.steps, &mc(&a.mc))?;
    let rows = xs.iter().enumerate().map(|(i, x)| vec![i.to_string(), x.to_string()]).collect();
    Ok(Report::new("sample limit-process", a, true, &json!({ "values": xs })).table(vec!["index", "value"], rows))
}
