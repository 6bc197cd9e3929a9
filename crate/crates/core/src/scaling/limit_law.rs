//! The limit level law `F_mu^v` and its density.
//!
//! With `h(y) = (1 - e^{-2vy})/(2v)` (and `h(y) = y` at `v = 0`),
//!
//! ```text
//! F(x) = mu[0, x] + h(x) int_{(x, inf)} mu(dy) / h(y)
//! f(x) = h'(x) int_{[x, inf)} mu(dy) / h(y)
//! ```
//!
//! so `F` is continuous on `(0, inf)` and its only atom is `mu{0}` at zero.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};

pub const QUAD_TOL: f64 = 1e-10;

/// Catalog of measures on `[0, inf]`. `Point(inf)` is the degenerate limit
/// of initial levels escaping faster than `sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Mu {
    Point(f64),
    Exp(f64),
    /// Law of the sum of independent `Exp(a)` and `Exp(b)`.
    Hypoexp(f64, f64),
    Mixture(Vec<(f64, Mu)>),
}

impl Mu {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(LabError::invalid(format!("{what} must be positive and finite, got {x}")))
            }
        };
        match self {
            Mu::Point(y) if *y >= 0.0 => Ok(()),
            Mu::Point(y) => Err(LabError::invalid(format!("point mass location {y} is negative"))),
            Mu::Exp(l) => pos(*l, "rate"),
            Mu::Hypoexp(a, b) => pos(*a, "rate").and(pos(*b, "rate")),
            Mu::Mixture(parts) => {
                let mut total = 0.0;
                for (w, m) in parts {
                    pos(*w, "mixture weight")?;
                    if matches!(m, Mu::Mixture(_)) {
                        return Err(LabError::invalid("nested mixtures are not supported"));
                    }
                    m.validate()?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(LabError::invalid(format!("mixture weights sum to {total}")));
                }
                Ok(())
            }
        }
    }

    /// Weighted non-mixture components.
    pub fn leaves(&self) -> Vec<(f64, &Mu)> {
        match self {
            Mu::Mixture(parts) => parts.iter().map(|(w, m)| (*w, m)).collect(),
            m => vec![(1.0, m)],
        }
    }

    /// `mu[0, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Mu::Point(y) => f64::from(*y <= x),
            Mu::Exp(l) => -(-l * x).exp_m1(),
            Mu::Hypoexp(a, b) if (a - b).abs() < 1e-12 * a.max(*b) => 1.0 - (-a * x).exp() * (1.0 + a * x),
            Mu::Hypoexp(a, b) => 1.0 - (b * (-a * x).exp() - a * (-b * x).exp()) / (b - a),
            Mu::Mixture(_) => self.leaves().iter().map(|(w, m)| w * m.cdf(x)).sum(),
        }
    }

    /// Density of an absolutely continuous leaf; zero for point masses.
    fn density(&self, y: f64) -> f64 {
        match self {
            Mu::Point(_) | Mu::Mixture(_) => 0.0,
            Mu::Exp(l) => l * (-l * y).exp(),
            Mu::Hypoexp(a, b) if (a - b).abs() < 1e-12 * a.max(*b) => a * a * y * (-a * y).exp(),
            Mu::Hypoexp(a, b) => a * b * (-a * y).exp() * -(-(b - a) * y).exp_m1() / (b - a),
        }
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.leaves().iter().filter(|(_, m)| **m == Mu::Point(0.0)).map(|(w, _)| w).sum()
    }

    /// Finite positive locations of point masses, sorted.
    pub fn atom_locations(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .leaves()
            .iter()
            .filter_map(|(_, m)| match m {
                Mu::Point(y) if *y > 0.0 && y.is_finite() => Some(*y),
                _ => None,
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn has_point_at_infinity(&self) -> bool {
        self.leaves().iter().any(|(_, m)| matches!(m, Mu::Point(y) if y.is_infinite()))
    }
}

impl fmt::Display for Mu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mu::Point(y) if y.is_infinite() => write!(f, "point:inf"),
            Mu::Point(y) => write!(f, "point:{y}"),
            Mu::Exp(l) => write!(f, "exp:{l}"),
            Mu::Hypoexp(a, b) => write!(f, "hypoexp:{a},{b}"),
            Mu::Mixture(parts) => {
                write!(f, "mix:")?;
                for (i, (w, m)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "{w}*{m}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Mu {
    type Err = LabError;

    /// `point:1`, `point:inf`, `exp:0.7`, `hypoexp:0.7,1.3`,
    /// `mix:0.5*point:1+0.5*exp:2`.
    fn from_str(s: &str) -> Result<Mu> {
        let s = s.trim();
        let bad = || LabError::Parse(format!("not a limit measure: {s:?}"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let mu = match kind {
            "point" if rest.trim() == "inf" => Mu::Point(f64::INFINITY),
            "point" => Mu::Point(num(rest)?),
            "exp" => Mu::Exp(num(rest)?),
            "hypoexp" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Mu::Hypoexp(num(a)?, num(b)?)
            }
            "mix" => Mu::Mixture(
                rest.split('+')
                    .map(|part| {
                        let (w, m) = part.split_once('*').ok_or_else(bad)?;
                        Ok((num(w)?, m.parse::<Mu>()?))
                    })
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(bad()),
        };
        mu.validate()?;
        Ok(mu)
    }
}

impl Serialize for Mu {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The double-exponential rule is always run at this tolerance: with a loose
/// one it can stop after a few levels on a wrong value with a tiny estimate.
const DE_TOL: f64 = 1e-14;

/// Double-exponential quadrature, bisected while its error estimate
/// exceeds the share of the tolerance.
pub(crate) fn integrate_adaptive(g: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::integrate(g, a, b, DE_TOL);
    if out.error_estimate <= tol || depth == 0 {
        return out.integral;
    }
    let m = 0.5 * (a + b);
    integrate_adaptive(g, a, m, tol / 2.0, depth - 1) + integrate_adaptive(g, m, b, tol / 2.0, depth - 1)
}

/// `int_{[a, inf)} g` for `a > 0` through `y = a e^s`, `s = u/(1-u)`:
/// a `1/y` behaviour at the lower end becomes a smooth integrand.
pub(crate) fn integrate_to_infinity(g: impl Fn(f64) -> f64, a: f64) -> f64 {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let y = a * (u / w).exp();
        if !y.is_finite() {
            return 0.0;
        }
        let val = g(y);
        if val == 0.0 {
            0.0
        } else {
            val * y / (w * w)
        }
    };
    integrate_adaptive(&mapped, 0.0, 1.0, QUAD_TOL, 6)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitLevelLaw {
    pub v: f64,
    pub mu: Mu,
}

impl LimitLevelLaw {
    pub fn new(v: f64, mu: Mu) -> Result<LimitLevelLaw> {
        if !v.is_finite() {
            return Err(LabError::invalid("drift must be finite"));
        }
        mu.validate()?;
        if mu.has_point_at_infinity() && v <= 0.0 {
            return Err(LabError::Regime("mass at infinity needs v > 0".into()));
        }
        Ok(LimitLevelLaw { v, mu })
    }

    fn h(&self, y: f64) -> f64 {
        if self.v == 0.0 {
            y
        } else {
            -(-2.0 * self.v * y).exp_m1() / (2.0 * self.v)
        }
    }

    /// `h(x)/h(y)` for `x <= y`. For `v < 0` both factors grow like
    /// `e^{2|v| x}`, so the ratio is formed from the difference `y - x`.
    fn h_ratio(&self, x: f64, y: f64) -> f64 {
        if y.is_infinite() {
            return self.h(x) * (2.0 * self.v).max(0.0);
        }
        if self.v < 0.0 {
            let w = -2.0 * self.v;
            (-w * (y - x)).exp() * (-w * x).exp_m1() / (-w * y).exp_m1()
        } else {
            self.h(x) / self.h(y)
        }
    }

    /// `1 - h(x)/h(y)` for `x <= y`.
    fn h_ratio_complement(&self, x: f64, y: f64) -> f64 {
        if y.is_infinite() {
            return 1.0 - self.h_ratio(x, y);
        }
        if self.v == 0.0 {
            return (y - x) / y;
        }
        let w = 2.0 * self.v;
        if w > 0.0 {
            (-w * x).exp() * (-w * (y - x)).exp_m1() / (-w * y).exp_m1()
        } else {
            (w * (y - x)).exp_m1() / (w * y).exp_m1()
        }
    }

    /// `h'(x)/h(y)` for `x <= y`, stable in the same way.
    fn h_prime_ratio(&self, x: f64, y: f64) -> f64 {
        if y.is_infinite() {
            return (-2.0 * self.v * x).exp() * (2.0 * self.v).max(0.0);
        }
        if self.v < 0.0 {
            let w = -2.0 * self.v;
            w * (-w * (y - x)).exp() / -(-w * y).exp_m1()
        } else {
            (-2.0 * self.v * x).exp() / self.h(y)
        }
    }

    /// `int_{[x, inf)} ratio(y) mu(dy)`.
    fn weighted_tail_integral(&self, x: f64, ratio: impl Fn(f64) -> f64) -> f64 {
        self.mu
            .leaves()
            .iter()
            .map(|(w, m)| {
                w * match m {
                    Mu::Point(y) if *y >= x => ratio(*y),
                    Mu::Point(_) => 0.0,
                    m => integrate_to_infinity(|y| m.density(y) * ratio(y), x),
                }
            })
            .sum()
    }

    fn check_x(x: f64) -> Result<()> {
        if x > 0.0 {
            Ok(())
        } else {
            Err(LabError::invalid(format!("limit law is evaluated at x > 0, got {x}")))
        }
    }

    /// `F_mu^v(x)` with closed forms where available.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if x.is_infinite() {
            return Ok(1.0);
        }
        Ok(self.mu.leaves().iter().map(|(w, m)| w * self.leaf_cdf(m, x, true)).sum())
    }

    /// `F_mu^v(x)` by quadrature for every absolutely continuous part.
    pub fn cdf_quadrature(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.mu.leaves().iter().map(|(w, m)| w * self.leaf_cdf(m, x, false)).sum())
    }

    fn leaf_cdf(&self, m: &Mu, x: f64, closed_forms: bool) -> f64 {
        match m {
            Mu::Point(y) if *y <= x => 1.0,
            Mu::Point(y) => self.h_ratio(x, *y),
            // 2v = a - b turns the hypoexponential into Exp(a); symmetric in (a, b)
            Mu::Hypoexp(a, b) if closed_forms && (2.0 * self.v - (a - b)).abs() < 1e-14 => -(-a * x).exp_m1(),
            Mu::Hypoexp(a, b) if closed_forms && (2.0 * self.v - (b - a)).abs() < 1e-14 => -(-b * x).exp_m1(),
            // near 1 the complement keeps full relative accuracy
            m if m.cdf(x) > 0.5 => {
                1.0 - integrate_to_infinity(|y| m.density(y) * self.h_ratio_complement(x, y), x)
            }
            m => m.cdf(x) + integrate_to_infinity(|y| m.density(y) * self.h_ratio(x, y), x),
        }
    }

    /// Density of the part of the law on `(0, inf)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.weighted_tail_integral(x, |y| self.h_prime_ratio(x, y)))
    }

    /// Mass of the atom at zero.
    pub fn atom(&self) -> f64 {
        self.mu.atom_at_zero()
    }

    /// `int_0^inf f` in the variable `ln x`, split at unit steps and at the
    /// point masses where `f` jumps.
    pub fn density_mass(&self) -> f64 {
        let mut cuts: Vec<f64> = (-50..=6).map(f64::from).collect();
        cuts.extend(self.mu.atom_locations().iter().map(|y| y.ln()).filter(|t| (-50.0..6.0).contains(t)));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let f = |x: f64| if x > 0.0 { self.density(x).unwrap_or(0.0) } else { 0.0 };
        let g = |t: f64| {
            let x = t.exp();
            f(x) * x
        };
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += integrate_adaptive(&g, pair[0], pair[1], QUAD_TOL / 64.0, 6);
        }
        total + integrate_to_infinity(f, cuts.last().expect("nonempty").exp())
    }

    /// Checks the structural properties of `F` numerically.
    pub fn properties(&self, grid_points: usize, large: f64) -> Result<LawProperties> {
        let mut prev = 0.0;
        let mut monotone = true;
        let mut min_value = f64::INFINITY;
        for i in 1..=grid_points {
            let x = large * i as f64 / grid_points as f64;
            let f = self.cdf(x)?;
            monotone &= f >= prev - 1e-12;
            min_value = min_value.min(f);
            prev = f;
        }
        let density_mass = self.density_mass();
        let atom = self.atom();
        Ok(LawProperties {
            monotone,
            min_value,
            cdf_at_large: self.cdf(large)?,
            density_mass,
            atom,
            total_mass_error: (density_mass + atom - 1.0).abs(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawProperties {
    pub monotone: bool,
    pub min_value: f64,
    pub cdf_at_large: f64,
    pub density_mass: f64,
    pub atom: f64,
    pub total_mass_error: f64,
}

impl LawProperties {
    pub fn passed(&self) -> bool {
        self.monotone && self.min_value >= 0.0 && (1.0 - self.cdf_at_large).abs() <= 1e-6 && self.total_mass_error <= 1e-8
    }
}
