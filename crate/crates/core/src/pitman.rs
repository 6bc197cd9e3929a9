//! The map `T_g[s] = 2(M(s) - g)+ - s`, its inverse images, and the
//! tropical identities of `T~_g = -T_g`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::path::{Path, PathStats};

fn check_level(g: i64) -> Result<()> {
    if g < 0 {
        return Err(LabError::invalid(format!("level g must be >= 0, got {g}")));
    }
    Ok(())
}

fn running_max(values: &[i64]) -> Vec<i64> {
    values
        .iter()
        .scan(i64::MIN, |m, &x| {
            *m = (*m).max(x);
            Some(*m)
        })
        .collect()
}

fn from_values_unchecked(values: &[i64]) -> Path {
    Path::from_values(values).expect("transform preserves nearest-neighbour steps")
}

/// `T_g[s]_j = 2 (max_{i<=j} s_i - g)+ - s_j`.
pub fn apply_t(g: i64, s: &Path) -> Result<Path> {
    check_level(g)?;
    let v = s.values();
    let out: Vec<i64> = running_max(&v).iter().zip(&v).map(|(m, x)| 2 * (m - g).max(0) - x).collect();
    Ok(from_values_unchecked(&out))
}

/// `s^(r)_j = 2 (r min K_j - K_0) - x_j` for `r` in `[K_0, x_t]`.
pub fn s_r(x: &Path, r: i64) -> Result<Path> {
    let st = x.stats();
    check_r(x, &st, r)?;
    Ok(s_r_with(x, &st, r))
}

fn check_r(x: &Path, st: &PathStats, r: i64) -> Result<()> {
    if r < st.global_min() || r > x.end() {
        return Err(LabError::invalid(format!("r = {r} outside [{}, {}]", st.global_min(), x.end())));
    }
    Ok(())
}

fn s_r_with(x: &Path, st: &PathStats, r: i64) -> Path {
    let k0 = st.global_min();
    let v: Vec<i64> = x
        .values()
        .iter()
        .zip(&st.backward_min)
        .map(|(xj, kj)| 2 * (r.min(*kj) - k0) - xj)
        .collect();
    from_values_unchecked(&v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SporadicPreimage {
    pub g: i64,
    pub s: Path,
}

/// The ray `{(g, s) : g >= g_min}` with a single path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreimageRay {
    pub s: Path,
    pub g_min: i64,
}

/// The full inverse image of a path under `(g, s) -> T_g[s]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreimageSet {
    pub x: Path,
    #[serde(rename = "K")]
    pub k: i64,
    pub x_t: i64,
    pub ray: PreimageRay,
    pub sporadic: Vec<SporadicPreimage>,
}

impl PreimageSet {
    pub fn contains(&self, g: i64, s: &Path) -> bool {
        (g >= self.ray.g_min && *s == self.ray.s) || self.sporadic.iter().any(|m| m.g == g && m.s == *s)
    }
}

pub fn preimage(x: &Path) -> PreimageSet {
    let st = x.stats();
    let k = st.global_min();
    let sporadic = (k + 1..=x.end()).map(|r| SporadicPreimage { g: -k, s: s_r_with(x, &st, r) }).collect();
    PreimageSet {
        x: x.clone(),
        k,
        x_t: x.end(),
        ray: PreimageRay { s: x.negate(), g_min: -k },
        sporadic,
    }
}

/// `(U, D, H)` of `s^(r)` read off from the statistics of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    pub up: usize,
    pub down: usize,
    pub flat: usize,
}

pub fn preimage_stats(x: &Path, r: i64) -> Result<StepCounts> {
    let st = x.stats();
    check_r(x, &st, r)?;
    let k0 = st.global_min();
    Ok(StepCounts {
        up: (r - k0 + st.down as i64) as usize,
        down: (k0 - r + st.up as i64) as usize,
        flat: st.flat,
    })
}

/// Checks `max_{i<=j} (s^(r)_i + K)+ = r min K_j - K` at every `j`.
pub fn running_max_identity_check(x: &Path, r: i64) -> Result<bool> {
    let st = x.stats();
    check_r(x, &st, r)?;
    let k = st.global_min();
    let s = s_r_with(x, &st, r).values();
    let lhs = running_max(&s.iter().map(|v| (v + k).max(0)).collect::<Vec<_>>());
    Ok(lhs.iter().zip(&st.backward_min).all(|(l, kj)| *l == r.min(*kj) - k))
}

/// `T~_g(x)_j = x_j - 2 max_{i<=j} (x_i - g)+`.
pub fn tilde_t(g: i64, x: &Path) -> Result<Path> {
    Ok(apply_t(g, x)?.negate())
}

/// Pointwise evaluation of the three tropical identities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TropicalReport {
    /// Indices `j` where `M(T~_g1 x)_j != g1 min M(x)_j`.
    pub max_identity: Vec<usize>,
    /// Indices where `T~_g2 T~_g1 x != T~_{g1 min g2} x`.
    pub composition: Vec<usize>,
    /// Indices where `(2M - id)(T~_g1 x) != (2M - id)(x)`.
    pub pitman_invariance: Vec<usize>,
}

impl TropicalReport {
    pub fn violations(&self) -> usize {
        self.max_identity.len() + self.composition.len() + self.pitman_invariance.len()
    }
}

pub fn tropical_compose_check(x: &Path, g1: i64, g2: i64) -> Result<TropicalReport> {
    check_level(g1)?;
    check_level(g2)?;
    let xv = x.values();
    let t1 = tilde_t(g1, x)?;
    let t1v = t1.values();
    let composed = tilde_t(g2, &t1)?.values();
    let direct = tilde_t(g1.min(g2), x)?.values();
    let (mx, mt) = (running_max(&xv), running_max(&t1v));

    let mut rep = TropicalReport::default();
    for j in 0..xv.len() {
        if mt[j] != g1.min(mx[j]) {
            rep.max_identity.push(j);
        }
        if composed[j] != direct[j] {
            rep.composition.push(j);
        }
        if 2 * mt[j] - t1v[j] != 2 * mx[j] - xv[j] {
            rep.pitman_invariance.push(j);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::enumerate_paths;

    fn p(s: &str) -> Path {
        s.parse().unwrap()
    }

    #[test]
    fn apply_t_examples() {
        assert_eq!(apply_t(0, &p("0,1,0")).unwrap(), p("0,1,2"));
        assert_eq!(apply_t(2, &p("0,1,0")).unwrap(), p("0,-1,0"));
        assert_eq!(apply_t(0, &p("0,1")).unwrap(), p("0,1"));
        assert!(apply_t(-1, &p("0,1")).is_err());
    }

    #[test]
    fn preimage_examples() {
        let set = preimage(&p("0,1"));
        assert_eq!(set.ray, PreimageRay { s: p("0,-1"), g_min: 0 });
        assert_eq!(set.sporadic, vec![SporadicPreimage { g: 0, s: p("0,1") }]);

        let set = preimage(&p("0,-1"));
        assert_eq!(set.ray, PreimageRay { s: p("0,1"), g_min: 1 });
        assert!(set.sporadic.is_empty());

        let set = preimage(&p("0"));
        assert_eq!(set.ray, PreimageRay { s: p("0"), g_min: 0 });
        assert!(set.sporadic.is_empty());
    }

    #[test]
    fn preimage_stats_examples() {
        let c = preimage_stats(&p("0,1"), 1).unwrap();
        assert_eq!((c.up, c.down, c.flat), (1, 0, 0));
        let c = preimage_stats(&p("0,1"), 0).unwrap();
        assert_eq!((c.up, c.down, c.flat), (0, 1, 0));
        assert!(preimage_stats(&p("0,1"), 2).is_err());
        assert!(preimage_stats(&p("0,1"), -1).is_err());
    }

    #[test]
    fn s_k_is_negation() {
        for x in enumerate_paths(6, true).unwrap() {
            let k = x.stats().global_min();
            assert_eq!(s_r(&x, k).unwrap(), x.negate());
            let c = preimage_stats(&x, k).unwrap();
            let st = x.stats();
            assert_eq!((c.up, c.down, c.flat), (st.down, st.up, st.flat));
        }
    }

    #[test]
    fn tropical_examples() {
        let x = p("0,1,2,1,2,3,2");
        // M of T~_0 x is identically 0
        let t0 = tilde_t(0, &x).unwrap();
        assert!(t0.stats().forward_max.iter().all(|&m| m == 0));
        for g in 0..4 {
            let tg = tilde_t(g, &x).unwrap();
            assert_eq!(tilde_t(g, &tg).unwrap(), tg);
            assert_eq!(tropical_compose_check(&x, g, 3 - g).unwrap().violations(), 0);
        }
    }
}
