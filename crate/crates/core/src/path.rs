//! Lattice paths `x_0 = 0, x_1, ..., x_t` with steps in {-1, 0, +1}, their
//! running statistics, and exhaustive enumeration.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{LabError, Result};

/// Horizon above which enumeration is refused unless `PITMAN_LAB_CAP` says otherwise.
pub const DEFAULT_HORIZON_CAP: usize = 14;

/// Current horizon cap: `PITMAN_LAB_CAP` if set and valid, else the default.
pub fn horizon_cap() -> usize {
    std::env::var("PITMAN_LAB_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_HORIZON_CAP)
}

pub fn path_count(t: usize, allow_flat: bool) -> u128 {
    let base: u128 = if allow_flat { 3 } else { 2 };
    base.saturating_pow(t as u32)
}

pub(crate) fn check_horizon(t: usize, allow_flat: bool) -> Result<()> {
    let cap = horizon_cap();
    if t > cap {
        return Err(LabError::HorizonCap { t, cap, count: path_count(t, allow_flat) });
    }
    Ok(())
}

/// A path stored by its increments; values are rebuilt on demand.
///
/// The derived ordering is lexicographic in increments with -1 < 0 < +1,
/// which is also the enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path {
    steps: Vec<i8>,
}

impl Path {
    pub fn from_steps(steps: Vec<i8>) -> Result<Path> {
        if let Some(bad) = steps.iter().find(|s| !(-1..=1).contains(*s)) {
            return Err(LabError::invalid(format!("step {bad} not in {{-1, 0, 1}}")));
        }
        Ok(Path { steps })
    }

    pub fn from_values(values: &[i64]) -> Result<Path> {
        match values.first() {
            None => return Err(LabError::invalid("a path needs at least x_0")),
            Some(&x0) if x0 != 0 => {
                return Err(LabError::invalid(format!("a path starts at 0, got {x0}")))
            }
            _ => {}
        }
        let steps = values
            .windows(2)
            .map(|w| match w[1] - w[0] {
                d @ -1..=1 => Ok(d as i8),
                d => Err(LabError::invalid(format!("increment {d} not in {{-1, 0, 1}}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Path { steps })
    }

    /// The single path of horizon 0.
    pub fn origin() -> Path {
        Path::default()
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    pub fn values(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut x = 0i64;
        out.push(x);
        for &s in &self.steps {
            x += s as i64;
            out.push(x);
        }
        out
    }

    pub fn end(&self) -> i64 {
        self.steps.iter().map(|&s| s as i64).sum()
    }

    pub fn negate(&self) -> Path {
        Path { steps: self.steps.iter().map(|s| -s).collect() }
    }

    pub fn has_flat(&self) -> bool {
        self.steps.contains(&0)
    }

    /// Prefix of the first `len` steps.
    pub fn truncate(&self, len: usize) -> Path {
        Path { steps: self.steps[..len.min(self.steps.len())].to_vec() }
    }

    pub fn stats(&self) -> PathStats {
        PathStats::of(self)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals = self.values();
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Path> {
        let values = s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<i64>()
                    .map_err(|_| LabError::Parse(format!("bad path value {v:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::from_values(&values)
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Running statistics of a path, all computed in one forward and one
/// backward pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathStats {
    /// `K_j = min_{j <= i <= t} x_i`
    pub backward_min: Vec<i64>,
    /// `M_j = max_{0 <= i <= j} x_i`
    pub forward_max: Vec<i64>,
    pub up: usize,
    pub down: usize,
    pub flat: usize,
}

impl PathStats {
    fn of(path: &Path) -> PathStats {
        let values = path.values();
        let mut forward_max = Vec::with_capacity(values.len());
        let mut m = i64::MIN;
        for &x in &values {
            m = m.max(x);
            forward_max.push(m);
        }
        let mut backward_min = vec![0; values.len()];
        let mut k = i64::MAX;
        for (j, &x) in values.iter().enumerate().rev() {
            k = k.min(x);
            backward_min[j] = k;
        }
        let (mut up, mut down, mut flat) = (0, 0, 0);
        for &s in path.steps() {
            match s {
                1 => up += 1,
                -1 => down += 1,
                _ => flat += 1,
            }
        }
        PathStats { backward_min, forward_max, up, down, flat }
    }

    /// `K_0`, the global minimum.
    pub fn global_min(&self) -> i64 {
        self.backward_min[0]
    }

    /// `M_t`, the global maximum.
    pub fn global_max(&self) -> i64 {
        *self.forward_max.last().expect("paths have at least one value")
    }
}

/// Deterministic odometer over all paths of a horizon.
#[derive(Debug, Clone)]
pub struct PathIter {
    current: Option<Vec<i8>>,
    allow_flat: bool,
}

impl Iterator for PathIter {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        let cur = self.current.as_mut()?;
        let out = Path { steps: cur.clone() };
        // rightmost increment turns fastest
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            match cur[i] {
                -1 if self.allow_flat => cur[i] = 0,
                -1 | 0 => cur[i] = 1,
                _ => {
                    cur[i] = -1;
                    continue;
                }
            }
            break;
        }
        Some(out)
    }
}

/// Enumerates `C[0,t]` (with flat steps) or its flat-free part, each path
/// exactly once, in lexicographic increment order.
pub fn enumerate_paths(t: usize, allow_flat: bool) -> Result<impl Iterator<Item = Path>> {
    check_horizon(t, allow_flat)?;
    Ok(enumerate_unchecked(t, allow_flat))
}

pub(crate) fn enumerate_unchecked(t: usize, allow_flat: bool) -> PathIter {
    PathIter { current: Some(vec![-1; t]), allow_flat }
}

/// All paths of horizon `t` as a vector, ready for parallel iteration.
pub fn collect_paths(t: usize, allow_flat: bool) -> Result<Vec<Path>> {
    Ok(enumerate_paths(t, allow_flat)?.collect())
}
