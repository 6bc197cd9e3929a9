use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::numeric::{Mode, Prob, Rat};
use crate::path::{collect_paths, Path};

/// Probability table over the paths of one horizon.
///
/// Paths absent from the table have probability zero; this is how flat
/// paths are handled when they were never enumerated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistTable {
    horizon: usize,
    mode: Mode,
    entries: BTreeMap<Path, Prob>,
}

/// Outcome of comparing two tables entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableDiff {
    pub max_abs_diff: f64,
    /// Sum of both sides' error bounds at the worst entry; 0 when both are exact.
    pub tolerance: f64,
    /// The exact discrepancy, when both tables are exact.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_rat")]
    pub exact_diff: Option<Rat>,
    /// First path, in enumeration order, where the tables disagree.
    pub witness: Option<Path>,
    pub entries: usize,
}

fn ser_opt_rat<S: serde::Serializer>(r: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => crate::numeric::serialize_rat(r, s),
        None => s.serialize_none(),
    }
}

impl TableDiff {
    pub fn agrees(&self) -> bool {
        self.witness.is_none()
    }
}

impl DistTable {
    pub fn new(horizon: usize, mode: Mode) -> DistTable {
        DistTable { horizon, mode, entries: BTreeMap::new() }
    }

    /// Evaluates `prob` on every path of the horizon in parallel.
    pub fn build<F>(horizon: usize, allow_flat: bool, mode: Mode, prob: F) -> Result<DistTable>
    where
        F: Fn(&Path) -> Result<Prob> + Sync,
    {
        let paths = collect_paths(horizon, allow_flat)?;
        let values: Vec<Prob> = paths.par_iter().map(&prob).collect::<Result<_>>()?;
        let mut table = DistTable::new(horizon, mode);
        for (path, p) in paths.into_iter().zip(values) {
            table.insert(path, p)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, path: Path, p: Prob) -> Result<()> {
        if p.mode() != self.mode {
            return Err(crate::error::LabError::MixedModes);
        }
        debug_assert_eq!(path.horizon(), self.horizon);
        self.entries.insert(path, p);
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, path: &Path) -> Prob {
        self.entries.get(path).cloned().unwrap_or_else(|| Prob::zero(self.mode))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &Prob)> {
        self.entries.iter()
    }

    pub fn total_mass(&self) -> Prob {
        let mut acc = Prob::zero(self.mode);
        for p in self.entries.values() {
            acc = acc.try_add(p).expect("a table holds a single mode");
        }
        acc
    }

    /// Float view of an exact table (zero error bounds).
    pub fn to_approx(&self) -> DistTable {
        DistTable {
            horizon: self.horizon,
            mode: Mode::Approx,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v.to_approx())).collect(),
        }
    }

    /// Entrywise comparison over the union of keys. Exact tables must match
    /// literally; otherwise entries may differ by at most their combined
    /// error bounds plus a few ulps.
    pub fn compare(&self, other: &DistTable) -> TableDiff {
        let both_exact = self.mode == Mode::Exact && other.mode == Mode::Exact;
        let mut keys: Vec<&Path> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.sort();
        keys.dedup();

        let mut out = TableDiff {
            max_abs_diff: 0.0,
            tolerance: 0.0,
            exact_diff: both_exact.then(Rat::zero),
            witness: None,
            entries: keys.len(),
        };
        for path in keys {
            let (a, b) = (self.get(path), other.get(path));
            let (bad, diff, tol) = if both_exact {
                let d = (a.exact().unwrap() - b.exact().unwrap()).abs();
                let bad = !d.is_zero();
                let df = crate::numeric::to_f64(&d);
                if out.exact_diff.as_ref().is_some_and(|cur| d > *cur) {
                    out.exact_diff = Some(d);
                }
                (bad, df, 0.0)
            } else {
                let d = (a.value() - b.value()).abs();
                let tol = a.err() + b.err() + 4.0 * f64::EPSILON * a.value().max(b.value());
                (d > tol, d, tol)
            };
            if diff > out.max_abs_diff {
                out.max_abs_diff = diff;
                out.tolerance = tol;
            }
            if bad && out.witness.is_none() {
                out.witness = Some(path.clone());
            }
        }
        out
    }
}
