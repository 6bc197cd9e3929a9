//! Seeded samplers and the goodness-of-fit statistics used by every
//! Monte Carlo check.
//!
//! All randomness flows from an [`RngStream`]: ChaCha8 keyed by a 64-bit
//! seed, with the stream index selecting an independent keystream. Work
//! split over streams is collected in stream order, so results do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{LabError, Result};
use crate::numeric::TRUNCATION_EPS;
use crate::path::Path;
use crate::processes::{DistTable, FloatKernel, InitialLaw, Params};
use crate::representation::LevelLaw;

pub const MIN_KS_SAMPLES: usize = 100;

/// Sample size and stream layout of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub streams: usize,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64, streams: usize) -> McOptions {
        McOptions { samples, seed, streams }
    }

    /// Same layout on an independent seed, for the second sample of a comparison.
    pub fn partner(&self) -> McOptions {
        McOptions { seed: self.seed ^ 0x9e37_79b9_7f4a_7c15, ..*self }
    }

    pub fn run<T, F>(&self, work: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
    {
        parallel_streams(self.seed, self.streams, self.samples, work)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> RngStream {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Runs `work(rng, count)` on `streams` independent streams, splitting
/// `total` as evenly as possible, and concatenates in stream order.
pub fn parallel_streams<T, F>(seed: u64, streams: usize, total: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let streams = streams.max(1);
    let chunks: Vec<Vec<T>> = (0..streams)
        .into_par_iter()
        .map(|i| {
            let count = total / streams + usize::from(i < total % streams);
            work(&mut RngStream::new(seed, i as u64).rng(), count)
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Inverse-cdf sampler on `0..len` from a cumulative table. Draws beyond
/// the last entry (probability at most the neglected tail) return `len`.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cdf: Vec<f64>,
}

impl DiscreteSampler {
    pub fn from_cdf(cdf: Vec<f64>) -> DiscreteSampler {
        DiscreteSampler { cdf }
    }

    pub fn from_pmf(pmf: &[f64]) -> DiscreteSampler {
        let mut acc = 0.0;
        DiscreteSampler::from_cdf(
            pmf.iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect(),
        )
    }

    pub fn from_initial(law: &InitialLaw) -> Result<DiscreteSampler> {
        let cut = law.truncation_point(TRUNCATION_EPS)?;
        let pmf: Vec<f64> = (0..=cut).map(|n| law.pmf_f64(n)).collect();
        Ok(DiscreteSampler::from_pmf(&pmf))
    }

    pub fn from_level(law: &LevelLaw) -> DiscreteSampler {
        DiscreteSampler::from_cdf(law.cdf_table(TRUNCATION_EPS))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) as u64
    }
}

fn step_from_u(cdf: &[f64; 2], u: f64) -> i8 {
    if u < cdf[0] {
        -1
    } else if u < cdf[1] {
        0
    } else {
        1
    }
}

pub fn sample_walk<R: Rng + ?Sized>(t: usize, params: &Params, rng: &mut R) -> Path {
    let [down, flat, _] = params.step_pmf().as_f64();
    let cdf = [down, down + flat];
    let steps = (0..t).map(|_| step_from_u(&cdf, rng.random())).collect();
    Path::from_steps(steps).expect("steps are in {-1, 0, 1}")
}

/// Draws the chain step by step in floating point.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    kernel: FloatKernel,
}

impl ChainSampler {
    pub fn new(params: &Params) -> ChainSampler {
        ChainSampler { kernel: FloatKernel::new(params) }
    }

    fn step<R: Rng + ?Sized>(&self, state: u64, rng: &mut R) -> i8 {
        let [down, flat, _] = self.kernel.row(state);
        step_from_u(&[down, down + flat], rng.random())
    }

    /// Increments of `t` steps started at `k`.
    pub fn path<R: Rng + ?Sized>(&self, k: u64, t: usize, rng: &mut R) -> Path {
        let mut state = k;
        let mut steps = Vec::with_capacity(t);
        for _ in 0..t {
            let d = self.step(state, rng);
            state = state.checked_add_signed(d as i64).expect("down step out of state 0 has probability 0");
            steps.push(d);
        }
        Path::from_steps(steps).expect("steps are in {-1, 0, 1}")
    }

    /// Final state after `t` steps started at `k`.
    pub fn run<R: Rng + ?Sized>(&self, k: u64, t: usize, rng: &mut R) -> u64 {
        (0..t).fold(k, |state, _| {
            state.checked_add_signed(self.step(state, rng) as i64).expect("down step out of state 0 has probability 0")
        })
    }
}

/// Increment path `X_u - X_0`, `u <= t`, with `X_0` drawn from `law`.
pub fn sample_chain<R: Rng + ?Sized>(t: usize, law: &InitialLaw, params: &Params, rng: &mut R) -> Result<Path> {
    let start = DiscreteSampler::from_initial(law)?.sample(rng);
    Ok(ChainSampler::new(params).path(start, t, rng))
}

pub fn sample_level<R: Rng + ?Sized>(law: &LevelLaw, rng: &mut R) -> u64 {
    DiscreteSampler::from_level(law).sample(rng)
}

fn need(got: usize) -> Result<()> {
    if got < MIN_KS_SAMPLES {
        return Err(LabError::InsufficientSamples { need: MIN_KS_SAMPLES, got });
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    need(samples.len())?;
    let xs = sorted(samples);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// `sup_x |F_n(x) - G_m(x)|`, ties handled by stepping past equal values.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    need(a.len())?;
    need(b.len())?;
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic critical value `sqrt(-ln(alpha/2)/2) sqrt((n+m)/(nm))`;
/// pass `m = None` for the one-sample test.
pub fn ks_critical(alpha: f64, n: usize, m: Option<usize>) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let n = n as f64;
    match m {
        None => c / n.sqrt(),
        Some(m) => {
            let m = m as f64;
            c * ((n + m) / (n * m)).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit. Cells with expected count below 5 are pooled
/// into one; the pooled cell is dropped when it is still below 5.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() {
        return Err(LabError::invalid("observed and expected cells differ in number"));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * nf;
        if e < 5.0 {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_e >= 5.0 {
        stat += (pooled_o - pooled_e).powi(2) / pooled_e;
        cells += 1;
    }
    if cells < 2 {
        return Err(LabError::InsufficientSamples { need: 10, got: n as usize });
    }
    let df = cells - 1;
    let p_value = 1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat);
    Ok(ChiSquare { statistic: stat, df, p_value })
}

/// Chi-square of sampled paths against an exact or approximate table.
pub fn table_gof(samples: &[Path], table: &DistTable) -> Result<ChiSquare> {
    let index: std::collections::BTreeMap<&Path, usize> = table.iter().enumerate().map(|(i, (p, _))| (p, i)).collect();
    let mut counts = vec![0u64; index.len()];
    for s in samples {
        match index.get(s) {
            Some(&i) => counts[i] += 1,
            None => return Err(LabError::invalid(format!("sampled path {s} is not in the table"))),
        }
    }
    let probs: Vec<f64> = table.iter().map(|(_, p)| p.value()).collect();
    chi_square_gof(&counts, &probs)
}

/// Sample correlation of the first `draws` uniforms of two streams.
pub fn stream_correlation(seed: u64, a: u64, b: u64, draws: usize) -> f64 {
    let (mut ra, mut rb) = (RngStream::new(seed, a).rng(), RngStream::new(seed, b).rng());
    let xs: Vec<(f64, f64)> = (0..draws).map(|_| (ra.random::<f64>(), rb.random::<f64>())).collect();
    let n = draws as f64;
    let (mx, my) = xs.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / n, y + p.1 / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &xs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};
    use crate::processes::{chain_increment_law, Route};
    use crate::representation::walk_law;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = RngStream::new(7, 3).rng().random_iter().take(5).collect();
        let b: Vec<u64> = RngStream::new(7, 3).rng().random_iter().take(5).collect();
        let c: Vec<u64> = RngStream::new(7, 4).rng().random_iter().take(5).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_does_not_depend_on_threads() {
        let f = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| rng.random::<u32>()).collect::<Vec<_>>();
        let a = parallel_streams(1, 4, 103, f);
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| parallel_streams(1, 4, 103, f));
        assert_eq!(a.len(), 103);
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_walk_is_centred() {
        let p = Params::new(int(1), int(0)).unwrap();
        let mut rng = RngStream::new(11, 0).rng();
        let ends: Vec<f64> = (0..20_000).map(|_| sample_walk(9, &p, &mut rng).end() as f64).collect();
        let (m, se) = mean_se(&ends);
        assert!(m.abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn chain_from_zero_stays_nonnegative() {
        let p = Params::new(rat(3, 2), int(1)).unwrap();
        let s = ChainSampler::new(&p);
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..2000 {
            assert!(s.path(0, 30, &mut rng).stats().global_min() >= 0);
        }
    }

    #[test]
    fn chain_matches_exact_table() {
        let p = Params::new(rat(2, 3), int(1)).unwrap();
        let law = InitialLaw::finite(vec![(0, rat(1, 2)), (2, rat(1, 2))]).unwrap();
        let exact = chain_increment_law(3, &law, &p, Route::Formula).unwrap();
        let samples = parallel_streams(2, 4, 100_000, |rng, n| {
            (0..n).map(|_| sample_chain(3, &law, &p, rng).unwrap()).collect()
        });
        let chi = table_gof(&samples, &exact).unwrap();
        assert!(chi.p_value > 0.01, "{chi:?}");
    }

    #[test]
    fn walk_matches_exact_table() {
        let p = Params::new(rat(1, 2), rat(1, 2)).unwrap();
        let exact = walk_law(4, &p).unwrap();
        let mut rng = RngStream::new(9, 0).rng();
        let samples: Vec<Path> = (0..100_000).map(|_| sample_walk(4, &p, &mut rng)).collect();
        assert!(table_gof(&samples, &exact).unwrap().p_value > 0.01);
    }

    #[test]
    fn level_sampler_geometric() {
        let g = LevelLaw::geometric(rat(1, 3)).unwrap();
        let sampler = DiscreteSampler::from_level(&g);
        let mut rng = RngStream::new(3, 0).rng();
        let mut counts = vec![0u64; 12];
        for _ in 0..100_000 {
            counts[(sampler.sample(&mut rng) as usize).min(11)] += 1;
        }
        let mut probs: Vec<f64> = (0..11).map(|n| g.pmf_f64(n)).collect();
        probs.push(g.tail(11).value());
        assert!(chi_square_gof(&counts, &probs).unwrap().p_value > 0.01);
    }

    #[test]
    fn ks_basics() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
        assert!(matches!(ks_two_sample(&a[..50], &b), Err(LabError::InsufficientSamples { .. })));
        let mut rng = RngStream::new(1, 0).rng();
        let u: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).unwrap() < 0.01);
        assert!((ks_critical(0.01, 100_000, None) - 1.6276 / 100_000f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn streams_uncorrelated() {
        let r = stream_correlation(42, 0, 1, 100_000);
        assert!(r.abs() < 3.0 / 100_000f64.sqrt(), "{r}");
    }
}
