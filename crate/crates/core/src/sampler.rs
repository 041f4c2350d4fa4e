//! Sequential prediction-rule simulation of Gibbs partitions and their
//! continuations, plus the Monte Carlo oracles built on top.
//!
//! Reproducibility contract: every replicate `i` draws from its own RNG
//! stream, a ChaCha12 generator seeded with `stream_seed(seed, i)` (a
//! splitmix64 hash of the user seed and the replicate index). Results are
//! therefore bit-exact for fixed `(seed, reps)` and invariant to how
//! replicates are partitioned across threads; Bernoulli tallies accumulate
//! in integers, so merged estimates do not even depend on summation order.
//!
//! Predictive probabilities are computed in double precision from the
//! models' log-weight fast path (weight ratios are well-conditioned); a
//! config flag forces full-precision weights for pathological regimes.
//! Per-state ratios are cached along the trajectory, behaving exactly as if
//! absent (same values, deterministic) and safe under concurrent reads.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::models::{GibbsModel, ModelKind, PartitionState};
use crate::posterior::ContinuationOutcome;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by √reps.
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
}

/// Execution knobs for the Monte Carlo drivers.
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    /// Worker threads replicates are partitioned across. The merged
    /// estimate is invariant to this value.
    pub threads: usize,
    /// Compute predictive ratios from full-precision weights instead of the
    /// `f64` log-weight fast path.
    pub force_full_precision: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            threads: 1,
            force_full_precision: false,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream-derivation rule: replicate `i` of a run seeded with `seed` uses a
/// ChaCha12 generator seeded with this value.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

const CACHE_SHARDS: usize = 128;

/// Shared, read-mostly cache of `ln V_{n,k}` along simulated trajectories,
/// sharded to keep worker threads off each other's locks.
struct Predictor<'m> {
    model: &'m GibbsModel,
    shards: Vec<RwLock<HashMap<u64, f64>>>,
    force_full: bool,
}

impl<'m> Predictor<'m> {
    fn new(model: &'m GibbsModel, force_full: bool) -> Self {
        Predictor {
            model,
            shards: (0..CACHE_SHARDS).map(|_| RwLock::new(HashMap::new())).collect(),
            force_full,
        }
    }

    fn ln_weight(&self, n: u32, k: u32) -> Result<f64> {
        let key = ((n as u64) << 32) | k as u64;
        let shard = &self.shards[(key as usize).wrapping_mul(0x9E3779B9) % CACHE_SHARDS];
        if let Some(&v) = shard.read().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = if self.force_full {
            self.model.weight(n, k)?.ln().to_f64()
        } else {
            self.model.log_weight_f64(n, k)?
        };
        shard.write().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    /// Probability that the next observation opens a new block.
    fn p_new(&self, n: u32, k: u32) -> Result<f64> {
        match self.model.kind() {
            ModelKind::PoissonDirichlet { theta } => {
                Ok((theta + k as f64 * self.model.alpha()) / (theta + n as f64))
            }
            ModelKind::NormalizedGG { .. } => {
                let num = self.ln_weight(n + 1, k + 1)?;
                let den = self.ln_weight(n, k)?;
                Ok((num - den).exp())
            }
        }
    }
}

/// One prediction-rule step: extends `sizes` in place and returns whether a
/// new block was opened. `u` spends a single uniform draw; the join branch
/// picks a block with probability proportional to `n_j − α` exactly.
fn advance(
    predictor: &Predictor<'_>,
    alpha: f64,
    sizes: &mut Vec<u32>,
    n: u32,
    u: f64,
) -> Result<bool> {
    let k = sizes.len() as u32;
    let p_new = predictor.p_new(n, k)?;
    if u < p_new {
        sizes.push(1);
        return Ok(true);
    }
    let t = (u - p_new) / (1.0 - p_new);
    let mut target = t * (n as f64 - k as f64 * alpha);
    let mut chosen = sizes.len() - 1;
    for (j, &nj) in sizes.iter().enumerate() {
        let w = nj as f64 - alpha;
        if target < w {
            chosen = j;
            break;
        }
        target -= w;
    }
    sizes[chosen] += 1;
    Ok(false)
}

/// Sample a partition of `[n]` from the model's EPPF by the sequential
/// prediction rule; block sizes are in order of appearance.
pub fn sample_partition(model: &GibbsModel, n: u32, seed: u64) -> Result<PartitionState> {
    if n < 1 {
        return Err(Error::Domain("sample_partition requires n ≥ 1".into()));
    }
    let predictor = Predictor::new(model, false);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_partition_with(&predictor, model.alpha(), n, &mut rng)
}

fn sample_partition_with(
    predictor: &Predictor<'_>,
    alpha: f64,
    n: u32,
    rng: &mut ChaCha12Rng,
) -> Result<PartitionState> {
    let mut sizes = vec![1u32];
    for step in 1..n {
        let u: f64 = rng.gen();
        advance(predictor, alpha, &mut sizes, step, u)?;
    }
    PartitionState::new(sizes)
}

/// Continue the prediction rule `m` steps from `state`; the outcome records
/// the new blocks (in order of appearance) and their sizes.
pub fn sample_continuation(
    model: &GibbsModel,
    state: &PartitionState,
    m: u32,
    seed: u64,
) -> Result<ContinuationOutcome> {
    let predictor = Predictor::new(model, false);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_continuation_with(&predictor, model.alpha(), state, m, &mut rng)
}

fn sample_continuation_with(
    predictor: &Predictor<'_>,
    alpha: f64,
    state: &PartitionState,
    m: u32,
    rng: &mut ChaCha12Rng,
) -> Result<ContinuationOutcome> {
    let k0 = state.k() as usize;
    let mut sizes = state.sizes().to_vec();
    let n0 = state.n();
    for step in 0..m {
        let u: f64 = rng.gen();
        advance(predictor, alpha, &mut sizes, n0 + step, u)?;
    }
    if sizes.len() > k0 {
        ContinuationOutcome::new(sizes[k0..].to_vec())
    } else {
        Ok(ContinuationOutcome::empty())
    }
}

fn run_replicates<T, F>(reps: u64, threads: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let threads = threads.max(1);
    if threads == 1 {
        return (0..reps).map(&job).collect();
    }
    let chunk = reps.div_ceil(threads as u64);
    let mut out: Vec<Result<Vec<T>>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads as u64 {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(reps);
            let job = &job;
            handles.push(scope.spawn(move || (lo..hi).map(job).collect::<Result<Vec<T>>>()));
        }
        for h in handles {
            out.push(h.join().expect("replicate worker panicked"));
        }
    });
    let mut merged = Vec::with_capacity(reps as usize);
    for part in out {
        merged.extend(part?);
    }
    Ok(merged)
}

/// Monte Carlo estimate of the discovery probability: from `state`,
/// simulate `m` further draws, then count whether draw `n+m+1` opens a new
/// species. Unbiased; the estimate is the Bernoulli frequency.
pub fn mc_discovery(
    model: &GibbsModel,
    state: &PartitionState,
    m: u32,
    reps: u64,
    seed: u64,
    config: &SamplerConfig,
) -> Result<McEstimate> {
    if reps < 1 {
        return Err(Error::Domain("mc_discovery requires reps ≥ 1".into()));
    }
    let predictor = Predictor::new(model, config.force_full_precision);
    let alpha = model.alpha();
    let hits = run_replicates(reps, config.threads, |rep| {
        let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(seed, rep));
        let mut sizes = state.sizes().to_vec();
        let n0 = state.n();
        for step in 0..m {
            let u: f64 = rng.gen();
            advance(&predictor, alpha, &mut sizes, n0 + step, u)?;
        }
        let p_new = predictor.p_new(n0 + m, sizes.len() as u32)?;
        let u: f64 = rng.gen();
        Ok(u < p_new)
    })?;
    let count: u64 = hits.iter().filter(|&&h| h).count() as u64;
    let mean = count as f64 / reps as f64;
    let std_error = if reps > 1 {
        (mean * (1.0 - mean) / (reps as f64 - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    Ok(McEstimate {
        mean,
        std_error,
        reps,
        seed,
    })
}

/// Draws of the normalized block count.
///
/// Unconditional form (`from = None`): `reps` independent samples of
/// `K_n/n^α` under the model. Conditional form (`from = Some(state)`):
/// samples of `K_m/m^α` for the number of NEW blocks in an `m = n`-step
/// continuation of `state` — the conditional-diversity check.
pub fn mc_alpha_diversity(
    model: &GibbsModel,
    n: u32,
    reps: u64,
    seed: u64,
    from: Option<&PartitionState>,
    config: &SamplerConfig,
) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::Domain("mc_alpha_diversity requires n ≥ 1".into()));
    }
    let predictor = Predictor::new(model, config.force_full_precision);
    let alpha = model.alpha();
    let scale = (n as f64).powf(alpha);
    run_replicates(reps, config.threads, |rep| {
        let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(seed, rep));
        let k = match from {
            None => sample_partition_with(&predictor, alpha, n, &mut rng)?.k(),
            Some(state) => {
                sample_continuation_with(&predictor, alpha, state, n, &mut rng)?.k_star()
            }
        };
        Ok(k as f64 / scale)
    })
}
