//! Reproducible parallel ensembles of walks and independent pairs.
//!
//! Replica `r` of a walk ensemble owns stream `r` of the master seed; replica
//! `r` of a pair ensemble owns streams `(2r, 2r+1)`. Replicas are pure
//! functions of `(params, config, replica index)`, so results are identical
//! for any worker count, and per-replica outputs are reduced afterwards in a
//! fixed pairwise tree over replica order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regime::{diff_normalizer_min_n, walk_normalizer, Regime, RegimeError};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::stats::StreamingMoments;
use crate::walk::{
    simulate_pair, simulate_pair_endpoints, simulate_path, PairRecord, WalkError, WalkParams,
};

/// Default cap on `horizon * replicas`; keeps default runs in minutes.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000_000;

/// Default first step for LIL sup-statistics. The normalizers are positive
/// well before this, but tiny denominators near the domain edge drown the
/// statistic in noise.
pub const DEFAULT_N_MIN_LIL: u64 = 100;

/// Replicas accumulated per block before the blocks enter the merge tree.
const MERGE_BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error("replicas must be >= 1")]
    NoReplicas,
    #[error("n_min_lil must be >= 16, got {0}")]
    LilStartTooSmall(u64),
    #[error(
        "step budget exceeded: horizon {horizon} x replicas {replicas} > {budget} \
         (raise the budget to run this)"
    )]
    BudgetExceeded {
        horizon: u64,
        replicas: u64,
        budget: u64,
    },
    #[error("limit samples need the superdiffusive regime (p > 3/4); p = {p} is {regime}")]
    WrongRegime { p: f64, regime: &'static str },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Ensemble shape: replica count, horizon, checkpoints and seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicas: u64,
    pub horizon: u64,
    /// Strictly increasing, within `1..=horizon`.
    pub checkpoints: Vec<u64>,
    pub master_seed: u64,
    /// Worker threads; `0` uses all available cores. Results do not depend
    /// on this value.
    pub workers: usize,
    /// First step tracked by the LIL sup-statistics.
    pub n_min_lil: u64,
    /// Cap on `horizon * replicas`.
    pub budget: u64,
}

impl EnsembleConfig {
    /// Config with a single checkpoint at the horizon and default workers,
    /// LIL start and budget.
    pub fn new(replicas: u64, horizon: u64, master_seed: u64) -> Self {
        Self {
            replicas,
            horizon,
            checkpoints: vec![horizon],
            master_seed,
            workers: 0,
            n_min_lil: DEFAULT_N_MIN_LIL,
            budget: DEFAULT_STEP_BUDGET,
        }
    }

    fn validate_common(&self) -> Result<(), EnsembleError> {
        if self.replicas < 1 {
            return Err(EnsembleError::NoReplicas);
        }
        if self.n_min_lil < 16 {
            return Err(EnsembleError::LilStartTooSmall(self.n_min_lil));
        }
        let sorted = self.checkpoints.windows(2).all(|w| w[0] < w[1]);
        let in_range = self
            .checkpoints
            .iter()
            .all(|&c| (1..=self.horizon).contains(&c));
        if !(sorted && in_range) {
            return Err(WalkError::InvalidCheckpoints {
                horizon: self.horizon,
            }
            .into());
        }
        match self.horizon.checked_mul(self.replicas) {
            Some(steps) if steps <= self.budget => Ok(()),
            _ => Err(EnsembleError::BudgetExceeded {
                horizon: self.horizon,
                replicas: self.replicas,
                budget: self.budget,
            }),
        }
    }
}

fn run_replicas<T: Send, E: Send>(
    workers: usize,
    replicas: u64,
    body: impl Fn(u64) -> Result<T, E> + Sync + Send,
) -> Result<Result<Vec<T>, E>, EnsembleError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EnsembleError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..replicas).into_par_iter().map(body).collect()))
}

/// Pairwise reduction in fixed order; completion order of the inputs cannot
/// influence the result.
pub fn tree_merge<T: Clone>(mut items: Vec<T>, merge: impl Fn(&T, &T) -> T) -> Option<T> {
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        items = items
            .chunks(2)
            .map(|pair| {
                if pair.len() == 2 {
                    merge(&pair[0], &pair[1])
                } else {
                    pair[0].clone()
                }
            })
            .collect();
    }
    items.pop()
}

/// Moments of replica-ordered values via blockwise accumulation and a fixed
/// merge tree.
pub fn blocked_moments<F: Scalar>(values: &[F]) -> StreamingMoments<F> {
    let blocks: Vec<StreamingMoments<F>> = values
        .chunks(MERGE_BLOCK)
        .map(StreamingMoments::from_slice)
        .collect();
    tree_merge(blocks, StreamingMoments::merge).unwrap_or_default()
}

/// Raw and normalized position moments at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointMoments<F: Scalar = f64> {
    pub n: u64,
    /// Regime normalizer value at this checkpoint.
    pub normalizer: F,
    pub raw: StreamingMoments<F>,
    pub normalized: StreamingMoments<F>,
}

/// Output of a walk ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkEnsembleOutput<F: Scalar = f64> {
    pub regime: Regime,
    pub per_checkpoint: Vec<CheckpointMoments<F>>,
    /// Replica-ordered positions at the last checkpoint.
    pub final_positions: Vec<i64>,
    /// Replica-ordered normalized positions at the last checkpoint.
    pub final_normalized: Vec<F>,
}

/// Run `replicas` independent walks; replica `r` uses stream `r`.
pub fn run_walk_ensemble<F: Scalar>(
    params: &WalkParams<F>,
    cfg: &EnsembleConfig,
) -> Result<WalkEnsembleOutput<F>, EnsembleError> {
    cfg.validate_common()?;
    let regime = params.regime();
    // Probing every checkpoint up front turns a mid-run domain error
    // (marginal normalizer at n = 1) into a config error.
    let normalizers: Vec<F> = cfg
        .checkpoints
        .iter()
        .map(|&n| walk_normalizer(regime, params.p(), n))
        .collect::<Result<_, _>>()?;

    let paths = run_replicas(cfg.workers, cfg.replicas, |replica| {
        let mut rng = RngStream::new(cfg.master_seed, replica);
        simulate_path(params, cfg.horizon, &cfg.checkpoints, &mut rng)
    })??;

    let per_checkpoint = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| {
            let raw_values: Vec<F> = paths
                .iter()
                .map(|path| F::from_signed(path[ci].1))
                .collect();
            let normalized_values: Vec<F> =
                raw_values.iter().map(|&x| x / normalizers[ci]).collect();
            CheckpointMoments {
                n,
                normalizer: normalizers[ci],
                raw: blocked_moments(&raw_values),
                normalized: blocked_moments(&normalized_values),
            }
        })
        .collect::<Vec<_>>();

    let (final_positions, final_normalized) = match cfg.checkpoints.len() {
        0 => (Vec::new(), Vec::new()),
        c => {
            let norm = normalizers[c - 1];
            let positions: Vec<i64> = paths.iter().map(|path| path[c - 1].1).collect();
            let normalized = positions
                .iter()
                .map(|&x| F::from_signed(x) / norm)
                .collect();
            (positions, normalized)
        }
    };

    Ok(WalkEnsembleOutput {
        regime,
        per_checkpoint,
        final_positions,
        final_normalized,
    })
}

/// Output of a pair ensemble run: the replica-ordered records plus
/// aggregation helpers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEnsembleOutput<F: Scalar = f64> {
    pub regime: Regime,
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    pub records: Vec<PairRecord<F>>,
}

impl<F: Scalar> PairEnsembleOutput<F> {
    /// `(meeting_count, pairs)` rows in increasing count order.
    pub fn meeting_count_histogram(&self) -> Vec<(u64, u64)> {
        histogram(self.records.iter().map(|r| r.meeting_count))
    }

    /// `(last_meeting, pairs)` rows in increasing time order; time `0` means
    /// the pair never met.
    pub fn last_meeting_histogram(&self) -> Vec<(u64, u64)> {
        histogram(self.records.iter().map(|r| r.last_meeting))
    }

    /// Moments of the per-pair meeting counts.
    pub fn meeting_count_moments(&self) -> StreamingMoments<F> {
        let values: Vec<F> = self
            .records
            .iter()
            .map(|r| F::from_count(r.meeting_count))
            .collect();
        blocked_moments(&values)
    }

    /// Fraction of pairs whose last meeting happened after step `n`.
    pub fn fraction_last_meeting_after(&self, n: u64) -> F {
        let hits = self.records.iter().filter(|r| r.last_meeting > n).count();
        F::from_count(hits as u64) / F::from_count(self.records.len() as u64)
    }

    /// Replica-ordered normalized differences at the final checkpoint.
    pub fn final_normalized_diffs(&self) -> Vec<F> {
        self.records
            .iter()
            .filter_map(|r| r.normalized_diffs.last().map(|cd| cd.normalized))
            .collect()
    }
}

fn histogram(values: impl Iterator<Item = u64>) -> Vec<(u64, u64)> {
    let mut map = std::collections::BTreeMap::new();
    for v in values {
        *map.entry(v).or_insert(0u64) += 1;
    }
    map.into_iter().collect()
}

/// Run `replicas` independent pairs; replica `r` uses streams `(2r, 2r+1)`.
pub fn run_pair_ensemble<F: Scalar>(
    params: &WalkParams<F>,
    cfg: &EnsembleConfig,
) -> Result<PairEnsembleOutput<F>, EnsembleError> {
    cfg.validate_common()?;
    let regime = params.regime();
    // Pair checkpoints must sit inside the pair normalizer's domain so
    // normalized differences are well defined.
    if let Some(&bad) = cfg
        .checkpoints
        .iter()
        .find(|&&n| n < diff_normalizer_min_n(regime))
    {
        return Err(RegimeError::OutOfDomain {
            normalizer: "pair-difference normalizer",
            n: bad,
            min_n: diff_normalizer_min_n(regime),
        }
        .into());
    }

    let records = run_replicas(cfg.workers, cfg.replicas, |replica| {
        let mut rng_a = RngStream::new(cfg.master_seed, 2 * replica);
        let mut rng_b = RngStream::new(cfg.master_seed, 2 * replica + 1);
        simulate_pair(
            params,
            cfg.horizon,
            &cfg.checkpoints,
            cfg.n_min_lil,
            &mut rng_a,
            &mut rng_b,
        )
    })??;

    Ok(PairEnsembleOutput {
        regime,
        horizon: cfg.horizon,
        checkpoints: cfg.checkpoints.clone(),
        records,
    })
}

/// Replica-ordered samples of `M-hat = (S_N - S'_N) / N^(2p-1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSamples<F: Scalar = f64> {
    pub horizon: u64,
    /// The normalizing exponent `2p - 1`.
    pub exponent: F,
    pub samples: Vec<F>,
    pub moments: StreamingMoments<F>,
}

/// Sample the superdiffusive pair limit `M-hat` over the ensemble.
///
/// Uses the same streams as [`run_pair_ensemble`] (replica `r` owns
/// `(2r, 2r+1)`), so the samples match the final differences of a full pair
/// run with the same config.
pub fn estimate_limit_samples<F: Scalar>(
    params: &WalkParams<F>,
    cfg: &EnsembleConfig,
) -> Result<LimitSamples<F>, EnsembleError> {
    cfg.validate_common()?;
    let regime = params.regime();
    if regime != Regime::Superdiffusive {
        return Err(EnsembleError::WrongRegime {
            p: params.p().to_real(),
            regime: regime.label(),
        });
    }
    let exponent = F::from_real(2.0) * params.p() - F::one();
    let norm = F::from_count(cfg.horizon).powf(exponent);

    let samples = run_replicas(cfg.workers, cfg.replicas, |replica| {
        let mut rng_a = RngStream::new(cfg.master_seed, 2 * replica);
        let mut rng_b = RngStream::new(cfg.master_seed, 2 * replica + 1);
        let (a, b) = simulate_pair_endpoints(params, cfg.horizon, &mut rng_a, &mut rng_b);
        Ok::<F, EnsembleError>(F::from_signed(a - b) / norm)
    })??;

    let moments = blocked_moments(&samples);
    Ok(LimitSamples {
        horizon: cfg.horizon,
        exponent,
        samples,
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(p: f64, s: f64) -> WalkParams<f64> {
        WalkParams::new(p, s).unwrap()
    }

    fn small_cfg() -> EnsembleConfig {
        let mut cfg = EnsembleConfig::new(64, 200, 12345);
        cfg.checkpoints = vec![50, 200];
        cfg
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnsembleConfig::new(0, 10, 1);
        assert!(matches!(
            run_walk_ensemble(&params(0.5, 0.5), &cfg),
            Err(EnsembleError::NoReplicas)
        ));
        cfg.replicas = 1;
        cfg.n_min_lil = 15;
        assert!(matches!(
            run_walk_ensemble(&params(0.5, 0.5), &cfg),
            Err(EnsembleError::LilStartTooSmall(15))
        ));
        cfg.n_min_lil = 16;
        cfg.checkpoints = vec![11];
        assert!(run_walk_ensemble(&params(0.5, 0.5), &cfg).is_err());
    }

    #[test]
    fn budget_guard_trips() {
        let mut cfg = EnsembleConfig::new(100, 1000, 1);
        cfg.budget = 99_999;
        assert!(matches!(
            run_walk_ensemble(&params(0.5, 0.5), &cfg),
            Err(EnsembleError::BudgetExceeded { .. })
        ));
        cfg.budget = 100_000;
        assert!(run_walk_ensemble(&params(0.5, 0.5), &cfg).is_ok());
    }

    #[test]
    fn marginal_checkpoint_domain_rejected() {
        let mut cfg = EnsembleConfig::new(4, 10, 1);
        cfg.checkpoints = vec![1, 10];
        assert!(run_walk_ensemble(&params(0.75, 0.5), &cfg).is_err());
        // Pair checkpoints below the marginal pair normalizer domain (16).
        cfg.checkpoints = vec![10];
        assert!(run_pair_ensemble(&params(0.75, 0.5), &cfg).is_err());
        cfg.checkpoints = vec![2, 10];
        assert!(run_walk_ensemble(&params(0.5, 0.5), &cfg).is_ok());
    }

    #[test]
    fn worker_count_invariance_walks() {
        let pr = params(0.6, 0.5);
        let mut cfg = small_cfg();
        cfg.workers = 1;
        let one = run_walk_ensemble(&pr, &cfg).unwrap();
        for workers in [3usize, 4] {
            cfg.workers = workers;
            assert_eq!(one, run_walk_ensemble(&pr, &cfg).unwrap());
        }
    }

    #[test]
    fn worker_count_invariance_pairs() {
        let pr = params(0.85, 0.5);
        let mut cfg = small_cfg();
        cfg.workers = 1;
        let one = run_pair_ensemble(&pr, &cfg).unwrap();
        cfg.workers = 4;
        let four = run_pair_ensemble(&pr, &cfg).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn rerun_is_bit_identical() {
        let pr = params(0.7, 0.5);
        let cfg = small_cfg();
        let a = run_walk_ensemble(&pr, &cfg).unwrap();
        let b = run_walk_ensemble(&pr, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blocked_moments_match_sequential() {
        let values: Vec<f64> = (0..10_000)
            .map(|i| ((i * 2654435761u64 % 1000) as f64) / 999.0 - 0.5)
            .collect();
        let blocked = blocked_moments(&values);
        let seq = StreamingMoments::from_slice(&values);
        assert_eq!(blocked.count(), seq.count());
        assert_relative_eq!(blocked.mean(), seq.mean(), max_relative = 1e-9);
        assert_relative_eq!(blocked.variance(), seq.variance(), max_relative = 1e-9);
    }

    #[test]
    fn tree_merge_fixed_order() {
        let items = vec![1u64, 2, 3, 4, 5];
        // Tree: ((1+2)+(3+4))+5 under addition -- order fixed by position.
        assert_eq!(tree_merge(items, |a, b| a + b), Some(15));
        assert_eq!(tree_merge(Vec::<u64>::new(), |a, b| a + b), None);
    }

    #[test]
    fn walk_ensemble_moments_are_plausible() {
        // p = 1/2: E[S_n^2] = n; 64 replicas give a loose band.
        let pr = params(0.5, 0.5);
        let out = run_walk_ensemble(&pr, &small_cfg()).unwrap();
        let last = out.per_checkpoint.last().unwrap();
        assert_eq!(last.n, 200);
        assert_eq!(last.raw.count(), 64);
        let second_moment = last.raw.second_moment();
        assert!(second_moment > 50.0 && second_moment < 600.0);
        assert_eq!(out.final_positions.len(), 64);
        // Normalized values are positions / sqrt(n).
        assert_relative_eq!(
            out.final_normalized[0],
            out.final_positions[0] as f64 / (200f64).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pair_ensemble_s_one_always_meets() {
        let pr = params(0.8, 1.0);
        let mut cfg = small_cfg();
        cfg.replicas = 32;
        let out = run_pair_ensemble(&pr, &cfg).unwrap();
        assert!(out.records.iter().all(|r| r.meeting_count >= 1));
        let hist = out.meeting_count_histogram();
        let total: u64 = hist.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 32);
        assert!(hist.first().unwrap().0 >= 1);
    }

    #[test]
    fn histograms_partition_the_records() {
        let pr = params(0.5, 0.5);
        let out = run_pair_ensemble(&pr, &small_cfg()).unwrap();
        let total: u64 = out.last_meeting_histogram().iter().map(|&(_, c)| c).sum();
        assert_eq!(total, out.records.len() as u64);
        let f0 = out.fraction_last_meeting_after(0);
        let f50 = out.fraction_last_meeting_after(50);
        assert!((0.0..=1.0).contains(&f0));
        assert!(f50 <= f0);
    }

    #[test]
    fn limit_samples_regime_guard() {
        let cfg = small_cfg();
        assert!(matches!(
            estimate_limit_samples(&params(0.5, 0.5), &cfg),
            Err(EnsembleError::WrongRegime { .. })
        ));
        assert!(matches!(
            estimate_limit_samples(&params(0.75, 0.5), &cfg),
            Err(EnsembleError::WrongRegime { .. })
        ));
        assert!(estimate_limit_samples(&params(0.85, 0.5), &cfg).is_ok());
    }

    #[test]
    fn limit_samples_match_pair_final_diffs() {
        let pr = params(0.85, 0.5);
        let cfg = small_cfg();
        let pairs = run_pair_ensemble(&pr, &cfg).unwrap();
        let limits = estimate_limit_samples(&pr, &cfg).unwrap();
        assert_eq!(limits.samples.len(), pairs.records.len());
        let norm = (cfg.horizon as f64).powf(0.7);
        for (sample, record) in limits.samples.iter().zip(&pairs.records) {
            assert_relative_eq!(*sample, record.final_diff as f64 / norm, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_limit_samples_have_small_mean() {
        let pr = params(0.85, 0.5);
        let mut cfg = EnsembleConfig::new(512, 2_000, 777);
        cfg.checkpoints = vec![2_000];
        let limits = estimate_limit_samples(&pr, &cfg).unwrap();
        let se = limits.moments.std_error();
        assert!(
            limits.moments.mean().abs() <= 4.0 * se,
            "mean {} exceeds 4 se {}",
            limits.moments.mean(),
            se
        );
    }
}
