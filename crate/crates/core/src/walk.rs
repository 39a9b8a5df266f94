//! The elephant random walk process law and seeded simulation.
//!
//! Two equivalent step samplers are provided. The paper-literal one recalls a
//! uniformly chosen past step and keeps or flips its sign; it needs the full
//! history. Marginalizing the recalled index shows that
//!
//! ```text
//! P(X_{n+1} = +1 | history) = p*N+/n + (1-p)*N-/n = 1/2 + (2p-1) S_n / (2n)
//! ```
//!
//! where `N+`/`N-` count past up/down steps, so `(n, S_n)` is a sufficient
//! statistic and the default sampler runs in O(1) memory. The two are checked
//! against each other by exhaustive enumeration in the verification suite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regime::{classify_regime, diff_normalizer, diff_normalizer_min_n, Regime};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("memory parameter p must lie in the open interval (0, 1), got {0}")]
    MemoryOutOfRange(f64),
    #[error("first-step parameter s must lie in [0, 1], got {0}")]
    FirstStepOutOfRange(f64),
    #[error("state (n = {n}, position = {position}) violates |S_n| <= n and S_n = n (mod 2)")]
    InvalidState { n: u64, position: i64 },
    #[error("checkpoints must be strictly increasing and within 1..={horizon}")]
    InvalidCheckpoints { horizon: u64 },
}

/// Memory parameter `p` and first-step parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams<F: Scalar = f64> {
    p: F,
    s: F,
}

impl<F: Scalar> WalkParams<F> {
    /// Validates `0 < p < 1` and `0 <= s <= 1`.
    pub fn new(p: F, s: F) -> Result<Self, WalkError> {
        if !(p > F::zero() && p < F::one()) {
            return Err(WalkError::MemoryOutOfRange(p.to_real()));
        }
        if !(s >= F::zero() && s <= F::one()) {
            return Err(WalkError::FirstStepOutOfRange(s.to_real()));
        }
        Ok(Self { p, s })
    }

    /// Symmetric first step (`s = 1/2`), the default for limit statements.
    pub fn symmetric(p: F) -> Result<Self, WalkError> {
        Self::new(p, F::from_real(0.5))
    }

    pub fn p(&self) -> F {
        self.p
    }

    pub fn s(&self) -> F {
        self.s
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.p)
    }

    /// Slope `(2p - 1) / 2` of the conditional up-probability in `S_n / n`.
    pub fn memory_slope(&self) -> F {
        (F::from_real(2.0) * self.p - F::one()) / F::from_real(2.0)
    }
}

/// Sufficient statistic `(n, S_n)` of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkState {
    n: u64,
    position: i64,
}

impl WalkState {
    /// The walk before its first step: `(0, 0)`.
    pub fn origin() -> Self {
        Self { n: 0, position: 0 }
    }

    /// Validates `|position| <= n` and `position = n (mod 2)`.
    pub fn new(n: u64, position: i64) -> Result<Self, WalkError> {
        let ok = position.unsigned_abs() <= n && (position.rem_euclid(2) as u64) == n % 2;
        if ok {
            Ok(Self { n, position })
        } else {
            Err(WalkError::InvalidState { n, position })
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> i64 {
        self.position
    }
}

/// Full step record `(X_1, ..., X_n)` for the paper-literal sampler.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistoryWalkState {
    steps: Vec<i8>,
}

impl HistoryWalkState {
    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    /// History consisting of the given `+/-1` steps.
    pub fn from_steps(steps: Vec<i8>) -> Result<Self, WalkError> {
        if let Some(&bad) = steps.iter().find(|&&x| x != 1 && x != -1) {
            return Err(WalkError::InvalidState {
                n: steps.len() as u64,
                position: i64::from(bad),
            });
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    pub fn n(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn position(&self) -> i64 {
        self.steps.iter().map(|&x| i64::from(x)).sum()
    }
}

/// `P(X_{n+1} = +1 | state)`: `s` before the first step, then
/// `1/2 + (2p-1) S_n / (2n)`. Always in `[0, 1]` because `|S_n| <= n`.
pub fn conditional_up_probability<F: Scalar>(params: &WalkParams<F>, state: &WalkState) -> F {
    if state.n == 0 {
        params.s
    } else {
        let ratio = F::from_signed(state.position) / F::from_count(state.n);
        F::from_real(0.5) + params.memory_slope() * ratio
    }
}

/// Draw one up/down step. The first step draws `+1` with probability `s`.
pub fn first_step<F: Scalar>(params: &WalkParams<F>, rng: &mut RngStream) -> i8 {
    if rng.bernoulli(params.s) {
        1
    } else {
        -1
    }
}

/// O(1)-memory step from the sufficient statistic.
pub fn step<F: Scalar>(params: &WalkParams<F>, state: WalkState, rng: &mut RngStream) -> WalkState {
    let up = rng.bernoulli(conditional_up_probability(params, &state));
    WalkState {
        n: state.n + 1,
        position: state.position + if up { 1 } else { -1 },
    }
}

/// Paper-literal step: recall a uniform past index and keep the recalled
/// sign with probability `p`. Requires at least one past step.
pub fn step_naive<F: Scalar>(
    params: &WalkParams<F>,
    mut state: HistoryWalkState,
    rng: &mut RngStream,
) -> HistoryWalkState {
    let n = state.n();
    assert!(n >= 1, "step_naive needs a nonempty history; the first step follows the s-rule");
    let recalled = state.steps[(rng.uniform_index(n) - 1) as usize];
    let keep = rng.bernoulli(params.p);
    state.steps.push(if keep { recalled } else { -recalled });
    state
}

fn validate_checkpoints(horizon: u64, checkpoints: &[u64]) -> Result<(), WalkError> {
    let sorted = checkpoints.windows(2).all(|w| w[0] < w[1]);
    let in_range = checkpoints.iter().all(|&c| (1..=horizon).contains(&c));
    if sorted && in_range {
        Ok(())
    } else {
        Err(WalkError::InvalidCheckpoints { horizon })
    }
}

/// Positions at each checkpoint along one realized path.
///
/// Deterministic given the stream; an empty checkpoint list yields an empty
/// result.
pub fn simulate_path<F: Scalar>(
    params: &WalkParams<F>,
    horizon: u64,
    checkpoints: &[u64],
    rng: &mut RngStream,
) -> Result<Vec<(u64, i64)>, WalkError> {
    validate_checkpoints(horizon, checkpoints)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    if checkpoints.is_empty() {
        return Ok(out);
    }
    let mut state = WalkState::origin();
    let mut next_checkpoint = 0;
    let last = *checkpoints.last().expect("nonempty");
    while state.n < last {
        state = step(params, state, rng);
        if state.n == checkpoints[next_checkpoint] {
            out.push((state.n, state.position));
            next_checkpoint += 1;
        }
    }
    Ok(out)
}

/// Difference of an independent pair at one checkpoint, raw and normalized
/// by the regime's pair normalizer (`NaN` below the normalizer's domain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointDiff<F: Scalar = f64> {
    pub n: u64,
    pub diff: i64,
    pub normalized: F,
}

/// One-sided running suprema of `diff / normalizer` over `n >= n_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupStat<F: Scalar = f64> {
    /// Supremum of `+diff / normalizer`; `-inf` if no step was in range.
    pub plus: F,
    /// Supremum of `-diff / normalizer`; `-inf` if no step was in range.
    pub minus: F,
    /// First step the statistic was tracked from (normalizer domain cap).
    pub from_n: u64,
}

/// Outcome of simulating one independent pair to a common horizon.
///
/// A meeting is `S_n = S'_n` at a common time `n >= 1`; the forced
/// coincidence at `n = 0` is not counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord<F: Scalar = f64> {
    pub meeting_count: u64,
    /// Largest meeting time, `0` if the pair never met.
    pub last_meeting: u64,
    /// `S_N - S'_N` at the horizon (always even).
    pub final_diff: i64,
    /// Normalized differences at the requested checkpoints.
    pub normalized_diffs: Vec<CheckpointDiff<F>>,
    /// Running suprema of the difference under `sqrt(n log log n)`.
    pub sup_i: SupStat<F>,
    /// Running suprema of the difference under `sqrt(n log n log log log n)`.
    pub sup_ii: SupStat<F>,
}

/// Lazily evaluated running supremum of `diff / norm(n)`.
///
/// `norm` is increasing in `n`, so `diff <= sup * norm(n0)` for any earlier
/// `n0` certifies that `diff / norm(n) <= sup` without recomputing the
/// normalizer; logs are only taken when the cached threshold is beaten.
struct LazySup<F: Scalar> {
    sup: F,
    threshold: F,
    seen: bool,
}

impl<F: Scalar> LazySup<F> {
    fn new() -> Self {
        Self {
            sup: F::neg_infinity(),
            threshold: F::neg_infinity(),
            seen: false,
        }
    }

    #[inline]
    fn observe(&mut self, value: F, norm: impl Fn() -> F) {
        if value <= self.threshold {
            return;
        }
        let norm = norm();
        let mut ratio = value / norm;
        if ratio == F::zero() {
            // Canonical zero, so mirrored pairs produce bitwise-equal sups.
            ratio = F::zero();
        }
        if !self.seen || ratio > self.sup {
            self.sup = ratio;
            self.seen = true;
        }
        self.threshold = self.sup * norm;
    }

    fn sup(&self) -> F {
        self.sup
    }
}

#[inline]
fn norm_i<F: Scalar>(n: u64) -> F {
    let nf = F::from_count(n);
    (nf * nf.ln().ln()).sqrt()
}

#[inline]
fn norm_ii<F: Scalar>(n: u64) -> F {
    let nf = F::from_count(n);
    (nf * nf.ln() * nf.ln().ln().ln()).sqrt()
}

/// Simulate two independent walks with shared parameters.
///
/// `rng_a` and `rng_b` must come from distinct stream indices; swapping them
/// swaps the roles of the two walks exactly. Sup-statistics start at
/// `n_min_lil` (clamped up to each normalizer's domain).
pub fn simulate_pair<F: Scalar>(
    params: &WalkParams<F>,
    horizon: u64,
    checkpoints: &[u64],
    n_min_lil: u64,
    rng_a: &mut RngStream,
    rng_b: &mut RngStream,
) -> Result<PairRecord<F>, WalkError> {
    validate_checkpoints(horizon, checkpoints)?;
    let regime = params.regime();
    let start_i = n_min_lil.max(diff_normalizer_min_n(Regime::Diffusive));
    let start_ii = n_min_lil.max(diff_normalizer_min_n(Regime::Marginal));

    let mut a = WalkState::origin();
    let mut b = WalkState::origin();
    let mut meeting_count = 0u64;
    let mut last_meeting = 0u64;
    let mut normalized_diffs = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = 0;
    let mut plus_i = LazySup::new();
    let mut minus_i = LazySup::new();
    let mut plus_ii = LazySup::new();
    let mut minus_ii = LazySup::new();

    for n in 1..=horizon {
        a = step(params, a, rng_a);
        b = step(params, b, rng_b);
        let diff = a.position - b.position;
        if diff == 0 {
            meeting_count += 1;
            last_meeting = n;
        }
        if n >= start_i {
            let d = F::from_signed(diff);
            plus_i.observe(d, || norm_i::<F>(n));
            minus_i.observe(-d, || norm_i::<F>(n));
            if n >= start_ii {
                plus_ii.observe(d, || norm_ii::<F>(n));
                minus_ii.observe(-d, || norm_ii::<F>(n));
            }
        }
        if next_checkpoint < checkpoints.len() && n == checkpoints[next_checkpoint] {
            let normalized = match diff_normalizer(regime, params.p, n) {
                Ok(norm) => F::from_signed(diff) / norm,
                Err(_) => F::nan(),
            };
            normalized_diffs.push(CheckpointDiff {
                n,
                diff,
                normalized,
            });
            next_checkpoint += 1;
        }
    }

    Ok(PairRecord {
        meeting_count,
        last_meeting,
        final_diff: a.position - b.position,
        normalized_diffs,
        sup_i: SupStat {
            plus: plus_i.sup(),
            minus: minus_i.sup(),
            from_n: start_i,
        },
        sup_ii: SupStat {
            plus: plus_ii.sup(),
            minus: minus_ii.sup(),
            from_n: start_ii,
        },
    })
}

/// Final positions of an independent pair, skipping meeting and sup-statistic
/// bookkeeping. Draw-for-draw identical to [`simulate_pair`], so the final
/// difference matches the full record for the same streams.
pub fn simulate_pair_endpoints<F: Scalar>(
    params: &WalkParams<F>,
    horizon: u64,
    rng_a: &mut RngStream,
    rng_b: &mut RngStream,
) -> (i64, i64) {
    let mut a = WalkState::origin();
    let mut b = WalkState::origin();
    for _ in 0..horizon {
        a = step(params, a, rng_a);
        b = step(params, b, rng_b);
    }
    (a.position, b.position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(p: f64, s: f64) -> WalkParams<f64> {
        WalkParams::new(p, s).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(WalkParams::new(0.0f64, 0.5).is_err());
        assert!(WalkParams::new(1.0f64, 0.5).is_err());
        assert!(WalkParams::new(0.5f64, -0.1).is_err());
        assert!(WalkParams::new(0.5f64, 1.1).is_err());
        assert!(WalkParams::new(f64::NAN, 0.5).is_err());
        assert!(WalkParams::new(0.5f64, f64::NAN).is_err());
        assert!(WalkParams::new(0.5f64, 0.0).is_ok());
        assert!(WalkParams::new(0.5f64, 1.0).is_ok());
    }

    #[test]
    fn state_validation() {
        assert!(WalkState::new(7, 3).is_ok());
        assert!(WalkState::new(7, 8).is_err()); // |S| > n
        assert!(WalkState::new(7, 2).is_err()); // parity
        assert!(WalkState::new(0, 0).is_ok());
        assert!(WalkState::new(0, 1).is_err());
        assert!(WalkState::new(3, -3).is_ok());
    }

    #[test]
    fn up_probability_examples() {
        // p = 1/2 kills the memory term.
        let st = WalkState::new(7, 3).unwrap();
        assert_relative_eq!(conditional_up_probability(&params(0.5, 0.5), &st), 0.5);
        // Single past step: the definition gives p directly.
        let st = WalkState::new(1, 1).unwrap();
        assert_relative_eq!(conditional_up_probability(&params(0.75, 0.5), &st), 0.75);
        // Counting oracle: p*N+/n + (1-p)*N-/n with N+ = 3, N- = 1.
        let st = WalkState::new(4, 2).unwrap();
        let by_counts = 0.6 * 3.0 / 4.0 + 0.4 * 1.0 / 4.0;
        assert_relative_eq!(by_counts, 0.55, epsilon = 1e-15);
        assert_relative_eq!(
            conditional_up_probability(&params(0.6, 0.5), &st),
            by_counts,
            epsilon = 1e-15
        );
        // Before the first step the answer is s.
        let st = WalkState::origin();
        assert_relative_eq!(conditional_up_probability(&params(0.9, 0.3), &st), 0.3);
    }

    #[test]
    fn up_probability_always_in_unit_interval() {
        for p in [0.01, 0.25, 0.5, 0.75, 0.99] {
            for n in 1..=40u64 {
                for position in (-(n as i64)..=(n as i64)).step_by(2) {
                    let st = WalkState::new(n, position).unwrap();
                    let u = conditional_up_probability(&params(p, 0.5), &st);
                    assert!((0.0..=1.0).contains(&u), "u={u} at p={p} n={n} S={position}");
                }
            }
        }
    }

    #[test]
    fn up_probability_affine_in_position() {
        // Value 1/2 at S = 0 and slope (2p-1)/(2n).
        let pr = params(0.67, 0.5);
        for n in [2u64, 5, 10, 101] {
            let slope = (2.0 * 0.67 - 1.0) / (2.0 * n as f64);
            let base = if n % 2 == 0 {
                let st = WalkState::new(n, 0).unwrap();
                conditional_up_probability(&pr, &st)
            } else {
                0.5
            };
            if n % 2 == 0 {
                assert_relative_eq!(base, 0.5, epsilon = 1e-15);
            }
            let lo = -(n as i64);
            for pos in (lo..=(n as i64)).step_by(2) {
                let st = WalkState::new(n, pos).unwrap();
                assert_relative_eq!(
                    conditional_up_probability(&pr, &st),
                    0.5 + slope * pos as f64,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn first_step_follows_s_rule() {
        let pr = params(0.75, 1.0);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(first_step(&pr, &mut rng), 1);
        }
        let pr = params(0.75, 0.0);
        for _ in 0..100 {
            assert_eq!(first_step(&pr, &mut rng), -1);
        }
    }

    #[test]
    fn step_changes_position_by_one() {
        let pr = params(0.6, 0.5);
        let mut rng = RngStream::new(3, 1);
        let mut st = WalkState::origin();
        for _ in 0..1000 {
            let next = step(&pr, st, &mut rng);
            assert_eq!(next.n(), st.n() + 1);
            assert_eq!((next.position() - st.position()).abs(), 1);
            st = next;
        }
    }

    #[test]
    fn persistent_walk_stays_up() {
        // s = 1 forces X_1 = +1; the all-up continuation keeps S_k = k, so
        // each further step goes up with probability p and the 10-step
        // all-up path has probability p^10 = 0.999^10 ~ 0.99004.
        let prob_all_up = 0.999f64.powi(10);
        assert!(prob_all_up >= 0.99);
        let pr = params(0.999, 1.0);
        let mut hits = 0u32;
        let trials = 2000;
        for r in 0..trials {
            let mut rng = RngStream::new(11, r);
            let mut st = WalkState::origin();
            for _ in 0..11 {
                st = step(&pr, st, &mut rng);
            }
            if st.position() == 11 {
                hits += 1;
            }
        }
        // Binomial(2000, 0.99): mean 1980, sd ~ 4.4; demand > 5 sigma slack.
        assert!(hits >= 1950, "only {hits}/{trials} paths stayed up");
    }

    #[test]
    fn symmetric_walk_tail_bound() {
        // At p = 1/2 the walk is the simple random walk; |S_1e6| <= 6e3 is a
        // 6-sigma event's complement.
        let pr = params(0.5, 0.5);
        let mut rng = RngStream::new(2024, 0);
        let path = simulate_path(&pr, 1_000_000, &[1_000_000], &mut rng).unwrap();
        assert_eq!(path.len(), 1);
        assert!(path[0].1.abs() <= 6_000, "S = {}", path[0].1);
    }

    #[test]
    fn step_naive_matches_marginal_probabilities() {
        // History (+1, +1, -1) at p = 0.6: P(next = +1) = 2/3*0.6 + 1/3*0.4 = 8/15.
        let pr = params(0.6, 0.5);
        let mut rng = RngStream::new(17, 0);
        let mut ups = 0u32;
        let trials = 40_000;
        for _ in 0..trials {
            let hist = HistoryWalkState::from_steps(vec![1, 1, -1]).unwrap();
            let hist = step_naive(&pr, hist, &mut rng);
            if hist.steps()[3] == 1 {
                ups += 1;
            }
        }
        let freq = f64::from(ups) / f64::from(trials);
        let expect = 8.0 / 15.0;
        let se = (expect * (1.0 - expect) / f64::from(trials)).sqrt();
        assert!(
            (freq - expect).abs() <= 4.0 * se,
            "freq {freq} vs {expect} (4se = {})",
            4.0 * se
        );
    }

    #[test]
    fn step_naive_symmetric_history_is_fair() {
        // History (+1, -1): any p gives 1/2.
        let pr = params(0.9, 0.5);
        let mut rng = RngStream::new(23, 0);
        let mut ups = 0u32;
        let trials = 40_000;
        for _ in 0..trials {
            let hist = HistoryWalkState::from_steps(vec![1, -1]).unwrap();
            let hist = step_naive(&pr, hist, &mut rng);
            if hist.steps()[2] == 1 {
                ups += 1;
            }
        }
        let freq = f64::from(ups) / f64::from(trials);
        assert!((freq - 0.5).abs() <= 4.0 * 0.0025, "freq {freq}");
    }

    #[test]
    fn step_naive_single_candidate() {
        // History (+1) at p = 0.75: next step +1 with probability 0.75.
        let pr = params(0.75, 0.5);
        let mut rng = RngStream::new(29, 0);
        let mut ups = 0u32;
        let trials = 40_000;
        for _ in 0..trials {
            let hist = HistoryWalkState::from_steps(vec![1]).unwrap();
            let hist = step_naive(&pr, hist, &mut rng);
            if hist.steps()[1] == 1 {
                ups += 1;
            }
        }
        let freq = f64::from(ups) / f64::from(trials);
        let se = (0.75 * 0.25 / f64::from(trials)).sqrt();
        assert!((freq - 0.75).abs() <= 4.0 * se, "freq {freq}");
    }

    #[test]
    fn simulate_path_reproducible_and_parity_correct() {
        let pr = params(0.6, 0.5);
        let run = |seed| {
            let mut rng = RngStream::new(seed, 4);
            simulate_path(&pr, 4, &[2, 4], &mut rng).unwrap()
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a, b);
        for (n, pos) in a {
            assert_eq!(pos.rem_euclid(2) as u64, n % 2);
            assert!(pos.unsigned_abs() <= n);
        }
    }

    #[test]
    fn simulate_path_empty_checkpoints() {
        let pr = params(0.5, 0.5);
        let mut rng = RngStream::new(5, 0);
        assert_eq!(simulate_path(&pr, 10, &[], &mut rng).unwrap(), vec![]);
    }

    #[test]
    fn simulate_path_rejects_bad_checkpoints() {
        let pr = params(0.5, 0.5);
        let mut rng = RngStream::new(5, 0);
        assert!(simulate_path(&pr, 10, &[0, 4], &mut rng).is_err());
        assert!(simulate_path(&pr, 10, &[4, 11], &mut rng).is_err());
        assert!(simulate_path(&pr, 10, &[4, 4], &mut rng).is_err());
        assert!(simulate_path(&pr, 10, &[6, 4], &mut rng).is_err());
    }

    #[test]
    fn symmetric_mean_over_seeds() {
        // Empirical mean of S_100 over 1e4 seeds within 3 sigma of 0
        // (sigma_mean = sqrt(100)/100 = 0.1).
        let pr = params(0.5, 0.5);
        let mut total = 0i64;
        for r in 0..10_000u64 {
            let mut rng = RngStream::new(99, r);
            let path = simulate_path(&pr, 100, &[100], &mut rng).unwrap();
            total += path[0].1;
        }
        let mean = total as f64 / 10_000.0;
        assert!(mean.abs() <= 0.3, "mean {mean}");
    }

    #[test]
    fn pair_meets_deterministically_when_s_is_one() {
        let pr = params(0.75, 1.0);
        for r in 0..50u64 {
            let mut a = RngStream::new(7, 2 * r);
            let mut b = RngStream::new(7, 2 * r + 1);
            let rec = simulate_pair(&pr, 50, &[50], 16, &mut a, &mut b).unwrap();
            assert!(rec.meeting_count >= 1);
            assert!(rec.last_meeting >= 1);
        }
    }

    #[test]
    fn pair_first_step_meeting_is_fair_coin() {
        // s = 1/2: P(meet at n = 1) = 1/2.
        let pr = params(0.6, 0.5);
        let mut met = 0u32;
        let trials = 20_000u64;
        for r in 0..trials {
            let mut a = RngStream::new(31, 2 * r);
            let mut b = RngStream::new(31, 2 * r + 1);
            let rec = simulate_pair(&pr, 1, &[1], 16, &mut a, &mut b).unwrap();
            if rec.meeting_count == 1 {
                met += 1;
            }
        }
        let freq = f64::from(met) / trials as f64;
        assert!((freq - 0.5).abs() <= 4.0 * 0.00354, "freq {freq}");
    }

    #[test]
    fn pair_expected_meetings_short_horizon() {
        // Exact value at p = 0.75, s = 1/2, horizon 2 is 0.84375.
        let pr = params(0.75, 0.5);
        let trials = 40_000u64;
        let mut total = 0u64;
        for r in 0..trials {
            let mut a = RngStream::new(37, 2 * r);
            let mut b = RngStream::new(37, 2 * r + 1);
            total += simulate_pair(&pr, 2, &[2], 16, &mut a, &mut b)
                .unwrap()
                .meeting_count;
        }
        let mean = total as f64 / trials as f64;
        // Var(count) <= E[count^2] <= 2 E[count]; 4 se band with headroom.
        assert!((mean - 0.84375).abs() <= 0.02, "mean {mean}");
    }

    #[test]
    fn pair_swap_streams_swaps_roles() {
        let pr = params(0.8, 0.5);
        let mut a1 = RngStream::new(13, 0);
        let mut b1 = RngStream::new(13, 1);
        let fwd = simulate_pair(&pr, 300, &[100, 300], 16, &mut a1, &mut b1).unwrap();
        let mut a2 = RngStream::new(13, 1);
        let mut b2 = RngStream::new(13, 0);
        let rev = simulate_pair(&pr, 300, &[100, 300], 16, &mut a2, &mut b2).unwrap();
        assert_eq!(fwd.meeting_count, rev.meeting_count);
        assert_eq!(fwd.last_meeting, rev.last_meeting);
        assert_eq!(fwd.final_diff, -rev.final_diff);
        assert_eq!(fwd.sup_i.plus, rev.sup_i.minus);
        assert_eq!(fwd.sup_i.minus, rev.sup_i.plus);
        assert_eq!(fwd.sup_ii.plus, rev.sup_ii.minus);
    }

    #[test]
    fn pair_endpoints_match_full_record() {
        let pr = params(0.85, 0.5);
        let mut a1 = RngStream::new(19, 2);
        let mut b1 = RngStream::new(19, 3);
        let rec = simulate_pair(&pr, 500, &[500], 16, &mut a1, &mut b1).unwrap();
        let mut a2 = RngStream::new(19, 2);
        let mut b2 = RngStream::new(19, 3);
        let (sa, sb) = simulate_pair_endpoints(&pr, 500, &mut a2, &mut b2);
        assert_eq!(rec.final_diff, sa - sb);
    }

    #[test]
    fn lazy_sup_matches_direct_supremum() {
        // The lazily-thresholded supremum must equal the plain maximum of
        // diff/norm over the tracked range.
        let pr = params(0.55, 0.5);
        let mut a = RngStream::new(41, 0);
        let mut b = RngStream::new(41, 1);
        let horizon = 5_000u64;
        let n_min = 100u64;
        let rec = simulate_pair(&pr, horizon, &[horizon], n_min, &mut a, &mut b).unwrap();

        // Replay the pair manually.
        let mut a = RngStream::new(41, 0);
        let mut b = RngStream::new(41, 1);
        let mut sa = WalkState::origin();
        let mut sb = WalkState::origin();
        let (mut plus, mut minus) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for n in 1..=horizon {
            sa = step(&pr, sa, &mut a);
            sb = step(&pr, sb, &mut b);
            if n >= n_min {
                let d = (sa.position() - sb.position()) as f64;
                let norm = norm_i::<f64>(n);
                plus = plus.max(d / norm);
                minus = minus.max(-d / norm);
            }
        }
        assert_relative_eq!(rec.sup_i.plus, plus, epsilon = 1e-12);
        assert_relative_eq!(rec.sup_i.minus, minus, epsilon = 1e-12);
    }

    #[test]
    fn checkpoint_diffs_are_normalized_by_regime() {
        let pr = params(0.85, 0.5);
        let mut a = RngStream::new(43, 0);
        let mut b = RngStream::new(43, 1);
        let rec = simulate_pair(&pr, 1000, &[10, 1000], 16, &mut a, &mut b).unwrap();
        for cd in &rec.normalized_diffs {
            let norm = (cd.n as f64).powf(0.7);
            assert_relative_eq!(cd.normalized, cd.diff as f64 / norm, epsilon = 1e-12);
        }
    }
}
