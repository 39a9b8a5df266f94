//! Exact, simulation-free computation of the law of `S_n`.
//!
//! The conditional step probability `u_k(m) = 1/2 + (2p-1) m / (2k)` drives a
//! forward dynamic program over the lattice, O(n^2) time and O(n) space.
//! Moments follow from one-line recursions derived from the same conditional
//! law:
//!
//! ```text
//! mu_1 = 2s - 1,  mu_{k+1} = mu_k * (1 + (2p-1)/k)
//! m_1  = 1,       m_{k+1}  = m_k * (1 + 2(2p-1)/k) + 1
//! ```
//!
//! Everything here is double-entry bookkeeping for the samplers: the DP and
//! the recursions are checked against each other, and both against exhaustive
//! enumeration of the paper-literal sampler for small `n`.
//!
//! Arithmetic is double precision rather than exact rationals; per-step
//! rounding of ~1e-16 stays below 1e-10 through the default range cap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::walk::WalkParams;

/// Default cap on DP-based oracle queries; the full meeting table up to the
/// cap stays under a second. Moment recursions are O(n) and uncapped.
pub const DEFAULT_RANGE_CAP: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle step count must lie in 1..={cap}, got {n}")]
    OutOfRange { n: u64, cap: u64 },
}

/// Exact law of `S_n` on the parity sublattice of `{-n, ..., n}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticePmf<F: Scalar = f64> {
    n: u64,
    /// `probs[i] = P(S_n = -n + 2i)` for `i = 0..=n`.
    probs: Vec<F>,
}

impl<F: Scalar> LatticePmf<F> {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Support positions in increasing order: `-n, -n+2, ..., n`.
    pub fn positions(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n as i64;
        (0..=self.n).map(move |i| -n + 2 * i as i64)
    }

    /// `P(S_n = k)`; zero off the parity sublattice.
    pub fn prob(&self, k: i64) -> F {
        let n = self.n as i64;
        if k < -n || k > n || (k - n).rem_euclid(2) != 0 {
            return F::zero();
        }
        self.probs[((k + n) / 2) as usize]
    }

    /// `(position, probability)` pairs over the support.
    pub fn entries(&self) -> impl Iterator<Item = (i64, F)> + '_ {
        self.positions().zip(self.probs.iter().copied())
    }

    pub fn total_mass(&self) -> F {
        self.probs.iter().fold(F::zero(), |acc, &x| acc + x)
    }

    pub fn mean(&self) -> F {
        self.entries()
            .fold(F::zero(), |acc, (k, q)| acc + F::from_signed(k) * q)
    }

    pub fn second_moment(&self) -> F {
        self.entries().fold(F::zero(), |acc, (k, q)| {
            let kf = F::from_signed(k);
            acc + kf * kf * q
        })
    }

    pub fn fourth_moment(&self) -> F {
        self.entries().fold(F::zero(), |acc, (k, q)| {
            let kf = F::from_signed(k);
            acc + kf * kf * kf * kf * q
        })
    }
}

/// Exact means and second moments for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries<F: Scalar = f64> {
    n_max: u64,
    /// `means[n-1] = E[S_n]`.
    means: Vec<F>,
    /// `second_moments[n-1] = E[S_n^2]`.
    second_moments: Vec<F>,
}

impl<F: Scalar> MomentSeries<F> {
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn mean(&self, n: u64) -> F {
        self.means[(n - 1) as usize]
    }

    pub fn second_moment(&self, n: u64) -> F {
        self.second_moments[(n - 1) as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = (u64, F, F)> + '_ {
        (1..=self.n_max).map(move |n| (n, self.mean(n), self.second_moment(n)))
    }
}

fn check_range(n: u64, cap: u64) -> Result<(), OracleError> {
    if n >= 1 && n <= cap {
        Ok(())
    } else {
        Err(OracleError::OutOfRange { n, cap })
    }
}

/// Entries this far (multiplicatively) above the smallest normal float are
/// kept; anything smaller at the support edges is truncated to zero. The
/// truncated mass is below `n * 1e-300` in the f64 lane, some 290 orders of
/// magnitude under the pmf tolerances, and staying out of the subnormal
/// range keeps the DP fast.
const EDGE_FLUSH_SCALE: f64 = 1e8;

/// Forward DP over the lattice law with a live support window.
///
/// `probs[i] = P(S_n = -n + 2i)`; only `lo..=hi` can be nonzero.
pub(crate) struct ForwardDp<F: Scalar> {
    params: WalkParams<F>,
    n: u64,
    probs: Vec<F>,
    lo: usize,
    hi: usize,
    tiny: F,
}

impl<F: Scalar> ForwardDp<F> {
    pub(crate) fn new(params: &WalkParams<F>) -> Self {
        let mut dp = Self {
            params: *params,
            n: 1,
            probs: vec![F::one() - params.s(), params.s()],
            lo: 0,
            hi: 1,
            tiny: F::min_positive_value() * F::from_real(EDGE_FLUSH_SCALE),
        };
        dp.trim_edges();
        dp
    }

    pub(crate) fn n(&self) -> u64 {
        self.n
    }

    /// Advance the law from step `n` to step `n + 1`.
    pub(crate) fn advance(&mut self) {
        let k = self.n;
        let half = F::from_real(0.5);
        let two = F::from_real(2.0);
        let slope = self.params.memory_slope() / F::from_count(k);
        let mut next = vec![F::zero(); self.probs.len() + 1];
        // Position at index lo is -k + 2*lo; accumulating by +2 stays exact
        // (positions sit far below either lane's integer-exact range).
        let mut m = F::from_signed(-(k as i64) + 2 * self.lo as i64);
        for i in self.lo..=self.hi {
            let q = self.probs[i];
            let up = half + slope * m;
            next[i + 1] += q * up;
            next[i] += q * (F::one() - up);
            m += two;
        }
        self.probs = next;
        self.hi += 1;
        self.n += 1;
        self.trim_edges();
    }

    /// Truncate negligible edge entries so the live window stays tight and
    /// clear of subnormal arithmetic.
    fn trim_edges(&mut self) {
        while self.lo < self.hi && self.probs[self.lo] < self.tiny {
            self.probs[self.lo] = F::zero();
            self.lo += 1;
        }
        while self.hi > self.lo && self.probs[self.hi] < self.tiny {
            self.probs[self.hi] = F::zero();
            self.hi -= 1;
        }
    }

    /// `sum_k P(S_n = k)^2 = P(S_n = S'_n)` for an independent copy.
    pub(crate) fn collision_mass(&self) -> F {
        self.probs[self.lo..=self.hi]
            .iter()
            .fold(F::zero(), |acc, &q| acc + q * q)
    }

    /// `(mass, mean, second moment)` of the current law.
    pub(crate) fn moments(&self) -> (F, F, F) {
        let two = F::from_real(2.0);
        let mut m = F::from_signed(-(self.n as i64) + 2 * self.lo as i64);
        let mut mass = F::zero();
        let mut mean = F::zero();
        let mut second = F::zero();
        for &q in &self.probs[self.lo..=self.hi] {
            mass += q;
            mean += m * q;
            second += m * m * q;
            m += two;
        }
        (mass, mean, second)
    }

    pub(crate) fn into_pmf(self) -> LatticePmf<F> {
        LatticePmf {
            n: self.n,
            probs: self.probs,
        }
    }
}

/// Exact law of `S_n` by forward dynamic programming.
pub fn exact_pmf<F: Scalar>(params: &WalkParams<F>, n: u64) -> Result<LatticePmf<F>, OracleError> {
    exact_pmf_capped(params, n, DEFAULT_RANGE_CAP)
}

/// [`exact_pmf`] with an explicit range cap.
pub fn exact_pmf_capped<F: Scalar>(
    params: &WalkParams<F>,
    n: u64,
    cap: u64,
) -> Result<LatticePmf<F>, OracleError> {
    check_range(n, cap)?;
    let mut dp = ForwardDp::new(params);
    while dp.n() < n {
        dp.advance();
    }
    Ok(dp.into_pmf())
}

/// `E[S_n]` by the mean recursion.
pub fn exact_mean<F: Scalar>(params: &WalkParams<F>, n: u64) -> F {
    let memory = F::from_real(2.0) * params.p() - F::one();
    let mut mu = F::from_real(2.0) * params.s() - F::one();
    for k in 1..n {
        mu *= F::one() + memory / F::from_count(k);
    }
    mu
}

/// `E[S_n^2]` by the second-moment recursion (independent of `s`).
pub fn exact_second_moment<F: Scalar>(params: &WalkParams<F>, n: u64) -> F {
    let memory2 = F::from_real(2.0) * (F::from_real(2.0) * params.p() - F::one());
    let mut m = F::one();
    for k in 1..n {
        m = m * (F::one() + memory2 / F::from_count(k)) + F::one();
    }
    m
}

/// Exact moment series for `n = 1..=n_max` in one O(n) sweep.
pub fn moment_series<F: Scalar>(params: &WalkParams<F>, n_max: u64) -> MomentSeries<F> {
    let memory = F::from_real(2.0) * params.p() - F::one();
    let memory2 = F::from_real(2.0) * memory;
    let mut means = Vec::with_capacity(n_max as usize);
    let mut seconds = Vec::with_capacity(n_max as usize);
    let mut mu = F::from_real(2.0) * params.s() - F::one();
    let mut m = F::one();
    means.push(mu);
    seconds.push(m);
    for k in 1..n_max {
        let kf = F::from_count(k);
        mu *= F::one() + memory / kf;
        m = m * (F::one() + memory2 / kf) + F::one();
        means.push(mu);
        seconds.push(m);
    }
    MomentSeries {
        n_max,
        means,
        second_moments: seconds,
    }
}

/// `P(S_n = S'_n)` for two independent walks with the same parameters:
/// the sum of squared pmf entries.
pub fn meeting_probability<F: Scalar>(params: &WalkParams<F>, n: u64) -> Result<F, OracleError> {
    check_range(n, DEFAULT_RANGE_CAP)?;
    let mut dp = ForwardDp::new(params);
    while dp.n() < n {
        dp.advance();
    }
    Ok(dp.collision_mass())
}

/// Partial sums `sum_{n=1..=N} P(S_n = S'_n)` for every `N` up to `n_max`,
/// from a single forward DP sweep. Index 0 holds `N = 1`.
pub fn expected_meetings_table<F: Scalar>(
    params: &WalkParams<F>,
    n_max: u64,
    cap: u64,
) -> Result<Vec<F>, OracleError> {
    check_range(n_max, cap)?;
    let mut dp = ForwardDp::new(params);
    let mut acc = dp.collision_mass();
    let mut out = Vec::with_capacity(n_max as usize);
    out.push(acc);
    while dp.n() < n_max {
        dp.advance();
        acc += dp.collision_mass();
        out.push(acc);
    }
    Ok(out)
}

/// `sum_{n=1..=N} P(S_n = S'_n)`, the expected number of meetings by `N`.
pub fn expected_meetings<F: Scalar>(params: &WalkParams<F>, n_max: u64) -> Result<F, OracleError> {
    Ok(*expected_meetings_table(params, n_max, DEFAULT_RANGE_CAP)?
        .last()
        .expect("n_max >= 1"))
}

/// Exact law of `S_n - S'_n` for two independent identically-parameterized
/// walks: the cross-correlation of the pmf with itself. Even support
/// `{-2n, ..., 2n}`; the value at `0` equals [`meeting_probability`].
pub fn exact_diff_pmf<F: Scalar>(
    params: &WalkParams<F>,
    n: u64,
) -> Result<DiffPmf<F>, OracleError> {
    let pmf = exact_pmf(params, n)?;
    let len = pmf.probs.len();
    let lo = pmf.probs.iter().position(|&q| q > F::zero()).unwrap_or(0);
    let hi = pmf
        .probs
        .iter()
        .rposition(|&q| q > F::zero())
        .unwrap_or(len - 1);
    // lag d (in lattice units of 2) from -n to n; only the live band of the
    // pmf contributes.
    let mut probs = vec![F::zero(); 2 * len - 1];
    for i in lo..=hi {
        let qi = pmf.probs[i];
        for j in lo..=hi {
            probs[len - 1 + i - j] += qi * pmf.probs[j];
        }
    }
    Ok(DiffPmf { n, probs })
}

/// Exact law of the difference of two independent walks at a common time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffPmf<F: Scalar = f64> {
    n: u64,
    /// `probs[i] = P(S_n - S'_n = -2n + 2i)` for `i = 0..=2n`.
    probs: Vec<F>,
}

impl<F: Scalar> DiffPmf<F> {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Support differences in increasing order: `-2n, -2n+2, ..., 2n`.
    pub fn entries(&self) -> impl Iterator<Item = (i64, F)> + '_ {
        let n = self.n as i64;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &q)| (-2 * n + 2 * i as i64, q))
    }

    /// `P(S_n - S'_n = d)`; zero off the even sublattice.
    pub fn prob(&self, d: i64) -> F {
        let n2 = 2 * self.n as i64;
        if d < -n2 || d > n2 || d.rem_euclid(2) != 0 {
            return F::zero();
        }
        self.probs[((d + n2) / 2) as usize]
    }

    pub fn total_mass(&self) -> F {
        self.probs.iter().fold(F::zero(), |acc, &x| acc + x)
    }

    pub fn second_moment(&self) -> F {
        self.entries().fold(F::zero(), |acc, (d, q)| {
            let df = F::from_signed(d);
            acc + df * df * q
        })
    }

    /// Cumulative distribution over the support, matching `entries` order.
    pub fn cdf(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.probs
            .iter()
            .map(|&q| {
                acc += q;
                acc
            })
            .collect()
    }
}

/// Oracle-backed prediction of the mean meeting count by `horizon`,
/// extrapolating past the exact cap with a fitted `c / sqrt(n)` tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeetingPrediction {
    /// Predicted mean number of meetings by the horizon.
    pub expected: f64,
    /// Steps covered exactly by the DP.
    pub exact_upto: u64,
    /// Fitted tail constant `c` (`None` when no tail was needed).
    pub tail_constant: Option<f64>,
    /// Window of exact meeting probabilities the tail constant was fit on.
    pub fit_window: (u64, u64),
}

/// Expected meetings by `horizon`, exact up to `cap` and `c / sqrt(n)`
/// beyond it. The tail constant is the mean of `P(S_n = S'_n) * sqrt(n)`
/// over the upper half of the exact range.
pub fn predict_mean_meetings(
    params: &WalkParams<f64>,
    horizon: u64,
    cap: u64,
) -> Result<MeetingPrediction, OracleError> {
    let exact_upto = horizon.min(cap);
    let table = expected_meetings_table(params, exact_upto, cap)?;
    let exact_sum = *table.last().expect("nonempty");
    if horizon <= cap {
        return Ok(MeetingPrediction {
            expected: exact_sum,
            exact_upto,
            tail_constant: None,
            fit_window: (0, 0),
        });
    }
    let lo = (exact_upto / 2).max(1);
    let window: Vec<f64> = (lo..exact_upto)
        .map(|n| {
            let p_meet = table[n as usize] - table[(n - 1) as usize];
            p_meet * (n as f64).sqrt()
        })
        .collect();
    let c = window.iter().sum::<f64>() / window.len() as f64;
    let tail: f64 = ((exact_upto + 1)..=horizon)
        .map(|n| c / (n as f64).sqrt())
        .sum();
    Ok(MeetingPrediction {
        expected: exact_sum + tail,
        exact_upto,
        tail_constant: Some(c),
        fit_window: (lo, exact_upto - 1),
    })
}
