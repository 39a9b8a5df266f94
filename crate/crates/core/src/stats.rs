//! Estimators and tests backing the verification suites: mergeable streaming
//! moments, variance confidence intervals, one-sample Kolmogorov-Smirnov,
//! log-log power-law fits, nearest-rank quantiles and running suprema.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

/// Asymptotic Kolmogorov constant at the 1% level: threshold `1.628/sqrt(n)`.
pub const KS_COEFF_1PCT: f64 = 1.628;
/// Asymptotic Kolmogorov constant at the 5% level: threshold `1.358/sqrt(n)`.
pub const KS_COEFF_5PCT: f64 = 1.358;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample must be sorted in nondecreasing order")]
    Unsorted,
    #[error("sample of size {got} too small; need at least {need}")]
    SampleTooSmall { got: usize, need: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("power-law fit needs positive values; got y = {0} in the window")]
    NonPositiveValue(f64),
    #[error("power-law fit window holds {0} points; need at least 3")]
    WindowTooSmall(usize),
}

/// Single-pass count/mean/M2/min/max accumulator (Welford update, Chan
/// merge). Merging two accumulators agrees with accumulating the
/// concatenated data to ~1e-9 relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamingMoments<F: Scalar = f64> {
    count: u64,
    mean: F,
    m2: F,
    min: F,
    max: F,
}

impl<F: Scalar> Default for StreamingMoments<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> StreamingMoments<F> {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: F::zero(),
            m2: F::zero(),
            min: F::infinity(),
            max: F::neg_infinity(),
        }
    }

    pub fn from_slice(xs: &[F]) -> Self {
        let mut acc = Self::new();
        for &x in xs {
            acc.update(x);
        }
        acc
    }

    pub fn update(&mut self, x: F) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / F::from_count(self.count);
        let delta2 = x - self.mean;
        self.m2 += delta * delta2;
        if x < self.min {
            self.min = x;
        }
        if x > self.max {
            self.max = x;
        }
    }

    pub fn merge(a: &Self, b: &Self) -> Self {
        if a.count == 0 {
            return *b;
        }
        if b.count == 0 {
            return *a;
        }
        let count = a.count + b.count;
        let cf = F::from_count(count);
        let delta = b.mean - a.mean;
        let mean = a.mean + delta * F::from_count(b.count) / cf;
        let m2 = a.m2
            + b.m2
            + delta * delta * F::from_count(a.count) * F::from_count(b.count) / cf;
        Self {
            count,
            mean,
            m2,
            min: if a.min < b.min { a.min } else { b.min },
            max: if a.max > b.max { a.max } else { b.max },
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> F {
        if self.count == 0 {
            F::nan()
        } else {
            self.mean
        }
    }

    pub fn m2(&self) -> F {
        self.m2
    }

    pub fn min(&self) -> F {
        if self.count == 0 {
            F::nan()
        } else {
            self.min
        }
    }

    pub fn max(&self) -> F {
        if self.count == 0 {
            F::nan()
        } else {
            self.max
        }
    }

    /// Unbiased sample variance `M2 / (count - 1)`; `NaN` below two samples.
    pub fn variance(&self) -> F {
        if self.count < 2 {
            F::nan()
        } else {
            self.m2 / F::from_count(self.count - 1)
        }
    }

    pub fn std_dev(&self) -> F {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> F {
        self.std_dev() / F::from_count(self.count).sqrt()
    }

    /// Second moment about zero, `E[X^2]`-hat.
    pub fn second_moment(&self) -> F {
        if self.count == 0 {
            F::nan()
        } else {
            self.m2 / F::from_count(self.count) + self.mean * self.mean
        }
    }
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().cdf(x)
}

/// Standard normal quantile.
pub fn standard_normal_quantile(q: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().inverse_cdf(q)
}

/// Normal-approximation confidence interval for the variance:
/// `variance * (1 +/- z sqrt(2/(count-1)))`, truncated at zero.
///
/// Assumes the accumulated samples are approximately normal; the suites only
/// apply it to statistics with Gaussian limits.
pub fn variance_ci<F: Scalar>(
    moments: &StreamingMoments<F>,
    confidence: F,
) -> Result<(F, F), StatsError> {
    if moments.count() < 30 {
        return Err(StatsError::SampleTooSmall {
            got: moments.count() as usize,
            need: 30,
        });
    }
    let variance = moments.variance();
    let z = F::from_real(standard_normal_quantile(
        0.5 + confidence.to_real() / 2.0,
    ));
    let half_width = z * (F::from_real(2.0) / F::from_count(moments.count() - 1)).sqrt();
    let lo = variance * (F::one() - half_width);
    let hi = variance * (F::one() + half_width);
    Ok((lo.max(F::zero()), hi))
}

/// One-sample Kolmogorov-Smirnov result against a reference CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult<F: Scalar = f64> {
    /// `D = max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)`.
    pub statistic: F,
    pub sample_size: usize,
    /// Asymptotic threshold at the chosen level.
    pub threshold: F,
}

impl<F: Scalar> KsResult<F> {
    pub fn rejects(&self) -> bool {
        self.statistic > self.threshold
    }
}

/// One-sample KS statistic of a sorted sample against `cdf`, with the
/// asymptotic threshold `coeff / sqrt(n)` (see [`KS_COEFF_1PCT`]).
pub fn ks_statistic<F: Scalar>(
    sorted: &[F],
    cdf: impl Fn(F) -> F,
    threshold_coeff: F,
) -> Result<KsResult<F>, StatsError> {
    if sorted.len() < 10 {
        return Err(StatsError::SampleTooSmall {
            got: sorted.len(),
            need: 10,
        });
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(StatsError::Unsorted);
    }
    let n = F::from_count(sorted.len() as u64);
    let mut d = F::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = F::from_count(i as u64 + 1) / n - f;
        let lo = f - F::from_count(i as u64) / n;
        if hi > d {
            d = hi;
        }
        if lo > d {
            d = lo;
        }
    }
    Ok(KsResult {
        statistic: d,
        sample_size: sorted.len(),
        threshold: threshold_coeff / n.sqrt(),
    })
}

/// Least-squares fit of `log y` on `log n` over a window of `(n, y)` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit<F: Scalar = f64> {
    pub slope: F,
    pub intercept: F,
    pub residual_ss: F,
    pub window: (u64, u64),
    pub points: usize,
}

/// Fit `y ~ exp(intercept) * n^slope` on the points with `n` inside
/// `window` (inclusive). Needs at least three in-window points, all with
/// positive `y`.
pub fn fit_power_law<F: Scalar>(
    points: &[(u64, F)],
    window: (u64, u64),
) -> Result<PowerLawFit<F>, StatsError> {
    let in_window: Vec<(F, F)> = points
        .iter()
        .filter(|(n, _)| (window.0..=window.1).contains(n))
        .map(|&(n, y)| {
            if y <= F::zero() {
                Err(StatsError::NonPositiveValue(y.to_real()))
            } else {
                Ok((F::from_count(n).ln(), y.ln()))
            }
        })
        .collect::<Result<_, _>>()?;
    if in_window.len() < 3 {
        return Err(StatsError::WindowTooSmall(in_window.len()));
    }
    let m = F::from_count(in_window.len() as u64);
    let sx = in_window.iter().fold(F::zero(), |a, &(x, _)| a + x) / m;
    let sy = in_window.iter().fold(F::zero(), |a, &(_, y)| a + y) / m;
    let sxx = in_window
        .iter()
        .fold(F::zero(), |a, &(x, _)| a + (x - sx) * (x - sx));
    let sxy = in_window
        .iter()
        .fold(F::zero(), |a, &(x, y)| a + (x - sx) * (y - sy));
    let slope = sxy / sxx;
    let intercept = sy - slope * sx;
    let residual_ss = in_window.iter().fold(F::zero(), |a, &(x, y)| {
        let r = y - (intercept + slope * x);
        a + r * r
    });
    Ok(PowerLawFit {
        slope,
        intercept,
        residual_ss,
        window,
        points: in_window.len(),
    })
}

/// Running one-sided suprema of `+value/normalizer` and `-value/normalizer`.
///
/// Monotone nondecreasing in the stream prefix; empty streams report `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunningSup<F: Scalar = f64> {
    pub sup_plus: F,
    pub sup_minus: F,
    pub samples: u64,
}

impl<F: Scalar> Default for RunningSup<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> RunningSup<F> {
    pub fn new() -> Self {
        Self {
            sup_plus: F::neg_infinity(),
            sup_minus: F::neg_infinity(),
            samples: 0,
        }
    }

    pub fn observe(&mut self, value: F, normalizer: F) {
        // Canonical zeros keep the +/- streams bitwise symmetric.
        fn canon<F: Scalar>(x: F) -> F {
            if x == F::zero() {
                F::zero()
            } else {
                x
            }
        }
        let ratio = canon(value / normalizer);
        if ratio > self.sup_plus {
            self.sup_plus = ratio;
        }
        let negated = canon(-ratio);
        if negated > self.sup_minus {
            self.sup_minus = negated;
        }
        self.samples += 1;
    }
}

/// Suprema of `+diff/normalizer` and `-diff/normalizer` over the stream
/// entries with `n >= n_min`. `normalizer` is evaluated per step and must be
/// positive on the range (callers pick `n_min` inside its domain).
pub fn running_sup<F: Scalar>(
    series: impl IntoIterator<Item = (u64, i64)>,
    normalizer: impl Fn(u64) -> F,
    n_min: u64,
) -> RunningSup<F> {
    let mut sup = RunningSup::new();
    for (n, diff) in series {
        if n >= n_min {
            sup.observe(F::from_signed(diff), normalizer(n));
        }
    }
    sup
}

/// Nearest-rank quantile of an unsorted sample; `q = 0` is the minimum and
/// `q = 1` the maximum. No interpolation, so results are platform-stable.
pub fn empirical_quantile<F: Scalar>(sample: &[F], q: F) -> Result<F, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted: Vec<F> = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile input must not contain NaN"));
    let n = sorted.len();
    let rank = (q.to_real() * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_single_update() {
        let mut acc = StreamingMoments::<f64>::new();
        acc.update(3.0);
        assert_eq!(acc.count(), 1);
        assert_relative_eq!(acc.mean(), 3.0);
        assert_relative_eq!(acc.m2(), 0.0);
        assert_relative_eq!(acc.min(), 3.0);
        assert_relative_eq!(acc.max(), 3.0);
    }

    #[test]
    fn moments_small_sample() {
        let acc = StreamingMoments::from_slice(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(acc.mean(), 2.0);
        assert_relative_eq!(acc.variance(), 1.0);
        assert_relative_eq!(acc.min(), 1.0);
        assert_relative_eq!(acc.max(), 3.0);
    }

    #[test]
    fn moments_alternating_signs() {
        // 1e6 alternating +/-1: mean 0, sample variance n/(n-1).
        let mut acc = StreamingMoments::<f64>::new();
        for i in 0..1_000_000u64 {
            acc.update(if i % 2 == 0 { 1.0 } else { -1.0 });
        }
        assert_relative_eq!(acc.mean(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(acc.variance(), 1e6 / (1e6 - 1.0), epsilon = 1e-9);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let acc = StreamingMoments::from_slice(&[4.0, 5.0, 6.5]);
        let empty = StreamingMoments::new();
        assert_eq!(StreamingMoments::merge(&acc, &empty), acc);
        assert_eq!(StreamingMoments::merge(&empty, &acc), acc);
    }

    #[test]
    fn merge_equals_concatenation() {
        let a = StreamingMoments::from_slice(&[1.0, 2.0]);
        let b = StreamingMoments::from_slice(&[3.0]);
        let merged = StreamingMoments::merge(&a, &b);
        let full = StreamingMoments::from_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(merged.count(), full.count());
        assert_relative_eq!(merged.mean(), full.mean(), epsilon = 1e-12);
        assert_relative_eq!(merged.variance(), full.variance(), epsilon = 1e-12);
        assert_relative_eq!(merged.min(), 1.0);
        assert_relative_eq!(merged.max(), 3.0);
    }

    #[test]
    fn second_moment_about_zero() {
        let acc = StreamingMoments::from_slice(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(acc.second_moment(), (1.0 + 4.0 + 9.0) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_ci_example() {
        // count 1e4, variance 1, 95%: ~[0.9723, 1.0277].
        let mut acc = StreamingMoments::<f64>::new();
        for i in 0..10_000u64 {
            acc.update(if i % 2 == 0 { 1.0 } else { -1.0 });
        }
        let scale = acc.variance();
        let (lo, hi) = variance_ci(&acc, 0.95).unwrap();
        assert_relative_eq!(lo / scale, 0.97228, epsilon = 1e-4);
        assert_relative_eq!(hi / scale, 1.02772, epsilon = 1e-4);
    }

    #[test]
    fn variance_ci_degenerate_cases() {
        let mut acc = StreamingMoments::<f64>::new();
        for i in 0..100u64 {
            acc.update(i as f64);
        }
        let (lo, hi) = variance_ci(&acc, 0.0).unwrap();
        assert_relative_eq!(lo, acc.variance());
        assert_relative_eq!(hi, acc.variance());

        let constant = StreamingMoments::from_slice(&vec![2.0; 50]);
        let (lo, hi) = variance_ci(&constant, 0.95).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));

        let short = StreamingMoments::from_slice(&[1.0, 2.0]);
        assert!(variance_ci(&short, 0.95).is_err());
    }

    #[test]
    fn ks_plotting_positions() {
        // Samples at F^{-1}((i - 0.5)/n) give D = 0.5/n exactly.
        let n = 100;
        let sample: Vec<f64> = (1..=n)
            .map(|i| standard_normal_quantile((i as f64 - 0.5) / n as f64))
            .collect();
        let ks = ks_statistic(&sample, standard_normal_cdf, KS_COEFF_1PCT).unwrap();
        // Slack for the quantile/cdf roundtrip error of the normal helpers.
        assert_relative_eq!(ks.statistic, 0.5 / n as f64, epsilon = 1e-7);
        assert!(!ks.rejects());
    }

    #[test]
    fn ks_point_mass_at_median() {
        let sample = vec![0.0; 64];
        let ks = ks_statistic(&sample, standard_normal_cdf, KS_COEFF_1PCT).unwrap();
        assert_relative_eq!(ks.statistic, 0.5, epsilon = 1e-12);
        assert!(ks.rejects());
    }

    #[test]
    fn ks_rejects_unsorted_and_small() {
        assert!(matches!(
            ks_statistic(&[3.0, 1.0, 2.0, 0.0, 5.0, 4.0, 6.0, 7.0, 8.0, 9.0],
                standard_normal_cdf, KS_COEFF_1PCT),
            Err(StatsError::Unsorted)
        ));
        assert!(matches!(
            ks_statistic(&[1.0, 2.0], standard_normal_cdf, KS_COEFF_1PCT),
            Err(StatsError::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn ks_seeded_normal_sample_passes() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31415);
        let normal = rand_distr::StandardNormal;
        let mut sample: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = ks_statistic(&sample, standard_normal_cdf, KS_COEFF_1PCT).unwrap();
        assert_relative_eq!(ks.threshold, 0.0230234, epsilon = 1e-6);
        assert!(
            !ks.rejects(),
            "seeded normal sample rejected: D = {} > {}",
            ks.statistic,
            ks.threshold
        );
    }

    #[test]
    fn power_law_exact_recovery() {
        let points: Vec<(u64, f64)> = (1..=200).map(|n| (n, 4.0 * (n as f64).powi(2))).collect();
        let fit = fit_power_law(&points, (10, 150)).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 4.0f64.ln(), epsilon = 1e-12);
        assert!(fit.residual_ss < 1e-20);
    }

    #[test]
    fn power_law_constant_series() {
        let points: Vec<(u64, f64)> = (1..=50).map(|n| (n, 2.5)).collect();
        let fit = fit_power_law(&points, (1, 50)).unwrap();
        assert_relative_eq!(fit.slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn power_law_errors() {
        let points = vec![(1u64, 1.0f64), (2, 0.0), (3, 2.0), (4, 3.0)];
        assert!(matches!(
            fit_power_law(&points, (1, 4)),
            Err(StatsError::NonPositiveValue(_))
        ));
        let points = vec![(1u64, 1.0f64), (2, 2.0)];
        assert!(matches!(
            fit_power_law(&points, (1, 4)),
            Err(StatsError::WindowTooSmall(2))
        ));
    }

    #[test]
    fn running_sup_examples() {
        // Constant zero difference: (0, 0).
        let sup = running_sup((1..=100).map(|n| (n, 0i64)), |_| 1.0f64, 1);
        assert_eq!((sup.sup_plus, sup.sup_minus), (0.0, 0.0));

        // A single value equal to the normalizer: sup_plus = 1.
        let series = vec![(5u64, 0i64), (6, 12), (7, 0)];
        let sup = running_sup(series, |_| 12.0f64, 1);
        assert_relative_eq!(sup.sup_plus, 1.0);
        assert_relative_eq!(sup.sup_minus, 0.0);
    }

    #[test]
    fn running_sup_monotone_in_prefix() {
        let series: Vec<(u64, i64)> = (1..=500u64).map(|n| (n, (n as i64 % 17) - 8)).collect();
        let mut prev_plus = f64::NEG_INFINITY;
        for cut in [10usize, 50, 200, 500] {
            let sup = running_sup(series[..cut].iter().copied(), |n| (n as f64).sqrt(), 1);
            assert!(sup.sup_plus >= prev_plus);
            prev_plus = sup.sup_plus;
        }
    }

    #[test]
    fn quantile_examples() {
        let xs = [1.0f64, 2.0, 3.0, 4.0];
        assert_relative_eq!(empirical_quantile(&xs, 0.5).unwrap(), 2.0);
        assert_relative_eq!(empirical_quantile(&xs, 0.0).unwrap(), 1.0);
        assert_relative_eq!(empirical_quantile(&xs, 1.0).unwrap(), 4.0);
        let shuffled = [4.0f64, 1.0, 3.0, 2.0];
        assert_relative_eq!(empirical_quantile(&shuffled, 0.5).unwrap(), 2.0);
        assert!(empirical_quantile::<f64>(&[], 0.5).is_err());
    }
}
