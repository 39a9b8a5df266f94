//! Memory-parameter regimes and their normalizing sequences.
//!
//! The walk is diffusive for `p < 3/4`, marginally superdiffusive at
//! `p = 3/4`, and superdiffusive for `p > 3/4`. Each regime has one
//! normalizer for a single walk and one for the difference of two
//! independent walks; all logarithms are natural.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Long-time regime of the walk, a total function of the memory parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `p < 3/4`: `S_n / sqrt(n)` has a Gaussian limit with variance
    /// `1 / (3 - 4p)`.
    Diffusive,
    /// `p = 3/4`: `S_n / sqrt(n log n)` has a standard Gaussian limit.
    Marginal,
    /// `p > 3/4`: `S_n / n^(2p-1)` converges a.s. to a non-Gaussian limit.
    Superdiffusive,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Diffusive => "diffusive",
            Regime::Marginal => "marginal",
            Regime::Superdiffusive => "superdiffusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegimeError {
    /// The normalizer is zero or imaginary at this step count.
    #[error("{normalizer} normalizer undefined at n = {n}; needs n >= {min_n}")]
    OutOfDomain {
        normalizer: &'static str,
        n: u64,
        min_n: u64,
    },
}

/// Classify `p` against `3/4` exactly on the parsed value.
///
/// `0.75` is dyadic, so both scalar lanes represent it exactly and a parsed
/// `p = 0.75` is Marginal rather than falling to either side by rounding.
pub fn classify_regime<F: Scalar>(p: F) -> Regime {
    let three_quarters = F::from_real(0.75);
    if p < three_quarters {
        Regime::Diffusive
    } else if p == three_quarters {
        Regime::Marginal
    } else {
        Regime::Superdiffusive
    }
}

/// Single-walk normalizer: `sqrt(n)`, `sqrt(n log n)`, or `n^(2p-1)`.
pub fn walk_normalizer<F: Scalar>(regime: Regime, p: F, n: u64) -> Result<F, RegimeError> {
    let nf = F::from_count(n);
    match regime {
        Regime::Diffusive => {
            if n < 1 {
                return Err(RegimeError::OutOfDomain {
                    normalizer: "sqrt(n)",
                    n,
                    min_n: 1,
                });
            }
            Ok(nf.sqrt())
        }
        Regime::Marginal => {
            if n < 2 {
                return Err(RegimeError::OutOfDomain {
                    normalizer: "sqrt(n log n)",
                    n,
                    min_n: 2,
                });
            }
            Ok((nf * nf.ln()).sqrt())
        }
        Regime::Superdiffusive => {
            if n < 1 {
                return Err(RegimeError::OutOfDomain {
                    normalizer: "n^(2p-1)",
                    n,
                    min_n: 1,
                });
            }
            let exponent = F::from_real(2.0) * p - F::one();
            Ok(nf.powf(exponent))
        }
    }
}

/// Smallest `n` at which the pair-difference normalizer is positive.
///
/// Diffusive: `log log n > 0` once `log n > 1`, i.e. `n >= 3`. Marginal:
/// `log log log n > 0` once `log log n > 1`, i.e. `n > e^e ~ 15.15`, so
/// `n >= 16`.
pub fn diff_normalizer_min_n(regime: Regime) -> u64 {
    match regime {
        Regime::Diffusive => 3,
        Regime::Marginal => 16,
        Regime::Superdiffusive => 1,
    }
}

/// Pair-difference normalizer: `sqrt(n log log n)`,
/// `sqrt(n log n log log log n)`, or `n^(2p-1)`.
pub fn diff_normalizer<F: Scalar>(regime: Regime, p: F, n: u64) -> Result<F, RegimeError> {
    let min_n = diff_normalizer_min_n(regime);
    if n < min_n {
        return Err(RegimeError::OutOfDomain {
            normalizer: match regime {
                Regime::Diffusive => "sqrt(n log log n)",
                Regime::Marginal => "sqrt(n log n log log log n)",
                Regime::Superdiffusive => "n^(2p-1)",
            },
            n,
            min_n,
        });
    }
    let nf = F::from_count(n);
    match regime {
        Regime::Diffusive => Ok((nf * nf.ln().ln()).sqrt()),
        Regime::Marginal => Ok((nf * nf.ln() * nf.ln().ln().ln()).sqrt()),
        Regime::Superdiffusive => {
            let exponent = F::from_real(2.0) * p - F::one();
            Ok(nf.powf(exponent))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classification_is_exact_at_three_quarters() {
        assert_eq!(classify_regime(0.5f64), Regime::Diffusive);
        assert_eq!(classify_regime(0.75f64), Regime::Marginal);
        assert_eq!(classify_regime(0.85f64), Regime::Superdiffusive);
        // Same on the f32 lane: 0.75 is dyadic.
        assert_eq!(classify_regime(0.75f32), Regime::Marginal);
        assert_eq!(classify_regime(0.7499999f32), Regime::Diffusive);
    }

    #[test]
    fn walk_normalizer_values() {
        assert_relative_eq!(
            walk_normalizer(Regime::Diffusive, 0.5f64, 100).unwrap(),
            10.0
        );
        assert_relative_eq!(
            walk_normalizer(Regime::Marginal, 0.75f64, 7).unwrap(),
            (7.0f64 * 7.0f64.ln()).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            walk_normalizer(Regime::Marginal, 0.75f64, 7).unwrap(),
            3.690714,
            epsilon = 1e-6
        );
        assert_relative_eq!(
            walk_normalizer(Regime::Superdiffusive, 0.85f64, 10_000).unwrap(),
            630.957344,
            epsilon = 1e-6
        );
    }

    #[test]
    fn walk_normalizer_marginal_domain() {
        assert!(walk_normalizer(Regime::Marginal, 0.75f64, 1).is_err());
        assert!(walk_normalizer(Regime::Marginal, 0.75f64, 2).is_ok());
    }

    #[test]
    fn diff_normalizer_values() {
        // sqrt(1e6 * log log 1e6) = sqrt(1e6 * 2.6258...) ~ 1620.4
        assert_relative_eq!(
            diff_normalizer(Regime::Diffusive, 0.5f64, 1_000_000).unwrap(),
            1620.4,
            epsilon = 0.05
        );
        assert_relative_eq!(
            diff_normalizer(Regime::Superdiffusive, 0.8f64, 10_000).unwrap(),
            251.188643,
            epsilon = 1e-6
        );
        // sqrt(n log n log log log n) at n = 1e7:
        // log 1e7 = 16.1181, log log = 2.78012, log log log = 1.02249.
        let n = 10_000_000u64;
        let expect = (1e7 * (1e7f64).ln() * (1e7f64).ln().ln().ln()).sqrt();
        assert_relative_eq!(
            diff_normalizer(Regime::Marginal, 0.75f64, n).unwrap(),
            expect,
            epsilon = 1e-9
        );
        assert_relative_eq!(expect, 12837.3, epsilon = 0.05);
    }

    #[test]
    fn diff_normalizer_domains() {
        assert!(diff_normalizer(Regime::Diffusive, 0.5f64, 2).is_err());
        assert!(diff_normalizer(Regime::Diffusive, 0.5f64, 3).unwrap() > 0.0);
        assert!(diff_normalizer(Regime::Marginal, 0.75f64, 15).is_err());
        assert!(diff_normalizer(Regime::Marginal, 0.75f64, 16).unwrap() > 0.0);
        assert!(diff_normalizer(Regime::Superdiffusive, 0.9f64, 1).unwrap() > 0.0);
    }

    #[test]
    fn normalizers_strictly_increasing() {
        for (regime, p) in [
            (Regime::Diffusive, 0.5f64),
            (Regime::Marginal, 0.75),
            (Regime::Superdiffusive, 0.85),
        ] {
            let start = diff_normalizer_min_n(regime).max(2);
            let mut prev = walk_normalizer(regime, p, start).unwrap();
            let mut prev_diff = diff_normalizer(regime, p, start).unwrap();
            for n in (start + 1)..(start + 200) {
                let cur = walk_normalizer(regime, p, n).unwrap();
                let cur_diff = diff_normalizer(regime, p, n).unwrap();
                assert!(cur > prev, "walk normalizer not increasing at n={n}");
                assert!(cur_diff > prev_diff, "diff normalizer not increasing at n={n}");
                prev = cur;
                prev_diff = cur_diff;
            }
        }
    }
}
