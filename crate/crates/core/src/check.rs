//! Verification suites behind `erwlab check` and the acceptance tests.
//!
//! Each suite turns one family of limit statements into concrete numeric
//! checks with pinned targets and tolerances. Monte Carlo suites are seeded
//! and deterministic, so a passing configuration stays green.
//!
//! Two bounds in these suites are mathematically over-optimistic and are kept
//! as stated rather than loosened; their rows carry notes explaining why the
//! honest measured value falls outside the bound (see `em-ratio` at strong
//! memory and the `mhat-ks-reject` row).

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::ensemble::{
    estimate_limit_samples, run_pair_ensemble, run_walk_ensemble, EnsembleConfig, EnsembleError,
};
use crate::oracle::{
    exact_pmf, exact_second_moment, expected_meetings_table, moment_series, predict_mean_meetings,
    OracleError, DEFAULT_RANGE_CAP,
};
use crate::stats::{
    fit_power_law, ks_statistic, standard_normal_cdf, StatsError, StreamingMoments, KS_COEFF_1PCT,
};
use crate::walk::WalkParams;

// ---------------------------------------------------------------------------
// Pinned targets and tolerances
// ---------------------------------------------------------------------------

/// Memory-parameter grid for the oracle consistency checks.
pub const ORACLE_GRID_P: [f64; 5] = [0.1, 0.5, 0.6, 0.75, 0.9];
/// Memory-parameter grid for the sampler-equivalence enumeration (the oracle
/// grid plus the antipersistent 0.25).
pub const ENUM_GRID_P: [f64; 6] = [0.1, 0.25, 0.5, 0.6, 0.75, 0.9];
/// First-step grid used by both oracle checks.
pub const GRID_S: [f64; 2] = [0.5, 1.0];
/// Oracle moments are checked for every n up to here.
pub const ORACLE_MOMENT_N_MAX: u64 = 500;
/// Exhaustive enumeration horizon (2^n histories).
pub const ENUM_N_MAX: u64 = 8;

/// Relative agreement between recursion moments and DP-pmf moments.
pub const MOMENT_REL_TOL: f64 = 1e-9;
/// Absolute deviation of pmf mass from 1.
pub const MASS_TOL: f64 = 1e-10;
/// Entrywise agreement between the enumerated and DP-induced pmfs.
pub const ENUM_TOL: f64 = 1e-12;

/// Horizon for the diffusive CLT ensembles.
pub const CLT_HORIZON: u64 = 100_000;
/// Replicas for the diffusive CLT ensembles.
pub const CLT_REPLICAS: u64 = 10_000;
/// Relative band around the limiting variance `1/(3-4p)`.
pub const CLT_VAR_REL_TOL: f64 = 0.05;

/// Replicas for the marginal-regime ensemble.
pub const MARGINAL_REPLICAS: u64 = 5_000;
/// Relative band around the marginal variance target `H_N / log N`.
pub const MARGINAL_VAR_REL_TOL: f64 = 0.10;
/// Monte Carlo moments must land within this many standard errors.
pub const SE_BAND: f64 = 4.0;

/// Window of the log-log slope fit on the oracle series.
pub const SCALING_WINDOW: (u64, u64) = (1_000, 10_000);
/// Points on the geometric fit grid.
pub const SCALING_GRID_POINTS: usize = 33;
/// Absolute slope tolerance around `4p - 3`.
pub const SLOPE_TOL: f64 = 0.05;

/// Replicas for superdiffusive limit sampling.
pub const LIMIT_REPLICAS: u64 = 2_000;
/// Relative band around the exact `E[(S_N - S'_N)^2] / N^(4p-2)`.
pub const MHAT_VAR_REL_TOL: f64 = 0.10;
/// The sample sd must exceed this multiple of its standard error.
pub const SD_SE_RATIO_MIN: f64 = 10.0;

/// Replicas for the meeting-statistics ensembles.
pub const MEETING_REPLICAS: u64 = 1_000;
/// Horizon for the meeting-statistics ensembles.
pub const MEETING_HORIZON: u64 = 100_000;
/// Lower bound on the diffusive meeting-sum growth ratio EM(4000)/EM(2000).
pub const MEETING_RATIO_DIFFUSIVE_MIN: f64 = 1.3;
/// Upper bound on the strong-memory meeting-sum growth ratio (see the note
/// on the check row: the exact value sits above this for every p < 1).
pub const MEETING_RATIO_SUPER_MAX: f64 = 1.1;
/// Last-meeting survival gap, in probability, between steps 1e3 and 1e4.
pub const LAST_MEETING_GAP_MIN: f64 = 0.05;
/// Thresholds for the last-meeting survival fractions.
pub const LAST_MEETING_EARLY: u64 = 1_000;
pub const LAST_MEETING_LATE: u64 = 10_000;

/// Pairs tracked for the iterated-logarithm statistic.
pub const LIL_PAIRS: u64 = 100;
/// Horizon for the iterated-logarithm statistic.
pub const LIL_HORIZON: u64 = 1_000_000;
/// Sanity band for the cross-pair max of `sup (S_n - S'_n)/sqrt(n log log n)`
/// at `p = 1/2` (limit constant 2); scaled by `1/sqrt(3-4p)`-relative factors
/// for other diffusive p.
pub const LIL_BAND: (f64, f64) = (1.2, 3.2);

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// Pass rule for one check row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Criterion {
    /// `|measured - target| <= tol`.
    Within { target: f64, tol: f64 },
    /// `measured <= bound`.
    AtMost { bound: f64 },
    /// `measured >= bound`.
    AtLeast { bound: f64 },
    /// `lo <= measured <= hi`.
    InBand { lo: f64, hi: f64 },
    /// Recorded value, no assertion.
    Informational,
}

impl Criterion {
    pub fn target(&self) -> f64 {
        match *self {
            Criterion::Within { target, .. } => target,
            Criterion::AtMost { bound } | Criterion::AtLeast { bound } => bound,
            Criterion::InBand { lo, hi } => 0.5 * (lo + hi),
            Criterion::Informational => f64::NAN,
        }
    }

    pub fn describe(&self) -> String {
        fn num(v: f64) -> String {
            if v == 0.0 {
                "0".to_string()
            } else if v.abs() < 1e-3 || v.abs() >= 1e6 {
                format!("{v:.3e}")
            } else {
                format!("{v:.6}")
            }
        }
        match *self {
            Criterion::Within { target, tol } => {
                format!("|x - {}| <= {}", num(target), num(tol))
            }
            Criterion::AtMost { bound } => format!("x <= {}", num(bound)),
            Criterion::AtLeast { bound } => format!("x >= {}", num(bound)),
            Criterion::InBand { lo, hi } => format!("{} <= x <= {}", num(lo), num(hi)),
            Criterion::Informational => "recorded".to_string(),
        }
    }
}

/// One row of a suite: what was measured and whether it met its rule.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub suite: &'static str,
    /// Stable identifier for programmatic lookup.
    pub id: &'static str,
    pub name: String,
    pub measured: f64,
    pub criterion: Criterion,
    pub passed: bool,
    /// Context for surprising rows.
    pub note: Option<&'static str>,
}

impl CheckReport {
    fn evaluate(
        suite: &'static str,
        id: &'static str,
        name: impl Into<String>,
        measured: f64,
        criterion: Criterion,
    ) -> Self {
        let passed = match criterion {
            Criterion::Within { target, tol } => (measured - target).abs() <= tol,
            Criterion::AtMost { bound } => measured <= bound,
            Criterion::AtLeast { bound } => measured >= bound,
            Criterion::InBand { lo, hi } => measured >= lo && measured <= hi,
            Criterion::Informational => true,
        };
        Self {
            suite,
            id,
            name: name.into(),
            measured,
            criterion,
            passed,
            note: None,
        }
    }

    fn with_note(mut self, note: &'static str) -> Self {
        self.note = Some(note);
        self
    }

    /// `"PASS"`, `"FAIL"`, or `"INFO"`.
    pub fn status(&self) -> &'static str {
        if matches!(self.criterion, Criterion::Informational) {
            "INFO"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("suite needs at least {need} replicas for its stated precision, got {got}")]
    InsufficientReplicas { need: u64, got: u64 },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Which suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    Oracle,
    Clt,
    Scaling,
    Meeting,
    Limit,
    All,
}

impl Suite {
    pub fn label(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Clt => "clt",
            Suite::Scaling => "scaling",
            Suite::Meeting => "meeting",
            Suite::Limit => "limit",
            Suite::All => "all",
        }
    }
}

/// Seed, worker count and optional replica override shared by the suites.
#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub master_seed: u64,
    /// Replaces each suite's replica count; rejected when below the count
    /// the suite's precision was budgeted for.
    pub replicas_override: Option<u64>,
    /// Worker threads, `0` = all cores. Never affects results.
    pub workers: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            master_seed: 7,
            replicas_override: None,
            workers: 0,
        }
    }
}

impl CheckConfig {
    fn replicas_for(&self, need: u64) -> Result<u64, CheckError> {
        match self.replicas_override {
            None => Ok(need),
            Some(got) if got >= need => Ok(got),
            Some(got) => Err(CheckError::InsufficientReplicas { need, got }),
        }
    }

    fn ensemble(&self, replicas: u64, horizon: u64, seed_offset: u64) -> EnsembleConfig {
        let mut cfg = EnsembleConfig::new(replicas, horizon, self.master_seed.wrapping_add(seed_offset));
        cfg.workers = self.workers;
        cfg
    }
}

/// Run one suite (or all of them plus the determinism probe).
pub fn run_suite(suite: Suite, cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    match suite {
        Suite::Oracle => suite_oracle(),
        Suite::Clt => suite_clt(cfg),
        Suite::Scaling => suite_scaling(cfg),
        Suite::Meeting => suite_meeting(cfg),
        Suite::Limit => suite_limit(cfg),
        Suite::All => {
            let mut all = suite_oracle()?;
            all.extend(suite_clt(cfg)?);
            all.extend(suite_scaling(cfg)?);
            all.extend(suite_meeting(cfg)?);
            all.extend(suite_limit(cfg)?);
            all.extend(suite_determinism(cfg)?);
            Ok(all)
        }
    }
}

// ---------------------------------------------------------------------------
// Oracle suite: self-consistency and sampler equivalence
// ---------------------------------------------------------------------------

/// Law of `S_n` by exhaustive enumeration of the paper-literal sampler.
///
/// Walks the full tree of recall indices and keep/flip decisions with their
/// probabilities, independent of the closed-form conditional step law it is
/// used to validate. Histories are bitmasks (bit `i` set = step `i+1` went
/// up), so `n` is capped at 63; practical use stays at `n <= 8`.
pub fn enumerated_naive_pmf(params: &WalkParams<f64>, n: u64) -> Vec<f64> {
    assert!((1..=20).contains(&n), "enumeration is exponential in n");
    let p = params.p();
    let s = params.s();
    let mut histories: HashMap<u32, f64> = HashMap::new();
    histories.insert(1, s); // bit 0 set: first step up
    histories.insert(0, 1.0 - s);
    for k in 1..n {
        let mut next: HashMap<u32, f64> = HashMap::with_capacity(histories.len() * 2);
        for (&bits, &prob) in &histories {
            for u in 0..k {
                let recalled_up = (bits >> u) & 1 == 1;
                let keep_bits = bits | u32::from(recalled_up) << k;
                let flip_bits = bits | u32::from(!recalled_up) << k;
                let uniform = prob / k as f64;
                *next.entry(keep_bits).or_insert(0.0) += uniform * p;
                *next.entry(flip_bits).or_insert(0.0) += uniform * (1.0 - p);
            }
        }
        histories = next;
    }
    // Position = ups - downs = 2 * popcount - n; index by (pos + n)/2.
    let mut pmf = vec![0.0; n as usize + 1];
    for (bits, prob) in histories {
        pmf[bits.count_ones() as usize] += prob;
    }
    pmf
}

fn suite_oracle() -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "oracle";
    let mut max_mean_err: f64 = 0.0;
    let mut max_second_err: f64 = 0.0;
    let mut max_mass_err: f64 = 0.0;
    for &p in &ORACLE_GRID_P {
        for &s in &GRID_S {
            let params = WalkParams::new(p, s).expect("grid params valid");
            let series = moment_series(&params, ORACLE_MOMENT_N_MAX);
            let mut dp = crate::oracle::ForwardDp::new(&params);
            loop {
                let n = dp.n();
                let (mass, mean, second) = dp.moments();
                max_mass_err = max_mass_err.max((mass - 1.0).abs());
                let mu = series.mean(n);
                let m2 = series.second_moment(n);
                max_mean_err = max_mean_err.max((mean - mu).abs() / mu.abs().max(1.0));
                max_second_err = max_second_err.max((second - m2).abs() / m2.max(1.0));
                if n == ORACLE_MOMENT_N_MAX {
                    break;
                }
                dp.advance();
            }
        }
    }
    let mut reports = vec![
        CheckReport::evaluate(
            SUITE,
            "oracle/moments-mean",
            format!("moment-recursion-vs-pmf mean, n<={ORACLE_MOMENT_N_MAX} (max rel err)"),
            max_mean_err,
            Criterion::AtMost { bound: MOMENT_REL_TOL },
        ),
        CheckReport::evaluate(
            SUITE,
            "oracle/moments-second",
            format!("moment-recursion-vs-pmf second moment, n<={ORACLE_MOMENT_N_MAX} (max rel err)"),
            max_second_err,
            Criterion::AtMost { bound: MOMENT_REL_TOL },
        ),
        CheckReport::evaluate(
            SUITE,
            "oracle/pmf-mass",
            "pmf normalization (max |mass - 1|)",
            max_mass_err,
            Criterion::AtMost { bound: MASS_TOL },
        ),
    ];

    let mut max_enum_err: f64 = 0.0;
    for &p in &ENUM_GRID_P {
        for &s in &GRID_S {
            let params = WalkParams::new(p, s).expect("grid params valid");
            for n in 1..=ENUM_N_MAX {
                let enumerated = enumerated_naive_pmf(&params, n);
                let dp = exact_pmf(&params, n)?;
                for (i, (_, q)) in dp.entries().enumerate() {
                    max_enum_err = max_enum_err.max((q - enumerated[i]).abs());
                }
            }
        }
    }
    reports.push(CheckReport::evaluate(
        SUITE,
        "oracle/sampler-equivalence",
        format!("sampler equivalence by enumeration, n<={ENUM_N_MAX} (max entry err)"),
        max_enum_err,
        Criterion::AtMost { bound: ENUM_TOL },
    ));
    Ok(reports)
}

// ---------------------------------------------------------------------------
// CLT suite: diffusive Gaussian fluctuations
// ---------------------------------------------------------------------------

fn suite_clt(cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "clt";
    let replicas = cfg.replicas_for(CLT_REPLICAS)?;
    let mut reports = Vec::new();
    let cases: [(f64, u64, &'static str, &'static str); 2] = [
        (0.5, 0, "clt/var-p0.5", "clt/ks-p0.5"),
        (0.6, 1, "clt/var-p0.6", "clt/ks-p0.6"),
    ];
    for (p, offset, var_id, ks_id) in cases {
        let params = WalkParams::symmetric(p).expect("valid p");
        let ecfg = cfg.ensemble(replicas, CLT_HORIZON, offset);
        let out = run_walk_ensemble(&params, &ecfg)?;
        let limit_var = 1.0 / (3.0 - 4.0 * p);
        let variance = out.per_checkpoint.last().expect("checkpoint").normalized.variance();
        reports.push(CheckReport::evaluate(
            SUITE,
            var_id,
            format!("variance of S_N/sqrt(N), p={p}, N=1e5, R={replicas}"),
            variance,
            Criterion::Within {
                target: limit_var,
                tol: CLT_VAR_REL_TOL * limit_var,
            },
        ));
        let sigma = limit_var.sqrt();
        let mut standardized: Vec<f64> = out.final_normalized.iter().map(|x| x / sigma).collect();
        standardized.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let ks = ks_statistic(&standardized, standard_normal_cdf, KS_COEFF_1PCT)?;
        reports.push(CheckReport::evaluate(
            SUITE,
            ks_id,
            format!("KS of S_N/sqrt(N) vs N(0, 1/(3-4p)), p={p} (D below 1% threshold)"),
            ks.statistic,
            Criterion::AtMost { bound: ks.threshold },
        ));
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Scaling suite: marginal and superdiffusive growth
// ---------------------------------------------------------------------------

fn harmonic(n: u64) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

fn geometric_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let (lf, hf) = (lo as f64, hi as f64);
    let mut grid: Vec<u64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (lf * (hf / lf).powf(t)).round() as u64
        })
        .collect();
    grid.dedup();
    grid
}

fn suite_scaling(cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "scaling";
    let mut reports = Vec::new();

    // Marginal regime, p = 3/4: E[S_N^2] = N * H_N exactly.
    let marginal_replicas = cfg.replicas_for(MARGINAL_REPLICAS)?;
    let params = WalkParams::symmetric(0.75).expect("valid p");
    let ecfg = cfg.ensemble(marginal_replicas, CLT_HORIZON, 2);
    let out = run_walk_ensemble(&params, &ecfg)?;
    let n = CLT_HORIZON;
    let exact_m2 = n as f64 * harmonic(n);
    debug_assert!((exact_m2 - exact_second_moment(&params, n)).abs() / exact_m2 < 1e-12);
    let squares: Vec<f64> = out
        .final_positions
        .iter()
        .map(|&x| (x as f64) * (x as f64))
        .collect();
    let sq_moments = StreamingMoments::from_slice(&squares);
    reports.push(CheckReport::evaluate(
        SUITE,
        "scaling/marginal-m2",
        format!("marginal MC E[S_N^2] vs N*H_N, p=0.75, N=1e5, R={marginal_replicas} (within 4 se)"),
        sq_moments.mean(),
        Criterion::Within {
            target: exact_m2,
            tol: SE_BAND * sq_moments.std_error(),
        },
    ));
    let marginal_target = harmonic(n) / (n as f64).ln();
    let marginal_var = out.per_checkpoint.last().expect("checkpoint").normalized.variance();
    reports.push(CheckReport::evaluate(
        SUITE,
        "scaling/marginal-var",
        "variance of S_N/sqrt(N log N), p=0.75, N=1e5 vs H_N/log N",
        marginal_var,
        Criterion::Within {
            target: marginal_target,
            tol: MARGINAL_VAR_REL_TOL * marginal_target,
        },
    ));

    // Superdiffusive regime, p = 0.85: E[S_n^2]/n grows like n^(4p-3).
    let p = 0.85;
    let params = WalkParams::symmetric(p).expect("valid p");
    let series = moment_series(&params, SCALING_WINDOW.1);
    let points: Vec<(u64, f64)> = geometric_grid(SCALING_WINDOW.0, SCALING_WINDOW.1, SCALING_GRID_POINTS)
        .into_iter()
        .map(|n| (n, series.second_moment(n) / n as f64))
        .collect();
    let fit = fit_power_law(&points, SCALING_WINDOW)?;
    reports.push(CheckReport::evaluate(
        SUITE,
        "scaling/slope-p0.85",
        format!(
            "log-log slope of E[S_n^2]/n on [{}, {}], p=0.85",
            SCALING_WINDOW.0, SCALING_WINDOW.1
        ),
        fit.slope,
        Criterion::Within {
            target: 4.0 * p - 3.0,
            tol: SLOPE_TOL,
        },
    ));

    // Monte Carlo variance of M-hat against the exact second moment.
    let limit_replicas = cfg.replicas_for(LIMIT_REPLICAS)?;
    let ecfg = cfg.ensemble(limit_replicas, CLT_HORIZON, 3);
    let limits = estimate_limit_samples(&params, &ecfg)?;
    let target = 2.0 * exact_second_moment(&params, CLT_HORIZON)
        / (CLT_HORIZON as f64).powf(4.0 * p - 2.0);
    reports.push(CheckReport::evaluate(
        SUITE,
        "scaling/mhat-var",
        format!("variance of M-hat, p=0.85, N=1e5, R={limit_replicas} vs 2 E[S_N^2]/N^(4p-2)"),
        limits.moments.variance(),
        Criterion::Within {
            target,
            tol: MHAT_VAR_REL_TOL * target,
        },
    ));
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Meeting suite: the p = 3/4 dichotomy
// ---------------------------------------------------------------------------

const EM_RATIO_NOTE: &str = "exact value ~1.22: the expected meeting count of two independent \
     walks diverges like c*N^(3-4p) for every p < 1 (the density of the pair \
     difference near 0 stays positive), so the partial-sum ratio tends to \
     2^(3-4p) ~ 1.23 and no N satisfies this bound; a.s. finiteness of \
     meetings does not make their expected number finite";

fn suite_meeting(cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "meeting";
    let mut reports = Vec::new();

    // Exact dichotomy proxy on the meeting sums.
    let ratio_cases: [(f64, &'static str, Criterion, Option<&'static str>); 2] = [
        (
            0.5,
            "meeting/em-ratio-p0.5",
            Criterion::AtLeast {
                bound: MEETING_RATIO_DIFFUSIVE_MIN,
            },
            None,
        ),
        (
            0.85,
            "meeting/em-ratio-p0.85",
            Criterion::AtMost {
                bound: MEETING_RATIO_SUPER_MAX,
            },
            Some(EM_RATIO_NOTE),
        ),
    ];
    for (p, id, criterion, note) in ratio_cases {
        let params = WalkParams::symmetric(p).expect("valid p");
        let table = expected_meetings_table(&params, 4_000, DEFAULT_RANGE_CAP)?;
        let ratio = table[3_999] / table[1_999];
        let mut report = CheckReport::evaluate(
            SUITE,
            id,
            format!("em-ratio EM(4000)/EM(2000), p={p} (exact oracle)"),
            ratio,
            criterion,
        );
        if let Some(note) = note {
            report = report.with_note(note);
        }
        reports.push(report);
    }

    let replicas = cfg.replicas_for(MEETING_REPLICAS)?;

    // Monte Carlo mean meeting count vs the oracle + sqrt tail at p = 0.5.
    let params = WalkParams::symmetric(0.5).expect("valid p");
    let ecfg = cfg.ensemble(replicas, MEETING_HORIZON, 4);
    let pairs = run_pair_ensemble(&params, &ecfg)?;
    let moments = pairs.meeting_count_moments();
    let prediction = predict_mean_meetings(&params, MEETING_HORIZON, DEFAULT_RANGE_CAP)?;
    reports.push(CheckReport::evaluate(
        SUITE,
        "meeting/mc-mean-p0.5",
        format!(
            "MC mean meeting count, p=0.5, N=1e5, R={replicas} vs oracle+tail (within 4 se)"
        ),
        moments.mean(),
        Criterion::Within {
            target: prediction.expected,
            tol: SE_BAND * moments.std_error(),
        },
    ));

    // Strong memory: the last meeting concentrates early.
    let params = WalkParams::symmetric(0.85).expect("valid p");
    let ecfg = cfg.ensemble(replicas, MEETING_HORIZON, 5);
    let pairs = run_pair_ensemble(&params, &ecfg)?;
    let early = pairs.fraction_last_meeting_after(LAST_MEETING_EARLY);
    let late = pairs.fraction_last_meeting_after(LAST_MEETING_LATE);
    reports.push(CheckReport::evaluate(
        SUITE,
        "meeting/last-meeting-gap-p0.85",
        format!(
            "last-meeting survival drop P(>{LAST_MEETING_EARLY}) - P(>{LAST_MEETING_LATE}), p=0.85, R={replicas}"
        ),
        early - late,
        Criterion::AtLeast {
            bound: LAST_MEETING_GAP_MIN,
        },
    ));
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Limit suite: the superdiffusive pair limit and the LIL statistic
// ---------------------------------------------------------------------------

const MHAT_KS_NOTE: &str = "the law of M-hat at N=1e5 is genuinely non-Gaussian (kurtosis ~2.57) \
     but its KS distance from the variance-matched normal is only ~0.012, \
     below the 1% threshold 0.0364 at R=2000 even in the infinite-sample \
     limit; this test cannot reject at the stated size";

fn suite_limit(cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "limit";
    let mut reports = Vec::new();

    // Non-degeneracy of M-hat at p = 0.85.
    let replicas = cfg.replicas_for(LIMIT_REPLICAS)?;
    let params = WalkParams::symmetric(0.85).expect("valid p");
    let ecfg = cfg.ensemble(replicas, CLT_HORIZON, 6);
    let limits = estimate_limit_samples(&params, &ecfg)?;
    let mean = limits.moments.mean();
    let sd = limits.moments.std_dev();
    let mut standardized: Vec<f64> = limits.samples.iter().map(|x| (x - mean) / sd).collect();
    standardized.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let ks = ks_statistic(&standardized, standard_normal_cdf, KS_COEFF_1PCT)?;
    reports.push(
        CheckReport::evaluate(
            SUITE,
            "limit/mhat-ks-reject",
            format!("mhat-ks-reject: KS of M-hat vs fitted normal, p=0.85, R={replicas} (D above 1% threshold)"),
            ks.statistic,
            Criterion::AtLeast { bound: ks.threshold },
        )
        .with_note(MHAT_KS_NOTE),
    );
    reports.push(CheckReport::evaluate(
        SUITE,
        "limit/mhat-mean",
        "mean of M-hat (within 4 se of 0, symmetric start)",
        mean,
        Criterion::Within {
            target: 0.0,
            tol: SE_BAND * limits.moments.std_error(),
        },
    ));
    // se(sd) by the kurtosis-aware delta method: sd * sqrt((kappa-1)/(4R)).
    let r = limits.samples.len() as f64;
    let m2 = limits.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r;
    let m4 = limits.samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let kurtosis = m4 / (m2 * m2);
    let sd_over_se = (4.0 * r / (kurtosis - 1.0)).sqrt();
    reports.push(CheckReport::evaluate(
        SUITE,
        "limit/mhat-sd-over-se",
        "sd of M-hat over its standard error (not concentrated at 0)",
        sd_over_se,
        Criterion::AtLeast {
            bound: SD_SE_RATIO_MIN,
        },
    ));

    // Iterated-logarithm sanity band; explicitly not a tight reproduction.
    let lil_pairs = cfg.replicas_for(LIL_PAIRS)?;
    let lil_cases: [(u64, f64, &'static str, &'static str); 2] = [
        (7, 0.5, "limit/lil-band-p0.5", "limit/lil-sup-ii-p0.5"),
        (8, 0.6, "limit/lil-band-p0.6", "limit/lil-sup-ii-p0.6"),
    ];
    for (offset, p, band_id, info_id) in lil_cases {
        let params = WalkParams::symmetric(p).expect("valid p");
        let mut ecfg = cfg.ensemble(lil_pairs, LIL_HORIZON, offset);
        ecfg.checkpoints = vec![LIL_HORIZON];
        let pairs = run_pair_ensemble(&params, &ecfg)?;
        let max_sup_plus = pairs
            .records
            .iter()
            .map(|rec| rec.sup_i.plus)
            .fold(f64::NEG_INFINITY, f64::max);
        // Band scale relative to the p = 1/2 constant: (2/sqrt(3-4p)) / 2.
        let scale = 1.0 / (3.0 - 4.0 * p).sqrt();
        reports.push(CheckReport::evaluate(
            SUITE,
            band_id,
            format!(
                "lil-band: max over {lil_pairs} pairs of sup (S-S')/sqrt(n log log n), p={p}, N=1e6"
            ),
            max_sup_plus,
            Criterion::InBand {
                lo: LIL_BAND.0 * scale,
                hi: LIL_BAND.1 * scale,
            },
        ));
        let max_sup_ii = pairs
            .records
            .iter()
            .map(|rec| rec.sup_ii.plus)
            .fold(f64::NEG_INFINITY, f64::max);
        reports.push(CheckReport::evaluate(
            SUITE,
            info_id,
            format!(
                "max sup (S-S')/sqrt(n log n logloglog n), p={p} (triple-log regime: recorded only)"
            ),
            max_sup_ii,
            Criterion::Informational,
        ));
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Determinism probe (part of `all`)
// ---------------------------------------------------------------------------

fn suite_determinism(cfg: &CheckConfig) -> Result<Vec<CheckReport>, CheckError> {
    const SUITE: &str = "determinism";
    let params = WalkParams::symmetric(0.6).expect("valid p");
    let mut one = cfg.ensemble(256, 2_000, 9);
    one.checkpoints = vec![500, 2_000];
    let mut four = one.clone();
    one.workers = 1;
    four.workers = 4;
    let walk_same = run_walk_ensemble(&params, &one)? == run_walk_ensemble(&params, &four)?;
    let pair_same = run_pair_ensemble(&params, &one)? == run_pair_ensemble(&params, &four)?;
    Ok(vec![
        CheckReport::evaluate(
            SUITE,
            "determinism/walk-workers",
            "walk ensembles bit-identical across workers {1, 4}",
            f64::from(u8::from(walk_same)),
            Criterion::AtLeast { bound: 1.0 },
        ),
        CheckReport::evaluate(
            SUITE,
            "determinism/pair-workers",
            "pair ensembles bit-identical across workers {1, 4}",
            f64::from(u8::from(pair_same)),
            Criterion::AtLeast { bound: 1.0 },
        ),
    ])
}
