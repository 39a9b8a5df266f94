//! Command implementations: resolved configurations, execution, and the
//! check-table printer.
//!
//! Each file-writing command is captured by a [`RunConfig`] value that is
//! serialized into the manifest; `rerun` deserializes it and calls the same
//! execution path, which is what makes manifest replays bit-identical.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use erwlab::check::{run_suite, CheckConfig, CheckReport, Suite};
use erwlab::ensemble::{
    estimate_limit_samples, run_pair_ensemble, run_walk_ensemble, EnsembleConfig,
};
use erwlab::oracle::{
    exact_diff_pmf, exact_pmf, expected_meetings_table, moment_series, predict_mean_meetings,
    MeetingPrediction, DEFAULT_RANGE_CAP,
};
use erwlab::regime::Regime;
use erwlab::walk::WalkParams;

use crate::manifest::RunManifest;
use crate::output::{Format, Table};

/// Which oracle tables to dump.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum What {
    Pmf,
    Moments,
    Meet,
    Diff,
    #[default]
    All,
}

/// Fully resolved configuration of one file-writing command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Oracle {
        p: f64,
        s: f64,
        n: u64,
        what: What,
        format: Format,
    },
    Ensemble {
        p: f64,
        s: f64,
        horizon: u64,
        replicas: u64,
        checkpoints: Vec<u64>,
        master_seed: u64,
        workers: usize,
        n_min_lil: u64,
        budget: u64,
        format: Format,
    },
    Pair {
        p: f64,
        s: f64,
        horizon: u64,
        replicas: u64,
        checkpoints: Vec<u64>,
        master_seed: u64,
        workers: usize,
        n_min_lil: u64,
        budget: u64,
        format: Format,
    },
}

fn ensemble_config(
    replicas: u64,
    horizon: u64,
    checkpoints: &[u64],
    master_seed: u64,
    workers: usize,
    n_min_lil: u64,
    budget: u64,
) -> EnsembleConfig {
    let mut cfg = EnsembleConfig::new(replicas, horizon, master_seed);
    cfg.checkpoints = checkpoints.to_vec();
    cfg.workers = workers;
    cfg.n_min_lil = n_min_lil;
    cfg.budget = budget;
    cfg
}

/// Execute a resolved command under `out_dir`, write its tables and
/// manifest, and print a one-line summary.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let started = chrono::Utc::now().to_rfc3339();
    let (outputs, tail_fit, summary) = match config {
        RunConfig::Oracle { p, s, n, what, format } => run_oracle(*p, *s, *n, *what, *format, out_dir)?,
        RunConfig::Ensemble {
            p,
            s,
            horizon,
            replicas,
            checkpoints,
            master_seed,
            workers,
            n_min_lil,
            budget,
            format,
        } => {
            let params = WalkParams::new(*p, *s)?;
            let cfg = ensemble_config(
                *replicas, *horizon, checkpoints, *master_seed, *workers, *n_min_lil, *budget,
            );
            run_ensemble(&params, &cfg, *format, out_dir)?
        }
        RunConfig::Pair {
            p,
            s,
            horizon,
            replicas,
            checkpoints,
            master_seed,
            workers,
            n_min_lil,
            budget,
            format,
        } => {
            let params = WalkParams::new(*p, *s)?;
            let cfg = ensemble_config(
                *replicas, *horizon, checkpoints, *master_seed, *workers, *n_min_lil, *budget,
            );
            run_pair(&params, &cfg, *format, out_dir)?
        }
    };
    let manifest = RunManifest::new(config.clone(), started, tail_fit, &outputs)?;
    let manifest_path = manifest.write(out_dir)?;
    println!("{summary}");
    println!(
        "wrote {} data file(s) + {} under {}",
        outputs.len(),
        manifest_path.file_name().unwrap().to_string_lossy(),
        out_dir.display()
    );
    Ok(())
}

type CommandOutput = (Vec<PathBuf>, Option<MeetingPrediction>, String);

fn run_oracle(
    p: f64,
    s: f64,
    n: u64,
    what: What,
    format: Format,
    out_dir: &Path,
) -> Result<CommandOutput> {
    let params = WalkParams::new(p, s)?;
    let mut outputs = Vec::new();
    let mut headline = String::new();

    if matches!(what, What::Pmf | What::All) {
        let pmf = exact_pmf(&params, n)?;
        let mut table = Table::new(vec!["n", "k", "prob"]);
        for (k, q) in pmf.entries() {
            table.push(vec![n.into(), k.into(), q.into()]);
        }
        outputs.push(table.write(out_dir, "pmf", format)?);
        headline = format!("pmf: {} support points, mass {:.12}", n + 1, pmf.total_mass());
    }
    if matches!(what, What::Moments | What::All) {
        let series = moment_series(&params, n);
        let mut table = Table::new(vec!["n", "mean", "second_moment"]);
        for (step, mean, second) in series.rows() {
            table.push(vec![step.into(), mean.into(), second.into()]);
        }
        outputs.push(table.write(out_dir, "moments", format)?);
        headline = format!(
            "moments: E[S_n] = {:.6}, E[S_n^2] = {:.6}",
            series.mean(n),
            series.second_moment(n)
        );
    }
    if matches!(what, What::Meet | What::All) {
        let sums = expected_meetings_table(&params, n, DEFAULT_RANGE_CAP)?;
        let mut table = Table::new(vec!["n", "meeting_probability", "expected_meetings"]);
        let mut prev = 0.0;
        for (i, &cum) in sums.iter().enumerate() {
            table.push(vec![(i as u64 + 1).into(), (cum - prev).into(), cum.into()]);
            prev = cum;
        }
        outputs.push(table.write(out_dir, "meet", format)?);
        let last = *sums.last().expect("n >= 1");
        let p_meet = if sums.len() >= 2 {
            last - sums[sums.len() - 2]
        } else {
            last
        };
        headline = format!(
            "meet: meeting_probability({n}) = {p_meet:.12}, expected_meetings({n}) = {last:.12}"
        );
    }
    if matches!(what, What::Diff | What::All) {
        let diff = exact_diff_pmf(&params, n)?;
        let mut table = Table::new(vec!["n", "d", "prob"]);
        for (d, q) in diff.entries() {
            table.push(vec![n.into(), d.into(), q.into()]);
        }
        outputs.push(table.write(out_dir, "diff_pmf", format)?);
        if matches!(what, What::Diff) {
            headline = format!("diff: P(S_n = S'_n) = {:.12}", diff.prob(0));
        }
    }
    let summary = format!("oracle p={p} s={s} n={n}: {headline}");
    Ok((outputs, None, summary))
}

fn run_ensemble(
    params: &WalkParams<f64>,
    cfg: &EnsembleConfig,
    format: Format,
    out_dir: &Path,
) -> Result<CommandOutput> {
    let out = run_walk_ensemble(params, cfg)?;
    let mut table = Table::new(vec![
        "n",
        "normalizer",
        "count",
        "raw_mean",
        "raw_variance",
        "raw_second_moment",
        "raw_min",
        "raw_max",
        "norm_mean",
        "norm_variance",
        "norm_min",
        "norm_max",
    ]);
    for cp in &out.per_checkpoint {
        table.push(vec![
            cp.n.into(),
            cp.normalizer.into(),
            cp.raw.count().into(),
            cp.raw.mean().into(),
            cp.raw.variance().into(),
            cp.raw.second_moment().into(),
            cp.raw.min().into(),
            cp.raw.max().into(),
            cp.normalized.mean().into(),
            cp.normalized.variance().into(),
            cp.normalized.min().into(),
            cp.normalized.max().into(),
        ]);
    }
    let outputs = vec![table.write(out_dir, "moments", format)?];
    let last = out.per_checkpoint.last();
    let summary = match last {
        Some(cp) => format!(
            "ensemble p={} s={} ({}) R={} N={}: Var(S_N/normalizer) = {:.6}",
            params.p(),
            params.s(),
            out.regime.label(),
            cfg.replicas,
            cfg.horizon,
            cp.normalized.variance()
        ),
        None => "ensemble: no checkpoints requested".to_string(),
    };
    Ok((outputs, None, summary))
}

fn run_pair(
    params: &WalkParams<f64>,
    cfg: &EnsembleConfig,
    format: Format,
    out_dir: &Path,
) -> Result<CommandOutput> {
    let out = run_pair_ensemble(params, cfg)?;
    let mut outputs = Vec::new();

    let mut pairs = Table::new(vec![
        "replica",
        "meeting_count",
        "last_meeting",
        "final_diff",
        "sup_plus_i",
        "sup_minus_i",
        "sup_plus_ii",
        "sup_minus_ii",
    ]);
    for (replica, rec) in out.records.iter().enumerate() {
        pairs.push(vec![
            (replica as u64).into(),
            rec.meeting_count.into(),
            rec.last_meeting.into(),
            rec.final_diff.into(),
            rec.sup_i.plus.into(),
            rec.sup_i.minus.into(),
            rec.sup_ii.plus.into(),
            rec.sup_ii.minus.into(),
        ]);
    }
    outputs.push(pairs.write(out_dir, "pairs", format)?);

    let mut diffs = Table::new(vec!["replica", "n", "diff", "normalized"]);
    for (replica, rec) in out.records.iter().enumerate() {
        for cd in &rec.normalized_diffs {
            diffs.push(vec![
                (replica as u64).into(),
                cd.n.into(),
                cd.diff.into(),
                cd.normalized.into(),
            ]);
        }
    }
    outputs.push(diffs.write(out_dir, "diffs", format)?);

    let mut meeting_hist = Table::new(vec!["meeting_count", "pairs"]);
    for (count, pairs_at) in out.meeting_count_histogram() {
        meeting_hist.push(vec![count.into(), pairs_at.into()]);
    }
    outputs.push(meeting_hist.write(out_dir, "meeting_hist", format)?);

    let mut last_hist = Table::new(vec!["last_meeting", "pairs"]);
    for (time, pairs_at) in out.last_meeting_histogram() {
        last_hist.push(vec![time.into(), pairs_at.into()]);
    }
    outputs.push(last_hist.write(out_dir, "last_meeting_hist", format)?);

    if out.regime == Regime::Superdiffusive {
        let limits = estimate_limit_samples(params, cfg)?;
        let mut mhat = Table::new(vec!["replica", "mhat"]);
        for (replica, &sample) in limits.samples.iter().enumerate() {
            mhat.push(vec![(replica as u64).into(), sample.into()]);
        }
        outputs.push(mhat.write(out_dir, "mhat", format)?);
    }

    // Record the oracle-backed meeting prediction where its sqrt tail model
    // applies (diffusive regime).
    let tail_fit = if out.regime == Regime::Diffusive {
        Some(predict_mean_meetings(params, cfg.horizon, DEFAULT_RANGE_CAP)?)
    } else {
        None
    };

    let moments = out.meeting_count_moments();
    let never = out.records.iter().filter(|r| r.meeting_count == 0).count();
    let summary = format!(
        "pair p={} s={} ({}) R={} N={}: mean meetings = {:.4}, never met = {}",
        params.p(),
        params.s(),
        out.regime.label(),
        cfg.replicas,
        cfg.horizon,
        moments.mean(),
        never
    );
    Ok((outputs, tail_fit, summary))
}

/// Run a verification suite and print the per-check table; returns the
/// process exit code (0 all green, 2 otherwise).
pub fn cmd_check(suite: Suite, cfg: &CheckConfig) -> Result<i32> {
    let reports = run_suite(suite, cfg)?;
    print_check_table(&reports);
    let failed = reports.iter().filter(|r| !r.passed).count();
    let total = reports.len();
    if failed == 0 {
        println!("suite '{}': {total} checks, all passed", suite.label());
        Ok(0)
    } else {
        println!("suite '{}': {total} checks, {failed} FAILED", suite.label());
        Ok(2)
    }
}

pub fn print_check_table(reports: &[CheckReport]) {
    let id_width = reports.iter().map(|r| r.id.len()).max().unwrap_or(8).max(8);
    let headers = ["STATUS", "CHECK", "MEASURED", "RULE", "DESCRIPTION"];
    println!(
        "{:<6} {:<id_width$} {:>14}  {:<26} {}",
        headers[0], headers[1], headers[2], headers[3], headers[4]
    );
    for report in reports {
        println!(
            "{:<6} {:<id_width$} {:>14.6e}  {:<26} {}",
            report.status(),
            report.id,
            report.measured,
            report.criterion.describe(),
            report.name
        );
        if let Some(note) = report.note {
            if !report.passed || report.status() == "INFO" {
                println!("{:width$}note: {note}", "", width = 7);
            }
        }
    }
}

/// Re-execute the configuration recorded in a manifest into `out_dir`.
pub fn cmd_rerun(manifest_path: &Path, out_dir: &Path) -> Result<()> {
    let manifest = RunManifest::read(manifest_path)?;
    println!(
        "replaying {} run recorded {} (tool {} {})",
        match &manifest.config {
            RunConfig::Oracle { .. } => "oracle",
            RunConfig::Ensemble { .. } => "ensemble",
            RunConfig::Pair { .. } => "pair",
        },
        manifest.started_utc,
        manifest.tool,
        manifest.version
    );
    execute(&manifest.config, out_dir)
}
