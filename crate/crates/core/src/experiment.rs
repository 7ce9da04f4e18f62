//! Random-derivative sweep: for each Hilbert dimension `n`, draw models
//! `ρ = I/n` with derivatives from [`make_random_model`], compute the
//! bound hierarchy and the tight bounds, and count how often the lower
//! tight bound exceeds the NH bound.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::bounds::bound_report;
use crate::designs::{make_wr, DirectionSet};
use crate::error::{Error, Result};
use crate::model::make_random_model;
use crate::rng::trial_seed;
use crate::sdp::SolveOptions;
use crate::tight::{tight_bounds, KappaOptions, TightOptions};

pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrParams {
    pub big_n: usize,
    pub k: usize,
    pub phi0: f64,
}

impl WrParams {
    pub const PAPER: WrParams = WrParams {
        big_n: 70,
        k: 100,
        phi0: 1.2,
    };
    pub const FAST: WrParams = WrParams {
        big_n: 30,
        k: 30,
        phi0: 1.2,
    };
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub d: usize,
    pub wr: WrParams,
    pub seed: u64,
    /// Grid points per axis for `κ`.
    pub kappa_grid: usize,
    pub solve: SolveOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_list: (3..=17).collect(),
            trials: 50,
            d: 2,
            wr: WrParams::PAPER,
            seed: 0,
            kappa_grid: 1000,
            solve: SolveOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::InvalidParameter("n_list is empty".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!("every n must be >= 2, got {n}")));
        }
        if self.d != 2 {
            return Err(Error::InvalidParameter(format!(
                "the sweep uses two parameters, got d = {}",
                self.d
            )));
        }
        if self.kappa_grid < 2 {
            return Err(Error::InvalidParameter("kappa_grid must be >= 2".into()));
        }
        Ok(())
    }

    pub fn direction_set(&self) -> Result<DirectionSet> {
        make_wr(self.wr.big_n, self.wr.k, self.wr.phi0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub seed: u64,
    /// `ok`, or the error that stopped the trial.
    pub status: String,
    pub sld: f64,
    pub hn: f64,
    pub nh: f64,
    pub upper: f64,
    pub lower: f64,
    pub kappa: f64,
    pub isgap: u8,
    pub secs_bounds: f64,
    pub secs_tight: f64,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn run_trial(cfg: &ExperimentConfig, wr: &DirectionSet, n: usize, trial_index: usize) -> TrialRecord {
    let seed = trial_seed(cfg.seed, n, trial_index);
    let mut rec = TrialRecord {
        n,
        trial_index,
        seed,
        status: "ok".into(),
        sld: f64::NAN,
        hn: f64::NAN,
        nh: f64::NAN,
        upper: f64::NAN,
        lower: f64::NAN,
        kappa: f64::NAN,
        isgap: 0,
        secs_bounds: 0.0,
        secs_tight: 0.0,
    };
    let model = match make_random_model(n, cfg.d, seed) {
        Ok(m) => m,
        Err(e) => {
            rec.status = format!("model: {e}");
            return rec;
        }
    };
    let t = Instant::now();
    match bound_report(&model, &cfg.solve) {
        Ok(b) => {
            rec.sld = b.sld;
            rec.hn = b.hn;
            rec.nh = b.nh;
        }
        Err(e) => {
            rec.status = format!("bounds: {e}");
            rec.secs_bounds = t.elapsed().as_secs_f64();
            return rec;
        }
    }
    rec.secs_bounds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let opts = TightOptions {
        solve: cfg.solve,
        kappa: KappaOptions::grid(cfg.kappa_grid),
    };
    match tight_bounds(&model, wr, &opts) {
        Ok(r) => {
            rec.upper = r.upper;
            rec.lower = r.lower;
            rec.kappa = r.kappa;
            rec.isgap = u8::from(r.lower > rec.nh);
        }
        Err(e) => rec.status = format!("tight: {e}"),
    }
    rec.secs_tight = t.elapsed().as_secs_f64();
    rec
}

/// Runs every `(n, trial)` job on the rayon pool; records come back in
/// `(n_list order, trial_index)` order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let wr = cfg.direction_set()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(n, t)| run_trial(cfg, &wr, n, t))
        .collect())
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n || !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "clopper_pearson needs 0 <= k <= n, n >= 1 and confidence in (0,1); got k={k}, n={n}, {confidence}"
        )));
    }
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()));
    let lo = if k == 0 {
        0.0
    } else {
        beta(kf, nf - kf + 1.0)?.inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        beta(kf + 1.0, nf - kf)?.inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub n: usize,
    pub trials: usize,
    pub failed: usize,
    pub gaps: usize,
    /// `gaps / trials`.
    pub g_n: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Largest `lower / nh` over successful trials, with the matching
    /// `upper / nh` and `hn / nh`.
    pub max_lower_over_nh: f64,
    pub upper_over_nh: f64,
    pub hn_over_nh: f64,
}

/// Per-dimension gap statistics with a 99% Clopper-Pearson interval.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<DimensionSummary>> {
    let mut by_n: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r);
    }
    by_n.into_iter()
        .map(|(n, rs)| {
            let trials = rs.len();
            let failed = rs.iter().filter(|r| !r.is_ok()).count();
            let gaps = rs.iter().filter(|r| r.isgap == 1).count();
            let (ci_low, ci_high) = clopper_pearson(gaps, trials, 0.99)?;
            let best = rs
                .iter()
                .filter(|r| r.is_ok())
                .max_by(|a, b| (a.lower / a.nh).total_cmp(&(b.lower / b.nh)));
            let (max_lower_over_nh, upper_over_nh, hn_over_nh) = match best {
                Some(r) => (r.lower / r.nh, r.upper / r.nh, r.hn / r.nh),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            Ok(DimensionSummary {
                n,
                trials,
                failed,
                gaps,
                g_n: gaps as f64 / trials as f64,
                ci_low,
                ci_high,
                max_lower_over_nh,
                upper_over_nh,
                hn_over_nh,
            })
        })
        .collect()
}

pub const TRIAL_COLUMNS: &str = "n,trial_index,seed,status,sld,hn,nh,upper,lower,kappa,isgap,secs_bounds,secs_tight";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Versioned CSV; the two runtime columns come last.
pub fn write_trials_csv<W: Write>(mut out: W, cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<()> {
    writeln!(
        out,
        "# tightcr trials v{CSV_VERSION}; seed={}; wr=makewr:{},{},{}; kappa_grid={}",
        cfg.seed, cfg.wr.big_n, cfg.wr.k, cfg.wr.phi0, cfg.kappa_grid
    )?;
    writeln!(out, "{TRIAL_COLUMNS}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{:.3},{:.3}",
            r.n,
            r.trial_index,
            r.seed,
            csv_field(&r.status),
            r.sld,
            r.hn,
            r.nh,
            r.upper,
            r.lower,
            r.kappa,
            r.isgap,
            r.secs_bounds,
            r.secs_tight
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, summary: &[DimensionSummary]) -> Result<()> {
    writeln!(out, "# tightcr summary v{CSV_VERSION}; interval=clopper-pearson 99%")?;
    writeln!(
        out,
        "n,trials,failed,gaps,g_n,ci_low,ci_high,max_lower_over_nh,upper_over_nh,hn_over_nh"
    )?;
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            s.n,
            s.trials,
            s.failed,
            s.gaps,
            s.g_n,
            s.ci_low,
            s.ci_high,
            s.max_lower_over_nh,
            s.upper_over_nh,
            s.hn_over_nh
        )?;
    }
    Ok(())
}
