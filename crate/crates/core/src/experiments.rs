//! Seeded Monte Carlo experiments: escaping (or not) from the spurious local
//! minimum under random perturbations, and one-loop convergence from random
//! starts at the critical bond dimension.
//!
//! Each trial derives its own seed from the base seed and its parameter
//! indices, so trial results never depend on execution order and the
//! parallel and sequential maps produce identical output.

use std::io::Write;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::als::{als_loop, objective, one_loop, AlsConfig, DESCENT_SLACK};
use crate::constructions::SpuriousInstance;
use crate::error::{domain, Result};
use crate::io::fmt_f64;
use crate::tensor::fnorm;
use crate::tr::{max_norm, random_cores, random_w_cores, tau, TrCores};

/// Version tag written into every CSV header.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Default distance below one half that still counts as trapped.
pub const DEFAULT_TRAP_EPSILON: f64 = 1e-6;

/// Shift every core entry by an independent `Uniform[-c, c]` draw.
pub fn perturb(u: &TrCores, c: f64, seed: u64) -> Result<TrCores> {
    if !c.is_finite() || c < 0.0 {
        return Err(domain!(
            "perturbation size {c} must be finite and non-negative"
        ));
    }
    if c == 0.0 {
        return Ok(u.clone());
    }
    let dist = Uniform::new_inclusive(-c, c).map_err(|e| domain!("uniform({c}): {e}"))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cores = u
        .cores()
        .iter()
        .map(|core| {
            let mut out = core.clone();
            for v in out.values_mut() {
                *v += dist.sample(&mut rng);
            }
            out
        })
        .collect();
    TrCores::new(cores)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold the base seed and a list of indices through splitmix64:
/// `h = mix(base); h = mix(h ^ i)` for each index in turn.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(base), |h, &i| splitmix64(h ^ i))
}

/// Order-preserving map over independent trials; parallel when the
/// `parallel` feature is on.
pub fn map_trials<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    match steps {
        0 => Err(domain!("need at least one step")),
        1 => Ok(vec![min]),
        _ => Ok((0..steps)
            .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
            .collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Trapped,
    Escaped,
    Converged,
    Stalled,
    Failed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Trapped => "trapped",
            Outcome::Escaped => "escaped",
            Outcome::Converged => "converged",
            Outcome::Stalled => "stalled",
            Outcome::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrapExperimentConfig {
    pub d: usize,
    pub r: usize,
    pub n: usize,
    pub c_values: Vec<f64>,
    pub trials_per_c: usize,
    pub als: AlsConfig,
    pub trap_epsilon: f64,
    pub base_seed: u64,
}

impl Default for TrapExperimentConfig {
    fn default() -> Self {
        Self {
            d: 3,
            r: 3,
            n: 10,
            c_values: linspace(0.0, 0.3, 16).expect("16 steps"),
            trials_per_c: 50,
            als: AlsConfig::default(),
            trap_epsilon: DEFAULT_TRAP_EPSILON,
            base_seed: 0,
        }
    }
}

impl TrapExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() {
            return Err(domain!("no perturbation sizes given"));
        }
        if let Some(c) = self.c_values.iter().find(|&&c| !c.is_finite() || c < 0.0) {
            return Err(domain!(
                "perturbation size {c} must be finite and non-negative"
            ));
        }
        if self.trials_per_c < 1 {
            return Err(domain!("trials per c must be at least 1"));
        }
        if self.trap_epsilon.is_nan() || self.trap_epsilon < 0.0 {
            return Err(domain!("trap epsilon must be non-negative"));
        }
        self.als.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrapTrial {
    pub c_index: usize,
    pub c: f64,
    pub trial: usize,
    pub outcome: Outcome,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub loops_run: usize,
    /// `||tau(u_final) - tau(u0)||_F`.
    pub tau_distance: f64,
    pub descent_violations: usize,
    pub final_max_norm: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TrapSummary {
    pub c: f64,
    pub trials: usize,
    pub trapped: usize,
    pub escaped: usize,
    pub failed: usize,
    /// Mean over non-failed trials (NaN when all failed).
    pub mean_final_objective: f64,
}

impl TrapSummary {
    pub fn trap_fraction(&self) -> f64 {
        self.trapped as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone)]
pub struct TrapReport {
    pub trials: Vec<TrapTrial>,
    pub summary: Vec<TrapSummary>,
}

/// One perturbed ALS run from the spurious minimum.
pub fn run_trap_trial(
    inst: &SpuriousInstance,
    tau_u0: &crate::tensor::DenseTensor,
    cfg: &TrapExperimentConfig,
    c_index: usize,
    trial: usize,
) -> TrapTrial {
    let c = cfg.c_values[c_index];
    let seed = derive_seed(cfg.base_seed, &[c_index as u64, trial as u64]);
    let mut rec = TrapTrial {
        c_index,
        c,
        trial,
        outcome: Outcome::Failed,
        initial_objective: f64::NAN,
        final_objective: f64::NAN,
        loops_run: 0,
        tau_distance: f64::NAN,
        descent_violations: 0,
        final_max_norm: f64::NAN,
        error: None,
    };
    let run = perturb(&inst.local_min, c, seed).and_then(|u| als_loop(&inst.target, &u, &cfg.als));
    match run {
        Ok(trace) => {
            let f = trace.final_objective();
            rec.initial_objective = trace.initial_objective;
            rec.final_objective = f;
            rec.loops_run = trace.loops_run;
            rec.descent_violations = trace.descent_violations(DESCENT_SLACK);
            rec.final_max_norm = max_norm(&trace.final_cores);
            rec.tau_distance = tau(&trace.final_cores)
                .sub(tau_u0)
                .map(|diff| fnorm(&diff))
                .unwrap_or(f64::NAN);
            rec.outcome = if !f.is_finite() {
                Outcome::Failed
            } else if f >= 0.5 - cfg.trap_epsilon {
                Outcome::Trapped
            } else {
                Outcome::Escaped
            };
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

pub fn run_trap_experiment(cfg: &TrapExperimentConfig) -> Result<TrapReport> {
    cfg.validate()?;
    let inst = SpuriousInstance::new(cfg.d, cfg.r, cfg.n)?;
    let tau_u0 = tau(&inst.local_min);
    let jobs: Vec<(usize, usize)> = (0..cfg.c_values.len())
        .flat_map(|ci| (0..cfg.trials_per_c).map(move |t| (ci, t)))
        .collect();
    let trials = map_trials(jobs, |(ci, t)| run_trap_trial(&inst, &tau_u0, cfg, ci, t));
    let summary = cfg
        .c_values
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let rows: Vec<&TrapTrial> = trials.iter().filter(|t| t.c_index == ci).collect();
            let count = |o: Outcome| rows.iter().filter(|t| t.outcome == o).count();
            let ok: Vec<f64> = rows
                .iter()
                .filter(|t| t.outcome != Outcome::Failed)
                .map(|t| t.final_objective)
                .collect();
            TrapSummary {
                c,
                trials: rows.len(),
                trapped: count(Outcome::Trapped),
                escaped: count(Outcome::Escaped),
                failed: count(Outcome::Failed),
                mean_final_objective: ok.iter().sum::<f64>() / ok.len() as f64,
            }
        })
        .collect();
    Ok(TrapReport { trials, summary })
}

/// Least-squares slope of trap fraction against `c`.
pub fn trap_fraction_slope(summary: &[TrapSummary]) -> f64 {
    let k = summary.len() as f64;
    let xm = summary.iter().map(|s| s.c).sum::<f64>() / k;
    let ym = summary.iter().map(|s| s.trap_fraction()).sum::<f64>() / k;
    let sxy: f64 = summary
        .iter()
        .map(|s| (s.c - xm) * (s.trap_fraction() - ym))
        .sum();
    let sxx: f64 = summary.iter().map(|s| (s.c - xm).powi(2)).sum();
    sxy / sxx
}

/// How the bond-`r` target cores `w` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSpace {
    /// Standard normal on every entry.
    Full,
    /// Standard normal on external positions `<= r^2`, zero beyond.
    Restricted,
}

impl TargetSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetSpace::Full => "full",
            TargetSpace::Restricted => "restricted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OneLoopExperimentConfig {
    pub d: usize,
    pub r: usize,
    pub n: usize,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub rank_tol: f64,
    pub target_space: TargetSpace,
    pub base_seed: u64,
}

impl OneLoopExperimentConfig {
    /// Critical bond dimension `r^(d-1)` and one below it.
    pub fn new(d: usize, r: usize, n: usize, trials: usize, base_seed: u64) -> Self {
        let m = r.pow(d.saturating_sub(1) as u32);
        Self {
            d,
            r,
            n,
            m_values: vec![m, m - 1],
            trials,
            rank_tol: AlsConfig::default().rank_tol,
            target_space: TargetSpace::Full,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.r < 1 {
            return Err(domain!("need d >= 2 and r >= 1"));
        }
        if self.n < self.r * self.r {
            return Err(domain!(
                "n = {} must be at least r^2 = {}",
                self.n,
                self.r * self.r
            ));
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return Err(domain!("bond dimensions must be at least 1"));
        }
        if self.trials < 1 {
            return Err(domain!("need at least one trial"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OneLoopTrial {
    pub m: usize,
    pub trial: usize,
    pub outcome: Outcome,
    pub f_u1: f64,
    pub min_sigma_min: f64,
    pub rank_deficient_steps: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OneLoopSummary {
    pub m: usize,
    pub max_f: f64,
    pub min_f: f64,
    pub min_sigma_min: f64,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct OneLoopReport {
    pub trials: Vec<OneLoopTrial>,
    pub summary: Vec<OneLoopSummary>,
}

/// Threshold separating "reached the global minimum" from "stalled" in the
/// per-trial outcome column; the raw `f(u_1)` is always reported.
pub const ONE_LOOP_CONVERGED_TOL: f64 = 1e-6;

/// One target draw and one loop from a Gaussian start at `m_values[mi]`.
pub fn run_oneloop_trial(cfg: &OneLoopExperimentConfig, mi: usize, trial: usize) -> OneLoopTrial {
    let m = cfg.m_values[mi];
    let dims = vec![cfg.n; cfg.d];
    // the target depends on the trial only, so every m sees the same targets
    let w_seed = derive_seed(cfg.base_seed, &[0, trial as u64]);
    let u_seed = derive_seed(cfg.base_seed, &[1, m as u64, trial as u64]);
    let als = AlsConfig {
        max_loops: 1,
        rank_tol: cfg.rank_tol,
        ..AlsConfig::default()
    };
    let w = match cfg.target_space {
        TargetSpace::Full => random_cores(cfg.r, &dims, w_seed),
        TargetSpace::Restricted => random_w_cores(cfg.r, &dims, w_seed),
    };
    let run = w.and_then(|w| {
        let t = tau(&w);
        let u0 = random_cores(m, &dims, u_seed)?;
        one_loop(&t, &u0, &als).map(|(f, trace)| (f, trace, t))
    });
    match run {
        Ok((f, trace, t)) => {
            // cross-check the solver-reported objective against a fresh contraction
            let f_check = objective(&t, &trace.final_cores).unwrap_or(f64::NAN);
            let f = if f_check.is_finite() {
                f.max(f_check)
            } else {
                f64::NAN
            };
            OneLoopTrial {
                m,
                trial,
                outcome: if !f.is_finite() {
                    Outcome::Failed
                } else if f <= ONE_LOOP_CONVERGED_TOL {
                    Outcome::Converged
                } else {
                    Outcome::Stalled
                },
                f_u1: f,
                min_sigma_min: trace.min_sigma_min(),
                rank_deficient_steps: trace.rank_deficient.iter().filter(|&&b| b).count(),
                error: None,
            }
        }
        Err(e) => OneLoopTrial {
            m,
            trial,
            outcome: Outcome::Failed,
            f_u1: f64::NAN,
            min_sigma_min: f64::NAN,
            rank_deficient_steps: 0,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_oneloop_experiment(cfg: &OneLoopExperimentConfig) -> Result<OneLoopReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.m_values.len())
        .flat_map(|mi| (0..cfg.trials).map(move |t| (mi, t)))
        .collect();
    let trials = map_trials(jobs, |(mi, t)| run_oneloop_trial(cfg, mi, t));
    let summary = cfg
        .m_values
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let rows = &trials[mi * cfg.trials..(mi + 1) * cfg.trials];
            let ok: Vec<&OneLoopTrial> = rows
                .iter()
                .filter(|t| t.outcome != Outcome::Failed)
                .collect();
            OneLoopSummary {
                m,
                max_f: ok.iter().map(|t| t.f_u1).fold(f64::NAN, f64::max),
                min_f: ok.iter().map(|t| t.f_u1).fold(f64::NAN, f64::min),
                min_sigma_min: ok.iter().map(|t| t.min_sigma_min).fold(f64::NAN, f64::min),
                failed: rows.len() - ok.len(),
            }
        })
        .collect();
    Ok(OneLoopReport { trials, summary })
}

fn write_header(w: &mut (impl Write + ?Sized), kind: &str, lines: &[String]) -> Result<()> {
    writeln!(
        w,
        "# trdecomp {kind} csv schema v{CSV_SCHEMA_VERSION} (trdecomp {})",
        env!("CARGO_PKG_VERSION")
    )?;
    for line in lines {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn als_echo(als: &AlsConfig) -> String {
    format!(
        "als: max_loops={} conv_tol={:e} rank_tol={:e}",
        als.max_loops, als.conv_tol, als.rank_tol
    )
}

/// Summary CSV: `c,trials,trapped_count,escaped_count,failure_count,mean_final_objective`.
pub fn write_trap_csv(
    w: &mut (impl Write + ?Sized),
    cfg: &TrapExperimentConfig,
    report: &TrapReport,
) -> Result<()> {
    write_header(
        w,
        "trap",
        &[
            format!(
                "config: d={} r={} n={} trials_per_c={} seed={} c_values={}",
                cfg.d,
                cfg.r,
                cfg.n,
                cfg.trials_per_c,
                cfg.base_seed,
                cfg.c_values
                    .iter()
                    .map(|c| fmt_f64(*c))
                    .collect::<Vec<_>>()
                    .join(";")
            ),
            als_echo(&cfg.als),
            format!(
                "trap_epsilon={:e} (trapped iff final objective >= 0.5 - trap_epsilon)",
                cfg.trap_epsilon
            ),
        ],
    )?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "c",
        "trials",
        "trapped_count",
        "escaped_count",
        "failure_count",
        "mean_final_objective",
    ])?;
    for s in &report.summary {
        csv.write_record([
            fmt_f64(s.c),
            s.trials.to_string(),
            s.trapped.to_string(),
            s.escaped.to_string(),
            s.failed.to_string(),
            fmt_f64(s.mean_final_objective),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-trial CSV for the trap experiment.
pub fn write_trap_trials_csv(
    w: &mut (impl Write + ?Sized),
    cfg: &TrapExperimentConfig,
    report: &TrapReport,
) -> Result<()> {
    write_header(
        w,
        "trap-trials",
        &[
            format!(
                "config: d={} r={} n={} seed={}",
                cfg.d, cfg.r, cfg.n, cfg.base_seed
            ),
            als_echo(&cfg.als),
            format!("trap_epsilon={:e}", cfg.trap_epsilon),
        ],
    )?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "c",
        "trial",
        "outcome",
        "initial_objective",
        "final_objective",
        "loops",
        "tau_distance_to_u0",
        "descent_violations",
        "final_max_norm",
        "error",
    ])?;
    for t in &report.trials {
        csv.write_record([
            fmt_f64(t.c),
            t.trial.to_string(),
            t.outcome.as_str().to_string(),
            fmt_f64(t.initial_objective),
            fmt_f64(t.final_objective),
            t.loops_run.to_string(),
            fmt_f64(t.tau_distance),
            t.descent_violations.to_string(),
            fmt_f64(t.final_max_norm),
            t.error.clone().unwrap_or_default(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-trial rows `kind=trial`, followed by `kind=max` and `kind=min` rows
/// per bond dimension (f_u1 holds the extreme value, trial is empty).
pub fn write_oneloop_csv(
    w: &mut (impl Write + ?Sized),
    cfg: &OneLoopExperimentConfig,
    report: &OneLoopReport,
) -> Result<()> {
    write_header(
        w,
        "oneloop",
        &[
            format!(
                "config: d={} r={} n={} m_values={} trials={} seed={} rank_tol={:e} target_space={}",
                cfg.d,
                cfg.r,
                cfg.n,
                cfg.m_values.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                cfg.trials,
                cfg.base_seed,
                cfg.rank_tol,
                cfg.target_space.as_str()
            ),
            format!("outcome: converged iff f_u1 <= {ONE_LOOP_CONVERGED_TOL:e}"),
        ],
    )?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "kind",
        "d",
        "r",
        "n",
        "m",
        "trial",
        "f_u1",
        "min_sigma_min",
        "outcome",
    ])?;
    let head = |m: usize| {
        [
            cfg.d.to_string(),
            cfg.r.to_string(),
            cfg.n.to_string(),
            m.to_string(),
        ]
    };
    for t in &report.trials {
        let [d, r, n, m] = head(t.m);
        csv.write_record([
            "trial".into(),
            d,
            r,
            n,
            m,
            t.trial.to_string(),
            fmt_f64(t.f_u1),
            fmt_f64(t.min_sigma_min),
            t.outcome.as_str().into(),
        ])?;
    }
    for s in &report.summary {
        for (kind, f) in [("max", s.max_f), ("min", s.min_f)] {
            let [d, r, n, m] = head(s.m);
            csv.write_record([
                kind.into(),
                d,
                r,
                n,
                m,
                String::new(),
                fmt_f64(f),
                fmt_f64(s.min_sigma_min),
                format!("failed={}", s.failed),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}
