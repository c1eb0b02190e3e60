//! Alternating least squares over the cores of a tensor ring.
//!
//! Each microstep fixes every core but one and solves the resulting linear
//! least-squares problem exactly (minimum-norm on rank deficiency), so the
//! objective can never increase from one microstep to the next.

use crate::error::{domain, Result, TrError};
use crate::lstsq::lstsq_min_norm;
use crate::tensor::{fnorm, DenseTensor};
use crate::tr::{max_norm, tau, TrCores};
use crate::unfolding::{gamma_inv, LsProblem, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct AlsConfig {
    pub max_loops: usize,
    /// Stop once a full loop lowers the objective by less than this.
    pub conv_tol: f64,
    /// Relative singular-value threshold for the least-squares solves.
    pub rank_tol: f64,
    /// Seed for random initial cores when none are supplied.
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            max_loops: 200,
            conv_tol: 1e-10,
            rank_tol: DEFAULT_RANK_TOL,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_loops < 1 {
            return Err(domain!("max_loops must be at least 1"));
        }
        if self.conv_tol.is_nan()
            || self.rank_tol.is_nan()
            || self.conv_tol < 0.0
            || self.rank_tol < 0.0
        {
            return Err(domain!("tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// Slack allowed in the descent check: `f_next <= f_prev + slack * (1 + f_prev)`.
pub const DESCENT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AlsTrace {
    pub initial_objective: f64,
    /// Objective after every microstep, in execution order.
    pub objectives: Vec<f64>,
    /// `sigma_min(A_i)` of every microstep.
    pub sigma_mins: Vec<f64>,
    /// Microsteps whose `A_i` fell below the rank tolerance.
    pub rank_deficient: Vec<bool>,
    /// `max_norm` of the iterate after each loop. Logged only; iterates are
    /// not known to stay bounded.
    pub loop_max_norms: Vec<f64>,
    pub loops_run: usize,
    pub final_cores: TrCores,
}

impl AlsTrace {
    pub fn final_objective(&self) -> f64 {
        self.objectives
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }

    /// Number of consecutive pairs (starting from the initial objective)
    /// where the objective rose by more than the relative `slack`.
    pub fn descent_violations(&self, slack: f64) -> usize {
        let mut prev = self.initial_objective;
        let mut count = 0;
        for &f in &self.objectives {
            if f > prev + slack * (1.0 + prev) {
                count += 1;
            }
            prev = f;
        }
        count
    }

    pub fn min_sigma_min(&self) -> f64 {
        self.sigma_mins
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `0.5 * ||T - tau(u)||_F^2`.
pub fn objective(target: &DenseTensor, u: &TrCores) -> Result<f64> {
    let t = tau(u);
    let diff = target.sub(&t)?;
    Ok(0.5 * fnorm(&diff).powi(2))
}

#[derive(Debug, Clone)]
pub struct Microstep {
    pub core: DenseTensor,
    pub sigma_min: f64,
    pub objective_after: f64,
    pub rank_deficient: bool,
}

/// Optimal replacement for core `mode` (1-based) with every other core held
/// fixed.
pub fn solve_microstep(
    target: &DenseTensor,
    u: &TrCores,
    mode: usize,
    rank_tol: f64,
) -> Result<Microstep> {
    let problem = LsProblem::assemble(target, u, mode)?;
    let [left, n, right] = problem.core_shape(u);
    let sol = lstsq_min_norm(
        problem.a_matrix.as_ref(),
        problem.b_matrix.as_ref(),
        rank_tol,
    )?;
    let resid = &problem.a_matrix * &sol.x - &problem.b_matrix;
    let objective_after = 0.5 * resid.squared_norm_l2();
    if !objective_after.is_finite() {
        return Err(TrError::Numerical(format!(
            "non-finite objective at mode {mode}"
        )));
    }
    let core = gamma_inv(sol.x.as_ref(), left, n, right)?;
    Ok(Microstep {
        core,
        sigma_min: sol.sigma_min,
        objective_after,
        rank_deficient: !sol.full_column_rank(),
    })
}

struct Runner<'a> {
    target: &'a DenseTensor,
    cfg: &'a AlsConfig,
    u: TrCores,
    trace: AlsTrace,
}

impl<'a> Runner<'a> {
    fn new(target: &'a DenseTensor, u0: &TrCores, cfg: &'a AlsConfig) -> Result<Self> {
        cfg.validate()?;
        let initial_objective = objective(target, u0)?;
        Ok(Self {
            target,
            cfg,
            u: u0.clone(),
            trace: AlsTrace {
                initial_objective,
                objectives: Vec::new(),
                sigma_mins: Vec::new(),
                rank_deficient: Vec::new(),
                loop_max_norms: Vec::new(),
                loops_run: 0,
                final_cores: u0.clone(),
            },
        })
    }

    fn sweep(&mut self) -> Result<f64> {
        let mut f = self.trace.final_objective();
        for mode in 1..=self.u.order() {
            let step = solve_microstep(self.target, &self.u, mode, self.cfg.rank_tol)?;
            self.u.set_core(mode, step.core)?;
            self.trace.objectives.push(step.objective_after);
            self.trace.sigma_mins.push(step.sigma_min);
            self.trace.rank_deficient.push(step.rank_deficient);
            f = step.objective_after;
        }
        self.trace.loops_run += 1;
        self.trace.loop_max_norms.push(max_norm(&self.u));
        Ok(f)
    }

    fn finish(mut self) -> AlsTrace {
        self.trace.final_cores = self.u;
        self.trace
    }
}

/// Full ALS: loops of microsteps over modes `1..=d` until one loop lowers the
/// objective by less than `conv_tol` or `max_loops` is reached.
pub fn als_loop(target: &DenseTensor, u0: &TrCores, cfg: &AlsConfig) -> Result<AlsTrace> {
    let mut runner = Runner::new(target, u0, cfg)?;
    let mut prev = runner.trace.initial_objective;
    for _ in 0..cfg.max_loops {
        let f = runner.sweep()?;
        let decrease = prev - f;
        prev = f;
        if decrease < cfg.conv_tol {
            break;
        }
    }
    Ok(runner.finish())
}

/// Exactly one loop (`d` microsteps); returns the objective afterwards.
pub fn one_loop(target: &DenseTensor, u0: &TrCores, cfg: &AlsConfig) -> Result<(f64, AlsTrace)> {
    let mut runner = Runner::new(target, u0, cfg)?;
    let f = runner.sweep()?;
    Ok((f, runner.finish()))
}
