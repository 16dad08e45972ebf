//! BDF2 physical-time marching with an implicit-Euler pseudo-time iteration
//! converging the extended residual of every step.
//!
//! For step `n` the extended residual is
//!
//! ```text
//! R*(u^n; u^{n-1}, u^{n-2}) = (a0 u^n + a1 u^{n-1} + a2 u^{n-2}) / dt + R(u^n)
//! ```
//!
//! with `(a0, a1, a2) = (3/2, -2, 1/2)`. The first step has only one history
//! level (`u^{-1} = u^0`) and runs as BDF1, `(1, -1, 0)`. Each pseudo-time step
//! solves `(I/dtau + dR*/du) (u_{p+1} - u_p) = -R*(u_p)`; `dtau = inf` is Newton.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Model, Output};

/// Physical time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub dt: f64,
    /// Total number of physical steps `N`.
    pub steps: usize,
    /// Transient cutoff `n_tr`.
    pub transient: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize, transient: usize) -> Result<Self> {
        let grid = TimeGrid {
            dt,
            steps,
            transient,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if self.transient >= self.steps {
            return Err(Error::InvalidSpan {
                transient: self.transient,
                end: self.steps,
            });
        }
        Ok(())
    }

    /// Averaging span `M = (N - n_tr) dt` in seconds.
    pub fn span_time(&self) -> f64 {
        (self.steps - self.transient) as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Settings of the inner pseudo-time iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PseudoTimeConfig {
    /// Pseudo-time step; `f64::INFINITY` gives pure Newton.
    pub dtau: f64,
    pub tolerance: f64,
    pub max_inner: usize,
    /// Keep marching (with a warning) when a step fails to converge.
    pub allow_unconverged: bool,
}

impl Default for PseudoTimeConfig {
    fn default() -> Self {
        PseudoTimeConfig {
            dtau: f64::INFINITY,
            tolerance: 1e-12,
            max_inner: 50,
            allow_unconverged: false,
        }
    }
}

impl PseudoTimeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_inner == 0 || !(self.dtau > 0.0) {
            return Err(Error::Config(
                "pseudo-time config needs tolerance > 0, max_inner >= 1 and dtau > 0".into(),
            ));
        }
        Ok(())
    }
}

/// BDF coefficients `(a0, a1, a2)` of physical step `n >= 1`.
pub fn bdf_coefficients(n: usize) -> [f64; 3] {
    if n <= 1 {
        [1.0, -1.0, 0.0]
    } else {
        [1.5, -2.0, 0.5]
    }
}

/// The two previous converged states of a physical step.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub previous: &'a DVector<f64>,
    pub before_previous: &'a DVector<f64>,
}

/// Everything that defines the extended residual of one physical step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub model: &'a Model,
    pub sigma: &'a [f64],
    pub dt: f64,
    /// Physical step index `n`; selects the BDF stencil and the time `n dt`.
    pub step: usize,
    pub history: History<'a>,
}

impl<'a> StepContext<'a> {
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn coefficients(&self) -> [f64; 3] {
        bdf_coefficients(self.step)
    }

    pub fn extended_residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let [a0, a1, a2] = self.coefficients();
        let mut r = self.model.residual_unchecked(u, self.sigma, self.time());
        r.axpy(a0 / self.dt, u, 1.0);
        r.axpy(a1 / self.dt, self.history.previous, 1.0);
        if a2 != 0.0 {
            r.axpy(a2 / self.dt, self.history.before_previous, 1.0);
        }
        r
    }

    /// `dR*/du^n = (a0/dt) I + dR/du`.
    pub fn extended_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let [a0, _, _] = self.coefficients();
        let mut j = self.model.jacobian_unchecked(u, self.sigma, self.time());
        for i in 0..j.nrows() {
            j[(i, i)] += a0 / self.dt;
        }
        j
    }
}

/// `I/dtau + J` (just `J` for infinite `dtau`).
pub fn iteration_matrix(extended_jacobian: &DMatrix<f64>, dtau: f64) -> DMatrix<f64> {
    let mut k = extended_jacobian.clone();
    if dtau.is_finite() {
        for i in 0..k.nrows() {
            k[(i, i)] += 1.0 / dtau;
        }
    }
    k
}

/// Extended BDF2 residual `(3/(2dt)) u_n + R(u_n) - (2/dt) u_{n-1} + (1/(2dt)) u_{n-2}`
/// evaluated at time `t`.
pub fn extended_residual(
    model: &Model,
    u_n: &DVector<f64>,
    u_nm1: &DVector<f64>,
    u_nm2: &DVector<f64>,
    sigma: &[f64],
    dt: f64,
    t: f64,
) -> Result<DVector<f64>> {
    Error::check_dim("previous state", u_n.len(), u_nm1.len())?;
    Error::check_dim("state before previous", u_n.len(), u_nm2.len())?;
    let r = model.residual(u_n, sigma, t)?;
    Ok(r + u_n * (1.5 / dt) - u_nm1 * (2.0 / dt) + u_nm2 * (0.5 / dt))
}

/// One linearized implicit-Euler pseudo-time step from `u_p`.
pub fn pseudo_time_step(
    ctx: &StepContext<'_>,
    u_p: &DVector<f64>,
    dtau: f64,
    iteration: usize,
) -> Result<DVector<f64>> {
    let residual = ctx.extended_residual(u_p);
    let k = iteration_matrix(&ctx.extended_jacobian(u_p), dtau);
    let delta = k.lu().solve(&(-residual)).ok_or(Error::SingularSystem {
        step: ctx.step,
        iteration,
    })?;
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::SingularSystem {
            step: ctx.step,
            iteration,
        });
    }
    Ok(u_p + delta)
}

/// Result of converging one physical step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    /// `||R*||_2` before each pseudo-time step and after the last one.
    pub residual_history: Vec<f64>,
}

/// Iterates pseudo-time steps from `u^{n-1}` until `||R*||_2 <= tolerance`.
pub fn advance_physical_step(ctx: &StepContext<'_>, cfg: &PseudoTimeConfig) -> Result<StepOutcome> {
    let mut u = ctx.history.previous.clone();
    let mut norm = ctx.extended_residual(&u).norm();
    let mut residual_history = vec![norm];
    let mut iterations = 0;
    while norm > cfg.tolerance && iterations < cfg.max_inner {
        u = pseudo_time_step(ctx, &u, cfg.dtau, iterations)?;
        iterations += 1;
        norm = ctx.extended_residual(&u).norm();
        residual_history.push(norm);
    }
    let converged = norm <= cfg.tolerance;
    if !converged {
        if !cfg.allow_unconverged {
            return Err(Error::UnconvergedStep {
                step: ctx.step,
                iterations,
                residual: norm,
            });
        }
        log::warn!(
            "step {} unconverged after {} iterations (residual {:e})",
            ctx.step,
            iterations,
            norm
        );
    }
    Ok(StepOutcome {
        state: u,
        iterations,
        residual_norm: norm,
        converged,
        residual_history,
    })
}

/// Converged primal states and diagnostics for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub sigma: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub residual_norms: Vec<f64>,
    pub converged: Vec<bool>,
}

impl Trajectory {
    /// Last physical step index `N`.
    pub fn last_step(&self) -> usize {
        self.states.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.grid.time(n)
    }

    /// Evaluates another output along the stored states.
    pub fn evaluate(&self, output: &Output) -> Vec<f64> {
        self.states
            .iter()
            .map(|u| output.value(u, &self.sigma))
            .collect()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Marches `N` physical steps from the model's initial state.
pub fn simulate(
    model: &Model,
    output: &Output,
    sigma: &[f64],
    grid: &TimeGrid,
    cfg: &PseudoTimeConfig,
) -> Result<Trajectory> {
    grid.validate()?;
    cfg.validate()?;
    model.validate()?;
    output.validate(model)?;
    Error::check_dim("design vector", model.design_dim(), sigma.len())?;

    let u0 = model.initial_state();
    let mut states = Vec::with_capacity(grid.steps + 1);
    let mut inner_iterations = Vec::with_capacity(grid.steps + 1);
    let mut residual_norms = Vec::with_capacity(grid.steps + 1);
    let mut converged = Vec::with_capacity(grid.steps + 1);
    states.push(u0);
    inner_iterations.push(0);
    residual_norms.push(0.0);
    converged.push(true);

    for n in 1..=grid.steps {
        let before = n.saturating_sub(2);
        let ctx = StepContext {
            model,
            sigma,
            dt: grid.dt,
            step: n,
            history: History {
                previous: &states[n - 1],
                before_previous: &states[before],
            },
        };
        let outcome = advance_physical_step(&ctx, cfg)?;
        states.push(outcome.state);
        inner_iterations.push(outcome.iterations);
        residual_norms.push(outcome.residual_norm);
        converged.push(outcome.converged);
    }

    let outputs = states.iter().map(|u| output.value(u, sigma)).collect();
    Ok(Trajectory {
        grid: *grid,
        sigma: sigma.to_vec(),
        states,
        outputs,
        inner_iterations,
        residual_norms,
        converged,
    })
}

/// Period estimate from upward mean crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEstimate {
    /// Mean spacing of upward crossings, seconds.
    pub period: f64,
    /// Number of periods `M / T` spanned by the post-transient record.
    pub periods: f64,
    /// Interpolated crossing times, seconds.
    pub crossings: Vec<f64>,
}

impl PeriodEstimate {
    /// `(max - min) / mean` of consecutive crossing spacings.
    pub fn spread(&self) -> f64 {
        if self.crossings.len() < 3 {
            return 0.0;
        }
        let gaps: Vec<f64> = self.crossings.windows(2).map(|w| w[1] - w[0]).collect();
        let max = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / self.period
    }

    /// Whole steps per period, at least one.
    pub fn steps_per_period(&self, dt: f64) -> usize {
        ((self.period / dt).round() as usize).max(1)
    }
}

/// Estimates the period of `outputs[n_tr..]` from upward crossings of its mean,
/// with linear interpolation between samples.
pub fn estimate_period(outputs: &[f64], transient: usize, dt: f64) -> Result<PeriodEstimate> {
    if outputs.len() < transient + 2 {
        return Err(Error::PeriodUndetectable { crossings: 0 });
    }
    let tail = &outputs[transient..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let mut crossings = Vec::new();
    for (i, pair) in tail.windows(2).enumerate() {
        let (y0, y1) = (pair[0] - mean, pair[1] - mean);
        if y0 < 0.0 && y1 >= 0.0 {
            let frac = y0 / (y0 - y1);
            crossings.push((transient as f64 + i as f64 + frac) * dt);
        }
    }
    if crossings.len() < 2 {
        return Err(Error::PeriodUndetectable {
            crossings: crossings.len(),
        });
    }
    let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let span = (outputs.len() - 1 - transient) as f64 * dt;
    Ok(PeriodEstimate {
        period,
        periods: span / period,
        crossings,
    })
}
