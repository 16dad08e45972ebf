//! Forward (tangent) sensitivities of the converged BDF2 solution.
//!
//! Differentiating `R*(u^n; u^{n-1}, u^{n-2}, sigma) = 0` at the converged
//! states gives, for every step,
//!
//! ```text
//! (a0/dt I + dR/du) du^n/dsigma = -(a1 du^{n-1} + a2 du^{n-2}) / dt - dR/dsigma
//! ```
//!
//! which is solved column by column with one LU factorization per step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{Model, Output};
use crate::primal::{bdf_coefficients, Trajectory};
use crate::windows::DiscreteWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentTrajectory {
    /// `du^n/dsigma`, each `d_u x n_d`.
    pub state_sensitivities: Vec<DMatrix<f64>>,
    /// `dg(n)/dsigma`, each of length `n_d`.
    pub output_sensitivities: Vec<DVector<f64>>,
    /// Number of dense column solves performed.
    pub dense_solves: usize,
}

impl TangentTrajectory {
    pub fn design_dim(&self) -> usize {
        self.output_sensitivities.first().map_or(0, |g| g.len())
    }

    /// `dg(n)/dsigma_j` for all `n`.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.output_sensitivities.iter().map(|g| g[j]).collect()
    }
}

/// One tangent step: returns `du^n/dsigma` given the two previous tangents.
pub fn tangent_step(
    model: &Model,
    traj: &Trajectory,
    n: usize,
    previous: &DMatrix<f64>,
    before_previous: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (tangent, _) = tangent_step_counted(model, traj, n, previous, before_previous)?;
    Ok(tangent)
}

fn tangent_step_counted(
    model: &Model,
    traj: &Trajectory,
    n: usize,
    previous: &DMatrix<f64>,
    before_previous: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, usize)> {
    let dt = traj.grid.dt;
    let t = traj.time(n);
    let u = &traj.states[n];
    let sigma = &traj.sigma;
    let [a0, a1, a2] = bdf_coefficients(n);

    let mut system = model.jacobian_unchecked(u, sigma, t);
    for i in 0..system.nrows() {
        system[(i, i)] += a0 / dt;
    }
    let mut rhs = -model.design_derivative_unchecked(u, sigma, t);
    rhs -= previous * (a1 / dt);
    if a2 != 0.0 {
        rhs -= before_previous * (a2 / dt);
    }

    let lu = system.lu();
    let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
    for j in 0..rhs.ncols() {
        let col = lu
            .solve(&rhs.column(j).into_owned())
            .ok_or(Error::SingularSystem { step: n, iteration: 0 })?;
        out.set_column(j, &col);
    }
    Ok((out, rhs.ncols()))
}

/// Propagates tangents along a converged trajectory, starting from `du^0/dsigma = 0`.
pub fn tangent(model: &Model, output: &Output, traj: &Trajectory) -> Result<TangentTrajectory> {
    Error::check_dim("design vector", model.design_dim(), traj.sigma.len())?;
    let du = model.state_dim();
    let nd = model.design_dim();
    let sigma = &traj.sigma;

    let mut states: Vec<DMatrix<f64>> = Vec::with_capacity(traj.states.len());
    states.push(DMatrix::zeros(du, nd));
    let mut dense_solves = 0;
    for n in 1..traj.states.len() {
        let before = n.saturating_sub(2);
        let (next, solves) = tangent_step_counted(model, traj, n, &states[n - 1], &states[before])?;
        dense_solves += solves;
        states.push(next);
    }

    let output_sensitivities = states
        .iter()
        .zip(&traj.states)
        .map(|(du_ds, u)| du_ds.tr_mul(&output.state_gradient(u, sigma)) + output.design_gradient(u, sigma))
        .collect();

    Ok(TangentTrajectory {
        state_sensitivities: states,
        output_sensitivities,
        dense_solves,
    })
}

/// `(1/(N - n_tr)) sum_n w_n dg(n)/dsigma` over the span of `weights`.
pub fn windowed_tangent_sensitivity(
    tangent: &TangentTrajectory,
    weights: &DiscreteWeights,
) -> Result<DVector<f64>> {
    let len = tangent.output_sensitivities.len();
    if len <= weights.end() {
        return Err(Error::MissingStates {
            available: len,
            requested: weights.end(),
        });
    }
    let mut acc = DVector::zeros(tangent.design_dim());
    for n in weights.transient()..=weights.end() {
        acc.axpy(weights.weight(n), &tangent.output_sensitivities[n], 1.0);
    }
    Ok(acc / weights.span() as f64)
}
