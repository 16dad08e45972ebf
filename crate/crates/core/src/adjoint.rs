//! Discrete adjoint of the dual-time-stepping solver with windowed seeding.
//!
//! The primal step `n` is the fixed point of the pseudo-time iterator
//! `G^n(u_p, u^{n-1}, u^{n-2}, sigma) = u_p - K^{-1} R*(u_p; ...)` with
//! `K = I/dtau + dR*/du`. At the converged state its partial derivatives are
//!
//! ```text
//! dG^n/du^n     = I - K^{-1} dR*/du          (zero for Newton, dtau = inf)
//! dG^n/du^{n-j} = -(a_j/dt) K^{-1}           (j = 1, 2)
//! dG^n/dsigma   = -K^{-1} dR/dsigma
//! ```
//!
//! and the adjoint state of every step is the fixed point of
//!
//! ```text
//! Ubar^n = (dG^n/du^n)^T Ubar^n + (dG^{n+1}/du^n)^T Ubar^{n+1}
//!        + (dG^{n+2}/du^n)^T Ubar^{n+2} + 1{n >= n_tr} w_n/(N - n_tr) (dg/du^n)^T
//! ```
//!
//! marched from `n = N` down to `1`. The design derivative is accumulated as
//! `sum_n [1{n >= n_tr} w_n/(N - n_tr) dg/dsigma + (Ubar^n)^T dG^n/dsigma]`.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Model, Output};
use crate::primal::{bdf_coefficients, iteration_matrix, PseudoTimeConfig, Trajectory};
use crate::windows::DiscreteWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjointMode {
    /// Iterate the transposed fixed-point map until it stops moving.
    #[default]
    FixedPoint,
    /// Solve `(I - (dG^n/du^n)^T) Ubar^n = rhs` directly.
    Direct,
}

impl FromStr for AdjointMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed-point" | "fixed_point" | "fixedpoint" => Ok(AdjointMode::FixedPoint),
            "direct" => Ok(AdjointMode::Direct),
            other => Err(Error::Config(format!(
                "unknown adjoint mode '{other}' (expected fixed-point or direct)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjointConfig {
    pub mode: AdjointMode,
    pub tolerance: f64,
    pub max_inner: usize,
    /// Pseudo-time step of the primal iterator being differentiated.
    pub dtau: f64,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig::matching(&PseudoTimeConfig::default())
    }
}

impl AdjointConfig {
    /// Same tolerance, iteration cap and pseudo-time step as the primal solve.
    pub fn matching(primal: &PseudoTimeConfig) -> Self {
        AdjointConfig {
            mode: AdjointMode::FixedPoint,
            tolerance: primal.tolerance,
            max_inner: primal.max_inner,
            dtau: primal.dtau,
        }
    }

    pub fn with_mode(self, mode: AdjointMode) -> Self {
        AdjointConfig { mode, ..self }
    }
}

/// Linearization of the pseudo-time iterator of one converged step.
#[derive(Debug, Clone)]
pub struct StepLinearization {
    /// `K = I/dtau + dR*/du`.
    pub iteration_matrix: DMatrix<f64>,
    /// `dG^n/du^n = I - K^{-1} dR*/du`.
    pub iterator_jacobian: DMatrix<f64>,
}

impl StepLinearization {
    pub fn new(model: &Model, traj: &Trajectory, n: usize, dtau: f64) -> Result<Self> {
        let dt = traj.grid.dt;
        let [a0, _, _] = bdf_coefficients(n);
        let mut extended = model.jacobian_unchecked(&traj.states[n], &traj.sigma, traj.time(n));
        for i in 0..extended.nrows() {
            extended[(i, i)] += a0 / dt;
        }
        let k = iteration_matrix(&extended, dtau);
        let solved = k
            .clone()
            .lu()
            .solve(&extended)
            .ok_or(Error::SingularSystem { step: n, iteration: 0 })?;
        let iterator_jacobian = DMatrix::identity(k.nrows(), k.ncols()) - solved;
        Ok(StepLinearization {
            iteration_matrix: k,
            iterator_jacobian,
        })
    }

    /// Spectral norm of `(dG^n/du^n)^T`.
    pub fn contraction(&self) -> f64 {
        self.iterator_jacobian
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Converged adjoint state of one step with its diagnostics.
#[derive(Debug, Clone)]
pub struct AdjointStepResult {
    pub state: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Seed `1{n >= n_tr} w_n/(N - n_tr) (dg/du^n)^T` of step `n`.
pub fn adjoint_seed(
    output: &Output,
    u: &DVector<f64>,
    sigma: &[f64],
    n: usize,
    weights: &DiscreteWeights,
) -> DVector<f64> {
    let c = weights.coefficient(n);
    if c == 0.0 {
        DVector::zeros(u.len())
    } else {
        output.state_gradient(u, sigma) * c
    }
}

/// Solves the adjoint fixed-point equation `Ubar = A^T Ubar + rhs` of step `step`,
/// where `A = lin.iterator_jacobian` and `rhs` holds the downstream terms and the seed.
pub fn adjoint_step(
    lin: &StepLinearization,
    rhs: &DVector<f64>,
    guess: &DVector<f64>,
    cfg: &AdjointConfig,
    step: usize,
) -> Result<AdjointStepResult> {
    let at = lin.iterator_jacobian.transpose();
    let residual_of = |x: &DVector<f64>| (&at * x + rhs - x).norm();
    match cfg.mode {
        AdjointMode::FixedPoint => {
            // One update is always taken: a warm start within the tolerance of a
            // small adjoint would otherwise be accepted unchanged.
            let mut x = &at * guess + rhs;
            let mut iterations = 1;
            loop {
                let residual = residual_of(&x);
                if residual <= cfg.tolerance {
                    return Ok(AdjointStepResult {
                        state: x,
                        iterations,
                        residual,
                    });
                }
                if iterations >= cfg.max_inner || !residual.is_finite() {
                    return Err(Error::AdjointDivergence {
                        step,
                        residual,
                        contraction: lin.contraction(),
                    });
                }
                x = &at * &x + rhs;
                iterations += 1;
            }
        }
        AdjointMode::Direct => {
            let system = DMatrix::identity(at.nrows(), at.ncols()) - &at;
            let x = system
                .lu()
                .solve(rhs)
                .ok_or(Error::SingularSystem { step, iteration: 0 })?;
            let residual = residual_of(&x);
            Ok(AdjointStepResult {
                state: x,
                iterations: 0,
                residual,
            })
        }
    }
}

/// Result of a full reverse sweep.
#[derive(Debug, Clone)]
pub struct AdjointSweep {
    /// `Ubar^n` for `n = 0..=N`; `Ubar^0` is the sensitivity to the initial state.
    pub adjoints: Vec<DVector<f64>>,
    /// Seeds per step.
    pub seeds: Vec<DVector<f64>>,
    /// `dJ_w/dsigma`.
    pub gradient: DVector<f64>,
    /// Contribution of each step to the gradient, for running sums.
    pub gradient_contributions: Vec<DVector<f64>>,
    pub inner_iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `||(dG^n/du^n)^T||_2` per step (zero entry for `n = 0`).
    pub contractions: Vec<f64>,
}

impl AdjointSweep {
    pub fn max_contraction(&self) -> f64 {
        self.contractions.iter().cloned().fold(0.0, f64::max)
    }

    /// Running design derivative accumulated from step `N` down to each `n`.
    pub fn running_gradient(&self) -> Vec<DVector<f64>> {
        let mut out = vec![DVector::zeros(self.gradient.len()); self.gradient_contributions.len()];
        let mut acc = DVector::zeros(self.gradient.len());
        for n in (0..self.gradient_contributions.len()).rev() {
            acc += &self.gradient_contributions[n];
            out[n] = acc.clone();
        }
        out
    }
}

/// Reverse sweep over steps `N = weights.end()` down to `1` of a stored trajectory.
pub fn adjoint_sweep(
    model: &Model,
    output: &Output,
    traj: &Trajectory,
    weights: &DiscreteWeights,
    cfg: &AdjointConfig,
) -> Result<AdjointSweep> {
    let end = weights.end();
    if traj.states.len() <= end {
        return Err(Error::MissingStates {
            available: traj.states.len(),
            requested: end,
        });
    }
    Error::check_dim("design vector", model.design_dim(), traj.sigma.len())?;
    let du = model.state_dim();
    let nd = model.design_dim();
    let dt = traj.grid.dt;
    let sigma = &traj.sigma;

    let mut adjoints = vec![DVector::zeros(du); end + 1];
    // K_m^{-T} Ubar^m, reused by the two preceding steps.
    let mut projected = vec![DVector::zeros(du); end + 1];
    let mut seeds = vec![DVector::zeros(du); end + 1];
    let mut contributions = vec![DVector::zeros(nd); end + 1];
    let mut inner_iterations = vec![0; end + 1];
    let mut residuals = vec![0.0; end + 1];
    let mut contractions = vec![0.0; end + 1];

    let downstream = |n: usize, projected: &[DVector<f64>]| {
        let mut acc = DVector::zeros(du);
        for j in 1..=2 {
            let m = n + j;
            if m <= end {
                let a = bdf_coefficients(m)[j];
                if a != 0.0 {
                    acc.axpy(-a / dt, &projected[m], 1.0);
                }
            }
        }
        acc
    };

    for n in (1..=end).rev() {
        let u = &traj.states[n];
        let lin = StepLinearization::new(model, traj, n, cfg.dtau)?;
        let seed = adjoint_seed(output, u, sigma, n, weights);
        let rhs = downstream(n, &projected) + &seed;
        let guess = if n < end { adjoints[n + 1].clone() } else { DVector::zeros(du) };
        let step = adjoint_step(&lin, &rhs, &guess, cfg, n)?;

        let lambda = lin
            .iteration_matrix
            .transpose()
            .lu()
            .solve(&step.state)
            .ok_or(Error::SingularSystem { step: n, iteration: 0 })?;
        let design = model.design_derivative_unchecked(u, sigma, traj.time(n));
        let mut contribution = -design.tr_mul(&lambda);
        contribution.axpy(weights.coefficient(n), &output.design_gradient(u, sigma), 1.0);

        contractions[n] = lin.contraction();
        inner_iterations[n] = step.iterations;
        residuals[n] = step.residual;
        contributions[n] = contribution;
        seeds[n] = seed;
        projected[n] = lambda;
        adjoints[n] = step.state;
    }

    // The initial state is fixed: no iterator at n = 0, only its explicit output
    // term and the downstream sensitivity.
    let u0 = &traj.states[0];
    seeds[0] = adjoint_seed(output, u0, sigma, 0, weights);
    adjoints[0] = downstream(0, &projected) + &seeds[0];
    contributions[0] = output.design_gradient(u0, sigma) * weights.coefficient(0);

    let gradient = contributions
        .iter()
        .fold(DVector::zeros(nd), |acc, c| acc + c);

    Ok(AdjointSweep {
        adjoints,
        seeds,
        gradient,
        gradient_contributions: contributions,
        inner_iterations,
        residuals,
        contractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearSystem;
    use crate::primal::{simulate, TimeGrid};
    use crate::tangent::{tangent, windowed_tangent_sensitivity};
    use crate::windows::{discrete_weights, Normalization, WindowKind};

    #[test]
    fn zero_inputs_give_zero_adjoint() {
        let lin = StepLinearization {
            iteration_matrix: DMatrix::identity(2, 2),
            iterator_jacobian: DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]),
        };
        let zero = DVector::zeros(2);
        for mode in [AdjointMode::FixedPoint, AdjointMode::Direct] {
            let cfg = AdjointConfig::default().with_mode(mode);
            let r = adjoint_step(&lin, &zero, &zero, &cfg, 3).unwrap();
            assert_eq!(r.state, zero);
        }
    }

    #[test]
    fn fixed_point_matches_direct_on_contracting_map() {
        let lin = StepLinearization {
            iteration_matrix: DMatrix::identity(2, 2),
            iterator_jacobian: DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]),
        };
        let rhs = DVector::from_vec(vec![1.0, -2.0]);
        let fp = adjoint_step(&lin, &rhs, &DVector::zeros(2), &AdjointConfig::default(), 1).unwrap();
        let direct = adjoint_step(
            &lin,
            &rhs,
            &DVector::zeros(2),
            &AdjointConfig::default().with_mode(AdjointMode::Direct),
            1,
        )
        .unwrap();
        assert!((fp.state - direct.state).amax() < 1e-11);
        assert!(fp.iterations > 5);
    }

    #[test]
    fn non_contracting_map_reports_divergence() {
        let lin = StepLinearization {
            iteration_matrix: DMatrix::identity(1, 1),
            iterator_jacobian: DMatrix::from_element(1, 1, 1.5),
        };
        let rhs = DVector::from_element(1, 1.0);
        let err = adjoint_step(&lin, &rhs, &DVector::zeros(1), &AdjointConfig::default(), 9).unwrap_err();
        match err {
            Error::AdjointDivergence { step, contraction, .. } => {
                assert_eq!(step, 9);
                assert!((contraction - 1.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn seeds_follow_window() {
        let w = discrete_weights(WindowKind::Square, 10, 20, Normalization::PaperFaithful).unwrap();
        let u = DVector::from_vec(vec![0.7, 0.2]);
        assert_eq!(adjoint_seed(&Output::State(0), &u, &[1.0], 5, &w), DVector::zeros(2));
        let s = adjoint_seed(&Output::State(0), &u, &[1.0], 15, &w);
        assert_eq!(s, DVector::from_vec(vec![0.1, 0.0]));
        let w = discrete_weights(WindowKind::Hann, 10, 20, Normalization::PaperFaithful).unwrap();
        let s = adjoint_seed(&Output::StateSquared(0), &u, &[1.0], 15, &w);
        assert!((s[0] - 2.0 * 0.7 * 2.0 / 10.0).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn one_step_scalar_chain_rule() {
        // u' = -lambda (1 + sigma) u, one BDF1 step: u1 = u0 / (1 + k dt), k = lambda (1 + sigma).
        // J = w_1 u1 with a square window over steps 0..=1 renormalized so that w_1 = 1... use Hann
        // over 0..=2 instead and stop after two steps to exercise both stencils.
        let lambda = 0.9;
        let dt = 0.2;
        let sigma = 0.1;
        let m = Model::Linear(LinearSystem::decay(lambda, 1.0));
        let grid = TimeGrid::new(dt, 2, 0).unwrap();
        let traj = simulate(&m, &Output::State(0), &[sigma], &grid, &PseudoTimeConfig::default()).unwrap();
        let w = discrete_weights(WindowKind::Hann, 0, 2, Normalization::PaperFaithful).unwrap();
        // Hann over 0..=2: weights (0, 2, 0), J = (2 u1) / 2 = u1.
        let sweep = adjoint_sweep(&m, &Output::State(0), &traj, &w, &AdjointConfig::default()).unwrap();
        let k = lambda * (1.0 + sigma);
        let du1 = -lambda * dt / (1.0 + k * dt).powi(2);
        assert!((sweep.gradient[0] - du1).abs() < 1e-14);
        // Ubar^1 = dJ/du1 = 1 for Newton (dG/du1 = 0).
        assert!((sweep.adjoints[1][0] - 1.0).abs() < 1e-14);
        // Ubar^0 = dJ/du0 = 1 / (1 + k dt).
        assert!((sweep.adjoints[0][0] - 1.0 / (1.0 + k * dt)).abs() < 1e-14);
    }

    #[test]
    fn matches_tangent_on_linear_system() {
        let m = Model::Linear(LinearSystem {
            matrix: vec![vec![0.1, -1.0], vec![1.0, 0.05]],
            initial: vec![1.0, 0.0],
        });
        let grid = TimeGrid::new(0.1, 300, 100).unwrap();
        for dtau in [f64::INFINITY, 0.3] {
            let pcfg = PseudoTimeConfig { dtau, ..Default::default() };
            let traj = simulate(&m, &Output::StateSquared(0), &[0.2], &grid, &pcfg).unwrap();
            let tan = tangent(&m, &Output::StateSquared(0), &traj).unwrap();
            for kind in WindowKind::ALL {
                let w = discrete_weights(kind, 100, 300, Normalization::PaperFaithful).unwrap();
                let t = windowed_tangent_sensitivity(&tan, &w).unwrap();
                let a = adjoint_sweep(&m, &Output::StateSquared(0), &traj, &w, &AdjointConfig::matching(&pcfg))
                    .unwrap();
                assert!((t[0] - a.gradient[0]).abs() <= 1e-8 * t[0].abs(), "{kind} dtau={dtau} {} {}", t[0], a.gradient[0]);
                assert!(a.max_contraction() < 1.0);
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_gradient() {
        let m = Model::van_der_pol();
        let grid = TimeGrid::new(0.1, 200, 50).unwrap();
        let traj = simulate(&m, &Output::StateSquared(0), &[1.0], &grid, &PseudoTimeConfig::default()).unwrap();
        let w = discrete_weights(WindowKind::Bump, 50, 200, Normalization::PaperFaithful)
            .unwrap()
            .scaled(0.0);
        let sweep = adjoint_sweep(&m, &Output::StateSquared(0), &traj, &w, &AdjointConfig::default()).unwrap();
        assert_eq!(sweep.gradient[0], 0.0);
    }

    #[test]
    fn missing_states_are_reported() {
        let m = Model::van_der_pol();
        let grid = TimeGrid::new(0.1, 20, 5).unwrap();
        let traj = simulate(&m, &Output::State(0), &[1.0], &grid, &PseudoTimeConfig::default()).unwrap();
        let w = discrete_weights(WindowKind::Hann, 5, 40, Normalization::PaperFaithful).unwrap();
        assert!(matches!(
            adjoint_sweep(&m, &Output::State(0), &traj, &w, &AdjointConfig::default()),
            Err(Error::MissingStates { .. })
        ));
    }
}
