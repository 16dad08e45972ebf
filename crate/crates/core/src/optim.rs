//! Projected-gradient design loop on windowed objectives with a quadratic
//! penalty for one inequality constraint.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::adjoint::{adjoint_sweep, AdjointConfig};
use crate::error::{Error, Result};
use crate::models::{DesignVector, Model, Output};
use crate::primal::{simulate, PseudoTimeConfig, TimeGrid};
use crate::windows::{discrete_weights, Normalization, WindowKind};

/// `C_w >= bound`, averaged with the objective's window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub output: Output,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignProblem {
    pub model: Model,
    pub objective: Output,
    pub constraint: Option<Constraint>,
    pub window: WindowKind,
    pub normalization: Normalization,
    pub grid: TimeGrid,
    pub pseudo: PseudoTimeConfig,
    pub design: DesignVector,
    pub relaxation: f64,
    pub max_iterations: usize,
    pub penalty: f64,
    pub gradient_tolerance: f64,
}

impl DesignProblem {
    pub fn new(model: Model, objective: Output, grid: TimeGrid, design: DesignVector) -> Self {
        DesignProblem {
            model,
            objective,
            constraint: None,
            window: WindowKind::Bump,
            normalization: Normalization::PaperFaithful,
            grid,
            pseudo: PseudoTimeConfig::default(),
            design,
            relaxation: 0.1,
            max_iterations: 50,
            penalty: 100.0,
            gradient_tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.objective.validate(&self.model)?;
        Error::check_dim("design vector", self.model.design_dim(), self.design.len())?;
        if let Some(c) = &self.constraint {
            c.output.validate(&self.model)?;
            if !c.bound.is_finite() {
                return Err(Error::Config("constraint bound must be finite".into()));
            }
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Config(format!(
                "relaxation {} outside (0, 1]",
                self.relaxation
            )));
        }
        if !(self.penalty > 0.0) {
            return Err(Error::Config("penalty must be positive".into()));
        }
        self.grid.validate()?;
        self.pseudo.validate()
    }
}

/// Windowed values and relaxed gradients at one design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEvaluation {
    pub sigma: Vec<f64>,
    pub objective: f64,
    pub constraint: Option<f64>,
    /// `relaxation * dJ_w/dsigma`.
    pub objective_gradient: DVector<f64>,
    /// `relaxation * dC_w/dsigma`.
    pub constraint_gradient: Option<DVector<f64>>,
}

/// One primal run and one adjoint sweep per output at `sigma`.
pub fn evaluate_design(problem: &DesignProblem, sigma: &[f64]) -> Result<DesignEvaluation> {
    let wrap = |source: Error| Error::DesignEvaluation {
        design: sigma.to_vec(),
        source: Box::new(source),
    };
    let run = || -> Result<DesignEvaluation> {
        let traj = simulate(&problem.model, &problem.objective, sigma, &problem.grid, &problem.pseudo)?;
        let weights = discrete_weights(
            problem.window,
            problem.grid.transient,
            problem.grid.steps,
            problem.normalization,
        )?;
        let acfg = AdjointConfig::matching(&problem.pseudo);
        let objective = weights.average(&traj.outputs)?;
        let objective_gradient =
            adjoint_sweep(&problem.model, &problem.objective, &traj, &weights, &acfg)?.gradient
                * problem.relaxation;
        let (constraint, constraint_gradient) = match &problem.constraint {
            Some(c) => {
                let values = traj.evaluate(&c.output);
                let grad = adjoint_sweep(&problem.model, &c.output, &traj, &weights, &acfg)?.gradient;
                (Some(weights.average(&values)?), Some(grad * problem.relaxation))
            }
            None => (None, None),
        };
        Ok(DesignEvaluation {
            sigma: sigma.to_vec(),
            objective,
            constraint,
            objective_gradient,
            constraint_gradient,
        })
    };
    run().map_err(wrap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignStep {
    pub iteration: usize,
    pub sigma: Vec<f64>,
    pub objective: f64,
    pub constraint: Option<f64>,
    pub feasible: bool,
    /// Norm of the projected gradient of the merit.
    pub gradient_norm: f64,
    /// `||sigma_{i+1} - sigma_i||`; zero on the last row.
    pub step: f64,
    pub merit: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignHistory {
    pub steps: Vec<DesignStep>,
    pub converged: bool,
    pub line_search_failed: bool,
}

impl DesignHistory {
    pub fn final_design(&self) -> &[f64] {
        self.steps.last().map_or(&[], |s| &s.sigma)
    }

    /// Number of accepted design updates.
    pub fn updates(&self) -> usize {
        self.steps.iter().filter(|s| s.step > 0.0).count()
    }
}

fn merit_of(problem: &DesignProblem, eval: &DesignEvaluation, penalty: f64) -> (f64, DVector<f64>) {
    let inv = 1.0 / problem.relaxation;
    let mut merit = eval.objective;
    let mut grad = &eval.objective_gradient * inv;
    if let (Some(c), Some(cv), Some(cg)) = (&problem.constraint, eval.constraint, &eval.constraint_gradient) {
        let violation = (c.bound - cv).max(0.0);
        merit += penalty * violation * violation;
        grad.axpy(-2.0 * penalty * violation * inv, cg, 1.0);
    }
    (merit, grad)
}

fn feasible(problem: &DesignProblem, eval: &DesignEvaluation) -> bool {
    match (&problem.constraint, eval.constraint) {
        (Some(c), Some(v)) => v >= c.bound,
        _ => true,
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
const INFEASIBLE_PATIENCE: usize = 3;

/// Projected gradient descent with backtracking on the penalized merit
/// `J_w + rho max(0, bound - C_w)^2`.
pub fn optimize(problem: &DesignProblem, sigma0: &[f64]) -> Result<DesignHistory> {
    problem.validate()?;
    Error::check_dim("initial design", problem.design.len(), sigma0.len())?;
    if !problem.design.contains(sigma0) {
        return Err(Error::OutsideBox {
            values: sigma0.to_vec(),
        });
    }
    let project = |x: &[f64]| problem.design.project(x);

    let mut penalty = problem.penalty;
    let mut infeasible_streak = 0;
    let mut eval = evaluate_design(problem, sigma0)?;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut line_search_failed = false;

    for iteration in 0..problem.max_iterations {
        let sigma = eval.sigma.clone();
        let (merit, grad) = merit_of(problem, &eval, penalty);
        let is_feasible = feasible(problem, &eval);
        let trial: Vec<f64> = sigma.iter().zip(grad.iter()).map(|(s, g)| s - g).collect();
        let gradient_norm = sigma
            .iter()
            .zip(project(&trial))
            .map(|(s, p)| (s - p).powi(2))
            .sum::<f64>()
            .sqrt();
        let mut row = DesignStep {
            iteration,
            sigma: sigma.clone(),
            objective: eval.objective,
            constraint: eval.constraint,
            feasible: is_feasible,
            gradient_norm,
            step: 0.0,
            merit,
            penalty,
        };
        if gradient_norm < problem.gradient_tolerance {
            converged = true;
            steps.push(row);
            break;
        }

        let direction = -(&grad * problem.relaxation);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let raw: Vec<f64> = sigma
                .iter()
                .zip(direction.iter())
                .map(|(s, d)| s + alpha * d)
                .collect();
            let candidate = project(&raw);
            let moved: f64 = candidate.iter().zip(&sigma).map(|(c, s)| (c - s) * (c - s)).sum();
            if moved == 0.0 {
                break;
            }
            let slope: f64 = grad
                .iter()
                .zip(candidate.iter().zip(&sigma))
                .map(|(g, (c, s))| g * (c - s))
                .sum();
            let next = evaluate_design(problem, &candidate)?;
            let (next_merit, _) = merit_of(problem, &next, penalty);
            if next_merit <= merit + ARMIJO * slope {
                accepted = Some((next, moved.sqrt()));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((next, length)) => {
                row.step = length;
                steps.push(row);
                eval = next;
            }
            None => {
                line_search_failed = true;
                steps.push(row);
                break;
            }
        }

        if is_feasible {
            infeasible_streak = 0;
        } else {
            infeasible_streak += 1;
            if infeasible_streak >= INFEASIBLE_PATIENCE {
                penalty *= 2.0;
                infeasible_streak = 0;
            }
        }
    }

    Ok(DesignHistory {
        steps,
        converged,
        line_search_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AnalyticSignalSpec, MeanMap};

    fn quadratic_problem(amplitude: f64) -> DesignProblem {
        let spec = AnalyticSignalSpec {
            mean: MeanMap::quadratic(0.5, 1.0, vec![0.1]),
            amplitude,
            base_period: 1.0,
            growth_rate: 0.0,
        };
        let model = Model::AnalyticSignal(spec);
        let objective = model.default_output();
        let grid = TimeGrid::new(1.0 / 40.0, 1240, 40).unwrap();
        let design = DesignVector::new(vec![-0.2], vec![-0.3], vec![0.3]).unwrap();
        DesignProblem::new(model, objective, grid, design)
    }

    #[test]
    fn affine_mean_gradient_is_relaxed_slope() {
        let spec = AnalyticSignalSpec {
            mean: MeanMap::affine(1.0, vec![0.7]),
            amplitude: 0.0,
            base_period: 1.0,
            growth_rate: 0.0,
        };
        let model = Model::AnalyticSignal(spec);
        let mut p = quadratic_problem(0.0);
        p.objective = model.default_output();
        p.model = model;
        let e = evaluate_design(&p, &[0.05]).unwrap();
        assert!((e.objective_gradient[0] - 0.1 * 0.7).abs() < 1e-10);
    }

    #[test]
    fn corner_designs_are_evaluated() {
        let p = quadratic_problem(0.1);
        let e = evaluate_design(&p, &[0.3]).unwrap();
        assert!(e.objective.is_finite() && e.objective_gradient[0].is_finite());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = quadratic_problem(0.1);
        let h = 1e-6;
        let e = evaluate_design(&p, &[0.02]).unwrap();
        let up = evaluate_design(&p, &[0.02 + h]).unwrap().objective;
        let down = evaluate_design(&p, &[0.02 - h]).unwrap().objective;
        let fd = (up - down) / (2.0 * h);
        let adj = e.objective_gradient[0] / p.relaxation;
        assert!((adj - fd).abs() <= 1e-4 * fd.abs(), "{adj} vs {fd}");
    }

    #[test]
    fn starting_at_minimizer_stops_immediately() {
        let p = quadratic_problem(0.0);
        let h = optimize(&p, &[0.1]).unwrap();
        assert!(h.converged);
        assert_eq!(h.steps.len(), 1);
        assert_eq!(h.updates(), 0);
    }

    #[test]
    fn converges_to_minimizer_inside_box() {
        let p = quadratic_problem(0.1);
        let h = optimize(&p, &[-0.2]).unwrap();
        assert!((h.final_design()[0] - 0.1).abs() < 1e-4, "{:?}", h.final_design());
        assert!(h.steps.iter().all(|s| p.design.contains(&s.sigma)));
        for w in h.steps[2..].windows(2) {
            assert!(w[1].merit <= w[0].merit);
        }
    }

    #[test]
    fn active_bound_is_respected() {
        let mut p = quadratic_problem(0.0);
        p.design = DesignVector::new(vec![-0.2], vec![-0.3], vec![0.0]).unwrap();
        let h = optimize(&p, &[-0.2]).unwrap();
        assert!((h.final_design()[0] - 0.0).abs() < 1e-12);
        assert!(h.steps.iter().all(|s| s.sigma[0] <= 0.0));
    }

    #[test]
    fn outside_box_is_rejected() {
        let p = quadratic_problem(0.0);
        assert!(matches!(optimize(&p, &[0.5]), Err(Error::OutsideBox { .. })));
    }

    #[test]
    fn feasibility_flag_tracks_constraint() {
        let mut p = quadratic_problem(0.0);
        p.constraint = Some(Constraint {
            output: Output::Signal {
                mean: MeanMap::affine(0.0, vec![1.0]),
                amplitude: 0.0,
            },
            bound: -0.1,
        });
        p.max_iterations = 5;
        let h = optimize(&p, &[-0.2]).unwrap();
        for s in &h.steps {
            assert_eq!(s.feasible, s.constraint.unwrap() >= -0.1);
        }
        assert!(!h.steps[0].feasible);
    }
}
