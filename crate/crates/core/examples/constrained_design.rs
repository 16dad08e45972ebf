//! Penalized projected-gradient design on Van der Pol: minimize the mean of
//! x^2 while keeping the mean of y^2 above a bound. Square and Bump windows
//! side by side.

use lco::optim::{optimize, Constraint, DesignProblem};
use lco::{DesignVector, Model, Output, TimeGrid, WindowKind};

fn main() -> lco::Result<()> {
    let grid = TimeGrid::new(0.21, 1200, 500)?;
    for window in [WindowKind::Square, WindowKind::Bump] {
        let design = DesignVector::new(vec![1.5], vec![0.5], vec![2.0])?;
        let mut problem = DesignProblem::new(Model::van_der_pol(), Output::StateSquared(0), grid, design);
        problem.window = window;
        problem.max_iterations = 12;
        problem.constraint = Some(Constraint {
            output: Output::StateSquared(1),
            bound: 2.025,
        });
        let history = optimize(&problem, &[1.5])?;
        println!("{window}:");
        for s in &history.steps {
            println!(
                "  it {:>2} mu {:.5} J {:.6} C {:.6} feasible {:<5} merit {:.6} step {:.2e}",
                s.iteration,
                s.sigma[0],
                s.objective,
                s.constraint.unwrap_or(f64::NAN),
                s.feasible,
                s.merit,
                s.step
            );
        }
    }
    Ok(())
}
