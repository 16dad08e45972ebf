//! March Van der Pol to its limit cycle and measure the period.

use lco::{estimate_period, simulate, Model, Output, PseudoTimeConfig, TimeGrid};

fn main() -> lco::Result<()> {
    let model = Model::van_der_pol();
    let grid = TimeGrid::new(0.05, 4000, 1000)?;
    let pseudo = PseudoTimeConfig {
        dtau: 0.5,
        ..Default::default()
    };
    for mu in [0.5, 1.0, 2.0] {
        let traj = simulate(&model, &Output::State(0), &[mu], &grid, &pseudo)?;
        let p = estimate_period(&traj.outputs, grid.transient, grid.dt)?;
        let amplitude = traj.outputs[grid.transient..].iter().cloned().fold(0.0, f64::max);
        let inner = traj.inner_iterations.iter().sum::<usize>() as f64 / grid.steps as f64;
        println!(
            "mu = {mu}: period {:.4} ({:.1} periods recorded), amplitude {amplitude:.4}, {inner:.1} inner iterations per step",
            p.period, p.periods
        );
    }
    Ok(())
}
