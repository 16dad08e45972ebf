//! With a period fixed by the forcing, the Square window converges at the same
//! rate for the average and for its sensitivity.

use lco::analysis::{convergence_study, end_step, Reference, StudyOptions};
use lco::models::ForcedOscillator;
use lco::{estimate_period, simulate, tangent, Model, Output, PseudoTimeConfig, TimeGrid, WindowKind};

fn main() -> lco::Result<()> {
    let forced = ForcedOscillator::default();
    let dt = forced.period() / 50.0;
    let model = Model::ForcedOscillator(forced.clone());
    let output = Output::StateSquared(0);
    let transient = 750;
    let steps = end_step(transient, forced.period() / 2.0, dt, 300.0) + 10;
    let grid = TimeGrid::new(dt, steps, transient)?;
    let traj = simulate(&model, &output, &[0.0, 0.0], &grid, &PseudoTimeConfig::default())?;
    let tan = tangent(&model, &output, &traj)?;
    let opts = StudyOptions {
        period: Some(estimate_period(&traj.outputs, transient, dt)?.period),
        ..Default::default()
    };
    let k_list = [2, 4, 8, 16, 32, 64];
    for kind in WindowKind::ALL {
        let avg = convergence_study(&traj.outputs, kind, transient, dt, &k_list, Reference::BumpAtPeriods(300), &opts)?;
        let stiff = tan.component(0);
        let sens = convergence_study(&stiff, kind, transient, dt, &k_list, Reference::BumpAtPeriods(300), &opts)?;
        println!(
            "{:<12} slope average {:>7.3}  slope d/dstiffness {:>7.3}",
            kind.name(),
            avg.slope,
            sens.slope
        );
    }
    Ok(())
}
