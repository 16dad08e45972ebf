//! Forward sensitivities of the windowed mean of x^2 on Van der Pol.

use lco::{
    discrete_weights, simulate, tangent, windowed_tangent_sensitivity, Model, Normalization, Output,
    PseudoTimeConfig, TimeGrid, WindowKind,
};

fn main() -> lco::Result<()> {
    let model = Model::van_der_pol();
    let output = Output::StateSquared(0);
    let grid = TimeGrid::new(0.21, 1200, 500)?;
    let traj = simulate(&model, &output, &[1.0], &grid, &PseudoTimeConfig::default())?;
    let tan = tangent(&model, &output, &traj)?;
    println!("{} dense solves", tan.dense_solves);
    for kind in WindowKind::ALL {
        let w = discrete_weights(kind, grid.transient, grid.steps, Normalization::PaperFaithful)?;
        let s = windowed_tangent_sensitivity(&tan, &w)?;
        println!("{:<12} dJ/dmu = {:+.10e}", kind.name(), s[0]);
    }
    Ok(())
}
