//! Adjoint gradients against tangents and finite differences, in both
//! adjoint solve modes.

use lco::{
    adjoint_sweep, discrete_weights, simulate, tangent, windowed_tangent_sensitivity, AdjointConfig, AdjointMode,
    Model, Normalization, Output, PseudoTimeConfig, TimeGrid, WindowKind,
};

fn main() -> lco::Result<()> {
    let model = Model::van_der_pol();
    let output = Output::StateSquared(0);
    let grid = TimeGrid::new(0.21, 1200, 500)?;
    let pseudo = PseudoTimeConfig {
        dtau: 1.0,
        tolerance: 1e-14,
        ..Default::default()
    };
    let mu = 1.0;
    let traj = simulate(&model, &output, &[mu], &grid, &pseudo)?;
    let tan = tangent(&model, &output, &traj)?;
    let h = 1e-6;
    let up = simulate(&model, &output, &[mu + h], &grid, &pseudo)?;
    let down = simulate(&model, &output, &[mu - h], &grid, &pseudo)?;

    println!(
        "{:<12} {:>20} {:>10} {:>10} {:>10} {:>8}",
        "window", "adjoint", "vs tan", "vs fd", "vs direct", "max |A|"
    );
    for kind in WindowKind::ALL {
        let w = discrete_weights(kind, grid.transient, grid.steps, Normalization::PaperFaithful)?;
        let cfg = AdjointConfig::matching(&pseudo);
        let fp = adjoint_sweep(&model, &output, &traj, &w, &cfg)?;
        let direct = adjoint_sweep(&model, &output, &traj, &w, &cfg.with_mode(AdjointMode::Direct))?;
        let t = windowed_tangent_sensitivity(&tan, &w)?[0];
        let fd = (w.average(&up.outputs)? - w.average(&down.outputs)?) / (2.0 * h);
        let a = fp.gradient[0];
        println!(
            "{:<12} {a:>20.12e} {:>10.2e} {:>10.2e} {:>10.2e} {:>8.3}",
            kind.name(),
            (a - t).abs() / t.abs(),
            (a - fd).abs() / fd.abs(),
            (a - direct.gradient[0]).abs() / a.abs(),
            fp.max_contraction()
        );
    }
    Ok(())
}
