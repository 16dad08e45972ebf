//! How much a windowed sensitivity moves when the last averaged step shifts
//! by about 29% of a period.

use lco::analysis::endpoint_shift_robustness;
use lco::{
    estimate_period, simulate, tangent, windowed_tangent_sensitivity, Model, Normalization, Output,
    PseudoTimeConfig, TimeGrid, WindowKind,
};

fn main() -> lco::Result<()> {
    let model = Model::van_der_pol();
    let (dt, transient, end) = (0.21, 500, 1200);
    let pseudo = PseudoTimeConfig::default();
    let flow = simulate(&model, &Output::State(0), &[1.0], &TimeGrid::new(dt, end, transient)?, &pseudo)?;
    let period = estimate_period(&flow.outputs, transient, dt)?.period;
    let shift = (0.29 * period / dt).round() as usize;

    let output = Output::StateSquared(0);
    let traj = simulate(&model, &output, &[1.0], &TimeGrid::new(dt, end + shift, transient)?, &pseudo)?;
    let tan = tangent(&model, &output, &traj)?;
    println!("period {period:.4}, shift {shift} steps");
    for kind in WindowKind::ALL {
        let rel = endpoint_shift_robustness(
            |w| windowed_tangent_sensitivity(&tan, w),
            kind,
            transient,
            end,
            shift,
            Normalization::PaperFaithful,
        )?;
        println!("{:<12} relative change {:.4e}", kind.name(), rel);
    }
    Ok(())
}
