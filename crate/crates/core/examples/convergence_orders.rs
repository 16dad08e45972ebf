//! Measured convergence orders of windowed averages and sensitivities of a
//! closed-form periodic signal whose period depends on the design.

use lco::analysis::{analytic_sensitivity_series, analytic_series, convergence_study, Reference, StudyOptions};
use lco::models::{AnalyticSignalSpec, MeanMap};
use lco::{estimate_period, WindowKind};

fn main() -> lco::Result<()> {
    let spec = AnalyticSignalSpec {
        mean: MeanMap::affine(0.5, vec![2.0]),
        amplitude: 1.0,
        base_period: 1.0,
        growth_rate: 0.0,
    };
    let sigma = [0.1];
    let dt = spec.period(&sigma) / 50.0;
    let len = 3500;
    let k_list = [2, 4, 8, 16, 32, 64];
    let primal = analytic_series(&spec, &sigma, dt, len);
    let sens = analytic_sensitivity_series(&spec, &sigma, dt, len, 0);
    let opts = StudyOptions {
        period: Some(estimate_period(&primal, 0, dt)?.period),
        ..Default::default()
    };

    for (label, series, reference) in [
        ("average", &primal, spec.mean.value(&sigma)),
        ("sensitivity", &sens, spec.mean.gradient(&sigma)[0]),
    ] {
        println!("{label}:");
        for kind in WindowKind::ALL {
            let st = convergence_study(series, kind, 0, dt, &k_list, Reference::ClosedForm(reference), &opts)?;
            let errors: Vec<String> = st.errors.iter().map(|e| format!("{e:.1e}")).collect();
            println!("  {:<12} order {:>6.2}  errors {}", kind.name(), st.order(), errors.join(" "));
        }
    }
    Ok(())
}
