//! Windowed sensitivities of a signal whose sensitivity envelope grows
//! exponentially: no window converges, smooth ones diverge more slowly.

use lco::analysis::{analytic_sensitivity_series, divergence_diagnostic, StudyOptions};
use lco::models::{AnalyticSignalSpec, MeanMap};
use lco::WindowKind;

fn main() -> lco::Result<()> {
    let k_list = [2, 4, 6, 8, 12, 16, 24, 32];
    let opts = StudyOptions {
        period: Some(1.0),
        ..Default::default()
    };
    for growth_rate in [0.0, 0.1] {
        let spec = AnalyticSignalSpec {
            mean: MeanMap::affine(0.5, vec![2.0]),
            amplitude: 1.0,
            base_period: 1.0,
            growth_rate,
        };
        let series = analytic_sensitivity_series(&spec, &[0.0], 0.02, 1800, 0);
        println!("growth rate {growth_rate}:");
        for kind in WindowKind::ALL {
            let table = divergence_diagnostic(&series, kind, 18, 0.02, &k_list, &opts)?;
            let mags: Vec<String> = table.rows.iter().map(|r| format!("{:.2e}", r.magnitude)).collect();
            println!("  {:<12} growing {:<5} |J| {}", kind.name(), table.any_growth(), mags.join(" "));
        }
    }
    Ok(())
}
