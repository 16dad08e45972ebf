//! Window functions, their smoothness classes and discrete weights.

use lco::windows::{bump_normalization, window_value};
use lco::{discrete_weights, Normalization, WindowKind};

fn main() -> lco::Result<()> {
    println!("bump normalization A = {:.16e}", bump_normalization());
    println!("{:<12} {:>10} {:>10} {:>10}", "window", "w(0.25)", "w(0.5)", "order");
    for kind in WindowKind::ALL {
        println!(
            "{:<12} {:>10.6} {:>10.6} {:>10}",
            kind.name(),
            window_value(kind, 0.25),
            window_value(kind, 0.5),
            format!("{:?}", kind.average_order())
        );
    }

    // Weights over steps 10..=20 and how close their mean is to one.
    for kind in WindowKind::ALL {
        let w = discrete_weights(kind, 10, 20, Normalization::PaperFaithful)?;
        let mean = w.values().iter().sum::<f64>() / w.span() as f64;
        let rows: Vec<String> = w.rows().map(|(n, _, v)| format!("{n}:{v:.3}")).collect();
        println!("{:<12} mean {mean:.6}  {}", kind.name(), rows.join(" "));
    }
    Ok(())
}
