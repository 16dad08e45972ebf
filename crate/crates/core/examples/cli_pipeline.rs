//! Run the `study` pipeline from a TOML string in-process and print its CSV.

use lco::cli::{execute, Command, Common};
use lco::config::RunConfig;

const CONFIG: &str = include_str!("configs/analytic_study.toml");

fn main() -> lco::Result<()> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    let command = Command::Study {
        common: Common {
            config: "configs/analytic_study.toml".into(),
            out: None,
            sigma: None,
            windows: None,
            normalization: None,
        },
        quantity: None,
        k_list: None,
    };
    let artifacts = execute(&command, &cfg)?;
    for (name, body) in &artifacts.files {
        println!("== {name}");
        print!("{body}");
    }
    println!("{}", serde_json::Value::Object(artifacts.results));
    Ok(())
}
