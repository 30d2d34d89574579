//! A TOML-configured batch: per-seed run CSVs, a summary and an SVG chart.

use symic::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
algorithm = "full_feedback"
deviations = "interim_reduced"
horizon = 3000
delta = 0.05
seeds = [1, 2, 3, 4]
out_dir = "target/example-experiment"

[instance]
source = "fixture"
name = "thimp-Y"
eps = 0.05
"#;

fn main() -> symic::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let report = run_experiment(&cfg)?;
    for row in &report.summary {
        println!(
            "seed {}: regret {:.3}, violation {:.3} ({} ms)",
            row.seed, row.regret, row.viol_raw, row.runtime_ms
        );
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    println!("\nconfig as written back:\n{}", cfg.to_toml()?);
    Ok(())
}
