//! A run described by a TOML config, solved and written to disk.

use l0fa::harness::{cli_solve, RunConfig};

const CONFIG: &str = r#"
[data]
p = 10
r = 2
n = 500
seed = 3

[problem]
C = 0.02
mu = 5.0

[ipm]
theta = 0.8

[newton]
gamma = 0.5
"#;

fn main() -> l0fa::Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let out = std::env::temp_dir().join("l0fa-config-example");
    let report = cli_solve(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
    println!("full config with defaults filled in:\n{}", cfg.to_toml_string());
    Ok(())
}
