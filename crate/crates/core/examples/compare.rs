//! The IPM against the block-coordinate baseline on one instance.

use l0fa::harness::{cli_compare, RunConfig};

fn main() -> l0fa::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.data.p = 12;
    cfg.data.r = 2;
    cfg.data.n = 800;
    cfg.baseline.max_iters = 2000;
    let out = std::env::temp_dir().join("l0fa-compare-example");
    let report = cli_compare(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
