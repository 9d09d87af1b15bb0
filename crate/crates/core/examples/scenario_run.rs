//! Drives a JSON scenario through the same path as the `spinflip` binary.
use spinflip::scenario::{load_config, run_scenario, RunKind};

fn main() -> spinflip::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/scenarios/red_blue_jump.json");
    let config = load_config(path)?;
    let out = std::env::temp_dir().join("spinflip-scenario-example");
    let report = run_scenario(&config, RunKind::Protocol, &out, Some(1))?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    println!("{}", serde_json::to_string_pretty(&report.summary).expect("json"));
    Ok(())
}
