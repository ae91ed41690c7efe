//! Runs every pipeline stage with the desk config into a directory and
//! prints the report. Extra arguments override config keys.
//!
//! ```text
//! cargo run --release --example run_pipeline -- /tmp/run pooling=mean cap_steps=2000
//! ```

use std::time::Instant;

use partcap::pipeline::{ExperimentConfig, Pipeline, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let root = args.next().unwrap_or_else(|| "target/example-run".into());
    let mut config = ExperimentConfig::from_text(include_str!("../configs/desk.conf"))?;
    for kv in args {
        let (k, v) = kv.split_once('=').ok_or("overrides look like key=value")?;
        config.set(k.trim(), v.trim())?;
    }
    let pipeline = Pipeline::new(config, &root)?;
    for stage in Stage::ALL {
        let t = Instant::now();
        let outcome = pipeline.run_stage(stage)?;
        println!("{stage:<20} {outcome:?} {:.1}s", t.elapsed().as_secs_f64());
    }
    print!("{}", std::fs::read_to_string(pipeline.stage_dir(Stage::Report).join("report.txt"))?);
    Ok(())
}
