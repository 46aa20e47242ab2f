//! A time sweep from a preset configuration, written as CSV to stdout.

use std::io;

use pointer_entropy::scenario::{preset, run_scenario};

fn main() -> pointer_entropy::Result<()> {
    let mut config = preset("ak-ohmic")?;
    config.sweep.start = 0.25;
    config.sweep.stop = 1.5;
    config.sweep.steps = 6;
    let report = run_scenario(&config.build(None)?)?;
    report.write_csv(io::stdout().lock())?;
    eprintln!("{}", report.summary());
    Ok(())
}
