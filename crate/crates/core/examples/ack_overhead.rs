// Bytes the client spends on acknowledgments under three strategies.

use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::median;
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RunOptions {
        discard_trace: true,
        ..RunOptions::default()
    };
    let setups = [
        ("per-path spaces, delayed ACKs", Design::Mpns, false),
        ("shared space, delayed ACKs", Design::Spns, false),
        (
            "per-path spaces, all paths every 2 packets",
            Design::Mpns,
            true,
        ),
    ];
    for (name, design, pquic) in setups {
        let mut e = Experiment::desk(Family::Hetero2, design, CcAlgorithm::Cubic);
        e.points = 8;
        e.pquic_mode = pquic;
        let results = run_all(&e.runs()?, opts)?;
        let bytes: Vec<f64> = results
            .iter()
            .map(|r| r.metrics.ack_bytes_total as f64)
            .collect();
        let frames: Vec<f64> = results
            .iter()
            .map(|r| r.metrics.ack_frames as f64)
            .collect();
        println!(
            "{name:<44} median {:>7.0} bytes in {:>5.0} frames",
            median(&bytes),
            median(&frames)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
