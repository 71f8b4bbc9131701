// Three heterogeneous paths: how often a shared number space fills all 33
// ranges of an ACK frame, and what it costs compared with per-path spaces.

use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::median;
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RunOptions {
        discard_trace: true,
        ..RunOptions::default()
    };
    for design in [Design::Spns, Design::Mpns] {
        let mut e = Experiment::desk(Family::Hetero3, design, CcAlgorithm::Cubic);
        e.points = 8;
        let results = run_all(&e.runs()?, opts)?;
        let at_limit: Vec<f64> = results
            .iter()
            .map(|r| r.metrics.frac_ack_frames_at_limit)
            .collect();
        let ranges: Vec<f64> = results
            .iter()
            .map(|r| r.metrics.mean_ranges_per_ack_frame)
            .collect();
        let times: Vec<f64> = results.iter().map(|r| r.metrics.transfer_time_s).collect();
        println!(
            "{design}: median {:.1} ranges/ACK, {:.0}% of frames at the limit, median time {:.3} s",
            median(&ranges),
            100.0 * median(&at_limit),
            median(&times)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
