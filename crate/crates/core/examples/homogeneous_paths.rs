// Two identical paths: with one number space per path the receiver sees no
// holes, while a shared space interleaves the paths.

use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::median;
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for design in [Design::Mpns, Design::Spns] {
        let mut e = Experiment::desk(Family::Homo2, design, CcAlgorithm::Cubic);
        e.points = 8;
        let opts = RunOptions {
            discard_trace: true,
            ..RunOptions::default()
        };
        let results = run_all(&e.runs()?, opts)?;
        println!("== {design}");
        for r in &results {
            let m = &r.metrics;
            println!(
                "  {:<18} {:6.3} s  {:5.2} ranges/ACK  drops {}",
                r.config.paths[0].to_string(),
                m.transfer_time_s,
                m.mean_ranges_per_ack_frame,
                m.buffer_drops
            );
        }
        let times: Vec<f64> = results.iter().map(|r| r.metrics.transfer_time_s).collect();
        println!("  median transfer time {:.3} s", median(&times));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
