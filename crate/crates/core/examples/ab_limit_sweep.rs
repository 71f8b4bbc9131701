// Shrinks the ACK block budget on heterogeneous paths sharing one number
// space and reports retransmissions and transfer times.

use mpquic_sim::acktrack::AbLimit;
use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::median;
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("limit  median time  median retx  max retx  spurious");
    for ab in [32, 16, 8, 4] {
        let mut e = Experiment::desk(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic);
        e.ab_limit = AbLimit::Limited(ab);
        e.points = 10;
        let results = run_all(
            &e.runs()?,
            RunOptions {
                discard_trace: true,
                ..RunOptions::default()
            },
        )?;
        let times: Vec<f64> = results.iter().map(|r| r.metrics.transfer_time_s).collect();
        let retx: Vec<f64> = results
            .iter()
            .map(|r| r.metrics.rel_retransmitted)
            .collect();
        let spurious: u64 = results.iter().map(|r| r.metrics.spurious_losses).sum();
        println!(
            "{ab:>5}  {:>11.3}  {:>11.4}  {:>8.3}  {spurious:>8}",
            median(&times),
            median(&retx),
            retx.iter().copied().fold(0.0, f64::max)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
