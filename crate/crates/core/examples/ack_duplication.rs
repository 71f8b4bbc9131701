// BBR over heterogeneous paths: acknowledging on the arrival path versus
// sending a copy of every ACK on all paths.

use mpquic_sim::acktrack::AckDispatch;
use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::median;
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut e = Experiment::desk(Family::Hetero2, Design::Spns, CcAlgorithm::Bbr);
    e.points = 10;
    let opts = RunOptions {
        discard_trace: true,
        ..RunOptions::default()
    };
    let mut per_dispatch = Vec::new();
    for dispatch in [AckDispatch::OnPath, AckDispatch::Duplicate] {
        e.dispatch = dispatch;
        per_dispatch.push(run_all(&e.runs()?, opts)?);
    }
    let (on_path, duplicate) = (&per_dispatch[0], &per_dispatch[1]);
    println!("paths                                   on-path  duplicate  ratio");
    let mut ratios = Vec::new();
    for (o, d) in on_path.iter().zip(duplicate) {
        let paths: Vec<String> = o.config.paths.iter().map(ToString::to_string).collect();
        let ratio = o.metrics.transfer_time_s / d.metrics.transfer_time_s;
        ratios.push(ratio);
        println!(
            "{:<38} {:>7.3}  {:>9.3}  {ratio:.3}",
            paths.join(" "),
            o.metrics.transfer_time_s,
            d.metrics.transfer_time_s
        );
    }
    println!("median ratio {:.3}", median(&ratios));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
