// Runs one configuration, stores its trace and result files, and rebuilds
// the metrics and plots from what was written.

use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::{collect_rows, trace_path, write_plots, write_results};
use mpquic_sim::harness::{extract_metrics, run_all, Experiment, Family, RunOptions};
use mpquic_sim::trace::{read_jsonl, TraceEvent};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join(format!("mpquic-sim-example-{}", std::process::id()));
    let mut e = Experiment::desk(Family::Hetero2, Design::Mpns, CcAlgorithm::Cubic);
    e.points = 2;
    e.transfer_size = 2 << 20;
    let cfg = e.runs()?;
    let results = run_all(&cfg, RunOptions::default())?;
    write_results(&out, &results)?;

    let path = trace_path(&out, cfg[0].run_id);
    let trace = read_jsonl(std::io::BufReader::new(std::fs::File::open(&path)?))?;
    let lost = trace
        .iter()
        .filter(|r| matches!(r.event, TraceEvent::PacketLost { .. }))
        .count();
    println!("{}: {} events, {lost} losses", path.display(), trace.len());
    for r in trace.iter().filter(|r| {
        matches!(
            r.event,
            TraceEvent::HandshakeComplete { .. } | TraceEvent::PathValidated { .. }
        )
    }) {
        println!(
            "  {:>9.3} ms {:?} {:?}",
            r.time_us / 1000.0,
            r.side,
            r.event
        );
    }
    let m = extract_metrics(&trace, cfg[0].transfer_size)?;
    assert_eq!(m, results[0].metrics);
    println!(
        "  {:.3} s, {:.2} ranges/ACK",
        m.transfer_time_s, m.mean_ranges_per_ack_frame
    );

    let rows = collect_rows(&out)?;
    for p in write_plots(&out, &rows)? {
        println!("  wrote {}", p.display());
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
