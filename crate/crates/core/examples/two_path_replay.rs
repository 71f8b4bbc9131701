// Replays twelve packets sent round robin over a slow upper path and a fast
// lower path, and prints what the receiver acknowledges under each design.

use mpquic_sim::harness::replay::{replay, LOWER_PATH};
use mpquic_sim::Design;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for design in [Design::Spns, Design::Mpns] {
        let r = replay(design);
        println!("== {design}");
        for a in &r.arrivals {
            let name = if a.path == LOWER_PATH {
                "lower"
            } else {
                "upper"
            };
            println!(
                "  {:>5.1} ms  {name:<5} space {} pn {:>2}",
                a.time.as_micros_f64() / 1000.0,
                a.space,
                a.pn
            );
        }
        let widest = r.acks.iter().map(|a| a.ranges.len()).max().unwrap_or(0);
        println!("  {} ACK frames, at most {widest} ranges", r.acks.len());
        println!(
            "  received when the 4th lower-path packet lands: {:?}",
            r.ranges_at_fourth_lower
        );
        if let Some(ack) = &r.ack_before_fourth_lower {
            println!("  previous ACK advertised {:?}", ack.ranges);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
