// Which received ranges fit in an ACK frame when the number of ACK blocks
// is capped.

use mpquic_sim::acktrack::{select_ranges, AbLimit, RangeSelection, RangeSet};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Every third packet of 0..60 still in flight on a slower path.
    let received: RangeSet = (0..60u64).filter(|pn| pn % 3 != 1).collect();
    println!("{} ranges received", received.len());

    for limit in [AbLimit::Limited(2), AbLimit::Limited(4), AbLimit::Unlimited] {
        for sel in [RangeSelection::LargestFirst, RangeSelection::LowestFirst] {
            let ranges = select_ranges(&received, limit, sel)?;
            let covered: u64 = ranges.iter().map(|(lo, hi)| hi - lo + 1).sum();
            println!(
                "limit {limit:>3} {sel:<13} {:>2} ranges, {covered:>2} packets: {:?}",
                ranges.len(),
                &ranges[..ranges.len().min(5)]
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
