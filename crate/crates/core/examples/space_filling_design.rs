// Space-filling scenario designs for the three path families.

use mpquic_sim::harness::wsp::min_pairwise_distance;
use mpquic_sim::harness::{wsp_design, Family, DEFAULT_SEED};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for family in Family::ALL {
        let bounds = family.bounds();
        let points = wsp_design(&bounds, 12, DEFAULT_SEED)?;
        let unit: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&bounds)
                    .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
                    .collect()
            })
            .collect();
        println!(
            "{family}: {} points over {:?}, min distance {:.3} (unit cube)",
            points.len(),
            family.coordinate_names(),
            min_pairwise_distance(&unit)
        );
        for p in points.iter().take(3) {
            let paths = family.paths(p)?;
            let desc: Vec<String> = paths.iter().map(ToString::to_string).collect();
            println!("  {}", desc.join("  "));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
