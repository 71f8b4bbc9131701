use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpquic_sim::acktrack::{AbLimit, AckDispatch, RangeSelection};
use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::harness::report::{self, RUNS_CSV, SUMMARY_CSV};
use mpquic_sim::harness::{
    run_all, run_one, wsp_design, Experiment, Family, RunConfig, RunOptions, DEFAULT_SEED,
    DESK_POINTS, DESK_TRANSFER_SIZE,
};
use mpquic_sim::Design;

#[derive(Parser)]
#[command(
    name = "mpquic-sim",
    version,
    about = "Multipath QUIC packet number space simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol configuration over a space-filling set of scenarios.
    Run(RunArgs),
    /// Print the design points of a family as CSV.
    Design {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = DESK_POINTS)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Summarize and plot the runs stored in a directory and its subdirectories.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write summary.csv.
        #[arg(long)]
        csv: bool,
        /// Write plots/*.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Run a single configuration file and keep its full trace.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "replay-out")]
        out: PathBuf,
        /// Also trace link enqueue and delivery events.
        #[arg(long)]
        link_events: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// homo2, hetero2 or hetero3.
    #[arg(long)]
    family: Family,
    /// spns (one shared number space) or mpns (one per path).
    #[arg(long)]
    design: Design,
    /// cubic or bbr.
    #[arg(long, default_value = "cubic")]
    cc: CcAlgorithm,
    /// Additional ACK blocks per frame, or `inf`.
    #[arg(long, default_value = "32")]
    ab_limit: AbLimit,
    /// largest-first or lowest-first.
    #[arg(long, default_value = "largest-first")]
    strategy: RangeSelection,
    /// on-path or duplicate.
    #[arg(long, default_value = "on-path")]
    dispatch: AckDispatch,
    /// Acknowledge every path whenever two packets arrive on any path.
    #[arg(long)]
    pquic_mode: bool,
    /// Never send or honour ACK_FREQUENCY.
    #[arg(long)]
    no_ack_frequency: bool,
    /// Transfer size in bytes.
    #[arg(long, default_value_t = DESK_TRANSFER_SIZE)]
    size: u64,
    #[arg(long, default_value_t = DESK_POINTS)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Skip writing per-run traces.
    #[arg(long)]
    no_traces: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run(a) => {
            let exp = Experiment {
                family: a.family,
                design: a.design,
                cc: a.cc,
                ab_limit: a.ab_limit,
                strategy: a.strategy,
                dispatch: a.dispatch,
                pquic_mode: a.pquic_mode,
                ack_frequency: !a.no_ack_frequency,
                transfer_size: a.size,
                points: a.points,
                seed: a.seed,
            };
            let runs = exp.runs()?;
            let opts = RunOptions {
                discard_trace: a.no_traces,
                ..RunOptions::default()
            };
            let results = run_all(&runs, opts)?;
            let rows = report::write_results(&a.out, &results)?;
            for s in report::summarize(&rows) {
                println!(
                    "{}: {} runs, median time {:.3} s, median ranges {:.2}, median retransmitted {:.4}",
                    s.label, s.runs, s.median_transfer_time_s, s.median_mean_ranges, s.median_rel_retransmitted
                );
            }
            println!("wrote {}", a.out.join(RUNS_CSV).display());
        }
        Command::Design {
            family,
            points,
            seed,
        } => {
            let pts = wsp_design(&family.bounds(), points, seed)?;
            println!("point_id,{}", family.coordinate_names().join(","));
            for (i, p) in pts.iter().enumerate() {
                let coords: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                println!("{i},{}", coords.join(","));
            }
        }
        Command::Report { input, csv, svg } => {
            let rows = report::collect_rows(&input)?;
            let summary = if csv {
                report::write_summary_csv(&input.join(SUMMARY_CSV), &rows)?
            } else {
                report::summarize(&rows)
            };
            for s in &summary {
                println!(
                    "{:<48} n={:<3} median {:.3} s  max {:.3} s  ranges {:.2}  at-limit {:.2}  retx {:.4}  ack bytes {:.0}",
                    s.label,
                    s.runs,
                    s.median_transfer_time_s,
                    s.max_transfer_time_s,
                    s.median_mean_ranges,
                    s.median_frac_at_limit,
                    s.median_rel_retransmitted,
                    s.median_ack_bytes
                );
            }
            if svg {
                for f in report::write_plots(&input.join(report::PLOTS_DIR), &rows)? {
                    println!("wrote {}", f.display());
                }
            }
        }
        Command::Replay {
            config,
            out,
            link_events,
        } => {
            let cfg = RunConfig::load(&config)?;
            let result = run_one(
                &cfg,
                RunOptions {
                    link_events,
                    ..RunOptions::default()
                },
            )?;
            fs::create_dir_all(&out)?;
            report::write_results(&out, std::slice::from_ref(&result))?;
            let m = &result.metrics;
            println!("{}", cfg.label());
            println!("transfer time      {:.6} s", m.transfer_time_s);
            println!("mean ranges/frame  {:.3}", m.mean_ranges_per_ack_frame);
            println!("frames at limit    {:.3}", m.frac_ack_frames_at_limit);
            println!("retransmitted      {:.4}", m.rel_retransmitted);
            println!("ack bytes          {}", m.ack_bytes_total);
            println!(
                "trace              {}",
                report::trace_path(&out, cfg.run_id).display()
            );
        }
    }
    Ok(())
}
