use std::fs;

use mpquic_sim::acktrack::{AbLimit, AckDispatch};
use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::endpoint::Connection;
use mpquic_sim::harness::report::{trace_path, write_results};
use mpquic_sim::harness::{
    extract_metrics, metrics_from_outcome, run_all, Experiment, Family, RunConfig, RunOptions,
};
use mpquic_sim::netsim::Simulation;
use mpquic_sim::trace::{read_jsonl, TraceEvent};
use mpquic_sim::Design;

fn small(family: Family, design: Design, cc: CcAlgorithm, points: usize) -> Vec<RunConfig> {
    let mut e = Experiment::desk(family, design, cc);
    e.transfer_size = 1 << 20;
    e.points = points;
    e.runs().unwrap()
}

#[test]
fn same_seed_gives_identical_outputs() {
    let cfgs = small(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic, 4);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let results = run_all(&cfgs, RunOptions::default()).unwrap();
        write_results(d.path(), &results).unwrap();
    }
    let read = |d: &tempfile::TempDir, name: &str| fs::read(d.path().join(name)).unwrap();
    assert_eq!(read(&dirs[0], "runs.csv"), read(&dirs[1], "runs.csv"));
    assert_eq!(read(&dirs[0], "points.csv"), read(&dirs[1], "points.csv"));
    for c in &cfgs {
        let a = fs::read(trace_path(dirs[0].path(), c.run_id)).unwrap();
        let b = fs::read(trace_path(dirs[1].path(), c.run_id)).unwrap();
        assert!(!a.is_empty());
        assert!(a == b, "trace of run {} differs", c.run_id);
    }
}

#[test]
fn different_seeds_give_different_designs() {
    let mut e = Experiment::desk(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic);
    let a = e.design_points().unwrap();
    e.seed += 1;
    assert_ne!(a, e.design_points().unwrap());
}

#[test]
fn online_counters_agree_with_trace() {
    let mut cfgs = small(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic, 3);
    cfgs.extend(small(Family::Hetero3, Design::Mpns, CcAlgorithm::Bbr, 3));
    for c in cfgs.iter_mut().step_by(2) {
        c.ab_limit = AbLimit::Limited(4);
        c.dispatch = AckDispatch::Duplicate;
    }
    for cfg in &cfgs {
        let conn = cfg.connection_config();
        let out = Simulation::new(
            Connection::client(conn),
            Connection::server(conn),
            &cfg.links(),
        )
        .run()
        .unwrap();
        let online = metrics_from_outcome(&out, cfg.transfer_size).unwrap();
        let offline = extract_metrics(&out.trace, cfg.transfer_size).unwrap();
        assert_eq!(online, offline, "{}", cfg.label());

        // The JSON-lines form carries the same information.
        let text = mpquic_sim::trace::to_jsonl_string(&out.trace);
        let back = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(extract_metrics(&back, cfg.transfer_size).unwrap(), offline);
    }
}

#[test]
fn every_byte_arrives_and_bounds_hold() {
    for (family, design) in [
        (Family::Homo2, Design::Mpns),
        (Family::Hetero2, Design::Spns),
        (Family::Hetero3, Design::Mpns),
    ] {
        let cfgs = small(family, design, CcAlgorithm::Cubic, 3);
        let results = run_all(&cfgs, RunOptions::default()).unwrap();
        for r in &results {
            assert!(r.metrics.transfer_time_s >= r.config.lower_bound_seconds());
            let negotiated: u64 = r
                .trace
                .iter()
                .filter_map(|t| match t.event {
                    TraceEvent::HandshakeComplete { multipath } => multipath,
                    _ => None,
                })
                .map(|d| {
                    assert_eq!(d, design);
                    1
                })
                .sum();
            assert_eq!(negotiated, 2, "both endpoints negotiate {design}");
        }
    }
}

#[test]
fn spurious_losses_need_limited_blocks_on_clean_paths() {
    // Equal paths, tiny transfer: no queue overflows, so any loss would be spurious.
    let mut cfgs = small(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic, 4);
    for c in &mut cfgs {
        c.ab_limit = AbLimit::Unlimited;
        c.transfer_size = 200_000;
    }
    for r in run_all(&cfgs, RunOptions::default()).unwrap() {
        if r.metrics.buffer_drops == 0 {
            assert_eq!(r.metrics.spurious_losses, 0, "{:?}", r.config.paths);
            assert_eq!(r.metrics.rel_retransmitted, 0.0);
        }
    }
}
