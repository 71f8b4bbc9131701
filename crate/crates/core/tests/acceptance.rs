//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured values, then asserts.

mod common;

use std::collections::HashSet;
use std::fs;
use std::time::{Duration, Instant};

use common::{random_frame, runs_of, select_oracle};
use mpquic_sim::acktrack::{select_ranges, AbLimit, AckDispatch, RangeSelection, RangeSet};
use mpquic_sim::cc::CcAlgorithm;
use mpquic_sim::cc::{Cubic, CUBIC_BETA, CUBIC_C, PROBE_BW_GAINS};
use mpquic_sim::harness::replay::replay;
use mpquic_sim::harness::report::{median, trace_path, write_results};
use mpquic_sim::harness::{run_all, Experiment, Family, RunOptions, RunResult};
use mpquic_sim::sendtrack::compute_nonce;
use mpquic_sim::wire::{decode_frame, encode_frame, MSS};
use mpquic_sim::{Design, SimTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: &str, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!(
        "{id} {word} {name} [{:.1}s] {detail}",
        elapsed.as_secs_f64()
    );
    assert!(pass, "{id} {name}: {detail}");
}

fn sweep(exp: Experiment) -> Vec<RunResult> {
    let runs = exp.runs().unwrap();
    run_all(
        &runs,
        RunOptions {
            discard_trace: true,
            ..RunOptions::default()
        },
    )
    .unwrap()
}

fn desk(family: Family, design: Design, cc: CcAlgorithm) -> Experiment {
    Experiment::desk(family, design, cc)
}

fn med(results: &[RunResult], f: impl Fn(&RunResult) -> f64) -> f64 {
    median(&results.iter().map(f).collect::<Vec<_>>())
}

fn time(r: &RunResult) -> f64 {
    r.metrics.transfer_time_s
}

#[test]
fn c1_two_path_replay() {
    let t = Instant::now();
    let spns = replay(Design::Spns);
    let mpns = replay(Design::Mpns);
    let prior = spns
        .ack_before_fourth_lower
        .as_ref()
        .map(|a| a.ranges.clone());
    let single = mpns.acks.iter().all(|a| a.ranges.len() == 1);
    let pass = spns.ranges_at_fourth_lower == [(0, 3), (5, 5), (7, 7)]
        && prior.as_deref() == Some(&[(5, 5), (0, 3)][..])
        && !mpns.acks.is_empty()
        && single
        && t.elapsed() < Duration::from_secs(1);
    verdict(
        "C1",
        "two-path replay",
        pass,
        t.elapsed(),
        &format!(
            "spns ranges {:?}, prior ack {:?}, mpns frames {} all single-range {}",
            spns.ranges_at_fourth_lower,
            prior,
            mpns.acks.len(),
            single
        ),
    );
}

#[test]
fn c2_homogeneous_single_range() {
    let t = Instant::now();
    let res = sweep(desk(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic));
    let clean: Vec<_> = res.iter().filter(|r| r.metrics.buffer_drops == 0).collect();
    let bad: Vec<_> = clean
        .iter()
        .filter(|r| r.metrics.mean_ranges_per_ack_frame != 1.0)
        .map(|r| (r.config.run_id, r.metrics.mean_ranges_per_ack_frame))
        .collect();
    let pass = !clean.is_empty() && bad.is_empty() && t.elapsed() < Duration::from_secs(120);
    verdict(
        "C2",
        "homogeneous single-range",
        pass,
        t.elapsed(),
        &format!(
            "{} of {} runs without drops, offenders {:?}",
            clean.len(),
            res.len(),
            bad
        ),
    );
}

#[test]
fn c3_ab_limit_degradation_trend() {
    let t = Instant::now();
    let limits = [32, 16, 8, 4];
    let mut times = Vec::new();
    let mut retx = Vec::new();
    let mut max_retx_at_4 = 0.0f64;
    for ab in limits {
        let mut e = desk(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic);
        e.ab_limit = AbLimit::Limited(ab);
        let res = sweep(e);
        times.push(med(&res, time));
        retx.push(med(&res, |r| r.metrics.rel_retransmitted));
        if ab == 4 {
            max_retx_at_4 = res
                .iter()
                .map(|r| r.metrics.rel_retransmitted)
                .fold(0.0, f64::max);
        }
    }
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let pass = monotone(&times)
        && monotone(&retx)
        && max_retx_at_4 > 0.2
        && t.elapsed() < Duration::from_secs(600);
    verdict(
        "C3",
        "AB-limit degradation trend",
        pass,
        t.elapsed(),
        &format!(
            "limits {limits:?}: median time {times:.4?} (non-decreasing {}), median retransmitted {retx:.4?} (non-decreasing {}), max retransmitted at 4 = {max_retx_at_4:.3}",
            monotone(&times),
            monotone(&retx)
        ),
    );
}

#[test]
fn c4_three_path_saturation() {
    let t = Instant::now();
    let spns = sweep(desk(Family::Hetero3, Design::Spns, CcAlgorithm::Cubic));
    let mpns = sweep(desk(Family::Hetero3, Design::Mpns, CcAlgorithm::Cubic));
    let saturated = spns
        .iter()
        .filter(|r| r.metrics.frac_ack_frames_at_limit >= 0.30)
        .count();
    let (ts, tm) = (med(&spns, time), med(&mpns, time));
    let pass = 2 * saturated > spns.len() && ts >= tm && t.elapsed() < Duration::from_secs(600);
    verdict(
        "C4",
        "three-path saturation",
        pass,
        t.elapsed(),
        &format!(
            "{saturated} of {} SPNS runs with >= 30% frames at limit; median time SPNS {ts:.4} vs MPNS {tm:.4}",
            spns.len()
        ),
    );
}

#[test]
fn c5_ack_duplication_fix() {
    let t = Instant::now();
    let mut e = desk(Family::Hetero2, Design::Spns, CcAlgorithm::Bbr);
    e.dispatch = AckDispatch::OnPath;
    let original = sweep(e.clone());
    e.dispatch = AckDispatch::Duplicate;
    let fixed = sweep(e);
    let ratios: Vec<f64> = original
        .iter()
        .zip(&fixed)
        .map(|(o, f)| {
            assert_eq!(o.config.point, f.config.point);
            time(o) / time(f)
        })
        .collect();
    let ratio = median(&ratios);
    let worst = |v: &[RunResult]| v.iter().map(time).fold(0.0, f64::max);
    let (wo, wf) = (worst(&original), worst(&fixed));
    let pass = ratio >= 1.0 && wf <= wo && t.elapsed() < Duration::from_secs(600);
    verdict(
        "C5",
        "ACK duplication fix",
        pass,
        t.elapsed(),
        &format!(
            "median on-path/duplicate time ratio {ratio:.4}; slowest run on-path {wo:.3}s, duplicate {wf:.3}s"
        ),
    );
}

#[test]
fn c6_ack_overhead_ordering() {
    let t = Instant::now();
    let bytes = |r: &RunResult| r.metrics.ack_bytes_total as f64;
    let mpns = med(
        &sweep(desk(Family::Hetero2, Design::Mpns, CcAlgorithm::Cubic)),
        bytes,
    );
    let spns = med(
        &sweep(desk(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic)),
        bytes,
    );
    let mut e = desk(Family::Hetero2, Design::Mpns, CcAlgorithm::Cubic);
    e.pquic_mode = true;
    let pquic = med(&sweep(e), bytes);
    let pass = mpns < spns && pquic > spns && pquic > mpns;
    verdict(
        "C6",
        "ACK overhead ordering",
        pass,
        t.elapsed(),
        &format!("median client ACK bytes: MPNS {mpns:.0} < SPNS {spns:.0} < every-2-packets MPNS {pquic:.0}"),
    );
}

#[test]
fn c7_throughput_sanity() {
    let t = Instant::now();
    let multi = sweep(desk(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic));
    let mut single_cfgs = desk(Family::Homo2, Design::Mpns, CcAlgorithm::Cubic)
        .runs()
        .unwrap();
    for c in &mut single_cfgs {
        c.paths.truncate(1);
    }
    let single = run_all(
        &single_cfgs,
        RunOptions {
            discard_trace: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    let mut others = sweep(desk(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic));
    others.extend(sweep(desk(Family::Hetero3, Design::Mpns, CcAlgorithm::Bbr)));

    let below: Vec<_> = multi
        .iter()
        .chain(&single)
        .chain(&others)
        .filter(|r| time(r) < r.config.lower_bound_seconds())
        .map(|r| (r.config.label(), r.config.run_id))
        .collect();
    let slow: Vec<_> = multi
        .iter()
        .zip(&single)
        .filter(|(m, s)| time(m) > 0.75 * time(s))
        .map(|(m, s)| (m.config.run_id, time(m), time(s)))
        .collect();
    let worst = multi
        .iter()
        .zip(&single)
        .map(|(m, s)| time(m) / time(s))
        .fold(0.0, f64::max);
    let pass = below.is_empty() && slow.is_empty();
    verdict(
        "C7",
        "throughput sanity",
        pass,
        t.elapsed(),
        &format!(
            "{} runs below the bandwidth bound; worst two-path/one-path time ratio {worst:.3}; over 0.75: {slow:?}",
            below.len()
        ),
    );
}

#[test]
fn c8_unit_property_suites() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();

    let codec_ok = (0..100_000).all(|_| {
        let f = random_frame(&mut rng);
        let b = encode_frame(&f).unwrap();
        b.len() == f.encoded_len() && decode_frame(&b).as_ref() == Ok(&f)
    });
    if !codec_ok {
        failures.push("codec");
    }

    let mut ranges_ok = true;
    let mut select_ok = true;
    for _ in 0..2_000 {
        let mut bits = vec![false; 300];
        let mut set = RangeSet::new();
        for _ in 0..rng.random_range(1..40) {
            let lo = rng.random_range(0..300u64);
            let hi = (lo + rng.random_range(0..12)).min(299);
            if rng.random_bool(0.75) {
                set.insert_range(lo, hi);
                bits[lo as usize..=hi as usize].fill(true);
            } else {
                set.remove_range(lo, hi);
                bits[lo as usize..=hi as usize].fill(false);
            }
        }
        let asc = runs_of(&bits);
        ranges_ok &= set.iter().collect::<Vec<_>>() == asc;
        if asc.is_empty() {
            continue;
        }
        let limit = rng.random_range(0..40u32);
        for sel in [RangeSelection::LargestFirst, RangeSelection::LowestFirst] {
            let got = select_ranges(&set, AbLimit::Limited(limit), sel).unwrap();
            select_ok &= got == select_oracle(&asc, limit as usize + 1, sel);
        }
    }
    if !ranges_ok {
        failures.push("range set");
    }
    if !select_ok {
        failures.push("range selection");
    }

    let mut cubic_ok = true;
    for segs in [12u64, 50, 333, 2_000] {
        let mut c = Cubic::new(false);
        let rtt = Duration::from_millis(40);
        c.on_ack(
            segs * MSS as u64 - c.cwnd(),
            SimTime::ZERO,
            None,
            rtt,
            rtt,
            SimTime::from_millis(40),
        );
        let w = c.cwnd() as f64 / MSS as f64;
        c.on_congestion_event(SimTime::from_millis(41), SimTime::from_millis(80));
        let k = (w * (1.0 - CUBIC_BETA) / CUBIC_C).cbrt();
        cubic_ok &= ((c.k() - k) / k).abs() < 1e-9;
        for i in 0..50 {
            let tt = i as f64 * 0.2;
            let want = MSS as f64 * (CUBIC_C * (tt - k).powi(3) + w);
            cubic_ok &= (c.w_cubic(tt) - want).abs() <= 1e-9 * want.abs().max(MSS as f64);
        }
    }
    if !cubic_ok {
        failures.push("cubic");
    }

    let gain_mean = PROBE_BW_GAINS.iter().sum::<f64>() / PROBE_BW_GAINS.len() as f64;
    if (gain_mean - 1.0).abs() > 1e-12 {
        failures.push("bbr gain cycle");
    }

    let nonces: HashSet<u128> = (0..4u64)
        .flat_map(|p| (0..1024u64).map(move |n| compute_nonce(Design::Mpns, p, n).to_u128()))
        .collect();
    if nonces.len() != 4096 {
        failures.push("nonce");
    }

    let mut e = desk(Family::Hetero2, Design::Spns, CcAlgorithm::Cubic);
    e.points = 3;
    e.transfer_size = 1 << 20;
    let cfgs = e.runs().unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_results(d.path(), &run_all(&cfgs, RunOptions::default()).unwrap()).unwrap();
    }
    let same =
        |a: std::path::PathBuf, b: std::path::PathBuf| fs::read(a).unwrap() == fs::read(b).unwrap();
    let deterministic = same(
        dirs[0].path().join("runs.csv"),
        dirs[1].path().join("runs.csv"),
    ) && cfgs.iter().all(|c| {
        same(
            trace_path(dirs[0].path(), c.run_id),
            trace_path(dirs[1].path(), c.run_id),
        )
    });
    if !deterministic {
        failures.push("determinism");
    }

    let pass = failures.is_empty() && t.elapsed() < Duration::from_secs(60);
    verdict(
        "C8",
        "unit and property suites",
        pass,
        t.elapsed(),
        &format!("failing checks: {failures:?}"),
    );
}
