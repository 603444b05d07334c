use std::fs;

use approx::assert_relative_eq;
use proptest::prelude::*;
use tempfile::tempdir;

use lzheom::experiment::{run, sweep, sweep_rows, Solve, RUN_HEADER, SWEEP_HEADER};
use lzheom::{parse_config, RunConfig, SweepAxis};

fn small(extra: &str) -> RunConfig {
    short(1.0, extra)
}

fn short(tf: f64, extra: &str) -> RunConfig {
    parse_config(&format!("protocol = lz_cd\ntf = {tf}\ngamma = 0.7\ndepth = 5\n{extra}")).unwrap()
}

#[test]
fn identical_configs_write_identical_bytes() {
    let cfg = small("");
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let ra = run(&cfg, Some(a.path()), Solve::Fixed).unwrap();
    let rb = run(&cfg, Some(b.path()), Solve::Fixed).unwrap();
    let (ba, bb) = (fs::read(&ra.path).unwrap(), fs::read(&rb.path).unwrap());
    assert!(!ba.is_empty());
    assert_eq!(ba, bb);
}

#[test]
fn run_csv_layout() {
    let dir = tempdir().unwrap();
    let r = run(&small("sample_every = 100"), Some(dir.path()), Solve::Fixed).unwrap();
    let text = fs::read_to_string(&r.path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(RUN_HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    // 1000 steps sampled every 100, plus t = 0
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert_eq!(rows[0][0], 0.0);
    assert_relative_eq!(rows[10][0], 1.0);
    assert_relative_eq!(rows[10][1], r.solved.trace.final_fidelity());
    for r in &rows {
        assert!((r[2] - 1.0).abs() < 1e-8 && r[3].abs() < 1e-8);
    }
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempdir().unwrap();
    let cfg = small("axis = gamma\ngrid = 0.2, 0.4, 0.8");
    let s = sweep(&cfg, Some(dir.path()), Solve::Fixed).unwrap();
    let text = fs::read_to_string(&s.path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.starts_with("gamma,") && l.contains(",ok,")));
    // more coupling, less fidelity for the compensated sweep at this duration
    let f: Vec<f64> = s.rows.iter().map(|r| r.final_fidelity.unwrap()).collect();
    assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempdir().unwrap();
    // a step far beyond the stability region blows up
    let cfg = small("dt = 0.5");
    let err = run(&cfg, Some(dir.path()), Solve::Fixed).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn failed_sweep_point_is_recorded_not_fatal() {
    let base = small("");
    let rows = sweep_rows(&base, SweepAxis::Gamma, &[0.3, -1.0], Solve::Fixed, |c| c);
    assert!(rows[0].is_ok());
    assert!(rows[1].status.starts_with("error:"), "{}", rows[1].status);
    assert_eq!(rows[1].final_fidelity, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn permuting_the_grid_permutes_the_rows(
        grid in Just(vec![0.05, 0.3, 0.6, 1.0, 1.5]).prop_shuffle(),
    ) {
        let base = short(0.5, "");
        let sorted = [0.05, 0.3, 0.6, 1.0, 1.5];
        let reference = sweep_rows(&base, SweepAxis::Gamma, &sorted, Solve::Fixed, |c| c);
        let shuffled = sweep_rows(&base, SweepAxis::Gamma, &grid, Solve::Fixed, |c| c);
        for (v, row) in grid.iter().zip(&shuffled) {
            prop_assert_eq!(row.value, *v);
            let same = reference.iter().find(|r| r.value == *v).unwrap();
            prop_assert_eq!(row.final_fidelity, same.final_fidelity);
            prop_assert_eq!(row.depth_used, same.depth_used);
            prop_assert_eq!(&row.status, &same.status);
        }
    }
}
