use pgpoll_core::NetworkConfig;
use pgpoll_experiments::{figure, read_csv, run_sweep, to_csv_string, write_csv, Axis, SweepSpec};
use pgpoll_sim::SimConfig;

fn analytic(name: &str) -> SweepSpec {
    let mut s = figure(name, SimConfig::default()).unwrap();
    s.run_sim = false;
    s
}

#[test]
fn csv_round_trip_with_simulation_columns() {
    let spec = SweepSpec {
        base: NetworkConfig {
            n_ss: 8,
            lambda: 0.35,
            ..Default::default()
        },
        axis: Axis::L,
        values: vec![3.0, 7.0],
        g_values: vec![0, 2],
        sim: SimConfig {
            seed: 11,
            warmup_frames: 100,
            measure_frames: 800,
            replications: 3,
        },
        run_sim: true,
    };
    let result = run_sweep(&spec).unwrap();
    let text = to_csv_string(&result);
    assert!(text.starts_with("# axis=L base={"));
    let back = read_csv(text.as_bytes()).unwrap();
    assert_eq!(back, result);
    assert_eq!(to_csv_string(&back), text);
}

#[test]
fn csv_round_trip_keeps_solver_failures() {
    let mut result = run_sweep(&analytic("fig7")).unwrap();
    result.rows[3].model = Err("no convergence, after 3 iterations".into());
    let mut buf = Vec::new();
    write_csv(&result, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, result);
}

#[test]
fn csv_rejects_missing_metadata() {
    assert!(read_csv("L,G\n7,0\n".as_bytes()).is_err());
}

#[test]
fn per_station_throughput_falls_with_population() {
    let result = run_sweep(&analytic("fig7")).unwrap();
    for g in [0, 1, 3, 5] {
        let per_ss: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.point.g == g)
            .map(|r| r.model.as_ref().unwrap().th / r.point.axis_value)
            .collect();
        assert!(
            per_ss.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "G={g}: {per_ss:?}"
        );
    }
}

#[test]
fn saturation_onset_grows_with_depth() {
    let result = run_sweep(&analytic("fig4")).unwrap();
    let onset = |g: u32| {
        result
            .rows
            .iter()
            .filter(|r| r.point.g == g)
            .find(|r| r.model.as_ref().unwrap().saturated())
            .map(|r| r.point.axis_value)
            .unwrap()
    };
    assert!(
        (onset(1) - 0.25).abs() <= 0.05 + 1e-12,
        "G=1 onset {}",
        onset(1)
    );
    assert!(
        (onset(3) - 0.5).abs() <= 0.05 + 1e-12,
        "G=3 onset {}",
        onset(3)
    );
}

#[test]
fn every_figure_solves_everywhere() {
    for name in pgpoll_experiments::FIGURES {
        let result = run_sweep(&analytic(name)).unwrap();
        for row in &result.rows {
            assert!(row.model.is_ok(), "{name} {}: {:?}", row.point, row.model);
        }
    }
}
