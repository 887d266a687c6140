use vlo_core::pipeline::{emit_report, run_pipeline, RunConfig};

fn drifting(drift_scale: f64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.synthetic.length = 60.0;
    cfg.synthetic.drift_factor = 1.0 / drift_scale;
    cfg
}

#[test]
fn lk_tracking_recovers_constant_drift() {
    let report = run_pipeline(&drifting(1.1)).unwrap();
    let first = report.triggered_events().next().expect("drift must trigger");
    assert!((first.scale / 1.1 - 1.0).abs() < 0.02, "first scale {}", first.scale);
    // later keyframes chase the residual drift with single-pair LK noise
    for e in &report.events {
        let reference = e.reference_scale.unwrap();
        assert!(
            (e.scale / reference - 1.0).abs() < 0.05,
            "frame {}: {} vs {reference}",
            e.frame,
            e.scale
        );
    }
    let eval = report.eval.unwrap();
    assert!(
        eval.final_error_corrected * 5.0 <= eval.final_error_input,
        "{} vs {}",
        eval.final_error_corrected,
        eval.final_error_input
    );
    let lidar = eval.lidar.expect("odometry enabled by default");
    assert!(lidar.ate_rmse < 0.5, "lidar ATE {}", lidar.ate_rmse);
}

#[test]
fn metric_input_passes_through_unchanged() {
    let mut cfg = drifting(1.0);
    cfg.set("tracker", "oracle").unwrap();
    cfg.odometry = false;
    let report = run_pipeline(&cfg).unwrap();
    assert!(!report.events.is_empty());
    assert_eq!(report.triggered_events().count(), 0);
    assert_eq!(report.vo_corrected.len(), report.vo_input.len());
    for (a, b) in report.vo_corrected.iter().zip(&report.vo_input) {
        assert!((a.translation() - b.translation()).norm() < 1e-6);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = drifting(0.9);
    cfg.synthetic.length = 10.0;
    cfg.set("synth.drift", "random-walk").unwrap();
    cfg.synthetic.drift_sigma = 0.01;
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(a, b);

    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&a, da.path()).unwrap();
    emit_report(&b, db.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(da.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let fa = std::fs::read(da.path().join(&name)).unwrap();
        let fb = std::fs::read(db.path().join(&name)).unwrap();
        assert_eq!(fa, fb, "{name:?} differs");
    }

    cfg.seed += 1;
    let c = run_pipeline(&cfg).unwrap();
    assert_ne!(a.vo_input, c.vo_input);
}
