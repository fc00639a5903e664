use fvselect_core::experiment::{
    evaluate, run_with_threads, verify, Counts, CsvData, ExperimentConfig, ExperimentKind, Manifest, REPORT,
};
use fvselect_core::qsd::QsdParams;
use fvselect_core::Error;
use tempfile::TempDir;

fn config(kind: ExperimentKind, dir: &TempDir) -> ExperimentConfig {
    ExperimentConfig {
        experiment: Some(kind),
        output_dir: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    }
}

#[test]
fn qsd_table_matches_the_analytics() {
    let dir = TempDir::new().unwrap();
    let out = run_with_threads(&config(ExperimentKind::QsdTable, &dir), 2).unwrap();
    let csv = CsvData::read(&out.dir.join("qsd_table.csv")).unwrap();
    let lambdas = csv.floats("lambda").unwrap();
    assert_eq!(lambdas, vec![0.125, 0.25, 0.375, 0.5]);
    let means = csv.floats("mean").unwrap();
    let rates = csv.floats("tail_rate").unwrap();
    for (i, l) in lambdas.iter().enumerate() {
        let q = QsdParams::<f64>::new(*l).unwrap();
        assert_eq!(means[i], q.mean());
        assert_eq!(rates[i], q.tail_rate());
    }
    let report = verify(&out.dir).unwrap();
    assert!(report.passed);
    assert!(out.dir.join(REPORT).is_file());
}

#[test]
fn manifest_echoes_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    let mut c = config(ExperimentKind::Survival, &dir);
    c.ensemble = 5000;
    c.seed = 99;
    let out = run_with_threads(&c, 1).unwrap();
    let text = std::fs::read_to_string(out.dir.join("manifest.json")).unwrap();
    let m: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(m, out.manifest);
    assert_eq!(m.seed, 99);
    assert_eq!(m.config.ensemble, 5000);
    assert_eq!(m.outputs[0].file, "survival.csv");
}

#[test]
fn zero_replicas_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut c = config(ExperimentKind::QsdTable, &dir);
    c.replicas = 0;
    assert!(matches!(run_with_threads(&c, 1), Err(Error::Config(_))));
}

#[test]
fn empty_directory_reports_missing_files() {
    let dir = TempDir::new().unwrap();
    let report = evaluate(dir.path()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.missing, vec!["manifest.json".to_string()]);
}

#[test]
fn deleted_output_is_listed() {
    let dir = TempDir::new().unwrap();
    run_with_threads(&config(ExperimentKind::QsdTable, &dir), 1).unwrap();
    std::fs::remove_file(dir.path().join("qsd_density.csv")).unwrap();
    let report = evaluate(dir.path()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.missing, vec!["qsd_density.csv".to_string()]);
}

#[test]
fn zeroed_rate_column_trips_the_lower_bound() {
    let dir = TempDir::new().unwrap();
    let mut c = config(ExperimentKind::FvSweep, &dir);
    c.n_particles = Counts::Many(vec![20, 30]);
    c.horizon = 200.0;
    c.burn_in = Some(20.0);
    run_with_threads(&c, 2).unwrap();
    let before = evaluate(dir.path()).unwrap();
    let bound = |r: &fvselect_core::experiment::VerifyReport| {
        r.predicates.iter().find(|p| p.name.contains("0.5/iota_N")).unwrap().passed
    };
    assert!(bound(&before));

    let path = dir.path().join("fv_sweep.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let col = header.split(',').position(|c| c == "lambda_hat").unwrap();
    let mut tampered = vec![header.to_string()];
    for line in lines {
        let mut cells: Vec<&str> = line.split(',').collect();
        cells[col] = "0";
        tampered.push(cells.join(","));
    }
    std::fs::write(&path, tampered.join("\n") + "\n").unwrap();
    let after = evaluate(dir.path()).unwrap();
    assert!(!after.passed);
    assert!(!bound(&after));
}

#[test]
fn replica_errors_name_replica_and_seed() {
    let dir = TempDir::new().unwrap();
    let mut c = config(ExperimentKind::FvStationary, &dir);
    c.n_particles = Counts::One(10);
    c.horizon = 30.0;
    c.burn_in = Some(20.0);
    c.seed = 5;
    match run_with_threads(&c, 1) {
        Err(Error::Replica { replica, seed, source }) => {
            assert_eq!((replica, seed), (0, 5));
            assert!(matches!(*source, Error::InsufficientData(_)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn shipped_configs_are_valid() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for kind in ExperimentKind::ALL {
        let path = root.join(format!("{kind}.toml"));
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.kind().unwrap(), kind, "{}", path.display());
        c.validate().unwrap();
    }
}
