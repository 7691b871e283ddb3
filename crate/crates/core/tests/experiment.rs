use std::fs;
use std::path::Path;

use leo::engine::{LeoConfig, RunRecord};
use leo::experiment::{
    replay_experiment, run_experiment, stats_tables, summary_csv, ExperimentConfig, ExperimentError, Method, Seeds,
    EXIT_BACKEND_UNAVAILABLE, EXIT_OK, EXIT_PARTIAL,
};
use leo::generator::{BackendKind, GeneratorConfig, MockPolicy};
use leo::stats::{median, EnsembleSummary};

fn small(dir: &Path, method: Method) -> ExperimentConfig {
    ExperimentConfig {
        problem: "sphere2d".into(),
        method,
        seeds: Seeds::Count(4),
        output_dir: dir.to_path_buf(),
        leo: LeoConfig { max_iterations: 8, ..Default::default() },
        ..Default::default()
    }
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = small(a.path(), Method::Leo);
    run_experiment(&cfg).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    run_experiment(&cfg).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    // The snapshot records the output directory, everything else must match.
    let strip = |t: Vec<(String, Vec<u8>)>| t.into_iter().filter(|(n, _)| n != "config.snapshot").collect::<Vec<_>>();
    assert_eq!(strip(ta), strip(tb));
}

#[test]
fn layout_and_summary_match_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(dir.path(), Method::Leo)).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    for f in ["config.snapshot", "summary.csv", "transcripts.jsonl"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let mut finals = Vec::new();
    for s in 0..4 {
        let rec: RunRecord =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("seed_{s}/record.json"))).unwrap())
                .unwrap();
        assert!(dir.path().join(format!("seed_{s}/convergence.csv")).is_file());
        finals.push(rec.min_fun_val);
    }
    let s = EnsembleSummary::of(&finals);
    assert_eq!(s.median, median(&finals));
    let emitted = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(emitted, summary_csv(&out.groups, false));
    let row: Vec<&str> = emitted.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], format!("{:.6}", s.median));
    assert_eq!(row[4], format!("{:.6}", s.mean));
}

#[test]
fn replay_reproduces_records_bitwise() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    run_experiment(&small(src.path(), Method::Leo)).unwrap();
    let out = replay_experiment(src.path(), dst.path()).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    for s in 0..4 {
        let rel = format!("seed_{s}/record.json");
        assert_eq!(fs::read(src.path().join(&rel)).unwrap(), fs::read(dst.path().join(&rel)).unwrap(), "{rel}");
    }
    assert_eq!(
        fs::read(src.path().join("transcripts.jsonl")).unwrap(),
        fs::read(dst.path().join("transcripts.jsonl")).unwrap()
    );
}

#[test]
fn trajectory_sweep_writes_labeled_sets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        problem: "nosecone".into(),
        n_hist_sweep: vec![1, 5, 10],
        seeds: Seeds::Count(2),
        leo: LeoConfig { max_iterations: 12, ..Default::default() },
        ..small(dir.path(), Method::Trajectory)
    };
    let out = run_experiment(&cfg).unwrap();
    let labels: Vec<&str> = out.groups.iter().map(|g| g.label.as_str()).collect();
    assert_eq!(labels, ["n_hist_1", "n_hist_5", "n_hist_10"]);
    for l in labels {
        assert!(dir.path().join(l).join("seed_1/record.json").is_file());
    }
    assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap().lines().count(), 4);
}

#[test]
fn baseline_and_nsga2_methods_write_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(dir.path(), Method::Baseline)).unwrap();
    assert_eq!(out.exit_code(), EXIT_OK);
    assert!(dir.path().join("seed_3/record.json").is_file());

    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { problem: "zdt1".into(), seeds: Seeds::Count(2), ..small(dir.path(), Method::Nsga2) };
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.groups[0].metric, "hypervolume");
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("seed_0/record.json")).unwrap()).unwrap();
    assert!(rec["igd"].as_f64().unwrap() >= 0.0);
    assert!(dir.path().join("seed_0/front.csv").is_file());
}

#[test]
fn partial_ensemble_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        seeds: Seeds::Count(12),
        generator: GeneratorConfig {
            mock: MockPolicy { fault_rate: 0.05, ..Default::default() },
            max_retries: 0,
            timestamps: false,
            ..Default::default()
        },
        ..small(dir.path(), Method::Leo)
    };
    let out = run_experiment(&cfg).unwrap();
    let failed = out.failures().count();
    assert!(failed > 0 && failed < 12, "{failed} failures");
    assert_eq!(out.exit_code(), EXIT_PARTIAL);
    let (_, first) = out.failures().next().unwrap();
    assert!(dir.path().join(format!("seed_{}/failure.txt", first.seed)).is_file());
}

#[test]
fn missing_credentials_is_backend_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        generator: GeneratorConfig {
            backend: BackendKind::Remote,
            api_key_env: "LEO_TEST_KEY_THAT_IS_NEVER_SET".into(),
            ..Default::default()
        },
        ..small(dir.path(), Method::Leo)
    };
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, ExperimentError::BackendUnavailable(_)));
    assert_eq!(err.exit_code(), EXIT_BACKEND_UNAVAILABLE);
}

#[test]
fn unreachable_backend_fails_every_seed() {
    std::env::set_var("LEO_TEST_DUMMY_KEY", "k");
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        seeds: Seeds::Count(2),
        generator: GeneratorConfig {
            backend: BackendKind::Remote,
            api_key_env: "LEO_TEST_DUMMY_KEY".into(),
            api_base: Some("http://127.0.0.1:9".into()),
            max_retries: 0,
            timeout_secs: 2.0,
            timestamps: false,
            ..Default::default()
        },
        ..small(dir.path(), Method::Leo)
    };
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.exit_code(), EXIT_BACKEND_UNAVAILABLE);
}

#[test]
fn stats_tables_cover_every_record() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small(dir.path(), Method::Leo)).unwrap();
    let (variance, kde) = stats_tables(dir.path(), 4, false).unwrap();
    // 4 seeds x iterations {0, 4, 8} x 2 variables.
    assert_eq!(variance.lines().count(), 1 + 4 * 3 * 2);
    assert!(kde.lines().count() > 1);
    assert!(stats_tables(tempfile::tempdir().unwrap().path(), 4, false).is_err());
}
