use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn leo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leo")).args(args).env_remove("OPENAI_API_KEY").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_experiment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let out =
        leo(&["run", "--problem", "sphere2d", "--seeds", "3", "--iterations", "5", "-o", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["config.snapshot", "summary.csv", "transcripts.jsonl", "seed_2/record.json", "seed_2/convergence.csv"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let conv = fs::read_to_string(out_dir.join("seed_0/convergence.csv")).unwrap();
    let value = conv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(value.split('.').nth(1).unwrap().len(), 6, "{value}");
}

#[test]
fn full_precision_flag_changes_float_format() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("exp");
    let out = leo(&["--full-precision", "run", "--seeds", "1", "--iterations", "3", "-o", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let conv = fs::read_to_string(out_dir.join("seed_0/convergence.csv")).unwrap();
    let long = conv
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).take(5).map(str::to_string).collect::<Vec<_>>())
        .any(|v| v.split('.').nth(1).is_some_and(|d| d.len() > 6));
    assert!(long, "{conv}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "problem = \"goldstein_price\"\nmethod = \"leo_rnd\"\nseeds = [3, 9]\noutput_dir = \"{}\"\n\n[leo]\nmax_iterations = 4\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = leo(&["run", "--config", cfg.to_str().unwrap(), "--method", "leo"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let snapshot = fs::read_to_string(out_dir.join("config.snapshot")).unwrap();
    assert!(snapshot.contains("method = \"leo\""));
    assert!(out_dir.join("seed_9/record.json").is_file());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "--problem", "no_such_function", "-o", o],
        vec!["run", "--seed-list", "1,2,1", "-o", o],
        vec!["run", "--method", "annealing", "-o", o],
        vec!["run", "--preset", "windfarm_5", "-o", o],
        vec!["run", "--bogus-flag"],
    ] {
        let out = leo(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "problme = \"sphere2d\"\n").unwrap();
    assert_eq!(code(&leo(&["run", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn remote_without_credentials_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = leo(&["run", "--backend", "remote", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("OPENAI_API_KEY"));
}

#[test]
fn partial_ensemble_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flaky.toml");
    fs::write(
        &cfg,
        format!(
            "seeds = 12\noutput_dir = \"{}\"\n[leo]\nmax_iterations = 8\n[generator]\nmax_retries = 0\n[generator.mock]\nfault_rate = 0.05\n",
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let out = leo(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn replay_and_stats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    let dst = dir.path().join("dst");
    let s = src.to_str().unwrap();
    assert_eq!(code(&leo(&["run", "--problem", "goldstein_price", "--seeds", "2", "--iterations", "10", "-o", s])), 0);
    let out = leo(&["replay", s, "-o", dst.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for rel in ["seed_0/record.json", "seed_1/convergence.csv", "summary.csv"] {
        assert_eq!(fs::read(src.join(rel)).unwrap(), fs::read(dst.join(rel)).unwrap(), "{rel}");
    }
    let out = leo(&["stats", s, "--every", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let variance = fs::read_to_string(src.join("variance.csv")).unwrap();
    assert_eq!(variance.lines().count(), 1 + 2 * 3 * 2);
    assert!(Path::new(&src.join("kde.csv")).is_file());
}

#[test]
fn front_reports_igd() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("front");
    let out =
        leo(&["front", "--problem", "zdt3", "--pop-size", "30", "--generations", "40", "-o", o.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("igd"), "{stdout}");
    assert!(o.join("reference_front.csv").is_file());
    assert!(o.join("seed_0/front.csv").is_file());
    assert_eq!(code(&leo(&["front", "--problem", "sphere2d", "-o", o.to_str().unwrap()])), 2);
}

#[test]
fn table_prints_all_methods() {
    let out = leo(&["table", "--seeds", "2", "--budget", "200", "--with-leo"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 9 + 1);
    assert_eq!(header.last(), Some(&"leo"));
    assert_eq!(lines.count(), 6);
}
