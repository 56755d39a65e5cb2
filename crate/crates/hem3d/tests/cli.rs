//! End-to-end runs of the `hem3d` binary: exit codes, output files and
//! determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hem3d::formats::{design_from_json, profile_from_json, runlog_from_jsonl, ArchiveDoc};
use tempfile::TempDir;

fn hem3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hem3d")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A small 8-tile instance that optimises in well under a second.
fn small_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "seed": 5,
        "out": "out",
        "grid": { "tiers": 2, "rows": 2, "cols": 2 },
        "mix": { "cpu": 1, "llc": 1, "gpu": 6 },
        "technology": "tsv",
        "profile": { "synthetic": { "windows": 3 } },
        "stage": { "max_iterations": 3, "neighbors_per_step": 4, "meta_candidates": 6, "local_steps": 20 },
        "amosa": { "max_evaluations": 400 },
        "reference_samples": 10
    });
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_default_is_64_tiles_and_144_links() {
    let dir = TempDir::new().unwrap();
    let out = hem3d(&["generate", "--seed", "3", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let design = design_from_json(&fs::read_to_string(dir.path().join("design.json")).unwrap()).unwrap();
    assert_eq!(design.tile_count(), 64);
    assert_eq!(design.link_count(), 144);
    assert!(design.validate(7).is_ok());
    let (t, p) = profile_from_json(&fs::read_to_string(dir.path().join("profile.json")).unwrap()).unwrap();
    assert_eq!(t.tiles(), 64);
    assert_eq!(p.window_count(), t.window_count());
}

#[test]
fn same_seed_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&hem3d(&["generate", "--seed", "7", "--out", s(d.path())])), 0);
    }
    for f in ["design.json", "profile.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = TempDir::new().unwrap();
    assert_eq!(code(&hem3d(&["generate", "--seed", "8", "--out", s(c.path())])), 0);
    assert_ne!(fs::read(a.path().join("design.json")).unwrap(), fs::read(c.path().join("design.json")).unwrap());
}

#[test]
fn mix_that_does_not_fill_the_grid_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{ "mix": { "cpu": 8, "llc": 16, "gpu": 41 } }"#).unwrap();
    let out = hem3d(&["generate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("design.json").exists());
}

#[test]
fn usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&hem3d(&["frobnicate"])), 1);
    assert_eq!(code(&hem3d(&["generate", "--mode", "hot"])), 1);
    assert_eq!(code(&hem3d(&["generate", "--config", s(&dir.path().join("missing.json"))])), 1);
    let cfg = dir.path().join("unknown.json");
    fs::write(&cfg, r#"{ "sed": 1 }"#).unwrap();
    assert_eq!(code(&hem3d(&["generate", "--config", s(&cfg)])), 1);
    let weights = dir.path().join("weights.json");
    fs::write(&weights, r#"{ "et": { "surrogate": { "weights": [1.0, -1.0, 0.0] } } }"#).unwrap();
    assert_eq!(code(&hem3d(&["select", "--config", s(&weights)])), 1);
    assert_eq!(code(&hem3d(&["--help"])), 0);
}

#[test]
fn unreadable_inputs_are_runtime_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let bogus = dir.path().join("bogus.json");
    fs::write(&bogus, "{ not json").unwrap();
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "evaluate", "--design", s(&bogus)])), 2);
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "select", "--pareto", s(&bogus)])), 2);
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "optimize"])), 0);
    let et = dir.path().join("et.csv");
    fs::write(&et, "id,seconds\n0,1.0\n").unwrap();
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "select", "--et", s(&et)])), 2);
}

#[test]
fn optimize_writes_archive_runlog_and_metrics() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    for (mode, arity) in [("po", 3), ("pt", 4)] {
        for optimizer in ["stage", "amosa"] {
            let out_dir = dir.path().join(format!("{optimizer}-{mode}"));
            let out = hem3d(&[
                "--config",
                s(&cfg),
                "--mode",
                mode,
                "--optimizer",
                optimizer,
                "--out",
                s(&out_dir),
                "optimize",
            ]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            assert!(stdout(&out).contains(&format!("optimizer={optimizer} mode={mode}")));
            let doc = ArchiveDoc::parse(&fs::read_to_string(out_dir.join("pareto.json")).unwrap()).unwrap();
            assert!(!doc.entries.is_empty());
            assert_eq!(doc.reference.len(), arity);
            assert!(doc.entries.iter().all(|e| e.objectives.len() == arity && e.design.is_some()));
            let log = runlog_from_jsonl(&fs::read_to_string(out_dir.join("runlog.jsonl")).unwrap()).unwrap();
            assert!(!log.is_empty());
            assert!(log.windows(2).all(|w| w[0].evals_so_far <= w[1].evals_so_far));
            let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
            assert!(metrics.starts_with("design-id,lat,u_mean,u_std,temp"));
            assert_eq!(metrics.lines().count(), doc.entries.len() + 1);
        }
    }
}

#[test]
fn evaluate_prints_all_four_objectives() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "generate"])), 0);
    let design = dir.path().join("out/design.json");
    let routes = dir.path().join("routes.csv");
    let out = hem3d(&["--config", s(&cfg), "evaluate", "--design", s(&design), "--routes", s(&routes)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    for k in ["lat", "u_mean", "u_std", "temp"] {
        assert!(v[k].as_f64().is_some_and(|x| x.is_finite() && x >= 0.0), "{k}");
    }
    // one row per ordered pair of distinct tiles plus the header
    assert_eq!(fs::read_to_string(&routes).unwrap().lines().count(), 8 * 7 + 1);
    let csv = hem3d(&["--config", s(&cfg), "evaluate", "--design", s(&design), "--csv"]);
    assert!(stdout(&csv).starts_with("design-id,lat,u_mean,u_std,temp\n0,"));
}

#[test]
fn select_exit_codes_follow_feasibility() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out_dir = dir.path().join("out");
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "--mode", "pt", "optimize", "--no-wall-clock"])), 0);

    let ok = hem3d(&["--config", s(&cfg), "--mode", "pt", "select"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("feasible=true"));
    let picked = design_from_json(&fs::read_to_string(out_dir.join("selected.json")).unwrap()).unwrap();
    assert_eq!(picked.tile_count(), 8);

    let cold = hem3d(&["--config", s(&cfg), "--mode", "pt", "--tth", "0", "select"]);
    assert_eq!(code(&cold), 3);
    assert!(stdout(&cold).contains("feasible=false"));
}

#[test]
fn select_uses_external_measurements() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    assert_eq!(code(&hem3d(&["--config", s(&cfg), "optimize", "--no-wall-clock"])), 0);
    let doc = ArchiveDoc::parse(&fs::read_to_string(dir.path().join("out/pareto.json")).unwrap()).unwrap();
    let last = doc.entries.last().unwrap().design_id;
    let mut et = String::from("design_id,et_seconds,temp_c\n");
    for e in &doc.entries {
        let t = if e.design_id == last { 1.0 } else { 2.0 };
        et.push_str(&format!("{},{t},50\n", e.design_id));
    }
    let et_path = dir.path().join("et.csv");
    fs::write(&et_path, et).unwrap();
    let out = hem3d(&["--config", s(&cfg), "select", "--et", s(&et_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with(&format!("design_id={last} ")));
}

#[test]
fn plot_handles_empty_fronts_and_labelled_runs() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{ "reference": [1.0, 1.0, 1.0, 1.0], "entries": [] }"#).unwrap();
    let run = |label: &str, evals: &[usize]| {
        let p = dir.path().join(format!("{label}.jsonl"));
        let body: String = evals
            .iter()
            .enumerate()
            .map(|(i, e)| {
                format!(
                    "{{\"iter\":{i},\"global_phv\":{},\"archive_size\":{},\"evals_so_far\":{e},\"wall_ms\":0}}\n",
                    0.1 * (i + 1) as f64,
                    i + 1
                )
            })
            .collect();
        fs::write(&p, body).unwrap();
        p
    };
    let a = run("a", &[10, 50, 90]);
    let b = run("b", &[20, 400]);
    let out_dir = dir.path().join("plots");
    let out = hem3d(&[
        "--out",
        s(&out_dir),
        "plot",
        "--pareto",
        s(&empty),
        "--runlog",
        &format!("MOO-STAGE={}", s(&a)),
        "--runlog",
        &format!("AMOSA={}", s(&b)),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let front = fs::read_to_string(out_dir.join("front_lat_temp.svg")).unwrap();
    assert!(front.contains("no data"));
    let conv = fs::read_to_string(out_dir.join("convergence.svg")).unwrap();
    assert!(conv.contains("MOO-STAGE") && conv.contains("AMOSA"));
    assert_eq!(conv.matches("class=\"series\"").count(), 2);
    assert_eq!(conv.matches("class=\"point\"").count(), 5);

    assert_eq!(code(&hem3d(&["--out", s(&dir.path().join("none")), "plot"])), 1);
}

#[test]
fn plot_bars_from_csv() {
    let dir = TempDir::new().unwrap();
    let bars = dir.path().join("bars.csv");
    fs::write(&bars, "benchmark,variant,temp_c,et_norm\nBP,PO,92.5,1.0\nBP,PT,80.1,1.04\nGAU,PO,95.0,1.0\nGAU,PT,81.0,1.02\n")
        .unwrap();
    let out = hem3d(&["--out", s(dir.path()), "plot", "--bars", s(&bars)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("bars_temp.svg")).unwrap();
    assert_eq!(svg.matches("class=\"bar\"").count(), 4);
    assert!(dir.path().join("bars_et.svg").is_file());
}
