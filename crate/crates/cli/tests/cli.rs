use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use singular_plap::{BifurcationDiagram, BranchTag, DiagramPoint};
use singular_plap_cli::commands::diagram_flags;
use singular_plap_cli::{render_svg, run, CliError, Command, RunConfig};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_singular-plap"))
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn point(lambda: f64, m: f64, branch: BranchTag) -> DiagramPoint {
    DiagramPoint {
        lambda,
        m_root: m,
        sup_norm: m,
        branch,
    }
}

fn count(doc: &roxmltree::Document, tag: &str) -> usize {
    doc.descendants().filter(|n| n.has_tag_name(tag)).count()
}

#[test]
fn solve_writes_solution_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        command: Command::Solve,
        m: 256,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let out = run(&cfg).unwrap();
    assert!(out.checks_passed);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["config"]["command"], "solve");
    assert!(summary["result"]["residual_sup"].as_f64().unwrap() <= cfg.tol);
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1\n# config={"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 257);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let json = format!(
        r#"{{"command": "ladder", "m": 128, "ladder_n": [1, 4, 16], "output_dir": {:?}}}"#,
        a.path().join("out").display().to_string()
    );
    let cfg = write_config(a.path(), &json);
    let first: Vec<Vec<u8>> = {
        assert!(bin().arg("--config").arg(&cfg).output().unwrap().status.success());
        ["ladder.csv", "ladder.json"]
            .iter()
            .map(|f| fs::read(a.path().join("out").join(f)).unwrap())
            .collect()
    };
    assert!(bin().arg("--config").arg(&cfg).output().unwrap().status.success());
    for (f, bytes) in ["ladder.csv", "ladder.json"].iter().zip(first) {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn serrin_endpoint_is_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"command": "solve", "q": 3.0}"#);
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`q`") && err.contains("Serrin"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"grdaing": 2}"#);
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`grdaing`"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"command": "solve", "m": 64, "problem": "pure_singular", "n": 0}"#);
    let out = dir.path().join("o");
    let status = bin()
        .args(["calibrate", "--m", "128", "--grading", "2", "--tol", "1e-9"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env_remove("SINGULAR_PLAP_CACHE")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let cal: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(cal["config"]["command"], "calibrate");
    assert_eq!(cal["config"]["m"], 128);
    assert_eq!(cal["config"]["tol"], 1e-9);
    assert_eq!(cal["result"]["grid"]["grading"], 2.0);
}

#[test]
fn calibration_is_cached_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run_once = |out: &str| {
        let status = bin()
            .args(["calibrate", "--m", "128"])
            .arg("--out")
            .arg(dir.path().join(out))
            .env("SINGULAR_PLAP_CACHE", &cache)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        fs::read_to_string(dir.path().join(out).join("calibration.json")).unwrap()
    };
    let first = run_once("a");
    let files: Vec<_> = fs::read_dir(&cache).unwrap().collect();
    assert_eq!(files.len(), 1);
    // a doctored cache entry must be picked up instead of recomputed
    let entry = files[0].as_ref().unwrap().path();
    let mut cal: serde_json::Value = serde_json::from_str(&fs::read_to_string(&entry).unwrap()).unwrap();
    cal["t"] = serde_json::json!(123.5);
    fs::write(&entry, cal.to_string()).unwrap();
    let second = run_once("b");
    assert!(!first.contains("123.5"));
    assert!(second.contains("123.5"));
}

#[test]
fn solver_failure_leaves_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    // far beyond the fold there is no upper solution to find
    let cfg = RunConfig {
        command: Command::Solve,
        m: 128,
        lambda: 5000.0,
        output_dir: dir.path().to_path_buf(),
        seed: singular_plap_cli::Seed::Upper,
        ..RunConfig::default()
    };
    let err = run(&cfg).unwrap_err();
    assert!(matches!(err, CliError::SolverFailure(_)), "{err}");
    let marker = fs::read_to_string(dir.path().join("FAILED")).unwrap();
    assert!(!marker.is_empty());
}

#[test]
fn verify_exits_nonzero_on_negative_controls() {
    for control in ["permuted_ladder", "wrong_exponent"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            &format!(r#"{{"command": "verify", "m": 512, "negative_control": "{control}"}}"#),
        );
        let out = bin().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{control}");
        let report = fs::read_to_string(dir.path().join("o/report.txt")).unwrap();
        assert!(report.lines().any(|l| l.starts_with("control_") && l.contains("FAIL")), "{report}");
    }
}

#[test]
fn branch_command_emits_diagram_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        command: Command::Branch,
        m: 256,
        lambda_count: 12,
        resolution: 150,
        workers: 2,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    assert!(run(&cfg).unwrap().checks_passed);
    let csv = fs::read_to_string(dir.path().join("diagram.csv")).unwrap();
    assert!(csv.contains("\nlambda,branch,M,sup_norm\n"));
    assert!(csv.contains(",lower,") && csv.contains(",upper,"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let fold = summary["result"]["fold_lambda"].as_f64().unwrap();
    let bound = summary["result"]["picone_bound"].as_f64().unwrap();
    assert!(fold > 0.0 && fold <= bound, "{fold} {bound}");
    let svg = fs::read_to_string(dir.path().join("diagram.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(count(&doc, "polyline"), 2);
    assert_eq!(count(&doc, "line"), 2);
}

#[test]
fn standard_plot_structure() {
    let d = BifurcationDiagram {
        points: vec![
            point(1.0, 0.5, BranchTag::Lower),
            point(1.0, 9.0, BranchTag::Upper),
            point(2.0, 1.0, BranchTag::Lower),
            point(2.0, 7.0, BranchTag::Upper),
        ],
        fold_lambda: Some(2.5),
        picone_bound: 4.0,
        root_counts: vec![(1.0, 2), (2.0, 2), (3.0, 0)],
    };
    let svg = render_svg(&d).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(count(&doc, "polyline"), 2);
    assert_eq!(count(&doc, "line"), 2);
    assert!(diagram_flags(&d).is_empty());
}

#[test]
fn single_lambda_plot_is_still_valid() {
    let d = BifurcationDiagram {
        points: vec![point(1.0, 0.5, BranchTag::Lower), point(1.0, 9.0, BranchTag::Upper)],
        fold_lambda: None,
        picone_bound: 4.0,
        root_counts: vec![(1.0, 2)],
    };
    let svg = render_svg(&d).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let polylines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(polylines.len(), 2);
    assert!(polylines.iter().all(|p| p.attribute("points").unwrap().split(' ').count() == 1));
}

#[test]
fn undetected_fold_omits_marker_and_flags_open_right() {
    let d = BifurcationDiagram {
        points: vec![
            point(1.0, 0.5, BranchTag::Lower),
            point(1.0, 9.0, BranchTag::Upper),
            point(2.0, 1.0, BranchTag::Lower),
            point(2.0, 7.0, BranchTag::Upper),
        ],
        fold_lambda: None,
        picone_bound: 4.0,
        root_counts: vec![(1.0, 2), (2.0, 2)],
    };
    let doc_text = render_svg(&d).unwrap();
    let doc = roxmltree::Document::parse(&doc_text).unwrap();
    assert_eq!(count(&doc, "line"), 1);
    assert!(doc.descendants().all(|n| n.attribute("class") != Some("fold")));
    assert_eq!(diagram_flags(&d), vec![singular_plap_cli::commands::OPEN_RIGHT]);
}

#[test]
fn empty_diagram_cannot_be_plotted() {
    let d = BifurcationDiagram {
        points: vec![],
        fold_lambda: None,
        picone_bound: 1.0,
        root_counts: vec![],
    };
    assert!(matches!(render_svg(&d), Err(CliError::EmptyDiagram)));
}
