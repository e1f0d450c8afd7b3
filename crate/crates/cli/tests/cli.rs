//! Black-box checks of the binary: exit codes, metadata contents, config
//! precedence, and input validation.

use std::path::Path;
use std::process::{Command, Output};

fn sccp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sccp"))
        .args(args)
        .env("SCCP_OUT_DIR", dir)
        .output()
        .expect("spawn sccp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(dir: &Path, name: &str) -> serde_json::Value {
    let bytes = std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"));
    serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

/// Generates a small labeled graph and returns its file prefix.
fn small_graph(dir: &Path) -> (String, String) {
    let out = sccp(
        &[
            "generate", "sccp", "--k", "3", "--s", "4", "--t", "20", "--f", "0.7", "--r", "2",
            "5", "--seed", "5", "--out", "g", "--quiet",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "generate failed: {}", stderr(&out));
    (
        dir.join("g.edges").display().to_string(),
        dir.join("g.parts").display().to_string(),
    )
}

#[test]
fn missing_required_parameter_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sccp(&["generate", "sccp", "--s", "5", "--quiet"], tmp.path());
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("--k"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sccp(&["analyze", "--bogus"], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_input_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sccp(
        &["analyze", "--input", "/nonexistent/graph.edges"],
        tmp.path(),
    );
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("/nonexistent/graph.edges"),
        "stderr names the path: {}",
        stderr(&out)
    );
}

#[test]
fn empty_seed_pool_is_a_precondition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, parts) = small_graph(tmp.path());
    let out = sccp(
        &[
            "simulate", "--graph", &edges, "--partition", &parts, "--ebh-paper", "--seeds",
            "core:0", "--max-iters", "10", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
}

#[test]
fn uniform_table_is_recorded_in_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, parts) = small_graph(tmp.path());
    let out = sccp(
        &[
            "simulate", "--graph", &edges, "--partition", &parts, "--uniform", "0.0002",
            "--seeds", "periphery:2", "--trials", "2", "--max-iters", "50", "--seed", "3",
            "--out", "u", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let meta = read_json(tmp.path(), "u.sim.meta.json");
    let probs = &meta["probabilities"];
    for field in [
        "core_core",
        "core_periphery",
        "periphery_core",
        "periphery_same",
        "periphery_cross",
    ] {
        assert_eq!(probs[field].as_f64(), Some(0.0002), "field {field}");
    }
    assert_eq!(meta["trials"].as_u64(), Some(2));
    assert_eq!(meta["base_seed"].as_u64(), Some(3));
}

#[test]
fn analyze_splits_a_bridged_clique_pair() {
    let tmp = tempfile::tempdir().unwrap();
    // Two 10-cliques joined by a single bridge: 20 nodes.
    let mut lines = Vec::new();
    for base in [0usize, 10] {
        for a in 0..10 {
            for b in (a + 1)..10 {
                lines.push(format!("{} {}", base + a, base + b));
            }
        }
    }
    lines.push("9 10".to_string());
    let path = tmp.path().join("bridge.edges");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let out = sccp(
        &[
            "analyze", "--input", path.to_str().unwrap(), "--core-fraction", "0.1", "--out",
            "bridge", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let parts = std::fs::read_to_string(tmp.path().join("bridge.parts")).unwrap();
    let mut communities = std::collections::BTreeSet::new();
    let mut core_rows = 0;
    for line in parts.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        communities.insert(cols[1].to_string());
        core_rows += (cols[3] == "core") as usize;
    }
    assert_eq!(communities.len(), 2, "parts:\n{parts}");
    assert_eq!(core_rows, 2, "ceil(0.1 * 20) core rows, parts:\n{parts}");
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, parts) = small_graph(tmp.path());
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# defaults for the sweep\ntrials = 4\nmax-iters = 150\nseeds = periphery:2\n",
    )
    .unwrap();
    let out = sccp(
        &[
            "simulate", "--config", cfg.to_str().unwrap(), "--graph", &edges, "--partition",
            &parts, "--ebh-paper", "--trials", "2", "--seed", "8", "--out", "c", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let meta = read_json(tmp.path(), "c.sim.meta.json");
    assert_eq!(meta["trials"].as_u64(), Some(2), "flag wins over config");
    assert_eq!(meta["max_iters"].as_u64(), Some(150), "config fills the gap");
    assert_eq!(meta["seed_strategy"].as_str(), Some("periphery:2"));
}

#[test]
fn plateau_detection_requires_a_json_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let (edges, parts) = small_graph(tmp.path());
    for (fmt, want_code) in [("csv", 4), ("json", 0)] {
        let out = sccp(
            &[
                "simulate", "--graph", &edges, "--partition", &parts, "--uniform", "0.05",
                "--seeds", "periphery:2", "--trials", "1", "--max-iters", "80", "--seed", "2",
                "--format", fmt, "--out", fmt, "--quiet",
            ],
            tmp.path(),
        );
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let trace = tmp.path().join(format!("{fmt}.trace.{fmt}"));
        let out = sccp(
            &[
                "fit", "--input", trace.to_str().unwrap(), "--plateau-window", "20", "--out",
                &format!("{fmt}.fit.json"), "--quiet",
            ],
            tmp.path(),
        );
        assert_eq!(code(&out), want_code, "{fmt}: {}", stderr(&out));
    }
    let fit = read_json(tmp.path(), "json.fit.json");
    assert!(fit["plateau"].is_object(), "fit: {fit}");
}

#[test]
fn validate_reports_the_class_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let parts = tmp.path().join("toy.parts");
    std::fs::write(
        &parts,
        "# node community coreness role\n\
         c0 0 3 core\n\
         c1 1 3 core\n\
         p0 0 1 periphery\n\
         p1 0 1 periphery\n\
         p2 1 1 periphery\n",
    )
    .unwrap();
    // One edge per class, weights already in the claimed order.
    let interaction = tmp.path().join("toy.interactions");
    std::fs::write(
        &interaction,
        "c0 c1 5.0\nc0 p0 4.0\np0 p1 3.0\np0 p2 2.0\np1 c0 1.0\n",
    )
    .unwrap();
    let out = sccp(
        &[
            "validate", "--partition", parts.to_str().unwrap(), "--interaction",
            interaction.to_str().unwrap(), "--out", "toy.report.json", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(tmp.path(), "toy.report.json");
    assert_eq!(report["ordering_holds"].as_bool(), Some(true), "report: {report}");
    assert_eq!(report["classified_edges"].as_u64(), Some(5));
}

#[test]
fn validate_rejects_unknown_labels_unless_allowed() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, parts) = small_graph(tmp.path());
    let interaction = tmp.path().join("bad.interactions");
    std::fs::write(&interaction, "0 1 2.0\n1 mystery 1.0\n").unwrap();

    let out = sccp(
        &["validate", "--partition", &parts, "--interaction", interaction.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("mystery"), "stderr: {}", stderr(&out));

    let out = sccp(
        &[
            "validate", "--partition", &parts, "--interaction", interaction.to_str().unwrap(),
            "--allow-missing", "--out", "ok.report.json", "--quiet",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(tmp.path(), "ok.report.json");
    assert_eq!(report["skipped_edges"].as_u64(), Some(1), "report: {report}");
}
