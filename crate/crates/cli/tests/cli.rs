//! End-to-end tests of the `anosov` binary: config parsing, subcommand
//! outputs, exit codes, and worker-count determinism of the emitted files.

use anosov_core::fixtures;
use anosov_core::words::GeneratorSystem;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anosov"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("anosov-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config_json(gens: &GeneratorSystem, pair: Option<&str>, kind: &str, params: serde_json::Value) -> String {
    let factors: Vec<serde_json::Value> = gens
        .descriptor
        .factor_dims
        .iter()
        .zip(&gens.descriptor.projective_flags)
        .map(|(&dim, &projective)| serde_json::json!({ "dim": dim, "projective": projective }))
        .collect();
    let generators: Vec<serde_json::Value> = gens
        .labels
        .iter()
        .zip(&gens.generators)
        .map(|(label, g)| {
            let matrices: Vec<Vec<Vec<f64>>> = g
                .factors
                .iter()
                .map(|m| {
                    (0..m.rows)
                        .map(|i| (0..m.cols).map(|j| m[(i, j)]).collect())
                        .collect()
                })
                .collect();
            serde_json::json!({ "label": label, "matrices": matrices })
        })
        .collect();
    let pair_value = match pair {
        None => serde_json::Value::Null,
        Some(kind) => serde_json::json!({ "kind": kind }),
    };
    serde_json::json!({
        "group": { "factors": factors, "generators": generators },
        "pair": pair_value,
        "experiment": { "kind": kind, "params": params },
    })
    .to_string()
}

fn write_config(dir: &Path, content: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn count_writes_results_fit_and_scatter() {
    let dir = temp_dir("count");
    let cfg = write_config(
        &dir,
        &config_json(
            &fixtures::sl2_ball_fixture(),
            None,
            "count",
            serde_json::json!({ "depth": 6 }),
        ),
    );
    let out = dir.join("out");
    let status = binary()
        .args(["count", "--config"])
        .arg(&cfg)
        .args(["--depth", "6", "--out"])
        .arg(&out)
        .arg("--cache-dir")
        .arg(dir.join("cache"))
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("T,N,logN\n"));
    assert!(csv.lines().count() > 10);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert!(fit.get("delta").is_some() || fit.is_null());
    let svg = std::fs::read_to_string(out.join("scatter.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn results_are_identical_across_worker_counts() {
    let dir = temp_dir("det");
    let cfg = write_config(
        &dir,
        &config_json(
            &fixtures::product_schottky_fixture(),
            None,
            "count",
            serde_json::json!({ "depth": 7, "direction": [0.5, -0.5, 0.5, -0.5], "aperture": 0.15 }),
        ),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.join(format!("out-{threads}"));
        let status = binary()
            .args(["count", "--config"])
            .arg(&cfg)
            .args(["--threads", threads, "--out"])
            .arg(&out)
            .arg("--cache-dir")
            .arg(dir.join(format!("cache-{threads}")))
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((
            std::fs::read(out.join("results.csv")).unwrap(),
            std::fs::read(out.join("fit.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "results.csv differs across workers");
    assert_eq!(outputs[0].1, outputs[1].1, "fit.json differs across workers");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn enumerate_populates_the_cache() {
    let dir = temp_dir("enum");
    let cfg = write_config(
        &dir,
        &config_json(
            &fixtures::sl2_ball_fixture(),
            None,
            "enumerate",
            serde_json::json!({ "depth": 5 }),
        ),
    );
    let cache = dir.join("cache");
    let output = binary()
        .args(["enumerate", "--config"])
        .arg(&cfg)
        .args(["--depth", "5"])
        .arg("--cache-dir")
        .arg(&cache)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("enumerated 485 rows"), "stdout: {stdout}");
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1, "expected one cache file");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn symmetric_count_and_limit_cone_subcommands() {
    let dir = temp_dir("sym");
    let cfg = write_config(
        &dir,
        &config_json(
            &fixtures::product_schottky_fixture(),
            Some("swap"),
            "symmetric-count",
            serde_json::json!({ "depth": 5, "invariant": "factor-ratio" }),
        ),
    );
    let out = dir.join("out");
    let status = binary()
        .args(["symmetric-count", "--config"])
        .arg(&cfg)
        .args(["--depth", "5", "--out"])
        .arg(&out)
        .arg("--cache-dir")
        .arg(dir.join("cache"))
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["rows_before_dedup"], report["rows_after_dedup"]);

    let cfg2 = write_config(
        &dir,
        &config_json(
            &fixtures::product_schottky_fixture(),
            None,
            "limit-cone",
            serde_json::json!({ "depth": 6, "min_norm": 0.5 }),
        ),
    );
    let out2 = dir.join("out2");
    let status = binary()
        .args(["limit-cone", "--config"])
        .arg(&cfg2)
        .args(["--out"])
        .arg(&out2)
        .arg("--cache-dir")
        .arg(dir.join("cache2"))
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out2.join("report.json")).unwrap())
            .unwrap();
    assert!(report["wall_margin"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_generator_is_rejected() {
    let dir = temp_dir("bad");
    // Break det = 1: a singular matrix cannot be renormalized.
    let cfg_text = serde_json::json!({
        "group": {
            "factors": [{ "dim": 2, "projective": false }],
            "generators": [
                { "label": "a", "matrices": [[[1.0, 0.0], [0.0, 0.0]]] },
                { "label": "b", "matrices": [[[2.0, 1.0], [1.0, 1.0]]] }
            ]
        },
        "pair": null,
        "experiment": { "kind": "count", "params": { "depth": 3 } }
    })
    .to_string();
    let cfg = write_config(&dir, &cfg_text);
    let output = binary()
        .args(["count", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("singular") || stderr.contains("invalid"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_subcommand_exit_code_and_report() {
    let dir = temp_dir("verify");
    let cfg = write_config(
        &dir,
        &serde_json::json!({
            "group": { "factors": [{"dim": 2}], "generators": [
                { "label": "a", "matrices": [[[2.0, 1.0], [1.0, 1.0]]] },
                { "label": "b", "matrices": [[[1.0, 1.0], [1.0, 2.0]]] }
            ]},
            "experiment": { "kind": "verify", "params": { "words": 200, "depth": 4 } }
        })
        .to_string(),
    );
    let out = dir.join("out");
    let output = binary()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "verify failed:\n{stdout}");
    assert!(stdout.contains("hard checks passed"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["hard_passed"], serde_json::Value::Bool(true));
    std::fs::remove_dir_all(&dir).unwrap();
}
