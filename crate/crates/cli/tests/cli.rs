use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ggi(args: &[&str], cwd: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ggi"));
    cmd.args(args).current_dir(cwd);
    match threads {
        Some(t) => cmd.env("GGI_THREADS", t),
        None => cmd.env_remove("GGI_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn help_documents_every_subcommand_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let top = ok(ggi(&["--help"], dir.path(), None));
    let text = String::from_utf8_lossy(&top.stdout);
    for sub in ["validate", "pack", "encode", "decode", "roundtrip", "eval", "fixture"] {
        assert!(text.contains(sub), "{sub}");
        let help = ok(ggi(&[sub, "--help"], dir.path(), None));
        let help = String::from_utf8_lossy(&help.stdout);
        let lines: Vec<&str> = help.lines().collect();
        for (k, line) in lines.iter().enumerate() {
            let t = line.trim_start();
            if !t.starts_with("--") {
                continue;
            }
            // A description follows on the same line or the next one.
            let inline = t.split("  ").filter(|s| !s.trim().is_empty()).count() >= 2;
            let next = lines.get(k + 1).map(|l| l.trim()).unwrap_or("");
            assert!(inline || (!next.is_empty() && !next.starts_with('-')), "{sub}: {line}");
        }
    }
    let rt = String::from_utf8_lossy(&ok(ggi(&["roundtrip", "--help"], dir.path(), None)).stdout).to_string();
    for flag in ["--fixture", "--n", "--resolution", "--margin", "--dtw-cost-space", "--seed", "--strict", "--mode"] {
        assert!(rt.contains(flag), "{flag}");
    }
}

#[test]
fn flat_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(ggi(&["roundtrip", "--fixture", "flat_grid", "--n", "32"], dir.path(), None));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 2);
    assert!(lines[0]["chamfer"].as_f64().unwrap() <= 1e-6);
    assert_eq!(lines[0]["uncovered_pixels"], 0);
    assert!(lines[1]["timing"]["decode_s"].is_number());
    let quiet = ok(ggi(&["roundtrip", "--fixture", "flat_grid", "--n", "8", "--no-timing"], dir.path(), None));
    assert_eq!(json_lines(&quiet).len(), 1);
}

#[test]
fn broken_pattern_fails_validation_with_its_code() {
    let dir = tempfile::tempdir().unwrap();
    ok(ggi(&["fixture", "--fixture", "two_square_stitched", "--out", "fx"], dir.path(), None));
    let mut doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("fx/pattern.json")).unwrap()).unwrap();
    doc["stitches"][0]["b"][1] = Value::from(7);
    std::fs::write(dir.path().join("bad.json"), doc.to_string()).unwrap();
    let out = ggi(&["validate", "bad.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("DanglingStitchRef"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
    assert_eq!(json_lines(&out).last().unwrap()["valid"], false);
}

#[test]
fn exit_codes_separate_validation_from_io() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.json"), "{\"format\":").unwrap();
    assert_eq!(ggi(&["validate", "junk.json"], dir.path(), None).status.code(), Some(2));
    assert_eq!(ggi(&["validate", "absent.json"], dir.path(), None).status.code(), Some(2));
    assert_eq!(ggi(&["decode", "absent", "--out", "x.obj"], dir.path(), None).status.code(), Some(2));
    let small = ["roundtrip", "--fixture", "flat_grid", "--resolution", "31"];
    assert_eq!(ggi(&small, dir.path(), None).status.code(), Some(1));
    let margin = ["roundtrip", "--fixture", "flat_grid", "--margin", "0"];
    assert_eq!(ggi(&margin, dir.path(), None).status.code(), Some(1));
    let threads = ["roundtrip", "--fixture", "flat_grid", "--resolution", "32"];
    assert_eq!(ggi(&threads, dir.path(), Some("zero")).status.code(), Some(1));
    assert_eq!(ggi(&["no-such-command"], dir.path(), None).status.code(), Some(2));
}

#[test]
fn truncated_geometry_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(ggi(&["fixture", "--fixture", "two_square_stitched", "--out", "fx"], p, None));
    ok(ggi(&["encode", "fx/pattern.json", "--meshes", "fx/meshes", "--out", "s", "--resolution", "64"], p, None));
    let geom = p.join("s.geom.f32");
    let bytes = std::fs::read(&geom).unwrap();
    std::fs::write(&geom, &bytes[..bytes.len() - 9]).unwrap();
    let out = ggi(&["decode", "s", "--out", "x.obj"], p, None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn file_pipeline_is_byte_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut snapshots = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let t = Some(threads);
        let mut stdout = Vec::new();
        let fx = format!("{run}/fx");
        let stem = format!("{run}/skirt");
        let obj = format!("{run}/skirt.obj");
        let steps: Vec<Vec<String>> = vec![
            vec!["fixture".into(), "--fixture".into(), "multi_panel_skirt".into(), "--out".into(), fx.clone()],
            vec!["validate".into(), format!("{fx}/pattern.json")],
            vec!["pack".into(), format!("{fx}/pattern.json"), "--resolution".into(), "256".into()],
            vec![
                "encode".into(),
                format!("{fx}/pattern.json"),
                "--meshes".into(),
                format!("{fx}/meshes"),
                "--out".into(),
                stem.clone(),
                "--resolution".into(),
                "256".into(),
            ],
            vec!["decode".into(), stem.clone(), "--out".into(), obj.clone()],
            vec!["eval".into(), "--gt".into(), stem.clone(), "--pred".into(), stem.clone()],
            vec!["roundtrip".into(), "--fixture".into(), "dart_square".into(), "--resolution".into(), "128".into()],
        ];
        for step in steps {
            let mut args: Vec<&str> = step.iter().map(String::as_str).collect();
            args.push("--no-timing");
            let out = ok(ggi(&args, p, t));
            stdout.push(String::from_utf8(out.stdout).unwrap().replace(&format!("{run}/"), "RUN/"));
        }
        let files: Vec<Vec<u8>> = ["skirt.semantic.png", "skirt.stitch.png", "skirt.geom.f32", "skirt.ggi.json", "skirt.obj"]
            .iter()
            .map(|f| std::fs::read(p.join(run).join(f)).unwrap())
            .collect();
        snapshots.push((stdout, files));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    assert_eq!(snapshots[0], snapshots[2]);
}
