use std::path::{Path, PathBuf};
use std::time::Instant;

use ggi_core::fixtures::{make_fixture, Fixture};
use ggi_core::ggi_io::{normalize_stem, read_ggi, write_ggi};
use ggi_core::layout::fit_layout;
use ggi_core::mesh_io::{export_obj, import_obj, read_obj, write_obj, ObjDocument, ObjError};
use ggi_core::metrics::{self, GeometryView};
use ggi_core::pattern::{parse_pattern, parse_pattern_unchecked, serialize_pattern, validate_pattern, SewingPattern};
use ggi_core::pipeline::{decode, roundtrip_report_seeded};
use ggi_core::raster::{encode, EncodeOptions, GgiRaster, PanelMesh};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::{Cli, Command, EncodeArgs, GridArgs};

pub const MIN_RESOLUTION: u32 = 32;
pub const MAX_RESOLUTION: u32 = 4096;

/// Runs one subcommand; the returned code is the process exit status.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let mut out = Reporter { timing: !cli.no_timing };
    match &cli.command {
        Command::Validate { pattern } => validate(&mut out, pattern),
        Command::Pack { pattern, grid, out: path } => pack(&mut out, pattern, *grid, path.as_deref()),
        Command::Encode { pattern, meshes, out: stem, grid, encode } => {
            encode_cmd(&mut out, pattern, meshes, stem, *grid, *encode)
        }
        Command::Decode { input, out: path, seams, stitch } => {
            decode_cmd(&mut out, input, path, seams.as_deref(), stitch.dtw_cost_space.into())
        }
        Command::Roundtrip { fixture, grid, encode, stitch, seed, out: path } => {
            check_grid(*grid)?;
            let fx = make_fixture(fixture.fixture, &fixture.params())?;
            roundtrip_cmd(&mut out, &fx, *grid, *encode, stitch.dtw_cost_space.into(), *seed, path.as_deref())
        }
        Command::Eval { gt, pred, alpha, band, gt_mesh, pred_mesh, samples, seed } => {
            let rasters = gt.as_deref().zip(pred.as_deref());
            let meshes = gt_mesh.as_deref().zip(pred_mesh.as_deref());
            eval(&mut out, rasters, *alpha, *band, meshes, *samples, *seed)
        }
        Command::Fixture { fixture, out: dir } => {
            let fx = make_fixture(fixture.fixture, &fixture.params())?;
            fixture_cmd(&mut out, &fx, dir)
        }
    }
}

/// Line-delimited JSON on stdout.
struct Reporter {
    timing: bool,
}

impl Reporter {
    fn line(&mut self, v: &impl Serialize) {
        println!("{}", serde_json::to_string(v).expect("reports serialize"));
    }

    fn timing(&mut self, stages: &[(&str, f64)]) {
        if self.timing {
            let map: serde_json::Map<String, Value> = stages.iter().map(|(k, s)| (format!("{k}_s"), json!(s))).collect();
            self.line(&json!({ "timing": map }));
        }
    }
}

fn check_grid(g: GridArgs) -> Result<(), CliError> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&g.resolution) {
        return Err(CliError::Validation(format!(
            "resolution {} is outside {MIN_RESOLUTION}..={MAX_RESOLUTION}",
            g.resolution
        )));
    }
    if g.margin < 1 {
        return Err(CliError::Validation("margin must be at least 1".into()));
    }
    Ok(())
}

fn encode_options(g: GridArgs, e: EncodeArgs) -> EncodeOptions {
    EncodeOptions { resolution: g.resolution, margin: g.margin, strict: e.strict, mode: e.mode.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        None => Ok(()),
    }
}

fn load_pattern(path: &Path) -> Result<SewingPattern, CliError> {
    Ok(parse_pattern(&read_bytes(path)?)?)
}

fn obj_error(path: &Path, e: ObjError) -> CliError {
    match e {
        ObjError::Io { .. } => e.into(),
        other => CliError::Format(format!("{}: {other}", path.display())),
    }
}

fn validate(out: &mut Reporter, path: &Path) -> Result<u8, CliError> {
    let pattern = parse_pattern_unchecked(&read_bytes(path)?)?;
    let violations = validate_pattern(&pattern);
    for v in &violations {
        out.line(&json!({
            "violation": v.code.as_str(),
            "location": v.location.to_string(),
            "message": v.message,
        }));
    }
    out.line(&json!({
        "command": "validate",
        "pattern": pattern.name,
        "valid": violations.is_empty(),
        "violations": violations.len(),
    }));
    if violations.is_empty() {
        return Ok(0);
    }
    let summary: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(CliError::Validation(format!("{} violation(s): {}", violations.len(), summary.join("; "))))
}

fn pack(out: &mut Reporter, path: &Path, grid: GridArgs, dest: Option<&Path>) -> Result<u8, CliError> {
    check_grid(grid)?;
    let pattern = load_pattern(path)?;
    let layout = fit_layout(&pattern, grid.resolution, grid.margin)?;
    if let Some(dest) = dest {
        let text = serde_json::to_string_pretty(&layout).expect("layout serializes");
        write_text(dest, &(text + "\n"))?;
    }
    out.line(&json!({ "command": "pack", "layout": layout }));
    Ok(0)
}

/// Panel meshes from `<dir>/<panel_id>.obj`, with `vt` read as pattern coordinates.
fn load_meshes(pattern: &SewingPattern, dir: &Path) -> Result<Vec<PanelMesh>, CliError> {
    pattern
        .panels
        .iter()
        .map(|panel| {
            let path = dir.join(format!("{}.obj", panel.id));
            let doc = read_obj(&path).map_err(|e| obj_error(&path, e))?;
            if doc.uvs.len() != doc.vertices.len() {
                return Err(CliError::Format(format!("{}: every vertex needs a vt coordinate", path.display())));
            }
            Ok(PanelMesh::from_uv_mesh(panel, doc.vertices, doc.uvs, doc.faces)?)
        })
        .collect()
}

fn encode_cmd(
    out: &mut Reporter,
    pattern_path: &Path,
    meshes: &Path,
    stem: &Path,
    grid: GridArgs,
    args: EncodeArgs,
) -> Result<u8, CliError> {
    check_grid(grid)?;
    let t0 = Instant::now();
    let pattern = load_pattern(pattern_path)?;
    let meshes = load_meshes(&pattern, meshes)?;
    let t1 = Instant::now();
    let enc = encode(&pattern, &meshes, &encode_options(grid, args))?;
    let t2 = Instant::now();
    ensure_parent(stem)?;
    write_ggi(&enc.raster, stem)?;
    let t3 = Instant::now();
    out.line(&json!({
        "command": "encode",
        "out": normalize_stem(stem),
        "side": enc.raster.side,
        "valid_pixels": enc.raster.valid.iter().filter(|&&v| v).count(),
        "uncovered_pixels": enc.uncovered,
        "stitch_count": enc.raster.stitch_count,
        "norm": enc.raster.norm,
    }));
    out.timing(&[
        ("read", (t1 - t0).as_secs_f64()),
        ("encode", (t2 - t1).as_secs_f64()),
        ("write", (t3 - t2).as_secs_f64()),
    ]);
    Ok(0)
}

fn decode_cmd(
    out: &mut Reporter,
    input: &Path,
    dest: &Path,
    seams: Option<&Path>,
    space: ggi_core::stitcher::DtwCostSpace,
) -> Result<u8, CliError> {
    let t0 = Instant::now();
    let raster = read_ggi(input)?;
    let t1 = Instant::now();
    let asm = decode(&raster, space)?;
    let t2 = Instant::now();
    ensure_parent(dest)?;
    export_obj(&asm.mesh, Some(raster.norm), Some(raster.side), dest).map_err(|e| obj_error(dest, e))?;
    if let Some(path) = seams {
        write_text(path, &(serde_json::to_string_pretty(&asm.seams).expect("seams serialize") + "\n"))?;
    }
    let t3 = Instant::now();
    out.line(&json!({
        "command": "decode",
        "input": normalize_stem(input),
        "out": dest,
        "side": raster.side,
        "panels": raster.layout.placements.len(),
        "mesh": ggi_core::remesh::mesh_stats(&asm.mesh),
        "degenerate_removed": asm.degenerate_removed,
        "seams": asm.seams,
    }));
    out.timing(&[
        ("read", (t1 - t0).as_secs_f64()),
        ("decode", (t2 - t1).as_secs_f64()),
        ("write", (t3 - t2).as_secs_f64()),
    ]);
    Ok(0)
}

fn roundtrip_cmd(
    out: &mut Reporter,
    fx: &Fixture,
    grid: GridArgs,
    args: EncodeArgs,
    space: ggi_core::stitcher::DtwCostSpace,
    seed: u64,
    dest: Option<&Path>,
) -> Result<u8, CliError> {
    let t0 = Instant::now();
    let enc = encode(&fx.pattern, &fx.meshes, &encode_options(grid, args))?;
    let t1 = Instant::now();
    let asm = decode(&enc.raster, space)?;
    let t2 = Instant::now();
    let report = roundtrip_report_seeded(fx, &enc, &asm, seed)?;
    let t3 = Instant::now();
    if let Some(dest) = dest {
        ensure_parent(dest)?;
        export_obj(&asm.mesh, Some(enc.raster.norm), Some(enc.raster.side), dest).map_err(|e| obj_error(dest, e))?;
    }
    let mut line = serde_json::to_value(&report).expect("report serializes");
    line["command"] = json!("roundtrip");
    line["chamfer_convention"] = json!("symmetric_sum_of_means");
    out.line(&line);
    out.timing(&[
        ("encode", (t1 - t0).as_secs_f64()),
        ("decode", (t2 - t1).as_secs_f64()),
        ("score", (t3 - t2).as_secs_f64()),
    ]);
    Ok(0)
}

/// `pred` geometry re-expressed in the normalization of `gt`.
fn renormalized(gt: &GgiRaster, pred: &GgiRaster) -> Vec<[f32; 3]> {
    if gt.norm == pred.norm {
        return pred.geometry.clone();
    }
    (0..pred.geometry.len())
        .map(|i| if pred.valid[i] { gt.norm.normalize(pred.world(i)) } else { [0.0; 3] })
        .collect()
}

fn eval(
    out: &mut Reporter,
    rasters: Option<(&Path, &Path)>,
    alpha: f64,
    band: u32,
    meshes: Option<(&Path, &Path)>,
    samples: usize,
    seed: u64,
) -> Result<u8, CliError> {
    let t0 = Instant::now();
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("eval"));
    report.insert("chamfer_convention".into(), json!("symmetric_sum_of_means"));
    if let Some((gt_path, pred_path)) = rasters {
        let gt = read_ggi(gt_path)?;
        let pred = read_ggi(pred_path)?;
        if gt.side != pred.side {
            return Err(CliError::Validation(format!("raster sides differ: {} vs {}", gt.side, pred.side)));
        }
        let geometry = renormalized(&gt, &pred);
        let gt_view = GeometryView::from(&gt);
        let pred_view = GeometryView { geometry: &geometry, valid: &pred.valid, ..gt_view };
        let l1 = metrics::edge_aware_l1(gt_view, pred_view, alpha, band)?;
        let stitch = metrics::stitch_chamfer(pred_view, &gt)?;
        report.insert("alpha".into(), json!(alpha));
        report.insert("band".into(), json!(band));
        report.insert("edge_aware_l1".into(), json!(l1));
        report.insert("stitch_chamfer".into(), json!(stitch));
        report.insert("combined_score".into(), json!(metrics::combined_score(l1, stitch)));
    }
    if let Some((gt_path, pred_path)) = meshes {
        let gt = import_obj(gt_path).map_err(|e| obj_error(gt_path, e))?;
        let pred = import_obj(pred_path).map_err(|e| obj_error(pred_path, e))?;
        let a = metrics::sample_surface(&gt, samples, seed)?;
        let b = metrics::sample_surface(&pred, samples, seed.wrapping_add(1))?;
        report.insert("samples".into(), json!(samples));
        report.insert("seed".into(), json!(seed));
        report.insert("mesh_chamfer".into(), json!(metrics::chamfer_distance(&a, &b)?));
    }
    out.line(&report);
    out.timing(&[("eval", t0.elapsed().as_secs_f64())]);
    Ok(0)
}

fn fixture_cmd(out: &mut Reporter, fx: &Fixture, dir: &Path) -> Result<u8, CliError> {
    let pattern_path = dir.join("pattern.json");
    write_text(&pattern_path, &serialize_pattern(&fx.pattern))?;
    let mesh_dir = dir.join("meshes");
    std::fs::create_dir_all(&mesh_dir).map_err(|e| CliError::io(&mesh_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for pm in &fx.meshes {
        let doc = ObjDocument {
            vertices: pm.vertices3d.clone(),
            uvs: pm.uv.clone(),
            faces: pm.faces.clone(),
            norm: None,
            uv_side: None,
        };
        let path = mesh_dir.join(format!("{}.obj", pm.panel_id));
        write_obj(&doc, &path).map_err(|e| obj_error(&path, e))?;
        written.push(path);
    }
    out.line(&json!({
        "command": "fixture",
        "fixture": fx.kind,
        "params": fx.params,
        "pattern": pattern_path,
        "meshes": written,
        "stitches": fx.pattern.stitches.len(),
    }));
    Ok(0)
}
