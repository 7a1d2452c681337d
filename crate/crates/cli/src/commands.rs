use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use stgen_core::analyze;
use stgen_core::exec::{run, RunError, Runtime, Scenario};
use stgen_genpipe::batch::{BatchOptions, Plan};
use stgen_genpipe::{
    replay_script, run_batch, ChatClient, GenerationReport, LiveClient, MockClient, MockScript, SystemClock,
    Transcript,
};
use stgen_imaging::{crop, load_and_normalize, plan_tiles, write_tiles, NormalizeOptions};
use stgen_project::{assemble, export_plcopen};

use crate::config::{Config, Mode};
use crate::scenario::ScenarioFile;
use crate::{CheckArgs, ExportArgs, Format, GenerateArgs, PreprocessArgs, SimulateArgs, TileArgs};

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create '{}'", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write '{}'", path.display()))
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

/// `run.json`: what ran, on what, and what it produced.
fn write_run_manifest(out: &Path, command: &str, inputs: &[String], outputs: &[String], ok: bool) -> Result<()> {
    let manifest = json!({
        "tool": "stgen",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "status": if ok { "ok" } else { "failed" },
    });
    write(&out.join("run.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))
}

fn apply_tile_args(cfg: &mut Config, t: &TileArgs) {
    if let Some(v) = t.tile {
        cfg.tile_size = v;
    }
    if let Some(v) = t.overlap {
        cfg.overlap = v;
    }
    if t.no_stretch {
        cfg.contrast_stretch = false;
    }
}

/// Normalize `image` and write its tiles plus `tiles.json` into `dir`.
pub fn tile_image(image: &Path, dir: &Path, cfg: &Config) -> Result<Vec<PathBuf>> {
    let img = load_and_normalize(
        image,
        NormalizeOptions {
            contrast_stretch: cfg.contrast_stretch,
        },
    )
    .with_context(|| format!("cannot load '{}'", image.display()))?;
    let plan = plan_tiles(img.width(), img.height(), cfg.tile_size, cfg.tile_size, cfg.overlap)?;
    let tiles = crop(&img, &plan)?;
    let stem = image.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into());
    let paths = write_tiles(&tiles, &plan, dir, &stem)?;
    let index = json!({
        "source": image.file_name().map(|n| n.to_string_lossy().into_owned()),
        "width": plan.width,
        "height": plan.height,
        "tile": cfg.tile_size,
        "overlap": plan.overlap,
        "rows": plan.rows,
        "cols": plan.cols,
        "stretch": img.provenance.stretch.map(|s| json!({"low": s.low, "high": s.high})),
        "tiles": plan.tiles.iter().zip(&paths).map(|(t, p)| json!({
            "file": relative(p, dir),
            "row": t.row, "col": t.col, "x": t.x, "y": t.y, "w": t.w, "h": t.h,
        })).collect::<Vec<_>>(),
    });
    write(&dir.join(format!("{stem}.tiles.json")), &(serde_json::to_string_pretty(&index)? + "\n"))?;
    Ok(paths)
}

pub fn preprocess(mut cfg: Config, args: PreprocessArgs) -> Result<i32> {
    apply_tile_args(&mut cfg, &args.tiles);
    let out = args.out.unwrap_or(cfg.output_dir.clone());
    let dir = out.join("tiles");
    let paths = tile_image(&args.image, &dir, &cfg)?;
    let mut outputs: Vec<String> = paths.iter().map(|p| relative(p, &out)).collect();
    outputs.sort();
    write_run_manifest(&out, "preprocess", &[args.image.display().to_string()], &outputs, true)?;
    println!("{} tile(s) written to {}", paths.len(), dir.display());
    Ok(0)
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .is_some_and(|e| matches!(e.as_str(), "png" | "jpg" | "jpeg" | "tif" | "tiff"))
}

fn collect_tiles(inputs: &[PathBuf], out: &Path, cfg: &Config) -> Result<Vec<PathBuf>> {
    let mut tiles = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("cannot list '{}'", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_image(p))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no tiles in '{}'", input.display());
            }
            tiles.extend(found);
        } else {
            tiles.extend(tile_image(input, &out.join("tiles"), cfg)?);
        }
    }
    Ok(tiles)
}

fn make_client(cfg: &Config) -> Result<Box<dyn ChatClient>> {
    cfg.validate_client()?;
    Ok(match cfg.mode {
        Mode::Mock => {
            let path = cfg.mock_script.as_ref().expect("validated");
            Box::new(MockClient::new(MockScript::load(path).map_err(|e| anyhow!(e))?))
        }
        Mode::Live => Box::new(LiveClient::from_env(
            cfg.endpoint.as_deref().unwrap_or_default(),
            cfg.client_config(),
        )?),
    })
}

fn export_accepted(report: &GenerationReport, out: &Path, name: &str, cycle_ms: i64) -> Result<Vec<PathBuf>> {
    let mut sources = Vec::new();
    for f in &report.files {
        let text = fs::read_to_string(out.join(f)).with_context(|| format!("cannot read '{f}'"))?;
        sources.push((f.clone(), text));
    }
    let (manifest, unit) = assemble(name, &sources, cycle_ms)?;
    let xml = export_plcopen(&manifest, &unit)?;
    let dir = out.join("project");
    let (xml_path, manifest_path) = (dir.join("project.xml"), dir.join("manifest.json"));
    write(&xml_path, &xml)?;
    write(&manifest_path, &manifest.to_json())?;
    Ok(vec![xml_path, manifest_path])
}

pub fn generate(mut cfg: Config, args: GenerateArgs) -> Result<i32> {
    apply_tile_args(&mut cfg, &args.tiles);
    if let Some(m) = &args.mock {
        cfg.mode = Mode::Mock;
        cfg.mock_script = Some(m.clone());
    }
    if args.live {
        cfg.mode = Mode::Live;
    }
    if args.endpoint.is_some() {
        cfg.endpoint = args.endpoint.clone();
    }
    if args.model.is_some() {
        cfg.model = args.model.clone();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(r) = args.max_rounds {
        cfg.max_rounds = r;
    }
    if let Some(c) = args.cycle_ms {
        cfg.cycle_ms = c;
    }
    let client = make_client(&cfg)?;
    let mut plan = Plan::load(&args.plan)?;
    let out = args.out.clone().unwrap_or(cfg.output_dir.clone());
    fs::create_dir_all(&out).with_context(|| format!("cannot create '{}'", out.display()))?;
    if !args.inputs.is_empty() {
        let tiles = collect_tiles(&args.inputs, &out, &cfg)?;
        for g in &mut plan.groups {
            g.tiles = tiles.clone();
        }
    }

    let report = run_batch(
        &plan,
        client.as_ref(),
        &SystemClock,
        &out,
        &BatchOptions {
            workers: cfg.workers,
            max_rounds: cfg.max_rounds,
        },
    )?;

    let mut transcripts = Vec::new();
    for t in &report.tasks {
        let path = out.join("transcripts").join(format!("{}.jsonl", t.id));
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read '{}'", path.display()))?;
        transcripts.push(Transcript::from_jsonl(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?);
    }
    write(&out.join("replay.mock"), &replay_script(&transcripts).to_toml())?;

    let mut outputs: Vec<String> = report.files.clone();
    outputs.extend(report.tasks.iter().map(|t| format!("transcripts/{}.jsonl", t.id)));
    outputs.extend(["report.json", "report.txt", "replay.mock"].map(String::from));
    if out.join("detected.plan").is_file() {
        outputs.push("detected.plan".into());
    }
    let mut ok = report.is_success();
    print!("{}", report.render_text());
    if !report.files.is_empty() {
        let name = if plan.name.is_empty() { "project" } else { plan.name.as_str() };
        match export_accepted(&report, &out, name, cfg.cycle_ms) {
            Ok(paths) => outputs.extend(paths.iter().map(|p| relative(p, &out))),
            Err(e) => {
                eprintln!("error: export failed: {e:#}");
                ok = false;
            }
        }
    }
    let mut inputs = vec![format!("plan={}", args.plan.display())];
    inputs.extend(args.inputs.iter().map(|p| p.display().to_string()));
    write_run_manifest(&out, "generate", &inputs, &outputs, ok)?;
    Ok(if ok { 0 } else { 1 })
}

pub fn check(args: CheckArgs) -> Result<i32> {
    let mut errors = 0;
    for file in &args.files {
        let name = file.display().to_string();
        let text = fs::read_to_string(file).with_context(|| format!("cannot read '{name}'"))?;
        let a = analyze(&text);
        for d in &a.diagnostics {
            match args.format {
                Format::Text => println!("{}", d.render(&name)),
                Format::Json => {
                    let mut v = serde_json::to_value(d.record())?;
                    v["file"] = json!(name);
                    println!("{}", serde_json::to_string(&v)?);
                }
            }
        }
        errors += stgen_core::diag::error_count(&a.diagnostics);
    }
    if errors > 0 {
        eprintln!("{errors} error(s)");
        Ok(1)
    } else {
        Ok(0)
    }
}

pub fn simulate(cfg: Config, args: SimulateArgs) -> Result<i32> {
    let name = args.file.display().to_string();
    let text = fs::read_to_string(&args.file).with_context(|| format!("cannot read '{name}'"))?;
    let a = analyze(&text);
    for d in &a.diagnostics {
        eprintln!("{}", d.render(&name));
    }
    if a.has_errors() {
        return Ok(1);
    }
    let cycle_ms = args.cycle_ms.unwrap_or(cfg.cycle_ms);
    let mut rt = Runtime::instantiate(&a.unit, &args.entry, cycle_ms)?;
    let file = match &args.scenario {
        Some(p) => ScenarioFile::load(p)?,
        None => ScenarioFile::default(),
    };
    let scenario = if file.steps.is_empty() {
        Scenario::new()
    } else {
        file.to_scenario(&rt)?
    };
    let watch = if !args.watch.is_empty() {
        args.watch.clone()
    } else if !file.watch.is_empty() {
        file.watch.clone()
    } else {
        rt.output_names()
    };

    let out = args.out.clone().unwrap_or(cfg.output_dir.clone());
    let (trace, failure) = match run(&mut rt, &scenario, &watch, args.scans) {
        Ok(t) => (t, None),
        Err(RunError::Aborted { error, partial }) => (*partial, Some(error.to_string())),
        Err(e) => return Err(e.into()),
    };
    write(&out.join("trace.txt"), &trace.to_lines())?;
    write(&out.join("trace.csv"), &trace.to_csv())?;
    let mut inputs = vec![name, format!("entry={}", args.entry), format!("scans={}", args.scans)];
    if let Some(p) = &args.scenario {
        inputs.push(format!("scenario={}", p.display()));
    }
    let outputs = ["trace.txt", "trace.csv"].map(String::from);
    write_run_manifest(&out, "simulate", &inputs, &outputs, failure.is_none())?;
    match failure {
        Some(e) => {
            eprintln!("error: simulation stopped after {} scan(s): {e}", trace.len());
            Ok(1)
        }
        None => {
            println!(
                "{} scan(s) of {} at {} ms; trace written to {}",
                trace.len(),
                trace.entry,
                trace.cycle_ms,
                out.join("trace.txt").display()
            );
            Ok(0)
        }
    }
}

pub fn export(cfg: Config, args: ExportArgs) -> Result<i32> {
    let mut files: Vec<PathBuf> = fs::read_dir(&args.dir)
        .with_context(|| format!("cannot list '{}'", args.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "st"))
        .collect();
    files.sort();
    let mut sources = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).with_context(|| format!("cannot read '{}'", f.display()))?;
        sources.push((relative(f, &args.dir), text));
    }
    let name = args.name.clone().unwrap_or_else(|| {
        fs::canonicalize(&args.dir)
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "project".into())
    });
    let (manifest, unit) = assemble(&name, &sources, args.cycle_ms.unwrap_or(cfg.cycle_ms))?;
    let xml = export_plcopen(&manifest, &unit)?;
    let out = args.out.clone().unwrap_or(args.dir.clone());
    write(&out.join("project.xml"), &xml)?;
    write(&out.join("manifest.json"), &manifest.to_json())?;
    let inputs: Vec<String> = sources.iter().map(|(n, _)| n.clone()).collect();
    write_run_manifest(&out, "export", &inputs, &["project.xml".into(), "manifest.json".into()], true)?;
    println!("{} POU(s) exported to {}", manifest.entries.len(), out.join("project.xml").display());
    Ok(0)
}
