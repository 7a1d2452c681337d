//! Acceptance criteria 1-9, one PASS/FAIL line each.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

use stgen_core::analyze;
use stgen_core::exec::{run, OverrideValue, Runtime, Scenario, Value};
use stgen_core::syntax::{parse_source, pretty_print};
use stgen_genpipe::{GenerationReport, Status, TaskKind, Transcript};
use stgen_imaging::{crop, plan_tiles, CanonicalImage};
use stgen_project::{assemble, export_plcopen, import_plcopen, ExportError};

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))
}

fn runtime(src: &str, entry: &str) -> Result<Runtime, String> {
    let a = analyze(src);
    ensure(!a.has_errors(), || format!("{entry}: {:?}", a.diagnostics))?;
    Runtime::instantiate(&a.unit, entry, 100).map_err(|e| e.to_string())
}

fn real(v: Option<Value>) -> Result<f64, String> {
    v.and_then(|v| v.as_f64()).ok_or_else(|| "expected a REAL".to_string())
}

fn boolean(v: Option<&Value>) -> Result<bool, String> {
    v.and_then(Value::as_bool).ok_or_else(|| "expected a BOOL".to_string())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "st"))
        .collect();
    files.sort();
    ensure(files.len() >= 12, || format!("only {} fixtures", files.len()))?;
    let mut corpus = String::new();
    for f in &files {
        let src = fs::read_to_string(f).map_err(|e| e.to_string())?;
        let (unit, d1) = parse_source(&src);
        ensure(d1.is_empty(), || format!("{}: {d1:?}", f.display()))?;
        let (back, d2) = parse_source(&pretty_print(&unit));
        ensure(d2.is_empty(), || format!("{}: reprint does not parse", f.display()))?;
        ensure(back.stripped() == unit.stripped(), || format!("{}: structure changed", f.display()))?;
        corpus.push_str(&src.to_ascii_uppercase());
    }
    for construct in [
        "FUNCTION_BLOCK", "PROGRAM", "VAR_INPUT", "VAR_OUTPUT", "VAR_IN_OUT", "CONSTANT", "IF", "ELSIF", "ELSE",
        "CASE", "FOR", " BY ", "WHILE", "REPEAT", "EXIT", "RETURN", "MOD", "XOR", "NOT", "=>", "T#", "TIME#",
        "16#", "2#", "8#", "'",
    ] {
        ensure(corpus.contains(construct), || format!("no fixture uses {construct:?}"))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} fixtures in {:?}", files.len(), start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let src = read("cascade_tc1_fc5.st");
    let a = analyze(&src);
    ensure(a.diagnostics.is_empty(), || format!("{:?}", a.diagnostics))?;
    let lines = src.lines().count();
    let mut rt = runtime(&src, "Cascade_TC1_FC5")?;
    let (mut temp, mut flow) = (20.0, 0.0);
    for k in 0..600 {
        let res = rt
            .scan(&[
                ("TT1_Temperature".into(), Value::Real(temp)),
                ("FT5_Flow".into(), Value::Real(flow)),
            ])
            .map_err(|e| e.to_string())?;
        let primary = real(rt.get("TC1.OUT"))?;
        let secondary_sp = real(rt.get("FC5.SP"))?;
        ensure(secondary_sp == primary, || format!("scan {k}: FC5.SP {secondary_sp} vs TC1.OUT {primary}"))?;
        let link = real(res.get("FC5_Setpoint").cloned())?;
        ensure(link == primary, || format!("scan {k}: FC5_Setpoint {link} vs {primary}"))?;
        let valve = real(res.get("FV5_Valve").cloned())?;
        flow += (0.4 * valve - flow) * 0.05;
        temp += (3.0 * flow + 20.0 - temp) * 0.01;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{lines} lines, 600 scans in {:?}", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let src = read("interlock_t4750.st");
    let mut rt = runtime(&src, "Interlock_T4750")?;
    let height = real(rt.get("TankHeight"))?;
    let limit = real(rt.get("HighLevelLimit"))?;
    ensure(height == 4.0 && limit == 0.9 * 4.0, || format!("height {height}, limit {limit}"))?;
    let scenario = Scenario::new().step(0..91, vec![("Level", OverrideValue::Ramp { from: 3.0, to: 3.9 })]);
    let watch: Vec<String> = ["Level", "HighLevelAlarm", "PumpStop"].map(String::from).to_vec();
    let trace = run(&mut rt, &scenario, &watch, 91).map_err(|e| e.to_string())?;
    let first = trace
        .records
        .iter()
        .position(|r| r.values[0].as_f64().is_some_and(|l| l >= limit))
        .ok_or("level never reached the limit")?;
    for (k, r) in trace.records.iter().enumerate() {
        let alarm = boolean(r.values.get(1))?;
        let stop = boolean(r.values.get(2))?;
        ensure(alarm == (k >= first), || format!("alarm {alarm} at scan {k}, first crossing {first}"))?;
        ensure(stop == (k >= first), || format!("pump stop {stop} at scan {k}, first crossing {first}"))?;
    }
    Ok(format!("limit {limit} m, alarm and pump stop from scan {first}"))
}

fn criterion_4() -> Outcome {
    let src = read("startup.st");
    let mut rt = runtime(&src, "Startup")?;
    // phase 1 lasts InflowTimer (2 min), phase 2 FanTimer (3 min); 100 ms scans
    let p2 = 2 * 60 * 1000 / 100;
    let p3 = p2 + 3 * 60 * 1000 / 100;
    let mut activations = BTreeMap::new();
    for k in 0..6000u64 {
        let res = rt.scan(&[]).map_err(|e| e.to_string())?;
        let flags = [
            boolean(res.get("Phase1"))?,
            boolean(res.get("Phase2"))?,
            boolean(res.get("Phase3"))?,
        ];
        let on: Vec<usize> = (0..3).filter(|&i| flags[i]).collect();
        ensure(on.len() == 1, || format!("scan {k}: phases {flags:?}"))?;
        activations.entry(on[0] + 1).or_insert(k);
    }
    let got: Vec<(usize, u64)> = activations.into_iter().collect();
    ensure(got == vec![(1, 0), (2, p2), (3, p3)], || format!("activations {got:?}"))?;
    Ok(format!("one phase per scan; phase 2 at scan {p2}, phase 3 at scan {p3}"))
}

/// Straight-line controller: proportional, integral with conditional
/// integration, derivative on error, output clamp.
fn oracle_pid(kp: f64, ki: f64, kd: f64, lo: f64, hi: f64, dt: f64, errors: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut sum = 0.0;
    let mut last: Option<f64> = None;
    for &e in errors {
        let d = last.map_or(0.0, |p| kd * (e - p) / dt);
        let trial = kp * e + ki * (sum + e * dt) + d;
        let u = if (lo..=hi).contains(&trial) {
            sum += e * dt;
            trial
        } else {
            (kp * e + ki * sum + d).max(lo).min(hi)
        };
        last = Some(e);
        out.push(u);
    }
    out
}

const PID_PROGRAM: &str = "PROGRAM Loop
VAR_INPUT
    sp : REAL;
    pv : REAL;
    kp : REAL;
    ki : REAL;
    kd : REAL;
    lo : REAL;
    hi : REAL;
END_VAR
VAR_OUTPUT
    u : REAL;
END_VAR
VAR
    c : PID;
END_VAR
c(SP := sp, PV := pv, KP := kp, KI := ki, KD := kd, OUT_MIN := lo, OUT_MAX := hi);
u := c.OUT;
END_PROGRAM
";

fn pid_inputs(kp: f64, ki: f64, kd: f64, lo: f64, hi: f64) -> Vec<(String, Value)> {
    [("kp", kp), ("ki", ki), ("kd", kd), ("lo", lo), ("hi", hi), ("sp", 0.0)]
        .into_iter()
        .map(|(n, v)| (n.to_string(), Value::Real(v)))
        .collect()
}

fn criterion_5() -> Outcome {
    let (kp, ki, kd, lo, hi) = (2.3, 1.1, 0.08, -25.0, 40.0);
    let errors: Vec<f64> = (0..1000)
        .map(|k| {
            let t = k as f64 * 0.1;
            let level = [15.0, -12.0, 30.0, -4.0][(k / 250) % 4];
            level + 6.0 * (0.9 * t).sin() + 0.5 * (k % 37) as f64 / 37.0
        })
        .collect();
    let expected = oracle_pid(kp, ki, kd, lo, hi, 0.1, &errors);
    ensure(expected.iter().any(|&u| u == lo || u == hi), || "signal never saturates".into())?;
    ensure(expected.iter().any(|&u| u > lo && u < hi), || "signal never linear".into())?;
    let mut rt = runtime(PID_PROGRAM, "Loop")?;
    let fixed = pid_inputs(kp, ki, kd, lo, hi);
    let mut worst = 0.0f64;
    for (k, (&e, &want)) in errors.iter().zip(&expected).enumerate() {
        let mut inputs = fixed.clone();
        // error = SP - PV with SP = 0
        inputs.push(("pv".into(), Value::Real(-e)));
        let res = rt.scan(&inputs).map_err(|x| x.to_string())?;
        let got = real(res.get("u").cloned())?;
        let rel = (got - want).abs() / want.abs().max(1e-300);
        ensure(got == want || rel <= 1e-9, || format!("scan {k}: {got} vs {want}"))?;
        if got != want {
            worst = worst.max(rel);
        }
    }

    let unit = analyze(PID_PROGRAM).unit;
    let mut runner = TestRunner::new(PropConfig {
        cases: 10_000,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (
        (-50.0f64..50.0, -50.0f64..50.0, -5.0f64..5.0),
        (-100.0f64..0.0, 0.0f64..100.0),
        prop::collection::vec(-1e3f64..1e3, 1..6),
    );
    runner
        .run(&strategy, |((kp, ki, kd), (lo, hi), signal)| {
            let mut rt = Runtime::instantiate(&unit, "Loop", 100).unwrap();
            let fixed = pid_inputs(kp, ki, kd, lo, hi);
            for pv in signal {
                let mut inputs = fixed.clone();
                inputs.push(("pv".into(), Value::Real(pv)));
                let res = rt.scan(&inputs).unwrap();
                let u = res.get("u").and_then(Value::as_f64).unwrap();
                prop_assert!(lo <= u && u <= hi, "u = {} outside [{}, {}]", u, lo, hi);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("1000 scans, max relative deviation {worst:e}; 10000 clamp draws held"))
}

fn criterion_6() -> Outcome {
    let mut rt = runtime(&read("ton_5m.st"), "Ton5m")?;
    let pt_ms = 5 * 60 * 1000;
    let fire = pt_ms / 100;
    let mut first_q = None;
    for k in 0..(fire + 500) {
        let res = rt.scan(&[]).map_err(|e| e.to_string())?;
        let q = boolean(res.get("Q"))?;
        if q && first_q.is_none() {
            first_q = Some(k);
        }
        ensure(q == (k >= fire), || format!("Q = {q} at scan {k}"))?;
        let et = match res.get("ET") {
            Some(Value::Time(ms)) => *ms,
            other => return Err(format!("ET is {other:?}")),
        };
        ensure(et == (k * 100).min(pt_ms), || format!("ET = {et} at scan {k}"))?;
    }
    Ok(format!("Q first TRUE at scan {}", first_q.unwrap_or(-1)))
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn generate(mock: &Path, out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_stgen"))
        .arg("generate")
        .arg(fixtures().join("images/eastman.png"))
        .arg("--mock")
        .arg(mock)
        .arg("--plan")
        .arg(fixtures().join("plans/eastman.plan"))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.code() == Some(0), || {
        format!("generate exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
    })
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let runs = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b, c) = (runs.path().join("a"), runs.path().join("b"), runs.path().join("c"));
    let script = fixtures().join("transcripts/eastman.mock");
    generate(&script, &a)?;
    generate(&script, &b)?;
    generate(&a.join("replay.mock"), &c)?;

    let report: GenerationReport =
        serde_json::from_str(&fs::read_to_string(a.join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    ensure(report.tasks.iter().all(|t| t.status == Status::Accepted), || report.render_text())?;
    let interlock = report.tasks.iter().find(|t| t.kind == TaskKind::Interlock).ok_or("no interlock task")?;
    ensure((1..=3).contains(&interlock.rounds), || format!("interlock took {} rounds", interlock.rounds))?;
    ensure(report.files.len() == 3, || format!("files {:?}", report.files))?;
    for f in &report.files {
        let a = analyze(&fs::read_to_string(a.join(f)).map_err(|e| e.to_string())?);
        ensure(!a.has_errors(), || format!("{f}: {:?}", a.diagnostics))?;
    }

    let (ta, tb, tc) = (tree(&a), tree(&b), tree(&c));
    ensure(ta.keys().eq(tb.keys()) && ta.keys().eq(tc.keys()), || "runs produced different file sets".into())?;
    for (name, bytes) in &ta {
        if name == "run.json" {
            continue;
        }
        let same = |other: &BTreeMap<String, Vec<u8>>| {
            if name.starts_with("transcripts/") {
                let mask = |b: &[u8]| Transcript::from_jsonl(&String::from_utf8_lossy(b)).map(|t| t.masked());
                mask(bytes) == mask(&other[name])
            } else {
                bytes == &other[name]
            }
        };
        ensure(same(&tb), || format!("{name} differs between identical runs"))?;
        ensure(same(&tc), || format!("{name} differs in the replayed run"))?;
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "repair converged in {} round(s); {} artifacts; 3 runs identical in {:?}",
        interlock.rounds,
        report.files.len(),
        start.elapsed()
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut runner = TestRunner::new(PropConfig {
        cases: 50,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (1u32..400, 1u32..300, 1u32..200, 1u32..200, 0u32..100, any::<u64>()).prop_filter(
        "overlap below tile size",
        |(_, _, tw, th, ov, _)| ov < tw && ov < th,
    );
    runner
        .run(&strategy, |(w, h, tw, th, ov, seed)| {
            let pixels: Vec<u8> = (0..(w * h) as u64)
                .map(|i| (i.wrapping_mul(seed | 1).wrapping_add(seed >> 7) >> 3) as u8)
                .collect();
            let img = CanonicalImage::new(w, h, pixels.clone()).unwrap();
            let plan = plan_tiles(w, h, tw, th, ov).unwrap();
            let tiles = crop(&img, &plan).unwrap();
            let mut cover = vec![0u32; (w * h) as usize];
            for (t, c) in plan.tiles.iter().zip(&tiles) {
                prop_assert!(t.x + t.w <= w && t.y + t.h <= h);
                for y in 0..t.h {
                    for x in 0..t.w {
                        let (gx, gy) = (t.x + x, t.y + y);
                        cover[(gy * w + gx) as usize] += 1;
                        prop_assert_eq!(c.get(x, y), pixels[(gy * w + gx) as usize]);
                    }
                }
            }
            prop_assert!(cover.iter().all(|&n| n >= 1), "uncovered pixel");
            for a in &plan.tiles {
                for b in &plan.tiles {
                    let right = b.row == a.row && b.col == a.col + 1;
                    let below = b.col == a.col && b.row == a.row + 1;
                    if !(right || below) {
                        continue;
                    }
                    let mut shared = 0u64;
                    for y in a.y..a.y + a.h {
                        for x in a.x..a.x + a.w {
                            if b.contains(x, y) {
                                shared += 1;
                            }
                        }
                    }
                    let band = if right { a.h as u64 * ov as u64 } else { a.w as u64 * ov as u64 };
                    prop_assert!(shared >= band, "tiles {:?} and {:?} share {} px < {}", a, b, shared, band);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("50 configurations in {:?}", start.elapsed()))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let names = ["cascade_tc1_fc5.st", "interlock_t4750.st", "startup.st"];
    let sources: Vec<(String, String)> = names.iter().map(|n| (n.to_string(), read(n))).collect();
    let (manifest, unit) = assemble("three", &sources, 100).map_err(|e| e.to_string())?;
    let first = export_plcopen(&manifest, &unit).map_err(|e| e.to_string())?;
    let imported = import_plcopen(&first).map_err(|e| e.to_string())?;
    let second = export_plcopen(&imported.manifest, &imported.unit).map_err(|e| e.to_string())?;
    ensure(first == second, || "export is not a fixed point".into())?;

    let mut broken = sources.clone();
    broken[2].1 = broken[2].1.replacen("END_PROGRAM", "Phase1 := 2.5;\nEND_PROGRAM", 1);
    let (m, u) = assemble("three", &broken, 100).map_err(|e| e.to_string())?;
    match export_plcopen(&m, &u) {
        Err(ExportError::Rejected(r)) => {
            ensure(r.len() == 1 && r[0].pou == "Startup", || format!("rejected {r:?}"))?;
            ensure(r[0].diagnostics.iter().any(|d| d.code == "E002"), || format!("{:?}", r[0].diagnostics))?;
        }
        other => return Err(format!("type error not refused: {:?}", other.map(|x| x.len()))),
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} bytes fixed point; type error refused; {:?}", first.len(), start.elapsed()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("parser round-trip on the fixture corpus", criterion_1),
        ("cascade setpoint tracks primary output", criterion_2),
        ("interlock trips at the high-level limit", criterion_3),
        ("startup runs one phase at a time", criterion_4),
        ("PID matches the reference and stays clamped", criterion_5),
        ("TON with PT = 5 min fires at scan 3000", criterion_6),
        ("mock pipeline repairs, gates and replays", criterion_7),
        ("tiling covers every pixel with overlap", criterion_8),
        ("project export round-trip and refusal", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
