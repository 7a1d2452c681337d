use super::*;
use crate::syntax::parse_source;
use crate::syntax::ast::ElementaryType;

fn rt(src: &str, entry: &str) -> Runtime {
    let (unit, diags) = parse_source(src);
    assert!(diags.is_empty(), "{diags:#?}");
    Runtime::instantiate(&unit, entry, DEFAULT_CYCLE_MS).unwrap_or_else(|e| panic!("{e}"))
}

fn set(name: &str, v: Value) -> Vec<(String, Value)> {
    vec![(name.to_string(), v)]
}

const ALARM: &str = "
PROGRAM Alarm
VAR_INPUT
    Level : REAL := 1.0;
END_VAR
VAR_OUTPUT
    HighLevelAlarm : BOOL;
END_VAR
VAR CONSTANT
    HighLimit : REAL := 3.6;
END_VAR
HighLevelAlarm := Level > HighLimit;
END_PROGRAM
";

#[test]
fn initial_values() {
    let r = rt(ALARM, "Alarm");
    assert_eq!(r.scan_count(), 0);
    assert_eq!(r.get("Level"), Some(Value::Real(1.0)));
    assert_eq!(r.get("HighLevelAlarm"), Some(Value::Bool(false)));
    assert_eq!(r.get("highlimit"), Some(Value::Real(3.6)));
}

#[test]
fn unknown_entry() {
    let (unit, _) = parse_source(ALARM);
    let err = Runtime::instantiate(&unit, "Nope", 100).unwrap_err();
    assert_eq!(err.to_string(), "unknown POU 'Nope'");
}

#[test]
fn unit_with_errors_is_rejected() {
    let (unit, _) = parse_source("PROGRAM P VAR x : INT; END_VAR x := y; END_PROGRAM");
    assert!(matches!(
        Runtime::instantiate(&unit, "P", 100),
        Err(InstantiateError::UnitHasErrors(1))
    ));
}

#[test]
fn override_drives_alarm_in_same_scan() {
    let mut r = rt(ALARM, "Alarm");
    let res = r.scan(&set("Level", Value::Real(3.7))).unwrap();
    assert_eq!(res.get("HighLevelAlarm"), Some(&Value::Bool(true)));
    assert_eq!(res.changed, ["HighLevelAlarm"]);
    let res = r.scan(&set("Level", Value::Real(3.5))).unwrap();
    assert_eq!(res.get("HighLevelAlarm"), Some(&Value::Bool(false)));
    assert_eq!(res.scan, 1);
    assert_eq!(res.time_ms, 100);
}

#[test]
fn override_errors() {
    let mut r = rt(ALARM, "Alarm");
    assert!(matches!(r.scan(&set("Level", Value::Bool(true))), Err(ExecError::Override { .. })));
    assert!(matches!(r.scan(&set("Missing", Value::Real(1.0))), Err(ExecError::Override { .. })));
    assert!(matches!(r.scan(&set("HighLimit", Value::Real(1.0))), Err(ExecError::Override { .. })));
    // integer widens to REAL
    assert!(r.scan(&set("Level", Value::Int(5))).is_ok());
    assert_eq!(r.scan_count(), 1);
}

#[test]
fn division_by_zero_traps_and_freezes() {
    let src = "PROGRAM P\nVAR x : INT; y : INT; END_VAR\ny := y + 1;\nx := 1 / 0;\nEND_PROGRAM\n";
    let mut r = rt(src, "P");
    let err = r.scan(&[]).unwrap_err();
    let ExecError::Trap(trap) = err else { panic!("{err:?}") };
    assert_eq!(trap.kind, TrapKind::DivisionByZero);
    assert_eq!(trap.message, "division by zero");
    let stmt_start = src.find("x := 1 / 0;").unwrap();
    assert_eq!(trap.span.start.offset, stmt_start);
    assert_eq!(trap.span.end.offset, stmt_start + "x := 1 / 0;".len());
    assert_eq!(r.scan_count(), 0);
    // state written before the fault stays inspectable
    assert_eq!(r.get("y"), Some(Value::Int(1)));
    assert!(matches!(r.scan(&[]), Err(ExecError::Frozen(_))));
    assert!(r.trap().is_some());
}

#[test]
fn real_division_by_zero_traps() {
    let mut r = rt("PROGRAM P VAR x : REAL; z : REAL; END_VAR x := 1.0 / z; END_PROGRAM", "P");
    assert!(matches!(r.scan(&[]), Err(ExecError::Trap(t)) if t.kind == TrapKind::DivisionByZero));
}

#[test]
fn integer_overflow_is_checked() {
    let mut r = rt("PROGRAM P VAR x : INT := 32767; END_VAR x := x + 1; END_PROGRAM", "P");
    assert!(matches!(r.scan(&[]), Err(ExecError::Trap(t)) if t.kind == TrapKind::Overflow));
    let mut r = rt("PROGRAM P VAR x : DINT := 32767; END_VAR x := x + 1; END_PROGRAM", "P");
    r.scan(&[]).unwrap();
    assert_eq!(r.get("x"), Some(Value::Dint(32768)));
}

#[test]
fn initializer_out_of_range() {
    let (unit, _) = parse_source("PROGRAM P VAR x : INT := 40000; END_VAR x := 1; END_PROGRAM");
    assert!(matches!(
        Runtime::instantiate(&unit, "P", 100),
        Err(InstantiateError::Initializer { .. })
    ));
}

#[test]
fn watchdog_stops_endless_loops() {
    let mut r = rt("PROGRAM P VAR n : DINT; END_VAR WHILE TRUE DO n := n + 1; END_WHILE; END_PROGRAM", "P");
    assert!(matches!(r.scan(&[]), Err(ExecError::Trap(t)) if t.kind == TrapKind::Watchdog));
}

#[test]
fn ton_five_minutes_at_100ms() {
    let src = "PROGRAM P VAR_INPUT start : BOOL; END_VAR VAR_OUTPUT done : BOOL; END_VAR \
               VAR t : TON; END_VAR t(IN := start, PT := T#5m); done := t.Q; END_PROGRAM";
    let mut r = rt(src, "P");
    let scenario = Scenario::new().step(0..4000, vec![("start", OverrideValue::Set(Value::Bool(true)))]);
    let trace = run(&mut r, &scenario, &["done".into(), "t.ET".into()], 4000).unwrap();
    let done = trace.column("done").unwrap();
    let first = done.iter().position(|v| **v == Value::Bool(true)).unwrap();
    assert_eq!(first, 3000);
    assert_eq!(*trace.column("t.ET").unwrap()[first], Value::Time(300_000));
}

#[test]
fn rtrig_pulses_once() {
    let src = "PROGRAM P VAR_INPUT clk : BOOL; END_VAR VAR_OUTPUT q : BOOL; END_VAR \
               VAR e : R_TRIG; END_VAR e(CLK := clk, Q => q); END_PROGRAM";
    let mut r = rt(src, "P");
    let scenario = Scenario::new().step(0..3, vec![("clk", OverrideValue::Set(Value::Bool(true)))]);
    let trace = run(&mut r, &scenario, &["q".into()], 4).unwrap();
    let q: Vec<_> = trace.column("q").unwrap().into_iter().cloned().collect();
    assert_eq!(q, [Value::Bool(true), Value::Bool(false), Value::Bool(false), Value::Bool(false)]);
}

#[test]
fn zero_scans_leave_runtime_unchanged() {
    let mut r = rt(ALARM, "Alarm");
    let trace = run(&mut r, &Scenario::new(), &["Level".into()], 0).unwrap();
    assert!(trace.is_empty());
    assert_eq!(r.scan_count(), 0);
    assert_eq!(r.get("Level"), Some(Value::Real(1.0)));
}

#[test]
fn run_rejects_bad_scenarios_and_watches() {
    let mut r = rt(ALARM, "Alarm");
    let bad = Scenario::new().step(5..10, vec![]).step(8..12, vec![]);
    assert!(matches!(run(&mut r, &bad, &[], 1), Err(RunError::Scenario(_))));
    assert!(matches!(run(&mut r, &Scenario::new(), &["nope".into()], 1), Err(RunError::UnknownWatch(_))));
}

#[test]
fn run_returns_partial_trace_on_trap() {
    let src = "PROGRAM P VAR n : INT; d : INT; END_VAR n := n + 1; d := 10 / (3 - n); END_PROGRAM";
    let mut r = rt(src, "P");
    let err = run(&mut r, &Scenario::new(), &["n".into()], 10).unwrap_err();
    let RunError::Aborted { partial, .. } = err else { panic!() };
    assert_eq!(partial.len(), 2);
}

#[test]
fn trace_formats() {
    let mut r = rt(ALARM, "Alarm");
    let scenario = Scenario::new().step(1..2, vec![("Level", OverrideValue::Set(Value::Real(4.0)))]);
    let trace = run(&mut r, &scenario, &["Level".into(), "HighLevelAlarm".into()], 2).unwrap();
    assert_eq!(
        trace.to_lines(),
        "scan=0 time_ms=0 Level=1.0 HighLevelAlarm=FALSE\nscan=1 time_ms=100 Level=4.0 HighLevelAlarm=TRUE\n"
    );
    assert_eq!(
        trace.to_csv(),
        "scan,time_ms,Level,HighLevelAlarm\n0,0,1.0,0\n1,100,4.0,1\n"
    );
}

#[test]
fn ramp_override() {
    let s = Scenario::new().step(10..15, vec![("x", OverrideValue::Ramp { from: 0.0, to: 1.0 })]);
    let at = |k| s.overrides_at(k)[0].1.clone();
    assert_eq!(at(10), Value::Real(0.0));
    assert_eq!(at(12), Value::Real(0.5));
    assert_eq!(at(14), Value::Real(1.0));
    assert!(s.overrides_at(15).is_empty());
}

#[test]
fn control_flow() {
    let src = "
PROGRAM P
VAR_OUTPUT
    sum : DINT;
    hits : INT;
    k : INT;
    label : INT;
END_VAR
VAR
    i : INT;
END_VAR
sum := 0;
FOR i := 1 TO 10 DO
    IF i = 7 THEN
        EXIT;
    END_IF;
    sum := sum + i;
END_FOR;
FOR i := 10 TO 1 BY -3 DO
    hits := hits + 1;
END_FOR;
k := 0;
REPEAT
    k := k + 2;
UNTIL k >= 5
END_REPEAT;
CASE k OF
    1..5: label := 1;
    6, 8: label := 2;
    -1: label := 3;
ELSE
    label := 4;
END_CASE;
END_PROGRAM
";
    let mut r = rt(src, "P");
    r.scan(&[]).unwrap();
    assert_eq!(r.get("sum"), Some(Value::Dint(21)));
    assert_eq!(r.get("hits"), Some(Value::Int(4)));
    assert_eq!(r.get("k"), Some(Value::Int(6)));
    assert_eq!(r.get("label"), Some(Value::Int(2)));
}

#[test]
fn user_block_parameters() {
    let src = "
FUNCTION_BLOCK Acc
VAR_INPUT
    add : INT;
END_VAR
VAR_IN_OUT
    total : DINT;
END_VAR
VAR_OUTPUT
    calls : INT;
END_VAR
total := total + add;
calls := calls + 1;
END_FUNCTION_BLOCK

PROGRAM Main
VAR
    a : Acc;
    t : DINT := 100;
    c : INT;
END_VAR
a(add := 5, total := t, calls => c);
a(add := 1, total := t);
END_PROGRAM
";
    let mut r = rt(src, "Main");
    r.scan(&[]).unwrap();
    assert_eq!(r.get("t"), Some(Value::Dint(106)));
    assert_eq!(r.get("c"), Some(Value::Int(1)));
    assert_eq!(r.get("a.calls"), Some(Value::Int(2)));
    assert_eq!(r.get("a.add"), Some(Value::Int(1)));
}

#[test]
fn builtins_and_conversions() {
    let src = "
PROGRAM P
VAR_OUTPUT
    a : REAL; b : INT; c : DINT; d : BOOL; e : REAL; f : TIME; g : INT;
END_VAR
a := LIMIT(0.0, 7.5, 5.0);
b := REAL_TO_INT(2.5);
c := MAX(3, -4, 10);
d := INT_TO_BOOL(b);
e := TIME_TO_REAL(T#1m30s);
f := DINT_TO_TIME(250);
g := ABS(-7) MOD 4;
END_PROGRAM
";
    let mut r = rt(src, "P");
    r.scan(&[]).unwrap();
    assert_eq!(r.get("a"), Some(Value::Real(5.0)));
    assert_eq!(r.get("b"), Some(Value::Int(3)));
    assert_eq!(r.get("c"), Some(Value::Dint(10)));
    assert_eq!(r.get("d"), Some(Value::Bool(true)));
    assert_eq!(r.get("e"), Some(Value::Real(90_000.0)));
    assert_eq!(r.get("f"), Some(Value::Time(250)));
    assert_eq!(r.get("g"), Some(Value::Int(3)));
}

#[test]
fn pid_block_uses_cycle_time() {
    let src = "PROGRAM P VAR_OUTPUT u : REAL; END_VAR VAR c : PID; END_VAR \
               c(SP := 1.0, PV := 0.0, KP := 0.0, KI := 1.0); u := c.OUT; END_PROGRAM";
    let mut r = rt(src, "P");
    for _ in 0..10 {
        r.scan(&[]).unwrap();
    }
    let Some(Value::Real(u)) = r.get("u") else { panic!() };
    assert!((u - 1.0).abs() < 1e-9);
    assert_eq!(r.get("c.KI"), Some(Value::Real(1.0)));
}

#[test]
fn pid_invalid_limits_trap() {
    let src = "PROGRAM P VAR c : PID; END_VAR c(SP := 1.0, OUT_MIN := 5.0, OUT_MAX := 5.0); END_PROGRAM";
    let mut r = rt(src, "P");
    assert!(matches!(r.scan(&[]), Err(ExecError::Trap(t)) if t.kind == TrapKind::InvalidArgument));
}

#[test]
fn outputs_default_to_all_non_inputs() {
    let r = rt("PROGRAM P VAR_INPUT i : BOOL; END_VAR VAR a : INT; b : TON; END_VAR a := 1; b(IN := i); END_PROGRAM", "P");
    assert_eq!(r.output_names(), ["a"]);
    assert_eq!(
        r.variables(),
        [
            ("i".to_string(), ElementaryType::Bool, crate::syntax::ast::VarKind::Input),
            ("a".to_string(), ElementaryType::Int, crate::syntax::ast::VarKind::Local)
        ]
    );
}

#[test]
fn identical_runs_are_identical() {
    let src = "PROGRAM P VAR_INPUT x : REAL; END_VAR VAR_OUTPUT y : REAL; END_VAR VAR c : PID; END_VAR \
               c(SP := 50.0, PV := x, KP := 0.8, KI := 0.3, KD := 0.05); y := c.OUT; END_PROGRAM";
    let scenario = Scenario::new().step(0..200, vec![("x", OverrideValue::Ramp { from: 0.0, to: 80.0 })]);
    let a = run(&mut rt(src, "P"), &scenario, &["y".into()], 300).unwrap();
    let b = run(&mut rt(src, "P"), &scenario, &["y".into()], 300).unwrap();
    assert_eq!(a.to_lines(), b.to_lines());
}
