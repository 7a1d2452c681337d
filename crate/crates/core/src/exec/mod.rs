//! Cyclic scan interpreter for checked units.
//!
//! Time is virtual: scan `n` runs at `n * cycle_ms` milliseconds.

mod lower;
mod runtime;
pub mod stdlib;
mod trace;
mod value;

pub use runtime::{
    ExecError, InstantiateError, Runtime, ScanResult, Trap, TrapKind, DEFAULT_CYCLE_MS, LOOP_LIMIT,
};
pub use stdlib::{ftrig_step, pid_step, rtrig_step, tof_step, ton_step, PidState, TimerState, TrigState};
pub use trace::{run, OverrideValue, RunError, Scenario, SimulationTrace, Step, TraceRecord};
pub use value::{Value, DINT_RANGE, INT_RANGE};

#[cfg(test)]
mod tests;
