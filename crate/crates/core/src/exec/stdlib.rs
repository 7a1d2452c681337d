//! Standard function block algorithms as pure step functions.

/// Discrete positional PID with conditional integration.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Integral of the error, in error-seconds.
    pub integral: f64,
    pub prev_error: f64,
    pub low: f64,
    pub high: f64,
    pub first: bool,
}

impl PidState {
    pub fn new(kp: f64, ki: f64, kd: f64, low: f64, high: f64) -> Self {
        PidState {
            kp,
            ki,
            kd,
            integral: 0.0,
            prev_error: 0.0,
            low,
            high,
            first: true,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
        self.first = true;
    }
}

/// One controller update. The integral only absorbs `e * dt` when the
/// resulting output would stay inside `[low, high]`; the derivative term is
/// zero on the first step.
pub fn pid_step(state: &PidState, setpoint: f64, pv: f64, dt_ms: i64) -> (f64, PidState) {
    let dt = dt_ms as f64 / 1000.0;
    let e = setpoint - pv;
    let d = if state.first {
        0.0
    } else {
        state.kd * (e - state.prev_error) / dt
    };
    let p = state.kp * e;
    let integral = state.integral + e * dt;
    let unclamped = p + state.ki * integral + d;

    let mut next = state.clone();
    next.prev_error = e;
    next.first = false;
    let out = if unclamped >= state.low && unclamped <= state.high {
        next.integral = integral;
        unclamped
    } else {
        (p + state.ki * state.integral + d).clamp(state.low, state.high)
    };
    (out, next)
}

/// Shared state of TON and TOF.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimerState {
    pub pt: i64,
    pub et: i64,
    pub q: bool,
    /// Time at which the timed phase began.
    pub start: Option<i64>,
    pub prev_in: bool,
}

/// On-delay: Q rises once IN has been held for PT; IN falling resets.
pub fn ton_step(state: &TimerState, input: bool, now_ms: i64) -> TimerState {
    let pt = state.pt.max(0);
    let mut s = state.clone();
    s.pt = pt;
    s.prev_in = input;
    if !input {
        s.start = None;
        s.et = 0;
        s.q = false;
        return s;
    }
    let start = *s.start.get_or_insert(now_ms);
    s.et = (now_ms - start).clamp(0, pt);
    s.q = s.et >= pt;
    s
}

/// Off-delay: Q follows IN up and stays TRUE for PT after IN falls.
pub fn tof_step(state: &TimerState, input: bool, now_ms: i64) -> TimerState {
    let pt = state.pt.max(0);
    let mut s = state.clone();
    s.pt = pt;
    if input {
        s.start = None;
        s.et = 0;
        s.q = true;
    } else {
        if state.prev_in {
            s.start = Some(now_ms);
        }
        match s.start {
            Some(start) => {
                s.et = (now_ms - start).clamp(0, pt);
                s.q = s.et < pt;
            }
            None => {
                s.et = 0;
                s.q = false;
            }
        }
    }
    s.prev_in = input;
    s
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrigState {
    /// Previous CLK.
    pub m: bool,
    pub q: bool,
}

pub fn rtrig_step(state: TrigState, clk: bool) -> TrigState {
    TrigState {
        m: clk,
        q: clk && !state.m,
    }
}

pub fn ftrig_step(state: TrigState, clk: bool) -> TrigState {
    TrigState {
        m: clk,
        q: !clk && state.m,
    }
}
