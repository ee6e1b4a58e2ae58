//! Hybrid integrator-gain system (HIGS), classic and fractional-order.
//!
//! The filter switches between an integrator mode, where the output follows
//! `omega_h` times the (fractional) integral of the input, and a gain mode,
//! where the output is pinned to `k_h * e`. Every switch lands on the
//! `k_h * e` curve, so the output stays continuous and inside the sector
//! `[0, k_h e]`.
//!
//! Switching is evaluated once per sample. In integrator mode the state is
//! advanced as `u(t) = u(t_entry) + omega_h * int_{t_entry}^t D^(1-alpha) e`,
//! i.e. the fractional integral of the input re-anchored at the entry value;
//! `D^(1-alpha) e` is the same quantity the gain-mode condition uses.

use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::error::{HigsError, Result};
use crate::fractional::{FracOrder, GrunwaldLetnikov, HistoryBuffer, DEFAULT_MEMORY};
use crate::scalar::Real;
use crate::signal::TimeSeries;

/// Relative dead-band applied to the strict inequalities of the gain-mode
/// condition. Ties resolve to gain mode.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HigsParams<T> {
    /// Integral frequency, rad/s.
    pub omega_h: T,
    /// Gain-mode gain.
    pub k_h: T,
    /// Order of the integrator; 1 is the classic HIGS.
    pub alpha: FracOrder<T>,
}

impl<T: Real> HigsParams<T> {
    pub fn new(omega_h: T, k_h: T, alpha: T) -> Result<Self> {
        if !(omega_h >= T::zero() && omega_h.is_finite()) {
            return Err(HigsError::invalid("omega_h", format!("must be finite and >= 0, got {omega_h}")));
        }
        if !(k_h >= T::zero() && k_h.is_finite()) {
            return Err(HigsError::invalid("k_h", format!("must be finite and >= 0, got {k_h}")));
        }
        Ok(Self {
            omega_h,
            k_h,
            alpha: FracOrder::new(alpha)?,
        })
    }

    pub fn classic(omega_h: T, k_h: T) -> Result<Self> {
        Self::new(omega_h, k_h, T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HigsMode {
    Integrator,
    Gain,
}

impl HigsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HigsMode::Integrator => "integrator",
            HigsMode::Gain => "gain",
        }
    }
}

/// Condition responsible for a mode switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchTrigger {
    /// Integrator output reached the `k_h e` boundary (or left the sector)
    /// while the gain-mode condition held.
    SectorBoundary,
    /// `omega_h D^(1-alpha)(e) e > k_h e_dot e` stopped holding.
    GainInequality,
    /// The monotonicity guard `omega_h D^(1-alpha)(e) e < 0` stopped holding.
    Monotonicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent<T> {
    pub index: usize,
    pub time: T,
    pub from: HigsMode,
    pub to: HigsMode,
    pub trigger: SwitchTrigger,
}

/// Input history seen by `D^(1-alpha)` in the switching condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FracMemory {
    /// Every sample since start (bounded by the buffer capacity).
    #[default]
    Full,
    /// Only samples since the latest mode switch.
    SinceSwitch,
}

/// Value and time at the most recent entry into integrator mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralAnchor<T> {
    pub value: T,
    pub time: T,
}

/// Hybrid automaton state of one filter instance.
#[derive(Debug, Clone)]
pub struct HigsState<T> {
    /// Filter state; the output equals it at every sample.
    pub x_h: T,
    pub mode: HigsMode,
    pub input_history: HistoryBuffer<T>,
    pub anchor: IntegralAnchor<T>,
    derivative: GrunwaldLetnikov<T>,
    memory: FracMemory,
    /// `omega_h D^(1-alpha) e` at the previous sample.
    prev_rate: T,
    /// Which gain-mode disjunct held at the previous sample.
    gain_hold: SwitchTrigger,
    since_switch: usize,
    index: usize,
    time: T,
    dt: T,
}

impl<T: Real> HigsState<T> {
    /// Filter at rest in gain mode with `x_h = 0`.
    pub fn new(params: &HigsParams<T>, dt: T) -> Result<Self> {
        Self::with_memory(params, dt, DEFAULT_MEMORY, FracMemory::Full)
    }

    pub fn with_memory(params: &HigsParams<T>, dt: T, capacity: usize, memory: FracMemory) -> Result<Self> {
        let input_history = HistoryBuffer::new(dt, capacity)?;
        let order = params.alpha.complement().value();
        let weights = if order == T::zero() {
            1
        } else if order == T::one() {
            2
        } else {
            capacity
        };
        Ok(Self {
            x_h: T::zero(),
            mode: HigsMode::Gain,
            input_history,
            anchor: IntegralAnchor {
                value: T::zero(),
                time: T::zero(),
            },
            derivative: GrunwaldLetnikov::new(order, dt, weights),
            memory,
            prev_rate: T::zero(),
            gain_hold: SwitchTrigger::GainInequality,
            since_switch: 0,
            index: 0,
            time: T::zero(),
            dt,
        })
    }

    pub fn output(&self) -> T {
        self.x_h
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Latest integrator rate `omega_h D^(1-alpha) e`.
    pub fn rate(&self) -> T {
        self.prev_rate
    }

    fn frac_derivative(&self) -> Result<T> {
        if self.derivative.order() == T::zero() {
            return self.input_history.newest().ok_or(HigsError::InsufficientHistory);
        }
        match self.memory {
            FracMemory::Full => self.derivative.apply(&self.input_history),
            FracMemory::SinceSwitch => self
                .derivative
                .apply_recent(&self.input_history, self.since_switch + 1),
        }
    }
}

/// Which gain-mode disjunct holds, if any. `lhs` is the integrator-flow
/// term `rate * e`, `rhs` the gain-flow term `k_h * e_dot * e`.
fn gain_condition<T: Real>(lhs: T, rhs: T) -> Option<SwitchTrigger> {
    let eps = T::lit(TIE_EPSILON) * (lhs.abs() + rhs.abs());
    if lhs - rhs >= -eps {
        Some(SwitchTrigger::GainInequality)
    } else if lhs < -eps {
        Some(SwitchTrigger::Monotonicity)
    } else {
        None
    }
}

/// `u` inside the closed sector between 0 and `k_h e`.
fn in_sector<T: Real>(u: T, k_h: T, e: T) -> bool {
    u * (k_h * e - u) >= T::zero()
}

/// Shared switching logic for both filter variants. Returns the new output
/// and the switch event, if any.
#[allow(clippy::too_many_arguments)]
fn hybrid_update<T: Real>(
    mode: &mut HigsMode,
    x_h: &mut T,
    prev_rate: T,
    rate: T,
    gain_hold: &mut SwitchTrigger,
    k_h: T,
    prev_e: T,
    e: T,
    e_dot: T,
    dt: T,
) -> Option<(HigsMode, HigsMode, SwitchTrigger)> {
    if k_h == T::zero() {
        // The sector collapses to u = 0.
        *x_h = T::zero();
        let from = *mode;
        *mode = HigsMode::Gain;
        return (from != HigsMode::Gain).then_some((from, HigsMode::Gain, SwitchTrigger::SectorBoundary));
    }
    let gain = gain_condition(rate * e, k_h * e_dot * e);
    match *mode {
        HigsMode::Gain => {
            *x_h = k_h * e;
            match gain {
                Some(hold) => {
                    *gain_hold = hold;
                    None
                }
                None => {
                    *mode = HigsMode::Integrator;
                    if prev_e * e <= T::zero() && e != T::zero() {
                        // The switch happened at the zero crossing inside the
                        // interval, where u = k_h e = 0: integrate from there.
                        let lambda = prev_e / (prev_e - e);
                        let rate_c = prev_rate + (rate - prev_rate) * lambda;
                        let u = (T::one() - lambda) * dt * (rate_c + rate) * T::lit(0.5);
                        if in_sector(u, k_h, e) {
                            *x_h = u;
                        }
                    }
                    Some((HigsMode::Gain, HigsMode::Integrator, *gain_hold))
                }
            }
        }
        HigsMode::Integrator => {
            let candidate = *x_h + dt * (prev_rate + rate) * T::lit(0.5);
            if in_sector(candidate, k_h, e) {
                *x_h = candidate;
                return None;
            }
            let edge = k_h * e;
            if candidate * edge <= T::zero() && edge != T::zero() {
                // left through u = 0: slide along that edge
                *x_h = T::zero();
                return None;
            }
            *x_h = edge;
            match gain {
                Some(hold) => {
                    *gain_hold = hold;
                    *mode = HigsMode::Gain;
                    Some((HigsMode::Integrator, HigsMode::Gain, SwitchTrigger::SectorBoundary))
                }
                // flow points into the sector: keep integrating from the boundary
                None => None,
            }
        }
    }
}

fn check_dt<T: Real>(dt: T, expected: T) -> Result<()> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
    }
    if (dt - expected).abs() > T::lit(1e-9) * expected {
        return Err(HigsError::invalid(
            "dt",
            format!("step {dt} differs from the filter sample period {expected}"),
        ));
    }
    Ok(())
}

/// Advances the fractional-order HIGS by one sample and returns its output.
pub fn higs_step<T: Real>(
    state: &mut HigsState<T>,
    params: &HigsParams<T>,
    e: T,
    e_dot: T,
    dt: T,
) -> Result<(T, Option<SwitchEvent<T>>)> {
    check_dt(dt, state.dt)?;
    if !(e.is_finite() && e_dot.is_finite()) {
        return Err(HigsError::NonFinite { index: state.index });
    }
    let prev_e = state.input_history.newest().unwrap_or(T::zero());
    state.input_history.push(e);
    let rate = params.omega_h * state.frac_derivative()?;
    let from_mode = state.mode;
    let switched = hybrid_update(
        &mut state.mode,
        &mut state.x_h,
        state.prev_rate,
        rate,
        &mut state.gain_hold,
        params.k_h,
        prev_e,
        e,
        e_dot,
        dt,
    );
    let time = state.time;
    let event = switched.map(|(from, to, trigger)| SwitchEvent {
        index: state.index,
        time,
        from,
        to,
        trigger,
    });
    if state.mode == HigsMode::Integrator && from_mode == HigsMode::Gain {
        state.anchor = IntegralAnchor { value: state.x_h, time };
    }
    if event.is_some() {
        state.since_switch = 0;
    } else {
        state.since_switch += 1;
    }
    debug_assert!(params.k_h == T::zero() || in_sector(state.x_h, params.k_h, e) || !e.is_finite());
    state.prev_rate = rate;
    state.index += 1;
    state.time = state.time + dt;
    Ok((state.x_h, event))
}

/// Fractional-order HIGS as a sampled block; the input derivative is the
/// backward difference of successive inputs.
#[derive(Debug, Clone)]
pub struct HigsFilter<T> {
    params: HigsParams<T>,
    state: HigsState<T>,
    prev_input: T,
    events: Vec<SwitchEvent<T>>,
    record_events: bool,
}

impl<T: Real> HigsFilter<T> {
    pub fn new(params: HigsParams<T>, dt: T) -> Result<Self> {
        Self::with_memory(params, dt, DEFAULT_MEMORY, FracMemory::Full)
    }

    pub fn with_memory(params: HigsParams<T>, dt: T, capacity: usize, memory: FracMemory) -> Result<Self> {
        Ok(Self {
            state: HigsState::with_memory(&params, dt, capacity, memory)?,
            params,
            prev_input: T::zero(),
            events: Vec::new(),
            record_events: false,
        })
    }

    /// Keep a log of every mode switch.
    pub fn recording_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn params(&self) -> &HigsParams<T> {
        &self.params
    }

    pub fn state(&self) -> &HigsState<T> {
        &self.state
    }

    pub fn mode(&self) -> HigsMode {
        self.state.mode
    }

    pub fn events(&self) -> &[SwitchEvent<T>] {
        &self.events
    }
}

impl<T: Real> Block<T> for HigsFilter<T> {
    fn step(&mut self, input: T) -> Result<T> {
        let dt = self.state.dt;
        let e_dot = (input - self.prev_input) / dt;
        self.prev_input = input;
        let (u, event) = higs_step(&mut self.state, &self.params, input, e_dot, dt)?;
        if let (true, Some(ev)) = (self.record_events, event) {
            self.events.push(ev);
        }
        Ok(u)
    }

    fn dt(&self) -> T {
        self.state.dt
    }
}

/// Classic HIGS: integer-order integrator and the plain gain-mode condition
/// `omega_h e^2 > k_h e e_dot`.
#[derive(Debug, Clone)]
pub struct ClassicHigs<T> {
    omega_h: T,
    k_h: T,
    dt: T,
    x_h: T,
    mode: HigsMode,
    prev_input: T,
    prev_rate: T,
    gain_hold: SwitchTrigger,
}

impl<T: Real> ClassicHigs<T> {
    pub fn new(omega_h: T, k_h: T, dt: T) -> Result<Self> {
        HigsParams::classic(omega_h, k_h)?;
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        Ok(Self {
            omega_h,
            k_h,
            dt,
            x_h: T::zero(),
            mode: HigsMode::Gain,
            prev_input: T::zero(),
            prev_rate: T::zero(),
            gain_hold: SwitchTrigger::GainInequality,
        })
    }

    pub fn mode(&self) -> HigsMode {
        self.mode
    }
}

impl<T: Real> Block<T> for ClassicHigs<T> {
    fn step(&mut self, e: T) -> Result<T> {
        let prev_e = self.prev_input;
        let e_dot = (e - prev_e) / self.dt;
        self.prev_input = e;
        let rate = self.omega_h * e;
        hybrid_update(
            &mut self.mode,
            &mut self.x_h,
            self.prev_rate,
            rate,
            &mut self.gain_hold,
            self.k_h,
            prev_e,
            e,
            e_dot,
            self.dt,
        );
        self.prev_rate = rate;
        Ok(self.x_h)
    }

    fn dt(&self) -> T {
        self.dt
    }
}

/// Trajectory of a HIGS driven by a sampled input.
#[derive(Debug, Clone)]
pub struct HigsResponse<T> {
    pub output: TimeSeries<T>,
    pub modes: Vec<HigsMode>,
    pub events: Vec<SwitchEvent<T>>,
    /// Largest `|omega_h D^(1-alpha) e|` seen, i.e. the integrator slope bound.
    pub max_rate: T,
}

/// Simulates the fractional-order HIGS over `input`, starting at rest.
pub fn higs_response<T: Real>(params: HigsParams<T>, input: &TimeSeries<T>) -> Result<HigsResponse<T>> {
    higs_response_with(HigsFilter::new(params, input.dt)?, input)
}

/// As [`higs_response`] with a preconfigured filter (memory length, memory mode).
pub fn higs_response_with<T: Real>(filter: HigsFilter<T>, input: &TimeSeries<T>) -> Result<HigsResponse<T>> {
    let mut filter = filter.recording_events();
    let mut values = Vec::with_capacity(input.len());
    let mut modes = Vec::with_capacity(input.len());
    let mut max_rate = T::zero();
    for (k, &e) in input.values.iter().enumerate() {
        let u = filter.step(e).map_err(|err| err.at_sample(k))?;
        values.push(u);
        modes.push(filter.mode());
        max_rate = max_rate.max(filter.state.rate().abs());
    }
    Ok(HigsResponse {
        output: TimeSeries {
            t0: input.t0,
            dt: input.dt,
            values,
        },
        modes,
        events: filter.events,
        max_rate,
    })
}

/// Classic HIGS response over `input`, starting at rest.
pub fn classic_higs_response<T: Real>(omega_h: T, k_h: T, input: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let mut filter = ClassicHigs::new(omega_h, k_h, input.dt)?;
    let values = input
        .values
        .iter()
        .enumerate()
        .map(|(k, &e)| filter.step(e).map_err(|err| err.at_sample(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        t0: input.t0,
        dt: input.dt,
        values,
    })
}
