//! Time stepping of open- and closed-loop runs and the empirical
//! frequency-domain analyzer.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::architectures::{plant_step, Plant, PlantState};
use crate::block::Block;
use crate::describing::{DfSource, FrequencyResponsePoint};
use crate::error::{HigsError, Result};
use crate::lti::ContinuousTf;
use crate::scalar::Real;
use crate::signal::TimeSeries;

/// Largest period-to-period RMS change accepted as steady state.
pub const STEADY_STATE_DRIFT: f64 = 0.01;
/// Fewest whole periods the spectral estimates average over.
pub const MIN_ANALYSIS_PERIODS: usize = 4;
/// `|y|` beyond this multiple of `max |r|` aborts a closed-loop run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub dt: T,
    pub duration: T,
    /// Input periods discarded before analysis.
    pub settle_periods: usize,
    /// Input periods the spectral estimates are taken over.
    pub analysis_periods: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dt: T, duration: T, settle_periods: usize, analysis_periods: usize) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        if !(duration >= dt && duration.is_finite()) {
            return Err(HigsError::invalid("duration", "must cover at least one sample"));
        }
        Ok(Self {
            dt,
            duration,
            settle_periods,
            analysis_periods,
        })
    }

    /// A sine run at `omega` with exactly `samples_per_period` samples per
    /// period, lasting `settle + analysis` periods.
    pub fn for_frequency(omega: T, samples_per_period: usize, settle: usize, analysis: usize) -> Result<Self> {
        if !(omega > T::zero() && omega.is_finite()) {
            return Err(HigsError::invalid("omega", "must be positive"));
        }
        if samples_per_period < 4 {
            return Err(HigsError::invalid("samples_per_period", "need at least 4"));
        }
        let period = T::TAU() / omega;
        Self::new(
            period / T::from_count(samples_per_period),
            period * T::from_count(settle + analysis),
            settle,
            analysis,
        )
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round().to_usize().unwrap_or(0)
    }
}

fn same_dt<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * a.abs().max(b.abs())
}

/// Runs `filter` over `input`. Errors carry the failing sample index.
pub fn simulate_open_loop<T: Real, B: Block<T> + ?Sized>(
    filter: &mut B,
    input: &TimeSeries<T>,
    config: &SimConfig<T>,
) -> Result<TimeSeries<T>> {
    if !same_dt(input.dt, config.dt) || !same_dt(filter.dt(), config.dt) {
        return Err(HigsError::invalid("dt", "input, filter and config sample periods differ"));
    }
    let values = input
        .values
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let u = filter.step(e).map_err(|err| err.at_sample(k))?;
            if u.is_finite() {
                Ok(u)
            } else {
                Err(HigsError::NonFinite { index: k })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        t0: input.t0,
        dt: input.dt,
        values,
    })
}

/// Settled output of a sine run, whole periods only.
struct PeriodicRun<T> {
    steady: Vec<T>,
    per_period: usize,
}

fn periodic_run<T: Real, B: Block<T> + ?Sized>(
    filter: &mut B,
    omega: T,
    e_hat: T,
    config: &SimConfig<T>,
) -> Result<PeriodicRun<T>> {
    if !(omega > T::zero() && omega.is_finite()) {
        return Err(HigsError::invalid("omega", "must be positive"));
    }
    if !(e_hat > T::zero() && e_hat.is_finite()) {
        return Err(HigsError::invalid("e_hat", "must be positive"));
    }
    if config.analysis_periods < MIN_ANALYSIS_PERIODS {
        return Err(HigsError::invalid(
            "analysis_periods",
            format!("need at least {MIN_ANALYSIS_PERIODS} analysis periods"),
        ));
    }
    if !same_dt(filter.dt(), config.dt) {
        return Err(HigsError::invalid("dt", "filter and config sample periods differ"));
    }
    let period = T::TAU() / omega;
    let ratio = period / config.dt;
    let per_period = ratio.round().to_usize().unwrap_or(0);
    if per_period < 4 || (ratio - T::from_count(per_period)).abs() > T::lit(1e-6) * ratio {
        return Err(HigsError::invalid(
            "dt",
            "the input period must span a whole number (at least 4) of samples",
        ));
    }
    let periods = config.settle_periods + config.analysis_periods;
    if config.duration < period * T::from_count(periods) * (T::one() - T::lit(1e-9)) {
        return Err(HigsError::invalid(
            "duration",
            format!("must cover {periods} input periods (settle + analysis)"),
        ));
    }

    let n = per_period * periods;
    let keep_from = per_period * config.settle_periods;
    let step = T::TAU() / T::from_count(per_period);
    let mut steady = Vec::with_capacity(n - keep_from);
    for k in 0..n {
        let e = e_hat * (step * T::from_count(k % per_period)).sin();
        let u = filter.step(e).map_err(|err| err.at_sample(k))?;
        if !u.is_finite() {
            return Err(HigsError::NonFinite { index: k });
        }
        if k >= keep_from {
            steady.push(u);
        }
    }

    let last = &steady[steady.len() - per_period..];
    let prev = &steady[steady.len() - 2 * per_period..steady.len() - per_period];
    let rms = (last.iter().map(|&y| y * y).sum::<T>() / T::from_count(per_period)).sqrt();
    let diff = (last.iter().zip(prev).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>()
        / T::from_count(per_period))
    .sqrt();
    if rms > T::zero() && diff > T::lit(STEADY_STATE_DRIFT) * rms {
        return Err(HigsError::NoSteadyState {
            drift: (diff / rms).to_f64_lossy(),
        });
    }
    Ok(PeriodicRun { steady, per_period })
}

/// `(b_n + j a_n)` of `y` over whole periods, `2/M` normalization.
fn harmonic_coefficient<T: Real>(y: &[T], per_period: usize, table: &[(T, T)], n: usize) -> Complex<T> {
    let (mut a, mut b) = (T::zero(), T::zero());
    for (k, &v) in y.iter().enumerate() {
        let (s, c) = table[(n * (k % per_period)) % per_period];
        a = a + v * c;
        b = b + v * s;
    }
    let scale = T::lit(2.0) / T::from_count(y.len());
    Complex::new(b * scale, a * scale)
}

fn sin_cos_table<T: Real>(per_period: usize) -> Vec<(T, T)> {
    let step = T::TAU() / T::from_count(per_period);
    (0..per_period).map(|k| (step * T::from_count(k)).sin_cos()).collect()
}

/// Empirical describing function: drives `filter` with `e_hat sin(omega t)`
/// from rest, drops the settle periods and projects the rest onto the
/// fundamental. `filter` must be fresh.
pub fn estimate_df<T: Real, B: Block<T> + ?Sized>(
    filter: &mut B,
    omega: T,
    e_hat: T,
    config: &SimConfig<T>,
) -> Result<FrequencyResponsePoint<T>> {
    let run = periodic_run(filter, omega, e_hat, config)?;
    let table = sin_cos_table(run.per_period);
    Ok(FrequencyResponsePoint {
        omega,
        value: harmonic_coefficient(&run.steady, run.per_period, &table, 1) / e_hat,
        gamma: None,
        source: DfSource::Empirical,
    })
}

/// Harmonics `1..=N` of a settled sine response, each `(b_n + j a_n) / e_hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrum<T> {
    pub base_freq: T,
    pub harmonics: Vec<Complex<T>>,
}

impl<T: Real> HarmonicSpectrum<T> {
    /// Coefficient of harmonic `n` (1-based).
    pub fn get(&self, n: usize) -> Option<Complex<T>> {
        n.checked_sub(1).and_then(|i| self.harmonics.get(i)).copied()
    }

    pub fn magnitude(&self, n: usize) -> Option<T> {
        self.get(n).map(|c| c.norm())
    }

    /// `|c_n| / |c_1|`
    pub fn relative(&self, n: usize) -> Option<T> {
        let fundamental = self.magnitude(1)?;
        self.magnitude(n).map(|m| m / fundamental)
    }

    pub fn len(&self) -> usize {
        self.harmonics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.harmonics.is_empty()
    }
}

/// DFT of the settled output at the first `n_harmonics` multiples of
/// `omega`, rectangular window over whole periods. Even harmonics are kept.
pub fn harmonic_spectrum<T: Real, B: Block<T> + ?Sized>(
    filter: &mut B,
    omega: T,
    e_hat: T,
    config: &SimConfig<T>,
    n_harmonics: usize,
) -> Result<HarmonicSpectrum<T>> {
    if n_harmonics == 0 {
        return Err(HigsError::invalid("n_harmonics", "must be at least 1"));
    }
    let run = periodic_run(filter, omega, e_hat, config)?;
    if 2 * n_harmonics >= run.per_period {
        return Err(HigsError::invalid("n_harmonics", "exceeds the Nyquist limit of the run"));
    }
    let table = sin_cos_table(run.per_period);
    let harmonics = (1..=n_harmonics)
        .map(|n| harmonic_coefficient(&run.steady, run.per_period, &table, n) / e_hat)
        .collect();
    Ok(HarmonicSpectrum {
        base_freq: omega,
        harmonics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopResponse<T> {
    pub position: TimeSeries<T>,
    pub control_effort: TimeSeries<T>,
}

/// Unit negative feedback `e = r - y`, `u = C(e)`, `y = P(u)` from rest.
///
/// The position used at sample `k` results from the forces of samples
/// before `k`: the force computed from it is held over the next interval,
/// so the loop closes with one sample of delay.
pub fn simulate_closed_loop<T: Real, C: Block<T> + ?Sized>(
    controller: &mut C,
    plant: &Plant<T>,
    reference: &TimeSeries<T>,
    config: &SimConfig<T>,
) -> Result<ClosedLoopResponse<T>> {
    if !same_dt(controller.dt(), config.dt) || !same_dt(reference.dt, config.dt) {
        return Err(HigsError::invalid("dt", "controller, reference and config sample periods differ"));
    }
    let dt = config.dt;
    let limit = T::lit(DIVERGENCE_FACTOR) * reference.max_abs();
    let mut state = PlantState::default();
    let mut y = T::zero();
    let mut position = Vec::with_capacity(reference.len());
    let mut effort = Vec::with_capacity(reference.len());
    for (k, &r) in reference.values.iter().enumerate() {
        let u = controller.step(r - y).map_err(|err| err.at_sample(k))?;
        if !u.is_finite() {
            return Err(HigsError::NonFinite { index: k });
        }
        position.push(y);
        effort.push(u);
        y = plant_step(plant, &mut state, u, dt);
        if !y.is_finite() || (limit > T::zero() && y.abs() > limit) {
            return Err(HigsError::Diverged {
                index: k + 1,
                magnitude: y.abs().to_f64_lossy(),
            });
        }
    }
    Ok(ClosedLoopResponse {
        position: TimeSeries {
            t0: reference.t0,
            dt,
            values: position,
        },
        control_effort: TimeSeries {
            t0: reference.t0,
            dt,
            values: effort,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics<T> {
    /// Percent of the final value, never negative.
    pub overshoot: T,
    /// Time after which the response stays within 2% of the final value;
    /// the full duration when `settled` is false.
    pub settling_time: T,
    pub settled: bool,
    /// 10% to 90% rise; `None` if 90% is never reached.
    pub rise_time: Option<T>,
    pub steady_state_error: T,
}

/// Overshoot, 2% settling time, 10-90% rise time and final error of a
/// step response measured from its first sample.
pub fn step_metrics<T: Real>(response: &TimeSeries<T>, final_value: T) -> Result<StepMetrics<T>> {
    if final_value == T::zero() || !final_value.is_finite() {
        return Err(HigsError::invalid("final_value", "must be finite and nonzero"));
    }
    let Some(&last) = response.values.last() else {
        return Err(HigsError::InsufficientHistory);
    };
    let z: Vec<T> = response.values.iter().map(|&y| y / final_value).collect();
    let peak = z.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let overshoot = ((peak - T::one()) * T::lit(100.0)).max(T::zero());

    let band = T::lit(0.02);
    let outside = z.iter().rposition(|&v| (v - T::one()).abs() > band);
    let (settling_time, settled) = match outside {
        None => (T::zero(), true),
        Some(k) if k + 1 == z.len() => (response.duration(), false),
        Some(k) => (response.dt * T::from_count(k + 1), true),
    };

    let first_at = |level: T| z.iter().position(|&v| v >= level);
    let rise_time = match (first_at(T::lit(0.1)), first_at(T::lit(0.9))) {
        (Some(a), Some(b)) => Some(response.dt * T::from_count(b - a)),
        _ => None,
    };

    Ok(StepMetrics {
        overshoot,
        settling_time,
        settled,
        rise_time,
        steady_state_error: (final_value - last).abs(),
    })
}

/// Continuous-time step response of the loop `controller * plant` under
/// unit negative feedback, integrated with classical RK4 at `dt / substeps`
/// and sampled every `dt`. Serves as the reference for a sampled linear loop.
pub fn linear_step_response<T: Real>(
    controller: &ContinuousTf<T>,
    plant: &Plant<T>,
    level: T,
    dt: T,
    n: usize,
    substeps: usize,
) -> Result<TimeSeries<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
    }
    let substeps = substeps.max(1);
    let h = dt / T::from_count(substeps);
    let m = controller.sections.len();
    // states: one per section, then position and velocity
    let deriv = |x: &[T], out: &mut [T]| {
        let mut s = controller.gain * (level - x[m]);
        for (i, sec) in controller.sections.iter().enumerate() {
            out[i] = s - sec.pole * x[i];
            s = sec.num_s * s + (sec.num_0 - sec.pole * sec.num_s) * x[i];
        }
        out[m] = x[m + 1];
        out[m + 1] = s / plant.mass;
    };

    let dim = m + 2;
    let mut x = vec![T::zero(); dim];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); dim], vec![T::zero(); dim], vec![T::zero(); dim], vec![T::zero(); dim]);
    let mut tmp = vec![T::zero(); dim];
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(x[m]);
        for _ in 0..substeps {
            deriv(&x, &mut k1);
            for i in 0..dim {
                tmp[i] = x[i] + half * h * k1[i];
            }
            deriv(&tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = x[i] + half * h * k2[i];
            }
            deriv(&tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = x[i] + h * k3[i];
            }
            deriv(&tmp, &mut k4);
            for i in 0..dim {
                x[i] = x[i] + h * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
            }
        }
    }
    TimeSeries::new(T::zero(), dt, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{Gain, LinearBlock};
    use crate::hybrid::{higs_response, HigsFilter, HigsParams};
    use crate::lti::Section;
    use std::f64::consts::PI;

    #[test]
    fn pass_through_is_identity() {
        let dt = 1e-3;
        let input = TimeSeries::sine(1.0, 3.0, dt, 500).unwrap();
        let cfg = SimConfig::new(dt, 0.5, 0, 0).unwrap();
        let mut g = Gain { gain: 1.0, dt };
        assert_eq!(simulate_open_loop(&mut g, &input, &cfg).unwrap(), input);
    }

    #[test]
    fn mismatched_dt_is_rejected() {
        let input = TimeSeries::sine(1.0, 3.0, 1e-3, 10).unwrap();
        let cfg = SimConfig::new(2e-3, 0.5, 0, 0).unwrap();
        let mut g = Gain { gain: 1.0, dt: 1e-3 };
        assert!(simulate_open_loop(&mut g, &input, &cfg).is_err());
    }

    #[test]
    fn open_loop_matches_higs_response() {
        let dt = 1e-3;
        let input = TimeSeries::from_fn(0.0, dt, 20_000, |t: f64| t.sin() + 0.7 * (3.0 * t).sin()).unwrap();
        let params = HigsParams::new(1.0, 1.0, 0.7).unwrap();
        let cfg = SimConfig::new(dt, 20.0, 0, 0).unwrap();
        let mut f = HigsFilter::new(params, dt).unwrap();
        let out = simulate_open_loop(&mut f, &input, &cfg).unwrap();
        assert_eq!(out, higs_response(params, &input).unwrap().output);
    }

    #[test]
    fn low_pass_at_corner() {
        let w = 2.0;
        let cfg = SimConfig::for_frequency(w, 2000, 10, 4).unwrap();
        let tf = ContinuousTf::unity().then(Section::low_pass(w));
        let mut lp = LinearBlock::new(&tf, cfg.dt).unwrap();
        let p = estimate_df(&mut lp, w, 1.0, &cfg).unwrap();
        assert!((p.magnitude() - 0.5f64.sqrt()).abs() < 0.005 * 0.5f64.sqrt());
        assert!((p.phase_deg() + 45.0).abs() < 0.5);
        assert_eq!(p.source, DfSource::Empirical);
    }

    #[test]
    fn linear_pipeline_has_no_harmonics() {
        let w = 5.0;
        let cfg = SimConfig::for_frequency(w, 1000, 10, 4).unwrap();
        let tf = ContinuousTf::gain(3.0).then(Section::low_pass(1.0));
        let mut lp = LinearBlock::new(&tf, cfg.dt).unwrap();
        let spec = harmonic_spectrum(&mut lp, w, 1.0, &cfg, 7).unwrap();
        for n in 2..=7 {
            assert!(spec.relative(n).unwrap() < 1e-6, "{n}: {:?}", spec.relative(n));
        }
    }

    #[test]
    fn unsettled_output_is_reported() {
        // a slow pole has not decayed after two periods
        let w = 10.0;
        let cfg = SimConfig::for_frequency(w, 200, 0, 4).unwrap();
        let tf = ContinuousTf::unity().then(Section::low_pass(0.01)).then(Section::new(1.0, 0.0, 0.0));
        let mut lp = LinearBlock::new(&tf, cfg.dt).unwrap();
        // a pure integrator of a sine carries a constant offset; add drift with a ramp
        let mut ramp = RampAdder { inner: &mut lp, k: 0 };
        assert!(matches!(
            estimate_df(&mut ramp, w, 1.0, &cfg),
            Err(HigsError::NoSteadyState { .. })
        ));
    }

    struct RampAdder<'a, B> {
        inner: &'a mut B,
        k: usize,
    }

    impl<B: Block<f64>> Block<f64> for RampAdder<'_, B> {
        fn step(&mut self, input: f64) -> Result<f64> {
            self.k += 1;
            Ok(self.inner.step(input)? + self.k as f64)
        }

        fn dt(&self) -> f64 {
            self.inner.dt()
        }
    }

    #[test]
    fn estimate_requires_four_periods() {
        let cfg = SimConfig::for_frequency(1.0, 100, 2, 3).unwrap();
        let mut g = Gain { gain: 1.0, dt: cfg.dt };
        assert!(estimate_df(&mut g, 1.0, 1.0, &cfg).is_err());
    }

    fn second_order(zeta: f64, wn: f64, dt: f64, n: usize) -> TimeSeries<f64> {
        TimeSeries::from_fn(0.0, dt, n, |t| {
            if zeta < 1.0 {
                let wd = wn * (1.0 - zeta * zeta).sqrt();
                let phi = zeta.acos();
                1.0 - (-zeta * wn * t).exp() * (wd * t + phi).sin() / (1.0 - zeta * zeta).sqrt()
            } else {
                1.0 - (1.0 + wn * t) * (-wn * t).exp()
            }
        })
        .unwrap()
    }

    #[test]
    fn metrics_underdamped_second_order() {
        let zeta: f64 = 0.5;
        let m = step_metrics(&second_order(zeta, 1.0, 1e-3, 20_000), 1.0).unwrap();
        let expected = 100.0 * (-PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!((m.overshoot - expected).abs() < 0.005 * expected, "{} vs {expected}", m.overshoot);
        assert!(m.settled);
        assert!(m.rise_time.unwrap() > 0.0);
    }

    #[test]
    fn metrics_critically_damped() {
        let m = step_metrics(&second_order(1.0, 1.0, 1e-3, 20_000), 1.0).unwrap();
        assert_eq!(m.overshoot, 0.0);
    }

    #[test]
    fn metrics_constant_response() {
        let r = TimeSeries::step(2.0, 1e-3, 100).unwrap();
        let m = step_metrics(&r, 2.0).unwrap();
        assert_eq!(m.settling_time, 0.0);
        assert_eq!(m.overshoot, 0.0);
        assert_eq!(m.steady_state_error, 0.0);
        assert!(step_metrics(&r, 0.0).is_err());
    }

    #[test]
    fn metrics_unsettled_flag() {
        let r = TimeSeries::from_fn(0.0, 1e-3, 1000, |t| t).unwrap();
        let m = step_metrics(&r, 2.0).unwrap();
        assert!(!m.settled);
        assert!(m.rise_time.is_none());
    }

    #[test]
    fn zero_reference_gives_zero_output() {
        let dt = 1e-5;
        let mut pid = crate::architectures::build_pid(200.0 * PI, 0.5, dt).unwrap();
        let plant = Plant::double_integrator(1.0).unwrap();
        let r = TimeSeries::step(0.0, dt, 2000).unwrap();
        let cfg = SimConfig::new(dt, 0.02, 0, 0).unwrap();
        let out = simulate_closed_loop(&mut pid, &plant, &r, &cfg).unwrap();
        assert!(out.position.values.iter().all(|&y| y == 0.0));
        assert!(out.control_effort.values.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn divergence_is_caught() {
        let dt = 1e-3;
        // positive feedback through a negative gain
        let mut g = Gain { gain: -1e3, dt };
        let plant = Plant::double_integrator(1.0).unwrap();
        let r = TimeSeries::step(1.0, dt, 100_000).unwrap();
        let cfg = SimConfig::new(dt, 100.0, 0, 0).unwrap();
        assert!(matches!(
            simulate_closed_loop(&mut g, &plant, &r, &cfg),
            Err(HigsError::Diverged { .. })
        ));
    }

    #[test]
    fn rk4_reference_of_proportional_loop() {
        // k / s^2 under unit feedback: y = 1 - cos(sqrt(k) t)
        let k = 4.0;
        let y = linear_step_response(&ContinuousTf::gain(k), &Plant::double_integrator(1.0).unwrap(), 1.0, 1e-3, 3000, 4)
            .unwrap();
        for (i, t) in y.times().enumerate() {
            assert!((y.values[i] - (1.0 - (2.0f64 * t).cos())).abs() < 1e-9);
        }
    }
}
