//! Generalized-HIGS compositions, the PID controller built around them, and
//! the double-integrator plant.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::block::{Block, LinearBlock};
use crate::describing::{df_classic, df_fractional, df_harmonic_n, DfQuery};
use crate::error::{HigsError, Result};
use crate::fractional::{design_fractional_low_pass, FracOrder, RationalFracFilter, DEFAULT_MEMORY};
use crate::hybrid::{FracMemory, HigsFilter, HigsParams};
use crate::lti::{ContinuousTf, Section};
use crate::scalar::Real;

/// Pole/zero pairs per decade of the complementary fractional low-pass.
const STAGES_PER_DECADE: f64 = 3.0;

fn stages_for_band<T: Real>(low: T, high: T) -> usize {
    let decades = (high / low).log10().to_f64_lossy();
    ((decades * STAGES_PER_DECADE).ceil() as usize).max(1)
}

/// Architecture a: fractional HIGS of order `alpha` followed by a linear
/// fractional low-pass of order `1 - alpha` with corner `omega_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchAConfig<T> {
    pub higs: HigsParams<T>,
    pub omega_r: T,
    /// Upper edge of the band where the complement follows its fractional slope.
    pub band_high: T,
    pub n_stages: usize,
    /// History length of the fractional operator inside the HIGS.
    pub memory: usize,
    pub frac_memory: FracMemory,
}

impl<T: Real> ArchAConfig<T> {
    /// Both stages share the corner `omega_r`: the HIGS uses
    /// `omega_h = k_h omega_r^alpha`, so the composition has the linear
    /// counterpart `k_h omega_r / (s + omega_r)` for every `alpha`.
    pub fn matched(alpha: T, k_h: T, omega_r: T) -> Result<Self> {
        Self::matched_with_band(alpha, k_h, omega_r, omega_r * T::lit(1e4))
    }

    pub fn matched_with_band(alpha: T, k_h: T, omega_r: T, band_high: T) -> Result<Self> {
        if !(omega_r > T::zero() && omega_r.is_finite()) {
            return Err(HigsError::invalid("omega_r", "must be positive"));
        }
        let higs = HigsParams::new(k_h * omega_r.powf(alpha), k_h, alpha)?;
        let config = Self {
            higs,
            omega_r,
            band_high,
            n_stages: stages_for_band(omega_r, band_high),
            memory: DEFAULT_MEMORY,
            frac_memory: FracMemory::Full,
        };
        config.complement()?;
        Ok(config)
    }

    pub fn with_memory(mut self, memory: usize) -> Self {
        self.memory = memory;
        self
    }

    pub fn with_frac_memory(mut self, frac_memory: FracMemory) -> Self {
        self.frac_memory = frac_memory;
        self
    }

    pub fn alpha(&self) -> FracOrder<T> {
        self.higs.alpha
    }

    pub fn complement(&self) -> Result<RationalFracFilter<T>> {
        design_fractional_low_pass(self.higs.alpha.complement(), self.omega_r, self.band_high, self.n_stages)
    }

    /// First harmonic of the cascade: the complement is linear and follows
    /// the nonlinear stage, so it scales the HIGS describing function.
    pub fn describing_function(&self, omega: T, e_hat: T) -> Result<Complex<T>> {
        let q = DfQuery::new(omega, e_hat, self.higs)?;
        Ok(df_fractional(&q)?.value * self.complement()?.response(omega))
    }

    /// `n`-th harmonic `(b_n + j a_n) / e_hat` of the steady-state output.
    pub fn harmonic(&self, omega: T, e_hat: T, n: usize) -> Result<Complex<T>> {
        let q = DfQuery::new(omega, e_hat, self.higs)?;
        Ok(df_harmonic_n(&q, n)? * self.complement()?.response(omega * T::from_count(n)))
    }
}

pub struct ArchA<T> {
    higs: HigsFilter<T>,
    complement: LinearBlock<T>,
}

impl<T: Real> ArchA<T> {
    pub fn new(config: &ArchAConfig<T>, dt: T) -> Result<Self> {
        Ok(Self {
            higs: HigsFilter::with_memory(config.higs, dt, config.memory, config.frac_memory)?,
            complement: LinearBlock::new(&config.complement()?.tf, dt)?,
        })
    }
}

impl<T: Real> Block<T> for ArchA<T> {
    fn step(&mut self, input: T) -> Result<T> {
        let u = self.higs.step(input)?;
        self.complement.step(u)
    }

    fn dt(&self) -> T {
        self.higs.dt()
    }
}

/// Architecture b: `beta * HIGS + (1 - beta) * LPF`, both fed the same
/// input. The low-pass is the linear counterpart of the HIGS,
/// `k_h cutoff / (s + cutoff)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchBConfig<T> {
    pub beta: T,
    pub higs: HigsParams<T>,
    pub lpf_cutoff: T,
}

impl<T: Real> ArchBConfig<T> {
    /// Low-pass corner at `omega_h / k_h`, the HIGS corner frequency.
    pub fn new(beta: T, omega_h: T, k_h: T) -> Result<Self> {
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(HigsError::invalid("beta", format!("must lie in [0, 1], got {beta}")));
        }
        if !(k_h > T::zero() && omega_h > T::zero()) {
            return Err(HigsError::invalid("k_h", "architecture b needs omega_h > 0 and k_h > 0"));
        }
        Ok(Self {
            beta,
            higs: HigsParams::classic(omega_h, k_h)?,
            lpf_cutoff: omega_h / k_h,
        })
    }

    pub fn lpf(&self) -> ContinuousTf<T> {
        ContinuousTf::gain(self.higs.k_h).then(Section::low_pass(self.lpf_cutoff))
    }

    pub fn describing_function(&self, omega: T) -> Result<Complex<T>> {
        let higs = df_classic(omega, self.higs.omega_h, self.higs.k_h)?;
        Ok(higs * self.beta + self.lpf().response(omega) * (T::one() - self.beta))
    }

    /// Harmonics above the first come from the HIGS path only.
    pub fn harmonic(&self, omega: T, e_hat: T, n: usize) -> Result<Complex<T>> {
        if n == 1 {
            return self.describing_function(omega);
        }
        let q = DfQuery::new(omega, e_hat, self.higs)?;
        Ok(df_harmonic_n(&q, n)? * self.beta)
    }
}

pub struct ArchB<T> {
    beta: T,
    higs: HigsFilter<T>,
    lpf: LinearBlock<T>,
}

impl<T: Real> ArchB<T> {
    pub fn new(config: &ArchBConfig<T>, dt: T) -> Result<Self> {
        Ok(Self {
            beta: config.beta,
            higs: HigsFilter::new(config.higs, dt)?,
            lpf: LinearBlock::new(&config.lpf(), dt)?,
        })
    }
}

impl<T: Real> Block<T> for ArchB<T> {
    fn step(&mut self, input: T) -> Result<T> {
        let h = self.higs.step(input)?;
        let l = self.lpf.step(input)?;
        Ok(self.beta * h + (T::one() - self.beta) * l)
    }

    fn dt(&self) -> T {
        self.higs.dt()
    }
}

/// Which generalized HIGS realizes the nonlinear low-pass inside the PID
/// integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneralizedHigs<T> {
    /// Architecture a with the PID's `alpha`.
    ArchA,
    /// Architecture b with blend `beta`.
    ArchB { beta: T },
}

/// Lead-PI-lag controller
/// `K_p (1 + s/omega_d)/(1 + s/omega_t) (1 + omega_i I)` with the
/// nonlinear integrator `I = H_f (1 + omega_r/s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidParams<T> {
    pub k_p: T,
    pub omega_d: T,
    pub omega_t: T,
    pub omega_i: T,
    pub omega_c: T,
    /// Corner of the generalized HIGS inside the integrator.
    pub omega_r: T,
    /// The PD term gets a roll-off pole at `rolloff * omega_t`.
    pub rolloff: T,
    pub alpha: FracOrder<T>,
    pub generalized: GeneralizedHigs<T>,
    /// History length of the fractional operator.
    pub memory: usize,
    pub frac_memory: FracMemory,
}

impl<T: Real> PidParams<T> {
    /// Tuning for crossover `omega_c`: `K_p = omega_c^2 / 1.8`,
    /// `omega_d = omega_c / 1.8`, `omega_t = 1.8 omega_c`,
    /// `omega_i = omega_c / 10`, `omega_r = omega_i`.
    pub fn from_crossover(omega_c: T, alpha: T) -> Result<Self> {
        if !(omega_c > T::zero() && omega_c.is_finite()) {
            return Err(HigsError::invalid("omega_c", "must be positive"));
        }
        let r = T::lit(1.8);
        let omega_i = omega_c / T::lit(10.0);
        Ok(Self {
            k_p: omega_c * omega_c / r,
            omega_d: omega_c / r,
            omega_t: omega_c * r,
            omega_i,
            omega_c,
            omega_r: omega_i,
            rolloff: T::lit(100.0),
            alpha: FracOrder::new(alpha)?,
            generalized: GeneralizedHigs::ArchA,
            memory: DEFAULT_MEMORY,
            frac_memory: FracMemory::Full,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_d < self.omega_c && self.omega_c < self.omega_t) {
            return Err(HigsError::invalid(
                "omega_d/omega_t",
                "the lead must straddle the crossover: omega_d < omega_c < omega_t",
            ));
        }
        for (name, v) in [
            ("k_p", self.k_p),
            ("omega_i", self.omega_i),
            ("omega_r", self.omega_r),
            ("rolloff", self.rolloff),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(HigsError::invalid(name, "must be positive"));
            }
        }
        if let GeneralizedHigs::ArchB { beta } = self.generalized {
            if !(beta >= T::zero() && beta <= T::one()) {
                return Err(HigsError::invalid("beta", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// `(1 + s/omega_d)` made proper with a pole at `rolloff * omega_t`.
    pub fn pd_tf(&self) -> ContinuousTf<T> {
        ContinuousTf::unity().then(Section::zero_pole(self.omega_d, self.rolloff * self.omega_t))
    }

    /// `1 / (1 + s/omega_t)`
    pub fn lpf_tf(&self) -> ContinuousTf<T> {
        ContinuousTf::unity().then(Section::low_pass(self.omega_t))
    }

    /// Architecture a inside the integrator: gain `1/omega_r`, corner `omega_r`.
    pub fn arch_a(&self) -> Result<ArchAConfig<T>> {
        let band_high = T::lit(100.0) * self.omega_c;
        Ok(
            ArchAConfig::matched_with_band(self.alpha.value(), self.omega_r.recip(), self.omega_r, band_high)?
                .with_memory(self.memory)
                .with_frac_memory(self.frac_memory),
        )
    }

    /// The controller with a linear integrator `1/s` in place of `I`.
    pub fn linear_tf(&self) -> ContinuousTf<T> {
        ContinuousTf::gain(self.k_p)
            .then(Section::zero_pole(self.omega_d, self.rolloff * self.omega_t))
            .then(Section::new(T::one(), self.omega_i, T::zero()))
            .then(Section::low_pass(self.omega_t))
    }
}

/// `w + omega_i H_f(w)` followed by `(1 + omega_r/s)` on the nonlinear path.
struct NonlinearPi<T> {
    omega_i: T,
    generalized: Box<dyn Block<T> + Send>,
    integrator: LinearBlock<T>,
}

impl<T: Real> Block<T> for NonlinearPi<T> {
    fn step(&mut self, input: T) -> Result<T> {
        let h = self.generalized.step(input)?;
        let i = self.integrator.step(h)?;
        Ok(input + self.omega_i * i)
    }

    fn dt(&self) -> T {
        self.integrator.dt()
    }
}

/// Sampled PID controller: PD, nonlinear PI, low-pass, then `K_p`.
pub struct PidController<T> {
    params: PidParams<T>,
    pd: LinearBlock<T>,
    pi: NonlinearPi<T>,
    lpf: LinearBlock<T>,
    dt: T,
}

impl<T: Real> PidController<T> {
    pub fn new(params: PidParams<T>, dt: T) -> Result<Self> {
        params.validate()?;
        let generalized: Box<dyn Block<T> + Send> = match params.generalized {
            GeneralizedHigs::ArchA => Box::new(ArchA::new(&params.arch_a()?, dt)?),
            GeneralizedHigs::ArchB { beta } => {
                let cfg = ArchBConfig::new(beta, T::one(), params.omega_r.recip())?;
                Box::new(ArchB::new(&cfg, dt)?)
            }
        };
        let integrator = ContinuousTf::unity().then(Section::new(T::one(), params.omega_r, T::zero()));
        Ok(Self {
            pd: LinearBlock::new(&params.pd_tf(), dt)?,
            pi: NonlinearPi {
                omega_i: params.omega_i,
                generalized,
                integrator: LinearBlock::new(&integrator, dt)?,
            },
            lpf: LinearBlock::new(&params.lpf_tf(), dt)?,
            params,
            dt,
        })
    }

    pub fn params(&self) -> &PidParams<T> {
        &self.params
    }

    /// Stage order of the pipeline.
    pub fn stages(&self) -> [&'static str; 4] {
        ["pd", "nonlinear_pi", "lpf", "gain"]
    }
}

impl<T: Real> Block<T> for PidController<T> {
    fn step(&mut self, input: T) -> Result<T> {
        let x = self.pd.step(input)?;
        let x = self.pi.step(x)?;
        let x = self.lpf.step(x)?;
        Ok(self.params.k_p * x)
    }

    fn dt(&self) -> T {
        self.dt
    }
}

/// PID with the default tuning for `omega_c`, nonlinear integrator order
/// `alpha`, sampled at `dt`.
pub fn build_pid<T: Real>(omega_c: T, alpha: T, dt: T) -> Result<PidController<T>> {
    PidController::new(PidParams::from_crossover(omega_c, alpha)?, dt)
}

/// Single mass driven by a force: `m x'' = F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant<T> {
    pub mass: T,
}

impl<T: Real> Plant<T> {
    pub fn double_integrator(mass: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(HigsError::invalid("mass", "must be positive"));
        }
        Ok(Self { mass })
    }

    pub fn response(&self, omega: T) -> Complex<T> {
        Complex::from(-(self.mass * omega * omega).recip())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState<T> {
    pub position: T,
    pub velocity: T,
}

/// Advances the plant over `dt` with the force held constant (exact for
/// piecewise-constant forcing) and returns the new position.
pub fn plant_step<T: Real>(plant: &Plant<T>, state: &mut PlantState<T>, force: T, dt: T) -> T {
    let acc = force / plant.mass;
    state.position = state.position + state.velocity * dt + acc * dt * dt * T::lit(0.5);
    state.velocity = state.velocity + acc * dt;
    state.position
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn default_pid_tuning() {
        let wc = 200.0 * PI;
        let p = PidParams::from_crossover(wc, 0.5).unwrap();
        assert!((p.k_p - wc * wc / 1.8).abs() < 1e-9);
        assert!((p.omega_d - wc / 1.8).abs() < 1e-12);
        assert!((p.omega_t - 360.0 * PI).abs() < 1e-9);
        assert!((p.omega_i - 20.0 * PI).abs() < 1e-12);
        assert_eq!(p.omega_r, p.omega_i);
        p.validate().unwrap();
    }

    #[test]
    fn loop_gain_is_unity_at_crossover() {
        let wc = 200.0 * PI;
        let p = PidParams::from_crossover(wc, 0.0).unwrap();
        let plant = Plant::double_integrator(1.0).unwrap();
        let l = p.linear_tf().response(wc) * plant.response(wc);
        // the PI and roll-off terms move it slightly off 1
        assert!((l.norm() - 1.0).abs() < 0.01, "{}", l.norm());
    }

    #[test]
    fn lead_must_straddle_crossover() {
        let mut p = PidParams::from_crossover(10.0, 0.5).unwrap();
        p.omega_d = 20.0;
        assert!(p.validate().is_err());
        assert!(PidController::new(p, 1e-4).is_err());
    }

    #[test]
    fn pipeline_order() {
        let pid = build_pid(200.0 * PI, 0.5, 1e-5).unwrap();
        assert_eq!(pid.stages(), ["pd", "nonlinear_pi", "lpf", "gain"]);
    }

    #[test]
    fn plant_constant_force_from_rest() {
        let plant = Plant::double_integrator(1.0).unwrap();
        let mut s = PlantState::default();
        let dt = 1e-3;
        let mut x: f64 = 0.0;
        for _ in 0..2000 {
            x = plant_step(&plant, &mut s, 1.0, dt);
        }
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn plant_zero_force_keeps_state() {
        let plant = Plant::double_integrator(2.0).unwrap();
        let mut s = PlantState {
            position: 0.3,
            velocity: 0.0,
        };
        plant_step(&plant, &mut s, 0.0, 0.1);
        assert_eq!(s, PlantState { position: 0.3, velocity: 0.0 });
    }

    #[test]
    fn plant_sinusoidal_force_amplitude() {
        // F sin(wt) with v(0) = -F/(m w) gives x = -F/(m w^2) sin(wt)
        let (m, w, f) = (2.0, 3.0, 1.5);
        let plant = Plant::double_integrator(m).unwrap();
        let mut s = PlantState {
            position: 0.0,
            velocity: -f / (m * w),
        };
        let dt = 1e-4;
        let mut peak: f64 = 0.0;
        for k in 0..(2.0 * PI / w / dt) as usize * 3 {
            let t = (k as f64 + 0.5) * dt;
            peak = peak.max(plant_step(&plant, &mut s, f * (w * t).sin(), dt).abs());
        }
        assert!((peak - f / (m * w * w)).abs() < 1e-4 * peak, "{peak}");
        assert!(Plant::double_integrator(0.0).is_err());
    }

    #[test]
    fn arch_a_endpoints() {
        let a1 = ArchAConfig::matched(1.0, 1.0, 1.0).unwrap();
        assert_eq!(a1.complement().unwrap().response(50.0), Complex::new(1.0, 0.0));
        let a0 = ArchAConfig::matched(0.0, 2.0, 1.0).unwrap();
        assert_eq!(a0.higs.omega_h, 2.0);
        let phase: f64 = a0.describing_function(100.0f64, 1.0).unwrap().arg().to_degrees();
        assert!((phase + 90.0).abs() < 1.0);
    }

    #[test]
    fn arch_a_matched_phase_near_minus_57() {
        let a = ArchAConfig::matched(0.68, 1.0, 1.0).unwrap();
        let phase: f64 = a.describing_function(100.0f64, 1.0).unwrap().arg().to_degrees();
        assert!((phase + 57.0).abs() < 2.0, "{phase}");
        let b = ArchBConfig::new(0.5, 1.0, 1.0).unwrap();
        let phase_b: f64 = b.describing_function(100.0f64).unwrap().arg().to_degrees();
        assert!((phase_b + 57.0).abs() < 2.0, "{phase_b}");
    }

    #[test]
    fn arch_b_endpoints() {
        let b0 = ArchBConfig::new(0.0, 2.0, 1.0).unwrap();
        let lpf = b0.lpf().response(5.0);
        assert!((b0.describing_function(5.0).unwrap() - lpf).norm() < 1e-15);
        let b1 = ArchBConfig::new(1.0, 2.0, 1.0).unwrap();
        let higs = df_classic(5.0, 2.0, 1.0).unwrap();
        assert!((b1.describing_function(5.0).unwrap() - higs).norm() < 1e-15);
        assert!(ArchBConfig::new(1.5, 1.0, 1.0).is_err());
    }
}
