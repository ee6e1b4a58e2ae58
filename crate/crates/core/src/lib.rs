//! Simulation and frequency-domain analysis of the fractional-order hybrid
//! integrator-gain system (HIGS).
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod architectures;
pub mod block;
pub mod describing;
pub mod error;
pub mod fractional;
pub mod hybrid;
pub mod lti;
pub mod scalar;
pub mod signal;
pub mod sim;

pub use architectures::{
    build_pid, plant_step, ArchA, ArchAConfig, ArchB, ArchBConfig, PidController, PidParams, Plant, PlantState,
};
pub use block::{Block, Gain, LinearBlock, Series};
pub use describing::{
    df_classic, df_fractional, df_harmonic_n, gamma_classic, gamma_fractional, DfQuery, DfSource,
    FrequencyResponsePoint, GammaIntermediates,
};
pub use error::{HigsError, Result};
pub use fractional::{
    design_fractional_low_pass, design_rational_frac_filter, frac_diff, frac_int, sinusoid_frac_rule, FracOrder,
    GrunwaldLetnikov, HistoryBuffer, RationalFracFilter,
};
pub use hybrid::{
    classic_higs_response, higs_response, higs_response_with, higs_step, ClassicHigs, FracMemory, HigsFilter, HigsMode, HigsParams,
    HigsResponse, HigsState, SwitchEvent, SwitchTrigger,
};
pub use scalar::Real;
pub use signal::TimeSeries;
pub use sim::{
    estimate_df, harmonic_spectrum, simulate_closed_loop, simulate_open_loop, step_metrics, ClosedLoopResponse,
    HarmonicSpectrum, SimConfig, StepMetrics,
};

pub type HigsParams64 = HigsParams<f64>;
pub type HigsFilter64 = HigsFilter<f64>;
pub type DfQuery64 = DfQuery<f64>;
pub type FrequencyResponsePoint64 = FrequencyResponsePoint<f64>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type StepMetrics64 = StepMetrics<f64>;
pub type PidParams64 = PidParams<f64>;
pub type ArchAConfig64 = ArchAConfig<f64>;
pub type ArchBConfig64 = ArchBConfig<f64>;
pub type HarmonicSpectrum64 = HarmonicSpectrum<f64>;
pub type Complex64 = num_complex::Complex<f64>;
