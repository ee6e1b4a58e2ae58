use std::f64::consts::TAU;

use anyhow::Context;
use clap::{Args, ValueEnum};
use higs::fractional::DEFAULT_MEMORY;
use higs::{higs_response_with, HigsFilter, HigsParams, HigsResponse, TimeSeries};
use serde::{Deserialize, Serialize};

use super::sweep;
use crate::config::{config_error, overlay, positive, unit_interval, Globals, MemoryMode};
use crate::output::{label, num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `a sin(w t)`
    Sine,
    /// `a (sin(w t) + r sin(3 w t))`
    Multisine,
    /// constant `a` from t = 0
    Step,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    input: Option<InputKind>,
    /// Fractional orders, comma separated; one output file each.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    wh: Option<f64>,
    #[arg(long)]
    kh: Option<f64>,
    /// Input frequency in rad/s.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Relative amplitude of the third-harmonic multisine component.
    #[arg(long)]
    ratio: Option<f64>,
    /// Length in input periods when --duration is not given.
    #[arg(long)]
    periods: Option<f64>,
    /// Samples per input period when --dt is not given.
    #[arg(long)]
    spp: Option<usize>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long, value_enum)]
    frac_memory: Option<MemoryMode>,
}

overlay!(SimulateArgs { input, alpha, wh, kh, omega, amplitude, ratio, periods, spp, memory, frac_memory });

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSettings {
    pub input: InputKind,
    pub alpha: Vec<f64>,
    pub wh: f64,
    pub kh: f64,
    pub omega: f64,
    pub amplitude: f64,
    pub ratio: f64,
    pub dt: f64,
    pub samples: usize,
    pub memory: usize,
    pub frac_memory: MemoryMode,
}

impl SimulateSettings {
    fn resolve(args: SimulateArgs, globals: &Globals) -> anyhow::Result<Self> {
        let alpha = args.alpha.unwrap_or_else(|| vec![1.0, 0.75, 0.5, 0.25, 0.0]);
        if alpha.is_empty() {
            return Err(config_error("alpha list is empty"));
        }
        for &a in &alpha {
            unit_interval("alpha", a)?;
        }
        let omega = positive("omega", args.omega.unwrap_or(1.0))?;
        let period = TAU / omega;
        let spp = args.spp.unwrap_or(1000);
        if spp < 4 {
            return Err(config_error("spp must be at least 4"));
        }
        let dt = globals.dt.unwrap_or(period / spp as f64);
        let duration = match globals.duration {
            Some(d) => d,
            None => positive("periods", args.periods.unwrap_or(3.0))? * period,
        };
        let samples = (duration / dt).round() as usize;
        if samples == 0 {
            return Err(config_error("duration is shorter than one sample"));
        }
        Ok(Self {
            input: args.input.unwrap_or(InputKind::Sine),
            alpha,
            wh: positive("wh", args.wh.unwrap_or(1.0))?,
            kh: positive("kh", args.kh.unwrap_or(1.0))?,
            omega,
            amplitude: positive("amplitude", args.amplitude.unwrap_or(1.0))?,
            ratio: args.ratio.unwrap_or(0.7),
            dt,
            samples,
            memory: args.memory.unwrap_or(DEFAULT_MEMORY),
            frac_memory: args.frac_memory.unwrap_or_default(),
        })
    }

    fn input(&self) -> higs::Result<TimeSeries<f64>> {
        let (a, w, r) = (self.amplitude, self.omega, self.ratio);
        match self.input {
            InputKind::Sine => TimeSeries::sine(a, w, self.dt, self.samples),
            InputKind::Multisine => {
                TimeSeries::from_fn(0.0, self.dt, self.samples, |t| a * ((w * t).sin() + r * (3.0 * w * t).sin()))
            }
            InputKind::Step => TimeSeries::step(a, self.dt, self.samples),
        }
    }
}

pub fn run(args: SimulateArgs, file: SimulateArgs, globals: &Globals) -> anyhow::Result<()> {
    let settings = SimulateSettings::resolve(args.overlay(file), globals)?;
    let input = settings.input()?;
    let responses: Vec<HigsResponse<f64>> = sweep(&settings.alpha, |&alpha| {
        let params = HigsParams::new(settings.wh, settings.kh, alpha)?;
        let filter = HigsFilter::with_memory(params, settings.dt, settings.memory, settings.frac_memory.into())?;
        higs_response_with(filter, &input).with_context(|| format!("alpha = {alpha}"))
    })?;

    let mut out = Output::create(globals)?;
    let mut switches = serde_json::Map::new();
    for (&alpha, resp) in settings.alpha.iter().zip(&responses) {
        let tag = label(alpha);
        let rows = input.values.iter().enumerate().map(|(k, &e)| {
            vec![
                num(input.time(k)),
                num(e),
                num(resp.output.values[k]),
                resp.modes[k].as_str().to_string(),
            ]
        });
        out.csv(&format!("simulate_alpha_{tag}.csv"), &["t", "e", "u", "mode"], rows)?;
        // e-u plane with the sector edge k_h e
        let rows = input
            .values
            .iter()
            .zip(&resp.output.values)
            .map(|(&e, &u)| vec![num(e), num(u), num(settings.kh * e)]);
        out.csv(&format!("eu_alpha_{tag}.csv"), &["e", "u", "sector_edge"], rows)?;
        switches.insert(tag, resp.events.len().into());
    }
    let checks = serde_json::json!({ "switch_count": switches });
    let manifest = out.finish("simulate", globals, &settings, checks)?;
    println!("simulated {} samples for {} orders; manifest {}", input.len(), responses.len(), manifest.display());
    Ok(())
}
