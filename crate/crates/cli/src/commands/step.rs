use std::f64::consts::PI;

use anyhow::Context;
use clap::Args;
use higs::fractional::DEFAULT_MEMORY;
use higs::sim::linear_step_response;
use higs::{simulate_closed_loop, step_metrics, PidController, PidParams, Plant, SimConfig, StepMetrics, TimeSeries};
use serde::{Deserialize, Serialize};

use super::sweep;
use crate::config::{config_error, overlay, positive, unit_interval, Globals, MemoryMode};
use crate::output::{label, num, Output};

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct StepArgs {
    /// Crossover frequency omega_c in rad/s.
    #[arg(long)]
    wc: Option<f64>,
    /// Fractional orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Plant mass in kg.
    #[arg(long)]
    mass: Option<f64>,
    /// Step height.
    #[arg(long)]
    level: Option<f64>,
    /// Corner omega_r of the nonlinear integrator filter; defaults to omega_i.
    #[arg(long)]
    wr: Option<f64>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long, value_enum)]
    frac_memory: Option<MemoryMode>,
    /// Cross-check the alpha = 0 loop against a continuous linear simulation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    oracle: Option<bool>,
}

overlay!(StepArgs { wc, alpha, mass, level, wr, memory, frac_memory, oracle });

#[derive(Debug, Clone, Serialize)]
pub struct StepSettings {
    pub wc: f64,
    pub alpha: Vec<f64>,
    pub mass: f64,
    pub level: f64,
    pub wr: Option<f64>,
    pub memory: usize,
    pub frac_memory: MemoryMode,
    pub oracle: bool,
    pub dt: f64,
    pub samples: usize,
}

impl StepSettings {
    fn resolve(args: StepArgs, globals: &Globals) -> anyhow::Result<Self> {
        let alpha = args.alpha.unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
        if alpha.is_empty() {
            return Err(config_error("alpha list is empty"));
        }
        for &a in &alpha {
            unit_interval("alpha", a)?;
        }
        let dt = globals.dt.unwrap_or(1e-5);
        let duration = globals.duration.unwrap_or(0.5);
        let samples = (duration / dt).round() as usize;
        if samples < 2 {
            return Err(config_error("duration must cover at least two samples"));
        }
        Ok(Self {
            wc: positive("wc", args.wc.unwrap_or(200.0 * PI))?,
            alpha,
            mass: positive("mass", args.mass.unwrap_or(1.0))?,
            level: args.level.unwrap_or(1.0),
            wr: args.wr.map(|w| positive("wr", w)).transpose()?,
            memory: args.memory.unwrap_or(DEFAULT_MEMORY),
            frac_memory: args.frac_memory.unwrap_or_default(),
            oracle: args.oracle.unwrap_or(false),
            dt,
            samples,
        })
    }

    fn params(&self, alpha: f64) -> higs::Result<PidParams<f64>> {
        let mut p = PidParams::from_crossover(self.wc, alpha)?;
        if let Some(wr) = self.wr {
            p.omega_r = wr;
        }
        p.memory = self.memory;
        p.frac_memory = self.frac_memory.into();
        p.validate()?;
        Ok(p)
    }

    fn reference(&self) -> higs::Result<TimeSeries<f64>> {
        TimeSeries::step(self.level, self.dt, self.samples)
    }

    fn simulate(&self, alpha: f64) -> anyhow::Result<TimeSeries<f64>> {
        let mut controller = PidController::new(self.params(alpha)?, self.dt)?;
        let plant = Plant::double_integrator(self.mass)?;
        let cfg = SimConfig::new(self.dt, self.dt * self.samples as f64, 0, 0)?;
        let out = simulate_closed_loop(&mut controller, &plant, &self.reference()?, &cfg)
            .with_context(|| format!("alpha = {alpha}"))?;
        Ok(out.position)
    }
}

pub fn run(args: StepArgs, file: StepArgs, globals: &Globals) -> anyhow::Result<()> {
    let s = StepSettings::resolve(args.overlay(file), globals)?;
    if s.level == 0.0 || !s.level.is_finite() {
        return Err(config_error("level must be finite and nonzero"));
    }
    let responses = sweep(&s.alpha, |&alpha| s.simulate(alpha))?;
    let metrics = responses
        .iter()
        .map(|y| step_metrics(y, s.level))
        .collect::<higs::Result<Vec<StepMetrics<f64>>>>()?;

    let mut out = Output::create(globals)?;
    let mut header = vec!["t".to_string()];
    header.extend(s.alpha.iter().map(|&a| format!("y_alpha_{}", label(a))));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let reference = &responses[0];
    let rows = (0..reference.len()).map(|k| {
        let mut row = vec![num(reference.time(k))];
        row.extend(responses.iter().map(|y| num(y.values[k])));
        row
    });
    out.csv("step_response.csv", &header, rows)?;

    let rows = s.alpha.iter().zip(&metrics).map(|(&a, m)| {
        vec![
            num(a),
            num(m.overshoot),
            num(m.settling_time),
            m.rise_time.map(num).unwrap_or_default(),
            m.settled.to_string(),
            num(m.steady_state_error),
        ]
    });
    out.csv(
        "step_metrics.csv",
        &["alpha", "overshoot_pct", "settling_time_s", "rise_time_s", "settled", "steady_state_error"],
        rows,
    )?;

    println!("{:>8} {:>12} {:>14} {:>12}", "alpha", "overshoot %", "settling [s]", "rise [s]");
    for (&a, m) in s.alpha.iter().zip(&metrics) {
        let settle = if m.settled { format!("{:.5}", m.settling_time) } else { "unsettled".into() };
        let rise = m.rise_time.map(|r| format!("{r:.5}")).unwrap_or_else(|| "-".into());
        println!("{a:>8} {:>12.3} {settle:>14} {rise:>12}", m.overshoot);
    }

    let mut checks = serde_json::Map::new();
    if s.oracle {
        let sampled = match s.alpha.iter().position(|&a| a == 0.0) {
            Some(i) => responses[i].clone(),
            None => s.simulate(0.0)?,
        };
        let plant = Plant::double_integrator(s.mass)?;
        let linear = linear_step_response(&s.params(0.0)?.linear_tf(), &plant, s.level, s.dt, s.samples, 10)?;
        let diff: f64 = sampled.values.iter().zip(&linear.values).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = linear.values.iter().map(|b| b * b).sum();
        let rel = (diff / norm).sqrt();
        let rows = (0..sampled.len()).map(|k| vec![num(sampled.time(k)), num(sampled.values[k]), num(linear.values[k])]);
        out.csv("step_oracle.csv", &["t", "y_sampled", "y_linear"], rows)?;
        println!("alpha = 0 vs continuous linear loop: relative RMS difference {rel:.3e}");
        checks.insert("oracle_relative_rms".into(), rel.into());
    }
    let manifest = out.finish("step", globals, &s, checks.into())?;
    println!("manifest {}", manifest.display());
    Ok(())
}
