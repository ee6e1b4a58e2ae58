use std::f64::consts::TAU;

use anyhow::Context;
use clap::{Args, ValueEnum};
use higs::fractional::DEFAULT_MEMORY;
use higs::{df_fractional, estimate_df, DfQuery, FracMemory, FrequencyResponsePoint, HigsFilter, HigsParams, SimConfig};
use serde::{Deserialize, Serialize};

use super::sweep;
use crate::config::{config_error, overlay, positive, unit_interval, Globals};
use crate::output::{num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceArg {
    ClosedForm,
    Empirical,
    Both,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct DfArgs {
    /// Fractional orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Integrator gain omega_h.
    #[arg(long)]
    wh: Option<f64>,
    /// Gain-mode gain k_h.
    #[arg(long)]
    kh: Option<f64>,
    /// Input amplitude.
    #[arg(long)]
    e_hat: Option<f64>,
    #[arg(long)]
    wmin: Option<f64>,
    #[arg(long)]
    wmax: Option<f64>,
    /// Log-spaced grid points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    /// Samples per input period for empirical runs (--dt takes precedence).
    #[arg(long)]
    spp: Option<usize>,
    /// Periods discarded before analysis.
    #[arg(long)]
    settle: Option<usize>,
    /// Periods analysed.
    #[arg(long)]
    analysis: Option<usize>,
    /// Fractional operator history length in samples.
    #[arg(long)]
    memory: Option<usize>,
}

overlay!(DfArgs { alpha, wh, kh, e_hat, wmin, wmax, points, source, spp, settle, analysis, memory });

#[derive(Debug, Clone, Serialize)]
pub struct DfSettings {
    pub alpha: Vec<f64>,
    pub wh: f64,
    pub kh: f64,
    pub e_hat: f64,
    pub wmin: f64,
    pub wmax: f64,
    pub points: usize,
    pub source: SourceArg,
    pub spp: usize,
    pub settle: usize,
    pub analysis: usize,
    pub memory: usize,
    /// Sample period override for empirical runs.
    pub dt: Option<f64>,
}

impl DfSettings {
    fn resolve(args: DfArgs, globals: &Globals) -> anyhow::Result<Self> {
        let alpha = args.alpha.unwrap_or_else(|| vec![1.0]);
        if alpha.is_empty() {
            return Err(config_error("alpha list is empty"));
        }
        for &a in &alpha {
            unit_interval("alpha", a)?;
        }
        let wmin = positive("wmin", args.wmin.unwrap_or(0.01))?;
        let wmax = positive("wmax", args.wmax.unwrap_or(100.0))?;
        if wmax < wmin {
            return Err(config_error(format!("wmax ({wmax}) is below wmin ({wmin})")));
        }
        let points = args.points.unwrap_or(50);
        if points == 0 || (points == 1 && wmin != wmax) {
            return Err(config_error("points must be at least 2 for a frequency range"));
        }
        if globals.duration.is_some() {
            eprintln!("note: --duration does not apply to df; runs cover whole periods");
        }
        Ok(Self {
            alpha,
            wh: positive("wh", args.wh.unwrap_or(1.0))?,
            kh: positive("kh", args.kh.unwrap_or(1.0))?,
            e_hat: positive("e_hat", args.e_hat.unwrap_or(1.0))?,
            wmin,
            wmax,
            points,
            source: args.source.unwrap_or(SourceArg::ClosedForm),
            spp: args.spp.unwrap_or(2000),
            settle: args.settle.unwrap_or(4),
            analysis: args.analysis.unwrap_or(4),
            memory: args.memory.unwrap_or(DEFAULT_MEMORY),
            dt: globals.dt,
        })
    }

    fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.wmin];
        }
        let ratio = self.wmax / self.wmin;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match i {
                0 => self.wmin,
                i if i + 1 == self.points => self.wmax,
                i => self.wmin * ratio.powf(i as f64 / last),
            })
            .collect()
    }

    fn samples_per_period(&self, omega: f64) -> usize {
        match self.dt {
            Some(dt) => ((TAU / omega / dt).round() as usize).max(4),
            None => self.spp,
        }
    }
}

fn closed_form(s: &DfSettings, alpha: f64, omega: f64) -> anyhow::Result<FrequencyResponsePoint<f64>> {
    let params = HigsParams::new(s.wh, s.kh, alpha)?;
    Ok(df_fractional(&DfQuery::new(omega, s.e_hat, params)?)?)
}

fn empirical(s: &DfSettings, alpha: f64, omega: f64) -> anyhow::Result<FrequencyResponsePoint<f64>> {
    let params = HigsParams::new(s.wh, s.kh, alpha)?;
    let cfg = SimConfig::for_frequency(omega, s.samples_per_period(omega), s.settle, s.analysis)?;
    let mut filter = HigsFilter::with_memory(params, cfg.dt, s.memory, FracMemory::Full)?;
    Ok(estimate_df(&mut filter, omega, s.e_hat, &cfg)?)
}

pub fn run(args: DfArgs, file: DfArgs, globals: &Globals) -> anyhow::Result<()> {
    let settings = DfSettings::resolve(args.overlay(file), globals)?;
    let grid = settings.grid();
    let mut jobs = Vec::new();
    let sources: &[SourceArg] = match settings.source {
        SourceArg::Both => &[SourceArg::ClosedForm, SourceArg::Empirical],
        ref s => std::slice::from_ref(s),
    };
    for &source in sources {
        for &alpha in &settings.alpha {
            for &omega in &grid {
                jobs.push((source, alpha, omega));
            }
        }
    }
    let points = sweep(&jobs, |&(source, alpha, omega)| {
        let point = match source {
            SourceArg::Empirical => empirical(&settings, alpha, omega),
            _ => closed_form(&settings, alpha, omega),
        };
        point.with_context(|| format!("alpha = {alpha}, omega = {omega} rad/s"))
    })?;

    let mut out = Output::create(globals)?;
    let rows = jobs.iter().zip(&points).map(|(&(_, alpha, _), p)| {
        vec![
            num(alpha),
            num(p.omega),
            num(p.magnitude_db()),
            num(p.phase_deg()),
            p.gamma.map(num).unwrap_or_default(),
            p.source.as_str().to_string(),
        ]
    });
    out.csv(
        "df.csv",
        &["alpha", "omega_rad_s", "mag_db", "phase_deg", "gamma_rad", "source"],
        rows,
    )?;

    let mut checks = serde_json::Map::new();
    if settings.source == SourceArg::Both {
        let half = points.len() / 2;
        let (closed, sim) = points.split_at(half);
        let mag = closed
            .iter()
            .zip(sim)
            .map(|(c, e)| (e.magnitude() / c.magnitude() - 1.0).abs())
            .fold(0.0, f64::max);
        let phase = closed
            .iter()
            .zip(sim)
            .map(|(c, e)| ((e.phase_deg() - c.phase_deg() + 180.0).rem_euclid(360.0) - 180.0).abs())
            .fold(0.0, f64::max);
        println!("closed form vs empirical: max magnitude error {:.4}%, max phase error {phase:.4} deg", mag * 100.0);
        checks.insert("max_rel_magnitude_error".into(), mag.into());
        checks.insert("max_phase_error_deg".into(), phase.into());
    }
    let manifest = out.finish("df", globals, &settings, checks.into())?;
    println!("wrote {} rows; manifest {}", points.len(), manifest.display());
    Ok(())
}
