use std::f64::consts::TAU;

use anyhow::Context;
use clap::{Args, ValueEnum};
use higs::{harmonic_spectrum, Complex64, ArchA, ArchAConfig, ArchB, ArchBConfig, SimConfig};
use serde::{Deserialize, Serialize};

use super::sweep;
use crate::config::{config_error, overlay, positive, unit_interval, Globals};
use crate::output::{num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicSource {
    /// Quadrature of the steady-state output times the linear part.
    ClosedForm,
    /// Simulation and DFT of the settled output.
    Empirical,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct HarmonicsArgs {
    /// Order of architecture a.
    #[arg(long)]
    alpha: Option<f64>,
    /// HIGS share of architecture b.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kh: Option<f64>,
    /// Corner frequency omega_r in rad/s.
    #[arg(long)]
    wr: Option<f64>,
    /// Input frequency; defaults to 100 omega_r.
    #[arg(long)]
    omega: Option<f64>,
    /// Highest harmonic index reported.
    #[arg(long)]
    harmonics: Option<usize>,
    /// Points of the alpha and beta sweeps over [0, 1].
    #[arg(long)]
    sweep_points: Option<usize>,
    #[arg(long, value_enum)]
    source: Option<HarmonicSource>,
    /// Samples per period for empirical runs.
    #[arg(long)]
    spp: Option<usize>,
    /// Periods discarded before analysis; defaults to about 20 / omega_r seconds.
    #[arg(long)]
    settle: Option<usize>,
    #[arg(long)]
    memory: Option<usize>,
}

overlay!(HarmonicsArgs { alpha, beta, kh, wr, omega, harmonics, sweep_points, source, spp, settle, memory });

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicsSettings {
    pub alpha: f64,
    pub beta: f64,
    pub kh: f64,
    pub wr: f64,
    pub omega: f64,
    pub harmonics: usize,
    pub sweep_points: usize,
    pub source: HarmonicSource,
    pub spp: usize,
    pub settle: usize,
    pub memory: usize,
}

impl HarmonicsSettings {
    fn resolve(args: HarmonicsArgs, globals: &Globals) -> anyhow::Result<Self> {
        let wr = positive("wr", args.wr.unwrap_or(1.0))?;
        let omega = positive("omega", args.omega.unwrap_or(100.0 * wr))?;
        let harmonics = args.harmonics.unwrap_or(15);
        if harmonics < 3 {
            return Err(config_error("harmonics must be at least 3"));
        }
        let sweep_points = args.sweep_points.unwrap_or(21);
        if sweep_points < 2 {
            return Err(config_error("sweep_points must be at least 2"));
        }
        let spp = match globals.dt {
            Some(dt) => (TAU / omega / dt).round() as usize,
            None => args.spp.unwrap_or(1000),
        };
        if spp <= 2 * harmonics {
            return Err(config_error(format!("{spp} samples per period cannot resolve harmonic {harmonics}")));
        }
        let settle_default = ((20.0 * omega / (TAU * wr)).ceil() as usize).max(4);
        Ok(Self {
            alpha: unit_interval("alpha", args.alpha.unwrap_or(0.68))?,
            beta: unit_interval("beta", args.beta.unwrap_or(0.5))?,
            kh: positive("kh", args.kh.unwrap_or(1.0))?,
            wr,
            omega,
            harmonics,
            sweep_points,
            source: args.source.unwrap_or(HarmonicSource::ClosedForm),
            spp,
            settle: args.settle.unwrap_or(settle_default),
            memory: args.memory.unwrap_or(1 << 13),
        })
    }

    fn arch_a(&self, alpha: f64) -> higs::Result<ArchAConfig<f64>> {
        Ok(ArchAConfig::matched(alpha, self.kh, self.wr)?.with_memory(self.memory))
    }

    fn arch_b(&self, beta: f64) -> higs::Result<ArchBConfig<f64>> {
        ArchBConfig::new(beta, self.kh * self.wr, self.kh)
    }

    /// Harmonic coefficients `1..=n` of one architecture.
    fn coefficients(&self, arch: Arch, p: f64, n: usize) -> higs::Result<Vec<Complex64>> {
        match self.source {
            HarmonicSource::ClosedForm => (1..=n)
                .map(|k| match arch {
                    Arch::A => self.arch_a(p)?.harmonic(self.omega, 1.0, k),
                    Arch::B => self.arch_b(p)?.harmonic(self.omega, 1.0, k),
                })
                .collect(),
            HarmonicSource::Empirical => {
                let cfg = SimConfig::for_frequency(self.omega, self.spp, self.settle, 4)?;
                let spectrum = match arch {
                    Arch::A => harmonic_spectrum(&mut ArchA::new(&self.arch_a(p)?, cfg.dt)?, self.omega, 1.0, &cfg, n)?,
                    Arch::B => harmonic_spectrum(&mut ArchB::new(&self.arch_b(p)?, cfg.dt)?, self.omega, 1.0, &cfg, n)?,
                };
                Ok(spectrum.harmonics)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Arch {
    A,
    B,
}

impl Arch {
    fn name(self) -> &'static str {
        match self {
            Arch::A => "a",
            Arch::B => "b",
        }
    }
}

fn relative(c: &[Complex64], n: usize) -> f64 {
    let fundamental = c[0].norm();
    if fundamental == 0.0 {
        0.0
    } else {
        c[n - 1].norm() / fundamental
    }
}

pub fn run(args: HarmonicsArgs, file: HarmonicsArgs, globals: &Globals) -> anyhow::Result<()> {
    let s = HarmonicsSettings::resolve(args.overlay(file), globals)?;
    let pair = [(Arch::A, s.alpha), (Arch::B, s.beta)];
    let spectra = sweep(&pair, |&(arch, p)| {
        s.coefficients(arch, p, s.harmonics)
            .with_context(|| format!("architecture {} at {p}", arch.name()))
    })?;

    let last = s.sweep_points - 1;
    let mut jobs = Vec::new();
    for arch in [Arch::A, Arch::B] {
        for i in 0..=last {
            jobs.push((arch, i as f64 / last as f64));
        }
    }
    let sweeps = sweep(&jobs, |&(arch, p)| {
        s.coefficients(arch, p, 3)
            .with_context(|| format!("architecture {} at {p}", arch.name()))
    })?;

    let mut out = Output::create(globals)?;
    let rows = (1..=s.harmonics).map(|n| {
        vec![
            n.to_string(),
            num(relative(&spectra[0], n)),
            num(relative(&spectra[1], n)),
        ]
    });
    out.csv("harmonics.csv", &["n", "arch_a_relative", "arch_b_relative"], rows)?;
    let rows = jobs.iter().zip(&sweeps).map(|(&(arch, p), c)| {
        vec![
            arch.name().to_string(),
            num(p),
            num(c[0].arg().to_degrees()),
            num(relative(c, 3)),
        ]
    });
    out.csv("third_vs_phase.csv", &["arch", "parameter", "phase_deg", "third_relative"], rows)?;

    let phases = serde_json::json!({
        "arch_a_phase_deg": spectra[0][0].arg().to_degrees(),
        "arch_b_phase_deg": spectra[1][0].arg().to_degrees(),
    });
    println!(
        "arch a (alpha {}) phase {:.2} deg, arch b (beta {}) phase {:.2} deg",
        s.alpha,
        spectra[0][0].arg().to_degrees(),
        s.beta,
        spectra[1][0].arg().to_degrees()
    );
    for n in [3, 5, 7].into_iter().filter(|&n| n <= s.harmonics) {
        println!("  n={n}: a {:.4e}  b {:.4e}", relative(&spectra[0], n), relative(&spectra[1], n));
    }
    let manifest = out.finish("harmonics", globals, &s, phases)?;
    println!("manifest {}", manifest.display());
    Ok(())
}
