//! Transmit/receive signal synthesis for CW, multisine, modulated and
//! phase-sweeping transmit-diversity schemes.
//!
//! The received signal is
//! `y(t) = √(2P/M) Re{Λ^{-1/2} h(t) s(t) e^{jω₀t}}` with
//! `h(t) = Σ_m h_m e^{jψ_m(t)}`. Each phase is held for
//! `⌊sample_rate / phase_rate⌋` samples and then redrawn uniformly on
//! `[0, 2π)`. The first antenna's phase is held at zero; only relative phases
//! affect `|h(t)|`.

mod io;

pub use io::{read_binary, read_csv, write_binary, write_csv};

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{domain, stream};

/// Unit-power input distribution for energy modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulationDist {
    /// Circularly symmetric complex Gaussian, CN(0, 1).
    Cscg,
    /// Real Gaussian, N(0, 1).
    RealGaussian,
    /// Amplitude `l` with probability `1/l²`, else 0; uniform phase.
    Flash { l: f64 },
}

impl ModulationDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModulationDist::Flash { l } if !(l >= 1.0 && l.is_finite()) => {
                Err(invalid(format!("flash parameter l must be >= 1, got {l}")))
            }
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match *self {
            ModulationDist::Cscg => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            ModulationDist::RealGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
            ModulationDist::Flash { l } => {
                let on = rng.random::<f64>() < 1.0 / (l * l);
                let theta = rng.random::<f64>() * TAU;
                if on {
                    Complex64::from_polar(l, theta)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }
}

/// I.i.d. unit-power symbols drawn from `dist`.
pub fn sample_modulation(dist: ModulationDist, count: usize, seed: u64) -> Result<Vec<Complex64>> {
    dist.validate()?;
    if count == 0 {
        return Err(invalid("symbol count must be >= 1"));
    }
    let mut rng = stream(seed, domain::SYMBOLS, 0);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

/// Baseband signal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WaveformFamily {
    Cw,
    /// In-phase multisine `Σ_{n<N} e^{j2π nΔf t} / √N`.
    Multisine { n_tones: u32, delta_f: f64 },
    /// Piecewise-constant symbols at `symbol_rate`.
    Modulated { dist: ModulationDist, symbol_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub family: WaveformFamily,
    /// Average transmit power P (W).
    pub power: f64,
    /// Carrier frequency f₀ (Hz).
    pub carrier_hz: f64,
}

impl WaveformSpec {
    pub fn cw(power: f64, carrier_hz: f64) -> Self {
        Self {
            family: WaveformFamily::Cw,
            power,
            carrier_hz,
        }
    }

    pub fn multisine(power: f64, carrier_hz: f64, n_tones: u32, delta_f: f64) -> Self {
        Self {
            family: WaveformFamily::Multisine { n_tones, delta_f },
            power,
            carrier_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(invalid(format!("transmit power must be > 0, got {}", self.power)));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(invalid("carrier frequency must be > 0"));
        }
        match self.family {
            WaveformFamily::Cw => Ok(()),
            WaveformFamily::Multisine { n_tones, delta_f } => {
                if n_tones < 1 || !(delta_f > 0.0) {
                    Err(invalid("multisine needs n_tones >= 1 and delta_f > 0"))
                } else {
                    Ok(())
                }
            }
            WaveformFamily::Modulated { dist, symbol_rate } => {
                dist.validate()?;
                if symbol_rate > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("symbol rate must be > 0"))
                }
            }
        }
    }

    /// Width of the occupied band above the carrier (Hz).
    pub fn bandwidth(&self) -> f64 {
        match self.family {
            WaveformFamily::Cw => 0.0,
            WaveformFamily::Multisine { n_tones, delta_f } => (n_tones - 1) as f64 * delta_f,
            WaveformFamily::Modulated { symbol_rate, .. } => symbol_rate,
        }
    }

    /// Envelope period `1/Δf` for multisine waveforms.
    pub fn period(&self) -> Option<f64> {
        match self.family {
            WaveformFamily::Multisine { delta_f, .. } => Some(1.0 / delta_f),
            _ => None,
        }
    }
}

/// M-antenna phase-sweeping transmitter and its channel to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitConfig {
    /// Complex gain `h_m` of each antenna.
    pub channel: Vec<Complex64>,
    /// Phase redraw frequency (Hz).
    pub phase_rate: f64,
    /// Linear path loss Λ >= 1.
    pub path_loss: f64,
}

impl TransmitConfig {
    /// `m` antennas with `h_m = 1` and no path loss.
    pub fn equal_gain(m: usize, phase_rate: f64) -> Self {
        Self {
            channel: vec![Complex64::new(1.0, 0.0); m],
            phase_rate,
            path_loss: 1.0,
        }
    }

    pub fn m_antennas(&self) -> usize {
        self.channel.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel.is_empty() {
            return Err(invalid("at least one antenna is required"));
        }
        if !(self.phase_rate > 0.0 && self.phase_rate.is_finite()) {
            return Err(invalid("phase rate must be > 0"));
        }
        if !(self.path_loss >= 1.0 && self.path_loss.is_finite()) {
            return Err(invalid(format!("path loss must be >= 1, got {}", self.path_loss)));
        }
        Ok(())
    }
}

/// `h = Σ_m h_m e^{jψ_m}`.
pub fn effective_channel(cfg: &TransmitConfig, phases: &[f64]) -> Result<Complex64> {
    if phases.len() != cfg.channel.len() {
        return Err(invalid(format!(
            "expected {} phases, got {}",
            cfg.channel.len(),
            phases.len()
        )));
    }
    Ok(cfg
        .channel
        .iter()
        .zip(phases)
        .map(|(h, &psi)| h * Complex64::from_polar(1.0, psi))
        .sum())
}

/// Real receive-antenna signal in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid("sample rate must be > 0"));
        }
        Ok(Self { sample_rate, samples })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time average of `y²`.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|y| y * y).sum::<f64>() / self.samples.len() as f64
    }
}

/// Samples per phase hold interval, `⌊sample_rate / phase_rate⌋` (at least 1).
pub fn hold_samples(sample_rate: f64, phase_rate: f64) -> usize {
    // tolerate sample_rate/phase_rate landing a hair under an integer
    ((sample_rate / phase_rate) * (1.0 + 1e-12)).floor().max(1.0) as usize
}

/// Smallest rate that gives at least `per_carrier` samples per carrier period
/// and is an integer multiple of the envelope spacing and the phase rate
/// (when those are whole numbers of Hz).
pub fn default_sample_rate(w: &WaveformSpec, cfg: &TransmitConfig, per_carrier: u32) -> f64 {
    let min_rate = per_carrier as f64 * (w.carrier_hz + w.bandwidth());
    let mut grid = as_whole_hz(cfg.phase_rate);
    if let WaveformFamily::Multisine { delta_f, .. } = w.family {
        grid = match (grid, as_whole_hz(delta_f)) {
            (Some(g), Some(d)) => Some(lcm(g, d)),
            (g, d) => g.or(d),
        };
    }
    match grid {
        Some(g) => (min_rate / g as f64).ceil() * g as f64,
        None => min_rate.ceil(),
    }
}

fn as_whole_hz(f: f64) -> Option<u64> {
    (f >= 1.0 && (f - f.round()).abs() < 1e-9 * f).then(|| f.round() as u64)
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Time-domain receive signal for a waveform sent through the phase-sweeping
/// transmitter. Pure in all arguments including `seed`.
pub fn synthesize(
    w: &WaveformSpec,
    cfg: &TransmitConfig,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<SampledSignal> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid("duration must be > 0"));
    }
    let source = SignalStream::new(w, cfg, sample_rate, seed)?;
    if let Some(period) = w.period() {
        if duration < period * (1.0 - 1e-9) {
            return Err(Error::SignalTooShort(format!(
                "multisine needs at least one period ({period:e} s), got {duration:e} s"
            )));
        }
    }
    let count = (duration * sample_rate).round() as usize;
    SampledSignal::new(sample_rate, source.take(count).collect())
}

/// Endless sample-by-sample version of [`synthesize`]; its first `n` samples
/// equal `synthesize` over `n / sample_rate` seconds.
#[derive(Debug, Clone)]
pub struct SignalStream {
    cfg: TransmitConfig,
    sample_rate: f64,
    carrier_hz: f64,
    amplitude: f64,
    hold: usize,
    phase_rngs: Vec<ChaCha8Rng>,
    phases: Vec<f64>,
    h: Complex64,
    tones: u32,
    delta_f: f64,
    symbols: Option<(ModulationDist, f64, ChaCha8Rng)>,
    symbol: Complex64,
    symbol_index: Option<usize>,
    index: usize,
}

impl SignalStream {
    pub fn new(w: &WaveformSpec, cfg: &TransmitConfig, sample_rate: f64, seed: u64) -> Result<Self> {
        w.validate()?;
        cfg.validate()?;
        let required = 2.0 * (w.carrier_hz + w.bandwidth());
        if !(sample_rate > required && sample_rate.is_finite()) {
            return Err(Error::Nyquist { sample_rate, required });
        }
        let m = cfg.m_antennas();
        let (tones, delta_f) = match w.family {
            WaveformFamily::Multisine { n_tones, delta_f } => (n_tones, delta_f),
            _ => (1, 0.0),
        };
        let symbols = match w.family {
            WaveformFamily::Modulated { dist, symbol_rate } => {
                Some((dist, symbol_rate, stream(seed, domain::SYMBOLS, 0)))
            }
            _ => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            sample_rate,
            carrier_hz: w.carrier_hz,
            amplitude: (2.0 * w.power / m as f64).sqrt() / cfg.path_loss.sqrt(),
            hold: hold_samples(sample_rate, cfg.phase_rate),
            phase_rngs: (1..m)
                .map(|idx| stream(seed, domain::ANTENNA_PHASE, idx as u64))
                .collect(),
            phases: vec![0.0; m],
            h: Complex64::new(0.0, 0.0),
            tones,
            delta_f,
            symbols,
            symbol: Complex64::new(0.0, 0.0),
            symbol_index: None,
            index: 0,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Upper bound on `|y|` (infinite for Gaussian symbols).
    pub fn peak_bound(&self) -> f64 {
        let h_sum: f64 = self.cfg.channel.iter().map(|h| h.norm()).sum();
        let s_peak = match self.symbols {
            Some((ModulationDist::Flash { l }, ..)) => l,
            Some(_) => f64::INFINITY,
            None => (self.tones as f64).sqrt(),
        };
        self.amplitude * h_sum * s_peak
    }
}

impl Iterator for SignalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let i = self.index;
        self.index += 1;
        if i.is_multiple_of(self.hold) {
            for (psi, rng) in self.phases[1..].iter_mut().zip(self.phase_rngs.iter_mut()) {
                *psi = rng.random::<f64>() * TAU;
            }
            self.h = effective_channel(&self.cfg, &self.phases).ok()?;
        }
        let s = if let Some((dist, symbol_rate, rng)) = self.symbols.as_mut() {
            let k = ((i as f64) * *symbol_rate / self.sample_rate).floor() as usize;
            while self.symbol_index.is_none_or(|j| j < k) {
                self.symbol = dist.sample(rng);
                self.symbol_index = Some(self.symbol_index.map_or(0, |j| j + 1));
            }
            self.symbol
        } else if self.tones > 1 {
            let norm = 1.0 / (self.tones as f64).sqrt();
            (0..self.tones)
                .map(|n| {
                    let cycles = (n as f64 * self.delta_f * i as f64 / self.sample_rate).fract();
                    Complex64::from_polar(norm, TAU * cycles)
                })
                .sum()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let carrier = Complex64::from_polar(1.0, TAU * (self.carrier_hz * i as f64 / self.sample_rate).fract());
        Some(self.amplitude * (self.h * s * carrier).re)
    }
}
