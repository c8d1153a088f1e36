//! Steady-state harvested power: drive the rectifier with synthesized
//! signals, wait for the output to settle and average over an analysis
//! window, repeated over independent phase realizations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{Engine, Integrator};
use super::CircuitParams;
use crate::error::{invalid, Error, Result};
use crate::rng::{child_seed, domain};
use crate::signal::{default_sample_rate, SignalStream, TransmitConfig, WaveformFamily, WaveformSpec};
use crate::units::dbm_to_watts;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    /// Time steps per (scaled) carrier period.
    pub samples_per_carrier: u32,
    /// Settling budget in windows before giving up.
    pub max_windows: u32,
    /// Windows averaged after settling.
    pub analysis_windows: u32,
    /// Relative agreement of window means that counts as settled.
    pub settle_tol: f64,
    pub integrator: Integrator,
    /// Newton tolerance on the diode current (A).
    pub newton_tol: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            samples_per_carrier: 64,
            max_windows: 200,
            analysis_windows: 20,
            settle_tol: 1e-4,
            integrator: Integrator::default(),
            newton_tol: 1e-12,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_carrier < 32 {
            return Err(invalid("need at least 32 samples per carrier period"));
        }
        if self.max_windows < 2 || self.analysis_windows < 1 {
            return Err(invalid("max_windows must be >= 2 and analysis_windows >= 1"));
        }
        if !(self.settle_tol > 0.0 && self.newton_tol > 0.0) {
            return Err(invalid("tolerances must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    /// Mean over realizations of `v̄_out² / R_load` (W).
    pub p_dc: f64,
    /// Standard error of `p_dc` across realizations (0 for one realization
    /// or a deterministic drive).
    pub p_dc_std_error: f64,
    pub v_out_avg: f64,
    /// Longest settling time over realizations (s).
    pub settle_time: f64,
    pub realizations: u32,
    /// Mean power delivered by the source into the matching network (W).
    pub p_in: f64,
    /// Largest reverse diode voltage seen in the analysis windows (V).
    pub max_reverse_v: f64,
    /// Reverse voltage exceeded the breakdown rating, which is not modeled.
    pub unmodeled: bool,
}

struct Realization {
    p_dc: f64,
    v_out: f64,
    settle_time: f64,
    p_in: f64,
    max_reverse_v: f64,
}

fn analysis_window(w: &WaveformSpec, cfg: &TransmitConfig) -> f64 {
    match w.family {
        WaveformFamily::Multisine { delta_f, .. } => 1.0 / delta_f,
        WaveformFamily::Modulated { symbol_rate, .. } => (1.0 / symbol_rate).max(1.0 / cfg.phase_rate),
        WaveformFamily::Cw => 1.0 / cfg.phase_rate,
    }
}

fn run_realization(
    c: &CircuitParams,
    w: &WaveformSpec,
    cfg: &TransmitConfig,
    sample_rate: f64,
    window: usize,
    coupled: bool,
    seed: u64,
    s: &SimSettings,
) -> Result<Realization> {
    let mut drive = SignalStream::new(w, cfg, sample_rate, seed)?;
    let gain = 2.0 * c.r_ant.sqrt();
    let step = 1.0 / sample_rate;
    let mut lo = Engine::new(c, s.integrator, step, 0.0, s.newton_tol)?;
    let mut hi = if coupled {
        let mut peak = drive.peak_bound();
        if !peak.is_finite() {
            let h_sum: f64 = cfg.channel.iter().map(|h| h.norm()).sum();
            peak = 5.0 * h_sum * (2.0 * w.power / cfg.path_loss / cfg.m_antennas() as f64).sqrt();
        }
        Some(Engine::new(c, s.integrator, step, 2.0 * gain * peak, s.newton_tol)?)
    } else {
        None
    };

    let mut v1_prev = gain * drive.next().unwrap_or(0.0);
    let mut prev_mean = f64::NAN;
    let mut settled_after = None;
    for win in 1..=s.max_windows {
        let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
        for _ in 0..window {
            let v1 = gain * drive.next().unwrap_or(0.0);
            sum_lo += lo.advance(v1_prev, v1)?.v_out;
            if let Some(e) = hi.as_mut() {
                sum_hi += e.advance(v1_prev, v1)?.v_out;
            }
            v1_prev = v1;
        }
        let m_lo = sum_lo / window as f64;
        let reference = if coupled { sum_hi / window as f64 } else { prev_mean };
        let scale = m_lo.abs().max(reference.abs());
        if (m_lo - reference).abs() <= s.settle_tol * scale + 1e-15 {
            settled_after = Some(win);
            break;
        }
        prev_mean = m_lo;
    }
    let settled_after = settled_after.ok_or(Error::SettleTimeout {
        windows: s.max_windows as usize,
    })?;

    let n = window * s.analysis_windows as usize;
    let (mut sum_v, mut sum_p_in, mut max_rev) = (0.0, 0.0, 0.0f64);
    for _ in 0..n {
        let v1 = gain * drive.next().unwrap_or(0.0);
        let out = lo.advance(v1_prev, v1)?;
        sum_v += out.v_out;
        sum_p_in += out.v_a * (v1 - out.v_a) / c.r_ant;
        max_rev = max_rev.max(out.v_out - out.v_in);
        v1_prev = v1;
    }
    let v_out = sum_v / n as f64;
    Ok(Realization {
        p_dc: v_out * v_out / c.r_load,
        v_out,
        settle_time: (settled_after as usize * window) as f64 * step,
        p_in: sum_p_in / n as f64,
        max_reverse_v: max_rev,
    })
}

pub fn steady_state_pdc(
    c: &CircuitParams,
    w: &WaveformSpec,
    cfg: &TransmitConfig,
    realizations: u32,
    seed: u64,
) -> Result<SteadyStateResult> {
    steady_state_pdc_with(c, w, cfg, realizations, seed, &SimSettings::default())
}

/// Mean steady-state DC power over `realizations` independent drives.
///
/// `w` and `c` are given at the physical carrier; the carrier and matching
/// elements are compressed by `c.freq_scale` internally. A single-antenna
/// drive without random symbols is deterministic, so it is simulated once and
/// settles when consecutive window means agree. Random drives never repeat
/// from window to window; they are run from an empty and an over-charged
/// output capacitor at once and count as settled when the two window means
/// agree.
pub fn steady_state_pdc_with(
    c: &CircuitParams,
    w: &WaveformSpec,
    cfg: &TransmitConfig,
    realizations: u32,
    seed: u64,
    s: &SimSettings,
) -> Result<SteadyStateResult> {
    c.validate()?;
    w.validate()?;
    cfg.validate()?;
    s.validate()?;
    if realizations < 1 {
        return Err(invalid("realizations must be >= 1"));
    }
    let scaled = c.carrier_scaled();
    let w_sim = WaveformSpec {
        carrier_hz: w.carrier_hz * c.freq_scale,
        ..*w
    };
    let random = cfg.m_antennas() > 1 || matches!(w.family, WaveformFamily::Modulated { .. });
    let sample_rate = default_sample_rate(&w_sim, cfg, s.samples_per_carrier);
    let window = (analysis_window(w, cfg) * sample_rate).round().max(1.0) as usize;
    let runs = if random { realizations } else { 1 };
    let results: Vec<Realization> = (0..runs)
        .into_par_iter()
        .map(|r| {
            run_realization(
                &scaled,
                &w_sim,
                cfg,
                sample_rate,
                window,
                random,
                child_seed(seed, domain::REALIZATION, u64::from(r)),
                s,
            )
        })
        .collect::<Result<_>>()?;

    let k = results.len() as f64;
    let mean = |f: fn(&Realization) -> f64| results.iter().map(f).sum::<f64>() / k;
    let p_dc = mean(|r| r.p_dc);
    let p_dc_std_error = if results.len() > 1 {
        let var = results.iter().map(|r| (r.p_dc - p_dc).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    let max_reverse_v = results.iter().fold(0.0f64, |m, r| m.max(r.max_reverse_v));
    Ok(SteadyStateResult {
        p_dc,
        p_dc_std_error,
        v_out_avg: mean(|r| r.v_out),
        settle_time: results.iter().fold(0.0f64, |m, r| m.max(r.settle_time)),
        realizations,
        p_in: mean(|r| r.p_in),
        max_reverse_v,
        unmodeled: max_reverse_v > c.breakdown_v,
    })
}

/// Physical drive parameters shared by every scheme in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSettings {
    pub carrier_hz: f64,
    pub delta_f: f64,
    pub phase_rate: f64,
}

impl Default for DriveSettings {
    /// 2.45 GHz carrier, 2.5 MHz tone spacing and phase rate.
    fn default() -> Self {
        Self {
            carrier_hz: 2.45e9,
            delta_f: 2.5e6,
            phase_rate: 2.5e6,
        }
    }
}

/// Transmission scheme for circuit sweeps. Parses from `cw`, `multisine:N`,
/// `td-cw:M` and `td-multisine:M:N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitScheme {
    Cw,
    Multisine { n: u32 },
    TdCw { m: u32 },
    TdMultisine { m: u32, n: u32 },
}

impl CircuitScheme {
    pub fn antennas(&self) -> u32 {
        match *self {
            CircuitScheme::TdCw { m } | CircuitScheme::TdMultisine { m, .. } => m,
            _ => 1,
        }
    }

    /// The same waveform from a single antenna.
    pub fn single_antenna(&self) -> CircuitScheme {
        match *self {
            CircuitScheme::TdCw { .. } => CircuitScheme::Cw,
            CircuitScheme::TdMultisine { n, .. } => CircuitScheme::Multisine { n },
            other => other,
        }
    }

    pub fn is_diversity(&self) -> bool {
        matches!(self, CircuitScheme::TdCw { .. } | CircuitScheme::TdMultisine { .. })
    }

    /// Waveform and transmitter at total received power `power` (W).
    /// Multisine tones are centered on the carrier.
    pub fn drive(&self, power: f64, d: &DriveSettings) -> (WaveformSpec, TransmitConfig) {
        let cfg = TransmitConfig::equal_gain(self.antennas() as usize, d.phase_rate);
        let w = match *self {
            CircuitScheme::Multisine { n } | CircuitScheme::TdMultisine { n, .. } => WaveformSpec::multisine(
                power,
                d.carrier_hz - 0.5 * f64::from(n - 1) * d.delta_f,
                n,
                d.delta_f,
            ),
            _ => WaveformSpec::cw(power, d.carrier_hz),
        };
        (w, cfg)
    }
}

impl fmt::Display for CircuitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CircuitScheme::Cw => write!(f, "cw"),
            CircuitScheme::Multisine { n } => write!(f, "multisine:{n}"),
            CircuitScheme::TdCw { m } => write!(f, "td-cw:{m}"),
            CircuitScheme::TdMultisine { m, n } => write!(f, "td-multisine:{m}:{n}"),
        }
    }
}

impl FromStr for CircuitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<u32> {
            match p.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(invalid(format!("bad count {p:?} in scheme {s:?}"))),
            }
        };
        match parts.as_slice() {
            ["cw"] => Ok(CircuitScheme::Cw),
            ["multisine", n] => Ok(CircuitScheme::Multisine { n: num(n)? }),
            ["td-cw", m] => Ok(CircuitScheme::TdCw { m: num(m)? }),
            ["td-multisine", m, n] => Ok(CircuitScheme::TdMultisine {
                m: num(m)?,
                n: num(n)?,
            }),
            _ => Err(invalid(format!(
                "unknown scheme {s:?} (expected cw, multisine:N, td-cw:M or td-multisine:M:N)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitRow {
    pub scheme: String,
    pub prf_dbm: f64,
    pub p_dc: Option<f64>,
    /// `p_dc` over the average received RF power.
    pub efficiency: Option<f64>,
    /// Diversity rows only: `p_dc` over the single-antenna `p_dc` at the same
    /// power, when that scheme is part of the sweep.
    pub e_td: Option<f64>,
    pub unmodeled: bool,
    pub settle_time: Option<f64>,
    pub error: Option<String>,
}

/// Steady-state power for every `(scheme, power)` pair, scheme-major. Every
/// row uses the same `seed`, so diversity and single-antenna rows share
/// random streams where they overlap.
pub fn sweep(
    c: &CircuitParams,
    schemes: &[CircuitScheme],
    prf_dbm: &[f64],
    realizations: u32,
    seed: u64,
    drive: &DriveSettings,
    s: &SimSettings,
) -> Result<Vec<CircuitRow>> {
    if schemes.is_empty() || prf_dbm.is_empty() {
        return Err(invalid("sweep needs at least one scheme and one power"));
    }
    c.validate()?;
    s.validate()?;
    let pairs: Vec<(CircuitScheme, f64)> = schemes
        .iter()
        .flat_map(|&sc| prf_dbm.iter().map(move |&p| (sc, p)))
        .collect();
    let mut rows: Vec<CircuitRow> = pairs
        .par_iter()
        .map(|&(scheme, p)| {
            let p_w = dbm_to_watts(p);
            let (w, cfg) = scheme.drive(p_w, drive);
            match steady_state_pdc_with(c, &w, &cfg, realizations, seed, s) {
                Ok(r) => CircuitRow {
                    scheme: scheme.to_string(),
                    prf_dbm: p,
                    p_dc: Some(r.p_dc),
                    efficiency: Some(r.p_dc / p_w),
                    e_td: None,
                    unmodeled: r.unmodeled,
                    settle_time: Some(r.settle_time),
                    error: None,
                },
                Err(e) => CircuitRow {
                    scheme: scheme.to_string(),
                    prf_dbm: p,
                    p_dc: None,
                    efficiency: None,
                    e_td: None,
                    unmodeled: false,
                    settle_time: None,
                    error: Some(format!("{scheme} at {p} dBm: {e}")),
                },
            }
        })
        .collect();

    for (i, &(scheme, p)) in pairs.iter().enumerate() {
        if !scheme.is_diversity() {
            continue;
        }
        let base = scheme.single_antenna();
        let single = pairs
            .iter()
            .position(|&(sc, q)| sc == base && q == p)
            .and_then(|j| rows[j].p_dc);
        if let (Some(td), Some(one)) = (rows[i].p_dc, single) {
            if one > 0.0 {
                rows[i].e_td = Some(td / one);
            }
        }
    }
    Ok(rows)
}
