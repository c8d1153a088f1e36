//! Stochastic oracles for the analytical gains: signal moments, the channel
//! fourth moment under random phases, and sampled fading/diversity gains of
//! the curve-fit model.
//!
//! Trials are split into (at most) [`BATCHES`] contiguous batches. Batch `b`
//! draws from its own ChaCha stream and batch sums are reduced in batch order,
//! so results are bit-identical for any number of worker threads. Standard
//! errors are batch-means estimates.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harvester::LogPolyFitModel;
use crate::rng::{domain, stream};
use crate::signal::SampledSignal;

pub const BATCHES: usize = 100;

/// Time-average second and fourth moments of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub m2: f64,
    pub m4: f64,
    pub se_m2: f64,
    pub se_m4: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McResult {
    /// Whether `reference` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.estimate - reference).abs() <= k * self.std_error
    }
}

fn batch_bounds(total: usize, batches: usize, b: usize) -> (usize, usize) {
    let base = total / batches;
    let rem = total % batches;
    let start = b * base + b.min(rem);
    let len = base + usize::from(b < rem);
    (start, start + len)
}

/// Overall mean and batch-means standard error from `(sum, count)` pairs.
fn reduce_batches(batches: &[(f64, usize)]) -> (f64, f64) {
    let total: usize = batches.iter().map(|b| b.1).sum();
    let sum: f64 = batches.iter().map(|b| b.0).sum();
    let mean = sum / total as f64;
    let k = batches.len();
    if k < 2 {
        return (mean, 0.0);
    }
    let spread: f64 = batches
        .iter()
        .map(|&(s, n)| {
            let dev = s / n as f64 - mean;
            (n as f64 * dev).powi(2)
        })
        .sum();
    let var = spread / (total as f64).powi(2) * k as f64 / (k - 1) as f64;
    (mean, var.sqrt())
}

/// Sample moments of `y²` and `y⁴`. Standard errors come from contiguous
/// batches, which absorbs the correlation between neighboring samples.
pub fn estimate_moments(sig: &SampledSignal) -> Result<MomentEstimate> {
    let n = sig.samples.len();
    if n < 2 {
        return Err(Error::SignalTooShort(format!("need at least 2 samples, got {n}")));
    }
    let k = BATCHES.min(n);
    let (b2, b4): (Vec<_>, Vec<_>) = (0..k)
        .map(|b| {
            let (lo, hi) = batch_bounds(n, k, b);
            let chunk = &sig.samples[lo..hi];
            let s2: f64 = chunk.iter().map(|y| y * y).sum();
            let s4: f64 = chunk.iter().map(|y| (y * y) * (y * y)).sum();
            ((s2, hi - lo), (s4, hi - lo))
        })
        .unzip();
    let (m2, se_m2) = reduce_batches(&b2);
    let (m4, se_m4) = reduce_batches(&b4);
    Ok(MomentEstimate {
        m2,
        m4,
        se_m2,
        se_m4,
        count: n,
    })
}

/// Runs `trial` `trials` times across fixed batches.
pub fn run_trials<F>(trials: u64, seed: u64, trial: F) -> Result<McResult>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if trials < 1 {
        return Err(invalid("trials must be >= 1"));
    }
    let total = trials as usize;
    let k = BATCHES.min(total);
    let batches: Vec<(f64, usize)> = (0..k)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = batch_bounds(total, k, b);
            let mut rng = stream(seed, domain::MC_BATCH, b as u64);
            let sum: f64 = (lo..hi).map(|_| trial(&mut rng)).sum();
            (sum, hi - lo)
        })
        .collect();
    let (estimate, std_error) = reduce_batches(&batches);
    Ok(McResult {
        estimate,
        std_error,
        trials,
        seed,
    })
}

/// `|Σ_m h_m e^{jψ_m}|²`, expanded pairwise so that a single antenna gives
/// exactly `|h_1|²`.
fn channel_gain(channel: &[Complex64], phases: &[f64]) -> f64 {
    let mut g: f64 = channel.iter().map(|h| h.norm_sqr()).sum();
    for i in 0..channel.len() {
        for j in i + 1..channel.len() {
            let cross = channel[i] * channel[j].conj() * Complex64::from_polar(1.0, phases[i] - phases[j]);
            g += 2.0 * cross.re;
        }
    }
    g
}

fn draw_phases(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for p in out.iter_mut() {
        *p = rng.random::<f64>() * TAU;
    }
}

/// Estimates `E|h|⁴ / M²` for random independent uniform antenna phases.
pub fn mc_channel_fourth_moment(channel: &[Complex64], trials: u64, seed: u64) -> Result<McResult> {
    if channel.is_empty() {
        return Err(invalid("at least one antenna is required"));
    }
    let m = channel.len();
    let norm = 1.0 / (m * m) as f64;
    run_trials(trials, seed, |rng| {
        let mut phases = [0.0; 64];
        let mut heap;
        let phases: &mut [f64] = if m <= 64 {
            &mut phases[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        draw_phases(rng, phases);
        let g = channel_gain(channel, phases);
        g * g * norm
    })
}

fn check_model(m: &LogPolyFitModel, p_rf_avg: f64) -> Result<f64> {
    m.validate()?;
    if !(p_rf_avg > 0.0 && p_rf_avg.is_finite()) {
        return Err(invalid(format!("average RF power must be > 0, got {p_rf_avg}")));
    }
    Ok(m.polynomial_power(p_rf_avg))
}

/// Sampled fading gain: mean of `eval(X P̄) / poly(P̄)` with `X ~ Exp(1)`
/// drawn by inverse CDF, `X = -ln(1 - U)`.
pub fn mc_fading_gain(m: &LogPolyFitModel, p_rf_avg: f64, trials: u64, seed: u64) -> Result<McResult> {
    let reference = check_model(m, p_rf_avg)?;
    run_trials(trials, seed, |rng| {
        let u: f64 = rng.random();
        let x = -(-u).ln_1p();
        m.eval(x * p_rf_avg) / reference
    })
}

/// Sampled transmit-diversity gain: mean of `eval(g P̄) / poly(P̄)` with
/// `g = |Σ h_m e^{jψ_m}|² / M`.
pub fn mc_td_gain(
    m: &LogPolyFitModel,
    p_rf_avg: f64,
    channel: &[Complex64],
    trials: u64,
    seed: u64,
) -> Result<McResult> {
    let reference = check_model(m, p_rf_avg)?;
    if channel.is_empty() {
        return Err(invalid("at least one antenna is required"));
    }
    let inv_m = 1.0 / channel.len() as f64;
    run_trials(trials, seed, |rng| {
        let mut phases = vec![0.0; channel.len()];
        draw_phases(rng, &mut phases);
        let g = channel_gain(channel, &phases) * inv_m;
        m.eval(g * p_rf_avg) / reference
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, TransmitConfig, WaveformSpec};

    fn unit(m: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0); m]
    }

    #[test]
    fn cw_moments() {
        let sig = synthesize(
            &WaveformSpec::cw(1.0, 1e3),
            &TransmitConfig::equal_gain(1, 1e3),
            0.1,
            64e3,
            0,
        )
        .unwrap();
        let e = estimate_moments(&sig).unwrap();
        assert!((e.m2 - 1.0).abs() < 1e-3);
        assert!((e.m4 - 1.5).abs() < 1e-3);
    }

    #[test]
    fn two_tone_moments_against_dense_average() {
        // explicit two-tone waveform, averaged on a much denser grid
        let (f0, df) = (40e3, 1e3);
        let dense_n = 1_000_000;
        let mut m4_dense = 0.0;
        for i in 0..dense_n {
            let t = i as f64 / dense_n as f64 / df;
            let y = (TAU * f0 * t).cos() + (TAU * (f0 + df) * t).cos();
            m4_dense += y.powi(4);
        }
        m4_dense /= dense_n as f64;
        let sig = synthesize(
            &WaveformSpec::multisine(1.0, f0, 2, df),
            &TransmitConfig::equal_gain(1, df),
            1.0 / df,
            64.0 * (f0 + df),
            0,
        )
        .unwrap();
        let e = estimate_moments(&sig).unwrap();
        assert!((m4_dense - 2.25).abs() < 1e-3);
        assert!((e.m4 - m4_dense).abs() < 1e-3, "{} vs {}", e.m4, m4_dense);
        assert!((e.m2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_signal() {
        let sig = SampledSignal::new(1.0, vec![0.0; 500]).unwrap();
        let e = estimate_moments(&sig).unwrap();
        assert_eq!((e.m2, e.m4), (0.0, 0.0));
        assert!(estimate_moments(&SampledSignal::new(1.0, vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn single_antenna_is_exact() {
        let r = mc_channel_fourth_moment(&unit(1), 10_000, 5).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
        let m = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3e-4)).unwrap();
        let td = mc_td_gain(&m, 1e-5, &unit(1), 10_000, 5).unwrap();
        assert_eq!(td.estimate, 1.0);
    }

    #[test]
    fn identity_model_gains_are_one() {
        let m = LogPolyFitModel::new(0.0, 1.0, 0.0, (1e-7, 1e-3)).unwrap();
        let f = mc_fading_gain(&m, 1e-5, 200_000, 1).unwrap();
        assert!(f.agrees_with(1.0, 3.0), "{f:?}");
        let t = mc_td_gain(&m, 1e-5, &unit(2), 200_000, 1).unwrap();
        assert!(t.agrees_with(1.0, 3.0), "{t:?}");
    }

    #[test]
    fn gamma_three_from_fading() {
        // a = 0, b = 2 gives d = 2 at any power; E[X²] = Γ(3) = 2
        let m = LogPolyFitModel::new(0.0, 2.0, 0.0, (1e-7, 1e-3)).unwrap();
        let r = mc_fading_gain(&m, 1e-5, 1_000_000, 2).unwrap();
        assert!(r.agrees_with(2.0, 3.0), "{r:?}");
    }

    #[test]
    fn balanced_channels_beat_imbalanced() {
        let balanced = mc_channel_fourth_moment(&unit(2), 200_000, 4).unwrap();
        let skewed = mc_channel_fourth_moment(
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            200_000,
            4,
        )
        .unwrap();
        assert!((skewed.estimate - 0.25).abs() < 1e-12);
        assert!(balanced.estimate > skewed.estimate);
    }

    #[test]
    fn uneven_batches() {
        assert_eq!(batch_bounds(1003, 100, 0), (0, 11));
        assert_eq!(batch_bounds(1003, 100, 2), (22, 33));
        assert_eq!(batch_bounds(1003, 100, 99), (993, 1003));
        let r = run_trials(7, 0, |_| 1.0).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert!(run_trials(0, 0, |_| 1.0).is_err());
    }
}
