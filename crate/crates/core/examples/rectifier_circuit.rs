//! Steady-state harvested power of the 2.45 GHz rectifier for CW, multisine
//! and two-antenna phase sweeping, plus a short transient trace.
//!
//! Run with `--release`; each random-phase point simulates a few hundred
//! thousand time steps per realization.

use wptlab::circuit::{self, CircuitParams, CircuitScheme, DriveSettings, SimSettings};
use wptlab::signal::{default_sample_rate, synthesize, WaveformSpec};
use wptlab::units::dbm_to_watts;

fn main() -> wptlab::Result<()> {
    let c = CircuitParams::default();
    let drive = DriveSettings::default();
    let sim = SimSettings::default();
    let schemes = [
        CircuitScheme::Cw,
        CircuitScheme::Multisine { n: 4 },
        CircuitScheme::TdCw { m: 2 },
    ];
    let powers = [-30.0, -20.0, -10.0];
    let rows = circuit::sweep(&c, &schemes, &powers, 10, 1, &drive, &sim)?;
    println!("{:<14} {:>8} {:>12} {:>10} {:>8}", "scheme", "P [dBm]", "p_dc [W]", "efficiency", "e_td");
    for r in &rows {
        println!(
            "{:<14} {:>8} {:>12.4e} {:>10.4} {:>8}",
            r.scheme,
            r.prf_dbm,
            r.p_dc.unwrap_or(f64::NAN),
            r.efficiency.unwrap_or(f64::NAN),
            r.e_td.map_or(String::new(), |e| format!("{e:.3}"))
        );
    }

    // 2 µs of CW at -20 dBm on the frequency-scaled circuit
    let (w, cfg) = CircuitScheme::Cw.drive(dbm_to_watts(-20.0), &drive);
    let w = WaveformSpec {
        carrier_hz: w.carrier_hz * c.freq_scale,
        ..w
    };
    let fs = default_sample_rate(&w, &cfg, 64);
    let sig = synthesize(&w, &cfg, 2.1e-6, fs, 0)?;
    let trace = circuit::transient(&c.carrier_scaled(), &sig, 1.0 / fs, 2e-6)?;
    let last = trace.len() - 1;
    println!(
        "\ntransient: {} steps, v_out(2 µs) = {:.4} V, max diode-law residual {:.1e} A",
        trace.len() - 1,
        trace.v_out[last],
        trace.max_residual()
    );
    Ok(())
}
