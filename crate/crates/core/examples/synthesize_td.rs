//! Synthesize received signals for several designs, estimate their moments and
//! compare the waveform gain with theory. Also writes a signal file.

use wptlab::gain::{g_td, g_wf};
use wptlab::monte_carlo::estimate_moments;
use wptlab::signal::{default_sample_rate, synthesize, write_binary, ModulationDist, TransmitConfig, WaveformFamily, WaveformSpec};

fn main() -> wptlab::Result<()> {
    // a low carrier keeps the sample count small; moments do not depend on it
    let f0 = 100e6;
    let df = 1e6;
    let p = 1e-5;

    println!("{:<22} {:>10} {:>10}", "design", "m4/1.5m2²", "theory");
    for n in [1u32, 2, 4, 8] {
        let w = WaveformSpec::multisine(p, f0, n, df);
        let cfg = TransmitConfig::equal_gain(1, df);
        let sig = synthesize(&w, &cfg, 1.0 / df, default_sample_rate(&w, &cfg, 64), 0)?;
        let e = estimate_moments(&sig)?;
        println!("{:<22} {:>10.4} {:>10.4}", format!("multisine N={n}"), e.m4 / (1.5 * e.m2 * e.m2), g_wf(n)?);
    }

    for m in [2usize, 4] {
        let w = WaveformSpec::cw(p, f0);
        let cfg = TransmitConfig::equal_gain(m, 2.5e6);
        let sig = synthesize(&w, &cfg, 4e-3, default_sample_rate(&w, &cfg, 16), 9)?;
        let e = estimate_moments(&sig)?;
        println!(
            "{:<22} {:>10.4} {:>10.4}",
            format!("phase-swept CW M={m}"),
            e.m4 / (1.5 * e.m2 * e.m2),
            g_td(m as u32)?
        );
    }

    let w = WaveformSpec {
        family: WaveformFamily::Modulated {
            dist: ModulationDist::Flash { l: 2.0 },
            symbol_rate: 1e6,
        },
        power: p,
        carrier_hz: 10e6,
    };
    let cfg = TransmitConfig::equal_gain(1, 1e6);
    let sig = synthesize(&w, &cfg, 40e-3, default_sample_rate(&w, &cfg, 8), 5)?;
    let e = estimate_moments(&sig)?;
    println!("{:<22} {:>10.4} {:>10.4}", "flash l=2", e.m4 / (1.5 * e.m2 * e.m2), 4.0);

    let path = std::env::temp_dir().join("wptlab_flash.bin");
    write_binary(&sig, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    println!("\nwrote {} samples to {}", sig.len(), path.display());
    Ok(())
}
