use crate::error::{invalid, Result};
use crate::signal::ModulationDist;

/// Transmit-diversity gain on the fourth-order term, `1 + (M-1)/M`.
pub fn g_td(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(invalid("number of antennas must be >= 1"));
    }
    let m = m as f64;
    Ok(1.0 + (m - 1.0) / m)
}

/// Modulation gain `E|s|⁴` for a unit-power input distribution.
pub fn g_mod(dist: ModulationDist) -> Result<f64> {
    dist.validate()?;
    Ok(match dist {
        ModulationDist::Cscg => 2.0,
        ModulationDist::RealGaussian => 3.0,
        ModulationDist::Flash { l } => l * l,
    })
}

/// Waveform gain of an in-phase, uniform-power N-tone multisine, `(2N²+1)/(3N)`.
pub fn g_wf(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(invalid("number of tones must be >= 1"));
    }
    let n = n as f64;
    Ok((2.0 * n * n + 1.0) / (3.0 * n))
}
