//! Fourth-order gains from phase sweeping, modulation and multisine design.

use wptlab::gain::{g_mod, g_td, g_wf};
use wptlab::signal::ModulationDist;

fn main() -> wptlab::Result<()> {
    println!("transmit diversity, G_td = 1 + (M-1)/M");
    for m in [1, 2, 3, 4, 8, 16, 32, 64] {
        println!("  M = {m:>2}  G_td = {:.6}", g_td(m)?);
    }

    println!("\nmodulation, G_mod = E|s|^4");
    for (name, dist) in [
        ("CSCG", ModulationDist::Cscg),
        ("real Gaussian", ModulationDist::RealGaussian),
        ("flash l=2", ModulationDist::Flash { l: 2.0 }),
        ("flash l=4", ModulationDist::Flash { l: 4.0 }),
    ] {
        println!("  {name:<14} G_mod = {}", g_mod(dist)?);
    }

    println!("\nmultisine, G_wf = (2N^2 + 1) / (3N)");
    for n in [1, 2, 4, 8, 16] {
        println!("  N = {n:>2}  G_wf = {:.4}  with M=2: {:.4}", g_wf(n)?, g_td(2)? * g_wf(n)?);
    }
    Ok(())
}
