//! Transient simulation of a single-series-diode rectifier.
//!
//! ```text
//!  V1 ──R1──A──L1──B──▶|──C──┬────┐
//!                  │         │    │
//!                 C1        C2   R_load
//!                  │         │    │
//!  ────────────────┴─────────┴────┘
//! ```
//!
//! `V1 = 2 y √R1` makes `y²` the available power of the source. With
//! [`MatchingTopology::ShuntFirst`] C1 sits at node A instead of node B.
//!
//! # Frequency scaling
//!
//! Simulating tens of microseconds of a 2.45 GHz drive at dozens of samples
//! per cycle is far too many steps. [`steady_state_pdc`] therefore lowers the
//! carrier by `freq_scale` and divides C1 and L1 by the same factor, which
//! keeps `ω₀ R C1` and `ω₀ L1 / R` (and so the matching network's response at
//! the carrier) unchanged. Envelope quantities (tone spacing, phase rate,
//! symbol rate and the `R_load C2` time constant) are left alone. Because the
//! diode is memoryless, the harvested DC power depends on the carrier only
//! through the matching network, so the result is unchanged as long as the
//! carrier stays well above the envelope bandwidth.

mod config;
mod solver;
mod steady;

pub use config::{load_config, read_config, write_config};
pub use solver::{transient, transient_with, write_trace_csv, Integrator, TransientOptions, TransientTrace};
pub use steady::{
    steady_state_pdc, steady_state_pdc_with, sweep, CircuitRow, CircuitScheme, DriveSettings, SimSettings,
    SteadyStateResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::harvester::DiodeParams;

/// Where the shunt matching capacitor sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingTopology {
    /// Series L1 from the source, then shunt C1 at the diode anode. Steps the
    /// 50 Ω source up towards the rectifier's high input resistance.
    #[default]
    SeriesFirst,
    /// Shunt C1 at the source node, then series L1 into the diode.
    ShuntFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Source resistance R1 (Ω).
    pub r_ant: f64,
    /// Shunt matching capacitor (F); 0 removes it.
    pub c1: f64,
    /// Series matching inductor (H); 0 shorts it.
    pub l1: f64,
    pub diode: DiodeParams,
    /// Output capacitor (F).
    pub c2: f64,
    /// Load resistance (Ω).
    pub r_load: f64,
    /// Carrier compression factor used by the steady-state engine.
    pub freq_scale: f64,
    pub topology: MatchingTopology,
    /// Reverse voltage above which results are flagged as outside the model.
    pub breakdown_v: f64,
}

impl Default for CircuitParams {
    /// 2.45 GHz design: 50 Ω source, 0.4 pF, 8.8 nH, 1 nF and 10 kΩ.
    fn default() -> Self {
        Self {
            r_ant: 50.0,
            c1: 0.4e-12,
            l1: 8.8e-9,
            diode: DiodeParams::default(),
            c2: 1e-9,
            r_load: 10e3,
            freq_scale: 0.1,
            topology: MatchingTopology::SeriesFirst,
            breakdown_v: 2.0,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("r_ant", self.r_ant)?;
        non_negative("c1", self.c1)?;
        non_negative("l1", self.l1)?;
        positive("c2", self.c2)?;
        positive("r_load", self.r_load)?;
        positive("freq_scale", self.freq_scale)?;
        positive("breakdown_v", self.breakdown_v)?;
        self.diode.validate()
    }

    /// Element values for a carrier lowered by `freq_scale`.
    pub fn carrier_scaled(&self) -> CircuitParams {
        CircuitParams {
            c1: self.c1 / self.freq_scale,
            l1: self.l1 / self.freq_scale,
            freq_scale: 1.0,
            ..*self
        }
    }
}
