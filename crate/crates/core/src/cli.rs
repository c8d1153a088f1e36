//! The `wptlab` command line: every subcommand builds a [`Table`] and prints
//! it as CSV or JSON. Files named with `--out` get a [`RunManifest`] beside
//! them.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::circuit::{
    self, load_config, CircuitParams, CircuitScheme, DriveSettings, Integrator, SimSettings,
};
use crate::error::{invalid, Error, Result};
use crate::gain::{self, e_fading, e_td2, g_mod, g_td, g_wf, GainMode, GainRow, QuadratureSettings};
use crate::harvester::{
    fit_logpoly, load_fit_dataset, load_model, write_model, DiodeParams, LogPolyFitModel, Scheme,
    TaylorDiodeModel,
};
use crate::manifest::RunManifest;
use crate::monte_carlo::{estimate_moments, mc_channel_fourth_moment, mc_fading_gain, mc_td_gain, McResult};
use crate::signal::{
    default_sample_rate, read_binary, read_csv, synthesize, write_binary, write_csv, ModulationDist,
    SampledSignal, TransmitConfig, WaveformFamily, WaveformSpec,
};
use crate::units::{dbm_grid, dbm_to_watts};

#[derive(Debug, Parser)]
#[command(name = "wptlab", version, about = "Wireless power transfer harvester and waveform toolkit")]
pub struct Cli {
    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form fourth-order gains of a transmission scheme.
    Gains(GainsArgs),
    /// Fit the log-polynomial harvester model to measured points.
    Fit(FitArgs),
    /// Fading or transmit-diversity gains of a fitted model over input power.
    GainSweep(GainSweepArgs),
    /// A single Monte Carlo estimate.
    Mc(McArgs),
    /// Second and fourth moments of a stored signal.
    Moments(MomentsArgs),
    /// Steady-state rectifier output over schemes and input powers.
    Circuit(CircuitArgs),
    /// Synthesize a received signal and store it.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainsScheme {
    Cw,
    CwFading,
    TdCw,
    TdMod,
    TdWf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Cscg,
    RealGaussian,
    Flash,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[arg(long, value_enum, default_value_t = GainsScheme::TdCw)]
    pub scheme: GainsScheme,
    /// Transmit antennas.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Multisine tones.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t = DistArg::Cscg)]
    pub dist: DistArg,
    /// Flash amplitude parameter.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Inclusive antenna range `A..B`, one row per M.
    #[arg(long)]
    pub sweep_m: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with `prf_dbm,pdc_dbm` or `prf_w,pdc_w` columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub degree: u8,
    /// Model JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    Fading,
    Td2,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McTarget {
    Fading,
    Td,
}

#[derive(Debug, Args)]
pub struct GainSweepArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = SweepMode::Fading)]
    pub mode: SweepMode,
    /// `START:STOP:STEP` in dBm, or a single value.
    #[arg(long, default_value = "-40:-5:1", allow_hyphen_values = true)]
    pub prf_dbm: String,
    /// Input power below which the harvester outputs nothing.
    #[arg(long, allow_hyphen_values = true)]
    pub sensitivity_dbm: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, env = "WPTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Randomness sampled in `mc` mode.
    #[arg(long, value_enum, default_value_t = McTarget::Fading)]
    pub mc_target: McTarget,
    /// Antennas for `--mc-target td`.
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McKind {
    /// `E|h|⁴/M²` for unit channels and random phases.
    Channel,
    Fading,
    Td,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_enum, default_value_t = McKind::Channel)]
    pub target: McKind,
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    /// Model JSON (fading and td targets).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub prf_dbm: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, env = "WPTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Signal file; `.bin` is read as binary, anything else as CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Source resistance for the z_dc column (Ω).
    #[arg(long, default_value_t = 50.0)]
    pub r_ant: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Trapezoidal,
    BackwardEuler,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    /// `key = value` circuit file; built-in 2.45 GHz design when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated `cw`, `multisine:N`, `td-cw:M`, `td-multisine:M:N`.
    #[arg(long, default_value = "cw")]
    pub scheme: String,
    #[arg(long, default_value = "-40:20:5", allow_hyphen_values = true)]
    pub prf_dbm: String,
    #[arg(long, default_value_t = 150)]
    pub realizations: u32,
    #[arg(long, env = "WPTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub samples_per_carrier: u32,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Trapezoidal)]
    pub integrator: IntegratorArg,
    #[arg(long, default_value_t = 200)]
    pub max_windows: u32,
    #[arg(long, default_value_t = 20)]
    pub analysis_windows: u32,
    #[arg(long, default_value_t = 2.45e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 2.5e6)]
    pub delta_f: f64,
    #[arg(long, default_value_t = 2.5e6)]
    pub phase_rate: f64,
    /// Also write a `t_s,v_in,v_out,i_d` trace of the first scheme at the
    /// first power, simulated on the frequency-scaled circuit.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Trace length (µs).
    #[arg(long, default_value_t = 10.0)]
    pub trace_us: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `cw`, `multisine:N`, `cscg`, `real-gaussian` or `flash:L`.
    #[arg(long, default_value = "cw")]
    pub waveform: String,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub power_dbm: f64,
    #[arg(long, default_value_t = 2.45e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 2.5e6)]
    pub delta_f: f64,
    #[arg(long, default_value_t = 1e6)]
    pub symbol_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = 2.5e6)]
    pub phase_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub path_loss: f64,
    /// Signal length (s).
    #[arg(long, default_value_t = 1e-6)]
    pub duration: f64,
    /// Defaults to a grid with 32 samples per carrier period.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    #[arg(long, env = "WPTLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// `.bin` writes the binary format, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
}

/// A table cell. Floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl Cell {
    fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::F)
    }

    fn text(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => Value::from(*v),
            Cell::B(v) => Value::Bool(*v),
            Cell::S(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Output rows with named columns. `failed` marks tables containing an
/// error row, which turns into a nonzero exit code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub failed: bool,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                        serde_json::Value::Object(map)
                    })
                    .collect();
                Ok(serde_json::to_string_pretty(&rows)? + "\n")
            }
        }
    }
}

/// Parses `START:STOP:STEP` (inclusive) or a single value, in dBm.
pub fn parse_dbm_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| -> Result<f64> {
        p.parse::<f64>()
            .map_err(|_| invalid(format!("bad number {p:?} in power range {s:?}")))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(invalid(format!("power range {s:?} needs START <= STOP and STEP > 0")));
            }
            Ok(dbm_grid(a, b, step))
        }
        _ => Err(invalid(format!("power range {s:?} must be START:STOP:STEP or a single value"))),
    }
}

/// Parses an inclusive `A..B` range of positive integers.
pub fn parse_count_range(s: &str) -> Result<std::ops::RangeInclusive<u32>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| invalid(format!("range {s:?} must look like A..B")))?;
    let parse = |p: &str| {
        p.trim()
            .parse::<u32>()
            .map_err(|_| invalid(format!("bad count {p:?} in range {s:?}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a < 1 || b < a {
        return Err(invalid(format!("range {s:?} needs 1 <= A <= B")));
    }
    Ok(a..=b)
}

fn dist_of(dist: DistArg, l: f64) -> ModulationDist {
    match dist {
        DistArg::Cscg => ModulationDist::Cscg,
        DistArg::RealGaussian => ModulationDist::RealGaussian,
        DistArg::Flash => ModulationDist::Flash { l },
    }
}

fn cmd_gains(a: &GainsArgs) -> Result<Table> {
    let mut t = Table::new(&["scheme", "m", "n", "g_td", "g_mod", "g_wf", "factor"]);
    let ms = match &a.sweep_m {
        Some(r) => parse_count_range(r)?,
        None => a.m..=a.m,
    };
    let name = a.scheme.to_possible_value().expect("no skipped variants").get_name().to_string();
    let dist = dist_of(a.dist, a.l);
    for m in ms {
        let (scheme, g_mod_v, g_wf_v, g_td_v) = match a.scheme {
            GainsScheme::Cw => (Scheme::CwNoFading, 1.0, 1.0, 1.0),
            GainsScheme::CwFading => (Scheme::CwCscgFading, 1.0, 1.0, 1.0),
            GainsScheme::TdCw => (Scheme::TdCw { m }, 1.0, 1.0, g_td(m)?),
            GainsScheme::TdMod => (Scheme::TdMod { m, dist }, g_mod(dist)?, 1.0, g_td(m)?),
            GainsScheme::TdWf => (Scheme::TdWf { m, n: a.n }, 1.0, g_wf(a.n)?, g_td(m)?),
        };
        t.rows.push(vec![
            Cell::S(name.clone()),
            Cell::U(m.into()),
            Cell::U(a.n.into()),
            Cell::F(g_td_v),
            Cell::F(g_mod_v),
            Cell::F(g_wf_v),
            Cell::F(scheme.fourth_order_factor()?),
        ]);
    }
    Ok(t)
}

fn cmd_fit(a: &FitArgs) -> Result<Table> {
    let data = load_fit_dataset(&a.input)?;
    let report = fit_logpoly(&data, a.degree)?;
    if let Some(out) = &a.out {
        let mut file = fs::File::create(out)?;
        write_model(&report.model, &mut file)?;
        writeln!(file)?;
    }
    let m = report.model;
    let mut t = Table::new(&["degree", "a", "b", "c", "rmse_log", "points", "range_min_w", "range_max_w"]);
    t.rows.push(vec![
        Cell::U(m.degree.into()),
        Cell::F(m.a),
        Cell::F(m.b),
        Cell::F(m.c),
        Cell::F(report.rmse_log),
        Cell::U(data.len() as u64),
        Cell::F(m.valid_range_w.0),
        Cell::F(m.valid_range_w.1),
    ]);
    Ok(t)
}

fn model_with_floor(path: &Path, sensitivity_dbm: Option<f64>) -> Result<LogPolyFitModel> {
    let m = load_model(path)?;
    match sensitivity_dbm {
        Some(dbm) => m.with_sensitivity(dbm_to_watts(dbm)),
        None => Ok(m),
    }
}

fn gain_rows_table(rows: &[GainRow], with_se: bool) -> Table {
    let mut cols = vec!["prf_dbm", "e_rfdc", "gain", "combined", "extrapolated_flag"];
    if with_se {
        cols.push("std_error");
    }
    cols.push("error");
    let mut t = Table::new(&cols);
    for r in rows {
        let mut row = vec![
            Cell::F(r.prf_dbm),
            Cell::F(r.e_rfdc),
            Cell::F(r.gain),
            Cell::F(r.combined),
            Cell::B(r.extrapolated_flag),
        ];
        if with_se {
            row.push(Cell::opt(r.std_error));
        }
        row.push(r.error.clone().map_or(Cell::Empty, Cell::S));
        t.failed |= r.error.is_some();
        t.rows.push(row);
    }
    t
}

fn unit_channel(m: u32) -> Result<Vec<Complex64>> {
    if m < 1 {
        return Err(invalid("number of antennas must be >= 1"));
    }
    Ok(vec![Complex64::new(1.0, 0.0); m as usize])
}

fn cmd_gain_sweep(a: &GainSweepArgs) -> Result<Table> {
    let model = model_with_floor(&a.model, a.sensitivity_dbm)?;
    let grid = parse_dbm_range(&a.prf_dbm)?;
    let q = QuadratureSettings::default();
    let rows = match a.mode {
        SweepMode::Fading => gain::sweep(&model, &grid, GainMode::Fading, &q),
        SweepMode::Td2 => gain::sweep(&model, &grid, GainMode::Td2, &q),
        SweepMode::Mc => {
            let channel = unit_channel(a.m)?;
            grid.iter()
                .map(|&dbm| {
                    let p = dbm_to_watts(dbm);
                    let extrapolated = !model.in_range(p);
                    let r = match a.mc_target {
                        McTarget::Fading => mc_fading_gain(&model, p, a.trials, a.seed),
                        McTarget::Td => mc_td_gain(&model, p, &channel, a.trials, a.seed),
                    };
                    match r {
                        Ok(r) => {
                            let e_rfdc = model.polynomial_power(p) / p;
                            GainRow {
                                prf_dbm: dbm,
                                e_rfdc,
                                gain: r.estimate,
                                combined: e_rfdc * r.estimate,
                                extrapolated_flag: extrapolated,
                                std_error: Some(r.std_error),
                                error: None,
                            }
                        }
                        Err(e) => GainRow::failed(dbm, extrapolated, e.to_string()),
                    }
                })
                .collect()
        }
    };
    Ok(gain_rows_table(&rows, a.mode == SweepMode::Mc))
}

fn cmd_mc(a: &McArgs) -> Result<Table> {
    let channel = unit_channel(a.m)?;
    let q = QuadratureSettings::default();
    let model = || -> Result<LogPolyFitModel> {
        let path = a
            .model
            .as_ref()
            .ok_or_else(|| invalid("--model is required for the fading and td targets"))?;
        load_model(path)
    };
    let p = dbm_to_watts(a.prf_dbm);
    let (name, r, reference, prf): (&str, McResult, Option<f64>, Option<f64>) = match a.target {
        McKind::Channel => (
            "channel",
            mc_channel_fourth_moment(&channel, a.trials, a.seed)?,
            Some(g_td(a.m)?),
            None,
        ),
        McKind::Fading => {
            let m = model()?;
            let r = mc_fading_gain(&m, p, a.trials, a.seed)?;
            ("fading", r, e_fading(&m, p, &q).ok(), Some(a.prf_dbm))
        }
        McKind::Td => {
            let m = model()?;
            let r = mc_td_gain(&m, p, &channel, a.trials, a.seed)?;
            let reference = if a.m == 2 { e_td2(&m, p, &q).ok() } else { None };
            ("td", r, reference, Some(a.prf_dbm))
        }
    };
    let mut t = Table::new(&["target", "m", "prf_dbm", "estimate", "std_error", "trials", "seed", "reference"]);
    t.rows.push(vec![
        Cell::S(name.to_string()),
        Cell::U(a.m.into()),
        Cell::opt(prf),
        Cell::F(r.estimate),
        Cell::F(r.std_error),
        Cell::U(r.trials),
        Cell::U(r.seed),
        Cell::opt(reference),
    ]);
    Ok(t)
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn load_signal(path: &Path) -> Result<SampledSignal> {
    let file = fs::File::open(path)?;
    if is_binary(path) {
        read_binary(std::io::BufReader::new(file))
    } else {
        read_csv(file, &path.display().to_string())
    }
}

fn cmd_moments(a: &MomentsArgs) -> Result<Table> {
    let sig = load_signal(&a.input)?;
    let e = estimate_moments(&sig)?;
    let zdc = TaylorDiodeModel::from_diode(&DiodeParams::default(), a.r_ant)?.zdc_from_moments(e.m2, e.m4)?;
    let mut t = Table::new(&["count", "m2", "m4", "se_m2", "se_m4", "waveform_gain", "zdc"]);
    t.rows.push(vec![
        Cell::U(e.count as u64),
        Cell::F(e.m2),
        Cell::F(e.m4),
        Cell::F(e.se_m2),
        Cell::F(e.se_m4),
        Cell::F(e.m4 / (1.5 * e.m2 * e.m2)),
        Cell::F(zdc.total()),
    ]);
    Ok(t)
}

fn parse_waveform(s: &str, a: &SynthArgs) -> Result<WaveformFamily> {
    let parts: Vec<&str> = s.split(':').collect();
    let modulated = |dist| WaveformFamily::Modulated {
        dist,
        symbol_rate: a.symbol_rate,
    };
    Ok(match parts.as_slice() {
        ["cw"] => WaveformFamily::Cw,
        ["multisine", n] => WaveformFamily::Multisine {
            n_tones: n.parse().map_err(|_| invalid(format!("bad tone count in {s:?}")))?,
            delta_f: a.delta_f,
        },
        ["cscg"] => modulated(ModulationDist::Cscg),
        ["real-gaussian"] => modulated(ModulationDist::RealGaussian),
        ["flash", l] => modulated(ModulationDist::Flash {
            l: l.parse().map_err(|_| invalid(format!("bad flash parameter in {s:?}")))?,
        }),
        _ => {
            return Err(invalid(format!(
                "unknown waveform {s:?} (expected cw, multisine:N, cscg, real-gaussian or flash:L)"
            )))
        }
    })
}

fn cmd_synth(a: &SynthArgs) -> Result<Table> {
    let w = WaveformSpec {
        family: parse_waveform(&a.waveform, a)?,
        power: dbm_to_watts(a.power_dbm),
        carrier_hz: a.carrier_hz,
    };
    let mut cfg = TransmitConfig::equal_gain(a.m as usize, a.phase_rate);
    cfg.path_loss = a.path_loss;
    cfg.validate()?;
    let fs_hz = a.sample_rate.unwrap_or_else(|| default_sample_rate(&w, &cfg, 32));
    let sig = synthesize(&w, &cfg, a.duration, fs_hz, a.seed)?;
    let file = std::io::BufWriter::new(fs::File::create(&a.out)?);
    if is_binary(&a.out) {
        write_binary(&sig, file)?;
    } else {
        write_csv(&sig, file)?;
    }
    let mut t = Table::new(&["samples", "sample_rate", "duration", "mean_power"]);
    t.rows.push(vec![
        Cell::U(sig.len() as u64),
        Cell::F(sig.sample_rate),
        Cell::F(sig.duration()),
        Cell::F(sig.mean_power()),
    ]);
    Ok(t)
}

fn write_trace(c: &CircuitParams, scheme: CircuitScheme, dbm: f64, a: &CircuitArgs, s: &SimSettings, d: &DriveSettings, path: &Path) -> Result<()> {
    let (w, cfg) = scheme.drive(dbm_to_watts(dbm), d);
    let scaled = c.carrier_scaled();
    let w_sim = WaveformSpec {
        carrier_hz: w.carrier_hz * c.freq_scale,
        ..w
    };
    let fs_hz = default_sample_rate(&w_sim, &cfg, s.samples_per_carrier);
    let t_end = a.trace_us * 1e-6;
    let drive = synthesize(&w_sim, &cfg, t_end + 2.0 / fs_hz, fs_hz, a.seed)?;
    let opts = circuit::TransientOptions {
        integrator: s.integrator,
        ..Default::default()
    };
    let trace = circuit::transient_with(&scaled, &drive, 1.0 / fs_hz, t_end, &opts)?;
    circuit::write_trace_csv(&trace, std::io::BufWriter::new(fs::File::create(path)?))
}

fn cmd_circuit(a: &CircuitArgs) -> Result<Table> {
    let c = match &a.config {
        Some(p) => load_config(p)?,
        None => CircuitParams::default(),
    };
    let schemes: Vec<CircuitScheme> = a
        .scheme
        .split(',')
        .map(str::parse)
        .collect::<Result<_>>()?;
    let grid = parse_dbm_range(&a.prf_dbm)?;
    let s = SimSettings {
        samples_per_carrier: a.samples_per_carrier,
        max_windows: a.max_windows,
        analysis_windows: a.analysis_windows,
        integrator: match a.integrator {
            IntegratorArg::Trapezoidal => Integrator::Trapezoidal,
            IntegratorArg::BackwardEuler => Integrator::BackwardEuler,
        },
        ..Default::default()
    };
    let d = DriveSettings {
        carrier_hz: a.carrier_hz,
        delta_f: a.delta_f,
        phase_rate: a.phase_rate,
    };
    if let Some(path) = &a.trace {
        write_trace(&c, schemes[0], grid[0], a, &s, &d, path)?;
    }
    let rows = circuit::sweep(&c, &schemes, &grid, a.realizations, a.seed, &d, &s)?;
    let mut t = Table::new(&[
        "scheme",
        "prf_dbm",
        "p_dc",
        "efficiency",
        "e_td",
        "unmodeled",
        "settle_time",
        "error",
    ]);
    for r in rows {
        t.failed |= r.error.is_some();
        t.rows.push(vec![
            Cell::S(r.scheme),
            Cell::F(r.prf_dbm),
            Cell::opt(r.p_dc),
            Cell::opt(r.efficiency),
            Cell::opt(r.e_td),
            Cell::B(r.unmodeled),
            Cell::opt(r.settle_time),
            r.error.map_or(Cell::Empty, Cell::S),
        ]);
    }
    Ok(t)
}

/// Files the command wrote itself (besides the table) and the seed it used.
fn side_outputs(cmd: &Command) -> (Option<PathBuf>, Vec<PathBuf>, Option<u64>) {
    match cmd {
        Command::Gains(a) => (a.out.clone(), vec![], None),
        Command::Fit(a) => (None, a.out.iter().cloned().collect(), None),
        Command::GainSweep(a) => (a.out.clone(), vec![], (a.mode == SweepMode::Mc).then_some(a.seed)),
        Command::Mc(a) => (a.out.clone(), vec![], Some(a.seed)),
        Command::Moments(a) => (a.out.clone(), vec![], None),
        Command::Circuit(a) => (a.out.clone(), a.trace.iter().cloned().collect(), Some(a.seed)),
        Command::Synth(a) => (None, vec![a.out.clone()], Some(a.seed)),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gains(_) => "gains",
        Command::Fit(_) => "fit",
        Command::GainSweep(_) => "gain-sweep",
        Command::Mc(_) => "mc",
        Command::Moments(_) => "moments",
        Command::Circuit(_) => "circuit",
        Command::Synth(_) => "synth",
    }
}

/// Runs a parsed command. The table goes to `--out` when given and to
/// `stdout` otherwise. Returns the process exit code.
pub fn run(cli: &Cli, args: Vec<String>, stdout: &mut dyn Write) -> Result<i32> {
    let table = match &cli.command {
        Command::Gains(a) => cmd_gains(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::GainSweep(a) => cmd_gain_sweep(a)?,
        Command::Mc(a) => cmd_mc(a)?,
        Command::Moments(a) => cmd_moments(a)?,
        Command::Circuit(a) => cmd_circuit(a)?,
        Command::Synth(a) => cmd_synth(a)?,
    };
    let text = table.render(cli.format)?;
    let (table_out, files, seed) = side_outputs(&cli.command);
    let manifest = RunManifest::new(command_name(&cli.command), args, seed);
    for f in &files {
        manifest.write_beside(f)?;
    }
    match table_out {
        Some(path) => {
            fs::write(&path, &text)?;
            manifest.write_beside(&path)?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(if table.failed { 1 } else { 0 })
}

/// Entry point for the binary: parses `args` (program name first), runs the
/// command and maps errors to exit code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let recorded = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let stdout = std::io::stdout();
    match run(&cli, recorded, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_ranges() {
        assert_eq!(parse_dbm_range("-40:-30:5").unwrap(), vec![-40.0, -35.0, -30.0]);
        assert_eq!(parse_dbm_range("-20").unwrap(), vec![-20.0]);
        for bad in ["", "a:b:c", "-10:-20:1", "0:1:0", "1:2"] {
            assert!(parse_dbm_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn count_ranges() {
        assert_eq!(parse_count_range("1..64").unwrap(), 1..=64);
        assert!(parse_count_range("0..3").is_err());
        assert!(parse_count_range("5..3").is_err());
        assert!(parse_count_range("5").is_err());
    }

    #[test]
    fn table_formats() {
        let mut t = Table::new(&["x", "name", "ok", "missing"]);
        t.rows.push(vec![Cell::F(1e-5), Cell::S("a,b".into()), Cell::B(true), Cell::Empty]);
        t.rows.push(vec![Cell::F(0.1), Cell::S("c".into()), Cell::B(false), Cell::F(f64::NAN)]);
        assert_eq!(
            t.render(Format::Csv).unwrap(),
            "x,name,ok,missing\n1e-5,\"a,b\",true,\n0.1,c,false,NaN\n"
        );
        let json: serde_json::Value = serde_json::from_str(&t.render(Format::Json).unwrap()).unwrap();
        assert_eq!(json[0]["x"], 1e-5);
        assert_eq!(json[1]["missing"], serde_json::Value::Null);
        let keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["x", "name", "ok", "missing"]);
    }

    fn gains(args: &[&str]) -> Table {
        let cli = Cli::try_parse_from(std::iter::once("wptlab").chain(args.iter().copied())).unwrap();
        match &cli.command {
            Command::Gains(a) => cmd_gains(a).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn gains_examples() {
        let factor = |t: &Table| match t.rows[0][6] {
            Cell::F(v) => v,
            _ => panic!(),
        };
        assert_eq!(factor(&gains(&["gains", "--scheme", "td-cw", "--m", "2"])), 1.5);
        assert_eq!(factor(&gains(&["gains", "--scheme", "td-wf", "--m", "2", "--n", "8"])), 8.0625);
        assert_eq!(
            factor(&gains(&["gains", "--scheme", "td-mod", "--m", "1", "--dist", "flash", "--l", "1"])),
            1.0
        );
        assert_eq!(gains(&["gains", "--sweep-m", "1..64"]).rows.len(), 64);
    }
}
