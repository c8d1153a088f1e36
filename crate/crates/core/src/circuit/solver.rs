//! Companion-model nodal solver.
//!
//! Unknowns are `[v_A, v_B, v_C, i_L1]`. Reactive elements are replaced by
//! their integration companions, so for a fixed step the linear part of the
//! network is a constant matrix whose inverse is computed once. The diode is
//! the only nonlinearity; each step reduces it to the scalar equation
//! `v_d = v_oc - R_th · i_s (e^{v_d/(n v_t)} - 1)` against the Thevenin
//! equivalent seen from its terminals, which is solved by bracketed, damped
//! Newton iteration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CircuitParams, MatchingTopology};
use crate::error::{invalid, Error, Result};
use crate::harvester::DiodeParams;
use crate::linalg::solve_dense;
use crate::signal::SampledSignal;

/// Companion model used for C1, L1 and C2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// First order, numerically dissipative.
    BackwardEuler,
    /// Second order, non-dissipative. The first step always uses backward
    /// Euler to initialize the element currents.
    #[default]
    Trapezoidal,
}

const MAX_NEWTON: usize = 50;
const MAX_DAMPING: usize = 8;
/// Deepest recursive step halving tried before a step is declared failed.
const MAX_SUBDIVISION: u32 = 6;

/// Solves `res(v) = (v0 - v)/r - f(v) = 0` for the diode voltage. Returns
/// `(v_d, i_d, |residual|, converged)`. The tolerance is raised to the
/// rounding floor when `tol` is below what the current's magnitude allows.
fn solve_diode(d: &DiodeParams, v0: f64, r: f64, guess: f64, tol: f64) -> (f64, f64, f64, bool) {
    if !(r > 0.0) {
        return (v0, d.current(v0), 0.0, true);
    }
    let nvt = d.n_vt();
    let slope = d.i_s / nvt;
    // f is bounded below by -i_s, and f(v) <= v0/r on the solution branch
    let (mut lo, mut hi) = if v0 >= 0.0 {
        (0.0, v0.min(nvt * (v0 / (r * d.i_s)).ln_1p()))
    } else {
        (v0, (v0 + r * d.i_s).min(0.0))
    };
    let res = |v: f64| (v0 - v) / r - d.current(v);
    // below this the residual is rounding noise in (v0 - v) / r
    let tol = tol.max(16.0 * f64::EPSILON * (v0.abs() / r + d.i_s));
    let mut v = guess.clamp(lo, hi);
    let mut rv = res(v);
    // aim well inside the tolerance; quadratic convergence makes this cheap
    let target = 0.01 * tol;
    for _ in 0..MAX_NEWTON {
        if rv.abs() <= target {
            break;
        }
        if rv > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let deriv = -1.0 / r - slope * (v / nvt).exp();
        let mut step = -rv / deriv;
        let mut next = None;
        for _ in 0..MAX_DAMPING {
            let cand = v + step;
            if cand > lo && cand < hi {
                let rc = res(cand);
                if rc.abs() < rv.abs() {
                    next = Some((cand, rc));
                    break;
                }
            }
            step *= 0.5;
        }
        let (cand, rc) = next.unwrap_or_else(|| {
            let mid = 0.5 * (lo + hi);
            (mid, res(mid))
        });
        if cand == v {
            break;
        }
        v = cand;
        rv = rc;
    }
    let i = (v0 - v) / r;
    let residual = (i - d.current(v)).abs();
    (v, i, residual, residual <= tol)
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    ainv: [[f64; 4]; 4],
    /// Node response to a unit diode current.
    x1: [f64; 4],
    r_th: f64,
    g1: f64,
    g2: f64,
    z_l: f64,
}

fn mat_vec(a: &[[f64; 4]; 4], b: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row[0] * b[0] + row[1] * b[1] + row[2] * b[2] + row[3] * b[3];
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct State {
    x: [f64; 4],
    i_c1: f64,
    i_c2: f64,
    v_l: f64,
    v_d: f64,
}

/// Quantities reported after each accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepOut {
    pub v_a: f64,
    pub v_in: f64,
    pub v_out: f64,
    pub i_d: f64,
    pub i_l: f64,
    pub residual: f64,
}

/// Time-stepping state of one rectifier.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    c: CircuitParams,
    integrator: Integrator,
    step: f64,
    tol: f64,
    factors: Vec<Option<Factor>>,
    state: State,
    started: bool,
    steps_taken: usize,
    time: f64,
}

impl Engine {
    pub fn new(c: &CircuitParams, integrator: Integrator, step: f64, v_out0: f64, tol: f64) -> Result<Self> {
        c.validate()?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("time step must be > 0, got {step}")));
        }
        let mut state = State::default();
        state.x[2] = v_out0;
        state.v_d = -v_out0;
        state.i_c2 = c.diode.current(-v_out0) - v_out0 / c.r_load;
        Ok(Self {
            c: *c,
            integrator,
            step,
            tol,
            factors: vec![None; 2 * (MAX_SUBDIVISION as usize + 1)],
            state,
            started: false,
            steps_taken: 0,
            time: 0.0,
        })
    }

    fn factor(&mut self, method: Integrator, level: u32) -> Result<Factor> {
        let slot = level as usize * 2 + usize::from(method == Integrator::Trapezoidal);
        if let Some(f) = self.factors[slot] {
            return Ok(f);
        }
        let h = self.step / f64::from(1u32 << level);
        let k = match method {
            Integrator::BackwardEuler => 1.0,
            Integrator::Trapezoidal => 2.0,
        };
        let c = &self.c;
        let (g1, g2, z_l) = (k * c.c1 / h, k * c.c2 / h, k * c.l1 / h);
        let (g1_a, g1_b) = match c.topology {
            MatchingTopology::ShuntFirst => (g1, 0.0),
            MatchingTopology::SeriesFirst => (0.0, g1),
        };
        let a = [
            [1.0 / c.r_ant + g1_a, 0.0, 0.0, 1.0],
            [0.0, g1_b, 0.0, -1.0],
            [0.0, 0.0, g2 + 1.0 / c.r_load, 0.0],
            [1.0, -1.0, 0.0, -z_l],
        ];
        let mut ainv = [[0.0; 4]; 4];
        for col in 0..4 {
            let mut e = [0.0; 4];
            e[col] = 1.0;
            let x = solve_dense(a, e, 1e-15).ok_or_else(|| invalid("singular circuit matrix"))?;
            for row in 0..4 {
                ainv[row][col] = x[row];
            }
        }
        let x1 = mat_vec(&ainv, &[0.0, -1.0, 1.0, 0.0]);
        let f = Factor {
            ainv,
            x1,
            r_th: x1[2] - x1[1],
            g1,
            g2,
            z_l,
        };
        self.factors[slot] = Some(f);
        Ok(f)
    }

    /// One companion step to source voltage `v1`. Returns `None` if Newton
    /// did not reach tolerance.
    fn try_step(&mut self, method: Integrator, level: u32, v1: f64) -> Result<Option<StepOut>> {
        let f = self.factor(method, level)?;
        let s = self.state;
        let trap = method == Integrator::Trapezoidal;
        let (h1, h2) = if trap { (s.i_c1, s.i_c2) } else { (0.0, 0.0) };
        let (node_c1, c1_rhs) = match self.c.topology {
            MatchingTopology::ShuntFirst => (0, f.g1 * s.x[0] + h1),
            MatchingTopology::SeriesFirst => (1, f.g1 * s.x[1] + h1),
        };
        let mut b = [
            v1 / self.c.r_ant,
            0.0,
            f.g2 * s.x[2] + h2,
            -f.z_l * s.x[3] - if trap { s.v_l } else { 0.0 },
        ];
        b[node_c1] += c1_rhs;
        let x0 = mat_vec(&f.ainv, &b);
        let v0 = x0[1] - x0[2];
        let (v_d, i_d, residual, converged) = solve_diode(&self.c.diode, v0, f.r_th, s.v_d, self.tol);
        if !converged {
            return Ok(None);
        }
        let mut x = [0.0; 4];
        for k in 0..4 {
            x[k] = x0[k] + i_d * f.x1[k];
        }
        x[1] = x[2] + v_d;
        let hist = |g: f64, v_new: f64, v_old: f64, i_old: f64| {
            g * (v_new - v_old) - if trap { i_old } else { 0.0 }
        };
        self.state = State {
            x,
            i_c1: hist(f.g1, x[node_c1], s.x[node_c1], s.i_c1),
            i_c2: hist(f.g2, x[2], s.x[2], s.i_c2),
            v_l: x[0] - x[1],
            v_d,
        };
        Ok(Some(StepOut {
            v_a: x[0],
            v_in: x[1],
            v_out: x[2],
            i_d,
            i_l: x[3],
            residual,
        }))
    }

    fn step_recursive(&mut self, level: u32, v1_from: f64, v1_to: f64) -> Result<Option<StepOut>> {
        let method = if self.started {
            self.integrator
        } else {
            Integrator::BackwardEuler
        };
        let saved = self.state;
        if let Some(out) = self.try_step(method, level, v1_to)? {
            self.started = true;
            return Ok(Some(out));
        }
        self.state = saved;
        if level == MAX_SUBDIVISION {
            return Ok(None);
        }
        let mid = 0.5 * (v1_from + v1_to);
        if self.step_recursive(level + 1, v1_from, mid)?.is_none() {
            self.state = saved;
            return Ok(None);
        }
        let out = self.step_recursive(level + 1, mid, v1_to)?;
        if out.is_none() {
            self.state = saved;
        }
        Ok(out)
    }

    /// Advances one full step with the source moving linearly from `v1_from`
    /// to `v1_to`. Failed steps are retried as halved sub-steps.
    pub fn advance(&mut self, v1_from: f64, v1_to: f64) -> Result<StepOut> {
        self.steps_taken += 1;
        self.time += self.step;
        match self.step_recursive(0, v1_from, v1_to)? {
            Some(out) => Ok(out),
            None => {
                let f = self.factor(self.integrator, 0)?;
                let s = self.state;
                let (_, _, residual, _) = solve_diode(&self.c.diode, s.v_d, f.r_th, s.v_d, self.tol);
                Err(Error::Solver {
                    step: self.steps_taken,
                    time: self.time,
                    residual,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    pub integrator: Integrator,
    /// Initial charge on C2, as a voltage.
    pub v_out0: f64,
    /// Newton tolerance on the diode current (A).
    pub tol: f64,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::default(),
            v_out0: 0.0,
            tol: 1e-12,
        }
    }
}

/// Node waveforms on the simulation grid, starting at `t = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransientTrace {
    pub t: Vec<f64>,
    pub v_in: Vec<f64>,
    pub v_out: Vec<f64>,
    pub i_d: Vec<f64>,
    /// Inductor current from node A towards the diode (A).
    pub i_l: Vec<f64>,
    pub converged: Vec<bool>,
    /// Diode-law residual of the accepted Newton iterate (A).
    pub residual: Vec<f64>,
}

impl TransientTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Diode voltage `v_in - v_out` at every grid point.
    pub fn v_d(&self) -> impl Iterator<Item = f64> + '_ {
        self.v_in.iter().zip(&self.v_out).map(|(a, b)| a - b)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, &r| m.max(r))
    }
}

pub fn transient(c: &CircuitParams, drive: &SampledSignal, step: f64, t_end: f64) -> Result<TransientTrace> {
    transient_with(c, drive, step, t_end, &TransientOptions::default())
}

/// Simulates the circuit (element values as given, no frequency scaling)
/// driven by `drive`, which is linearly interpolated onto the step grid.
pub fn transient_with(
    c: &CircuitParams,
    drive: &SampledSignal,
    step: f64,
    t_end: f64,
    opts: &TransientOptions,
) -> Result<TransientTrace> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end must be > 0"));
    }
    let covered = drive.len().saturating_sub(1) as f64 / drive.sample_rate;
    if t_end > covered * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "drive covers {covered:e} s but t_end is {t_end:e} s"
        )));
    }
    let mut engine = Engine::new(c, opts.integrator, step, opts.v_out0, opts.tol)?;
    let gain = 2.0 * c.r_ant.sqrt();
    let source = |t: f64| {
        let pos = t * drive.sample_rate;
        let i0 = (pos.floor() as usize).min(drive.len() - 1);
        let frac = pos - i0 as f64;
        let y = if frac <= 1e-9 || i0 + 1 >= drive.len() {
            drive.samples[i0]
        } else {
            drive.samples[i0] * (1.0 - frac) + drive.samples[i0 + 1] * frac
        };
        gain * y
    };
    let n = (t_end / step * (1.0 + 1e-12)).floor() as usize;
    let mut trace = TransientTrace::default();
    let v0 = opts.v_out0;
    trace.t.push(0.0);
    trace.v_in.push(0.0);
    trace.v_out.push(v0);
    trace.i_d.push(c.diode.current(-v0));
    trace.i_l.push(0.0);
    trace.converged.push(true);
    trace.residual.push(0.0);
    let mut v1_prev = source(0.0);
    for k in 1..=n {
        let t = k as f64 * step;
        let v1 = source(t);
        let out = engine.advance(v1_prev, v1)?;
        v1_prev = v1;
        trace.t.push(t);
        trace.v_in.push(out.v_in);
        trace.v_out.push(out.v_out);
        trace.i_d.push(out.i_d);
        trace.i_l.push(out.i_l);
        trace.converged.push(true);
        trace.residual.push(out.residual);
    }
    Ok(trace)
}

/// CSV with columns `t_s,v_in,v_out,i_d`.
pub fn write_trace_csv<W: Write>(trace: &TransientTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "v_in", "v_out", "i_d"])?;
    for k in 0..trace.len() {
        w.write_record([
            trace.t[k].to_string(),
            trace.v_in[k].to_string(),
            trace.v_out[k].to_string(),
            trace.i_d[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
