//! Rotating-wave Schrödinger propagation of an N-level system driven by a
//! complex temporal envelope.
//!
//! In the frame rotating at the field carrier, iċ = (H/ħ)c with diagonal
//! entries ω_k − ω_c for excited levels (0 for ground) and ground↔excited
//! couplings −Ω_k(t)/2, Ω_k(t) = μ_k ε(t)/ħ. Counter-rotating terms are
//! dropped. Fixed-step classical RK4; the step is snapped to an integer
//! subdivision of the field sampling so the piecewise-linear envelope is
//! smooth inside every step.

use num_complex::Complex;

use crate::atomics::LevelSystem;
use crate::error::{Error, Result};
use crate::num::{r, Real};
use crate::pulse::TemporalField;
use crate::units::rabi_rad_per_fs;

/// Norm drift above this aborts the integration.
pub const NORM_DRIFT_ABORT: f64 = 1e-6;

/// Fields are trimmed to the region where |ε| exceeds this fraction of the
/// peak before stepping.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Complex amplitudes per level, in the frame rotating at the field carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketState<R: Real> {
    pub amplitudes: Vec<Complex<R>>,
}

impl<R: Real> WavepacketState<R> {
    /// All population in the ground state.
    pub fn ground(n_levels: usize) -> Self {
        let mut amplitudes = vec![Complex::new(R::zero(), R::zero()); n_levels];
        amplitudes[0] = Complex::new(R::one(), R::zero());
        Self { amplitudes }
    }

    pub fn norm_sqr(&self) -> R {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn population(&self, k: usize) -> R {
        self.amplitudes[k].norm_sqr()
    }

    pub fn populations(&self) -> Vec<R> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Free evolution over `duration` fs: c_k ← c_k·e^{−i(ω_k − ω_c)T}.
    pub fn free_evolved(&self, system: &LevelSystem<R>, carrier: R, duration: R) -> Self {
        let mut out = self.clone();
        for (k, c) in out.amplitudes.iter_mut().enumerate() {
            let det = if k == 0 {
                R::zero()
            } else {
                system.levels()[k].angular_frequency - carrier
            };
            *c = *c * Complex::from_polar(R::one(), -det * duration);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step<R: Real> {
    /// min(0.25 fs, dt/4), snapped to an integer subdivision of dt.
    Auto,
    /// Requested step in fs, snapped likewise.
    Fixed(R),
}

#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    /// Sample times, fs (one per field sample within the trimmed support).
    pub times: Vec<R>,
    pub states: Vec<WavepacketState<R>>,
    /// Largest |Σ|c|² − 1| observed along the trajectory.
    pub max_norm_drift: R,
    /// Set when |ω_k − ω_c| > 0.1·ω_c for some level (RWA questionable).
    pub rwa_warning: bool,
}

impl<R: Real> Trajectory<R> {
    pub fn final_state(&self) -> &WavepacketState<R> {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> R {
        *self.times.last().expect("trajectory has at least the initial state")
    }

    /// State at an arbitrary time on the trajectory's clock. Outside the
    /// recorded range the boundary state is free-evolved analytically (also
    /// backwards for t before the first sample); between samples the state
    /// is free-evolved from the sample on the left, which is exact wherever
    /// the field vanishes and accurate to O(Ω·dt) inside the pulse.
    pub fn state_at(
        &self,
        system: &LevelSystem<R>,
        carrier: R,
        t: R,
    ) -> WavepacketState<R> {
        let i = match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.states[i].free_evolved(system, carrier, t - self.times[i])
    }
}

struct Rhs<R: Real> {
    /// ω_k − ω_c per level (0 for ground).
    detunings: Vec<R>,
    /// μ_k/ħ prefactors converting ε (V/m) to Ω_k (rad/fs); 0 for uncoupled.
    coupling: Vec<R>,
}

impl<R: Real> Rhs<R> {
    fn new(system: &LevelSystem<R>, carrier: R) -> Self {
        let n = system.n_levels();
        let mut detunings = vec![R::zero(); n];
        let mut coupling = vec![R::zero(); n];
        for k in 1..n {
            detunings[k] = system.levels()[k].angular_frequency - carrier;
            if let Some(d) = system.dipole_to(k) {
                coupling[k] = rabi_rad_per_fs(d, R::one());
            }
        }
        Self { detunings, coupling }
    }

    /// dc/dt = −i·(H/ħ)·c for field envelope value `eps` (V/m).
    #[inline]
    fn eval(&self, c: &[Complex<R>], eps: Complex<R>, out: &mut [Complex<R>]) {
        let i = Complex::new(R::zero(), R::one());
        let half = r::<R>(0.5);
        let mut g = Complex::new(R::zero(), R::zero());
        for k in 1..c.len() {
            let rabi = eps * self.coupling[k];
            // ċ_g = (i/2)·Σ Ω_k* c_k
            g = g + rabi.conj() * c[k];
            // ċ_k = (i/2)·Ω_k c_g − i·Δ_k c_k
            out[k] = i * (rabi * c[0] * half - c[k] * self.detunings[k]);
        }
        out[0] = i * g * half;
    }
}

fn snapped_step<R: Real>(dt: R, step: Step<R>) -> Result<(usize, R)> {
    let requested = match step {
        Step::Auto => r::<R>(0.25).min(dt / r(4.0)),
        Step::Fixed(s) => {
            if s <= R::zero() {
                return Err(Error::Config("integration step must be > 0".into()));
            }
            s
        }
    };
    let m = (dt / requested).ceil().to_f64().unwrap().max(1.0) as usize;
    Ok((m, dt / r(m as f64)))
}

/// Integrates the driven system over the (trimmed) support of `field`,
/// recording one state per field sample.
pub fn propagate<R: Real>(
    system: &LevelSystem<R>,
    field: &TemporalField<R>,
    initial: &WavepacketState<R>,
    step: Step<R>,
) -> Result<Trajectory<R>> {
    if initial.amplitudes.len() != system.n_levels() {
        return Err(Error::Config(format!(
            "initial state has {} amplitudes for a {}-level system",
            initial.amplitudes.len(),
            system.n_levels()
        )));
    }
    let n0 = initial.norm_sqr();
    if (n0 - R::one()).abs() > r(1e-9) {
        return Err(Error::Config("initial state must be normalized".into()));
    }
    let rwa_warning = system.levels()[1..]
        .iter()
        .any(|lv| (lv.angular_frequency - field.carrier).abs() > r::<R>(0.1) * field.carrier);

    let field = field.trimmed(r(SUPPORT_THRESHOLD));
    let n_samples = field.len();
    let rhs = Rhs::new(system, field.carrier);
    let nl = system.n_levels();

    let mut times = Vec::with_capacity(n_samples.max(1));
    let mut states = Vec::with_capacity(n_samples.max(1));
    let mut c = initial.amplitudes.clone();
    times.push(field.t0);
    states.push(initial.clone());

    let mut max_drift = (n0 - R::one()).abs();
    if n_samples >= 2 {
        let (m, h) = snapped_step(field.dt, step)?;
        let mut k1 = vec![Complex::new(R::zero(), R::zero()); nl];
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut tmp = k1.clone();
        let half = r::<R>(0.5);
        let sixth = R::one() / r(6.0);
        for j in 0..n_samples - 1 {
            let t_base = field.time(j);
            for s in 0..m {
                let t = t_base + h * r(s as f64);
                let e1 = field.sample(t);
                let e2 = field.sample(t + h * half);
                let e3 = field.sample(t + h);
                rhs.eval(&c, e1, &mut k1);
                for q in 0..nl {
                    tmp[q] = c[q] + k1[q] * (h * half);
                }
                rhs.eval(&tmp, e2, &mut k2);
                for q in 0..nl {
                    tmp[q] = c[q] + k2[q] * (h * half);
                }
                rhs.eval(&tmp, e2, &mut k3);
                for q in 0..nl {
                    tmp[q] = c[q] + k3[q] * h;
                }
                rhs.eval(&tmp, e3, &mut k4);
                for q in 0..nl {
                    c[q] = c[q]
                        + (k1[q] + (k2[q] + k3[q]) * r::<R>(2.0) + k4[q]) * (h * sixth);
                }
            }
            let state = WavepacketState { amplitudes: c.clone() };
            let drift = (state.norm_sqr() - R::one()).abs();
            if drift > max_drift {
                max_drift = drift;
            }
            if drift > r(NORM_DRIFT_ABORT) {
                return Err(Error::NormDrift { drift: drift.to_f64().unwrap_or(f64::NAN) });
            }
            times.push(field.time(j + 1));
            states.push(state);
        }
    }
    Ok(Trajectory { times, states, max_norm_drift: max_drift, rwa_warning })
}

/// One element of a pulse sequence: free evolution over `delay_fs`, then the
/// field with a constant optical phase applied to its envelope.
#[derive(Debug, Clone)]
pub struct SequencePulse<R: Real> {
    pub field: TemporalField<R>,
    /// Gap of free evolution before this pulse, fs (≥ 0).
    pub delay_fs: R,
    pub optical_phase_rad: R,
}

/// Propagates a train of pulses. Between pulses the exact free-evolution
/// phases e^{−i(ω_k−ω_c)T} are applied analytically; no numerical stepping
/// happens across the gaps, so nanosecond delays cost nothing.
pub fn propagate_sequence<R: Real>(
    system: &LevelSystem<R>,
    pulses: &[SequencePulse<R>],
    initial: &WavepacketState<R>,
    step: Step<R>,
) -> Result<Trajectory<R>> {
    if pulses.is_empty() {
        return Err(Error::Config("pulse sequence is empty".into()));
    }
    let mut state = initial.clone();
    let mut times: Vec<R> = Vec::new();
    let mut states: Vec<WavepacketState<R>> = Vec::new();
    let mut max_drift = R::zero();
    let mut rwa_warning = false;
    let mut clock = R::zero();
    for (idx, p) in pulses.iter().enumerate() {
        if p.delay_fs < R::zero() {
            return Err(Error::Config("inter-pulse delay must be ≥ 0".into()));
        }
        state = state.free_evolved(system, p.field.carrier, p.delay_fs);
        clock = clock + p.delay_fs;
        let field = p.field.with_phase(p.optical_phase_rad);
        let tr = propagate(system, &field, &state, step)?;
        let offset = clock - tr.times[0];
        let skip = if idx == 0 { 0 } else { 1 };
        for (t, s) in tr.times.iter().zip(&tr.states).skip(skip) {
            times.push(*t + offset);
            states.push(s.clone());
        }
        clock = tr.final_time() + offset;
        state = tr.final_state().clone();
        if tr.max_norm_drift > max_drift {
            max_drift = tr.max_norm_drift;
        }
        rwa_warning = rwa_warning || tr.rwa_warning;
    }
    Ok(Trajectory { times, states, max_norm_drift: max_drift, rwa_warning })
}

/// Writes a trajectory as CSV rows (t_fs, Re c₀, Im c₀, ..., norm).
pub fn write_trajectory_csv<R: Real, W: std::io::Write>(
    tr: &Trajectory<R>,
    mut w: W,
) -> std::io::Result<()> {
    let n = tr.states.first().map_or(0, |s| s.amplitudes.len());
    write!(w, "t_fs")?;
    for k in 0..n {
        write!(w, ",re_c{k},im_c{k}")?;
    }
    writeln!(w, ",norm")?;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        write!(w, "{:.12e}", t)?;
        for c in &s.amplitudes {
            write!(w, ",{:.12e},{:.12e}", c.re, c.im)?;
        }
        writeln!(w, ",{:.12e}", s.norm_sqr())?;
    }
    Ok(())
}
