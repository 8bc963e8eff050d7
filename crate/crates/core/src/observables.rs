//! Converts propagation results into measured quantities: wavepacket
//! relative phase, π-jump detection, pump-probe beat traces and spectra,
//! Gaussian beam-profile averaging, and pre-pulse contamination.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::atomics::LevelSystem;
use crate::error::{Error, Result};
use crate::num::{r, Real};
use crate::propagator::{
    propagate, propagate_sequence, SequencePulse, Step, Trajectory, WavepacketState,
};
use crate::pulse::TemporalField;

/// Amplitudes below this make a relative phase indeterminate.
pub const PHASE_AMPLITUDE_FLOOR: f64 = 1e-6;

/// Pre-pulse lead time, fs (2.8 ns).
pub const PREPULSE_LEAD_FS: f64 = 2.8e6;

/// Population threshold for tagging a phase jump with a level zero.
pub const ZERO_TAG_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReading<R: Real> {
    /// arg(c_upper) − arg(c_lower) in the interaction picture, mapped to
    /// (−π, π].
    pub phase: R,
    /// Set when either amplitude is below the floor; the value is still
    /// reported but unreliable.
    pub indeterminate: bool,
}

/// Relative phase between the two excited amplitudes of `state`, taken at
/// `reference_time` (fs, the state's own time — pulse end by default).
///
/// Bare-frame phases e^{−iω_k·t_ref} are restored before differencing, so
/// the result is independent of the rotating-frame carrier; the `carrier`
/// argument is kept for interface symmetry and documentation only.
pub fn relative_phase<R: Real>(
    state: &WavepacketState<R>,
    system: &LevelSystem<R>,
    _carrier: R,
    reference_time: R,
) -> Result<PhaseReading<R>> {
    if system.n_excited() != 2 || state.amplitudes.len() != system.n_levels() {
        return Err(Error::Config(
            "relative phase requires a state over exactly two excited levels".into(),
        ));
    }
    let c1 = state.amplitudes[1];
    let c2 = state.amplitudes[2];
    let floor = r::<R>(PHASE_AMPLITUDE_FLOOR);
    let indeterminate = c1.norm() < floor || c2.norm() < floor;
    let w1 = system.levels()[1].angular_frequency;
    let w2 = system.levels()[2].angular_frequency;
    let raw = c2.arg() - c1.arg() + (w2 - w1) * reference_time;
    Ok(PhaseReading { phase: wrap_pi(raw), indeterminate })
}

/// Maps an angle to (−π, π].
pub fn wrap_pi<R: Real>(x: R) -> R {
    let mut y = x % R::TAU();
    if y > R::PI() {
        y = y - R::TAU();
    } else if y <= -R::PI() {
        y = y + R::TAU();
    }
    y
}

/// Unwraps a wrapped phase series by removing 2π steps between neighbors.
pub fn unwrap_series<R: Real>(wrapped: &[R]) -> Vec<R> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut offset = R::zero();
    let mut prev = None;
    for &w in wrapped {
        if let Some(p) = prev {
            let d = wrap_pi(w - p);
            offset = offset + d - (w - p);
        }
        out.push(w + offset);
        prev = Some(w);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseJump<R: Real> {
    /// Scan coordinate at the jump (midpoint of the merged segment).
    pub x: R,
    /// Signed jump size, rad.
    pub size: R,
    /// Excited level indices whose population dips below the tag threshold
    /// within ±2 samples of the jump.
    pub zero_levels: Vec<usize>,
}

/// Finds discrete-derivative outliers > 0.5 rad in an unwrapped phase
/// series, merges contiguous ones, and annotates each with any excited
/// level whose population has a near-zero within ±2 samples.
///
/// `populations[k]` is the series for excited level k+1 on the same grid.
pub fn detect_phase_jumps<R: Real>(
    x: &[R],
    phases: &[R],
    populations: &[Vec<R>],
    tag_threshold: R,
) -> Result<Vec<PhaseJump<R>>> {
    let n = x.len();
    if phases.len() != n || populations.iter().any(|p| p.len() != n) {
        return Err(Error::Config("phase-jump inputs are on mismatched grids".into()));
    }
    let mut jumps = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let d = phases[i + 1] - phases[i];
        if d.abs() > r(0.5) {
            let start = i;
            let mut size = d;
            while i + 2 < n && (phases[i + 2] - phases[i + 1]).abs() > r(0.5) {
                i += 1;
                size = size + phases[i + 1] - phases[i];
            }
            let end = i + 1;
            let lo = start.saturating_sub(2);
            let hi = (end + 2).min(n - 1);
            let mut zero_levels = Vec::new();
            for (k, pop) in populations.iter().enumerate() {
                if pop[lo..=hi].iter().any(|p| *p < tag_threshold) {
                    zero_levels.push(k + 1);
                }
            }
            jumps.push(PhaseJump {
                x: (x[start] + x[end]) * r(0.5),
                size,
                zero_levels,
            });
        }
        i += 1;
    }
    Ok(jumps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel<R: Real> {
    /// Complex interference weight per excited level (equal moduli model
    /// the experimentally equalized probe paths).
    pub path_weights: Vec<Complex<R>>,
    /// Photons consumed from the excited state in the probe/ionization
    /// step; enters the spatial beam averaging only.
    pub nonlinearity_order: u32,
    /// Probe intensity FWHM (fs); beat traces are convolved with it.
    /// `None` models an instantaneous probe.
    pub probe_fwhm_fs: Option<R>,
}

impl<R: Real> ProbeModel<R> {
    /// Equal-weight probe for a system with `n_excited` levels, 120 fs
    /// duration, two-photon ionization from the excited state.
    pub fn equalized(n_excited: usize) -> Self {
        Self {
            path_weights: vec![Complex::new(R::one(), R::zero()); n_excited],
            nonlinearity_order: 2,
            probe_fwhm_fs: Some(r(120.0)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.path_weights.iter().all(|w| w.norm() == R::zero()) {
            return Err(Error::Config("probe model needs at least one nonzero weight".into()));
        }
        if self.nonlinearity_order == 0 {
            return Err(Error::Config("probe nonlinearity order must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatTrace<R: Real> {
    /// Probe delays, fs (uniform grid).
    pub delays: Vec<R>,
    /// Two-path interference signal, ≥ 0, arbitrary units.
    pub signal: Vec<R>,
}

/// Path-interference probe signal S(τ) = |Σ_k w_k c_k e^{−iω_k τ}|² over
/// the delay grid, optionally convolved with the probe duration.
pub fn beat_signal<R: Real>(
    state: &WavepacketState<R>,
    system: &LevelSystem<R>,
    carrier: R,
    probe: &ProbeModel<R>,
    delays: &[R],
) -> Result<BeatTrace<R>> {
    probe.validate()?;
    if probe.path_weights.len() != system.n_excited() {
        return Err(Error::Config(format!(
            "probe has {} weights for {} excited levels",
            probe.path_weights.len(),
            system.n_excited()
        )));
    }
    let mut signal: Vec<R> = delays
        .iter()
        .map(|&tau| {
            let mut sum = Complex::new(R::zero(), R::zero());
            for k in 1..system.n_levels() {
                let det = system.levels()[k].angular_frequency - carrier;
                let ph = Complex::from_polar(R::one(), -det * tau);
                sum = sum + probe.path_weights[k - 1] * state.amplitudes[k] * ph;
            }
            sum.norm_sqr()
        })
        .collect();
    if let Some(fwhm) = probe.probe_fwhm_fs {
        if fwhm > R::zero() && delays.len() > 2 {
            let dtau = delays[1] - delays[0];
            signal = gaussian_smooth(&signal, fwhm / dtau);
        }
    }
    Ok(BeatTrace { delays: delays.to_vec(), signal })
}

/// Gaussian smoothing with the kernel FWHM given in samples; the kernel is
/// renormalized at the edges.
pub fn gaussian_smooth<R: Real>(y: &[R], fwhm_samples: R) -> Vec<R> {
    let sigma = fwhm_samples / r(2.354820045030949); // 2√(2 ln2)
    if sigma <= R::zero() {
        return y.to_vec();
    }
    let reach = (sigma * r::<R>(4.0)).ceil().to_f64().unwrap() as isize;
    let kernel: Vec<R> = (-reach..=reach)
        .map(|i| {
            let u = r::<R>(i as f64) / sigma;
            (-u * u * r::<R>(0.5)).exp()
        })
        .collect();
    let n = y.len() as isize;
    (0..n)
        .map(|j| {
            let mut acc = R::zero();
            let mut wsum = R::zero();
            for (idx, w) in kernel.iter().enumerate() {
                let k = j + idx as isize - reach;
                if k >= 0 && k < n {
                    acc = acc + *w * y[k as usize];
                    wsum = wsum + *w;
                }
            }
            acc / wsum
        })
        .collect()
}

/// Mean-subtracted, Hann-windowed power spectrum of a beat trace.
/// Returns (frequencies in THz up to Nyquist, power).
pub fn beat_spectrum<R: Real>(trace: &BeatTrace<R>) -> Result<(Vec<R>, Vec<R>)> {
    let n = trace.signal.len();
    if n < 16 {
        return Err(Error::Numerics(
            "beat window too short for a spectrum (need ≥ 16 samples)".into(),
        ));
    }
    let dtau = trace.delays[1] - trace.delays[0];
    let mean = trace.signal.iter().copied().sum::<R>() / r(n as f64);
    let mut buf: Vec<Complex<R>> = trace
        .signal
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let hann = r::<R>(0.5)
                * (R::one() - (R::TAU() * r::<R>(j as f64) / r::<R>(n as f64)).cos());
            Complex::new((s - mean) * hann, R::zero())
        })
        .collect();
    let mut planner = FftPlanner::<R>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let df_thz = r::<R>(1e3) / (dtau * r(n as f64)); // 1/fs = 1000 THz
    let freqs = (0..half).map(|k| df_thz * r(k as f64)).collect();
    let power = buf[..half].iter().map(|c| c.norm_sqr()).collect();
    Ok((freqs, power))
}

/// Frequency (THz) of the strongest non-DC spectral bin.
pub fn spectrum_peak<R: Real>(freqs: &[R], power: &[R]) -> Option<R> {
    freqs
        .iter()
        .zip(power)
        .skip(1)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(f, _)| *f)
}

/// Averages a signal-vs-area curve over a Gaussian pump beam profile probed
/// by a tighter Gaussian probe.
///
/// Pump intensity I(r) ∝ e^{−2r²/w²} gives local area A(r) = A₀e^{−r²/w²};
/// the probe weight is e^{−2·order·r²/w_p²}, w_p = ratio·w. In the radial
/// substitution x = r²/w² the average at target area A₀ becomes
/// β∫₀^∞ s(A₀e^{−x})e^{−βx}dx with β = 2·order/ratio². The signal is
/// linearly interpolated on the supplied samples and held constant below
/// the lowest sampled area.
pub fn beam_average<R: Real>(
    areas: &[R],
    signal: &[R],
    diameter_ratio: R,
    probe_order: u32,
) -> Result<Vec<R>> {
    if areas.len() != signal.len() || areas.len() < 2 {
        return Err(Error::Config("beam averaging needs matching area/signal grids".into()));
    }
    if areas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("area grid must be strictly increasing".into()));
    }
    if diameter_ratio < R::zero() {
        return Err(Error::Config("diameter ratio must be ≥ 0".into()));
    }
    if probe_order == 0 {
        return Err(Error::Config("probe order must be ≥ 1".into()));
    }
    if diameter_ratio < r(1e-6) {
        // delta-weight limit: probing only the beam center
        return Ok(signal.to_vec());
    }
    let beta = r::<R>(2.0) * r::<R>(probe_order as f64) / (diameter_ratio * diameter_ratio);
    let x_cut = r::<R>(40.0) / beta;
    let nq = 2000usize;
    let dx = x_cut / r(nq as f64);
    let interp = |a: R| -> R {
        if a <= areas[0] {
            return signal[0];
        }
        match areas.binary_search_by(|v| v.partial_cmp(&a).unwrap()) {
            Ok(i) => signal[i],
            Err(i) => {
                let f = (a - areas[i - 1]) / (areas[i] - areas[i - 1]);
                signal[i - 1] + (signal[i] - signal[i - 1]) * f
            }
        }
    };
    Ok(areas
        .iter()
        .map(|&a0| {
            let mut acc = R::zero();
            let mut wsum = R::zero();
            for q in 0..=nq {
                let x = dx * r(q as f64);
                let w = (-beta * x).exp()
                    * if q == 0 || q == nq { r(0.5) } else { R::one() };
                acc = acc + w * interp(a0 * (-x).exp());
                wsum = wsum + w;
            }
            acc / wsum
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrepulsePhase<R: Real> {
    Fixed(R),
    /// Average populations over 16 uniformly spaced optical phases; the
    /// pre-pulse phase drifts freely over the 2.8 ns lead in practice.
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrepulseOutcome<R: Real> {
    Final(WavepacketState<R>),
    AveragedPopulations(Vec<R>),
}

impl<R: Real> PrepulseOutcome<R> {
    pub fn populations(&self) -> Vec<R> {
        match self {
            PrepulseOutcome::Final(s) => s.populations(),
            PrepulseOutcome::AveragedPopulations(p) => p.clone(),
        }
    }
}

/// Propagates a weak copy of the main pulse (carrying `fraction_energy` of
/// its energy) 2.8 ns ahead of the main pulse.
pub fn prepulse_contaminate<R: Real>(
    main: &TemporalField<R>,
    fraction_energy: R,
    phase: PrepulsePhase<R>,
    system: &LevelSystem<R>,
    initial: &WavepacketState<R>,
    step: Step<R>,
) -> Result<PrepulseOutcome<R>> {
    if fraction_energy < R::zero() || fraction_energy > r(0.05) {
        return Err(Error::Config(
            "pre-pulse energy fraction must lie within [0, 0.05]".into(),
        ));
    }
    if fraction_energy == R::zero() {
        let tr = propagate(system, main, initial, step)?;
        return Ok(match phase {
            PrepulsePhase::Fixed(_) => PrepulseOutcome::Final(tr.final_state().clone()),
            PrepulsePhase::Average => {
                PrepulseOutcome::AveragedPopulations(tr.final_state().populations())
            }
        });
    }
    let pre = main.scaled(fraction_energy.sqrt());
    let run = |optical_phase: R| -> Result<Trajectory<R>> {
        propagate_sequence(
            system,
            &[
                SequencePulse {
                    field: pre.clone(),
                    delay_fs: R::zero(),
                    optical_phase_rad: optical_phase,
                },
                SequencePulse {
                    field: main.clone(),
                    delay_fs: r(PREPULSE_LEAD_FS),
                    optical_phase_rad: R::zero(),
                },
            ],
            initial,
            step,
        )
    };
    match phase {
        PrepulsePhase::Fixed(ph) => Ok(PrepulseOutcome::Final(run(ph)?.final_state().clone())),
        PrepulsePhase::Average => {
            let n_phases = 16;
            let mut acc = vec![R::zero(); system.n_levels()];
            for i in 0..n_phases {
                let ph = R::TAU() * r(i as f64) / r(n_phases as f64);
                let pops = run(ph)?.final_state().populations();
                for (a, p) in acc.iter_mut().zip(pops) {
                    *a = *a + p;
                }
            }
            for a in &mut acc {
                *a = *a / r(n_phases as f64);
            }
            Ok(PrepulseOutcome::AveragedPopulations(acc))
        }
    }
}
