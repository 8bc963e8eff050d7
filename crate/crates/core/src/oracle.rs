//! Closed-form two-level solutions under cw driving, the pulse-area law,
//! and the sin²(A/2) energy-scan fit. These are the analytic ground truth
//! the integrator is checked against.
//!
//! Sign conventions (fixed by agreement with the propagator): the detuning
//! is Δ = ω₀ − ω_carrier, the relative phase is defined through
//! Ψ = a·e^{−i(ω₀t+δ)}|e⟩ + b|g⟩ with a ≥ 0, and resolves to
//!
//!   δ(t) = arg(cos(Ωt/2) + i(Δ/Ω)sin(Ωt/2)) − π/2 + π·⌊Ωt/2π⌋ − Δt
//!
//! with the arg taken on its continuous branch. δ is continuous except for
//! +π jumps exactly at the excited-population zeros Ωt = 2πn (jump assigned
//! at the closed left endpoint). δ(0⁺) = −π/2 for either detuning sign.
//! Δ = 0 is defined by the Δ → 0⁺ limit.

use crate::error::{Error, Result};
use crate::num::{r, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams<R: Real> {
    /// Resonant Rabi frequency Ω₀, rad/fs, ≥ 0.
    pub rabi: R,
    /// Δ = ω₀ − ω_carrier, rad/fs.
    pub detuning: R,
    /// Generalized Rabi frequency Ω = √(Ω₀² + Δ²), cached.
    pub generalized: R,
}

impl<R: Real> TwoLevelParams<R> {
    pub fn new(rabi: R, detuning: R) -> Result<Self> {
        if rabi < R::zero() {
            return Err(Error::Config("Rabi frequency must be ≥ 0".into()));
        }
        let generalized = (rabi * rabi + detuning * detuning).sqrt();
        Ok(Self { rabi, detuning, generalized })
    }
}

/// Excited-state population a²(t) = (Ω₀²/Ω²)·sin²(Ωt/2).
pub fn cw_population<R: Real>(p: &TwoLevelParams<R>, t: R) -> R {
    if p.generalized == R::zero() {
        return R::zero();
    }
    let s = (p.generalized * t * r(0.5)).sin();
    (p.rabi / p.generalized).powi(2) * s * s
}

/// Ground-state population from the closed form, b²(t) = cos²(Ωt/2) +
/// (Δ²/Ω²)·sin²(Ωt/2). Complements `cw_population` exactly.
pub fn cw_ground_population<R: Real>(p: &TwoLevelParams<R>, t: R) -> R {
    if p.generalized == R::zero() {
        return R::one();
    }
    let x = p.generalized * t * r(0.5);
    let c = x.cos();
    let s = x.sin();
    c * c + (p.detuning / p.generalized).powi(2) * s * s
}

/// Relative phase δ(t) on its continuous unwrapped branch (see module docs).
pub fn cw_phase<R: Real>(p: &TwoLevelParams<R>, t: R) -> R {
    let omega = p.generalized;
    if omega == R::zero() {
        return -R::FRAC_PI_2();
    }
    let x = omega * t * r(0.5);
    let half_periods = (omega * t / R::TAU()).floor();
    let theta = if p.detuning == R::zero() {
        // Δ → 0⁺ limit: the winding survives as π steps at ground minima
        R::PI() * (x / R::PI() + r(0.5)).floor()
    } else {
        let k = p.detuning / omega;
        let wrapped = (k * x.sin()).atan2(x.cos());
        // continuous branch: arg(cos x + i·k·sin x) stays within π/2 of the
        // reference line sign(k)·x, so rounding to that line recovers the
        // winding robustly, including exactly at the branch cuts
        let reference = if p.detuning > R::zero() { x } else { -x };
        wrapped + R::TAU() * ((reference - wrapped) / R::TAU()).round()
    };
    theta - R::FRAC_PI_2() + R::PI() * half_periods - p.detuning * t
}

/// Final excited population after a resonant pulse of the given area:
/// sin²(A/2).
pub fn area_population<R: Real>(area: R) -> R {
    let s = (area * r(0.5)).sin();
    s * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaScaleFit<R: Real> {
    /// Area per √energy, rad/√J.
    pub k: R,
    pub amplitude: R,
    pub offset: R,
    /// Euclidean norm of the residual at the optimum.
    pub residual: R,
}

impl<R: Real> AreaScaleFit<R> {
    /// Energy of the first fitted oscillation minimum, k√E = 2π.
    pub fn first_minimum_energy(&self) -> R {
        (R::TAU() / self.k).powi(2)
    }
}

/// Least-squares fit of signal ≈ amplitude·sin²(k√E/2) + offset.
///
/// sin² fits are littered with local minima, so k is located by a
/// deterministic coarse grid search (amplitude and offset solved linearly at
/// each k) followed by golden-section refinement.
pub fn fit_area_scale<R: Real>(energies: &[R], signal: &[R]) -> Result<AreaScaleFit<R>> {
    if energies.len() != signal.len() {
        return Err(Error::Config("energy and signal lengths differ".into()));
    }
    if energies.len() < 10 {
        return Err(Error::Config(
            "area-scale fit needs at least 10 points spanning one oscillation".into(),
        ));
    }
    if energies.iter().any(|e| *e < R::zero()) {
        return Err(Error::Config("energies must be ≥ 0".into()));
    }
    let roots: Vec<R> = energies.iter().map(|e| e.sqrt()).collect();
    let umax = roots.iter().fold(R::zero(), |m, &v| if v > m { v } else { m });
    if umax <= R::zero() {
        return Err(Error::Config("energies must include positive values".into()));
    }
    let du = umax / r((energies.len() - 1) as f64);
    let k_hi = R::TAU() / du; // ~2 samples per oscillation at the far end
    let n_coarse = 4000;
    let mut best = (R::infinity(), R::zero());
    for i in 1..=n_coarse {
        let k = k_hi * r(i as f64 / n_coarse as f64);
        let res = residual_at(&roots, signal, k).0;
        if res < best.0 {
            best = (res, k);
        }
    }
    // golden-section refinement around the best coarse sample
    let gr = r::<R>((5f64.sqrt() - 1.0) / 2.0);
    let step = k_hi / r(n_coarse as f64);
    let mut a = (best.1 - step * r(2.0)).max(R::zero());
    let mut b = best.1 + step * r(2.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = residual_at(&roots, signal, c).0;
    let mut fd = residual_at(&roots, signal, d).0;
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = residual_at(&roots, signal, c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = residual_at(&roots, signal, d).0;
        }
    }
    let k = (a + b) * r(0.5);
    let (residual, amplitude, offset) = residual_at(&roots, signal, k);
    if !residual.is_finite() {
        return Err(Error::FitDiverged {
            best_k: k.to_f64().unwrap_or(f64::NAN),
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(AreaScaleFit { k, amplitude, offset, residual })
}

/// Residual norm with (amplitude, offset) solved by linear least squares at
/// fixed k.
fn residual_at<R: Real>(roots: &[R], signal: &[R], k: R) -> (R, R, R) {
    let n = r::<R>(roots.len() as f64);
    let mut sxx = R::zero();
    let mut sx = R::zero();
    let mut sxy = R::zero();
    let mut sy = R::zero();
    for (u, y) in roots.iter().zip(signal) {
        let x = area_population(k * *u);
        sxx = sxx + x * x;
        sx = sx + x;
        sxy = sxy + x * *y;
        sy = sy + *y;
    }
    let det = sxx * n - sx * sx;
    let (amp, off) = if det.abs() < r(1e-30) {
        (R::zero(), sy / n)
    } else {
        ((sxy * n - sx * sy) / det, (sxx * sy - sx * sxy) / det)
    };
    let mut res = R::zero();
    for (u, y) in roots.iter().zip(signal) {
        let m = amp * area_population(k * *u) + off;
        res = res + (*y - m) * (*y - m);
    }
    (res.sqrt(), amp, off)
}

/// Reads a two-column (x, y) CSV; a single non-numeric header row is
/// skipped.
pub fn read_two_column_csv<R: Real>(path: &std::path::Path) -> Result<(Vec<R>, Vec<R>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), i + 1)));
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(r(x));
                ys.push(r(y));
            }
            _ if i == 0 => continue, // header
            _ => {
                return Err(Error::Config(format!(
                    "{}:{}: non-numeric data {a:?}, {b:?}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((xs, ys))
}
