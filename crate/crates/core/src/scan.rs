//! Scan execution: effective-area scans, area×delay beat maps, and Rb
//! energy scans, plus deterministic CSV / gnuplot-matrix emission.

use num_complex::Complex;
use rayon::prelude::*;
use std::io::Write as _;
use std::path::Path;

use crate::atomics::LevelSystem;
use crate::config::{ExperimentConfig, OutputFormat, PhaseSpec, ScanKind};
use crate::error::{Error, Result};
use crate::num::{r, Real};
use crate::observables::{
    beam_average, gaussian_smooth, relative_phase, ProbeModel, PREPULSE_LEAD_FS,
};
use crate::oracle::{fit_area_scale, AreaScaleFit};
use crate::propagator::{
    propagate, Step, Trajectory, WavepacketState, SUPPORT_THRESHOLD,
};
use crate::pulse::{
    apply_mask, effective_area, gaussian_spectrum_at, pulse_area, to_temporal,
    SpectralField, TemporalField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    IonSignal,
    /// Population of the given level index.
    Population(usize),
    GroundPopulation,
    RelativePhase,
    /// 1 where the relative phase is indeterminate, else 0.
    PhaseIndeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series<R: Real> {
    pub kind: ObservableKind,
    pub label: String,
    pub values: Vec<R>,
}

/// Scan result container: 1D scans carry `series`, 2D maps carry `matrix`
/// with rows indexed by `y` (delay) and columns by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid<R: Real> {
    pub x: Vec<R>,
    pub x_label: String,
    pub y: Option<Vec<R>>,
    pub y_label: Option<String>,
    pub series: Vec<Series<R>>,
    pub matrix: Option<Vec<Vec<R>>>,
}

impl<R: Real> ScanGrid<R> {
    /// Dimension and range invariants.
    pub fn validate(&self) -> Result<()> {
        for s in &self.series {
            if s.values.len() != self.x.len() {
                return Err(Error::Numerics(format!(
                    "series {} length {} ≠ x length {}",
                    s.label,
                    s.values.len(),
                    self.x.len()
                )));
            }
            if matches!(
                s.kind,
                ObservableKind::Population(_) | ObservableKind::GroundPopulation
            ) && s.values.iter().any(|v| *v < -r::<R>(1e-9) || *v > R::one() + r(1e-9))
            {
                return Err(Error::Numerics(format!(
                    "population series {} leaves [0, 1]",
                    s.label
                )));
            }
        }
        if let Some(m) = &self.matrix {
            let ny = self.y.as_ref().map(|y| y.len()).unwrap_or(0);
            if m.len() != ny || m.iter().any(|row| row.len() != self.x.len()) {
                return Err(Error::Numerics("matrix dims do not match axes".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScanOutput<R: Real> {
    pub grid: ScanGrid<R>,
    /// Present for energy scans: the sin²(k√E/2) fit.
    pub fit: Option<AreaScaleFit<R>>,
}

/// Field pipeline shared by all scan kinds: masked spectrum, synthesized
/// envelope (trimmed to support), and the base area of the synthesized
/// field used for amplitude calibration.
#[derive(Debug, Clone)]
pub struct Prepared<R: Real> {
    pub system: LevelSystem<R>,
    pub spectral: SpectralField<R>,
    pub temporal: TemporalField<R>,
    /// Effective area (two excited levels) or plain area (one) of
    /// `temporal`, rad.
    pub base_area: R,
    pub step: Step<R>,
}

pub fn prepare<R: Real>(cfg: &ExperimentConfig) -> Result<Prepared<R>> {
    cfg.validate()?;
    let system = cfg.system::<R>()?;
    let grid = cfg.grid_spec::<R>();
    let raw = gaussian_spectrum_at(
        r(cfg.carrier_nm()),
        r(cfg.spectrum.center_nm),
        r(cfg.spectrum.fwhm_nm),
        r(cfg.spectrum.energy_j),
        &grid,
    )?;
    let mut spectral = raw.clone();
    let mask = cfg.mask::<R>();
    if let Some(mask) = &mask {
        spectral = apply_mask(&raw, mask)?;
    }
    let base_area = if system.n_excited() == 2 {
        effective_area(&spectral, &system)?
    } else {
        let d = system
            .dipole_to(1)
            .ok_or_else(|| Error::Config("preset lacks a ground coupling".into()))?;
        pulse_area(&to_temporal(&spectral)?, d)
    };
    let temporal = to_temporal(&spectral)?.trimmed(r(SUPPORT_THRESHOLD));
    let step = match cfg.numerics.rk4_step_fs {
        Some(h) => Step::Fixed(r(h)),
        None => Step::Auto,
    };
    Ok(Prepared { system, spectral, temporal, base_area, step })
}

fn linspace<R: Real>(min: f64, max: f64, points: usize) -> Vec<R> {
    (0..points)
        .map(|i| r(min + (max - min) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Field amplitude scale factor that realizes a target area (rad).
fn area_scale<R: Real>(prep: &Prepared<R>, target_area: R) -> Result<R> {
    if prep.base_area <= R::zero() {
        return Err(Error::Numerics(
            "synthesized field has zero area; check the mask and spectrum".into(),
        ));
    }
    Ok(target_area / prep.base_area)
}

/// Pre-pulse phases to propagate for one scan point.
fn prepulse_phases<R: Real>(cfg: &ExperimentConfig) -> Vec<Option<R>> {
    match &cfg.prepulse {
        None => vec![None],
        Some(p) if p.fraction == 0.0 => vec![None],
        Some(p) => match &p.phase {
            PhaseSpec::Fixed(ph) => vec![Some(r(*ph))],
            PhaseSpec::Named(_) => {
                (0..16).map(|i| Some(r::<R>(i as f64 / 16.0) * R::TAU())).collect()
            }
        },
    }
}

/// Runs the main pulse at one amplitude scale, optionally preceded 2.8 ns
/// earlier by a pre-pulse copy at the configured energy fraction with the
/// given optical phase. The returned trajectory lives on the main field's
/// clock (t = 0 at the pulse center).
fn propagate_point<R: Real>(
    cfg: &ExperimentConfig,
    prep: &Prepared<R>,
    scale: R,
    pre_phase: Option<R>,
) -> Result<Trajectory<R>> {
    let main = prep.temporal.scaled(scale);
    let ground = WavepacketState::ground(prep.system.n_levels());
    let initial = match (pre_phase, &cfg.prepulse) {
        (Some(ph), Some(pc)) if pc.fraction > 0.0 => {
            let pre = main.scaled(r::<R>(pc.fraction).sqrt()).with_phase(ph);
            let tr = propagate(&prep.system, &pre, &ground, prep.step)?;
            // center-to-center lead of 2.8 ns
            let gap = r::<R>(PREPULSE_LEAD_FS) - tr.final_time() + main.t0;
            tr.final_state()
                .free_evolved(&prep.system, main.carrier, gap)
        }
        _ => ground,
    };
    propagate(&prep.system, &main, &initial, prep.step)
}

fn probe_model<R: Real>(cfg: &ExperimentConfig, n_excited: usize) -> ProbeModel<R> {
    ProbeModel {
        path_weights: vec![Complex::new(R::one(), R::zero()); n_excited],
        nonlinearity_order: cfg.probe.nonlinearity_order,
        probe_fwhm_fs: if cfg.probe.convolve && cfg.probe.fwhm_fs > 0.0 {
            Some(r(cfg.probe.fwhm_fs))
        } else {
            None
        },
    }
}

fn averaging_params<R: Real>(cfg: &ExperimentConfig) -> Option<(R, u32)> {
    cfg.averaging.as_ref().map(|a| {
        (
            r(a.diameter_ratio),
            a.probe_order.unwrap_or(cfg.probe.nonlinearity_order),
        )
    })
}

/// Dispatches on the configured scan kind.
pub fn run<R: Real>(cfg: &ExperimentConfig) -> Result<ScanOutput<R>> {
    match cfg.scan.kind {
        ScanKind::Area => run_area_scan(cfg),
        ScanKind::AreaDelay => run_area_delay_scan(cfg),
        ScanKind::RbEnergy => run_rb_energy_scan(cfg),
    }
}

/// 1D effective-area scan recording both excited populations, the ground
/// population, and the excited-state relative phase.
pub fn run_area_scan<R: Real>(cfg: &ExperimentConfig) -> Result<ScanOutput<R>> {
    let prep = prepare::<R>(cfg)?;
    if prep.system.n_excited() != 2 {
        return Err(Error::Config(
            "area scans need a preset with two excited levels".into(),
        ));
    }
    let ax = cfg.area_axis()?;
    let areas = linspace::<R>(ax.min_pi, ax.max_pi, ax.points);
    let t_ref = prep.temporal.t_end();
    let phases = prepulse_phases::<R>(cfg);

    struct Point<R: Real> {
        pops: Vec<R>,
        phase: R,
        indeterminate: bool,
    }
    let points: Vec<Point<R>> = areas
        .par_iter()
        .map(|&a_pi| -> Result<Point<R>> {
            let scale = area_scale(&prep, a_pi * R::PI())?;
            let mut pops = vec![R::zero(); prep.system.n_levels()];
            let mut phase = R::zero();
            let mut indeterminate = false;
            let multi = phases.len() > 1;
            for ph in &phases {
                let tr = propagate_point(cfg, &prep, scale, *ph)?;
                let fin = tr.final_state();
                for (acc, p) in pops.iter_mut().zip(fin.populations()) {
                    *acc = *acc + p;
                }
                if !multi {
                    let reading =
                        relative_phase(fin, &prep.system, prep.temporal.carrier, t_ref)?;
                    phase = reading.phase;
                    indeterminate = reading.indeterminate;
                }
            }
            let nn = r::<R>(phases.len() as f64);
            for p in &mut pops {
                *p = *p / nn;
            }
            if multi {
                // populations are phase-averaged; a single coherent phase
                // no longer exists
                phase = R::nan();
                indeterminate = true;
            }
            Ok(Point { pops, phase, indeterminate })
        })
        .collect::<Result<_>>()?;

    let labels = [
        prep.system.levels()[1].label.clone(),
        prep.system.levels()[2].label.clone(),
    ];
    let mut series = vec![
        Series {
            kind: ObservableKind::Population(1),
            label: format!("pop_{}", labels[0]),
            values: points.iter().map(|p| p.pops[1]).collect(),
        },
        Series {
            kind: ObservableKind::Population(2),
            label: format!("pop_{}", labels[1]),
            values: points.iter().map(|p| p.pops[2]).collect(),
        },
        Series {
            kind: ObservableKind::GroundPopulation,
            label: "pop_ground".into(),
            values: points.iter().map(|p| p.pops[0]).collect(),
        },
        Series {
            kind: ObservableKind::RelativePhase,
            label: "relative_phase_rad".into(),
            values: points.iter().map(|p| p.phase).collect(),
        },
        Series {
            kind: ObservableKind::PhaseIndeterminate,
            label: "phase_indeterminate".into(),
            values: points
                .iter()
                .map(|p| if p.indeterminate { R::one() } else { R::zero() })
                .collect(),
        },
    ];
    if let Some((ratio, order)) = averaging_params::<R>(cfg) {
        for s in &mut series {
            if matches!(
                s.kind,
                ObservableKind::Population(_) | ObservableKind::GroundPopulation
            ) {
                s.values = beam_average(&areas, &s.values, ratio, order)?;
            }
        }
    }
    let grid = ScanGrid {
        x: areas,
        x_label: "area_pi".into(),
        y: None,
        y_label: None,
        series,
        matrix: None,
    };
    grid.validate()?;
    Ok(ScanOutput { grid, fit: None })
}

/// 2D beat map: ion signal vs effective area (x) and probe delay (y, fs,
/// relative to the pump pulse center). Normalized to its global maximum.
pub fn run_area_delay_scan<R: Real>(cfg: &ExperimentConfig) -> Result<ScanOutput<R>> {
    let prep = prepare::<R>(cfg)?;
    if prep.system.n_excited() != 2 {
        return Err(Error::Config(
            "area×delay maps need a preset with two excited levels".into(),
        ));
    }
    let ax = cfg.area_axis()?;
    let dx = cfg.delay_axis()?;
    let areas = linspace::<R>(ax.min_pi, ax.max_pi, ax.points);
    let delays = linspace::<R>(dx.min_fs, dx.max_fs, dx.points);
    let probe = probe_model::<R>(cfg, 2);
    let phases = prepulse_phases::<R>(cfg);

    // columns[x][y]
    let columns: Vec<Vec<R>> = areas
        .par_iter()
        .map(|&a_pi| -> Result<Vec<R>> {
            let scale = area_scale(&prep, a_pi * R::PI())?;
            let mut acc = vec![R::zero(); delays.len()];
            for ph in &phases {
                let tr = propagate_point(cfg, &prep, scale, *ph)?;
                for (a, &tau) in acc.iter_mut().zip(&delays) {
                    let st = tr.state_at(&prep.system, prep.temporal.carrier, tau);
                    let mut sum = Complex::new(R::zero(), R::zero());
                    for k in 1..prep.system.n_levels() {
                        sum = sum + probe.path_weights[k - 1] * st.amplitudes[k];
                    }
                    *a = *a + sum.norm_sqr();
                }
            }
            let nn = r::<R>(phases.len() as f64);
            let mut col: Vec<R> = acc.into_iter().map(|v| v / nn).collect();
            if let Some(fwhm) = probe.probe_fwhm_fs {
                let dtau = delays[1] - delays[0];
                col = gaussian_smooth(&col, fwhm / dtau);
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;

    let mut matrix: Vec<Vec<R>> = (0..delays.len())
        .map(|iy| columns.iter().map(|c| c[iy]).collect())
        .collect();
    if let Some((ratio, order)) = averaging_params::<R>(cfg) {
        for row in &mut matrix {
            *row = beam_average(&areas, row, ratio, order)?;
        }
    }
    let peak = matrix
        .iter()
        .flatten()
        .fold(R::zero(), |m, &v| m.max(v));
    if peak > R::zero() {
        for row in &mut matrix {
            for v in row {
                *v = *v / peak;
            }
        }
    }
    let grid = ScanGrid {
        x: areas,
        x_label: "area_pi".into(),
        y: Some(delays),
        y_label: Some("delay_fs".into()),
        series: Vec::new(),
        matrix: Some(matrix),
    };
    grid.validate()?;
    Ok(ScanOutput { grid, fit: None })
}

/// Pulse-energy scan of the total excited population, normalized to its
/// maximum, with a sin²(k√E/2) fit.
pub fn run_rb_energy_scan<R: Real>(cfg: &ExperimentConfig) -> Result<ScanOutput<R>> {
    let prep = prepare::<R>(cfg)?;
    let ex = cfg.energy_axis()?;
    let energies = linspace::<R>(ex.min_j, ex.max_j, ex.points);
    let e_base = r::<R>(cfg.spectrum.energy_j);
    let phases = prepulse_phases::<R>(cfg);

    let mut signal: Vec<R> = energies
        .par_iter()
        .map(|&e| -> Result<R> {
            let scale = (e / e_base).sqrt();
            let mut acc = R::zero();
            for ph in &phases {
                let tr = propagate_point(cfg, &prep, scale, *ph)?;
                let pops = tr.final_state().populations();
                acc = acc + pops[1..].iter().copied().sum::<R>();
            }
            Ok(acc / r(phases.len() as f64))
        })
        .collect::<Result<_>>()?;

    if let Some((ratio, order)) = averaging_params::<R>(cfg) {
        // the local area scales with the local field, i.e. with √E, so √E
        // serves as the area abscissa for the profile average
        let abscissa: Vec<R> = energies.iter().map(|e| e.sqrt()).collect();
        signal = beam_average(&abscissa, &signal, ratio, order)?;
    }
    let fit = fit_area_scale(&energies, &signal)?;
    let peak = signal.iter().fold(R::zero(), |m, &v| m.max(v));
    if peak > R::zero() {
        for v in &mut signal {
            *v = *v / peak;
        }
    }
    let grid = ScanGrid {
        x: energies,
        x_label: "energy_j".into(),
        y: None,
        y_label: None,
        series: vec![Series {
            kind: ObservableKind::IonSignal,
            label: "ion_signal".into(),
            values: signal,
        }],
        matrix: None,
    };
    grid.validate()?;
    Ok(ScanOutput { grid, fit: Some(fit) })
}

fn fmt<R: Real>(v: R) -> String {
    format!("{:.12e}", v.to_f64().unwrap_or(f64::NAN))
}

/// Writes a scan grid to `path`. CSV: header row with units, one row per
/// point (2D maps in delay-major long form). gnuplot-matrix: leading axis
/// row and column around the value matrix. Output bytes are deterministic
/// for a given grid.
pub fn emit<R: Real>(grid: &ScanGrid<R>, path: &Path, format: OutputFormat) -> Result<()> {
    grid.validate()?;
    let mut text = String::new();
    match (format, &grid.matrix) {
        (OutputFormat::Csv, Some(m)) => {
            let y = grid.y.as_ref().expect("validated 2D grid");
            text.push_str(&format!(
                "{},{},ion_signal\n",
                grid.x_label,
                grid.y_label.as_deref().unwrap_or("y")
            ));
            for (iy, row) in m.iter().enumerate() {
                for (ix, v) in row.iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        fmt(grid.x[ix]),
                        fmt(y[iy]),
                        fmt(*v)
                    ));
                }
            }
        }
        (OutputFormat::Csv, None) => {
            text.push_str(&grid.x_label);
            for s in &grid.series {
                text.push(',');
                text.push_str(&s.label);
            }
            text.push('\n');
            for i in 0..grid.x.len() {
                text.push_str(&fmt(grid.x[i]));
                for s in &grid.series {
                    text.push(',');
                    text.push_str(&fmt(s.values[i]));
                }
                text.push('\n');
            }
        }
        (OutputFormat::GnuplotMatrix, Some(m)) => {
            let y = grid.y.as_ref().expect("validated 2D grid");
            text.push('0');
            for x in &grid.x {
                text.push(' ');
                text.push_str(&fmt(*x));
            }
            text.push('\n');
            for (iy, row) in m.iter().enumerate() {
                text.push_str(&fmt(y[iy]));
                for v in row {
                    text.push(' ');
                    text.push_str(&fmt(*v));
                }
                text.push('\n');
            }
        }
        (OutputFormat::GnuplotMatrix, None) => {
            // 1D grids: axis row, then one row per series with its index in
            // the leading column
            text.push('0');
            for x in &grid.x {
                text.push(' ');
                text.push_str(&fmt(*x));
            }
            text.push('\n');
            for (i, s) in grid.series.iter().enumerate() {
                text.push_str(&fmt(r::<R>((i + 1) as f64)));
                for v in &s.values {
                    text.push(' ');
                    text.push_str(&fmt(*v));
                }
                text.push('\n');
            }
        }
    }
    let io_err = |e: std::io::Error| Error::Io { path: path.display().to_string(), source: e };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(())
}
