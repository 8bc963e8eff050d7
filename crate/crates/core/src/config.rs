//! Declarative experiment configuration (TOML, versioned with
//! `schema_version`). One file describes one scan: atom preset, input
//! spectrum, shaper mask, scan axes, probe model, beam averaging, pre-pulse
//! contamination, numerics, and output shape. All physical keys carry unit
//! suffixes (`_nm`, `_fs`, `_j`, `_pi`).

use serde::Deserialize;
use std::path::Path;

use crate::atomics::{make_preset_with_dipole, LevelSystem};
use crate::error::{Error, Result};
use crate::num::{r, Real};
use crate::pulse::{GridSpec, Mask, Window};

pub const SCHEMA_VERSION: u32 = 1;

/// Shaper leak modeled as a weak extra window at 772 nm; amplitude chosen so
/// it stays within the documented < 5% population effect.
pub const LEAK_CENTER_NM: f64 = 772.0;
pub const LEAK_RELATIVE_AMPLITUDE: f64 = 0.1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub atom: AtomConfig,
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub mask: MaskConfig,
    pub scan: ScanConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    pub averaging: Option<AveragingConfig>,
    pub prepulse: Option<PrepulseConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Preset name, e.g. "Rb-D1" or "K-D".
    pub preset: String,
    /// Optional override of the D1 transition dipole, C·m.
    pub d1_dipole_cm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Unshaped Gaussian spectrum center, nm.
    pub center_nm: f64,
    /// Intensity FWHM bandwidth, nm.
    pub fwhm_nm: f64,
    /// Pulse energy before the mask, J.
    pub energy_j: f64,
    /// Rotating-frame carrier; defaults to `center_nm`.
    pub carrier_nm: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    /// Transmission windows; an empty list means no shaping.
    #[serde(default)]
    pub windows: Vec<WindowConfig>,
    /// Spectral phase polynomial coefficients in the frequency offset from
    /// the carrier: φ(ω) = Σ pᵢ (ω − ω_c)ⁱ, rad·fsⁱ.
    #[serde(default)]
    pub phase_poly: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default = "one")]
    pub relative_amplitude: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// "area" (1D multi-observable), "area_delay" (2D beat map) or
    /// "rb_energy" (energy scan + sin²(k√E/2) fit).
    pub kind: ScanKind,
    pub area: Option<AreaAxis>,
    pub delay: Option<DelayAxis>,
    pub energy: Option<EnergyAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Area,
    AreaDelay,
    RbEnergy,
}

/// Effective-area axis in units of π.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaAxis {
    pub min_pi: f64,
    pub max_pi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayAxis {
    pub min_fs: f64,
    pub max_fs: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyAxis {
    pub min_j: f64,
    pub max_j: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Probe intensity FWHM, fs.
    #[serde(default = "default_probe_fwhm")]
    pub fwhm_fs: f64,
    /// Convolve beat traces with the probe duration.
    #[serde(default = "yes")]
    pub convolve: bool,
    /// Photons taken from the excited state in the probe step; spatial
    /// averaging weight only.
    #[serde(default = "two")]
    pub nonlinearity_order: u32,
}

fn default_probe_fwhm() -> f64 {
    120.0
}
fn yes() -> bool {
    true
}
fn two() -> u32 {
    2
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { fwhm_fs: 120.0, convolve: true, nonlinearity_order: 2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    /// Probe/pump beam diameter ratio (0.4 for Rb, 0.3 for K).
    pub diameter_ratio: f64,
    /// Defaults to the probe nonlinearity order.
    pub probe_order: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepulseConfig {
    /// Pre-pulse energy as a fraction of the main pulse, ∈ [0, 0.05].
    pub fraction: f64,
    /// Optical phase in rad, or the string "average" (16-phase average).
    #[serde(default)]
    pub phase: PhaseSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpec {
    Fixed(f64),
    Named(String),
}

impl Default for PhaseSpec {
    fn default() -> Self {
        PhaseSpec::Named("average".into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Spectral grid size (power of two).
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Spectral half-span around the carrier, nm.
    #[serde(default = "default_half_span")]
    pub half_span_nm: f64,
    /// RK4 step, fs; defaults to an automatic choice.
    pub rk4_step_fs: Option<f64>,
    #[serde(default = "default_sg_order")]
    pub supergauss_order: u32,
    /// Model the shaper's weak 772 nm leak window.
    #[serde(default)]
    pub include_772nm_leak: bool,
    /// Effective beam cross-section tying pulse energy to field amplitude, m².
    #[serde(default = "default_mode_area")]
    pub mode_area_m2: f64,
}

fn default_grid_n() -> usize {
    1 << 14
}
fn default_half_span() -> f64 {
    40.0
}
fn default_sg_order() -> u32 {
    1
}
fn default_mode_area() -> f64 {
    1e-4
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_n: default_grid_n(),
            half_span_nm: default_half_span(),
            rk4_step_fs: None,
            supergauss_order: default_sg_order(),
            include_772nm_leak: false,
            mode_area_m2: default_mode_area(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    GnuplotMatrix,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default = "default_basename")]
    pub basename: String,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}
fn default_basename() -> String {
    "scan".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: default_format(), basename: default_basename() }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        // resolves the preset (errors on unknown names)
        self.system::<f64>()?;
        if let Some(d) = self.atom.d1_dipole_cm {
            if !(d > 0.0 && d.is_finite()) {
                return fail("atom.d1_dipole_cm must be finite and > 0".into());
            }
        }
        let s = &self.spectrum;
        for (name, v) in [
            ("spectrum.center_nm", s.center_nm),
            ("spectrum.fwhm_nm", s.fwhm_nm),
            ("spectrum.energy_j", s.energy_j),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be finite and > 0"));
            }
        }
        if let Some(c) = s.carrier_nm {
            if !(c > 0.0 && c.is_finite()) {
                return fail("spectrum.carrier_nm must be finite and > 0".into());
            }
        }
        for (i, w) in self.mask.windows.iter().enumerate() {
            if !(w.center_nm > 0.0 && w.fwhm_nm > 0.0) || w.relative_amplitude < 0.0 {
                return fail(format!("mask.windows[{i}] has a non-physical value"));
            }
        }
        match self.scan.kind {
            ScanKind::Area => {
                self.area_axis()?;
            }
            ScanKind::AreaDelay => {
                self.area_axis()?;
                self.delay_axis()?;
            }
            ScanKind::RbEnergy => {
                self.energy_axis()?;
            }
        }
        if self.probe.fwhm_fs < 0.0 || !self.probe.fwhm_fs.is_finite() {
            return fail("probe.fwhm_fs must be finite and ≥ 0".into());
        }
        if self.probe.nonlinearity_order == 0 {
            return fail("probe.nonlinearity_order must be ≥ 1".into());
        }
        if let Some(a) = &self.averaging {
            if !(a.diameter_ratio >= 0.0 && a.diameter_ratio.is_finite()) {
                return fail("averaging.diameter_ratio must be finite and ≥ 0".into());
            }
            if a.probe_order == Some(0) {
                return fail("averaging.probe_order must be ≥ 1".into());
            }
        }
        if let Some(p) = &self.prepulse {
            if !(0.0..=0.05).contains(&p.fraction) {
                return fail("prepulse.fraction must lie within [0, 0.05]".into());
            }
            if let PhaseSpec::Named(n) = &p.phase {
                if n != "average" {
                    return fail(format!(
                        "prepulse.phase must be a number (rad) or \"average\", got \"{n}\""
                    ));
                }
            }
        }
        let n = &self.numerics;
        self.grid_spec::<f64>().validate()?;
        if let Some(h) = n.rk4_step_fs {
            if !(h > 0.0 && h.is_finite()) {
                return fail("numerics.rk4_step_fs must be finite and > 0".into());
            }
        }
        if n.supergauss_order == 0 {
            return fail("numerics.supergauss_order must be ≥ 1".into());
        }
        if self.output.basename.is_empty()
            || self.output.basename.contains(['/', '\\'])
        {
            return fail("output.basename must be a bare file stem".into());
        }
        Ok(())
    }

    pub fn area_axis(&self) -> Result<&AreaAxis> {
        let a = self
            .scan
            .area
            .as_ref()
            .ok_or_else(|| Error::Config("scan.area axis is required for this scan kind".into()))?;
        check_axis("scan.area", a.min_pi, a.max_pi, a.points, 0.0)?;
        Ok(a)
    }

    pub fn delay_axis(&self) -> Result<&DelayAxis> {
        let d = self
            .scan
            .delay
            .as_ref()
            .ok_or_else(|| Error::Config("scan.delay axis is required for this scan kind".into()))?;
        check_axis("scan.delay", d.min_fs, d.max_fs, d.points, f64::NEG_INFINITY)?;
        Ok(d)
    }

    pub fn energy_axis(&self) -> Result<&EnergyAxis> {
        let e = self
            .scan
            .energy
            .as_ref()
            .ok_or_else(|| Error::Config("scan.energy axis is required for this scan kind".into()))?;
        check_axis("scan.energy", e.min_j, e.max_j, e.points, 0.0)?;
        Ok(e)
    }

    pub fn system<R: Real>(&self) -> Result<LevelSystem<R>> {
        make_preset_with_dipole(&self.atom.preset, self.atom.d1_dipole_cm.map(r))
    }

    pub fn grid_spec<R: Real>(&self) -> GridSpec<R> {
        GridSpec {
            n: self.numerics.grid_n,
            half_span_nm: r(self.numerics.half_span_nm),
            mode_area_m2: r(self.numerics.mode_area_m2),
        }
    }

    /// Carrier wavelength in nm (explicit or spectrum center).
    pub fn carrier_nm(&self) -> f64 {
        self.spectrum.carrier_nm.unwrap_or(self.spectrum.center_nm)
    }

    /// Mask with the optional 772 nm leak window appended. `None` when no
    /// shaping is configured at all.
    pub fn mask<R: Real>(&self) -> Option<Mask<R>> {
        let mut windows: Vec<Window<R>> = self
            .mask
            .windows
            .iter()
            .map(|w| Window {
                center_nm: r(w.center_nm),
                fwhm_nm: r(w.fwhm_nm),
                relative_amplitude: r(w.relative_amplitude),
                phase_rad: r(w.phase_rad),
            })
            .collect();
        if self.numerics.include_772nm_leak {
            let fwhm = self
                .mask
                .windows
                .first()
                .map(|w| w.fwhm_nm)
                .unwrap_or(1.8);
            windows.push(Window {
                center_nm: r(LEAK_CENTER_NM),
                fwhm_nm: r(fwhm),
                relative_amplitude: r(LEAK_RELATIVE_AMPLITUDE),
                phase_rad: R::zero(),
            });
        }
        if windows.is_empty() && self.mask.phase_poly.is_empty() {
            return None;
        }
        Some(Mask {
            windows,
            phase_poly: self.mask.phase_poly.iter().map(|&p| r(p)).collect(),
            supergauss_order: self.numerics.supergauss_order,
        })
    }
}

fn check_axis(name: &str, min: f64, max: f64, points: usize, lower: f64) -> Result<()> {
    if points < 2 {
        return Err(Error::Config(format!("{name}.points must be ≥ 2")));
    }
    if !(min.is_finite() && max.is_finite() && min < max && min >= lower) {
        return Err(Error::Config(format!("{name} range must be finite with min < max")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> String {
        r#"
schema_version = 1

[atom]
preset = "K-D"

[spectrum]
center_nm = 768.2
fwhm_nm = 10.0
energy_j = 1e-7

[[mask.windows]]
center_nm = 769.9
fwhm_nm = 1.8

[[mask.windows]]
center_nm = 766.5
fwhm_nm = 1.8
relative_amplitude = 0.7071067811865476

[scan]
kind = "area"

[scan.area]
min_pi = 0.0
max_pi = 4.0
points = 200
"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(&base()).unwrap();
        assert_eq!(cfg.scan.kind, ScanKind::Area);
        assert_eq!(cfg.numerics.grid_n, 1 << 14);
        assert!(cfg.probe.convolve);
        assert_eq!(cfg.output.format, OutputFormat::Csv);
        let mask = cfg.mask::<f64>().unwrap();
        assert_eq!(mask.windows.len(), 2);
        assert_eq!(cfg.carrier_nm(), 768.2);
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let text = base().replace("schema_version = 1", "schema_version = 7");
        let e = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("schema_version"));
    }

    #[test]
    fn rejects_unknown_preset() {
        let text = base().replace("K-D", "Cs-D");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn rejects_unknown_key_with_location() {
        let text = base() + "\n[probe]\nfhwm_fs = 100.0\n";
        let e = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("fhwm_fs"));
    }

    #[test]
    fn rejects_single_point_axis() {
        let text = base().replace("points = 200", "points = 1");
        let e = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("points"));
    }

    #[test]
    fn delay_axis_required_for_maps() {
        let text = base().replace("kind = \"area\"", "kind = \"area_delay\"");
        let e = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("scan.delay"));
    }

    #[test]
    fn prepulse_phase_forms() {
        let avg = base() + "\n[prepulse]\nfraction = 0.01\nphase = \"average\"\n";
        let cfg = ExperimentConfig::from_toml_str(&avg).unwrap();
        assert_eq!(cfg.prepulse.unwrap().phase, PhaseSpec::Named("average".into()));

        let fixed = base() + "\n[prepulse]\nfraction = 0.01\nphase = 1.5\n";
        let cfg = ExperimentConfig::from_toml_str(&fixed).unwrap();
        assert_eq!(cfg.prepulse.unwrap().phase, PhaseSpec::Fixed(1.5));

        let bad = base() + "\n[prepulse]\nfraction = 0.01\nphase = \"random\"\n";
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());

        let out = base() + "\n[prepulse]\nfraction = 0.2\n";
        assert!(ExperimentConfig::from_toml_str(&out).is_err());
    }

    #[test]
    fn leak_window_appended() {
        let text = base() + "\n[numerics]\ninclude_772nm_leak = true\n";
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let mask = cfg.mask::<f64>().unwrap();
        assert_eq!(mask.windows.len(), 3);
        assert_eq!(mask.windows[2].center_nm, LEAK_CENTER_NM);
        assert!(mask.windows[2].relative_amplitude < 0.2);
    }

    #[test]
    fn basename_must_be_bare() {
        let text = base() + "\n[output]\nbasename = \"a/b\"\n";
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
}
