//! Atomic level systems and the Rb/K presets.
//!
//! Level frequencies are angular (rad/fs), measured from the ground state.
//! Only ground↔excited couplings are supported; excited↔excited transitions
//! are dipole-forbidden for the s↔p structure used here.

use crate::error::{Error, Result};
use crate::num::{r, Real};
use crate::units::{omega_from_nm, thz_from_angular};

/// Rb 5s1/2 → 5p1/2 transition dipole, C·m.
///
/// The source literature quotes "2.53 Cm", which is dimensionally impossible
/// as written; 2.53e-29 C·m reproduces the 2.2π intensity calibration and is
/// adopted here.
pub const RB_D1_DIPOLE_CM: f64 = 2.53e-29;

/// Default K 4s1/2 → 4p1/2 dipole, C·m. The D2 dipole is √2 larger
/// (standard alkali line-strength ratio 2:1).
pub const K_D1_DIPOLE_CM: f64 = 2.5e-29;

pub const RB_D1_NM: f64 = 794.75;
pub const K_D1_NM: f64 = 769.9;
pub const K_D2_NM: f64 = 766.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Level<R: Real> {
    pub label: String,
    /// rad/fs relative to the ground state (ground = 0).
    pub angular_frequency: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<R: Real> {
    pub lower: usize,
    pub upper: usize,
    /// C·m, > 0.
    pub dipole: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem<R: Real> {
    pub name: String,
    levels: Vec<Level<R>>,
    transitions: Vec<Transition<R>>,
}

impl<R: Real> LevelSystem<R> {
    /// Validates: exactly one ground level (frequency 0, listed first),
    /// strictly increasing positive excited frequencies, every transition
    /// ground↔excited with positive dipole, at most one per pair, and every
    /// excited level coupled to ground.
    pub fn new(
        name: impl Into<String>,
        levels: Vec<Level<R>>,
        transitions: Vec<Transition<R>>,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("level system needs at least one level".into()));
        }
        if levels[0].angular_frequency != R::zero() {
            return Err(Error::Config(
                "first level must be the ground state with frequency 0".into(),
            ));
        }
        let mut prev = R::zero();
        for lv in &levels[1..] {
            if lv.angular_frequency <= prev {
                return Err(Error::Config(
                    "excited frequencies must be strictly positive and increasing".into(),
                ));
            }
            prev = lv.angular_frequency;
        }
        let mut coupled = vec![false; levels.len()];
        let mut seen = std::collections::BTreeSet::new();
        for tr in &transitions {
            if tr.lower != 0 {
                return Err(Error::Config(
                    "only ground↔excited transitions are supported".into(),
                ));
            }
            if tr.upper == 0 || tr.upper >= levels.len() {
                return Err(Error::LevelIndex { index: tr.upper, len: levels.len() });
            }
            if tr.dipole <= R::zero() {
                return Err(Error::Config("transition dipole must be > 0".into()));
            }
            if !seen.insert((tr.lower, tr.upper)) {
                return Err(Error::Config(
                    "at most one transition per level pair".into(),
                ));
            }
            coupled[tr.upper] = true;
        }
        if let Some(k) = coupled[1..].iter().position(|c| !c) {
            return Err(Error::Config(format!(
                "excited level {} is not reachable from ground",
                k + 1
            )));
        }
        Ok(Self { name: name.into(), levels, transitions })
    }

    pub fn levels(&self) -> &[Level<R>] {
        &self.levels
    }

    pub fn transitions(&self) -> &[Transition<R>] {
        &self.transitions
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_excited(&self) -> usize {
        self.levels.len() - 1
    }

    /// Dipole (C·m) coupling ground to excited level `k`, if any.
    pub fn dipole_to(&self, k: usize) -> Option<R> {
        self.transitions.iter().find(|t| t.upper == k).map(|t| t.dipole)
    }

    /// |ω_i − ω_j| / 2π in THz (ordinary frequency) between two excited levels.
    pub fn splitting(&self, i: usize, j: usize) -> Result<R> {
        let n = self.levels.len();
        for idx in [i, j] {
            if idx == 0 || idx >= n {
                return Err(Error::LevelIndex { index: idx, len: n });
            }
        }
        let d = (self.levels[i].angular_frequency - self.levels[j].angular_frequency).abs();
        Ok(thz_from_angular(d))
    }

    /// Transition vacuum wavelength (nm) from ground to excited level `k`.
    pub fn transition_nm(&self, k: usize) -> Result<R> {
        if k == 0 || k >= self.levels.len() {
            return Err(Error::LevelIndex { index: k, len: self.levels.len() });
        }
        Ok(crate::units::nm_from_omega(self.levels[k].angular_frequency))
    }
}

pub const PRESET_NAMES: &[&str] = &["Rb-D1", "K-D"];

/// Builds a named preset with default dipoles.
pub fn make_preset<R: Real>(name: &str) -> Result<LevelSystem<R>> {
    make_preset_with_dipole(name, None)
}

/// Builds a named preset, optionally overriding the D1 dipole (C·m). For
/// "K-D" the D2 dipole follows as √2 × D1.
pub fn make_preset_with_dipole<R: Real>(
    name: &str,
    d1_dipole_cm: Option<R>,
) -> Result<LevelSystem<R>> {
    match name {
        "Rb-D1" => {
            let d = d1_dipole_cm.unwrap_or_else(|| r(RB_D1_DIPOLE_CM));
            LevelSystem::new(
                "Rb-D1",
                vec![
                    Level { label: "5s1/2".into(), angular_frequency: R::zero() },
                    Level {
                        label: "5p1/2".into(),
                        angular_frequency: omega_from_nm(r(RB_D1_NM)),
                    },
                ],
                vec![Transition { lower: 0, upper: 1, dipole: d }],
            )
        }
        "K-D" => {
            let d1 = d1_dipole_cm.unwrap_or_else(|| r(K_D1_DIPOLE_CM));
            let d2 = d1 * r(std::f64::consts::SQRT_2);
            LevelSystem::new(
                "K-D",
                vec![
                    Level { label: "4s1/2".into(), angular_frequency: R::zero() },
                    Level {
                        label: "4p1/2".into(),
                        angular_frequency: omega_from_nm(r(K_D1_NM)),
                    },
                    Level {
                        label: "4p3/2".into(),
                        angular_frequency: omega_from_nm(r(K_D2_NM)),
                    },
                ],
                vec![
                    Transition { lower: 0, upper: 1, dipole: d1 },
                    Transition { lower: 0, upper: 2, dipole: d2 },
                ],
            )
        }
        _ => Err(Error::UnknownPreset {
            name: name.into(),
            valid: PRESET_NAMES.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rb_preset() {
        let sys: LevelSystem<f64> = make_preset("Rb-D1").unwrap();
        assert_eq!(sys.n_levels(), 2);
        assert_relative_eq!(
            sys.levels()[1].angular_frequency,
            2.370,
            max_relative = 1e-3
        );
        assert_relative_eq!(sys.transition_nm(1).unwrap(), 794.75, max_relative = 1e-12);
    }

    #[test]
    fn k_preset_splitting() {
        let sys: LevelSystem<f64> = make_preset("K-D").unwrap();
        assert_eq!(sys.n_levels(), 3);
        let s = sys.splitting(1, 2).unwrap();
        assert_relative_eq!(s, 1.727, max_relative = 1e-3);
        // within 0.5% of the rounded 1.73 THz figure
        assert!((s - 1.73).abs() / 1.73 < 5e-3);
        // dipole ratio √2
        let d1 = sys.dipole_to(1).unwrap();
        let d2 = sys.dipole_to(2).unwrap();
        assert_relative_eq!(d2 / d1, std::f64::consts::SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn splitting_identity_and_errors() {
        let sys: LevelSystem<f64> = make_preset("K-D").unwrap();
        assert_eq!(sys.splitting(1, 1).unwrap(), 0.0);
        let rb: LevelSystem<f64> = make_preset("Rb-D1").unwrap();
        assert!(matches!(rb.splitting(1, 2), Err(Error::LevelIndex { .. })));
        assert!(matches!(sys.splitting(0, 1), Err(Error::LevelIndex { .. })));
    }

    #[test]
    fn unknown_preset_names_valid_ones() {
        let e = make_preset::<f64>("Cs").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("Rb-D1") && msg.contains("K-D"));
    }

    #[test]
    fn invalid_systems_rejected() {
        // non-zero ground
        assert!(LevelSystem::<f64>::new(
            "bad",
            vec![Level { label: "g".into(), angular_frequency: 0.1 }],
            vec![],
        )
        .is_err());
        // uncoupled excited level
        assert!(LevelSystem::<f64>::new(
            "bad",
            vec![
                Level { label: "g".into(), angular_frequency: 0.0 },
                Level { label: "e".into(), angular_frequency: 1.0 },
            ],
            vec![],
        )
        .is_err());
        // excited↔excited coupling
        assert!(LevelSystem::<f64>::new(
            "bad",
            vec![
                Level { label: "g".into(), angular_frequency: 0.0 },
                Level { label: "e1".into(), angular_frequency: 1.0 },
                Level { label: "e2".into(), angular_frequency: 2.0 },
            ],
            vec![
                Transition { lower: 0, upper: 1, dipole: 1e-29 },
                Transition { lower: 1, upper: 2, dipole: 1e-29 },
            ],
        )
        .is_err());
    }

    #[test]
    fn preset_wavelength_round_trip() {
        let sys: LevelSystem<f64> = make_preset("K-D").unwrap();
        assert_relative_eq!(sys.transition_nm(1).unwrap(), K_D1_NM, max_relative = 1e-12);
        assert_relative_eq!(sys.transition_nm(2).unwrap(), K_D2_NM, max_relative = 1e-12);
    }
}
