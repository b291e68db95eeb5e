//! Run configuration: strict TOML schema with lab-presentation units (linear
//! frequencies in GHz, times in ns), resolved into the rad/ns internal
//! conventions.
//!
//! Unknown keys are errors. Physics defaults are filled on parse so a
//! serialized resolved config round-trips to an identical `RunConfig`.

use crate::experiments::{
    CavityConfig, OptVariable, OptimizationSpec, PulseKind, SweepGrid, READOUT_TAU,
};
use crate::model::SystemParams;
use crate::{ghz, Result, SimError, TWO_PI};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn cfg_err(field: &str, message: impl Into<String>) -> SimError {
    SimError::Config { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SteadyInit,
    PulseInit,
    Readout,
    Dephasing,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::SteadyInit => "steady-init",
            ExperimentKind::PulseInit => "pulse-init",
            ExperimentKind::Readout => "readout",
            ExperimentKind::Dephasing => "dephasing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    /// Electron Zeeman splitting, GHz (linear frequency).
    pub delta_e_ghz: f64,
    /// Hole Zeeman splitting, GHz.
    pub delta_h_ghz: f64,
    /// Trion radiative lifetime, ns (each linear decay channel has rate
    /// 1/lifetime).
    pub lifetime_ns: f64,
    /// Trion pure-dephasing rate in units of the radiative rate.
    pub pure_dephasing: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            delta_e_ghz: 35.0,
            delta_h_ghz: 20.0,
            lifetime_ns: 1.0,
            pure_dephasing: 0.0,
        }
    }
}

impl PhysicsSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime_ns > 0.0) {
            return Err(cfg_err("physics.lifetime_ns", "must be positive"));
        }
        for (name, v) in [
            ("physics.delta_e_ghz", self.delta_e_ghz),
            ("physics.delta_h_ghz", self.delta_h_ghz),
            ("physics.pure_dephasing", self.pure_dephasing),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(cfg_err(name, "must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        let gamma = 1.0 / self.lifetime_ns;
        SystemParams {
            delta_e: ghz(self.delta_e_ghz),
            delta_h: ghz(self.delta_h_ghz),
            gamma_x: gamma,
            gamma_y: gamma,
            pure_dephasing: self.pure_dephasing * gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityKind {
    SingleMode,
    BiModal,
}

impl From<CavityKind> for CavityConfig {
    fn from(k: CavityKind) -> CavityConfig {
        match k {
            CavityKind::SingleMode => CavityConfig::SingleMode,
            CavityKind::BiModal => CavityConfig::BiModal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub config: CavityKind,
    /// Cavity linewidth axis, GHz.
    pub kappa_ghz: Vec<f64>,
    /// Cavity strength as Purcell factors (exclusive with `g_over_kappa`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purcell: Option<Vec<f64>>,
    /// Cavity strength as g/kappa ratios (exclusive with `purcell`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_over_kappa: Option<Vec<f64>>,
    /// Base Fock cutoff per mode.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    1
}

impl CavitySection {
    pub fn validate(&self) -> Result<()> {
        if self.kappa_ghz.is_empty() {
            return Err(cfg_err("cavity.kappa_ghz", "needs at least one value"));
        }
        if self.kappa_ghz.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(cfg_err("cavity.kappa_ghz", "all values must be positive and finite"));
        }
        match (&self.purcell, &self.g_over_kappa) {
            (Some(_), Some(_)) => {
                return Err(cfg_err(
                    "cavity",
                    "specify exactly one of `purcell` or `g_over_kappa`, not both",
                ))
            }
            (None, None) => {
                return Err(cfg_err("cavity", "specify one of `purcell` or `g_over_kappa`"))
            }
            (Some(v), None) | (None, Some(v)) => {
                if v.is_empty() {
                    return Err(cfg_err("cavity", "the strength axis needs at least one value"));
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(cfg_err(
                        "cavity",
                        "strength values must be finite and nonnegative",
                    ));
                }
            }
        }
        if self.n_max < 1 {
            return Err(cfg_err("cavity.n_max", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    Square,
    Gaussian,
}

impl From<PulseShape> for PulseKind {
    fn from(s: PulseShape) -> PulseKind {
        match s {
            PulseShape::Square => PulseKind::Square,
            PulseShape::Gaussian => PulseKind::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub kind: PulseShape,
    /// Pulse durations, ns (square width or Gaussian intensity FWHM).
    pub durations_ns: Vec<f64>,
}

impl PulseSection {
    pub fn validate(&self) -> Result<()> {
        if self.durations_ns.is_empty() {
            return Err(cfg_err("pulse.durations_ns", "needs at least one value"));
        }
        if self.durations_ns.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(cfg_err("pulse.durations_ns", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerVariable {
    RabiFrequency,
    PulseArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub variable: OptimizerVariable,
    /// Range lower bound: gamma units for `rabi-frequency`, units of pi
    /// for `pulse-area`.
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_coarse_points")]
    pub coarse_points: usize,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
}

fn default_coarse_points() -> usize {
    201
}

fn default_refine_tol() -> f64 {
    1e-4
}

impl OptimizerSection {
    pub fn for_pulse(kind: PulseShape) -> Self {
        match kind {
            PulseShape::Square => OptimizerSection {
                variable: OptimizerVariable::RabiFrequency,
                lo: 0.0,
                hi: 10.0,
                coarse_points: default_coarse_points(),
                refine_tol: default_refine_tol(),
            },
            PulseShape::Gaussian => OptimizerSection {
                variable: OptimizerVariable::PulseArea,
                lo: 0.01,
                hi: 5.0,
                coarse_points: default_coarse_points(),
                refine_tol: default_refine_tol(),
            },
        }
    }

    /// Convert to internal units: rad/ns for Rabi frequencies, rad for
    /// areas.
    pub fn resolve(&self, gamma: f64) -> Result<OptimizationSpec> {
        let (variable, scale) = match self.variable {
            OptimizerVariable::RabiFrequency => (OptVariable::RabiFrequency, gamma),
            OptimizerVariable::PulseArea => (OptVariable::PulseArea, std::f64::consts::PI),
        };
        let spec = OptimizationSpec {
            variable,
            lo: self.lo * scale,
            hi: self.hi * scale,
            coarse_points: self.coarse_points,
            refine_tol: self.refine_tol,
        };
        spec.validate().map_err(|e| cfg_err("optimizer", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Probe pulse length, ns.
    pub tau_ns: f64,
    /// Detection efficiency in [0, 1].
    pub efficiency: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection { tau_ns: READOUT_TAU, efficiency: 1.0 }
    }
}

impl ReadoutSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_ns > 0.0) {
            return Err(cfg_err("readout.tau_ns", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(cfg_err("readout.efficiency", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingBase {
    PulseInit,
    Readout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingSection {
    pub base: DephasingBase,
    /// Pure-dephasing rates in units of the radiative rate.
    pub rates: Vec<f64>,
}

impl DephasingSection {
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(cfg_err("dephasing.rates", "needs at least one value"));
        }
        if self.rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(cfg_err("dephasing.rates", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection { rel_tol: 1e-8, abs_tol: 1e-10 }
    }
}

impl IntegratorSection {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("integrator.rel_tol", self.rel_tol), ("integrator.abs_tol", self.abs_tol)]
        {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(cfg_err(name, "must lie in (0, 1e-2]"));
            }
        }
        Ok(())
    }
}

/// Fully resolved run configuration. Serializing and re-parsing yields an
/// identical value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Reserved: the current pipeline is deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub physics: PhysicsSection,
    pub cavity: CavitySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<DephasingSection>,
    #[serde(default)]
    pub integrator: IntegratorSection,
}

impl RunConfig {
    pub fn validate(&mut self) -> Result<()> {
        self.physics.validate()?;
        self.cavity.validate()?;
        self.integrator.validate()?;

        let needs_pulse = matches!(self.experiment, ExperimentKind::PulseInit)
            || matches!(
                (&self.experiment, &self.dephasing),
                (ExperimentKind::Dephasing, Some(d)) if d.base == DephasingBase::PulseInit
            );
        let needs_readout = matches!(self.experiment, ExperimentKind::Readout)
            || matches!(
                (&self.experiment, &self.dephasing),
                (ExperimentKind::Dephasing, Some(d)) if d.base == DephasingBase::Readout
            );

        match self.experiment {
            ExperimentKind::SteadyInit => {
                if self.cavity.g_over_kappa.is_none() {
                    return Err(cfg_err(
                        "cavity.g_over_kappa",
                        "the steady-init sweep is parameterized by g/kappa",
                    ));
                }
            }
            ExperimentKind::PulseInit | ExperimentKind::Readout => {
                if self.cavity.purcell.is_none() {
                    return Err(cfg_err(
                        "cavity.purcell",
                        "this experiment is parameterized by the Purcell factor",
                    ));
                }
            }
            ExperimentKind::Dephasing => {
                let d = self
                    .dephasing
                    .as_ref()
                    .ok_or_else(|| cfg_err("dephasing", "section required"))?;
                d.validate()?;
                if self.cavity.purcell.is_none() {
                    return Err(cfg_err(
                        "cavity.purcell",
                        "the dephasing study is parameterized by the Purcell factor",
                    ));
                }
            }
        }

        if needs_pulse {
            let p =
                self.pulse.as_ref().ok_or_else(|| cfg_err("pulse", "section required"))?;
            p.validate()?;
            if self.optimizer.is_none() {
                self.optimizer = Some(OptimizerSection::for_pulse(p.kind));
            }
            let o = self.optimizer.as_ref().unwrap();
            let gamma = 1.0 / self.physics.lifetime_ns;
            o.resolve(gamma)?;
            let ok = matches!(
                (p.kind, o.variable),
                (PulseShape::Square, OptimizerVariable::RabiFrequency)
                    | (PulseShape::Gaussian, OptimizerVariable::PulseArea)
            );
            if !ok {
                return Err(cfg_err(
                    "optimizer.variable",
                    "square pulses optimize rabi-frequency, gaussian pulses pulse-area",
                ));
            }
        }
        if needs_readout {
            if self.readout.is_none() {
                self.readout = Some(ReadoutSection::default());
            }
            self.readout.as_ref().unwrap().validate()?;
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(cfg_err("workers", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Sweep grid in internal units.
    pub fn grid(&self) -> SweepGrid {
        let gamma = 1.0 / self.physics.lifetime_ns;
        SweepGrid {
            cavity: self.cavity.config.into(),
            kappa: self.cavity.kappa_ghz.iter().map(|k| ghz(*k)).collect(),
            purcell: self.cavity.purcell.clone().unwrap_or_default(),
            g_over_kappa: self.cavity.g_over_kappa.clone().unwrap_or_default(),
            durations: self
                .pulse
                .as_ref()
                .map(|p| p.durations_ns.clone())
                .unwrap_or_default(),
            pure_dephasing: self.physics.pure_dephasing * gamma,
            n_max: self.cavity.n_max,
        }
    }

    /// Dephasing rates in 1/ns.
    pub fn dephasing_rates(&self) -> Vec<f64> {
        let gamma = 1.0 / self.physics.lifetime_ns;
        self.dephasing
            .as_ref()
            .map(|d| d.rates.iter().map(|r| r * gamma).collect())
            .unwrap_or_default()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| cfg_err("<serialize>", e.to_string()))
    }
}

/// Parse and validate a TOML run configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig =
        toml::from_str(text).map_err(|e| cfg_err("<schema>", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Convert an internal angular frequency back to the GHz presentation
/// used in output files.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TWO_PI
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_READOUT: &str = r#"
experiment = "readout"

[cavity]
config = "single-mode"
kappa_ghz = [20.0]
purcell = [10.0]
"#;

    #[test]
    fn defaults_equal_caption_values() {
        let cfg = parse_config_str(MINIMAL_READOUT).unwrap();
        let p = cfg.physics.system_params();
        assert!((p.delta_e - ghz(35.0)).abs() < 1e-12);
        assert!((p.delta_h - ghz(20.0)).abs() < 1e-12);
        assert!((p.gamma_x - 1.0).abs() < 1e-12);
        assert!((p.gamma_y - 1.0).abs() < 1e-12);
        assert_eq!(p.pure_dephasing, 0.0);
        let r = cfg.readout.as_ref().unwrap();
        assert!((r.tau_ns - 35.0).abs() < 1e-12);
        assert!((r.efficiency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = MINIMAL_READOUT.replace("purcell", "kappa_x_typo");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("kappa_x_typo"), "{err}");
    }

    #[test]
    fn negative_kappa_names_the_field() {
        let text = MINIMAL_READOUT.replace("[20.0]", "[-1.0]");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("kappa_ghz"), "{err}");
    }

    #[test]
    fn strength_axes_are_exclusive() {
        let text = format!("{MINIMAL_READOUT}g_over_kappa = [1.0]\n");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
experiment = "pulse-init"
workers = 2

[physics]
delta_e_ghz = 35.0
delta_h_ghz = 20.0
lifetime_ns = 1.0
pure_dephasing = 0.0

[cavity]
config = "bi-modal"
kappa_ghz = [20.0, 40.0]
purcell = [10.0, 40.0]

[pulse]
kind = "square"
durations_ns = [1.0, 2.0, 3.0]
"#;
        let cfg = parse_config_str(text).unwrap();
        assert!(cfg.optimizer.is_some(), "defaults filled");
        let emitted = cfg.to_toml().unwrap();
        let reparsed = parse_config_str(&emitted).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn optimizer_units_resolve() {
        let cfg = parse_config_str(
            r#"
experiment = "pulse-init"

[cavity]
config = "single-mode"
kappa_ghz = [20.0]
purcell = [10.0]

[pulse]
kind = "gaussian"
durations_ns = [0.02]
"#,
        )
        .unwrap();
        let o = cfg.optimizer.as_ref().unwrap().resolve(1.0).unwrap();
        assert_eq!(o.variable, OptVariable::PulseArea);
        assert!((o.lo - 0.01 * std::f64::consts::PI).abs() < 1e-12);
        assert!((o.hi - 5.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn steady_init_requires_g_over_kappa() {
        let text = MINIMAL_READOUT.replace("\"readout\"", "\"steady-init\"");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("g_over_kappa"), "{err}");
    }

    #[test]
    fn grid_converts_units() {
        let cfg = parse_config_str(MINIMAL_READOUT).unwrap();
        let grid = cfg.grid();
        assert!((grid.kappa[0] - ghz(20.0)).abs() < 1e-12);
        assert_eq!(grid.purcell, vec![10.0]);
    }
}
