//! Scenario files (TOML). See `docs/config.md` for the grammar.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use wavekit_core::beam::{Overrides, TrainSpec, DEFAULT_MIN_K0W0};
use wavekit_core::medium::RefractiveIndex;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Beam,
    Oracle,
    Compare,
    Rays,
    Wigner,
    Parametrix,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Beam => "beam",
            Analysis::Oracle => "oracle",
            Analysis::Compare => "compare",
            Analysis::Rays => "rays",
            Analysis::Wigner => "wigner",
            Analysis::Parametrix => "parametrix",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    Vacuum,
    ColdPlasma,
    Table,
    Overrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesConfig {
    pub r: f64,
    pub vg_over_vp: f64,
    #[serde(default)]
    pub vp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub kind: MediumKind,
    #[serde(default)]
    pub omega_pe: Option<f64>,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub n: Option<Vec<f64>>,
    #[serde(default)]
    pub branch: Option<usize>,
    #[serde(default)]
    pub overrides: Option<OverridesConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "one")]
    pub a0: f64,
    pub w0: f64,
    pub k0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Point count; chosen from the sizing rule when absent.
    #[serde(default)]
    pub m: Option<usize>,
    /// Extra domain length as a fraction of the minimum.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { m: None, margin: default_margin() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    #[serde(default = "default_shell_tol")]
    pub shell_tol: f64,
    #[serde(default = "one_u64")]
    pub probe_seed: u64,
    #[serde(default = "default_min_k0w0")]
    pub min_k0w0: f64,
    /// Allowed mismatch between overrides and values computed from `n(ω)`.
    #[serde(default = "default_override_tol")]
    pub override_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_tol: default_ode_tol(),
            shell_tol: default_shell_tol(),
            probe_seed: 1,
            min_k0w0: default_min_k0w0(),
            override_tol: default_override_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrixConfig {
    #[serde(default = "one")]
    pub omega_pe0: f64,
    /// `ω_pe(t) = ω_pe0 (1 + ramp·tanh(t/t_ramp))`.
    #[serde(default = "default_ramp")]
    pub ramp: f64,
    #[serde(default = "default_t_ramp")]
    pub t_ramp: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "two")]
    pub levels: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_omega_window")]
    pub omega_window: [f64; 2],
    #[serde(default = "default_t_window")]
    pub t_window: [f64; 2],
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        ParametrixConfig {
            omega_pe0: 1.0,
            ramp: default_ramp(),
            t_ramp: default_t_ramp(),
            nu: default_nu(),
            levels: 2,
            probes: default_probes(),
            omega_window: default_omega_window(),
            t_window: default_t_window(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    /// Gaussian kernel standard deviation (length); `1.6/k0` when absent.
    #[serde(default)]
    pub kernel_width: Option<f64>,
    #[serde(default = "two")]
    pub stride: usize,
    /// Reconstruction points across `x_c ± window·w`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "two_f")]
    pub window: f64,
    /// Samples with `|W|` below this fraction of the maximum are not written.
    #[serde(default = "default_w_floor")]
    pub write_floor: f64,
}

impl Default for WignerConfig {
    fn default() -> Self {
        WignerConfig {
            kernel_width: None,
            stride: 2,
            points: default_points(),
            window: 2.0,
            write_floor: default_w_floor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Wave speed used for nondimensionalization.
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub times: Vec<f64>,
    /// Additional output times at which `w(t)/w0` reaches these values.
    #[serde(default)]
    pub width_ratios: Vec<f64>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    pub medium: MediumConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub parametrix: ParametrixConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
}

fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn two() -> usize {
    2
}
fn two_f() -> f64 {
    2.0
}
fn default_margin() -> f64 {
    0.1
}
fn default_ode_tol() -> f64 {
    1e-9
}
fn default_shell_tol() -> f64 {
    1e-8
}
fn default_min_k0w0() -> f64 {
    DEFAULT_MIN_K0W0
}
fn default_override_tol() -> f64 {
    1e-6
}
fn default_ramp() -> f64 {
    0.3
}
fn default_t_ramp() -> f64 {
    10.0
}
fn default_nu() -> f64 {
    0.05
}
fn default_probes() -> usize {
    100
}
fn default_omega_window() -> [f64; 2] {
    [2.0, 6.0]
}
fn default_t_window() -> [f64; 2] {
    [-20.0, 20.0]
}
fn default_points() -> usize {
    81
}
fn default_w_floor() -> f64 {
    1e-6
}

/// Scenario in units with `c = 1` and `k0 = 1` (lengths in `1/k0`, times
/// in `1/(c k0)`).
#[derive(Clone, Debug)]
pub struct Normalized {
    pub kind: MediumKind,
    pub train: TrainSpec,
    pub times: Vec<f64>,
    pub width_ratios: Vec<f64>,
    pub analyses: Vec<Analysis>,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub parametrix: ParametrixConfig,
    pub wigner: WignerConfig,
    /// Overrides given next to a physical medium, checked after the
    /// parameters are computed.
    pub cross_check: Option<Overrides>,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Validates and rescales to `c = k0 = 1`.
    pub fn normalize(&self) -> Result<Normalized, ConfigError> {
        let c = self.c;
        let (k0, w0) = (self.train.k0, self.train.w0);
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("c must be positive, got {c}"));
        }
        if !(k0 > 0.0 && k0.is_finite() && w0 > 0.0 && w0.is_finite()) {
            return invalid(format!("train.k0 and train.w0 must be positive (k0 = {k0}, w0 = {w0})"));
        }
        if !self.train.a0.is_finite() {
            return invalid("train.a0 must be finite");
        }
        let omega_ref = c * k0;
        let m = &self.medium;
        let field_unused = |name: &str, present: bool| -> Result<(), ConfigError> {
            if present {
                invalid(format!("medium.{name} is not used by medium kind {:?}", m.kind))
            } else {
                Ok(())
            }
        };
        let medium = match m.kind {
            MediumKind::Vacuum | MediumKind::Overrides => {
                field_unused("omega_pe", m.omega_pe.is_some())?;
                field_unused("omega", m.omega.is_some())?;
                field_unused("n", m.n.is_some())?;
                RefractiveIndex::Vacuum
            }
            MediumKind::ColdPlasma => {
                field_unused("omega", m.omega.is_some())?;
                field_unused("n", m.n.is_some())?;
                let Some(wp) = m.omega_pe else {
                    return invalid("medium.omega_pe is required for cold_plasma");
                };
                RefractiveIndex::cold_plasma(wp / omega_ref).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
            MediumKind::Table => {
                field_unused("omega_pe", m.omega_pe.is_some())?;
                let (Some(omega), Some(n)) = (&m.omega, &m.n) else {
                    return invalid("medium.omega and medium.n are required for table");
                };
                let omega = omega.iter().map(|w| w / omega_ref).collect();
                RefractiveIndex::table(omega, n.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
        };
        let overrides = match &m.overrides {
            Some(o) => {
                let vp = o.vp.unwrap_or(c);
                if !(vp > 0.0 && o.r.is_finite() && o.vg_over_vp.is_finite()) {
                    return invalid("medium.overrides needs finite r, vg_over_vp and positive vp");
                }
                Some(Overrides { r: o.r, vg_over_vp: o.vg_over_vp, vp: vp / c })
            }
            None => None,
        };
        if m.kind == MediumKind::Overrides && overrides.is_none() {
            return invalid("medium kind overrides needs a [medium.overrides] table");
        }
        let mut train = TrainSpec::new(self.train.a0, k0 * w0, 1.0, medium, self.tolerances.min_k0w0)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(b) = m.branch {
            train = train.with_branch(b);
        }
        let mut cross_check = None;
        if m.kind == MediumKind::Overrides {
            train = train.with_overrides(overrides.unwrap());
        } else {
            cross_check = overrides;
        }

        for (i, &t) in self.times.iter().enumerate() {
            if !(t >= 0.0 && t.is_finite()) {
                return invalid(format!("times[{i}] = {t} must be finite and non-negative"));
            }
        }
        for (i, &r) in self.width_ratios.iter().enumerate() {
            if !(r >= 1.0 && r.is_finite()) {
                return invalid(format!("width_ratios[{i}] = {r} must be at least 1"));
            }
        }
        let mut analyses = self.analyses.clone();
        analyses.sort();
        analyses.dedup();
        let needs_times = analyses.iter().any(|a| *a != Analysis::Parametrix);
        if needs_times && self.times.is_empty() && self.width_ratios.is_empty() {
            return invalid("beam, oracle, compare, rays and wigner need an entry in times or width_ratios");
        }
        let needs_medium = analyses.iter().any(|a| matches!(a, Analysis::Oracle | Analysis::Compare));
        if needs_medium && m.kind == MediumKind::Overrides {
            return invalid("oracle and compare need a refractive index; medium kind overrides has none");
        }
        if let Some(mm) = self.grid.m {
            if mm < 2 || !mm.is_power_of_two() {
                return invalid(format!("grid.m = {mm} must be a power of two"));
            }
        }
        if !(self.grid.margin >= 0.0 && self.grid.margin.is_finite()) {
            return invalid("grid.margin must be non-negative");
        }
        let tol = &self.tolerances;
        if !(tol.ode_tol > 0.0 && tol.shell_tol > 0.0 && tol.override_tol > 0.0) {
            return invalid("tolerances must be positive");
        }
        let p = &self.parametrix;
        if !(p.levels == 1 || p.levels == 2) {
            return invalid(format!("parametrix.levels = {} must be 1 or 2", p.levels));
        }
        if p.probes == 0 || !(p.nu > 0.0) || !(p.omega_pe0 > 0.0) || !(p.t_ramp > 0.0) {
            return invalid("parametrix needs probes > 0 and positive nu, omega_pe0, t_ramp");
        }
        if !(p.omega_window[0] > 0.0 && p.omega_window[1] > p.omega_window[0] && p.t_window[1] >= p.t_window[0]) {
            return invalid("parametrix windows must be increasing with a positive frequency range");
        }
        let w = &self.wigner;
        if w.stride == 0 || w.points < 2 || !(w.window > 0.0) || w.kernel_width.is_some_and(|v| !(v > 0.0)) {
            return invalid("wigner needs stride ≥ 1, points ≥ 2, positive window and kernel_width");
        }

        let mut warnings = Vec::new();
        if let Some(msg) = train.paraxial_warning() {
            warnings.push(msg);
        }
        let scale_t = omega_ref;
        let parametrix = ParametrixConfig {
            omega_pe0: p.omega_pe0 / omega_ref,
            t_ramp: p.t_ramp * scale_t,
            nu: p.nu / omega_ref,
            omega_window: [p.omega_window[0] / omega_ref, p.omega_window[1] / omega_ref],
            t_window: [p.t_window[0] * scale_t, p.t_window[1] * scale_t],
            ..p.clone()
        };
        let wigner = WignerConfig {
            kernel_width: Some(w.kernel_width.map_or(1.6, |v| v * k0)),
            ..w.clone()
        };
        Ok(Normalized {
            kind: m.kind,
            train,
            times: self.times.iter().map(|t| t * scale_t).collect(),
            width_ratios: self.width_ratios.clone(),
            analyses,
            grid: self.grid.clone(),
            tolerances: self.tolerances.clone(),
            parametrix,
            wigner,
            cross_check,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPREADING: &str = r#"
times = [0.0, 500.0]
analyses = ["beam"]

[medium]
kind = "overrides"
overrides = { r = 0.2, vg_over_vp = 0.8 }

[train]
w0 = 20.0
k0 = 1.0
"#;

    #[test]
    fn parses_and_normalizes() {
        let s = Scenario::from_toml(SPREADING).unwrap();
        let n = s.normalize().unwrap();
        assert_eq!(n.train.w0, 20.0);
        assert_eq!(n.train.overrides.unwrap().vp, 1.0);
        assert_eq!(n.times, vec![0.0, 500.0]);
        let again = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn rescales_physical_units() {
        let s = Scenario::from_toml(
            "c = 2.0\ntimes = [1.0]\n[medium]\nkind = \"cold_plasma\"\nomega_pe = 4.0\n[train]\nw0 = 10.0\nk0 = 2.0\n",
        )
        .unwrap();
        let n = s.normalize().unwrap();
        assert_eq!(n.train.w0, 20.0);
        assert_eq!(n.times, vec![4.0]);
        assert_eq!(n.train.medium, RefractiveIndex::ColdPlasma { omega_pe: 1.0 });
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Scenario::from_toml("bogus = 1\n[medium]\nkind=\"vacuum\"\n[train]\nw0=20.0\nk0=1.0\n"), Err(ConfigError::Parse(_))));
        let missing = Scenario::from_toml("[medium]\nkind = \"cold_plasma\"\n[train]\nw0 = 20.0\nk0 = 1.0\n").unwrap();
        assert!(missing.normalize().is_err());
        let narrow = Scenario::from_toml("[medium]\nkind = \"vacuum\"\n[train]\nw0 = 2.0\nk0 = 1.0\n").unwrap();
        assert!(narrow.normalize().is_err());
        let no_times = Scenario::from_toml("analyses = [\"oracle\"]\n[medium]\nkind = \"vacuum\"\n[train]\nw0 = 20.0\nk0 = 1.0\n").unwrap();
        assert!(no_times.normalize().is_err());
    }
}
